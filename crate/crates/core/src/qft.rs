//! Recursive semiclassical inverse QFT.
//!
//! The lower-significance half of the block is transformed and measured
//! first; its bits then drive single-qubit inverse rotations on the
//! remaining qubits in place of controlled rotations, and the recursion
//! continues on the upper half.

use crate::backend::{Backend, Machine, SnapshotKind};
use crate::error::{QpeError, Result};
use crate::phase::{fraction_from_bits, BitString};
use crate::tally::GateTally;

/// Measures `qubits` (most significant first) through the recursive inverse
/// transform and returns their bits in the same order.
///
/// Each qubit `j` is expected to hold `0.phi_j ... phi_m`. A block of `m`
/// splits into its last `ceil(m/2)` qubits, transformed first, and its first
/// `floor(m/2)`, which receive the feedback rotations.
pub fn rf_dagger<B: Backend>(machine: &mut Machine<B>, qubits: &[usize]) -> Result<BitString> {
    if qubits.is_empty() {
        return Err(QpeError::InvalidInput("empty qubit range".into()));
    }
    if let [q] = qubits {
        let bit = machine.hadamard_measure(*q)?;
        return Ok(BitString::new(vec![bit]));
    }
    let rest = qubits.len() / 2;
    let (head, tail) = qubits.split_at(rest);
    let tail_bits = rf_dagger(machine, tail)?;
    let f = fraction_from_bits(&tail_bits)?;
    // qubit j (1-based) of the head carries the tail shifted right by rest - j + 1
    for (j, &q) in head.iter().enumerate() {
        let shift = (rest - j) as u32;
        machine.qft_rotation(q, &f.div_pow2(shift))?;
    }
    machine.snapshot(SnapshotKind::QftFeedback, head);
    let head_bits = rf_dagger(machine, head)?;
    Ok(head_bits.concat(&tail_bits))
}

/// `T_m` for a power of two: `m + (m/2) log2 m`.
pub fn closed_form_t(m: u64) -> Result<u64> {
    if m == 0 || !m.is_power_of_two() {
        return Err(QpeError::InvalidInput(format!(
            "{m} is not a power of two; use recurrence_t"
        )));
    }
    Ok(m + (m / 2) * m.trailing_zeros() as u64)
}

/// `T_m = T_ceil(m/2) + T_floor(m/2) + floor(m/2)`, `T_1 = 1`, for any `m >= 1`.
pub fn recurrence_t(m: u64) -> u64 {
    match m {
        0 => 0,
        1 => 1,
        _ => {
            let lo = m / 2;
            recurrence_t(m - lo) + recurrence_t(lo) + lo
        }
    }
}

/// Static counts for the textbook inverse QFT on `n` qubits.
pub fn conventional_counts(n: u64) -> GateTally {
    GateTally {
        hadamards: n,
        qft_hadamards: n,
        qft_rotations: n * n.saturating_sub(1) / 2,
        measurements: n,
        ..GateTally::default()
    }
}
