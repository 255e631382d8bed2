//! Kitaev-style estimation from repeated Hadamard tests.
//!
//! For each `l` the phase `phi_l = 2^(l-1) phi` is estimated from a cosine
//! test (`K = I`) and a sine test (`K = diag(1, i)`), and the bits are then
//! assembled from `l = n` down to `1`.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backend::SimRng;
use crate::error::{QpeError, Result};
use crate::phase::{BinaryPhase, BitString, Turns};
use crate::tally::GateTally;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HadamardTestConfig {
    /// Bit index; the test sees `U^(2^(l-1))`.
    pub l: u32,
    pub use_k: bool,
    pub trials: u64,
}

/// How the per-bit trial budget `M` is spent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialBudget {
    /// `M` cosine tests and `M` sine tests.
    #[default]
    PerType,
    /// `ceil(M/2)` cosine and `floor(M/2)` sine tests.
    Shared,
}

/// `phi_l = 2^(l-1) phi mod 1`.
pub fn phi_l(phi: &Turns, l: u32) -> Turns {
    phi.mul_pow2(l.saturating_sub(1))
}

/// Probability of reading 1 in one Hadamard test.
///
/// Cosine test: `Pr(1) = (1 - cos 2 pi phi_l) / 2`.
/// Sine test: `Pr(1) = (1 + sin 2 pi phi_l) / 2`.
pub fn test_prob_one(phi_l: &Turns, use_k: bool) -> f64 {
    let angle = TAU * phi_l.to_f64();
    let p = if use_k {
        (1.0 + angle.sin()) / 2.0
    } else {
        (1.0 - angle.cos()) / 2.0
    };
    p.clamp(0.0, 1.0)
}

/// `cfg.trials` independent Hadamard tests on `phi_l`.
pub fn hadamard_test(
    phi: &Turns,
    cfg: &HadamardTestConfig,
    rng: &mut SimRng,
    tally: &mut GateTally,
) -> Result<Vec<bool>> {
    if cfg.trials == 0 {
        return Err(QpeError::InvalidInput("at least one trial required".into()));
    }
    if cfg.l == 0 {
        return Err(QpeError::InvalidInput("bit index l starts at 1".into()));
    }
    let p1 = test_prob_one(&phi_l(phi, cfg.l), cfg.use_k);
    let samples = (0..cfg.trials).map(|_| rng.gen::<f64>() < p1).collect();

    let m = cfg.trials;
    tally.hadamards += 2 * m;
    tally.controlled_u += m;
    tally.measurements += m;
    if cfg.use_k {
        tally.phase_gates += m;
    }
    let power = if cfg.l > 128 { u128::MAX } else { 1u128 << (cfg.l - 1) };
    tally.u_applications = tally
        .u_applications
        .saturating_add(power.saturating_mul(m as u128));
    Ok(samples)
}

/// `atan2(S, C) / 2 pi mod 1` with `C = 2 Pr(0 | cos) - 1` and
/// `S = 2 Pr(1 | sin) - 1`.
pub fn estimate_from_probabilities(p0_cos: f64, p1_sin: f64) -> Result<f64> {
    let c = 2.0 * p0_cos - 1.0;
    let s = 2.0 * p1_sin - 1.0;
    if c == 0.0 && s == 0.0 {
        return Err(QpeError::DegenerateEstimate);
    }
    let turns = (s.atan2(c) / TAU).rem_euclid(1.0);
    Ok(if turns >= 1.0 { 0.0 } else { turns })
}

fn frequency(samples: &[bool], value: bool) -> f64 {
    samples.iter().filter(|&&b| b == value).count() as f64 / samples.len() as f64
}

/// Estimate of `phi_l` from `trials` cosine and `trials` sine tests.
pub fn estimate_phi_l(
    phi: &Turns,
    l: u32,
    trials: u64,
    rng: &mut SimRng,
    tally: &mut GateTally,
) -> Result<f64> {
    estimate_with_counts(phi, l, trials, trials, rng, tally)
}

fn estimate_with_counts(
    phi: &Turns,
    l: u32,
    cos_trials: u64,
    sin_trials: u64,
    rng: &mut SimRng,
    tally: &mut GateTally,
) -> Result<f64> {
    let cos = hadamard_test(phi, &HadamardTestConfig { l, use_k: false, trials: cos_trials }, rng, tally)?;
    let sin = hadamard_test(phi, &HadamardTestConfig { l, use_k: true, trials: sin_trials }, rng, tally)?;
    estimate_from_probabilities(frequency(&cos, false), frequency(&sin, true))
}

/// `ceil(55 ln n)` trials per `phi_l`.
pub fn kitaev_trials(n: u64) -> Result<u64> {
    if n < 2 {
        return Err(QpeError::InvalidInput(format!("kitaev_trials needs n >= 2, got {n}")));
    }
    Ok((55.0 * (n as f64).ln()).ceil() as u64)
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Assembles `n` bits from estimates of `phi_1 .. phi_n` (index 0 is `l = 1`).
///
/// Working from `l = n` down, bit `b_l` is the choice that puts
/// `b_l / 2 + tail / 2` within 1/8 of `estimates[l]`, where `tail` is the
/// value already assembled from the lower bits.
pub fn reconstruct_bits(estimates: &[f64]) -> Result<BitString> {
    if estimates.is_empty() {
        return Err(QpeError::InvalidInput("no estimates".into()));
    }
    let half = BinaryPhase::from_u64(1, 1)?;
    let mut tail = BinaryPhase::zero();
    let mut bits = vec![false; estimates.len()];
    for l in (1..=estimates.len()).rev() {
        let shifted = tail.div_pow2(1);
        let with_one = shifted.add(&half);
        let d0 = circular_distance(shifted.to_f64(), estimates[l - 1]);
        let d1 = circular_distance(with_one.to_f64(), estimates[l - 1]);
        let (bit, d) = if d1 < d0 { (true, d1) } else { (false, d0) };
        if d > 0.125 {
            return Err(QpeError::ReconstructionFailure { l });
        }
        bits[l - 1] = bit;
        tail = if bit { with_one } else { shifted };
    }
    Ok(BitString::new(bits))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KitaevReport {
    pub bits: BitString,
    /// Estimates of `phi_1 .. phi_n`.
    pub estimates: Vec<f64>,
    pub tally: GateTally,
    pub cos_trials: u64,
    pub sin_trials: u64,
}

/// Full estimate of `n` bits with `trials` per bit under `budget`.
pub fn run_kitaev(
    phi: &Turns,
    n: usize,
    trials: u64,
    budget: TrialBudget,
    rng: &mut SimRng,
) -> Result<KitaevReport> {
    if n == 0 {
        return Err(QpeError::InvalidInput("n must be at least 1".into()));
    }
    let (cos_trials, sin_trials) = match budget {
        TrialBudget::PerType => (trials, trials),
        TrialBudget::Shared => (trials.div_ceil(2), (trials / 2).max(1)),
    };
    let mut tally = GateTally::new();
    let mut estimates = vec![0.0; n];
    for l in (1..=n).rev() {
        estimates[l - 1] = estimate_with_counts(phi, l as u32, cos_trials, sin_trials, rng, &mut tally)?;
    }
    let bits = reconstruct_bits(&estimates)?;
    Ok(KitaevReport {
        bits,
        estimates,
        tally,
        cos_trials,
        sin_trials,
    })
}

/// Hadamard-test invocations for an `n`-bit estimate counting
/// `ceil(55 ln n)` tests per bit.
pub fn kitaev_tests_per_bit_budget(n: u64) -> Result<u64> {
    Ok(n * kitaev_trials(n)?)
}

/// The same with the budget spent once on each test type.
pub fn kitaev_tests_per_type_budget(n: u64) -> Result<u64> {
    Ok(2 * n * kitaev_trials(n)?)
}
