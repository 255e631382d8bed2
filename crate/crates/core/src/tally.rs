use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

/// Gate and measurement counters for one run.
///
/// `hadamards` counts every Hadamard (preparation and read-out);
/// `qft_hadamards` counts only the read-out Hadamards performed inside the
/// recursive inverse transform, which is what the base case `T_1 = 1`
/// charges.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateTally {
    pub hadamards: u64,
    pub qft_hadamards: u64,
    pub qft_rotations: u64,
    pub reset_rotations: u64,
    pub controlled_u: u64,
    /// Total powers of `U` applied; saturates at `u128::MAX`.
    pub u_applications: u128,
    pub measurements: u64,
    /// `K = diag(1, i)` gates used by the sine-type Hadamard test.
    pub phase_gates: u64,
    pub stages: u64,
}

impl GateTally {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rotation-gate invocations in the recursion's own accounting:
    /// read-out Hadamards plus feedback rotations plus stage resets.
    pub fn paper_t(&self) -> u64 {
        self.qft_hadamards + self.qft_rotations + self.reset_rotations
    }

    pub(crate) fn add_u_power(&mut self, l: u32) {
        let power = if l >= 128 { u128::MAX } else { 1u128 << l };
        self.u_applications = self.u_applications.saturating_add(power);
    }
}

impl AddAssign<&GateTally> for GateTally {
    fn add_assign(&mut self, rhs: &GateTally) {
        self.hadamards += rhs.hadamards;
        self.qft_hadamards += rhs.qft_hadamards;
        self.qft_rotations += rhs.qft_rotations;
        self.reset_rotations += rhs.reset_rotations;
        self.controlled_u += rhs.controlled_u;
        self.u_applications = self.u_applications.saturating_add(rhs.u_applications);
        self.measurements += rhs.measurements;
        self.phase_gates += rhs.phase_gates;
        self.stages += rhs.stages;
    }
}
