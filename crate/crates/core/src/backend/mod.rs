//! Simulation backends and the tallying machine that drives them.
//!
//! Both backends implement [`Backend`], a contract over the `k` workspace
//! qubits: prepare, kick back, rotate, measure after a Hadamard, and reset.
//! [`Machine`] wraps a backend with a gate tally, a measurement source and a
//! transcript; the algorithms in this crate only talk to a `Machine`.

mod product;
mod statevector;

pub use product::ProductPhaseState;
pub use statevector::StateVector;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::error::{QpeError, Result};
use crate::phase::{BinaryPhase, Turns};
use crate::tally::GateTally;

/// Deterministic generator behind every sampled measurement.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QubitStatus {
    /// `|0>`, not yet prepared.
    Zero,
    /// In the equator after a Hadamard; phase operations are allowed.
    Prepared,
    /// Measured in the computational basis with this outcome.
    Measured(bool),
}

/// The unitary whose controlled powers are kicked back onto the workspace.
#[derive(Clone, Debug, PartialEq)]
pub enum PhaseOracle {
    /// `U|u> = e^{2 pi i phi}|u>` with the register held in the eigenvector.
    Eigenphase(Turns),
    /// `U|y> = |base * y mod modulus>` on a persistent modular register.
    ModularMultiplication { base: u64, modulus: u64 },
}

impl PhaseOracle {
    pub fn eigenphase(phase: impl Into<Turns>) -> Self {
        PhaseOracle::Eigenphase(phase.into())
    }

    /// Multiplier applied by `U^(2^l)`.
    pub fn multiplier_power(&self, l: u32) -> Option<u64> {
        match *self {
            PhaseOracle::ModularMultiplication { base, modulus } => {
                Some(arith::pow2_power_mod(base, l, modulus))
            }
            PhaseOracle::Eigenphase(_) => None,
        }
    }
}

pub trait Backend {
    /// Number of workspace qubits.
    fn width(&self) -> usize;

    fn status(&self, t: usize) -> QubitStatus;

    /// Hadamard on a `|0>` qubit.
    fn prepare_plus(&mut self, t: usize) -> Result<()>;

    /// Controlled-`U^(2^l)` with workspace qubit `t` as control.
    fn kickback(&mut self, t: usize, oracle: &PhaseOracle, l: u32) -> Result<()>;

    /// `diag(1, e^{-2 pi i angle})` on qubit `t`.
    fn inverse_rotation(&mut self, t: usize, angle: &BinaryPhase) -> Result<()>;

    /// Probability of reading 1 if qubit `t` were Hadamard-measured now.
    fn prob_one(&self, t: usize) -> Result<f64>;

    /// Hadamard on `t`, then project onto `bit` and renormalize.
    fn collapse(&mut self, t: usize, bit: bool) -> Result<()>;

    /// Return a measured qubit to `|0>`.
    fn reset(&mut self, t: usize) -> Result<()>;

    /// Exact phase of a prepared qubit, when the backend tracks one.
    fn phase(&self, _t: usize) -> Option<Turns> {
        None
    }
}

pub(crate) fn check_qubit(width: usize, t: usize) -> Result<()> {
    if t >= width {
        return Err(QpeError::InvalidInput(format!(
            "qubit {t} outside a workspace of {width}"
        )));
    }
    Ok(())
}

pub(crate) fn require(status: QubitStatus, want: QubitStatus, t: usize, op: &str) -> Result<()> {
    let ok = match want {
        QubitStatus::Measured(_) => matches!(status, QubitStatus::Measured(_)),
        w => status == w,
    };
    if ok {
        Ok(())
    } else {
        Err(QpeError::ContractViolation(format!(
            "{op} on qubit {t} requires {want:?}, found {status:?}"
        )))
    }
}

/// Where measurement outcomes come from.
#[derive(Clone, Debug)]
pub enum MeasurementSource {
    Sampled(SimRng),
    /// Forced outcomes, consumed in measurement order. Used to enumerate
    /// every branch of a run exactly.
    Scripted { outcomes: Vec<bool>, next: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub stage: u64,
    pub qubit: usize,
    pub bit: bool,
    /// Probability of the observed outcome given everything before it.
    pub probability: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotKind {
    /// After a stage's reset rotations, before the inverse transform.
    StageReset,
    /// After the feedback rotations inside one level of the recursion.
    QftFeedback,
}

#[derive(Clone, Debug)]
pub struct PhaseSnapshot {
    pub stage: u64,
    pub kind: SnapshotKind,
    pub qubits: Vec<usize>,
    pub phases: Vec<Option<Turns>>,
}

/// A backend with its tally, measurement source, and transcript.
pub struct Machine<B> {
    pub backend: B,
    pub tally: GateTally,
    source: MeasurementSource,
    transcript: Vec<MeasurementRecord>,
    snapshots: Option<Vec<PhaseSnapshot>>,
    stage: u64,
}

impl<B: Backend> Machine<B> {
    pub fn new(backend: B, source: MeasurementSource) -> Self {
        Machine {
            backend,
            tally: GateTally::new(),
            source,
            transcript: Vec::new(),
            snapshots: None,
            stage: 0,
        }
    }

    pub fn sampled(backend: B, seed: u64) -> Self {
        Self::new(backend, MeasurementSource::Sampled(seeded_rng(seed)))
    }

    pub fn scripted(backend: B, outcomes: Vec<bool>) -> Self {
        Self::new(backend, MeasurementSource::Scripted { outcomes, next: 0 })
    }

    /// Keep phase snapshots at stage resets and recursion feedback points.
    pub fn record_snapshots(mut self) -> Self {
        self.snapshots = Some(Vec::new());
        self
    }

    pub fn set_stage(&mut self, stage: u64) {
        self.stage = stage;
    }

    pub fn prepare_plus(&mut self, t: usize) -> Result<()> {
        self.backend.prepare_plus(t)?;
        self.tally.hadamards += 1;
        Ok(())
    }

    pub fn kickback(&mut self, t: usize, oracle: &PhaseOracle, l: u32) -> Result<()> {
        self.backend.kickback(t, oracle, l)?;
        self.tally.controlled_u += 1;
        self.tally.add_u_power(l);
        Ok(())
    }

    pub fn reset_rotation(&mut self, t: usize, angle: &BinaryPhase) -> Result<()> {
        self.backend.inverse_rotation(t, angle)?;
        self.tally.reset_rotations += 1;
        Ok(())
    }

    pub fn qft_rotation(&mut self, t: usize, angle: &BinaryPhase) -> Result<()> {
        self.backend.inverse_rotation(t, angle)?;
        self.tally.qft_rotations += 1;
        Ok(())
    }

    /// Hadamard then measure qubit `t`.
    pub fn hadamard_measure(&mut self, t: usize) -> Result<bool> {
        let p1 = self.backend.prob_one(t)?;
        let bit = match &mut self.source {
            MeasurementSource::Sampled(rng) => rng.gen::<f64>() < p1,
            MeasurementSource::Scripted { outcomes, next } => {
                let bit = *outcomes.get(*next).ok_or_else(|| {
                    QpeError::ContractViolation("measurement script exhausted".into())
                })?;
                *next += 1;
                bit
            }
        };
        let probability = if bit { p1 } else { 1.0 - p1 };
        if probability <= 0.0 {
            return Err(QpeError::ImpossibleOutcome {
                qubit: t,
                bit: bit as u8,
            });
        }
        self.backend.collapse(t, bit)?;
        self.tally.hadamards += 1;
        self.tally.qft_hadamards += 1;
        self.tally.measurements += 1;
        self.transcript.push(MeasurementRecord {
            stage: self.stage,
            qubit: t,
            bit,
            probability,
        });
        Ok(bit)
    }

    pub fn reset(&mut self, t: usize) -> Result<()> {
        self.backend.reset(t)
    }

    pub fn snapshot(&mut self, kind: SnapshotKind, qubits: &[usize]) {
        if let Some(snaps) = &mut self.snapshots {
            let phases = qubits.iter().map(|&q| self.backend.phase(q)).collect();
            snaps.push(PhaseSnapshot {
                stage: self.stage,
                kind,
                qubits: qubits.to_vec(),
                phases,
            });
        }
    }

    pub fn transcript(&self) -> &[MeasurementRecord] {
        &self.transcript
    }

    pub fn snapshots(&self) -> &[PhaseSnapshot] {
        self.snapshots.as_deref().unwrap_or(&[])
    }

    /// Product of the recorded outcome probabilities.
    pub fn transcript_probability(&self) -> f64 {
        self.transcript.iter().map(|m| m.probability).product()
    }

    pub fn into_parts(self) -> (B, GateTally, Vec<MeasurementRecord>) {
        (self.backend, self.tally, self.transcript)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ph(s: &str) -> BinaryPhase {
        s.parse().unwrap()
    }

    fn kicked<B: Backend>(mut b: B, theta0: &str, phi: &str, l: u32) -> B {
        b.prepare_plus(0).unwrap();
        b.kickback(0, &PhaseOracle::eigenphase(ph(theta0)), 0).unwrap();
        b.kickback(0, &PhaseOracle::eigenphase(ph(phi)), l).unwrap();
        b
    }

    #[test]
    fn kickback_examples_agree_across_backends() {
        let cases = [("0", "1/4", 1, "1/2"), ("1/2", "1/2", 0, "0"), ("0", "53/64", 5, "1/2")];
        for (t0, phi, l, want) in cases {
            let p = kicked(ProductPhaseState::new(1), t0, phi, l);
            assert_eq!(p.phase(0), Some(Turns::Exact(ph(want))));
            let s = kicked(StateVector::new(1, 0), t0, phi, l);
            let expected = Turns::Exact(ph(want)).prob_one();
            assert!((s.prob_one(0).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_rotation_examples() {
        for (theta, angle, want) in [("7/16", "7/16", "0"), ("0", "0", "0"), ("1/8", "3/4", "3/8")] {
            let mut p = ProductPhaseState::new(1);
            p.prepare_plus(0).unwrap();
            p.kickback(0, &PhaseOracle::eigenphase(ph(theta)), 0).unwrap();
            p.inverse_rotation(0, &ph(angle)).unwrap();
            assert_eq!(p.phase(0), Some(Turns::Exact(ph(want))));
        }
    }

    #[test]
    fn hadamard_measure_deterministic_cases() {
        for (theta, p1) in [("0", 0.0), ("1/2", 1.0), ("1/4", 0.5)] {
            let mut m = Machine::sampled(ProductPhaseState::new(1), 7);
            m.prepare_plus(0).unwrap();
            m.kickback(0, &PhaseOracle::eigenphase(ph(theta)), 0).unwrap();
            assert!((m.backend.prob_one(0).unwrap() - p1).abs() < 1e-15);
            let bit = m.hadamard_measure(0).unwrap();
            if p1 == 0.0 {
                assert!(!bit);
            }
            if p1 == 1.0 {
                assert!(bit);
            }
            assert_eq!(m.tally.hadamards, 2);
            assert_eq!(m.tally.measurements, 1);
            assert_eq!(m.tally.controlled_u, 1);
            assert_eq!(m.tally.u_applications, 1);
        }
    }

    #[test]
    fn contract_violations() {
        let mut p = ProductPhaseState::new(2);
        let oracle = PhaseOracle::eigenphase(ph("1/4"));
        assert!(matches!(p.kickback(0, &oracle, 0), Err(QpeError::ContractViolation(_))));
        assert!(matches!(p.reset(0), Err(QpeError::ContractViolation(_))));
        p.prepare_plus(0).unwrap();
        assert!(matches!(p.prepare_plus(0), Err(QpeError::ContractViolation(_))));
        assert!(matches!(p.reset(0), Err(QpeError::ContractViolation(_))));
        assert!(matches!(p.prepare_plus(5), Err(QpeError::InvalidInput(_))));

        let mut s = StateVector::new(2, 0);
        assert!(matches!(s.kickback(1, &oracle, 0), Err(QpeError::ContractViolation(_))));
        assert!(matches!(s.collapse(1, true), Err(QpeError::ContractViolation(_))));
    }

    #[test]
    fn reset_after_either_outcome() {
        for theta in ["0", "1/2"] {
            for mut b in [
                Box::new(ProductPhaseState::new(1)) as Box<dyn Backend>,
                Box::new(StateVector::new(1, 0)),
            ] {
                b.prepare_plus(0).unwrap();
                b.kickback(0, &PhaseOracle::eigenphase(ph(theta)), 0).unwrap();
                let bit = b.prob_one(0).unwrap() > 0.5;
                b.collapse(0, bit).unwrap();
                assert_eq!(b.status(0), QubitStatus::Measured(bit));
                b.reset(0).unwrap();
                assert_eq!(b.status(0), QubitStatus::Zero);
                b.prepare_plus(0).unwrap();
                assert!((b.prob_one(0).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn product_backend_refuses_modular_oracle() {
        let mut p = ProductPhaseState::new(1);
        p.prepare_plus(0).unwrap();
        let oracle = PhaseOracle::ModularMultiplication { base: 7, modulus: 15 };
        assert!(matches!(p.kickback(0, &oracle, 0), Err(QpeError::Configuration(_))));
    }

    #[test]
    fn scripted_zero_probability_branch_is_reported() {
        let mut m = Machine::scripted(ProductPhaseState::new(1), vec![true]);
        m.prepare_plus(0).unwrap();
        assert!(matches!(
            m.hadamard_measure(0),
            Err(QpeError::ImpossibleOutcome { qubit: 0, bit: 1 })
        ));
    }

    #[test]
    fn empirical_frequency_matches_sin_squared() {
        let samples = 100_000;
        for theta in ["1/8", "1/4", "3/8", "5/16"] {
            let t = Turns::Exact(ph(theta));
            let p = t.prob_one();
            let mut m = Machine::sampled(ProductPhaseState::new(1), 11);
            let mut ones = 0usize;
            for _ in 0..samples {
                m.prepare_plus(0).unwrap();
                m.kickback(0, &PhaseOracle::Eigenphase(t.clone()), 0).unwrap();
                ones += m.hadamard_measure(0).unwrap() as usize;
                m.reset(0).unwrap();
            }
            let freq = ones as f64 / samples as f64;
            let se = (p * (1.0 - p) / samples as f64).sqrt();
            assert!((freq - p).abs() <= 3.0 * se, "theta {theta}: {freq} vs {p}");
        }
    }
}
