//! Phase estimation of `n` bits on a `k`-qubit workspace, one block of bits
//! per stage, least significant block first.
//!
//! Stage `j` kicks back `U^(2^l)` onto each workspace qubit, cancels the
//! already-known low bits with inverse rotations by `F[j-1] / 2^(k-t+1)`,
//! runs the recursive inverse transform, and folds the measured block into
//! the accumulator.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::arith;
use crate::backend::{
    Backend, Machine, MeasurementRecord, MeasurementSource, PhaseOracle, ProductPhaseState,
    SnapshotKind, StateVector,
};
use crate::error::{QpeError, Result};
use crate::phase::{BinaryPhase, BitString, ClassicalAccumulator};
use crate::qft::{closed_form_t, recurrence_t, rf_dagger};
use crate::tally::GateTally;

/// Largest total qubit count the statevector backend will allocate.
pub const STATEVECTOR_QUBIT_BUDGET: usize = 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Product,
    Statevector,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StagedConfig {
    pub n: usize,
    pub k: usize,
    pub backend: BackendKind,
    pub seed: u64,
    /// Skip the stage-1 resets, whose angles are all zero.
    pub paper_cost_mode: bool,
}

impl StagedConfig {
    pub fn new(n: usize, k: usize) -> Self {
        StagedConfig {
            n,
            k,
            backend: BackendKind::Product,
            seed: 0,
            paper_cost_mode: true,
        }
    }

    pub fn with_backend(mut self, backend: BackendKind) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(QpeError::InvalidInput("n and k must be at least 1".into()));
        }
        Ok(())
    }

    /// Workspace size actually used: `k` clamped to `n`.
    pub fn width(&self) -> usize {
        self.k.min(self.n)
    }

    pub fn stage_count(&self) -> usize {
        stage_count(self.n, self.k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub bits: BitString,
    pub f_trace: Vec<BinaryPhase>,
    pub tally: GateTally,
    pub stage_count: usize,
    pub seed: u64,
    pub transcript: Vec<MeasurementRecord>,
}

impl EstimateReport {
    /// The estimate `0.c_1 .. c_n`.
    pub fn phase(&self) -> BinaryPhase {
        crate::phase::fraction_from_bits(&self.bits).unwrap_or_else(|_| BinaryPhase::zero())
    }

    /// Every measurement outcome had probability one.
    pub fn deterministic(&self) -> bool {
        self.transcript.iter().all(|m| m.probability == 1.0)
    }
}

pub fn stage_count(n: usize, k: usize) -> usize {
    n.div_ceil(k)
}

/// Qubits used at stage `j`: `k` except for a short final stage.
pub fn block_size(j: usize, n: usize, k: usize) -> usize {
    k.min(n - (j - 1) * k)
}

/// Powers `l_t` for `t = 1..=k'` at stage `j`: `n - (j-1)k - k' + t - 1`.
pub fn stage_exponents(j: usize, n: usize, k: usize) -> Result<Vec<u32>> {
    if k == 0 || j == 0 || j > stage_count(n, k) {
        return Err(QpeError::InvalidInput(format!(
            "stage {j} outside 1..={} for n={n}, k={k}",
            if k == 0 { 0 } else { stage_count(n, k) }
        )));
    }
    let kb = block_size(j, n, k);
    let top = n - (j - 1) * k;
    Ok((0..kb).map(|t| (top - kb + t) as u32).collect())
}

/// `[F / 2^(kb - t + 1) for t = 1..=kb]`.
pub fn reset_angles(previous: &BinaryPhase, block: usize) -> Vec<BinaryPhase> {
    (1..=block)
        .map(|t| previous.div_pow2((block - t + 1) as u32))
        .collect()
}

/// Runs every stage on `machine`, whose workspace must have at least
/// `min(k, n)` qubits. Returns the bits and `F[0..=stages]`.
pub fn execute_stages<B: Backend>(
    machine: &mut Machine<B>,
    oracle: &PhaseOracle,
    n: usize,
    k: usize,
    paper_cost_mode: bool,
) -> Result<(BitString, Vec<BinaryPhase>)> {
    if n == 0 || k == 0 {
        return Err(QpeError::InvalidInput("n and k must be at least 1".into()));
    }
    let k = k.min(n);
    if machine.backend.width() < k {
        return Err(QpeError::Configuration(format!(
            "workspace has {} qubits, {k} needed",
            machine.backend.width()
        )));
    }
    let mut acc = ClassicalAccumulator::new();
    let mut bits = BitString::default();
    for j in 1..=stage_count(n, k) {
        machine.set_stage(j as u64);
        machine.tally.stages += 1;
        let exponents = stage_exponents(j, n, k)?;
        let qubits: Vec<usize> = (0..exponents.len()).collect();
        for (&q, &l) in qubits.iter().zip(&exponents) {
            machine.prepare_plus(q)?;
            machine.kickback(q, oracle, l)?;
        }
        if j > 1 || !paper_cost_mode {
            for (&q, angle) in qubits.iter().zip(reset_angles(acc.current(), qubits.len())) {
                machine.reset_rotation(q, &angle)?;
            }
        }
        machine.snapshot(SnapshotKind::StageReset, &qubits);
        let block = rf_dagger(machine, &qubits)?;
        acc.push_stage(&block)?;
        for &q in &qubits {
            machine.reset(q)?;
        }
        bits = block.concat(&bits);
    }
    Ok((bits, acc.into_history()))
}

fn backend_for(oracle: &PhaseOracle, config: &StagedConfig) -> Result<StateVector> {
    let width = config.width();
    match oracle {
        PhaseOracle::Eigenphase(_) => {
            if width > STATEVECTOR_QUBIT_BUDGET {
                return Err(QpeError::Resource {
                    required: width,
                    budget: STATEVECTOR_QUBIT_BUDGET,
                });
            }
            Ok(StateVector::new(width, 0))
        }
        PhaseOracle::ModularMultiplication { base, modulus } => {
            let g = arith::gcd(*base, *modulus);
            if g != 1 {
                return Err(QpeError::NonInvertible {
                    multiplier: *base,
                    modulus: *modulus,
                    gcd: g,
                });
            }
            let register = arith::register_bits(*modulus) as usize;
            if width + register > STATEVECTOR_QUBIT_BUDGET {
                return Err(QpeError::Resource {
                    required: width + register,
                    budget: STATEVECTOR_QUBIT_BUDGET,
                });
            }
            StateVector::with_register_value(width, register, 1)
        }
    }
}

fn finish<B: Backend>(
    machine: Machine<B>,
    bits: BitString,
    f_trace: Vec<BinaryPhase>,
    config: &StagedConfig,
) -> EstimateReport {
    let (_, tally, transcript) = machine.into_parts();
    EstimateReport {
        bits,
        f_trace,
        tally,
        stage_count: config.stage_count(),
        seed: config.seed,
        transcript,
    }
}

fn run_with_source(
    oracle: &PhaseOracle,
    config: &StagedConfig,
    source: MeasurementSource,
) -> Result<EstimateReport> {
    config.validate()?;
    match config.backend {
        BackendKind::Product => {
            if !matches!(oracle, PhaseOracle::Eigenphase(_)) {
                return Err(QpeError::Configuration(
                    "the product backend only supports eigenphase oracles".into(),
                ));
            }
            let mut machine = Machine::new(ProductPhaseState::new(config.width()), source);
            let (bits, trace) =
                execute_stages(&mut machine, oracle, config.n, config.k, config.paper_cost_mode)?;
            Ok(finish(machine, bits, trace, config))
        }
        BackendKind::Statevector => {
            let mut machine = Machine::new(backend_for(oracle, config)?, source);
            let (bits, trace) =
                execute_stages(&mut machine, oracle, config.n, config.k, config.paper_cost_mode)?;
            Ok(finish(machine, bits, trace, config))
        }
    }
}

/// Full staged estimate with measurements sampled from `config.seed`.
pub fn run_staged(oracle: &PhaseOracle, config: &StagedConfig) -> Result<EstimateReport> {
    run_with_source(
        oracle,
        config,
        MeasurementSource::Sampled(crate::backend::seeded_rng(config.seed)),
    )
}

/// Exact distribution of the `n` output bits, by running every measurement
/// branch with forced outcomes and multiplying conditional probabilities.
/// Cost is `2^n` runs.
pub fn outcome_distribution(
    oracle: &PhaseOracle,
    config: &StagedConfig,
) -> Result<BTreeMap<BitString, f64>> {
    config.validate()?;
    if config.n > 20 {
        return Err(QpeError::InvalidInput(format!(
            "branch enumeration over 2^{} outcomes refused",
            config.n
        )));
    }
    let mut dist = BTreeMap::new();
    for script in 0..(1u64 << config.n) {
        let outcomes = (0..config.n).map(|i| (script >> i) & 1 == 1).collect();
        let source = MeasurementSource::Scripted { outcomes, next: 0 };
        match run_with_source(oracle, config, source) {
            Ok(report) => {
                let p: f64 = report.transcript.iter().map(|m| m.probability).product();
                *dist.entry(report.bits).or_insert(0.0) += p;
            }
            Err(QpeError::ImpossibleOutcome { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(dist)
}

/// Predicted rotation-gate invocations for a staged run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagedCost {
    pub n: u64,
    pub k: u64,
    pub stages: u64,
    /// `T_k1 + sum over later stages of (k_j + T_kj)`, with `T` from the
    /// recursion; equals `T_k + (stages - 1)(k + T_k)` for full stages.
    pub exact: u64,
    /// Reset rotations included in `exact`.
    pub reset_rotations: u64,
    /// `k log2 k + (stages - 1)(k + k log2 k)`.
    pub paper_approx: f64,
    /// Whether `exact` came from the closed form of `T_k`.
    pub closed_form: bool,
}

pub fn staged_cost(n: u64, k: u64) -> Result<StagedCost> {
    if n == 0 || k == 0 {
        return Err(QpeError::InvalidInput("n and k must be at least 1".into()));
    }
    let k = k.min(n);
    let stages = n.div_ceil(k);
    let closed_form = k.is_power_of_two() && n % k == 0;
    let (exact, reset_rotations) = if closed_form {
        let tk = closed_form_t(k)?;
        (tk + (stages - 1) * (k + tk), (stages - 1) * k)
    } else {
        // stages run least significant block first; only the last may be short
        let mut total = 0;
        let mut resets = 0;
        for j in 1..=stages {
            let kb = k.min(n - (j - 1) * k);
            total += recurrence_t(kb);
            if j > 1 {
                total += kb;
                resets += kb;
            }
        }
        (total, resets)
    };
    let klogk = k as f64 * (k as f64).log2();
    let paper_approx = klogk + (stages - 1) as f64 * (k as f64 + klogk);
    Ok(StagedCost {
        n,
        k,
        stages,
        exact,
        reset_rotations,
        paper_approx,
        closed_form,
    })
}
