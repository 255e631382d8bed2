//! Order finding and factoring on top of the staged estimator.
//!
//! The modular register starts in `|1>` and persists across all stages; the
//! measured phase approximates `s/r` for an effectively random `s`. The
//! order is recovered either from continued-fraction convergents of one
//! phase, or from a common denominator of several phases found by
//! exhaustive search over `r <= N`.

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::backend::PhaseOracle;
use crate::error::{QpeError, Result};
use crate::phase::BinaryPhase;
use crate::staged::{run_staged, staged_cost, BackendKind, EstimateReport, StagedConfig, STATEVECTOR_QUBIT_BUDGET};
use crate::tally::GateTally;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorInstance {
    pub modulus: u64,
    pub base: u64,
    /// `ceil(log2 N)`.
    pub bits: u32,
}

impl FactorInstance {
    /// Requires `1 < base < modulus` and `gcd(base, modulus) = 1`.
    pub fn new(modulus: u64, base: u64) -> Result<Self> {
        if modulus < 3 || base <= 1 || base >= modulus {
            return Err(QpeError::InvalidInput(format!(
                "need 1 < x < N, got x = {base}, N = {modulus}"
            )));
        }
        let g = arith::gcd(base, modulus);
        if g != 1 {
            return Err(QpeError::NonInvertible {
                multiplier: base,
                modulus,
                gcd: g,
            });
        }
        Ok(FactorInstance {
            modulus,
            base,
            bits: arith::register_bits(modulus),
        })
    }

    pub fn oracle(&self) -> PhaseOracle {
        PhaseOracle::ModularMultiplication {
            base: self.base,
            modulus: self.modulus,
        }
    }
}

/// Checks that `n` is something the factoring pipeline should accept:
/// odd and composite.
pub fn check_factorable(n: u64) -> Result<()> {
    if n < 4 {
        return Err(QpeError::InvalidInput(format!("{n} is too small to factor")));
    }
    if n % 2 == 0 {
        return Err(QpeError::InvalidInput(format!("{n} is even; 2 is a factor")));
    }
    if arith::is_prime(n) {
        return Err(QpeError::InvalidInput(format!("{n} is prime")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryMode {
    ContinuedFractions,
    Diophantine,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub mode: RecoveryMode,
    pub epsilon: f64,
    /// Phases pooled for simultaneous approximation.
    pub d: usize,
}

fn ceil_guarded(x: f64) -> u64 {
    (x - 1e-9).ceil().max(0.0) as u64
}

/// `ceil(1 / (1 - 1/(1+eps))) = ceil((1+eps)/eps)`.
pub fn dimension_for(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(QpeError::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(ceil_guarded((1.0 + epsilon) / epsilon) as usize)
}

impl RecoveryConfig {
    pub fn continued_fractions() -> Self {
        RecoveryConfig {
            mode: RecoveryMode::ContinuedFractions,
            epsilon: 0.2,
            d: 1,
        }
    }

    pub fn diophantine(epsilon: f64) -> Result<Self> {
        Ok(RecoveryConfig {
            mode: RecoveryMode::Diophantine,
            epsilon,
            d: dimension_for(epsilon)?,
        })
    }

    /// Bits to estimate for an `bits`-bit modulus: `2L + 1`, or `ceil(L(1+eps))`.
    pub fn precision(&self, bits: u32) -> usize {
        match self.mode {
            RecoveryMode::ContinuedFractions => 2 * bits as usize + 1,
            RecoveryMode::Diophantine => ceil_guarded(bits as f64 * (1.0 + self.epsilon)) as usize,
        }
    }
}

/// `x^(2^l) mod N` for each `l`.
pub fn multiplier_powers(x: u64, n: u64, exponents: &[u32]) -> Result<Vec<u64>> {
    let g = arith::gcd(x, n);
    if g != 1 {
        return Err(QpeError::NonInvertible {
            multiplier: x,
            modulus: n,
            gcd: g,
        });
    }
    Ok(exponents.iter().map(|&l| arith::pow2_power_mod(x, l, n)).collect())
}

/// One staged estimate of `s/r` on a `k`-qubit workspace plus the modular register.
pub fn run_order_finding(inst: &FactorInstance, k: usize, n: usize, seed: u64) -> Result<EstimateReport> {
    let width = k.min(n);
    let required = width + inst.bits as usize;
    if required > STATEVECTOR_QUBIT_BUDGET {
        return Err(QpeError::Resource {
            required,
            budget: STATEVECTOR_QUBIT_BUDGET,
        });
    }
    let config = StagedConfig::new(n, k)
        .with_backend(BackendKind::Statevector)
        .with_seed(seed);
    run_staged(&inst.oracle(), &config)
}

/// Convergents `(p, q)` of `v / 2^prec` with `q <= max_denominator`.
pub fn convergents(phi: &BinaryPhase, max_denominator: u64) -> Vec<(u64, u64)> {
    let mut num = phi.numerator().clone();
    let mut den = BigUint::from(1u8) << phi.precision_bits() as usize;
    let (mut h0, mut h1) = (0u128, 1u128);
    let (mut k0, mut k1) = (1u128, 0u128);
    let mut out = Vec::new();
    loop {
        let a = &num / &den;
        let Some(a) = a.to_u128().filter(|&a| a <= max_denominator as u128 + 1) else {
            break;
        };
        let h = a * h1 + h0;
        let k = a * k1 + k0;
        if k > max_denominator as u128 {
            break;
        }
        out.push((h as u64, k as u64));
        (h0, h1, k0, k1) = (h1, h, k1, k);
        let rem = &num - &den * BigUint::from(a);
        if rem.is_zero() {
            break;
        }
        num = std::mem::replace(&mut den, rem);
    }
    out
}

/// `|s/q - phi| <= 1/(2 q^2)`, exactly.
pub fn within_legendre_bound(phi: &BinaryPhase, s: u64, q: u64) -> bool {
    let scale = BigInt::from(1u8) << phi.precision_bits() as usize;
    let v = BigInt::from(phi.numerator().clone());
    let diff = (BigInt::from(s) * &scale - v * BigInt::from(q)).magnitude().clone();
    BigUint::from(2 * q as u128) * diff <= *scale.magnitude()
}

/// The convergent with the largest denominator `q <= N` that satisfies the
/// `1/(2q^2)` bound. `None` when that convergent is `0/1` or `1/1`, or none
/// qualifies.
pub fn continued_fraction_recover(phi: &BinaryPhase, n: u64) -> Option<(u64, u64)> {
    if phi.is_zero() {
        return None;
    }
    convergents(phi, n)
        .into_iter()
        .rev()
        .find(|&(s, q)| within_legendre_bound(phi, s, q))
        .filter(|&(s, q)| s != 0 && s != q)
}

/// Smallest `r <= N` such that every phase lies within `2^-p` of a multiple
/// of `1/r`, where `p` is the largest precision among `phis`.
pub fn diophantine_recover(phis: &[BinaryPhase], n: u64) -> Result<Option<u64>> {
    if phis.len() < 2 {
        return Err(QpeError::InvalidInput(format!(
            "simultaneous approximation needs at least 2 phases, got {}",
            phis.len()
        )));
    }
    if phis.iter().all(BinaryPhase::is_zero) {
        return Ok(None);
    }
    let p = phis.iter().map(BinaryPhase::precision_bits).max().unwrap_or(0);
    let modulus = BigUint::from(1u8) << p as usize;
    let scaled: Vec<BigUint> = phis
        .iter()
        .map(|ph| ph.numerator() << (p - ph.precision_bits()) as usize)
        .collect();
    for r in 1..=n {
        let rb = BigUint::from(r);
        let fits = scaled.iter().all(|v| {
            let rem = (v * &rb) % &modulus;
            let dist = std::cmp::min(rem.clone(), &modulus - &rem);
            dist <= rb
        });
        if fits {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

/// Smallest multiple of `q` up to `N` that is an exponent annihilating `x`.
/// Since the true order is a multiple of any reduced denominator, this is
/// the order itself when `q` divides it.
pub fn order_from_denominator(x: u64, q: u64, n: u64) -> Option<u64> {
    if q == 0 {
        return None;
    }
    (1..=n / q)
        .map(|m| m * q)
        .find(|&r| arith::pow_mod(x, r, n) == 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// Every measured phase was zero.
    ZeroPhase,
    /// No convergent or common denominator qualified.
    NoCandidate,
    /// The candidate denominator does not lead to the order.
    OrderNotFound,
    OddOrder,
    /// `x^(r/2) = -1 (mod N)`.
    TrivialRoot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FactorOutcome {
    Factors { p: u64, q: u64 },
    Failure { reason: FailureReason },
}

impl FactorOutcome {
    pub fn factors(&self) -> Option<(u64, u64)> {
        match *self {
            FactorOutcome::Factors { p, q } => Some((p, q)),
            FactorOutcome::Failure { .. } => None,
        }
    }
}

/// Factors from a verified order via `gcd(x^(r/2) +- 1, N)`.
pub fn factor_from_order(x: u64, r: u64, n: u64) -> Result<FactorOutcome> {
    if arith::multiplicative_order(x, n) != Some(r) {
        return Err(QpeError::ContractViolation(format!(
            "{r} is not the multiplicative order of {x} mod {n}"
        )));
    }
    if r % 2 == 1 {
        return Ok(FactorOutcome::Failure { reason: FailureReason::OddOrder });
    }
    let y = arith::pow_mod(x, r / 2, n);
    if y == n - 1 {
        return Ok(FactorOutcome::Failure { reason: FailureReason::TrivialRoot });
    }
    let a = arith::gcd(y - 1, n);
    let b = arith::gcd(y + 1, n);
    Ok(FactorOutcome::Factors { p: a.min(b), q: a.max(b) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShorConfig {
    pub k: usize,
    pub recovery: RecoveryConfig,
    pub seed: u64,
    /// Runs to try when every measured phase is zero.
    pub max_attempts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShorReport {
    pub instance: FactorInstance,
    pub n: usize,
    pub k: usize,
    pub mode: RecoveryMode,
    pub attempts: usize,
    /// Phases measured in the final attempt.
    pub phases: Vec<BinaryPhase>,
    pub candidate: Option<u64>,
    pub order: Option<u64>,
    pub outcome: FactorOutcome,
    /// Summed over every run of every attempt.
    pub tally: GateTally,
    /// Tally of a single staged run.
    pub run_tally: GateTally,
}

/// Order finding and factor extraction for one instance.
pub fn shor(inst: &FactorInstance, config: &ShorConfig) -> Result<ShorReport> {
    let n = config.recovery.precision(inst.bits);
    let runs_per_attempt = match config.recovery.mode {
        RecoveryMode::ContinuedFractions => 1,
        RecoveryMode::Diophantine => config.recovery.d.max(2),
    };
    let mut tally = GateTally::new();
    let mut run_tally = GateTally::new();
    let mut attempts = 0;
    let mut phases = Vec::new();
    while attempts < config.max_attempts.max(1) {
        phases.clear();
        for run in 0..runs_per_attempt {
            let seed = config
                .seed
                .wrapping_add((attempts * runs_per_attempt + run) as u64);
            let report = run_order_finding(inst, config.k, n, seed)?;
            tally += &report.tally;
            run_tally = report.tally.clone();
            phases.push(report.phase());
        }
        attempts += 1;
        if phases.iter().any(|p| !p.is_zero()) {
            break;
        }
    }
    let finish = |candidate, order, outcome| ShorReport {
        instance: *inst,
        n,
        k: config.k,
        mode: config.recovery.mode,
        attempts,
        phases: phases.clone(),
        candidate,
        order,
        outcome,
        tally: tally.clone(),
        run_tally: run_tally.clone(),
    };
    let fail = |reason| FactorOutcome::Failure { reason };
    if phases.iter().all(BinaryPhase::is_zero) {
        return Ok(finish(None, None, fail(FailureReason::ZeroPhase)));
    }
    let candidate = match config.recovery.mode {
        RecoveryMode::ContinuedFractions => {
            continued_fraction_recover(&phases[0], inst.modulus).map(|(_, q)| q)
        }
        RecoveryMode::Diophantine => diophantine_recover(&phases, inst.modulus)?,
    };
    let Some(q) = candidate else {
        return Ok(finish(None, None, fail(FailureReason::NoCandidate)));
    };
    let Some(r) = order_from_denominator(inst.base, q, inst.modulus) else {
        return Ok(finish(Some(q), None, fail(FailureReason::OrderNotFound)));
    };
    let outcome = factor_from_order(inst.base, r, inst.modulus)?;
    Ok(finish(Some(q), Some(r), outcome))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseCost {
    /// Estimated bits, after any ceiling.
    pub n: u64,
    /// Unrounded precision the closed form is evaluated at.
    pub n_real: f64,
    pub stages: u64,
    /// `n log2 k + n - k`.
    pub formula: f64,
    pub exact: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseCostReport {
    pub bits: u64,
    pub k: u64,
    pub epsilon: f64,
    pub continued_fractions: CaseCost,
    pub diophantine: CaseCost,
    /// Diophantine closed form evaluated at the ceiling `ceil(L(1+eps))`.
    pub diophantine_formula_at_ceiling: f64,
    pub ratio_formula: f64,
    pub ratio_exact: f64,
}

fn formula(n: f64, k: u64) -> f64 {
    n * (k as f64).log2() + n - k as f64
}

/// Rotation counts for both recovery routes at modulus width `L`.
pub fn compare_case_costs(bits: u64, k: u64, epsilon: f64) -> Result<CaseCostReport> {
    if bits == 0 || k == 0 {
        return Err(QpeError::InvalidInput("L and k must be at least 1".into()));
    }
    if !(epsilon > 0.0) {
        return Err(QpeError::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let n1 = 2 * bits + 1;
    let n2_real = bits as f64 * (1.0 + epsilon);
    let n2 = ceil_guarded(n2_real);
    let c1 = staged_cost(n1, k)?;
    let c2 = staged_cost(n2, k)?;
    let case_i = CaseCost {
        n: n1,
        n_real: n1 as f64,
        stages: c1.stages,
        formula: formula(n1 as f64, k),
        exact: c1.exact,
    };
    let case_ii = CaseCost {
        n: n2,
        n_real: n2_real,
        stages: c2.stages,
        formula: formula(n2_real, k),
        exact: c2.exact,
    };
    Ok(CaseCostReport {
        bits,
        k,
        epsilon,
        ratio_formula: case_i.formula / case_ii.formula,
        ratio_exact: case_i.exact as f64 / case_ii.exact as f64,
        diophantine_formula_at_ceiling: formula(n2 as f64, k),
        continued_fractions: case_i,
        diophantine: case_ii,
    })
}
