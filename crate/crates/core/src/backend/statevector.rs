use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;

use super::{check_qubit, require, Backend, PhaseOracle, QubitStatus};
use crate::arith;
use crate::error::{QpeError, Result};
use crate::phase::{BinaryPhase, Turns};

/// Dense amplitudes over `workspace + register` qubits.
///
/// Basis index bit `q` is qubit `q`; workspace qubits occupy `[0, k)` and
/// the modular register holds `y = index >> k`.
#[derive(Clone, Debug)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    workspace: usize,
    register: usize,
    status: Vec<QubitStatus>,
}

impl StateVector {
    /// All qubits in `|0>`.
    pub fn new(workspace: usize, register: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << (workspace + register)];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        StateVector {
            amplitudes,
            workspace,
            register,
            status: vec![QubitStatus::Zero; workspace],
        }
    }

    /// Workspace in `|0..0>`, register in `|y>`.
    pub fn with_register_value(workspace: usize, register: usize, y: u64) -> Result<Self> {
        if register < 64 && y >= 1 << register {
            return Err(QpeError::InvalidInput(format!(
                "register value {y} does not fit in {register} qubits"
            )));
        }
        let mut sv = Self::new(workspace, register);
        sv.amplitudes[0] = Complex64::new(0.0, 0.0);
        sv.amplitudes[(y as usize) << workspace] = Complex64::new(1.0, 0.0);
        Ok(sv)
    }

    pub fn num_qubits(&self) -> usize {
        self.workspace + self.register
    }

    pub fn register_width(&self) -> usize {
        self.register
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_any(&self, q: usize) -> Result<()> {
        check_qubit(self.num_qubits(), q)
    }

    /// Raw Hadamard on any qubit, no contract checks.
    pub fn apply_hadamard(&mut self, q: usize) -> Result<()> {
        self.check_any(q)?;
        let mask = 1usize << q;
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | mask];
                self.amplitudes[i] = (a0 + a1) * FRAC_1_SQRT_2;
                self.amplitudes[i | mask] = (a0 - a1) * FRAC_1_SQRT_2;
            }
        }
        Ok(())
    }

    /// Raw `diag(1, e^{2 pi i turns})` on any qubit.
    pub fn apply_phase(&mut self, q: usize, turns: f64) -> Result<()> {
        self.check_any(q)?;
        let mask = 1usize << q;
        let w = Complex64::cis(TAU * turns);
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & mask != 0 {
                *a *= w;
            }
        }
        Ok(())
    }

    /// Raw Pauli-X on any qubit.
    pub fn apply_x(&mut self, q: usize) -> Result<()> {
        self.check_any(q)?;
        let mask = 1usize << q;
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                self.amplitudes.swap(i, i | mask);
            }
        }
        Ok(())
    }

    /// On the `|1>_t` branch, maps `|y> -> |a y mod n>` for `y < n` and leaves
    /// `y >= n` fixed, so the map stays a permutation.
    pub fn controlled_modular_multiply(&mut self, t: usize, a: u64, n: u64) -> Result<()> {
        check_qubit(self.workspace, t)?;
        let g = arith::gcd(a, n);
        if g != 1 {
            return Err(QpeError::NonInvertible {
                multiplier: a,
                modulus: n,
                gcd: g,
            });
        }
        if self.register < 64 && n > 1u64 << self.register {
            return Err(QpeError::InvalidInput(format!(
                "modulus {n} does not fit in a {}-qubit register",
                self.register
            )));
        }
        let control = 1usize << t;
        let low = (1usize << self.workspace) - 1;
        let mut next = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (i, &amp) in self.amplitudes.iter().enumerate() {
            let y = (i >> self.workspace) as u64;
            let j = if i & control != 0 && y < n {
                (i & low) | ((arith::mul_mod(a, y, n) as usize) << self.workspace)
            } else {
                i
            };
            next[j] = amp;
        }
        self.amplitudes = next;
        Ok(())
    }

    /// Marginal distribution of the modular register.
    pub fn register_distribution(&self) -> Vec<f64> {
        let mut probs = vec![0.0; 1 << self.register];
        for (i, a) in self.amplitudes.iter().enumerate() {
            probs[i >> self.workspace] += a.norm_sqr();
        }
        probs
    }

    fn prepared(&self, t: usize, op: &str) -> Result<()> {
        check_qubit(self.workspace, t)?;
        require(self.status[t], QubitStatus::Prepared, t, op)
    }
}

impl Backend for StateVector {
    fn width(&self) -> usize {
        self.workspace
    }

    fn status(&self, t: usize) -> QubitStatus {
        self.status[t]
    }

    fn prepare_plus(&mut self, t: usize) -> Result<()> {
        check_qubit(self.workspace, t)?;
        require(self.status[t], QubitStatus::Zero, t, "prepare_plus")?;
        self.apply_hadamard(t)?;
        self.status[t] = QubitStatus::Prepared;
        Ok(())
    }

    fn kickback(&mut self, t: usize, oracle: &PhaseOracle, l: u32) -> Result<()> {
        self.prepared(t, "kickback")?;
        match oracle {
            PhaseOracle::Eigenphase(phi) => self.apply_phase(t, phi.mul_pow2(l).to_f64()),
            PhaseOracle::ModularMultiplication { base, modulus } => {
                let a = arith::pow2_power_mod(*base, l, *modulus);
                self.controlled_modular_multiply(t, a, *modulus)
            }
        }
    }

    fn inverse_rotation(&mut self, t: usize, angle: &BinaryPhase) -> Result<()> {
        self.prepared(t, "inverse_rotation")?;
        let neg = Turns::zero().sub(&Turns::Exact(angle.clone()));
        self.apply_phase(t, neg.to_f64())
    }

    fn prob_one(&self, t: usize) -> Result<f64> {
        self.prepared(t, "measure")?;
        let mask = 1usize << t;
        let p: f64 = (0..self.amplitudes.len())
            .filter(|i| i & mask == 0)
            .map(|i| ((self.amplitudes[i] - self.amplitudes[i | mask]) * FRAC_1_SQRT_2).norm_sqr())
            .sum();
        Ok(p.clamp(0.0, 1.0))
    }

    fn collapse(&mut self, t: usize, bit: bool) -> Result<()> {
        self.prepared(t, "measure")?;
        self.apply_hadamard(t)?;
        let mask = 1usize << t;
        let mut kept = 0.0;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if (i & mask != 0) == bit {
                kept += a.norm_sqr();
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        if kept <= 0.0 {
            return Err(QpeError::ImpossibleOutcome {
                qubit: t,
                bit: bit as u8,
            });
        }
        let scale = 1.0 / kept.sqrt();
        for a in &mut self.amplitudes {
            *a *= scale;
        }
        self.status[t] = QubitStatus::Measured(bit);
        Ok(())
    }

    fn reset(&mut self, t: usize) -> Result<()> {
        check_qubit(self.workspace, t)?;
        require(self.status[t], QubitStatus::Measured(false), t, "reset")?;
        if self.status[t] == QubitStatus::Measured(true) {
            self.apply_x(t)?;
        }
        self.status[t] = QubitStatus::Zero;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    type Matrix = Vec<Vec<Complex64>>;

    /// Reduced density matrix of every qubit except `traced`.
    fn reduced_without(sv: &StateVector, traced: usize) -> Matrix {
        let n = sv.num_qubits();
        let dim = 1usize << (n - 1);
        let squeeze = |i: usize| -> (usize, usize) {
            let low = i & ((1 << traced) - 1);
            let high = (i >> (traced + 1)) << traced;
            ((i >> traced) & 1, low | high)
        };
        let mut rho = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
        let amps = sv.amplitudes();
        for i in 0..amps.len() {
            for j in 0..amps.len() {
                let (bi, ri) = squeeze(i);
                let (bj, rj) = squeeze(j);
                if bi == bj {
                    rho[ri][rj] += amps[i] * amps[j].conj();
                }
            }
        }
        rho
    }

    /// Entangled 5-qubit state: 2 workspace qubits driving modular
    /// multiplications on a 3-qubit register, then random local gates.
    fn random_state(seed: u64) -> StateVector {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut sv = StateVector::with_register_value(2, 3, 1).unwrap();
        sv.apply_hadamard(0).unwrap();
        sv.apply_hadamard(1).unwrap();
        sv.controlled_modular_multiply(0, 3, 7).unwrap();
        sv.controlled_modular_multiply(1, 2, 7).unwrap();
        for _ in 0..40 {
            let q = rng.gen_range(0..5);
            if rng.gen::<bool>() {
                sv.apply_hadamard(q).unwrap();
            } else {
                sv.apply_phase(q, rng.gen()).unwrap();
            }
        }
        sv
    }

    #[test]
    fn modular_multiply_examples() {
        // control |0>: unchanged
        let mut sv = StateVector::with_register_value(1, 4, 1).unwrap();
        sv.controlled_modular_multiply(0, 7, 15).unwrap();
        assert_eq!(sv.register_distribution()[1], 1.0);

        // a = 1: identity
        let mut sv = StateVector::with_register_value(1, 4, 3).unwrap();
        sv.apply_x(0).unwrap();
        sv.controlled_modular_multiply(0, 1, 15).unwrap();
        assert_eq!(sv.register_distribution()[3], 1.0);

        // control on, |1> -> |7>
        let mut sv = StateVector::with_register_value(1, 4, 1).unwrap();
        sv.apply_x(0).unwrap();
        sv.controlled_modular_multiply(0, 7, 15).unwrap();
        assert_eq!(sv.register_distribution()[7], 1.0);

        assert!(matches!(
            sv.controlled_modular_multiply(0, 6, 15),
            Err(QpeError::NonInvertible { gcd: 3, .. })
        ));
    }

    #[test]
    fn modular_multiply_cycles_with_order() {
        for (a, n) in [(7u64, 15u64), (2, 15), (4, 15), (2, 21), (5, 21), (3, 7)] {
            let r = arith::multiplicative_order(a, n).unwrap();
            let reg = arith::register_bits(n) as usize;
            for y in 0..(1u64 << reg) {
                let mut sv = StateVector::with_register_value(1, reg, y).unwrap();
                sv.apply_x(0).unwrap();
                for _ in 0..r {
                    sv.controlled_modular_multiply(0, a, n).unwrap();
                }
                assert_eq!(sv.register_distribution()[y as usize], 1.0, "a={a} n={n} y={y}");
            }
        }
    }

    #[test]
    fn norm_preserved_over_long_sequences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut sv = StateVector::with_register_value(3, 4, 1).unwrap();
        for _ in 0..10_000 {
            match rng.gen_range(0..4) {
                0 => sv.apply_hadamard(rng.gen_range(0..7)).unwrap(),
                1 => sv.apply_phase(rng.gen_range(0..7), rng.gen()).unwrap(),
                2 => sv.apply_x(rng.gen_range(0..7)).unwrap(),
                _ => {
                    let a = [2u64, 4, 7, 8, 11, 13][rng.gen_range(0..6)];
                    sv.controlled_modular_multiply(rng.gen_range(0..3), a, 15).unwrap();
                }
            }
            assert!((sv.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gates_leave_other_qubits_untouched() {
        for seed in 0..5 {
            let base = random_state(seed);
            for q in 0..5 {
                let before = reduced_without(&base, q);
                for gate in 0..3 {
                    let mut sv = base.clone();
                    match gate {
                        0 => sv.apply_hadamard(q).unwrap(),
                        1 => sv.apply_phase(q, 0.3).unwrap(),
                        _ => sv.apply_x(q).unwrap(),
                    }
                    let after = reduced_without(&sv, q);
                    for (ra, rb) in before.iter().zip(&after) {
                        for (a, b) in ra.iter().zip(rb) {
                            assert!((a - b).norm() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn measurement_renormalizes() {
        let mut sv = StateVector::new(2, 0);
        sv.prepare_plus(0).unwrap();
        sv.kickback(0, &PhaseOracle::eigenphase("1/4".parse::<BinaryPhase>().unwrap()), 0)
            .unwrap();
        assert!((sv.prob_one(0).unwrap() - 0.5).abs() < 1e-12);
        sv.collapse(0, true).unwrap();
        assert!((sv.norm_sqr() - 1.0).abs() < 1e-12);
        assert_eq!(sv.status(0), QubitStatus::Measured(true));
        sv.reset(0).unwrap();
        assert!((sv.amplitudes()[0].norm_sqr() - 1.0).abs() < 1e-12);
    }
}
