use super::{check_qubit, require, Backend, PhaseOracle, QubitStatus};
use crate::error::{QpeError, Result};
use crate::phase::{BinaryPhase, Turns};

/// Workspace as a product of `(|0> + e^{2 pi i theta_t}|1>)/sqrt 2` factors.
///
/// Valid only for an eigenphase oracle: controlled powers of `U` then add a
/// pure phase to their control and the workspace never entangles, so each
/// qubit is described by one phase. Phases stay exact when the eigenphase is
/// dyadic; otherwise they are doubles.
#[derive(Clone, Debug)]
pub struct ProductPhaseState {
    thetas: Vec<Turns>,
    status: Vec<QubitStatus>,
}

impl ProductPhaseState {
    pub fn new(width: usize) -> Self {
        ProductPhaseState {
            thetas: vec![Turns::zero(); width],
            status: vec![QubitStatus::Zero; width],
        }
    }

    pub fn thetas(&self) -> &[Turns] {
        &self.thetas
    }

    fn prepared(&self, t: usize, op: &str) -> Result<()> {
        check_qubit(self.thetas.len(), t)?;
        require(self.status[t], QubitStatus::Prepared, t, op)
    }
}

impl Backend for ProductPhaseState {
    fn width(&self) -> usize {
        self.thetas.len()
    }

    fn status(&self, t: usize) -> QubitStatus {
        self.status[t]
    }

    fn prepare_plus(&mut self, t: usize) -> Result<()> {
        check_qubit(self.thetas.len(), t)?;
        require(self.status[t], QubitStatus::Zero, t, "prepare_plus")?;
        self.thetas[t] = Turns::zero();
        self.status[t] = QubitStatus::Prepared;
        Ok(())
    }

    fn kickback(&mut self, t: usize, oracle: &PhaseOracle, l: u32) -> Result<()> {
        self.prepared(t, "kickback")?;
        match oracle {
            PhaseOracle::Eigenphase(phi) => {
                self.thetas[t] = self.thetas[t].add(&phi.mul_pow2(l));
                Ok(())
            }
            PhaseOracle::ModularMultiplication { .. } => Err(QpeError::Configuration(
                "modular multiplication entangles the registers; use the statevector backend"
                    .into(),
            )),
        }
    }

    fn inverse_rotation(&mut self, t: usize, angle: &BinaryPhase) -> Result<()> {
        self.prepared(t, "inverse_rotation")?;
        self.thetas[t] = self.thetas[t].sub(&Turns::Exact(angle.clone()));
        Ok(())
    }

    fn prob_one(&self, t: usize) -> Result<f64> {
        self.prepared(t, "measure")?;
        Ok(self.thetas[t].prob_one())
    }

    fn collapse(&mut self, t: usize, bit: bool) -> Result<()> {
        self.prepared(t, "measure")?;
        self.status[t] = QubitStatus::Measured(bit);
        Ok(())
    }

    fn reset(&mut self, t: usize) -> Result<()> {
        check_qubit(self.thetas.len(), t)?;
        require(self.status[t], QubitStatus::Measured(false), t, "reset")?;
        self.thetas[t] = Turns::zero();
        self.status[t] = QubitStatus::Zero;
        Ok(())
    }

    fn phase(&self, t: usize) -> Option<Turns> {
        (self.status.get(t) == Some(&QubitStatus::Prepared)).then(|| self.thetas[t].clone())
    }
}
