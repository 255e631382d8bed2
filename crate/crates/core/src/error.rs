use thiserror::Error;

/// Errors produced by the simulation and recovery routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("phase {phase} is not representable with {bits} bits")]
    Precision { phase: String, bits: u32 },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("resource limit exceeded: {required} qubits requested, budget is {budget}")]
    Resource { required: usize, budget: usize },

    #[error("multiplier {multiplier} is not invertible modulo {modulus} (gcd = {gcd})")]
    NonInvertible {
        multiplier: u64,
        modulus: u64,
        gcd: u64,
    },

    #[error("degenerate estimate: cosine and sine estimates are both zero")]
    DegenerateEstimate,

    #[error("bit reconstruction failed at l = {l}")]
    ReconstructionFailure { l: usize },

    /// A scripted measurement asked for an outcome with probability zero.
    #[error("measurement outcome {bit} on qubit {qubit} has probability zero")]
    ImpossibleOutcome { qubit: usize, bit: u8 },
}

pub type Result<T, E = QpeError> = std::result::Result<T, E>;
