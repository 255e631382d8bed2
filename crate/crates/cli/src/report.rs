use serde::Serialize;

use kqpe_core::order::CaseCostReport;
use kqpe_core::{BinaryPhase, BitString, GateTally};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Staged,
    Kitaev,
    ConventionalCount,
    Count,
    Shor,
    CompareCases,
}

/// Envelope for every JSON report.
#[derive(Debug, Serialize)]
pub struct RunReport<I, O> {
    pub schema: u32,
    pub method: Method,
    pub inputs: I,
    pub outputs: O,
}

impl<I: Serialize, O: Serialize> RunReport<I, O> {
    pub fn new(method: Method, inputs: I, outputs: O) -> Self {
        RunReport {
            schema: SCHEMA_VERSION,
            method,
            inputs,
            outputs,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

#[derive(Debug, Serialize)]
pub struct EstimateInputs {
    pub phase: String,
    pub n: usize,
    pub k: usize,
    pub backend: Option<&'static str>,
    pub seed: u64,
    pub trials: Option<u64>,
    pub budget: Option<&'static str>,
}

#[derive(Debug, Serialize)]
pub struct EstimateOutputs {
    pub bits: BitString,
    pub estimate: String,
    pub success: bool,
    pub f_trace: Vec<BinaryPhase>,
    pub stages: Option<usize>,
    pub deterministic: Option<bool>,
    /// Kitaev `phi_l` estimates, `l = 1..n`.
    pub estimates: Option<Vec<f64>>,
    pub tally: GateTally,
    pub paper_t: u64,
}

#[derive(Debug, Serialize)]
pub struct CountInputs {
    pub n: u64,
    pub k: u64,
    pub methods: Vec<&'static str>,
}

#[derive(Debug, Serialize)]
pub struct StagedCount {
    pub rotations: u64,
    pub paper_approx: f64,
    pub stages: u64,
    pub reset_rotations: u64,
}

#[derive(Debug, Serialize)]
pub struct ConventionalCount {
    /// `n(n-1)/2 + n`, Hadamards counted as rotations.
    pub rotations: u64,
    pub controlled_rotations: u64,
    pub hadamards: u64,
}

#[derive(Debug, Serialize)]
pub struct KitaevCount {
    pub trials_per_bit: u64,
    /// `n` times the per-bit trials.
    pub tests_per_bit_budget: u64,
    /// The same budget spent once on each test type.
    pub tests: u64,
    pub hadamards: u64,
    pub controlled_u: u64,
    pub phase_gates: u64,
}

#[derive(Debug, Default, Serialize)]
pub struct CountOutputs {
    pub staged: Option<StagedCount>,
    pub conventional: Option<ConventionalCount>,
    pub kitaev: Option<KitaevCount>,
}

#[derive(Debug, Serialize)]
pub struct ShorInputs {
    #[serde(rename = "N")]
    pub modulus: u64,
    pub x: u64,
    pub k: usize,
    pub recovery: &'static str,
    pub epsilon: f64,
    pub d: usize,
    pub seed: u64,
    pub max_attempts: usize,
}

#[derive(Debug, Serialize)]
pub struct ShorOutputs {
    pub n: usize,
    pub attempts: usize,
    pub phases: Vec<BinaryPhase>,
    pub candidate: Option<u64>,
    pub order: Option<u64>,
    pub factors: Option<[u64; 2]>,
    pub failure: Option<String>,
    /// Set when `gcd(x, N) > 1` made the quantum step unnecessary.
    pub classical: bool,
    pub tally: GateTally,
    pub run_tally: Option<GateTally>,
    pub case_costs: CaseCostReport,
}

#[derive(Debug, Serialize)]
pub struct CompareInputs {
    #[serde(rename = "L")]
    pub bits: u64,
    pub k: u64,
    pub epsilon: f64,
}
