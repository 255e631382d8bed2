//! `kqpe` command-line driver.
//!
//! [`run`] does all the work and returns what would be printed, so tests can
//! call it in-process. Exit codes: 0 success, 1 usage or resource error,
//! 2 recovery failure.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use kqpe_core::backend::{seeded_rng, PhaseOracle};
use kqpe_core::kitaev::{self, TrialBudget};
use kqpe_core::order::{self, FactorInstance, FactorOutcome, RecoveryConfig, ShorConfig};
use kqpe_core::phase::fraction_from_bits;
use kqpe_core::qft::conventional_counts;
use kqpe_core::{arith, run_staged, staged_cost, BackendKind, BitString, QpeError, StagedConfig, Turns};

pub mod report;

use report::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RECOVERY: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kqpe", version, about = "Phase estimation with a k-qubit workspace")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a phase with the staged or Kitaev procedure.
    Estimate(EstimateArgs),
    /// Rotation counts per method.
    #[command(alias = "compare")]
    Count(CountArgs),
    /// Order finding and factoring.
    Shor(ShorArgs),
    /// Cost table over a grid of (n, k), as CSV.
    Sweep(SweepArgs),
    /// Rotation counts for continued-fraction vs simultaneous-approximation recovery.
    CompareCases(CompareArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EstimateMethod {
    Staged,
    Kitaev,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Product,
    Statevector,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BudgetArg {
    PerType,
    Shared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CountMethod {
    Staged,
    Conventional,
    Kitaev,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RecoveryArg {
    Cf,
    Sda,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// `0.bbb`, `0`, or `p/q`.
    #[arg(long, value_parser = parse_phase)]
    pub phase: Turns,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = EstimateMethod::Staged)]
    pub method: EstimateMethod,
    #[arg(long, value_enum, default_value_t = BackendArg::Product)]
    pub backend: BackendArg,
    #[arg(long, env = "KQPE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Kitaev trials per test type; defaults to ceil(55 ln n).
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, value_enum, default_value_t = BudgetArg::PerType)]
    pub budget: BudgetArg,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub k: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [CountMethod::Staged, CountMethod::Conventional, CountMethod::Kitaev])]
    pub methods: Vec<CountMethod>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ShorArgs {
    #[arg(long = "N")]
    pub modulus: u64,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = RecoveryArg::Cf)]
    pub recovery: RecoveryArg,
    /// Base; drawn uniformly from the units other than 1 when absent.
    #[arg(long)]
    pub x: Option<u64>,
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    /// Phases pooled for simultaneous approximation; defaults to ceil((1+eps)/eps).
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, env = "KQPE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Fresh runs allowed when every measured phase is zero.
    #[arg(long, default_value_t = 8)]
    pub attempts: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Inclusive `a..b`.
    #[arg(long, value_parser = parse_range)]
    pub n_range: (u64, u64),
    #[arg(long, value_parser = parse_range)]
    pub k_range: (u64, u64),
    /// Written to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long = "L")]
    pub bits: u64,
    #[arg(long)]
    pub k: u64,
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

fn parse_phase(s: &str) -> Result<Turns, String> {
    s.parse().map_err(|e: QpeError| e.to_string())
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("`{s}` is not a range a..b"))?;
    let a = a.trim().parse().map_err(|_| format!("bad range start in `{s}`"))?;
    let b = b.trim().parse().map_err(|_| format!("bad range end in `{s}`"))?;
    Ok((a, b))
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Output { stdout, stderr: String::new(), code: EXIT_OK }
    }

    fn with_code(stdout: String, code: i32) -> Self {
        Output { stdout, stderr: String::new(), code }
    }

    fn error(code: i32, msg: impl std::fmt::Display) -> Self {
        Output {
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
            code,
        }
    }
}

fn fail(e: QpeError) -> Output {
    let code = match e {
        QpeError::ReconstructionFailure { .. } | QpeError::DegenerateEstimate => EXIT_RECOVERY,
        _ => EXIT_USAGE,
    };
    Output::error(code, e)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Output { stdout: String::new(), stderr: text, code: EXIT_USAGE }
            } else {
                Output::ok(text)
            };
        }
    };
    let result = match cli.command {
        Command::Estimate(a) => estimate(&a),
        Command::Count(a) => count(&a),
        Command::Shor(a) => shor(&a),
        Command::Sweep(a) => sweep(&a),
        Command::CompareCases(a) => compare_cases(&a),
    };
    result.unwrap_or_else(|o| o)
}

type CmdResult = Result<Output, Output>;

fn emit<I: Serialize, O: Serialize>(format: Format, report: &RunReport<I, O>, text: impl FnOnce() -> String) -> String {
    match format {
        Format::Json => report.to_json() + "\n",
        Format::Text => text(),
    }
}

fn table(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect()
}

/// Exact recovery for phases representable in `n` bits, otherwise an error
/// below `2^-n` around the circle.
fn estimate_succeeded(phi: &Turns, bits: &BitString) -> bool {
    let n = bits.len() as u32;
    let Ok(est) = fraction_from_bits(bits) else { return false };
    match phi.as_exact() {
        Some(p) if p.min_bits() <= n => *p == est,
        _ => {
            let d = (est.to_f64() - phi.to_f64()).rem_euclid(1.0);
            d.min(1.0 - d) < 0.5f64.powi(n as i32)
        }
    }
}

fn estimate(a: &EstimateArgs) -> CmdResult {
    if a.n == 0 || a.k == 0 {
        return Err(Output::error(EXIT_USAGE, "--n and --k must be at least 1"));
    }
    let (inputs, outputs) = match a.method {
        EstimateMethod::Staged => {
            let backend = match a.backend {
                BackendArg::Product => BackendKind::Product,
                BackendArg::Statevector => BackendKind::Statevector,
            };
            let config = StagedConfig::new(a.n, a.k).with_backend(backend).with_seed(a.seed);
            let r = run_staged(&PhaseOracle::eigenphase(a.phase.clone()), &config).map_err(fail)?;
            let inputs = EstimateInputs {
                phase: a.phase.to_string(),
                n: a.n,
                k: a.k,
                backend: Some(match a.backend {
                    BackendArg::Product => "product",
                    BackendArg::Statevector => "statevector",
                }),
                seed: a.seed,
                trials: None,
                budget: None,
            };
            let outputs = EstimateOutputs {
                success: estimate_succeeded(&a.phase, &r.bits),
                estimate: r.phase().to_ratio_string(),
                deterministic: Some(r.deterministic()),
                stages: Some(r.stage_count),
                f_trace: r.f_trace,
                estimates: None,
                paper_t: r.tally.paper_t(),
                tally: r.tally,
                bits: r.bits,
            };
            (inputs, outputs)
        }
        EstimateMethod::Kitaev => {
            let trials = match a.trials {
                Some(0) => return Err(Output::error(EXIT_USAGE, "--trials must be at least 1")),
                Some(t) => t,
                None => kitaev::kitaev_trials(a.n.max(2) as u64).map_err(fail)?,
            };
            let budget = match a.budget {
                BudgetArg::PerType => TrialBudget::PerType,
                BudgetArg::Shared => TrialBudget::Shared,
            };
            let mut rng = seeded_rng(a.seed);
            let r = kitaev::run_kitaev(&a.phase, a.n, trials, budget, &mut rng).map_err(fail)?;
            let inputs = EstimateInputs {
                phase: a.phase.to_string(),
                n: a.n,
                k: a.k,
                backend: None,
                seed: a.seed,
                trials: Some(trials),
                budget: Some(match a.budget {
                    BudgetArg::PerType => "per_type",
                    BudgetArg::Shared => "shared",
                }),
            };
            let est = fraction_from_bits(&r.bits).map_err(fail)?;
            let outputs = EstimateOutputs {
                success: estimate_succeeded(&a.phase, &r.bits),
                estimate: est.to_ratio_string(),
                deterministic: None,
                stages: None,
                f_trace: Vec::new(),
                estimates: Some(r.estimates),
                paper_t: r.tally.paper_t(),
                tally: r.tally,
                bits: r.bits,
            };
            (inputs, outputs)
        }
    };
    let method = match a.method {
        EstimateMethod::Staged => Method::Staged,
        EstimateMethod::Kitaev => Method::Kitaev,
    };
    let success = outputs.success;
    let report = RunReport::new(method, inputs, outputs);
    let text = emit(a.format, &report, || {
        let o = &report.outputs;
        let mut rows = vec![
            ("method", format!("{:?}", a.method).to_lowercase()),
            ("phase", report.inputs.phase.clone()),
            ("n", a.n.to_string()),
            ("k", a.k.to_string()),
            ("seed", a.seed.to_string()),
            ("bits", o.bits.to_string()),
            ("estimate", o.estimate.clone()),
        ];
        if let Some(stages) = o.stages {
            rows.push(("stages", stages.to_string()));
            let trace: Vec<String> = o.f_trace.iter().map(|f| f.to_ratio_string()).collect();
            rows.push(("F trace", trace.join(" ")));
        }
        if let Some(t) = report.inputs.trials {
            rows.push(("trials", t.to_string()));
        }
        rows.push(("rotations", o.paper_t.to_string()));
        rows.push(("controlled-U", o.tally.controlled_u.to_string()));
        rows.push(("success", o.success.to_string()));
        table(&rows)
    });
    Ok(Output::with_code(text, if success { EXIT_OK } else { EXIT_RECOVERY }))
}

fn kitaev_count(n: u64) -> Result<KitaevCount, QpeError> {
    // one bit needs a single test of each kind
    let trials = if n < 2 { 1 } else { kitaev::kitaev_trials(n)? };
    let tests = if n < 2 { 1 } else { 2 * n * trials };
    Ok(KitaevCount {
        trials_per_bit: trials,
        tests_per_bit_budget: n * trials,
        tests,
        hadamards: 2 * tests,
        controlled_u: tests,
        phase_gates: tests / 2,
    })
}

fn count(a: &CountArgs) -> CmdResult {
    if a.n == 0 || a.k == 0 {
        return Err(Output::error(EXIT_USAGE, "--n and --k must be at least 1"));
    }
    let mut out = CountOutputs::default();
    let mut names = Vec::new();
    for m in &a.methods {
        match m {
            CountMethod::Staged => {
                let c = staged_cost(a.n, a.k).map_err(fail)?;
                out.staged = Some(StagedCount {
                    rotations: c.exact,
                    paper_approx: c.paper_approx,
                    stages: c.stages,
                    reset_rotations: c.reset_rotations,
                });
                names.push("staged");
            }
            CountMethod::Conventional => {
                let c = conventional_counts(a.n);
                out.conventional = Some(ConventionalCount {
                    rotations: c.paper_t(),
                    controlled_rotations: c.qft_rotations,
                    hadamards: c.qft_hadamards,
                });
                names.push("conventional");
            }
            CountMethod::Kitaev => {
                out.kitaev = Some(kitaev_count(a.n).map_err(fail)?);
                names.push("kitaev");
            }
        }
    }
    names.dedup();
    let report = RunReport::new(Method::Count, CountInputs { n: a.n, k: a.k, methods: names }, out);
    let text = emit(a.format, &report, || {
        let o = &report.outputs;
        let mut rows = Vec::new();
        if let Some(s) = &o.staged {
            rows.push((
                "staged",
                format!(
                    "{} rotations ({} stages, {} resets; k log k approximation {})",
                    s.rotations, s.stages, s.reset_rotations, s.paper_approx
                ),
            ));
        }
        if let Some(c) = &o.conventional {
            rows.push((
                "conventional",
                format!(
                    "{} rotations ({} controlled rotations + {} Hadamards)",
                    c.rotations, c.controlled_rotations, c.hadamards
                ),
            ));
        }
        if let Some(kc) = &o.kitaev {
            rows.push((
                "kitaev",
                format!(
                    "{} Hadamard tests ({} trials per bit and test type; n x trials = {}); gates: {} H, {} controlled-U, {} K",
                    kc.tests, kc.trials_per_bit, kc.tests_per_bit_budget, kc.hadamards, kc.controlled_u, kc.phase_gates
                ),
            ));
        }
        format!("n = {}, k = {}\n{}", a.n, a.k, table(&rows))
    });
    Ok(Output::ok(text))
}

fn shor(a: &ShorArgs) -> CmdResult {
    let n = a.modulus;
    order::check_factorable(n).map_err(fail)?;
    let recovery = match a.recovery {
        RecoveryArg::Cf => RecoveryConfig::continued_fractions(),
        RecoveryArg::Sda => {
            let mut r = RecoveryConfig::diophantine(a.epsilon).map_err(fail)?;
            if let Some(d) = a.d {
                if d < 2 {
                    return Err(Output::error(EXIT_USAGE, "--d must be at least 2"));
                }
                r.d = d;
            }
            r
        }
    };
    let x = match a.x {
        Some(x) => x,
        None => {
            let units: Vec<u64> = arith::units(n).into_iter().filter(|&u| u > 1).collect();
            let mut rng = seeded_rng(a.seed);
            *units.choose(&mut rng).expect("composite moduli have units besides 1")
        }
    };
    let bits = arith::register_bits(n);
    let case_costs = order::compare_case_costs(bits as u64, a.k as u64, a.epsilon).map_err(fail)?;
    let inputs = ShorInputs {
        modulus: n,
        x,
        k: a.k,
        recovery: match a.recovery {
            RecoveryArg::Cf => "cf",
            RecoveryArg::Sda => "sda",
        },
        epsilon: a.epsilon,
        d: recovery.d,
        seed: a.seed,
        max_attempts: a.attempts,
    };
    let outputs = match FactorInstance::new(n, x) {
        Err(QpeError::NonInvertible { gcd, .. }) => ShorOutputs {
            n: recovery.precision(bits),
            attempts: 0,
            phases: Vec::new(),
            candidate: None,
            order: None,
            factors: Some([gcd, n / gcd]),
            failure: None,
            classical: true,
            tally: Default::default(),
            run_tally: None,
            case_costs,
        },
        Err(e) => return Err(fail(e)),
        Ok(inst) => {
            let cfg = ShorConfig {
                k: a.k,
                recovery,
                seed: a.seed,
                max_attempts: a.attempts,
            };
            let rep = order::shor(&inst, &cfg).map_err(fail)?;
            let (factors, failure) = match rep.outcome {
                FactorOutcome::Factors { p, q } => (Some([p, q]), None),
                FactorOutcome::Failure { reason } => (None, Some(format!("{reason:?}"))),
            };
            ShorOutputs {
                n: rep.n,
                attempts: rep.attempts,
                phases: rep.phases,
                candidate: rep.candidate,
                order: rep.order,
                factors,
                failure: failure.map(snake_case),
                classical: false,
                tally: rep.tally,
                run_tally: Some(rep.run_tally),
                case_costs,
            }
        }
    };
    let code = if outputs.factors.is_some() { EXIT_OK } else { EXIT_RECOVERY };
    let report = RunReport::new(Method::Shor, inputs, outputs);
    let text = emit(a.format, &report, || {
        let o = &report.outputs;
        let phases: Vec<String> = o.phases.iter().map(|p| p.to_ratio_string()).collect();
        let show = |v: Option<u64>| v.map_or("-".to_string(), |v| v.to_string());
        let c = &o.case_costs;
        let rows = vec![
            ("N", n.to_string()),
            ("x", x.to_string()),
            ("recovery", report.inputs.recovery.to_string()),
            ("n, k", format!("{}, {}", o.n, a.k)),
            ("attempts", o.attempts.to_string()),
            ("phases", phases.join(" ")),
            ("candidate", show(o.candidate)),
            ("order", show(o.order)),
            (
                "result",
                match (&o.factors, &o.failure) {
                    (Some([p, q]), _) if o.classical => format!("{p} x {q} (shared factor with x)"),
                    (Some([p, q]), _) => format!("{p} x {q}"),
                    (None, Some(f)) => format!("failure: {f}"),
                    (None, None) => "failure".into(),
                },
            ),
            ("rotations", o.tally.paper_t().to_string()),
            (
                "case I",
                format!("n={} exact {} formula {:.1}", c.continued_fractions.n, c.continued_fractions.exact, c.continued_fractions.formula),
            ),
            (
                "case II",
                format!("n={} exact {} formula {:.1}", c.diophantine.n, c.diophantine.exact, c.diophantine.formula),
            ),
            ("ratio", format!("formula {:.3}, exact {:.3}", c.ratio_formula, c.ratio_exact)),
        ];
        table(&rows)
    });
    Ok(Output::with_code(text, code))
}

fn snake_case(camel: String) -> String {
    let mut out = String::new();
    for (i, ch) in camel.chars().enumerate() {
        if ch.is_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.extend(ch.to_lowercase());
        } else {
            out.push(ch);
        }
    }
    out
}

#[derive(Debug, Serialize)]
struct SweepRow {
    n: u64,
    k: u64,
    stages: u64,
    staged_exact: u64,
    staged_paper_approx: f64,
    conventional: u64,
    kitaev_tests: u64,
}

fn sweep_row(n: u64, k: u64) -> Result<SweepRow, QpeError> {
    let c = staged_cost(n, k)?;
    Ok(SweepRow {
        n,
        k,
        stages: c.stages,
        staged_exact: c.exact,
        staged_paper_approx: c.paper_approx,
        conventional: conventional_counts(n).paper_t(),
        kitaev_tests: kitaev_count(n)?.tests,
    })
}

fn sweep(a: &SweepArgs) -> CmdResult {
    let (n0, n1) = a.n_range;
    let (k0, k1) = a.k_range;
    if n0 == 0 || k0 == 0 {
        return Err(Output::error(EXIT_USAGE, "ranges start at 1"));
    }
    let cells: Vec<(u64, u64)> = (n0..=n1).flat_map(|n| (k0..=k1).map(move |k| (n, k))).collect();
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(n, k)| sweep_row(n, k))
        .collect::<Result<_, _>>()
        .map_err(fail)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(["n", "k", "stages", "staged_exact", "staged_paper_approx", "conventional", "kitaev_tests"])
        .and_then(|_| rows.iter().try_for_each(|r| w.serialize(r)))
        .map_err(|e| Output::error(EXIT_USAGE, e))?;
    let bytes = w.into_inner().map_err(|e| Output::error(EXIT_USAGE, e))?;
    let body = String::from_utf8(bytes).expect("csv output is ascii");
    match &a.out {
        None => Ok(Output::ok(body)),
        Some(path) => {
            std::fs::write(path, &body)
                .map_err(|e| Output::error(EXIT_USAGE, format!("cannot write {}: {e}", path.display())))?;
            let mut msg = String::new();
            let _ = writeln!(msg, "wrote {} rows to {}", rows.len(), path.display());
            Ok(Output::ok(msg))
        }
    }
}

fn compare_cases(a: &CompareArgs) -> CmdResult {
    let rep = order::compare_case_costs(a.bits, a.k, a.epsilon).map_err(fail)?;
    let report = RunReport::new(
        Method::CompareCases,
        CompareInputs { bits: a.bits, k: a.k, epsilon: a.epsilon },
        rep,
    );
    let text = emit(a.format, &report, || {
        let r = &report.outputs;
        let line = |c: &order::CaseCost| {
            format!("n={:<6} stages={:<5} exact={:<8} formula={:.2}", c.n, c.stages, c.exact, c.formula)
        };
        table(&[
            ("L, k, epsilon", format!("{}, {}, {}", a.bits, a.k, a.epsilon)),
            ("case I (cf)", line(&r.continued_fractions)),
            ("case II (sda)", line(&r.diophantine)),
            ("case II n uncapped", format!("{:.4}", r.diophantine.n_real)),
            ("case II formula at ceiling", format!("{:.2}", r.diophantine_formula_at_ceiling)),
            ("ratio formula", format!("{:.4}", r.ratio_formula)),
            ("ratio exact", format!("{:.4}", r.ratio_exact)),
        ])
    });
    Ok(Output::ok(text))
}
