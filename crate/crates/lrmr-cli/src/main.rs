//! `lrmr` — command-line front end for the low-rank matrix recovery toolkit.
//!
//! Subcommands: solve, bounds, ric, verify, experiment, phase. Seeds are
//! mandatory on every generative subcommand and never default from a clock;
//! human-readable summaries go to stdout while machine-readable JSON/CSV
//! goes to `--out`/`--summary` paths.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use lrmr_core::fileio::{
    self, read_problem, read_solution_matrix, to_pretty_json, SolveResultDoc,
};
use lrmr_core::harness::{
    phase_sweep, run_experiment, write_phase_csv, write_summary_json, write_trials_csv,
    ExperimentConfig, PhaseConfig, RunOptions,
};
use lrmr_core::linalg::DenseMatrix;
use lrmr_core::ric::{
    exact_sparse_ric, mc_matrix_ric, mc_plus_ascent_ric, RicEstimate,
};
use lrmr_core::solvers::{
    solve_bpdn, solve_nnm_constrained, solve_rnnm, SolverOptions, VectorCertificate,
};
use lrmr_core::theory::{check_lemma3, theorem1_constants, verify_theorem1, Lemma3Report,
    Theorem1Report, TheoryParams};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "lrmr", version, about = "Low-rank matrix recovery toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a recovery problem from a problem JSON file.
    Solve(SolveArgs),
    /// Evaluate the recovery-bound constants at a parameter point.
    Bounds(BoundsArgs),
    /// Estimate a restricted isometry constant for an ensemble file.
    Ric(RicArgs),
    /// Check the solution inequalities and recovery bounds for a solve.
    Verify(VerifyArgs),
    /// Run a seeded verification campaign from a config file.
    Experiment(ExperimentArgs),
    /// Sweep a grid of campaign cells and tabulate success fractions.
    Phase(PhaseArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Problem JSON: {"ensemble": <doc or path>, "b": [...], "lambda": ..., "epsilon": ...}
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, value_enum, default_value = "rnnm")]
    solver: SolverKind,
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Write the result JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverKind {
    Rnnm,
    Nnm,
    Bpdn,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    t: f64,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RicArgs {
    #[arg(long, value_enum)]
    mode: RicMode,
    /// Ensemble JSON file.
    #[arg(long)]
    ensemble: PathBuf,
    #[arg(long)]
    k: usize,
    /// Sample count (mc and ascent modes).
    #[arg(long)]
    samples: Option<usize>,
    /// Seed (mc and ascent modes).
    #[arg(long)]
    seed: Option<u64>,
    /// Ascent step budget.
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RicMode {
    /// Exact support enumeration on the vectorized design (sparse setting).
    Exact,
    /// Monte-Carlo lower bound over random low-rank matrices.
    Mc,
    /// Monte-Carlo sharpened by projected gradient ascent.
    Ascent,
}

#[derive(Args)]
struct VerifyArgs {
    /// Problem JSON; must contain the ground truth.
    #[arg(long)]
    problem: PathBuf,
    /// Result JSON produced by `solve`.
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    k: usize,
    /// RIC value to use directly.
    #[arg(long, conflicts_with = "ric")]
    delta: Option<f64>,
    /// RIC estimate JSON produced by `ric`; lower bounds get `--margin` added.
    #[arg(long)]
    ric: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    margin: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Campaign config JSON (ExperimentConfig).
    #[arg(long)]
    config: PathBuf,
    /// Campaign seed; takes precedence over any seed in the config file.
    #[arg(long)]
    seed: u64,
    /// Trial CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Summary JSON output path.
    #[arg(long)]
    summary: PathBuf,
    /// Also write the campaign ensemble to this path.
    #[arg(long)]
    ensemble_out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 10_000)]
    gate_samples: usize,
    /// Draw a fresh ensemble for every trial.
    #[arg(long)]
    fresh_ensemble_per_trial: bool,
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct PhaseArgs {
    /// Phase config JSON (base config + grid + success threshold).
    #[arg(long)]
    config: PathBuf,
    /// Sweep seed; takes precedence over the base config's seed.
    #[arg(long)]
    seed: u64,
    /// Phase CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Optional summary JSON (cells plus provenance).
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 10_000)]
    gate_samples: usize,
}

enum CliError {
    Usage(String),
    Domain(lrmr_core::Error),
}

impl From<lrmr_core::Error> for CliError {
    fn from(e: lrmr_core::Error) -> Self {
        CliError::Domain(e)
    }
}

type CliResult = Result<(), CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Ric(a) => cmd_ric(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Phase(a) => cmd_phase(a),
    }
}

// ---------------------------------------------------------------- solve

/// Result document for the vector (bpdn) route.
#[derive(Serialize, Deserialize)]
struct VectorResultDoc {
    version: String,
    solver: String,
    solution: Vec<f64>,
    iterations: usize,
    final_objective: f64,
    objective_trace: Vec<f64>,
    converged: bool,
    certificate: VectorCertificate,
}

fn cmd_solve(a: SolveArgs) -> CliResult {
    let problem = read_problem(&a.problem)?;
    let opts = SolverOptions {
        max_iters: a.max_iters,
        tol: a.tol,
    };
    match a.solver {
        SolverKind::Rnnm | SolverKind::Nnm => {
            let (name, result) = match a.solver {
                SolverKind::Rnnm => ("rnnm", solve_rnnm(&problem, &opts)?),
                SolverKind::Nnm => ("nnm", solve_nnm_constrained(&problem, &opts)?),
                SolverKind::Bpdn => unreachable!(),
            };
            println!("solver: {name}");
            println!("converged: {}", result.converged);
            println!("iterations: {}", result.iterations);
            println!("final objective: {}", result.final_objective);
            println!(
                "certificate: dual spectral norm {}, alignment gap {}",
                result.certificate.dual_spectral_norm, result.certificate.alignment_gap
            );
            if let Some(out) = &a.out {
                let doc = SolveResultDoc::from_result(name, &result);
                write_text(out, &to_pretty_json(&doc)?)?;
                println!("wrote {}", out.display());
            }
        }
        SolverKind::Bpdn => {
            // vectorized design: row i of the design matrix is A^(i) in
            // row-major order, so the vector model is b = M vec(X)
            let ens = problem.ensemble();
            let n = ens.n1() * ens.n2();
            let mut entries = Vec::with_capacity(ens.m() * n);
            for mat in ens.matrices() {
                entries.extend_from_slice(mat.entries());
            }
            let design = DenseMatrix::new(ens.m(), n, entries)?;
            let result = solve_bpdn(&design, problem.b(), problem.lambda(), &opts)?;
            println!("solver: bpdn");
            println!("converged: {}", result.converged);
            println!("iterations: {}", result.iterations);
            println!("final objective: {}", result.final_objective);
            println!(
                "certificate: dual infinity norm {}, alignment gap {}",
                result.certificate.dual_infinity_norm, result.certificate.alignment_gap
            );
            if let Some(out) = &a.out {
                let doc = VectorResultDoc {
                    version: VERSION.to_string(),
                    solver: "bpdn".to_string(),
                    solution: result.solution.clone(),
                    iterations: result.iterations,
                    final_objective: result.final_objective,
                    objective_trace: result.objective_trace.clone(),
                    converged: result.converged,
                    certificate: result.certificate,
                };
                write_text(out, &to_pretty_json(&doc)?)?;
                println!("wrote {}", out.display());
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- bounds

#[derive(Serialize)]
struct BoundsDoc {
    version: String,
    t: f64,
    k: usize,
    delta: f64,
    lambda: f64,
    epsilon: f64,
    beta1: f64,
    beta2: f64,
    c1: f64,
    c2: f64,
    c3: Option<f64>,
    c4: Option<f64>,
    condition_ok: bool,
    beta2_lt_one: bool,
}

fn cmd_bounds(a: BoundsArgs) -> CliResult {
    let params = TheoryParams::new(a.t, a.k, a.delta, a.lambda, a.eps)?;
    let b = theorem1_constants(&params)?;
    let doc = BoundsDoc {
        version: VERSION.to_string(),
        t: a.t,
        k: a.k,
        delta: a.delta,
        lambda: a.lambda,
        epsilon: a.eps,
        beta1: b.beta1,
        beta2: b.beta2,
        c1: b.c1,
        c2: b.c2,
        c3: b.c3,
        c4: b.c4,
        condition_ok: b.condition_ok,
        beta2_lt_one: b.beta2_lt_one,
    };

    let fmt_opt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| x.to_string());
    println!("{:<14} value", "quantity");
    println!("{:<14} {}", "beta1", b.beta1);
    println!("{:<14} {}", "beta2", b.beta2);
    println!("{:<14} {}", "c1", b.c1);
    println!("{:<14} {}", "c2", b.c2);
    println!("{:<14} {}", "c3", fmt_opt(b.c3));
    println!("{:<14} {}", "c4", fmt_opt(b.c4));
    println!("{:<14} {}", "condition_ok", b.condition_ok);
    println!("{:<14} {}", "beta2_lt_one", b.beta2_lt_one);

    match &a.out {
        Some(out) => {
            write_text(out, &to_pretty_json(&doc)?)?;
            println!("wrote {}", out.display());
        }
        None => println!("{}", serde_json::to_string(&doc).map_err(lrmr_core::Error::from)?),
    }
    Ok(())
}

// ---------------------------------------------------------------- ric

#[derive(Serialize, Deserialize)]
struct RicOutputDoc {
    version: String,
    mode: String,
    ensemble: String,
    seed: Option<u64>,
    #[serde(flatten)]
    estimate: RicEstimate,
}

fn cmd_ric(a: RicArgs) -> CliResult {
    let ens = fileio::read_ensemble(&a.ensemble)?;
    let (mode, seed, estimate) = match a.mode {
        RicMode::Exact => {
            // sparse-setting RIC of the vectorized design
            let n = ens.n1() * ens.n2();
            let mut entries = Vec::with_capacity(ens.m() * n);
            for mat in ens.matrices() {
                entries.extend_from_slice(mat.entries());
            }
            let design = DenseMatrix::new(ens.m(), n, entries)?;
            ("exact", None, exact_sparse_ric(&design, a.k)?)
        }
        RicMode::Mc => {
            let samples = a
                .samples
                .ok_or_else(|| CliError::Usage("--samples is required for --mode mc".into()))?;
            let seed = a
                .seed
                .ok_or_else(|| CliError::Usage("--seed is required for --mode mc".into()))?;
            ("mc", Some(seed), mc_matrix_ric(&ens, a.k, samples, seed)?)
        }
        RicMode::Ascent => {
            let samples = a.samples.ok_or_else(|| {
                CliError::Usage("--samples is required for --mode ascent".into())
            })?;
            let seed = a
                .seed
                .ok_or_else(|| CliError::Usage("--seed is required for --mode ascent".into()))?;
            (
                "ascent",
                Some(seed),
                mc_plus_ascent_ric(&ens, a.k, samples, seed, a.steps)?,
            )
        }
    };
    println!(
        "ric order {}: value {} ({}{})",
        estimate.order,
        estimate.value,
        if estimate.is_exact { "exact" } else { "lower bound" },
        if estimate.is_lower_bound {
            ", sampling-based"
        } else {
            ""
        }
    );
    let doc = RicOutputDoc {
        version: VERSION.to_string(),
        mode: mode.to_string(),
        ensemble: a.ensemble.display().to_string(),
        seed,
        estimate,
    };
    match &a.out {
        Some(out) => {
            write_text(out, &to_pretty_json(&doc)?)?;
            println!("wrote {}", out.display());
        }
        None => println!("{}", serde_json::to_string(&doc).map_err(lrmr_core::Error::from)?),
    }
    Ok(())
}

// ---------------------------------------------------------------- verify

#[derive(Serialize)]
struct VerifyReportDoc {
    version: String,
    t: f64,
    k: usize,
    delta: f64,
    delta_source: String,
    lambda: f64,
    epsilon: f64,
    lemma3: Lemma3Report,
    theorem1: Theorem1Report,
}

fn cmd_verify(a: VerifyArgs) -> CliResult {
    let problem = read_problem(&a.problem)?;
    let solution = read_solution_matrix(&a.solution)?;

    let (delta, delta_source) = match (a.delta, &a.ric) {
        (Some(d), None) => (d, "flag".to_string()),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(lrmr_core::Error::from)?;
            let doc: RicOutputDoc =
                serde_json::from_str(&text).map_err(lrmr_core::Error::from)?;
            let d = if doc.estimate.is_lower_bound {
                doc.estimate.value + a.margin
            } else {
                doc.estimate.value
            };
            (d, format!("{} (+margin {})", path.display(), a.margin))
        }
        _ => {
            return Err(CliError::Usage(
                "exactly one of --delta or --ric is required".into(),
            ))
        }
    };

    let params = TheoryParams::new(a.t, a.k, delta, problem.lambda(), problem.epsilon())?;
    let lemma3 = check_lemma3(&problem, &solution, a.k)?;
    let theorem1 = verify_theorem1(&problem, &solution, &params)?;

    println!(
        "lemma3: (5) {} [lhs {} rhs {}], (6) {} [lhs {} rhs {}]",
        pass_str(lemma3.pass5),
        lemma3.lhs5,
        lemma3.rhs5,
        pass_str(lemma3.pass6),
        lemma3.lhs6,
        lemma3.rhs6
    );
    match (&theorem1.lhs8, &theorem1.lhs9) {
        (Some(l8), Some(l9)) => {
            println!(
                "theorem1: (8) {} [lhs {} rhs {}], (9) {} [lhs {} rhs {}]",
                pass_str(theorem1.pass8.unwrap_or(false)),
                l8,
                theorem1.rhs8.unwrap(),
                pass_str(theorem1.pass9.unwrap_or(false)),
                l9,
                theorem1.rhs9.unwrap()
            );
        }
        _ => println!(
            "theorem1: precondition unmet ({})",
            theorem1.unmet_reason.as_deref().unwrap_or("unknown")
        ),
    }

    let doc = VerifyReportDoc {
        version: VERSION.to_string(),
        t: a.t,
        k: a.k,
        delta,
        delta_source,
        lambda: problem.lambda(),
        epsilon: problem.epsilon(),
        lemma3,
        theorem1,
    };
    if let Some(out) = &a.out {
        write_text(out, &to_pretty_json(&doc)?)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn pass_str(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

// ---------------------------------------------------------------- experiment

fn cmd_experiment(a: ExperimentArgs) -> CliResult {
    let text = std::fs::read_to_string(&a.config).map_err(lrmr_core::Error::from)?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(lrmr_core::Error::from)?;
    cfg.seed = a.seed;
    let opts = RunOptions {
        per_trial_ensembles: a.fresh_ensemble_per_trial,
        threads: a.threads,
        gate_samples: a.gate_samples,
        solver: SolverOptions {
            max_iters: a.max_iters,
            tol: a.tol,
        },
    };
    let out = run_experiment(&cfg, &opts)?;
    write_trials_csv(&a.out, &out.records)?;
    write_summary_json(&a.summary, &out.summary)?;
    if let Some(epath) = &a.ensemble_out {
        let ctx = lrmr_core::harness::CampaignContext::build(
            &cfg,
            &opts,
            lrmr_core::harness::hash64(cfg.seed, 1),
        )?;
        fileio::write_ensemble(epath, &ctx.ensemble)?;
        println!("wrote {}", epath.display());
    }

    let s = &out.summary;
    println!("trials: {}", s.trials);
    println!("converged: {}/{}", s.converged_count, s.trials);
    println!("lemma3 pass: {}/{}", s.lemma3_pass_count, s.trials);
    println!(
        "ric gate: order {} estimate {} (+{} margin) vs threshold {} -> {}",
        s.gate.order,
        s.gate.estimate,
        s.gate.margin,
        s.gate.threshold,
        if s.gate.passed { "gated in" } else { "precondition unmet" }
    );
    println!(
        "theorem1: verified {}/{} (precondition unmet {})",
        s.thm1_pass_count, s.gated_count, s.precondition_unmet_count
    );
    println!(
        "frob error: min {} median {} max {}",
        s.frob_error_min, s.frob_error_median, s.frob_error_max
    );
    println!("wrote {}", a.out.display());
    println!("wrote {}", a.summary.display());
    Ok(())
}

// ---------------------------------------------------------------- phase

#[derive(Serialize)]
struct PhaseSummaryDoc {
    version: String,
    config: PhaseConfig,
    cells: Vec<lrmr_core::harness::PhaseCell>,
}

fn cmd_phase(a: PhaseArgs) -> CliResult {
    let text = std::fs::read_to_string(&a.config).map_err(lrmr_core::Error::from)?;
    let mut cfg: PhaseConfig = serde_json::from_str(&text).map_err(lrmr_core::Error::from)?;
    cfg.base.seed = a.seed;
    let opts = RunOptions {
        threads: a.threads,
        gate_samples: a.gate_samples,
        ..RunOptions::default()
    };
    let cells = phase_sweep(&cfg, &opts)?;
    write_phase_csv(&a.out, &cells)?;

    println!("{:<6} {:<5} {:<10} {:<10} {:<9} median_err", "m", "rank", "lambda", "epsilon", "success");
    for c in &cells {
        println!(
            "{:<6} {:<5} {:<10} {:<10} {:<9.3} {}",
            c.m, c.rank, c.lambda, c.epsilon, c.success_fraction, c.median_frob_error
        );
    }
    if let Some(spath) = &a.summary {
        let doc = PhaseSummaryDoc {
            version: VERSION.to_string(),
            config: cfg,
            cells,
        };
        write_text(spath, &to_pretty_json(&doc)?)?;
        println!("wrote {}", spath.display());
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), lrmr_core::Error> {
    std::fs::write(path, text)?;
    Ok(())
}
