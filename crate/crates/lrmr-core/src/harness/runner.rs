//! Campaign execution: one trial solves a seeded instance and evaluates the
//! solution inequalities plus, behind the RIC gate, the recovery bounds.
//!
//! The gate is honest about estimate quality: Monte-Carlo RIC values are
//! lower bounds, so bound verification only proceeds when
//! `estimate + GATE_MARGIN` clears the RIP threshold and uses that padded
//! value for the constants; everything else is reported precondition-unmet,
//! never as a bound failure.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fileio;
use crate::harness::config::{EnsembleKind, ExperimentConfig};
use crate::harness::gen::{gen_gaussian_ensemble, gen_low_rank, gen_noise};
use crate::harness::seeding::{hash64, TAG_ENSEMBLE, TAG_GATE, TAG_NOISE, TAG_TRUTH};
use crate::linalg::{norm2, svd, MeasurementEnsemble};
use crate::ric::{mc_matrix_ric, RicEstimate};
use crate::solvers::{solve_rnnm, RecoveryProblem, SolverOptions};
use crate::theory::{
    check_lemma3, rip_threshold, verify_theorem1, GateStatus, TheoryParams,
};

/// Safety margin added to Monte-Carlo RIC lower bounds before they may pass
/// the RIP gate.
pub const GATE_MARGIN: f64 = 0.05;

/// Runner knobs that are not part of the experiment's identity.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Draw a fresh ensemble per trial instead of one per campaign.
    pub per_trial_ensembles: bool,
    /// Worker cap for trial execution; output is identical for any value.
    pub threads: usize,
    /// Monte-Carlo sample count for the RIC gate.
    pub gate_samples: usize,
    pub solver: SolverOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            per_trial_ensembles: false,
            threads: 1,
            gate_samples: 10_000,
            solver: SolverOptions::default(),
        }
    }
}

/// Per-trial outcome; one CSV row. Field order is the column order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_seed: u64,
    pub frob_error: f64,
    pub map_error: f64,
    pub tail_norm: f64,
    pub lemma3_pass: bool,
    pub thm1_8_lhs: Option<f64>,
    pub thm1_8_rhs: Option<f64>,
    pub thm1_9_lhs: Option<f64>,
    pub thm1_9_rhs: Option<f64>,
    pub gate_status: GateStatus,
    pub iterations: usize,
    pub converged: bool,
}

pub const TRIAL_CSV_HEADER: &str = "trial_seed,frob_error,map_error,tail_norm,lemma3_pass,\
thm1_8_lhs,thm1_8_rhs,thm1_9_lhs,thm1_9_rhs,gate_status,iterations,converged";

impl TrialRecord {
    pub fn csv_row(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let gate = match self.gate_status {
            GateStatus::Verified => "verified",
            GateStatus::PreconditionUnmet => "precondition-unmet",
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.trial_seed,
            self.frob_error,
            self.map_error,
            self.tail_norm,
            self.lemma3_pass,
            opt(self.thm1_8_lhs),
            opt(self.thm1_8_rhs),
            opt(self.thm1_9_lhs),
            opt(self.thm1_9_rhs),
            gate,
            self.iterations,
            self.converged
        )
    }
}

/// Gate decision shared by a campaign (or recomputed per trial when
/// ensembles are per-trial).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateInfo {
    pub order: usize,
    pub estimate: f64,
    pub margin: f64,
    /// estimate + margin, the delta used for the constants when gating passes
    pub delta_used: f64,
    pub threshold: f64,
    pub passed: bool,
    pub samples: usize,
}

/// The shared per-campaign state.
pub struct CampaignContext {
    pub ensemble: MeasurementEnsemble,
    pub ric: RicEstimate,
    pub gate: GateInfo,
}

impl CampaignContext {
    pub fn build(cfg: &ExperimentConfig, opts: &RunOptions, ensemble_seed: u64) -> Result<Self> {
        cfg.validate()?;
        let ensemble = match &cfg.ensemble_kind {
            EnsembleKind::Gaussian => gen_gaussian_ensemble(cfg.m, cfg.n1, cfg.n2, ensemble_seed)?,
            EnsembleKind::Coordinate => MeasurementEnsemble::coordinate(cfg.n1, cfg.n2),
            EnsembleKind::CustomPath(p) => {
                let ens = fileio::read_ensemble(p)?;
                if ens.m() != cfg.m || ens.n1() != cfg.n1 || ens.n2() != cfg.n2 {
                    return Err(Error::invalid(
                        "config",
                        format!(
                            "custom ensemble is {}x{}x{}, config says {}x{}x{}",
                            ens.m(),
                            ens.n1(),
                            ens.n2(),
                            cfg.m,
                            cfg.n1,
                            cfg.n2
                        ),
                    ));
                }
                ens
            }
        };
        // RIP order ceil(t*k); ranks cannot exceed the matrix dimensions
        let order = ((cfg.t * cfg.k as f64).ceil() as usize).min(cfg.n1.min(cfg.n2));
        let ric = mc_matrix_ric(
            &ensemble,
            order,
            opts.gate_samples,
            hash64(cfg.seed, TAG_GATE),
        )?;
        let threshold = rip_threshold(cfg.t)?;
        let delta_used = ric.value + GATE_MARGIN;
        let gate = GateInfo {
            order,
            estimate: ric.value,
            margin: GATE_MARGIN,
            delta_used,
            threshold,
            passed: delta_used < threshold,
            samples: opts.gate_samples,
        };
        Ok(Self { ensemble, ric, gate })
    }
}

/// Run a single trial with the campaign's shared-ensemble scheme. Pure given
/// (config, trial_index).
pub fn run_trial(cfg: &ExperimentConfig, trial_index: u64) -> Result<TrialRecord> {
    let ctx = CampaignContext::build(
        cfg,
        &RunOptions::default(),
        hash64(cfg.seed, TAG_ENSEMBLE),
    )?;
    Ok(run_trial_in(cfg, &ctx, &RunOptions::default(), trial_index))
}

/// Trial body. Solver failures are folded into the record, not raised.
pub fn run_trial_in(
    cfg: &ExperimentConfig,
    ctx: &CampaignContext,
    opts: &RunOptions,
    trial_index: u64,
) -> TrialRecord {
    let trial_seed = hash64(cfg.seed, trial_index);
    match trial_body(cfg, ctx, opts, trial_seed) {
        Ok(rec) => rec,
        Err(_) => TrialRecord {
            trial_seed,
            frob_error: f64::NAN,
            map_error: f64::NAN,
            tail_norm: f64::NAN,
            lemma3_pass: false,
            thm1_8_lhs: None,
            thm1_8_rhs: None,
            thm1_9_lhs: None,
            thm1_9_rhs: None,
            gate_status: GateStatus::PreconditionUnmet,
            iterations: 0,
            converged: false,
        },
    }
}

fn trial_body(
    cfg: &ExperimentConfig,
    ctx: &CampaignContext,
    opts: &RunOptions,
    trial_seed: u64,
) -> Result<TrialRecord> {
    let truth = gen_low_rank(cfg.n1, cfg.n2, cfg.rank, hash64(trial_seed, TAG_TRUTH))?;
    let noise = gen_noise(
        ctx.ensemble.m(),
        cfg.epsilon,
        cfg.noise_kind,
        hash64(trial_seed, TAG_NOISE),
    )?;
    let b: Vec<f64> = ctx
        .ensemble
        .apply(&truth)?
        .iter()
        .zip(&noise)
        .map(|(a, n)| a + n)
        .collect();
    let mut problem = RecoveryProblem::new(ctx.ensemble.clone(), b, cfg.lambda, cfg.epsilon)?;
    problem.set_truth(truth.clone())?;
    problem.set_noise(noise)?;

    let result = solve_rnnm(&problem, &opts.solver)?;
    let h = result.solution.sub(&truth)?;
    let frob_error = h.fro_norm();
    let map_error = norm2(&ctx.ensemble.apply(&h)?);
    let tail_norm: f64 = svd(&truth)?
        .singular_values
        .iter()
        .skip(cfg.k)
        .sum();

    let lemma3 = check_lemma3(&problem, &result.solution, cfg.k)?;

    let (gate_status, s8, r8, s9, r9) = if ctx.gate.passed {
        let params = TheoryParams::new(
            cfg.t,
            cfg.k,
            ctx.gate.delta_used,
            cfg.lambda,
            cfg.epsilon,
        )?;
        let report = verify_theorem1(&problem, &result.solution, &params)?;
        (
            report.status.clone(),
            report.lhs8,
            report.rhs8,
            report.lhs9,
            report.rhs9,
        )
    } else {
        (GateStatus::PreconditionUnmet, None, None, None, None)
    };

    Ok(TrialRecord {
        trial_seed,
        frob_error,
        map_error,
        tail_norm,
        lemma3_pass: lemma3.pass(),
        thm1_8_lhs: s8,
        thm1_8_rhs: r8,
        thm1_9_lhs: s9,
        thm1_9_rhs: r9,
        gate_status,
        iterations: result.iterations,
        converged: result.converged,
    })
}

/// Campaign aggregates; written as the summary JSON next to the trial CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub version: String,
    pub config: ExperimentConfig,
    pub gate: GateInfo,
    pub trials: usize,
    pub converged_count: usize,
    pub lemma3_pass_count: usize,
    pub gated_count: usize,
    pub thm1_pass_count: usize,
    pub precondition_unmet_count: usize,
    pub solver_failure_count: usize,
    pub frob_error_min: f64,
    pub frob_error_median: f64,
    pub frob_error_max: f64,
    pub map_error_max: f64,
    pub iterations_max: usize,
}

pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub summary: ExperimentSummary,
}

/// Run every trial of a campaign. Trials execute on up to `opts.threads`
/// workers; records are ordered by trial index regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let shared_ctx = if opts.per_trial_ensembles {
        None
    } else {
        Some(CampaignContext::build(
            cfg,
            opts,
            hash64(cfg.seed, TAG_ENSEMBLE),
        )?)
    };

    let run_one = |idx: usize| -> TrialRecord {
        let trial_index = idx as u64;
        match &shared_ctx {
            Some(ctx) => run_trial_in(cfg, ctx, opts, trial_index),
            None => {
                let trial_seed = hash64(cfg.seed, trial_index);
                match CampaignContext::build(cfg, opts, hash64(trial_seed, TAG_ENSEMBLE)) {
                    Ok(ctx) => run_trial_in(cfg, &ctx, opts, trial_index),
                    Err(_) => run_failure_record(cfg, trial_index),
                }
            }
        }
    };

    let records = indexed_parallel(cfg.trials, opts.threads.max(1), &run_one);

    // the summary's gate block describes the shared gate, or the first
    // trial's gate when ensembles are per-trial
    let gate = match &shared_ctx {
        Some(ctx) => ctx.gate.clone(),
        None => {
            let trial_seed = hash64(cfg.seed, 0);
            CampaignContext::build(cfg, opts, hash64(trial_seed, TAG_ENSEMBLE))?
                .gate
                .clone()
        }
    };

    let summary = summarize(cfg, gate, &records);
    Ok(ExperimentOutput { records, summary })
}

fn run_failure_record(cfg: &ExperimentConfig, trial_index: u64) -> TrialRecord {
    TrialRecord {
        trial_seed: hash64(cfg.seed, trial_index),
        frob_error: f64::NAN,
        map_error: f64::NAN,
        tail_norm: f64::NAN,
        lemma3_pass: false,
        thm1_8_lhs: None,
        thm1_8_rhs: None,
        thm1_9_lhs: None,
        thm1_9_rhs: None,
        gate_status: GateStatus::PreconditionUnmet,
        iterations: 0,
        converged: false,
    }
}

fn summarize(cfg: &ExperimentConfig, gate: GateInfo, records: &[TrialRecord]) -> ExperimentSummary {
    let mut frob: Vec<f64> = records
        .iter()
        .map(|r| r.frob_error)
        .filter(|v| v.is_finite())
        .collect();
    frob.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if frob.is_empty() {
        f64::NAN
    } else {
        frob[frob.len() / 2]
    };
    let thm1_pass = records
        .iter()
        .filter(|r| {
            r.gate_status == GateStatus::Verified
                && bound_holds(r.thm1_8_lhs, r.thm1_8_rhs)
                && bound_holds(r.thm1_9_lhs, r.thm1_9_rhs)
        })
        .count();
    ExperimentSummary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        gate,
        trials: records.len(),
        converged_count: records.iter().filter(|r| r.converged).count(),
        lemma3_pass_count: records.iter().filter(|r| r.lemma3_pass).count(),
        gated_count: records
            .iter()
            .filter(|r| r.gate_status == GateStatus::Verified)
            .count(),
        thm1_pass_count: thm1_pass,
        precondition_unmet_count: records
            .iter()
            .filter(|r| r.gate_status == GateStatus::PreconditionUnmet)
            .count(),
        solver_failure_count: records
            .iter()
            .filter(|r| !r.frob_error.is_finite())
            .count(),
        frob_error_min: frob.first().copied().unwrap_or(f64::NAN),
        frob_error_median: median,
        frob_error_max: frob.last().copied().unwrap_or(f64::NAN),
        map_error_max: records
            .iter()
            .map(|r| r.map_error)
            .filter(|v| v.is_finite())
            .fold(f64::NAN, f64::max),
        iterations_max: records.iter().map(|r| r.iterations).max().unwrap_or(0),
    }
}

/// The tolerance used when a summary re-checks recorded bound sides; matches
/// the checker's own slack.
pub fn bound_holds(lhs: Option<f64>, rhs: Option<f64>) -> bool {
    match (lhs, rhs) {
        (Some(l), Some(r)) => l <= r + 1e-8 + 1e-8 * l.abs().max(r.abs()),
        _ => false,
    }
}

/// Write records as CSV: one header row, one row per trial, columns exactly
/// the record fields in declared order.
pub fn write_trials_csv(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut out = String::with_capacity(records.len() * 128);
    out.push_str(TRIAL_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

pub fn write_summary_json(path: &Path, summary: &ExperimentSummary) -> Result<()> {
    std::fs::write(path, fileio::to_pretty_json(summary)?)?;
    Ok(())
}

/// Evaluate `f` for indices 0..n on up to `threads` workers, returning
/// results in index order. Each slot depends only on its index, so the
/// output is independent of scheduling.
fn indexed_parallel<T: Send>(
    n: usize,
    threads: usize,
    f: &(impl Fn(usize) -> T + Sync),
) -> Vec<T> {
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let threads = threads.min(n);
    let chunk = n.div_ceil(threads);
    let mut chunks: Vec<Vec<T>> = Vec::with_capacity(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                let lo = w * chunk;
                let hi = ((w + 1) * chunk).min(n);
                scope.spawn(move || (lo..hi).map(f).collect::<Vec<T>>())
            })
            .collect();
        for h in handles {
            chunks.push(h.join().expect("trial worker panicked"));
        }
    });
    chunks.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::NoiseKind;

    fn coordinate_cfg(trials: usize, lambda: f64) -> ExperimentConfig {
        ExperimentConfig {
            n1: 4,
            n2: 4,
            m: 16,
            rank: 1,
            k: 1,
            t: 2.0,
            lambda,
            epsilon: lambda / 2.0,
            ensemble_kind: EnsembleKind::Coordinate,
            noise_kind: NoiseKind::SphereUniformAtEps,
            trials,
            seed: 2024,
        }
    }

    #[test]
    fn single_trial_matches_experiment() {
        let cfg = coordinate_cfg(3, 0.1);
        let solo = run_trial(&cfg, 1).unwrap();
        let out = run_experiment(&cfg, &RunOptions::default()).unwrap();
        assert_eq!(out.records.len(), 3);
        assert_eq!(solo.csv_row(), out.records[1].csv_row());
    }

    #[test]
    fn coordinate_campaign_is_gated_and_passes() {
        let cfg = coordinate_cfg(6, 0.1);
        let out = run_experiment(&cfg, &RunOptions::default()).unwrap();
        assert!(out.summary.gate.passed, "coordinate gate must pass");
        assert_eq!(out.summary.gated_count, 6);
        assert_eq!(out.summary.thm1_pass_count, 6);
        assert_eq!(out.summary.lemma3_pass_count, 6);
        assert_eq!(out.summary.converged_count, 6);
        for r in &out.records {
            assert_eq!(r.gate_status, GateStatus::Verified);
            assert!(r.thm1_8_lhs.unwrap() <= r.thm1_8_rhs.unwrap());
            assert!(r.thm1_9_lhs.unwrap() <= r.thm1_9_rhs.unwrap());
        }
    }

    #[test]
    fn small_noiseless_error_scales_with_lambda() {
        // coordinate ensemble, noiseless: the solve is a closed-form
        // shrinkage, so the error is at most sqrt(rank) * lambda
        let mut cfg = coordinate_cfg(4, 1e-3);
        cfg.noise_kind = NoiseKind::None;
        cfg.epsilon = 0.0;
        let out = run_experiment(&cfg, &RunOptions::default()).unwrap();
        for r in &out.records {
            assert!(r.converged);
            assert!(r.frob_error <= 2.0 * 1e-3, "error {}", r.frob_error);
            assert!(r.lemma3_pass);
        }
    }

    #[test]
    fn gaussian_gate_fails_but_trials_report_unmet() {
        let cfg = ExperimentConfig {
            n1: 5,
            n2: 5,
            m: 18,
            rank: 1,
            k: 1,
            t: 2.0,
            lambda: 0.1,
            epsilon: 0.05,
            ensemble_kind: EnsembleKind::Gaussian,
            noise_kind: NoiseKind::SphereUniformAtEps,
            trials: 4,
            seed: 7,
        };
        let opts = RunOptions {
            gate_samples: 2000,
            ..RunOptions::default()
        };
        let out = run_experiment(&cfg, &opts).unwrap();
        assert!(!out.summary.gate.passed);
        for r in &out.records {
            assert_eq!(r.gate_status, GateStatus::PreconditionUnmet);
            assert!(r.thm1_8_lhs.is_none());
            assert!(r.converged, "solver should converge");
            assert!(r.lemma3_pass, "solution inequality must hold");
        }
    }

    #[test]
    fn deterministic_output_and_thread_independence() {
        let cfg = coordinate_cfg(8, 0.05);
        let a = run_experiment(&cfg, &RunOptions::default()).unwrap();
        let b = run_experiment(&cfg, &RunOptions::default()).unwrap();
        let threaded = run_experiment(
            &cfg,
            &RunOptions {
                threads: 4,
                ..RunOptions::default()
            },
        )
        .unwrap();
        let rows =
            |o: &ExperimentOutput| o.records.iter().map(|r| r.csv_row()).collect::<Vec<_>>();
        assert_eq!(rows(&a), rows(&b));
        assert_eq!(rows(&a), rows(&threaded));
    }

    #[test]
    fn csv_files_identical_across_runs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = coordinate_cfg(5, 0.1);
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        for (path, _) in [(&p1, 0), (&p2, 1)] {
            let out = run_experiment(&cfg, &RunOptions::default()).unwrap();
            write_trials_csv(path, &out.records).unwrap();
        }
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn per_trial_ensembles_differ_from_shared() {
        let mut cfg = coordinate_cfg(3, 0.1);
        cfg.ensemble_kind = EnsembleKind::Gaussian;
        let shared = run_experiment(&cfg, &RunOptions::default()).unwrap();
        let fresh = run_experiment(
            &cfg,
            &RunOptions {
                per_trial_ensembles: true,
                gate_samples: 500,
                ..RunOptions::default()
            },
        )
        .unwrap();
        let same: Vec<_> = shared
            .records
            .iter()
            .zip(&fresh.records)
            .filter(|(a, b)| a.frob_error == b.frob_error)
            .collect();
        assert!(same.len() < shared.records.len());
    }
}
