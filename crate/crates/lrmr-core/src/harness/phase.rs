//! Phase sweeps: recovery success fraction over a grid of (m, rank) or
//! (lambda, epsilon) cells around a base configuration.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::runner::{run_experiment, ExperimentOutput, RunOptions};
use crate::harness::seeding::hash64;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseGrid {
    MRank {
        m: Vec<usize>,
        rank: Vec<usize>,
    },
    LambdaEpsilon {
        lambda: Vec<f64>,
        epsilon: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub base: ExperimentConfig,
    pub grid: PhaseGrid,
    /// A trial succeeds when frob_error <= this threshold.
    #[serde(default = "default_success_threshold")]
    pub success_threshold: f64,
}

fn default_success_threshold() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseCell {
    pub m: usize,
    pub rank: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_fraction: f64,
    pub median_frob_error: f64,
}

pub const PHASE_CSV_HEADER: &str =
    "m,rank,lambda,epsilon,trials,successes,success_fraction,median_frob_error";

impl PhaseCell {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.m,
            self.rank,
            self.lambda,
            self.epsilon,
            self.trials,
            self.successes,
            self.success_fraction,
            self.median_frob_error
        )
    }
}

/// Run one campaign per grid cell. Cell seeds derive from the base seed and
/// the cell index, so a sweep is reproducible as a whole and per cell.
pub fn phase_sweep(cfg: &PhaseConfig, opts: &RunOptions) -> Result<Vec<PhaseCell>> {
    let mut cells = Vec::new();
    let combos: Vec<ExperimentConfig> = match &cfg.grid {
        PhaseGrid::MRank { m, rank } => {
            let mut v = Vec::new();
            for &mi in m {
                for &ri in rank {
                    let mut c = cfg.base.clone();
                    c.m = mi;
                    c.rank = ri;
                    c.k = ri.min(c.k.max(1)).max(1);
                    v.push(c);
                }
            }
            v
        }
        PhaseGrid::LambdaEpsilon { lambda, epsilon } => {
            let mut v = Vec::new();
            for &li in lambda {
                for &ei in epsilon {
                    let mut c = cfg.base.clone();
                    c.lambda = li;
                    c.epsilon = ei;
                    v.push(c);
                }
            }
            v
        }
    };

    for (idx, mut cell_cfg) in combos.into_iter().enumerate() {
        cell_cfg.seed = hash64(cfg.base.seed, idx as u64);
        let out = run_experiment(&cell_cfg, opts)?;
        cells.push(to_cell(&cell_cfg, &out, cfg.success_threshold));
    }
    Ok(cells)
}

fn to_cell(cfg: &ExperimentConfig, out: &ExperimentOutput, threshold: f64) -> PhaseCell {
    let successes = out
        .records
        .iter()
        .filter(|r| r.frob_error.is_finite() && r.frob_error <= threshold)
        .count();
    PhaseCell {
        m: cfg.m,
        rank: cfg.rank,
        lambda: cfg.lambda,
        epsilon: cfg.epsilon,
        trials: out.records.len(),
        successes,
        success_fraction: successes as f64 / out.records.len().max(1) as f64,
        median_frob_error: out.summary.frob_error_median,
    }
}

pub fn write_phase_csv(path: &Path, cells: &[PhaseCell]) -> Result<()> {
    let mut out = String::new();
    out.push_str(PHASE_CSV_HEADER);
    out.push('\n');
    for c in cells {
        out.push_str(&c.csv_row());
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}
