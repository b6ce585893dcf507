//! Seeded problem generation and verification campaigns: per-trial solves
//! with solution-inequality checks and RIC-gated recovery-bound assertions,
//! plus phase sweeps over measurement count, rank, and regularization.

mod config;
mod gen;
mod phase;
mod runner;
mod seeding;

pub use config::{EnsembleKind, ExperimentConfig, NoiseKind};
pub use gen::{gen_gaussian_ensemble, gen_low_rank, gen_noise};
pub use phase::{
    phase_sweep, write_phase_csv, PhaseCell, PhaseConfig, PhaseGrid, PHASE_CSV_HEADER,
};
pub use runner::{
    bound_holds, run_experiment, run_trial, run_trial_in, write_summary_json, write_trials_csv,
    CampaignContext, ExperimentOutput, ExperimentSummary, GateInfo, RunOptions, TrialRecord,
    GATE_MARGIN, TRIAL_CSV_HEADER,
};
pub use seeding::hash64;
