//! Neural mutual-information estimators: critics, variational bounds, a
//! training loop with max-test reporting, and finite-data reliability checks.

mod critic;
mod objective;
mod sweep;
mod train;

pub use critic::{Critic, CriticKind, CriticSpec, CriticTape, PairCritic, PairTape};
pub use objective::{
    clipped_dv, infonce_objective, mine_objective, smile_objective, Objective, ObjectiveKind, ObjectiveOutput,
};
pub use train::{
    evaluate, split_indices, summarize_levels, train_estimator, DataSource, EstimatorConfig, LevelSummary,
    RunRecord, StaircaseSpec,
};
pub use sweep::{
    embedding_sweep, guidelines_protocol, is_saturated, linear_mi_curve, mean_std, CellSummary, GuidelinesConfig,
    GuidelinesReport, LinearPoint, SweepRow, SweepTable, Verdict,
};
