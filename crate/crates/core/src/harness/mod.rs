//! Budgeted, simulated pipeline search over reduced spaces, and the
//! statistics that compare strategies across runs and datasets.
//!
//! A [`ResponseModel`] stands in for really training pipelines: it returns a
//! per-fold error and charges a cost. Two are built in, a synthetic
//! [`SurrogateSurface`] and a [`ReplayModel`] that resamples a meta-knowledge
//! base. [`run_matrix`] executes every (strategy, dataset, run) cell in
//! parallel; each cell owns a generator seeded from its key, so results do
//! not depend on scheduling.

mod nemenyi;
mod report;
mod search;
mod spaces;
mod surface;

use serde::Serialize;

use crate::config_space::Pipeline;
use crate::meta_store::DEFAULT_FOLDS;

pub use nemenyi::{nemenyi_cd, nemenyi_test, studentized_range_q, NemenyiResult, SignificantPair};
pub use report::{
    aggregate_report, consistency, rank_strategies, strategy_cells, write_aggregate_csv, write_consistency_csv,
    write_runs_csv, write_strategy_ranks_csv, AggregateRow, FailurePolicy, StrategyCell, StrategyRank,
};
pub use search::{cell_seed, run_constrained_search, run_matrix, SearchSettings};
pub use spaces::{prior_best_pipeline, StrategySpaces};
pub use surface::{
    Candidate, CellSurface, FoldResult, PreprocessorSurface, ReplayModel, ResponseModel, SurfaceManifest,
    SurrogateSurface,
};

pub const DEFAULT_RUNS: usize = 5;

/// Abstract cost units available to one search run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchBudget {
    pub total_cost: f64,
    /// Charged up front, e.g. the landmarkers' evaluation time.
    pub landmark_deduction: f64,
    pub runs_per_strategy: usize,
    pub folds: usize,
}

impl SearchBudget {
    pub fn new(total_cost: f64) -> Self {
        Self { total_cost, landmark_deduction: 0.0, runs_per_strategy: DEFAULT_RUNS, folds: DEFAULT_FOLDS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub strategy_label: String,
    pub dataset_id: String,
    pub run_index: usize,
    pub status: RunStatus,
    /// Fold errors of the best fully evaluated pipeline; present iff completed.
    pub best_cv: Option<Vec<f64>>,
    pub best_pipeline: Option<Pipeline>,
    pub cost_spent: f64,
}

impl RunOutcome {
    pub fn is_completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    /// Mean of the best CV vector; `None` for a failed run.
    pub fn mean_cv_error(&self) -> Option<f64> {
        self.best_cv.as_ref().map(|cv| cv.iter().sum::<f64>() / cv.len() as f64)
    }
}
