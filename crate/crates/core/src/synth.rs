//! Planted sample: two small meta-knowledge bases, a roster and a surrogate
//! surface whose rankings, neighbours and leaderboard are known by construction.
//!
//! Eight predictors `P0..P7` (`P7` is a meta-predictor) and five datasets
//! `d1..d5`. On each dataset the mean error of the predictor at position `i`
//! of the planted order is `offset + step * i`. Landmark neighbours are
//! `d1 <-> d2`, `d3 <-> d4` and `d5 -> d1`. The cell `(d5, P7)` only has
//! failed evaluations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config_space::{ComponentSpec, Roster};
use crate::error::Result;
use crate::harness::{CellSurface, PreprocessorSurface, SurfaceManifest};
use crate::meta_store::{EvaluationRecord, Flavor, IngestOptions, MetaKnowledgeBase, Status};

pub const PREDICTORS: [&str; 8] = ["P0", "P1", "P2", "P3", "P4", "P5", "P6", "P7"];
pub const PREPROCESSORS: [&str; 2] = ["F0", "F1"];
pub const DATASETS: [&str; 5] = ["d1", "d2", "d3", "d4", "d5"];

const ORDERS: [[usize; 8]; 5] = [
    [5, 6, 0, 1, 2, 3, 4, 7],
    [6, 5, 0, 1, 3, 2, 4, 7],
    [4, 3, 5, 2, 1, 0, 6, 7],
    [3, 4, 2, 5, 1, 0, 7, 6],
    [2, 5, 0, 4, 1, 3, 6, 7],
];
const OFFSETS: [f64; 5] = [0.05, 0.10, 0.20, 0.04, 0.08];
const STEPS: [f64; 5] = [0.08, 0.07, 0.05, 0.09, 0.06];
/// Per-evaluation time of each predictor in a single-component pipeline.
const COSTS: [f64; 8] = [0.5, 0.8, 1.1, 1.4, 1.7, 6.0, 9.0, 15.0];
const DEFAULT_PENALTY_SHIFT: f64 = 0.03;
const FOLDS: usize = 10;
const FAILED: (usize, usize) = (4, 7);

pub const AUTOML_BASE: &str = "automl";
pub const DEFAULT_BASE: &str = "default";
/// Search budget under which the planted surface separates oracle, leaderboard,
/// random and baseline spaces.
pub const PLANTED_BUDGET: f64 = 3000.0;

/// Ground truth the sample was generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedManifest {
    /// Best to worst, per dataset, in the automl base.
    pub orders: BTreeMap<String, Vec<String>>,
    pub means: BTreeMap<String, BTreeMap<String, f64>>,
    /// Ok evaluations per (dataset, predictor) in the automl base.
    pub evaluation_counts: BTreeMap<String, BTreeMap<String, usize>>,
    pub leaderboard: Vec<String>,
    pub neighbours: BTreeMap<String, String>,
    pub landmarkers: Vec<String>,
    /// Landmark cost of every dataset.
    pub landmark_cost: f64,
    pub penalty_cells: Vec<(String, String)>,
    /// Datasets whose default-base order is the reverse of the automl order.
    pub reversed_in_default: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PlantedSample {
    pub roster: Roster,
    pub automl_records: Vec<EvaluationRecord>,
    pub default_records: Vec<EvaluationRecord>,
    pub surface: SurfaceManifest,
    pub manifest: PlantedManifest,
}

fn ids(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn planted_mean(d: usize, p: usize) -> f64 {
    let pos = ORDERS[d].iter().position(|&q| q == p).expect("every predictor is ordered");
    OFFSETS[d] + STEPS[d] * pos as f64
}

fn pairs(d: usize, p: usize) -> usize {
    2 + (3 * d + p) % 5
}

fn record(base: &str, d: usize, p: usize, pipeline: Vec<String>, config: String, fold: usize, error: Option<f64>, time: f64) -> EvaluationRecord {
    EvaluationRecord {
        base_id: base.to_string(),
        dataset_id: DATASETS[d].to_string(),
        predictor_id: PREDICTORS[p].to_string(),
        pipeline,
        config_id: config,
        fold_index: fold,
        error_rate: error,
        eval_time_s: time,
        status: if error.is_some() { Status::Ok } else { Status::Failed },
    }
}

fn automl_records() -> Vec<EvaluationRecord> {
    let mut out = Vec::new();
    for d in 0..DATASETS.len() {
        for p in 0..PREDICTORS.len() {
            let single = vec![PREDICTORS[p].to_string()];
            for j in 1..=pairs(d, p) {
                let multi = vec![PREPROCESSORS[j % 2].to_string(), PREDICTORS[p].to_string()];
                if (d, p) == FAILED {
                    out.push(record(AUTOML_BASE, d, p, single.clone(), format!("s{j}"), 0, None, COSTS[p] + 0.1));
                    continue;
                }
                let delta = 0.003 * j as f64;
                let mean = planted_mean(d, p);
                out.push(record(AUTOML_BASE, d, p, single.clone(), format!("s{j}"), 0, Some(mean + delta), COSTS[p]));
                out.push(record(AUTOML_BASE, d, p, multi, format!("m{j}"), 0, Some(mean - delta), COSTS[p] + 0.2));
            }
        }
    }
    out
}

fn default_records(reversed: usize) -> Vec<EvaluationRecord> {
    let mut out = Vec::new();
    for d in 0..DATASETS.len() {
        for p in 0..PREDICTORS.len() {
            let mean = if d == reversed {
                let pos = ORDERS[d].iter().position(|&q| q == p).expect("ordered");
                OFFSETS[d] + STEPS[d] * (7 - pos) as f64
            } else {
                planted_mean(d, p)
            } + DEFAULT_PENALTY_SHIFT;
            for f in 0..FOLDS {
                let error = if (d, p) == FAILED { None } else { Some(mean + 0.002 * (f as f64 - 4.5)) };
                out.push(record(DEFAULT_BASE, d, p, vec![PREDICTORS[p].to_string()], "default".into(), f, error, COSTS[p]));
            }
        }
    }
    out
}

fn surface() -> SurfaceManifest {
    let mut cells = Vec::new();
    for d in 0..DATASETS.len() {
        for p in 0..PREDICTORS.len() {
            if (d, p) == FAILED {
                continue;
            }
            let c1 = 0.2 + 0.6 * (((7 * d + 3 * p) % 11) as f64 / 10.0);
            let c2 = 0.2 + 0.6 * (((5 * d + 7 * p) % 11) as f64 / 10.0);
            cells.push(CellSurface {
                dataset: DATASETS[d].to_string(),
                predictor: PREDICTORS[p].to_string(),
                base_error: planted_mean(d, p),
                noise_sigma: 0.01,
                fold_cost: COSTS[p],
                bowl_center: vec![c1, c2],
                bowl_curvature: 0.3,
            });
        }
    }
    SurfaceManifest {
        dims: 2,
        invalid_fraction: 0.9,
        invalid_cost: 40.0,
        failure_cost: 1.0,
        preprocessors: vec![
            PreprocessorSurface { id: "F0".into(), error_shift: 0.02, cost_per_fold: 0.2 },
            PreprocessorSurface { id: "F1".into(), error_shift: 0.04, cost_per_fold: 0.3 },
        ],
        cells,
    }
}

pub fn planted_sample() -> PlantedSample {
    let mut predictors: Vec<ComponentSpec> = PREDICTORS[..7].iter().map(|p| ComponentSpec::predictor(*p)).collect();
    predictors.push(ComponentSpec::meta_predictor("P7"));
    let roster = Roster { predictors, preprocessors: ids(&PREPROCESSORS), datasets: ids(&DATASETS) };

    let mut orders = BTreeMap::new();
    let mut means = BTreeMap::new();
    let mut counts = BTreeMap::new();
    for d in 0..DATASETS.len() {
        orders.insert(DATASETS[d].to_string(), ORDERS[d].iter().map(|&p| PREDICTORS[p].to_string()).collect());
        let mut row = BTreeMap::new();
        let mut count = BTreeMap::new();
        for p in 0..PREDICTORS.len() {
            let failed = (d, p) == FAILED;
            row.insert(PREDICTORS[p].to_string(), if failed { 1.0 } else { planted_mean(d, p) });
            count.insert(PREDICTORS[p].to_string(), if failed { 0 } else { 2 * pairs(d, p) });
        }
        means.insert(DATASETS[d].to_string(), row);
        counts.insert(DATASETS[d].to_string(), count);
    }
    let neighbours = [("d1", "d2"), ("d2", "d1"), ("d3", "d4"), ("d4", "d3"), ("d5", "d1")]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    let reversed = 2;

    PlantedSample {
        roster,
        automl_records: automl_records(),
        default_records: default_records(reversed),
        surface: surface(),
        manifest: PlantedManifest {
            orders,
            means,
            evaluation_counts: counts,
            leaderboard: ids(&["P5", "P2", "P3", "P0", "P4", "P1", "P6", "P7"]),
            neighbours,
            landmarkers: ids(&PREDICTORS[..5]),
            // Five cheapest predictors, mean record time c + 0.1, ten folds each.
            landmark_cost: (COSTS[..5].iter().sum::<f64>() + 0.5) * FOLDS as f64,
            penalty_cells: vec![(DATASETS[FAILED.0].to_string(), PREDICTORS[FAILED.1].to_string())],
            reversed_in_default: vec![DATASETS[reversed].to_string()],
        },
    }
}

impl PlantedSample {
    pub fn automl_base(&self) -> Result<MetaKnowledgeBase> {
        let options = IngestOptions {
            base_id: Some(AUTOML_BASE.into()),
            roster: Some(self.roster.clone()),
            ..IngestOptions::default()
        };
        MetaKnowledgeBase::from_records(self.automl_records.clone(), &options)
    }

    pub fn default_base(&self) -> Result<MetaKnowledgeBase> {
        let options = IngestOptions {
            base_id: Some(DEFAULT_BASE.into()),
            flavor: Flavor::Systematic,
            roster: Some(self.roster.clone()),
            ..IngestOptions::default()
        };
        MetaKnowledgeBase::from_records(self.default_records.clone(), &options)
    }
}
