use std::collections::HashMap;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meta_store::MetaKnowledgeBase;

/// A concrete proposal: preprocessors in order, the final predictor and its
/// hyperparameters scaled to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub preprocessors: Vec<String>,
    pub predictor: String,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldResult {
    /// `None` when the evaluation crashed.
    pub error: Option<f64>,
    pub cost: f64,
}

/// What a search can ask of the world.
pub trait ResponseModel: Sync {
    /// Hyperparameter dimensions of a predictor.
    fn dims(&self) -> usize;
    fn preprocessors(&self) -> &[String];
    /// Share of proposals that turn out to be invalid pipelines.
    fn invalid_fraction(&self) -> f64;
    /// Cost of evaluating an invalid pipeline without validity filtering.
    fn invalid_cost(&self) -> f64;
    fn evaluate_fold(&self, dataset: &str, candidate: &Candidate, fold: usize, rng: &mut dyn RngCore) -> FoldResult;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessorSurface {
    pub id: String,
    #[serde(default)]
    pub error_shift: f64,
    #[serde(default)]
    pub cost_per_fold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSurface {
    pub dataset: String,
    pub predictor: String,
    pub base_error: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    pub fold_cost: f64,
    #[serde(default)]
    pub bowl_center: Vec<f64>,
    #[serde(default)]
    pub bowl_curvature: f64,
}

/// JSON surface manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceManifest {
    #[serde(default = "default_dims")]
    pub dims: usize,
    #[serde(default)]
    pub invalid_fraction: f64,
    #[serde(default)]
    pub invalid_cost: f64,
    /// Charged per fold for a (dataset, predictor) the surface does not declare.
    #[serde(default = "default_failure_cost")]
    pub failure_cost: f64,
    #[serde(default)]
    pub preprocessors: Vec<PreprocessorSurface>,
    pub cells: Vec<CellSurface>,
}

fn default_dims() -> usize {
    2
}

fn default_failure_cost() -> f64 {
    1.0
}

/// Synthetic response surface: per cell a base error, a quadratic bowl over
/// the hyperparameters and Gaussian fold noise.
#[derive(Debug, Clone)]
pub struct SurrogateSurface {
    manifest: SurfaceManifest,
    preprocessor_ids: Vec<String>,
    cells: HashMap<(String, String), usize>,
    shifts: HashMap<String, (f64, f64)>,
}

impl SurrogateSurface {
    pub fn new(manifest: SurfaceManifest) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidSurface(msg));
        if manifest.dims == 0 {
            return bad("dims must be positive".into());
        }
        if !(0.0..1.0).contains(&manifest.invalid_fraction) {
            return bad(format!("invalid_fraction {} outside [0, 1)", manifest.invalid_fraction));
        }
        if manifest.invalid_cost < 0.0 || manifest.failure_cost < 0.0 {
            return bad("costs must be non-negative".into());
        }
        let mut cells = HashMap::new();
        for (i, c) in manifest.cells.iter().enumerate() {
            if !(0.0..=1.0).contains(&c.base_error) || c.noise_sigma < 0.0 || c.fold_cost < 0.0 || c.bowl_curvature < 0.0 {
                return bad(format!("cell ({}, {}) has out-of-range parameters", c.dataset, c.predictor));
            }
            if !c.bowl_center.is_empty() && c.bowl_center.len() != manifest.dims {
                return bad(format!("cell ({}, {}) bowl centre has wrong dimension", c.dataset, c.predictor));
            }
            if cells.insert((c.dataset.clone(), c.predictor.clone()), i).is_some() {
                return bad(format!("duplicate cell ({}, {})", c.dataset, c.predictor));
            }
        }
        let mut shifts = HashMap::new();
        for p in &manifest.preprocessors {
            if p.cost_per_fold < 0.0 {
                return bad(format!("preprocessor `{}` has negative cost", p.id));
            }
            shifts.insert(p.id.clone(), (p.error_shift, p.cost_per_fold));
        }
        let preprocessor_ids = manifest.preprocessors.iter().map(|p| p.id.clone()).collect();
        Ok(Self { manifest, preprocessor_ids, cells, shifts })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn manifest(&self) -> &SurfaceManifest {
        &self.manifest
    }

    pub fn cell(&self, dataset: &str, predictor: &str) -> Option<&CellSurface> {
        self.cells.get(&(dataset.to_string(), predictor.to_string())).map(|&i| &self.manifest.cells[i])
    }

    /// Noise-free error of a candidate.
    pub fn expected_error(&self, dataset: &str, candidate: &Candidate) -> Option<f64> {
        let cell = self.cell(dataset, &candidate.predictor)?;
        let bowl: f64 = cell
            .bowl_center
            .iter()
            .zip(&candidate.params)
            .map(|(c, x)| (x - c) * (x - c))
            .sum::<f64>()
            * cell.bowl_curvature;
        let shift: f64 = candidate.preprocessors.iter().filter_map(|p| self.shifts.get(p)).map(|s| s.0).sum();
        Some(cell.base_error + bowl + shift)
    }
}

impl ResponseModel for SurrogateSurface {
    fn dims(&self) -> usize {
        self.manifest.dims
    }

    fn preprocessors(&self) -> &[String] {
        &self.preprocessor_ids
    }

    fn invalid_fraction(&self) -> f64 {
        self.manifest.invalid_fraction
    }

    fn invalid_cost(&self) -> f64 {
        self.manifest.invalid_cost
    }

    fn evaluate_fold(&self, dataset: &str, candidate: &Candidate, _fold: usize, rng: &mut dyn RngCore) -> FoldResult {
        let Some(cell) = self.cell(dataset, &candidate.predictor) else {
            return FoldResult { error: None, cost: self.manifest.failure_cost };
        };
        let pre_cost: f64 = candidate.preprocessors.iter().filter_map(|p| self.shifts.get(p)).map(|s| s.1).sum();
        let mean = self.expected_error(dataset, candidate).expect("cell exists");
        let noise = if cell.noise_sigma > 0.0 {
            Normal::new(0.0, cell.noise_sigma).expect("sigma checked").sample(rng)
        } else {
            0.0
        };
        FoldResult { error: Some((mean + noise).clamp(0.0, 1.0)), cost: cell.fold_cost + pre_cost }
    }
}

/// Re-runs a search by resampling a meta-knowledge base's recorded evaluations.
///
/// The first hyperparameter picks one of the cell's recorded configurations;
/// a fold replays that configuration's record for the fold when there is one
/// and otherwise a random ok record of the cell. Cells without an ok record
/// crash at their mean recorded cost.
#[derive(Debug)]
pub struct ReplayModel<'a> {
    base: &'a MetaKnowledgeBase,
    /// Per cell: distinct ok configs (sorted) and ok record indices.
    cells: HashMap<(String, String), ReplayCell>,
    no_preprocessors: Vec<String>,
}

#[derive(Debug, Default)]
struct ReplayCell {
    configs: Vec<String>,
    ok: Vec<usize>,
    by_config_fold: HashMap<(String, usize), usize>,
}

impl<'a> ReplayModel<'a> {
    pub fn new(base: &'a MetaKnowledgeBase) -> Self {
        let mut cells: HashMap<(String, String), ReplayCell> = HashMap::new();
        for (i, r) in base.records().iter().enumerate() {
            if !r.is_ok() {
                continue;
            }
            let cell = cells.entry((r.dataset_id.clone(), r.predictor_id.clone())).or_default();
            cell.ok.push(i);
            cell.by_config_fold.entry((r.config_id.clone(), r.fold_index)).or_insert(i);
            if !cell.configs.contains(&r.config_id) {
                cell.configs.push(r.config_id.clone());
            }
        }
        for cell in cells.values_mut() {
            cell.configs.sort();
        }
        Self { base, cells, no_preprocessors: Vec::new() }
    }
}

impl ResponseModel for ReplayModel<'_> {
    fn dims(&self) -> usize {
        1
    }

    fn preprocessors(&self) -> &[String] {
        &self.no_preprocessors
    }

    fn invalid_fraction(&self) -> f64 {
        0.0
    }

    fn invalid_cost(&self) -> f64 {
        0.0
    }

    fn evaluate_fold(&self, dataset: &str, candidate: &Candidate, fold: usize, rng: &mut dyn RngCore) -> FoldResult {
        let records = self.base.records();
        let Some(cell) = self.cells.get(&(dataset.to_string(), candidate.predictor.clone())) else {
            let cost = self.base.cell_mean_eval_time(dataset, &candidate.predictor).unwrap_or(0.0);
            return FoldResult { error: None, cost: if cost > 0.0 { cost } else { 1.0 } };
        };
        let x = candidate.params.first().copied().unwrap_or(0.0).clamp(0.0, 1.0);
        let pick = ((x * cell.configs.len() as f64) as usize).min(cell.configs.len() - 1);
        let idx = match cell.by_config_fold.get(&(cell.configs[pick].clone(), fold)) {
            Some(&i) => i,
            None => cell.ok[rng.random_range(0..cell.ok.len())],
        };
        FoldResult { error: records[idx].error_rate, cost: records[idx].eval_time_s }
    }
}
