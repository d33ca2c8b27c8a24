use std::collections::HashMap;

use crate::config_space::{apply_strategy, Pipeline, ReducedSpace, Roster, StrategyInputs, StrategyKind, StrategyLabel};
use crate::error::{Error, Result};
use crate::landmarking::LandmarkMatch;
use crate::meta_store::MetaKnowledgeBase;
use crate::ranking::RankingTable;

/// Everything needed to turn a strategy label into a reduced space on a given dataset.
#[derive(Debug, Clone)]
pub struct StrategySpaces<'a> {
    pub roster: &'a Roster,
    /// `rankings[X - 1]` backs labels naming base `X`; unnumbered labels use the first.
    pub rankings: Vec<&'a RankingTable>,
    /// Per base, the landmark match of every dataset (`None` when unsolvable).
    pub landmarks: Vec<HashMap<String, Option<LandmarkMatch>>>,
    /// Previously found best pipeline per dataset, for `r30`.
    pub prior_best: HashMap<String, Pipeline>,
}

impl<'a> StrategySpaces<'a> {
    pub fn new(roster: &'a Roster) -> Self {
        Self { roster, rankings: Vec::new(), landmarks: Vec::new(), prior_best: HashMap::new() }
    }

    fn base_index(&self, label: &StrategyLabel) -> Result<usize> {
        let x = label.base().unwrap_or(1) as usize;
        if x == 0 || x > self.rankings.len() {
            return Err(Error::MissingInput { label: label.to_string(), what: "a meta-knowledge base for its index" });
        }
        Ok(x - 1)
    }

    /// Reduced space for `label` on `dataset`; `seed` draws random pools for
    /// labels without a seed of their own. `None` when a landmarked strategy
    /// meets an unsolvable dataset.
    pub fn build(&self, label: &StrategyLabel, dataset: &str, seed: u64) -> Result<Option<ReducedSpace>> {
        let mut inputs = StrategyInputs { target_dataset: Some(dataset), seed: Some(seed), ..StrategyInputs::new(self.roster) };
        match label {
            StrategyLabel::Baseline | StrategyLabel::Avatar => {}
            StrategyLabel::R30 => inputs.prior_best = self.prior_best.get(dataset),
            StrategyLabel::Culled { kind, .. } => {
                let b = if *kind == StrategyKind::Random && self.rankings.is_empty() {
                    None
                } else {
                    Some(self.base_index(label)?)
                };
                inputs.ranking = b.map(|b| self.rankings[b]);
                if *kind == StrategyKind::Landmarked {
                    let b = b.expect("ranking index");
                    let hits = self.landmarks.get(b).ok_or_else(|| Error::MissingInput {
                        label: label.to_string(),
                        what: "landmark matches",
                    })?;
                    match hits.get(dataset) {
                        Some(Some(hit)) => inputs.landmark = Some(hit),
                        Some(None) => return Ok(None),
                        None => return Err(Error::UnknownDataset(dataset.into())),
                    }
                    return apply_strategy(label, &inputs).map(Some);
                }
            }
        }
        apply_strategy(label, &inputs).map(Some)
    }
}

/// The pipeline and configuration with the lowest mean recorded error on a dataset.
pub fn prior_best_pipeline(base: &MetaKnowledgeBase, dataset: &str) -> Option<Pipeline> {
    let mut sums: HashMap<(Vec<String>, String), (f64, usize)> = HashMap::new();
    for r in base.records().iter().filter(|r| r.dataset_id == dataset) {
        if let Some(e) = r.error_rate {
            let entry = sums.entry((r.pipeline.clone(), r.config_id.clone())).or_insert((0.0, 0));
            entry.0 += e;
            entry.1 += 1;
        }
    }
    let mut best: Vec<((Vec<String>, String), f64)> =
        sums.into_iter().map(|(key, (s, n))| (key, s / n as f64)).collect();
    best.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let ((components, config), _) = best.into_iter().next()?;
    let mut configs = vec!["default".to_string(); components.len() - 1];
    configs.push(config);
    Pipeline::new(components, configs).ok()
}
