use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::surface::{Candidate, ResponseModel};
use super::{RunOutcome, RunStatus, SearchBudget};
use crate::config_space::{Pipeline, ReducedSpace, StrategyLabel};
use crate::error::Result;

/// Random search with greedy exploitation of the incumbent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSettings {
    /// Probability of a fresh random proposal once an incumbent exists.
    pub explore: f64,
    /// Standard deviation of hyperparameter perturbations.
    pub step: f64,
    /// Longest preprocessor chain a proposal may carry.
    pub max_preprocessors: usize,
    /// Hard cap on proposals, valid or not.
    pub max_proposals: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self { explore: 0.3, step: 0.1, max_preprocessors: 2, max_proposals: 2000 }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Generator seed of one (seed, strategy, dataset) cell.
pub fn cell_seed(seed: u64, label: &str, dataset: &str) -> u64 {
    let key = fnv1a(format!("{label}\u{1f}{dataset}").as_bytes());
    splitmix(splitmix(seed) ^ key)
}

fn random_candidate(pool: &[String], model: &dyn ResponseModel, settings: &SearchSettings, rng: &mut ChaCha8Rng) -> Candidate {
    let predictor = pool[rng.random_range(0..pool.len())].clone();
    let available = model.preprocessors();
    let longest = settings.max_preprocessors.min(available.len());
    let len = rng.random_range(0..=longest);
    let preprocessors: Vec<String> = available.choose_multiple(rng, len).cloned().collect();
    let params = (0..model.dims()).map(|_| rng.random::<f64>()).collect();
    Candidate { preprocessors, predictor, params }
}

fn perturb(incumbent: &Candidate, settings: &SearchSettings, rng: &mut ChaCha8Rng) -> Candidate {
    let noise = Normal::new(0.0, settings.step).expect("positive step");
    let params = incumbent.params.iter().map(|x| (x + noise.sample(rng)).clamp(0.0, 1.0)).collect();
    Candidate { params, ..incumbent.clone() }
}

fn to_pipeline(candidate: &Candidate) -> Pipeline {
    let mut components = candidate.preprocessors.clone();
    components.push(candidate.predictor.clone());
    let mut configs = vec!["default".to_string(); candidate.preprocessors.len()];
    configs.push(candidate.params.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(";"));
    Pipeline { components, configs }
}

/// One budgeted search over a reduced space.
///
/// The landmark cost is charged before the first proposal. A pipeline only
/// counts once all `budget.folds` folds are evaluated; an evaluation cut
/// short by the budget or by a crashed fold is discarded. Without validity
/// filtering, invalid proposals are evaluated and charged
/// [`ResponseModel::invalid_cost`]; with it they are skipped for free.
pub fn run_constrained_search(
    space: &ReducedSpace,
    dataset: &str,
    model: &dyn ResponseModel,
    budget: &SearchBudget,
    settings: &SearchSettings,
    seed: u64,
) -> RunOutcome {
    let mut outcome = RunOutcome {
        strategy_label: space.strategy_label.clone(),
        dataset_id: dataset.to_string(),
        run_index: 0,
        status: RunStatus::Failed,
        best_cv: None,
        best_pipeline: None,
        cost_spent: 0.0,
    };
    let remaining = budget.total_cost - budget.landmark_deduction - space.landmark_cost;
    let pool = space.searchable();
    if remaining <= 0.0 || pool.is_empty() || budget.folds == 0 {
        return outcome;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fixed = space.fixed_pipeline.as_ref().map(|p| Candidate {
        preprocessors: p.preprocessors().to_vec(),
        predictor: p.predictor().to_string(),
        params: vec![0.5; model.dims()],
    });
    let mut spent = 0.0;
    let mut best: Option<(f64, Vec<f64>, Candidate)> = None;

    'search: for proposal in 0..settings.max_proposals {
        let candidate = match (&fixed, &best) {
            (Some(start), None) if proposal == 0 => start.clone(),
            (Some(start), None) => perturb(start, settings, &mut rng),
            (Some(start), Some((_, _, inc))) => {
                if rng.random::<f64>() < settings.explore {
                    perturb(start, settings, &mut rng)
                } else {
                    perturb(inc, settings, &mut rng)
                }
            }
            (None, Some((_, _, inc))) if rng.random::<f64>() >= settings.explore => perturb(inc, settings, &mut rng),
            (None, _) => random_candidate(&pool, model, settings, &mut rng),
        };

        if fixed.is_none() && rng.random::<f64>() < model.invalid_fraction() {
            if space.validity_filtering {
                continue;
            }
            spent += model.invalid_cost();
            if spent >= remaining {
                spent = remaining;
                break;
            }
            continue;
        }

        let mut cv = Vec::with_capacity(budget.folds);
        for fold in 0..budget.folds {
            let result = model.evaluate_fold(dataset, &candidate, fold, &mut rng);
            if spent + result.cost > remaining {
                spent = remaining;
                break 'search;
            }
            spent += result.cost;
            match result.error {
                Some(e) => cv.push(e),
                None => continue 'search,
            }
        }
        let mean = cv.iter().sum::<f64>() / cv.len() as f64;
        if best.as_ref().is_none_or(|(b, _, _)| mean < *b) {
            best = Some((mean, cv, candidate));
        }
    }

    outcome.cost_spent = spent;
    if let Some((_, cv, candidate)) = best {
        outcome.status = RunStatus::Completed;
        outcome.best_cv = Some(cv);
        outcome.best_pipeline = Some(to_pipeline(&candidate));
    }
    outcome
}

/// Runs every (strategy, dataset, seed) cell. `space_for` builds the reduced
/// space of a cell from its label, dataset and cell seed; `Ok(None)` means
/// the strategy cannot produce a space there and the run fails outright.
///
/// Outcomes come back ordered by strategy, then dataset, then run; run `i`
/// uses `seeds[i]`.
pub fn run_matrix<F>(
    labels: &[StrategyLabel],
    datasets: &[String],
    seeds: &[u64],
    model: &dyn ResponseModel,
    budget: &SearchBudget,
    settings: &SearchSettings,
    space_for: F,
) -> Result<Vec<RunOutcome>>
where
    F: Fn(&StrategyLabel, &str, u64) -> Result<Option<ReducedSpace>> + Sync,
{
    let cells: Vec<(&StrategyLabel, &String, usize)> = labels
        .iter()
        .flat_map(|l| datasets.iter().flat_map(move |d| (0..seeds.len()).map(move |r| (l, d, r))))
        .collect();
    cells
        .par_iter()
        .map(|&(label, dataset, run)| {
            let name = label.to_string();
            let seed = cell_seed(seeds[run], &name, dataset);
            let mut outcome = match space_for(label, dataset, seed)? {
                Some(space) => run_constrained_search(&space, dataset, model, budget, settings, seed),
                None => RunOutcome {
                    strategy_label: name.clone(),
                    dataset_id: dataset.clone(),
                    run_index: run,
                    status: RunStatus::Failed,
                    best_cv: None,
                    best_pipeline: None,
                    cost_spent: 0.0,
                },
            };
            outcome.strategy_label = name;
            outcome.run_index = run;
            Ok(outcome)
        })
        .collect()
}
