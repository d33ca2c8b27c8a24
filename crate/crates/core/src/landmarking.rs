//! Relative landmarking: cheap predictors profile each dataset, and a new
//! dataset borrows the rankings of the prior dataset whose landmark error
//! vector correlates best with its own.

use std::io::Write;

use log::warn;
use serde::Serialize;

use crate::config_space::{apply_strategy, ReducedSpace, Roster, StrategyInputs, StrategyKind, StrategyLabel};
use crate::error::{Error, Result};
use crate::meta_store::{MetaKnowledgeBase, PipelineFilter, MISSING_PENALTY};
use crate::ranking::{correlate, CorrelationMode, RankingTable};

pub const DEFAULT_LANDMARKERS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandmarkProfile {
    pub dataset_id: String,
    pub landmarker_ids: Vec<String>,
    /// `errors[i]` belongs to `landmarker_ids[i]`.
    pub errors: Vec<f64>,
    pub total_landmark_cost: f64,
    /// Every landmarker failed on this dataset.
    pub unsolvable: bool,
}

/// The most similar prior dataset together with what it cost to find it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandmarkMatch {
    pub dataset_id: String,
    pub coefficient: f64,
    pub landmark_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Similarity {
    pub dataset_id: String,
    pub coefficient: f64,
    /// Priors left out because their landmark vector is constant.
    pub skipped: Vec<String>,
}

/// The `count` predictors with the lowest mean evaluation time over every
/// pipeline evaluation containing them; ties broken by id.
pub fn select_landmarkers(base: &MetaKnowledgeBase, count: usize) -> Result<Vec<String>> {
    let mut candidates = Vec::new();
    for p in base.predictors() {
        let (time, any_ok) = base.predictor_mean_eval_time(p)?;
        if any_ok {
            candidates.push((time, p.clone()));
        }
    }
    if count == 0 || count > candidates.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot select {count} landmarkers from {} evaluable predictors",
            candidates.len()
        )));
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    Ok(candidates.into_iter().take(count).map(|(_, p)| p).collect())
}

/// Landmark error vector for a dataset: each landmarker's mean error (1.0 if
/// unevaluated) and the summed cost of one full CV run per landmarker.
pub fn landmark_profile(base: &MetaKnowledgeBase, dataset_id: &str, landmarkers: &[String]) -> Result<LandmarkProfile> {
    let mut errors = Vec::with_capacity(landmarkers.len());
    let mut cost = 0.0;
    let mut evaluated = 0;
    for l in landmarkers {
        let agg = base.aggregate(dataset_id, l, PipelineFilter::All)?;
        if !agg.is_penalty() {
            evaluated += 1;
        }
        errors.push(agg.mean_error);
        cost += base.cell_mean_eval_time(dataset_id, l)? * base.folds() as f64;
    }
    Ok(LandmarkProfile {
        dataset_id: dataset_id.to_string(),
        landmarker_ids: landmarkers.to_vec(),
        errors,
        total_landmark_cost: cost,
        unsolvable: evaluated == 0,
    })
}

/// Prior with the highest Pearson correlation to `new_profile`; equal
/// coefficients resolve to the smaller dataset id.
pub fn most_similar_dataset(new_profile: &LandmarkProfile, prior_profiles: &[LandmarkProfile]) -> Result<Similarity> {
    if new_profile.unsolvable || new_profile.errors.iter().all(|&e| e == MISSING_PENALTY) {
        return Err(Error::UnsolvableProfile(new_profile.dataset_id.clone()));
    }
    if prior_profiles.is_empty() {
        return Err(Error::InvalidArgument("no prior profiles".into()));
    }
    let mut best: Option<(f64, &str)> = None;
    let mut skipped = Vec::new();
    for prior in prior_profiles {
        if prior.landmarker_ids != new_profile.landmarker_ids {
            return Err(Error::InvalidArgument(format!(
                "prior `{}` uses different landmarkers",
                prior.dataset_id
            )));
        }
        let c = match correlate(&new_profile.errors, &prior.errors, CorrelationMode::Pearson) {
            Ok(c) => c,
            Err(Error::UndefinedCorrelation(_)) if is_constant(&new_profile.errors) => {
                return Err(Error::UndefinedCorrelation(format!(
                    "landmark vector of `{}` is constant",
                    new_profile.dataset_id
                )))
            }
            Err(Error::UndefinedCorrelation(_)) => {
                warn!("skipping prior `{}`: constant landmark vector", prior.dataset_id);
                skipped.push(prior.dataset_id.clone());
                continue;
            }
            Err(e) => return Err(e),
        };
        let better = match best {
            None => true,
            Some((bc, bid)) => c > bc || (c == bc && prior.dataset_id.as_str() < bid),
        };
        if better {
            best = Some((c, prior.dataset_id.as_str()));
        }
    }
    match best {
        Some((coefficient, id)) => Ok(Similarity { dataset_id: id.to_string(), coefficient, skipped }),
        None => Err(Error::UndefinedCorrelation("every prior landmark vector is constant".into())),
    }
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

/// Finds the most similar prior and recommends its `k` best predictors.
pub fn recommend_landmarked_space(
    ranking: &RankingTable,
    roster: &Roster,
    new_profile: &LandmarkProfile,
    prior_profiles: &[LandmarkProfile],
    k: usize,
) -> Result<ReducedSpace> {
    let hit = most_similar_dataset(new_profile, prior_profiles)?;
    let landmark = LandmarkMatch {
        dataset_id: hit.dataset_id,
        coefficient: hit.coefficient,
        landmark_cost: new_profile.total_landmark_cost,
    };
    let label = StrategyLabel::Culled { kind: StrategyKind::Landmarked, base: None, k, seed: None };
    let inputs = StrategyInputs { ranking: Some(ranking), landmark: Some(&landmark), ..StrategyInputs::new(roster) };
    apply_strategy(&label, &inputs)
}

/// Leave-one-out landmark match for each dataset of a base: the dataset
/// plays the new problem, every other dataset a prior. Unsolvable datasets
/// map to `None`.
pub fn landmark_matches(
    base: &MetaKnowledgeBase,
    landmarkers: &[String],
) -> Result<Vec<(LandmarkProfile, Option<LandmarkMatch>)>> {
    let profiles: Vec<LandmarkProfile> =
        base.datasets().iter().map(|d| landmark_profile(base, d, landmarkers)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(profiles.len());
    for profile in &profiles {
        let priors: Vec<LandmarkProfile> =
            profiles.iter().filter(|p| p.dataset_id != profile.dataset_id).cloned().collect();
        let hit = match most_similar_dataset(profile, &priors) {
            Ok(s) => Some(LandmarkMatch {
                dataset_id: s.dataset_id,
                coefficient: s.coefficient,
                landmark_cost: profile.total_landmark_cost,
            }),
            Err(Error::UnsolvableProfile(_)) | Err(Error::UndefinedCorrelation(_)) => None,
            Err(e) => return Err(e),
        };
        out.push((profile.clone(), hit));
    }
    Ok(out)
}

pub fn write_similarity_csv<W: Write>(rows: &[(LandmarkProfile, Option<LandmarkMatch>)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["new_dataset", "most_similar", "coefficient", "landmark_cost_s"])?;
    for (profile, hit) in rows {
        match hit {
            Some(m) => w.write_record([
                profile.dataset_id.as_str(),
                &m.dataset_id,
                &m.coefficient.to_string(),
                &m.landmark_cost.to_string(),
            ])?,
            None => w.write_record([
                profile.dataset_id.as_str(),
                "",
                "",
                &profile.total_landmark_cost.to_string(),
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(id: &str, errors: &[f64]) -> LandmarkProfile {
        LandmarkProfile {
            dataset_id: id.into(),
            landmarker_ids: (0..errors.len()).map(|i| format!("L{i}")).collect(),
            errors: errors.to_vec(),
            total_landmark_cost: 10.0,
            unsolvable: false,
        }
    }

    #[test]
    fn identical_prior_wins_with_unit_coefficient() {
        let new = profile("new", &[0.1, 0.3, 0.2, 0.5]);
        let priors = [profile("a", &[0.4, 0.1, 0.3, 0.2]), profile("b", &[0.1, 0.3, 0.2, 0.5])];
        let s = most_similar_dataset(&new, &priors).unwrap();
        assert_eq!(s.dataset_id, "b");
        assert!((s.coefficient - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sign_decides() {
        let new = profile("new", &[0.1, 0.2, 0.3, 0.4]);
        let priors = [profile("d2", &[0.4, 0.3, 0.2, 0.1]), profile("d1", &[0.2, 0.25, 0.5, 0.6])];
        assert_eq!(most_similar_dataset(&new, &priors).unwrap().dataset_id, "d1");
    }

    #[test]
    fn ties_resolve_to_smaller_id() {
        let new = profile("new", &[0.1, 0.2, 0.3]);
        let priors = [profile("z", &[0.1, 0.2, 0.3]), profile("a", &[0.2, 0.4, 0.6])];
        assert_eq!(most_similar_dataset(&new, &priors).unwrap().dataset_id, "a");
    }

    #[test]
    fn constant_priors_are_skipped() {
        let new = profile("new", &[0.1, 0.2, 0.3]);
        let priors = [profile("flat", &[0.5, 0.5, 0.5]), profile("ok", &[0.3, 0.1, 0.2])];
        let s = most_similar_dataset(&new, &priors).unwrap();
        assert_eq!(s.dataset_id, "ok");
        assert_eq!(s.skipped, vec!["flat".to_string()]);
        assert!(most_similar_dataset(&new, &priors[..1]).is_err());
    }

    #[test]
    fn unsolvable_profile_propagates() {
        let mut new = profile("kdd", &[1.0, 1.0, 1.0]);
        new.unsolvable = true;
        let priors = [profile("a", &[0.1, 0.2, 0.3])];
        assert!(matches!(most_similar_dataset(&new, &priors), Err(Error::UnsolvableProfile(_))));
    }
}
