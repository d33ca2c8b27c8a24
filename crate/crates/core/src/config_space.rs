//! Pipelines, component rosters and the reduction strategies that cull a
//! configuration space down to a predictor pool.
//!
//! A strategy label names how the pool is chosen:
//!
//! | label          | pool                                                        |
//! |----------------|-------------------------------------------------------------|
//! | `OX-kn`        | best `n` predictors on the target dataset in base `X`       |
//! | `MX-kn`        | best `n` predictors on base `X`'s global leaderboard        |
//! | `LX-kn`        | best `n` predictors on the most similar prior dataset       |
//! | `R-kn[:seed=s]`| uniformly random `n`-subset of the roster                   |
//! | `baseline`     | full roster, invalid pipelines are evaluated                |
//! | `avatar`       | full roster, invalid pipelines are skipped                  |
//! | `r30`          | a fixed, previously found pipeline                          |
//!
//! Preprocessors are never culled; only the predictor slot is restricted.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmarking::LandmarkMatch;
use crate::ranking::RankingTable;

/// Default structural limit on pipeline length.
pub const DEFAULT_MAX_LEN: usize = 7;

/// Default subspace sizes, plus the full-roster control.
pub const DEFAULT_K_GRID: [usize; 6] = [1, 4, 8, 10, 19, 30];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Predictor,
    MetaPredictor,
    Kernel,
    Preprocessor,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dependency {
    /// Needs a plain predictor to wrap (ensembles, boosting, ...).
    NeedsBaseLearner,
    /// Needs a specific host predictor (an SVM kernel needs its SMO host).
    NeedsHostPredictor(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub id: String,
    pub kind: ComponentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dependency: Option<Dependency>,
}

impl ComponentSpec {
    pub fn predictor(id: impl Into<String>) -> Self {
        Self { id: id.into(), kind: ComponentKind::Predictor, dependency: None }
    }

    pub fn meta_predictor(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind: ComponentKind::MetaPredictor,
            dependency: Some(Dependency::NeedsBaseLearner),
        }
    }

    pub fn kernel(id: impl Into<String>, host: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind: ComponentKind::Kernel,
            dependency: Some(Dependency::NeedsHostPredictor(host.into())),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            ComponentKind::MetaPredictor => self.dependency == Some(Dependency::NeedsBaseLearner),
            ComponentKind::Kernel => {
                matches!(self.dependency, Some(Dependency::NeedsHostPredictor(_)))
            }
            ComponentKind::Predictor | ComponentKind::Preprocessor => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidRoster(format!(
                "component `{}` of kind {:?} has dependency {:?}",
                self.id, self.kind, self.dependency
            )))
        }
    }
}

/// Roster manifest: the predictor universe with dependency classes, the
/// preprocessors that always stay in the space, and the declared datasets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Roster {
    pub predictors: Vec<ComponentSpec>,
    #[serde(default)]
    pub preprocessors: Vec<String>,
    #[serde(default)]
    pub datasets: Vec<String>,
}

impl Roster {
    pub fn from_json(text: &str) -> Result<Self> {
        let roster: Roster = serde_json::from_str(text)?;
        roster.validate()?;
        Ok(roster)
    }

    /// Roster of plain predictors with the given ids.
    pub fn plain<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            predictors: ids.into_iter().map(ComponentSpec::predictor).collect(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for spec in &self.predictors {
            spec.validate()?;
            if spec.kind == ComponentKind::Preprocessor {
                return Err(Error::InvalidRoster(format!(
                    "`{}` is a preprocessor listed among predictors",
                    spec.id
                )));
            }
            if !seen.insert(spec.id.as_str()) {
                return Err(Error::InvalidRoster(format!("duplicate predictor `{}`", spec.id)));
            }
        }
        for spec in &self.predictors {
            if let Some(Dependency::NeedsHostPredictor(host)) = &spec.dependency {
                if !seen.contains(host.as_str()) {
                    return Err(Error::InvalidRoster(format!(
                        "kernel `{}` names unknown host `{host}`",
                        spec.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn predictor_ids(&self) -> Vec<String> {
        self.predictors.iter().map(|s| s.id.clone()).collect()
    }

    pub fn spec(&self, id: &str) -> Option<&ComponentSpec> {
        self.predictors.iter().find(|s| s.id == id)
    }

    pub fn len(&self) -> usize {
        self.predictors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictors.is_empty()
    }

    /// Ids of every predictor whose kind is not a meta-predictor.
    pub fn non_meta_ids(&self) -> Vec<String> {
        self.predictors
            .iter()
            .filter(|s| s.kind != ComponentKind::MetaPredictor)
            .map(|s| s.id.clone())
            .collect()
    }
}

/// A sequential pipeline: preprocessors followed by a final predictor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pipeline {
    pub components: Vec<String>,
    pub configs: Vec<String>,
}

impl Pipeline {
    pub fn new(components: Vec<String>, configs: Vec<String>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("empty pipeline".into()));
        }
        if components.len() != configs.len() {
            return Err(Error::InvalidArgument(format!(
                "pipeline has {} components but {} configs",
                components.len(),
                configs.len()
            )));
        }
        Ok(Self { components, configs })
    }

    /// Pipeline made of default-configured components.
    pub fn with_defaults(components: Vec<String>) -> Result<Self> {
        let configs = vec!["default".to_string(); components.len()];
        Self::new(components, configs)
    }

    pub fn predictor(&self) -> &str {
        self.components.last().map(String::as_str).unwrap_or_default()
    }

    pub fn preprocessors(&self) -> &[String] {
        &self.components[..self.components.len().saturating_sub(1)]
    }

    /// Checks the structural grammar against a roster.
    pub fn validate(&self, roster: &Roster, max_len: usize) -> Result<()> {
        if self.components.is_empty() || self.components.len() > max_len {
            return Err(Error::InvalidArgument(format!(
                "pipeline length {} outside [1, {max_len}]",
                self.components.len()
            )));
        }
        match roster.spec(self.predictor()) {
            Some(spec)
                if matches!(spec.kind, ComponentKind::Predictor | ComponentKind::MetaPredictor) => {}
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "pipeline must end in a predictor, found `{}`",
                    self.predictor()
                )))
            }
        }
        Ok(())
    }

    /// `|`-joined component ids.
    pub fn structure(&self) -> String {
        self.components.join("|")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    Oracle,
    Leaderboard,
    Landmarked,
    Random,
}

impl StrategyKind {
    fn letter(self) -> char {
        match self {
            StrategyKind::Oracle => 'O',
            StrategyKind::Leaderboard => 'M',
            StrategyKind::Landmarked => 'L',
            StrategyKind::Random => 'R',
        }
    }
}

/// Parsed strategy label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyLabel {
    Culled {
        kind: StrategyKind,
        /// Meta-knowledge base index `X`; `None` when the label omits it.
        base: Option<u32>,
        k: usize,
        seed: Option<u64>,
    },
    Baseline,
    Avatar,
    R30,
}

impl StrategyLabel {
    pub fn culled(kind: StrategyKind, base: u32, k: usize) -> Self {
        StrategyLabel::Culled { kind, base: Some(base), k, seed: None }
    }

    pub fn k(&self) -> Option<usize> {
        match self {
            StrategyLabel::Culled { k, .. } => Some(*k),
            _ => None,
        }
    }

    pub fn base(&self) -> Option<u32> {
        match self {
            StrategyLabel::Culled { base, .. } => *base,
            _ => None,
        }
    }

    /// Strategy family name used for grouped reports.
    pub fn family(&self) -> &'static str {
        match self {
            StrategyLabel::Culled { kind: StrategyKind::Oracle, .. } => "oracle",
            StrategyLabel::Culled { kind: StrategyKind::Leaderboard, .. } => "leaderboard",
            StrategyLabel::Culled { kind: StrategyKind::Landmarked, .. } => "landmarked",
            StrategyLabel::Culled { kind: StrategyKind::Random, .. } => "random",
            StrategyLabel::Baseline => "baseline",
            StrategyLabel::Avatar => "avatar",
            StrategyLabel::R30 => "r30",
        }
    }

    /// The 33 strategies over bases 1 and 2 and the given k grid, controls first.
    pub fn catalog(k_grid: &[usize]) -> Vec<StrategyLabel> {
        let mut labels = vec![StrategyLabel::Baseline, StrategyLabel::Avatar, StrategyLabel::R30];
        for kind in [StrategyKind::Oracle, StrategyKind::Landmarked, StrategyKind::Leaderboard] {
            for base in [1, 2] {
                for &k in k_grid {
                    labels.push(StrategyLabel::culled(kind, base, k));
                }
            }
        }
        labels
    }
}

impl fmt::Display for StrategyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyLabel::Baseline => f.write_str("baseline"),
            StrategyLabel::Avatar => f.write_str("avatar"),
            StrategyLabel::R30 => f.write_str("r30"),
            StrategyLabel::Culled { kind, base, k, seed } => {
                write!(f, "{}", kind.letter())?;
                if let Some(b) = base {
                    write!(f, "{b}")?;
                }
                write!(f, "-k{k}")?;
                if let Some(s) = seed {
                    write!(f, ":seed={s}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for StrategyLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MalformedLabel(s.to_string());
        match s {
            "baseline" => return Ok(StrategyLabel::Baseline),
            "avatar" => return Ok(StrategyLabel::Avatar),
            "r30" => return Ok(StrategyLabel::R30),
            _ => {}
        }
        let (head, seed) = match s.split_once(':') {
            Some((head, opt)) => {
                let value = opt.strip_prefix("seed=").ok_or_else(bad)?;
                (head, Some(value.parse::<u64>().map_err(|_| bad())?))
            }
            None => (s, None),
        };
        let mut chars = head.chars();
        let kind = match chars.next() {
            Some('O') => StrategyKind::Oracle,
            Some('M') => StrategyKind::Leaderboard,
            Some('L') => StrategyKind::Landmarked,
            Some('R') => StrategyKind::Random,
            _ => return Err(bad()),
        };
        let rest = chars.as_str();
        let (base_part, k_part) = rest.split_once("-k").ok_or_else(bad)?;
        let base = if base_part.is_empty() {
            None
        } else {
            Some(base_part.parse::<u32>().map_err(|_| bad())?)
        };
        if k_part.is_empty() || !k_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let k = k_part.parse::<usize>().map_err(|_| bad())?;
        if seed.is_some() && kind != StrategyKind::Random {
            return Err(bad());
        }
        Ok(StrategyLabel::Culled { kind, base, k, seed })
    }
}

/// Output of a reduction strategy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedSpace {
    pub strategy_label: String,
    /// Requested pool in recommendation order, before dependency closure.
    pub predictor_pool: Vec<String>,
    pub k_requested: usize,
    pub closure_added: Vec<String>,
    pub landmark_cost: f64,
    pub provenance: String,
    /// Invalid pipelines are skipped free of charge when set.
    pub validity_filtering: bool,
    /// Pipeline structure fixed in advance (`r30`).
    pub fixed_pipeline: Option<Pipeline>,
}

impl ReducedSpace {
    /// Pool plus closure additions: every predictor a search may use.
    pub fn searchable(&self) -> Vec<String> {
        self.predictor_pool.iter().chain(&self.closure_added).cloned().collect()
    }
}

/// Inputs a strategy may draw on. Only the fields a given label needs must be set.
#[derive(Debug, Clone, Copy)]
pub struct StrategyInputs<'a> {
    pub roster: &'a Roster,
    pub ranking: Option<&'a RankingTable>,
    pub target_dataset: Option<&'a str>,
    pub landmark: Option<&'a LandmarkMatch>,
    pub seed: Option<u64>,
    pub prior_best: Option<&'a Pipeline>,
}

impl<'a> StrategyInputs<'a> {
    pub fn new(roster: &'a Roster) -> Self {
        Self { roster, ranking: None, target_dataset: None, landmark: None, seed: None, prior_best: None }
    }
}

/// Materialises the reduced space for `label`.
pub fn apply_strategy(label: &StrategyLabel, inputs: &StrategyInputs<'_>) -> Result<ReducedSpace> {
    let roster = inputs.roster;
    let p = roster.len();
    let name = label.to_string();
    let missing = |what| Error::MissingInput { label: name.clone(), what };

    let full = |validity_filtering: bool, provenance: &str| ReducedSpace {
        strategy_label: name.clone(),
        predictor_pool: roster.predictor_ids(),
        k_requested: p,
        closure_added: Vec::new(),
        landmark_cost: 0.0,
        provenance: provenance.to_string(),
        validity_filtering,
        fixed_pipeline: None,
    };

    let (kind, k, seed) = match label {
        StrategyLabel::Baseline => return Ok(full(false, "full roster")),
        StrategyLabel::Avatar => return Ok(full(true, "full roster, invalid pipelines skipped")),
        StrategyLabel::R30 => {
            let pipeline = inputs.prior_best.ok_or_else(|| missing("a prior-best pipeline"))?;
            pipeline.validate(roster, usize::MAX)?;
            return Ok(ReducedSpace {
                strategy_label: name.clone(),
                predictor_pool: vec![pipeline.predictor().to_string()],
                k_requested: 1,
                closure_added: Vec::new(),
                landmark_cost: 0.0,
                provenance: format!("prior-best pipeline {}", pipeline.structure()),
                validity_filtering: true,
                fixed_pipeline: Some(pipeline.clone()),
            });
        }
        StrategyLabel::Culled { kind, k, seed, .. } => (*kind, *k, *seed),
    };
    if k == 0 || k > p {
        return Err(Error::KOutOfRange { k, max: p });
    }

    let (ordered, provenance, landmark_cost) = match kind {
        StrategyKind::Oracle => {
            let table = inputs.ranking.ok_or_else(|| missing("a ranking table"))?;
            let target = inputs.target_dataset.ok_or_else(|| missing("a target dataset"))?;
            (table.ranked_predictors(target)?, format!("{} ranks on {target}", table.base_id), 0.0)
        }
        StrategyKind::Leaderboard => {
            let table = inputs.ranking.ok_or_else(|| missing("a ranking table"))?;
            (table.leaderboard_order(), format!("{} global leaderboard", table.base_id), 0.0)
        }
        StrategyKind::Landmarked => {
            let table = inputs.ranking.ok_or_else(|| missing("a ranking table"))?;
            let hit = inputs.landmark.ok_or_else(|| missing("a landmark result"))?;
            (
                table.ranked_predictors(&hit.dataset_id)?,
                format!(
                    "{} ranks on most similar dataset {} (r = {})",
                    table.base_id, hit.dataset_id, hit.coefficient
                ),
                hit.landmark_cost,
            )
        }
        StrategyKind::Random => {
            let seed = seed.or(inputs.seed).ok_or_else(|| missing("a seed"))?;
            let ids = roster.predictor_ids();
            let mut picked = random_subset(p, k, seed);
            picked.sort_unstable();
            let mut pool: Vec<String> = picked.into_iter().map(|i| ids[i].clone()).collect();
            pool.extend(ids.iter().filter(|id| !pool.contains(id)).cloned().collect::<Vec<_>>());
            (pool, format!("uniform {k}-subset, seed {seed}"), 0.0)
        }
    };

    for id in &ordered {
        if roster.spec(id).is_none() {
            return Err(Error::UnknownPredictor(id.clone()));
        }
    }
    let pool: Vec<String> = ordered.iter().take(k).cloned().collect();
    // Random pools close dependencies by leaderboard order when one is available.
    let closure_order = match (kind, inputs.ranking) {
        (StrategyKind::Random, Some(table)) => table.leaderboard_order(),
        _ => ordered.clone(),
    };
    let (_, closure_added) = close_dependencies(&pool, &closure_order, roster)?;
    Ok(ReducedSpace {
        strategy_label: name,
        predictor_pool: pool,
        k_requested: k,
        closure_added,
        landmark_cost,
        provenance,
        validity_filtering: true,
        fixed_pipeline: None,
    })
}

/// Uniform `k`-subset of `0..n` drawn from a seeded ChaCha stream.
pub fn random_subset(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, n, k).into_vec()
}

/// Pulls in the best-ranked out-of-pool satisfiers for every unmet dependency.
///
/// Host requirements are resolved before base-learner requirements, since a
/// pulled-in host is itself a plain predictor. Returns the final pool and the
/// additions, in the order they were added.
pub fn close_dependencies(
    pool: &[String],
    ranking_for_closure: &[String],
    roster: &Roster,
) -> Result<(Vec<String>, Vec<String>)> {
    if pool.is_empty() {
        return Err(Error::InvalidArgument("empty pool".into()));
    }
    let mut members: Vec<String> = pool.to_vec();
    let mut added = Vec::new();
    let is_plain = |id: &str| {
        roster.spec(id).map(|s| s.kind == ComponentKind::Predictor).unwrap_or(false)
    };

    let hosts: Vec<String> = members
        .iter()
        .filter_map(|id| match roster.spec(id).and_then(|s| s.dependency.as_ref()) {
            Some(Dependency::NeedsHostPredictor(host)) => Some(host.clone()),
            _ => None,
        })
        .collect();
    for host in hosts {
        if !members.contains(&host) {
            members.push(host.clone());
            added.push(host);
        }
    }

    let needs_learner = members.iter().any(|id| {
        matches!(
            roster.spec(id).and_then(|s| s.dependency.as_ref()),
            Some(Dependency::NeedsBaseLearner)
        )
    });
    if needs_learner && !members.iter().any(|id| is_plain(id)) {
        let satisfier = ranking_for_closure
            .iter()
            .chain(roster.predictors.iter().map(|s| &s.id))
            .find(|id| !members.contains(id) && is_plain(id))
            .cloned();
        match satisfier {
            Some(id) => {
                members.push(id.clone());
                added.push(id);
            }
            None => {
                let who = members
                    .iter()
                    .find(|id| {
                        roster.spec(id).and_then(|s| s.dependency.as_ref())
                            == Some(&Dependency::NeedsBaseLearner)
                    })
                    .cloned()
                    .unwrap_or_default();
                return Err(Error::UnsatisfiableDependency(who));
            }
        }
    }
    Ok((members, added))
}

/// Per-kind arrangement counts for [`space_size`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discretization {
    /// Distinct hyperparameter arrangements per predictor.
    pub predictor_arrangements: u64,
    /// Distinct hyperparameter arrangements per preprocessor.
    pub preprocessor_arrangements: u64,
    /// Whether a preprocessor may appear more than once in a chain.
    pub allow_repeats: bool,
}

impl Default for Discretization {
    fn default() -> Self {
        Self { predictor_arrangements: 1, preprocessor_arrangements: 1, allow_repeats: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpaceSize {
    Exact(u64),
    /// Count at or beyond 2^63, as a decimal string.
    Big(String),
}

impl fmt::Display for SpaceSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSize::Exact(n) => write!(f, "{n}"),
            SpaceSize::Big(s) => f.write_str(s),
        }
    }
}

/// Number of structurally distinct pipelines: a chain of at most `max_len - 1`
/// preprocessors followed by one predictor slot. The predictor slot admits
/// plain and meta-predictors; kernels never stand alone.
pub fn space_size(roster: &Roster, max_len: usize, discretization: &Discretization) -> Result<SpaceSize> {
    if max_len == 0 {
        return Err(Error::InvalidArgument("max_len must be at least 1".into()));
    }
    let slots = roster
        .predictors
        .iter()
        .filter(|s| matches!(s.kind, ComponentKind::Predictor | ComponentKind::MetaPredictor))
        .count() as u64;
    let n_pre = roster.preprocessors.len() as u64;
    let pre_arr = BigUint::from(discretization.preprocessor_arrangements);

    let mut chains = BigUint::zero();
    let mut term = BigUint::one();
    for len in 0..max_len as u64 {
        if len > 0 {
            let choices = if discretization.allow_repeats {
                n_pre
            } else if len <= n_pre {
                n_pre - (len - 1)
            } else {
                0
            };
            term = term * BigUint::from(choices) * &pre_arr;
        }
        if term.is_zero() {
            break;
        }
        chains += &term;
    }
    let total = chains * BigUint::from(slots) * BigUint::from(discretization.predictor_arrangements);
    Ok(match total.to_u64() {
        Some(n) if n < (1u64 << 63) => SpaceSize::Exact(n),
        _ => SpaceSize::Big(total.to_string()),
    })
}
