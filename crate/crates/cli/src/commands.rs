use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use log::warn;
use serde::Serialize;

use metareduce::challenge::{
    best_groups, indistinguishability_matrix, random_top_hit_probability, skewness, write_challenge_csv, ChallengeRow,
    IndistinguishabilityMatrix,
};
use metareduce::config_space::{Roster, StrategyKind, StrategyLabel};
use metareduce::expectation::{
    expectation_report, write_expectation_csv, write_normalized_csv, ExpectationOptions, ExpectationReport,
};
use metareduce::harness::{
    aggregate_report, prior_best_pipeline, rank_strategies, run_matrix, strategy_cells, write_aggregate_csv,
    write_consistency_csv, write_runs_csv, write_strategy_ranks_csv, AggregateRow, NemenyiResult, ReplayModel,
    ResponseModel, RunOutcome, SearchBudget, SearchSettings, StrategyCell, StrategyRank, StrategySpaces,
    SurrogateSurface,
};
use metareduce::landmarking::{landmark_matches, select_landmarkers, write_similarity_csv, LandmarkMatch, LandmarkProfile};
use metareduce::meta_store::{ingest as ingest_records, write_records_csv, IngestOptions, MetaKnowledgeBase, PipelineFilter, RecordFormat};
use metareduce::ranking::{build_ranking, cross_base_correlations, write_correlations_csv, RankKey, RankingTable};
use metareduce::synth::planted_sample;

use crate::config::RunConfig;
use crate::output::Outputs;
use crate::AppError;

fn open(path: &Path) -> Result<BufReader<File>, AppError> {
    File::open(path).map(BufReader::new).map_err(|e| AppError::input(format!("cannot open {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, AppError> {
    std::fs::read_to_string(path).map_err(|e| AppError::input(format!("cannot read {}: {e}", path.display())))
}

/// `stem.ext` for base 1, `stem_X.ext` for base X.
fn per_base(stem: &str, ext: &str, x: usize) -> String {
    if x == 1 {
        format!("{stem}.{ext}")
    } else {
        format!("{stem}_{x}.{ext}")
    }
}

struct Loaded {
    bases: Vec<MetaKnowledgeBase>,
    roster: Roster,
}

fn load(cfg: &RunConfig) -> Result<Loaded, AppError> {
    if cfg.bases.is_empty() {
        return Err(AppError::input("no --base given"));
    }
    let declared = match &cfg.roster {
        Some(p) => Some(Roster::from_json(&read_text(p)?)?),
        None => None,
    };
    let mut bases = Vec::with_capacity(cfg.bases.len());
    for (path, flavor) in &cfg.bases {
        let options = IngestOptions {
            flavor: *flavor,
            folds: cfg.folds,
            roster: declared.clone(),
            credit_base_learners: cfg.credit_base_learners,
            ..IngestOptions::default()
        };
        let base = ingest_records(open(path)?, RecordFormat::from_path(path), &options)
            .map_err(|e| AppError::from(e).context(&path.display().to_string()))?;
        bases.push(base);
    }
    let roster = declared.unwrap_or_else(|| {
        let mut r = Roster::plain(bases[0].predictors().iter().cloned());
        r.datasets = bases[0].datasets().to_vec();
        r
    });
    Ok(Loaded { bases, roster })
}

impl AppError {
    fn context(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

fn datasets_of(cfg: &RunConfig, base: &MetaKnowledgeBase) -> Result<Vec<String>, AppError> {
    if cfg.datasets.is_empty() {
        return Ok(base.datasets().to_vec());
    }
    for d in &cfg.datasets {
        if !base.has_dataset(d) {
            return Err(metareduce::Error::UnknownDataset(d.clone()).into());
        }
    }
    Ok(cfg.datasets.clone())
}

/// The k grid restricted to `1..=p`, warning about dropped values.
fn usable_k(grid: &[usize], p: usize) -> Result<Vec<usize>, AppError> {
    let (keep, drop): (Vec<usize>, Vec<usize>) = grid.iter().partition(|&&k| k >= 1 && k <= p);
    if !drop.is_empty() {
        warn!("ignoring k values {drop:?} outside [1, {p}]");
    }
    if keep.is_empty() {
        return Err(AppError::input(format!("no k value in [1, {p}]")));
    }
    Ok(keep)
}

fn rankings(cfg: &RunConfig, bases: &[MetaKnowledgeBase]) -> Result<Vec<RankingTable>, AppError> {
    bases.iter().map(|b| build_ranking(b, cfg.filter, RankKey::Mean).map_err(AppError::from)).collect()
}

type Matches = Vec<(LandmarkProfile, Option<LandmarkMatch>)>;

fn landmarks(cfg: &RunConfig, base: &MetaKnowledgeBase) -> Result<Matches, AppError> {
    let landmarkers = select_landmarkers(base, cfg.landmarkers)?;
    Ok(landmark_matches(base, &landmarkers)?)
}

fn match_map(matches: &Matches) -> HashMap<String, Option<LandmarkMatch>> {
    matches.iter().map(|(p, m)| (p.dataset_id.clone(), m.clone())).collect()
}

pub fn ingest(cfg: &RunConfig) -> Result<Outputs, AppError> {
    let loaded = load(cfg)?;
    let mut out = Outputs::new(&cfg.out);
    for base in &loaded.bases {
        let id = base.base_id();
        out.csv(&format!("records_{id}.csv"), |w| base.write_csv(w))?;
        out.csv(&format!("counts_{id}.csv"), |w| base.evaluation_counts().sorted_by_totals().write_csv(w))?;
    }
    Ok(out)
}

fn correlation_sets(
    cfg: &RunConfig,
    roster: &Roster,
    tables: &[RankingTable],
) -> Result<Vec<metareduce::ranking::CrossBaseCorrelations>, AppError> {
    let mut sets = Vec::new();
    let first = &tables[0];
    for other in &tables[1..] {
        let shared: Vec<String> =
            first.predictors().iter().filter(|p| other.predictors().contains(p)).cloned().collect();
        sets.push(cross_base_correlations(first, other, &shared, "all", cfg.drop_penalty_cells)?);
        let non_meta: Vec<String> = roster.non_meta_ids().into_iter().filter(|p| shared.contains(p)).collect();
        if non_meta.len() != shared.len() && non_meta.len() >= 2 {
            sets.push(cross_base_correlations(first, other, &non_meta, "non_meta", cfg.drop_penalty_cells)?);
        }
    }
    Ok(sets)
}

pub fn rank(cfg: &RunConfig) -> Result<Outputs, AppError> {
    let loaded = load(cfg)?;
    let tables = rankings(cfg, &loaded.bases)?;
    let mut out = Outputs::new(&cfg.out);
    for (i, t) in tables.iter().enumerate() {
        out.csv(&per_base("rankings", "csv", i + 1), |w| t.write_rankings_csv(w))?;
        out.csv(&per_base("leaderboard", "csv", i + 1), |w| t.write_leaderboard_csv(w))?;
    }
    if tables.len() > 1 {
        let sets = correlation_sets(cfg, &loaded.roster, &tables)?;
        out.csv("correlations.csv", |w| write_correlations_csv(&sets, w))?;
    }
    Ok(out)
}

pub fn similar(cfg: &RunConfig) -> Result<Outputs, AppError> {
    let loaded = load(cfg)?;
    let mut out = Outputs::new(&cfg.out);
    for (i, base) in loaded.bases.iter().enumerate() {
        let rows = landmarks(cfg, base)?;
        out.csv(&per_base("similarity", "csv", i + 1), |w| write_similarity_csv(&rows, w))?;
    }
    Ok(out)
}

fn evaluated_means(base: &MetaKnowledgeBase, dataset: &str) -> Result<Vec<f64>, AppError> {
    let mut means = Vec::new();
    for p in base.predictors() {
        let agg = base.aggregate(dataset, p, PipelineFilter::All)?;
        if !agg.is_penalty() {
            means.push(agg.mean_error);
        }
    }
    Ok(means)
}

type ChallengeOutput = (Vec<ChallengeRow>, Vec<IndistinguishabilityMatrix>, Vec<usize>);

fn challenge_rows(
    cfg: &RunConfig,
    loaded: &Loaded,
) -> Result<ChallengeOutput, AppError> {
    let first = &loaded.bases[0];
    let p = loaded.roster.len();
    let k_grid = usable_k(&cfg.k_grid, p)?;
    let mut rows = Vec::new();
    let mut matrices = Vec::new();
    for dataset in datasets_of(cfg, first)? {
        let skew = |base: Option<&MetaKnowledgeBase>| -> Result<Option<f64>, AppError> {
            match base {
                Some(b) if b.has_dataset(&dataset) => Ok(skewness(&evaluated_means(b, &dataset)?).ok()),
                _ => Ok(None),
            }
        };
        let mut groups = None;
        for base in &loaded.bases {
            if !base.has_dataset(&dataset) {
                continue;
            }
            let m = indistinguishability_matrix(base, &dataset, cfg.alpha, cfg.alpha_threshold)?;
            if groups.is_none() {
                groups = Some(best_groups(&m));
            }
            matrices.push(m);
        }
        let groups = groups.expect("first base holds the dataset");
        let g = groups.best_group_size as u64;
        let hit_probabilities = if g == 0 {
            Vec::new()
        } else {
            k_grid
                .iter()
                .map(|&k| random_top_hit_probability(p as u64, g, k as u64).map(|v| (k, v)))
                .collect::<metareduce::Result<_>>()?
        };
        rows.push(ChallengeRow {
            skewness_automl: skew(loaded.bases.first())?,
            skewness_default: skew(loaded.bases.get(1))?,
            best_group_size: groups.best_group_size,
            second_group_size: groups.second_group_size(),
            hit_probabilities,
            dataset,
        });
    }
    Ok((rows, matrices, k_grid))
}

pub fn challenge(cfg: &RunConfig) -> Result<Outputs, AppError> {
    let loaded = load(cfg)?;
    let (rows, matrices, k_grid) = challenge_rows(cfg, &loaded)?;
    let mut out = Outputs::new(&cfg.out);
    out.csv("challenge.csv", |w| write_challenge_csv(&rows, &k_grid, w))?;
    for m in &matrices {
        out.csv(&format!("matrices/{}/{}.csv", m.base_id, m.dataset_id), |w| m.write_csv(w))?;
    }
    Ok(out)
}

fn expectation_reports(cfg: &RunConfig, loaded: &Loaded) -> Result<Vec<ExpectationReport>, AppError> {
    let k_grid = usable_k(&cfg.k_grid, loaded.roster.len())?;
    let tables = rankings(cfg, &loaded.bases)?;
    let options = ExpectationOptions { include_closure: cfg.include_closure };
    let mut reports = Vec::new();
    for (base, table) in loaded.bases.iter().zip(&tables) {
        let hits = match_map(&landmarks(cfg, base)?);
        for dataset in datasets_of(cfg, base)? {
            let hit = hits.get(&dataset).cloned().flatten();
            reports.push(expectation_report(table, &loaded.roster, &dataset, &k_grid, hit.as_ref(), options)?);
        }
    }
    Ok(reports)
}

pub fn expect(cfg: &RunConfig) -> Result<Outputs, AppError> {
    let loaded = load(cfg)?;
    let reports = expectation_reports(cfg, &loaded)?;
    let mut out = Outputs::new(&cfg.out);
    out.csv("expectation.csv", |w| write_expectation_csv(&reports, w))?;
    out.csv("normalized.csv", |w| write_normalized_csv(&reports, w))?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct Simulation {
    #[serde(skip)]
    outcomes: Vec<RunOutcome>,
    cells: Vec<StrategyCell>,
    ranks: Vec<StrategyRank>,
    nemenyi: Option<NemenyiResult>,
    aggregate: Vec<AggregateRow>,
}

fn default_strategies(cfg: &RunConfig, n_bases: usize, p: usize) -> Result<Vec<StrategyLabel>, AppError> {
    let k_grid = usable_k(&cfg.k_grid, p)?;
    Ok(StrategyLabel::catalog(&k_grid)
        .into_iter()
        .filter(|l| l.base().is_none_or(|b| b as usize <= n_bases))
        .collect())
}

fn simulation(cfg: &RunConfig, loaded: &Loaded) -> Result<Simulation, AppError> {
    let first = &loaded.bases[0];
    let labels = match &cfg.strategies {
        Some(l) => l.clone(),
        None => default_strategies(cfg, loaded.bases.len(), loaded.roster.len())?,
    };
    let datasets = datasets_of(cfg, first)?;
    let tables = rankings(cfg, &loaded.bases)?;

    let mut spaces = StrategySpaces::new(&loaded.roster);
    spaces.rankings = tables.iter().collect();
    if labels.iter().any(|l| matches!(l, StrategyLabel::Culled { kind: StrategyKind::Landmarked, .. })) {
        for base in &loaded.bases {
            spaces.landmarks.push(match_map(&landmarks(cfg, base)?));
        }
    }
    if labels.contains(&StrategyLabel::R30) {
        for d in &datasets {
            if let Some(p) = prior_best_pipeline(first, d) {
                spaces.prior_best.insert(d.clone(), p);
            }
        }
    }
    // Surface errors surface early, before any run.
    for label in &labels {
        for d in &datasets {
            spaces.build(label, d, 0)?;
        }
    }

    let surrogate;
    let replay;
    let model: &dyn ResponseModel = match &cfg.surface {
        Some(path) => {
            surrogate = SurrogateSurface::from_json(&read_text(path)?)?;
            &surrogate
        }
        None => {
            replay = ReplayModel::new(first);
            &replay
        }
    };
    let budget = SearchBudget {
        total_cost: cfg.budget,
        landmark_deduction: 0.0,
        runs_per_strategy: cfg.seeds.len(),
        folds: cfg.folds,
    };
    let outcomes =
        run_matrix(&labels, &datasets, &cfg.seeds, model, &budget, &SearchSettings::default(), |l, d, s| {
            spaces.build(l, d, s)
        })?;

    let cells = strategy_cells(&outcomes, cfg.alpha, cfg.alpha_threshold, cfg.failure_policy);
    let ranks = rank_strategies(&cells);
    let nemenyi = if ranks.len() >= 2 {
        let avg: Vec<(String, f64)> = ranks.iter().map(|r| (r.strategy.clone(), r.avg_rank)).collect();
        Some(metareduce::harness::nemenyi_test(&avg, datasets.len(), cfg.alpha)?)
    } else {
        warn!("a single strategy has no critical-difference analysis");
        None
    };
    let aggregate = aggregate_report(&cells, &ranks)?;
    Ok(Simulation { outcomes, cells, ranks, nemenyi, aggregate })
}

pub fn simulate(cfg: &RunConfig) -> Result<Outputs, AppError> {
    let loaded = load(cfg)?;
    let sim = simulation(cfg, &loaded)?;
    let mut out = Outputs::new(&cfg.out);
    out.csv("runs.csv", |w| write_runs_csv(&sim.outcomes, w))?;
    out.csv("consistency.csv", |w| write_consistency_csv(&sim.cells, w))?;
    out.csv("strategy_ranks.csv", |w| write_strategy_ranks_csv(&sim.ranks, w))?;
    if let Some(n) = &sim.nemenyi {
        out.json("nemenyi.json", n)?;
    }
    out.csv("aggregate.csv", |w| write_aggregate_csv(&sim.aggregate, w))?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct BaseSummary {
    base_id: String,
    records: usize,
    datasets: usize,
    predictors: usize,
    leaderboard: Vec<metareduce::ranking::LeaderboardEntry>,
    similarity: Vec<SimilarityRow>,
}

#[derive(Debug, Serialize)]
struct SimilarityRow {
    dataset: String,
    most_similar: Option<String>,
    coefficient: Option<f64>,
    landmark_cost: f64,
}

#[derive(Debug, Serialize)]
struct Summary {
    bases: Vec<BaseSummary>,
    correlations: Vec<metareduce::ranking::CrossBaseCorrelations>,
    challenge: Vec<ChallengeRow>,
    expectation: Vec<ExpectationReport>,
    simulation: Simulation,
}

pub fn report(cfg: &RunConfig) -> Result<Outputs, AppError> {
    let loaded = load(cfg)?;
    let tables = rankings(cfg, &loaded.bases)?;
    let mut bases = Vec::new();
    for (base, table) in loaded.bases.iter().zip(&tables) {
        let similarity = landmarks(cfg, base)?
            .into_iter()
            .map(|(p, m)| SimilarityRow {
                dataset: p.dataset_id,
                most_similar: m.as_ref().map(|m| m.dataset_id.clone()),
                coefficient: m.as_ref().map(|m| m.coefficient),
                landmark_cost: p.total_landmark_cost,
            })
            .collect();
        bases.push(BaseSummary {
            base_id: base.base_id().to_string(),
            records: base.records().len(),
            datasets: base.datasets().len(),
            predictors: base.predictors().len(),
            leaderboard: table.leaderboard().to_vec(),
            similarity,
        });
    }
    let summary = Summary {
        bases,
        correlations: if tables.len() > 1 { correlation_sets(cfg, &loaded.roster, &tables)? } else { Vec::new() },
        challenge: challenge_rows(cfg, &loaded)?.0,
        expectation: expectation_reports(cfg, &loaded)?,
        simulation: simulation(cfg, &loaded)?,
    };
    let mut out = Outputs::new(&cfg.out);
    out.json("summary.json", &summary)?;
    Ok(out)
}

pub fn synth(cfg: &RunConfig) -> Result<Outputs, AppError> {
    let sample = planted_sample();
    let mut out = Outputs::new(&cfg.out);
    out.csv("automl_meta.csv", |w| write_records_csv(&sample.automl_records, w))?;
    out.csv("default_meta.csv", |w| write_records_csv(&sample.default_records, w))?;
    out.json("roster.json", &sample.roster)?;
    out.json("surface.json", &sample.surface)?;
    out.json("manifest.json", &sample.manifest)?;
    Ok(out)
}
