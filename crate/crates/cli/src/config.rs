use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use metareduce::challenge::{AlphaThreshold, DEFAULT_ALPHA};
use metareduce::config_space::{StrategyLabel, DEFAULT_K_GRID};
use metareduce::harness::{FailurePolicy, DEFAULT_RUNS};
use metareduce::landmarking::DEFAULT_LANDMARKERS;
use metareduce::meta_store::{Flavor, PipelineFilter, DEFAULT_FOLDS};

use crate::AppError;

/// Options shared by every subcommand. Each falls back to its
/// `METAREDUCE_*` environment variable, then to the `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    /// JSON config file providing defaults for any option below.
    #[arg(long, env = "METAREDUCE_CONFIG", global = true)]
    pub config: Option<PathBuf>,

    /// Evaluation-record file (CSV or JSON lines); repeat for bases 1, 2, ...
    #[arg(long, env = "METAREDUCE_BASE", value_delimiter = ',')]
    pub base: Vec<PathBuf>,

    /// Flavor of each base in order: opportunistic or systematic.
    #[arg(long, env = "METAREDUCE_FLAVORS", value_delimiter = ',')]
    pub flavors: Vec<String>,

    #[arg(long, env = "METAREDUCE_FOLDS")]
    pub folds: Option<usize>,

    /// Roster manifest (JSON).
    #[arg(long, env = "METAREDUCE_ROSTER")]
    pub roster: Option<PathBuf>,

    /// Strategy labels such as O1-k4, M2-k10, L1-k8, R-k4:seed=7, baseline, avatar, r30.
    #[arg(long, env = "METAREDUCE_STRATEGIES", value_delimiter = ',')]
    pub strategies: Vec<String>,

    /// k grid.
    #[arg(long, env = "METAREDUCE_K", value_delimiter = ',')]
    pub k: Vec<usize>,

    /// Restrict to these datasets.
    #[arg(long, env = "METAREDUCE_DATASET", value_delimiter = ',')]
    pub dataset: Vec<String>,

    /// Search budget in abstract cost units.
    #[arg(long, env = "METAREDUCE_BUDGET")]
    pub budget: Option<f64>,

    /// Run seeds: `1..5` (inclusive) or a comma list.
    #[arg(long, env = "METAREDUCE_SEEDS")]
    pub seeds: Option<String>,

    #[arg(long, env = "METAREDUCE_ALPHA")]
    pub alpha: Option<f64>,

    /// conventional (p > alpha) or literal (p > 1 - alpha).
    #[arg(long, env = "METAREDUCE_ALPHA_THRESHOLD")]
    pub alpha_threshold: Option<String>,

    /// Output directory.
    #[arg(long, env = "METAREDUCE_OUT")]
    pub out: Option<PathBuf>,

    /// all, single_only or multi_only.
    #[arg(long, env = "METAREDUCE_FILTER")]
    pub filter: Option<String>,

    /// penalize or drop.
    #[arg(long, env = "METAREDUCE_FAILURE_POLICY")]
    pub failure_policy: Option<String>,

    #[arg(long, env = "METAREDUCE_DROP_PENALTY_CELLS")]
    pub drop_penalty_cells: bool,

    #[arg(long, env = "METAREDUCE_CREDIT_BASE_LEARNERS")]
    pub credit_base_learners: bool,

    /// Count dependency-closure additions in pool expectations.
    #[arg(long, env = "METAREDUCE_INCLUDE_CLOSURE")]
    pub include_closure: bool,

    /// Surrogate surface manifest; without one, simulation replays base 1.
    #[arg(long, env = "METAREDUCE_SURFACE")]
    pub surface: Option<PathBuf>,

    /// Number of landmarker predictors.
    #[arg(long, env = "METAREDUCE_LANDMARKERS")]
    pub landmarkers: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    base: Vec<PathBuf>,
    flavors: Vec<String>,
    folds: Option<usize>,
    roster: Option<PathBuf>,
    strategies: Vec<String>,
    k: Vec<usize>,
    dataset: Vec<String>,
    budget: Option<f64>,
    seeds: Option<String>,
    alpha: Option<f64>,
    alpha_threshold: Option<String>,
    out: Option<PathBuf>,
    filter: Option<String>,
    failure_policy: Option<String>,
    drop_penalty_cells: Option<bool>,
    credit_base_learners: Option<bool>,
    include_closure: Option<bool>,
    surface: Option<PathBuf>,
    landmarkers: Option<usize>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub bases: Vec<(PathBuf, Flavor)>,
    pub folds: usize,
    pub roster: Option<PathBuf>,
    pub strategies: Option<Vec<StrategyLabel>>,
    pub k_grid: Vec<usize>,
    pub datasets: Vec<String>,
    pub budget: f64,
    pub seeds: Vec<u64>,
    pub alpha: f64,
    pub alpha_threshold: AlphaThreshold,
    pub out: PathBuf,
    pub filter: PipelineFilter,
    pub failure_policy: FailurePolicy,
    pub drop_penalty_cells: bool,
    pub credit_base_learners: bool,
    pub include_closure: bool,
    pub surface: Option<PathBuf>,
    pub landmarkers: usize,
}

pub const DEFAULT_BUDGET: f64 = 3000.0;

fn or_vec<T>(flag: Vec<T>, file: Vec<T>) -> Vec<T> {
    if flag.is_empty() {
        file
    } else {
        flag
    }
}

fn parse_flavor(s: &str) -> Result<Flavor, AppError> {
    match s {
        "opportunistic" => Ok(Flavor::Opportunistic),
        "systematic" => Ok(Flavor::Systematic),
        other => Err(AppError::input(format!("unknown flavor `{other}`"))),
    }
}

/// `a..b` (inclusive) or `a,b,c`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, AppError> {
    let bad = || AppError::input(format!("malformed seed list `{text}`"));
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn read_file_config(path: &Path) -> Result<FileConfig, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::input(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| AppError::input(format!("config {}: {e}", path.display())))
}

impl RunConfig {
    pub fn resolve(opts: Opts) -> Result<Self, AppError> {
        let file = match &opts.config {
            Some(p) => read_file_config(p)?,
            None => FileConfig::default(),
        };
        let base_paths = or_vec(opts.base, file.base);
        let flavors: Vec<Flavor> =
            or_vec(opts.flavors, file.flavors).iter().map(|s| parse_flavor(s)).collect::<Result<_, _>>()?;
        if flavors.len() > base_paths.len() {
            return Err(AppError::input("more flavors than bases"));
        }
        let bases = base_paths
            .into_iter()
            .enumerate()
            .map(|(i, p)| (p, flavors.get(i).copied().unwrap_or(Flavor::Opportunistic)))
            .collect();

        let strategies = or_vec(opts.strategies, file.strategies);
        let strategies = if strategies.is_empty() {
            None
        } else {
            Some(
                strategies
                    .iter()
                    .map(|s| s.trim().parse::<StrategyLabel>().map_err(AppError::from))
                    .collect::<Result<Vec<_>, _>>()?,
            )
        };
        let k_grid = or_vec(opts.k, file.k);
        let k_grid = if k_grid.is_empty() { DEFAULT_K_GRID.to_vec() } else { k_grid };

        let seeds = match opts.seeds.or(file.seeds) {
            Some(text) => parse_seeds(&text)?,
            None => (1..=DEFAULT_RUNS as u64).collect(),
        };
        let alpha = opts.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(AppError::input(format!("alpha {alpha} outside (0, 1)")));
        }
        let budget = opts.budget.or(file.budget).unwrap_or(DEFAULT_BUDGET);
        if budget.is_nan() || budget <= 0.0 {
            return Err(AppError::input(format!("budget {budget} must be positive")));
        }
        let folds = opts.folds.or(file.folds).unwrap_or(DEFAULT_FOLDS);

        Ok(Self {
            bases,
            folds,
            roster: opts.roster.or(file.roster),
            strategies,
            k_grid,
            datasets: or_vec(opts.dataset, file.dataset),
            budget,
            seeds,
            alpha,
            alpha_threshold: opts.alpha_threshold.or(file.alpha_threshold).as_deref().unwrap_or("conventional").parse()?,
            out: opts.out.or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            filter: opts.filter.or(file.filter).as_deref().unwrap_or("all").parse()?,
            failure_policy: opts.failure_policy.or(file.failure_policy).as_deref().unwrap_or("penalize").parse()?,
            drop_penalty_cells: opts.drop_penalty_cells || file.drop_penalty_cells.unwrap_or(false),
            credit_base_learners: opts.credit_base_learners || file.credit_base_learners.unwrap_or(false),
            include_closure: opts.include_closure || file.include_closure.unwrap_or(false),
            surface: opts.surface.or(file.surface),
            landmarkers: opts.landmarkers.or(file.landmarkers).unwrap_or(DEFAULT_LANDMARKERS),
        })
    }
}
