use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::Serialize;

use super::RunOutcome;
use crate::challenge::{welch_p, AlphaThreshold};
use crate::config_space::StrategyLabel;
use crate::error::{Error, Result};
use crate::meta_store::MISSING_PENALTY;
use crate::ranking::rank_with_ties;

/// Share of run pairs whose best CV vectors are statistically indistinguishable.
///
/// The denominator counts every pair, so a pair touching a failed run counts
/// as distinguishable. Fewer than two runs give 0.
pub fn consistency(outcomes: &[RunOutcome], alpha: f64, threshold: AlphaThreshold) -> f64 {
    let n = outcomes.len();
    if n < 2 {
        return 0.0;
    }
    let cutoff = threshold.cutoff(alpha);
    let mut same = 0usize;
    for (i, a) in outcomes.iter().enumerate() {
        for b in &outcomes[i + 1..] {
            if let (Some(x), Some(y)) = (&a.best_cv, &b.best_cv) {
                if matches!(welch_p(x, y), Ok(p) if p > cutoff) {
                    same += 1;
                }
            }
        }
    }
    same as f64 / (n * (n - 1) / 2) as f64
}

/// How failed runs enter a strategy's mean best error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    /// A failed run counts as error 1.0.
    Penalize,
    /// Failed runs are left out; if every run failed the mean is 1.0.
    Drop,
}

impl std::str::FromStr for FailurePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "penalize" => Ok(FailurePolicy::Penalize),
            "drop" => Ok(FailurePolicy::Drop),
            other => Err(Error::InvalidArgument(format!("unknown failure policy `{other}`"))),
        }
    }
}

/// Summary of one strategy's runs on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyCell {
    pub strategy: String,
    pub dataset: String,
    pub runs: usize,
    pub failure_count: usize,
    pub consistency: f64,
    pub mean_best_error: f64,
}

/// Groups outcomes by (strategy, dataset). Strategies keep their first
/// appearance order, datasets are sorted.
pub fn strategy_cells(
    outcomes: &[RunOutcome],
    alpha: f64,
    threshold: AlphaThreshold,
    policy: FailurePolicy,
) -> Vec<StrategyCell> {
    let mut order: HashMap<&str, usize> = HashMap::new();
    let mut groups: BTreeMap<(usize, &str), Vec<RunOutcome>> = BTreeMap::new();
    for o in outcomes {
        let next = order.len();
        let s = *order.entry(o.strategy_label.as_str()).or_insert(next);
        groups.entry((s, o.dataset_id.as_str())).or_default().push(o.clone());
    }
    groups
        .into_iter()
        .map(|((_, dataset), mut runs)| {
            runs.sort_by_key(|o| o.run_index);
            let errors: Vec<Option<f64>> = runs.iter().map(RunOutcome::mean_cv_error).collect();
            let failure_count = errors.iter().filter(|e| e.is_none()).count();
            let mean_best_error = match policy {
                FailurePolicy::Penalize => {
                    errors.iter().map(|e| e.unwrap_or(MISSING_PENALTY)).sum::<f64>() / errors.len() as f64
                }
                FailurePolicy::Drop => {
                    let done: Vec<f64> = errors.iter().flatten().copied().collect();
                    if done.is_empty() {
                        MISSING_PENALTY
                    } else {
                        done.iter().sum::<f64>() / done.len() as f64
                    }
                }
            };
            StrategyCell {
                strategy: runs[0].strategy_label.clone(),
                dataset: dataset.to_string(),
                runs: runs.len(),
                failure_count,
                consistency: consistency(&runs, alpha, threshold),
                mean_best_error,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyRank {
    pub strategy: String,
    pub avg_rank: f64,
    /// `(dataset, rank)` in dataset order.
    pub ranks: Vec<(String, f64)>,
}

/// Tie-averaged per-dataset ranks of mean best error (rank 1 is lowest),
/// averaged across datasets. A strategy without a cell on a dataset counts as 1.0 there.
pub fn rank_strategies(cells: &[StrategyCell]) -> Vec<StrategyRank> {
    let mut strategies: Vec<&str> = Vec::new();
    let mut datasets: Vec<&str> = Vec::new();
    let mut value: HashMap<(&str, &str), f64> = HashMap::new();
    for c in cells {
        if !strategies.contains(&c.strategy.as_str()) {
            strategies.push(&c.strategy);
        }
        if !datasets.contains(&c.dataset.as_str()) {
            datasets.push(&c.dataset);
        }
        value.insert((&c.strategy, &c.dataset), c.mean_best_error);
    }
    datasets.sort_unstable();
    let mut per: Vec<Vec<(String, f64)>> = vec![Vec::new(); strategies.len()];
    for d in &datasets {
        let row: Vec<f64> =
            strategies.iter().map(|s| value.get(&(*s, *d)).copied().unwrap_or(MISSING_PENALTY)).collect();
        for (i, r) in rank_with_ties(&row).into_iter().enumerate() {
            per[i].push((d.to_string(), r));
        }
    }
    strategies
        .iter()
        .zip(per)
        .map(|(s, ranks)| StrategyRank {
            strategy: s.to_string(),
            avg_rank: if ranks.is_empty() { 0.0 } else { ranks.iter().map(|r| r.1).sum::<f64>() / ranks.len() as f64 },
            ranks,
        })
        .collect()
}

/// Grouped means by strategy family, base index and k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub family: String,
    pub base: Option<u32>,
    pub k: Option<usize>,
    pub n_strategies: usize,
    pub mean_consistency: f64,
    pub mean_failures: f64,
    pub mean_rank: f64,
    /// Population variance of the member strategies' per-dataset ranks.
    pub rank_variance: f64,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

pub fn aggregate_report(cells: &[StrategyCell], ranks: &[StrategyRank]) -> Result<Vec<AggregateRow>> {
    type Key = (&'static str, Option<u32>, Option<usize>);
    let mut groups: BTreeMap<Key, (Vec<String>, Vec<f64>, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let label_key = |s: &str| -> Result<Key> {
        let label: StrategyLabel = s.parse()?;
        Ok((label.family(), label.base(), label.k()))
    };
    for c in cells {
        let g = groups.entry(label_key(&c.strategy)?).or_default();
        if !g.0.contains(&c.strategy) {
            g.0.push(c.strategy.clone());
        }
        g.1.push(c.consistency);
        g.2.push(c.failure_count as f64);
    }
    for r in ranks {
        let g = groups.entry(label_key(&r.strategy)?).or_default();
        if !g.0.contains(&r.strategy) {
            g.0.push(r.strategy.clone());
        }
        g.3.extend(r.ranks.iter().map(|x| x.1));
    }
    Ok(groups
        .into_iter()
        .map(|((family, base, k), (members, cons, fails, rks))| {
            let m = mean(&rks);
            AggregateRow {
                family: family.to_string(),
                base,
                k,
                n_strategies: members.len(),
                mean_consistency: mean(&cons),
                mean_failures: mean(&fails),
                mean_rank: m,
                rank_variance: mean(&rks.iter().map(|r| (r - m) * (r - m)).collect::<Vec<_>>()),
            }
        })
        .collect())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_runs_csv<W: Write>(outcomes: &[RunOutcome], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["strategy", "dataset", "run", "status", "mean_cv_error", "cost_spent", "pipeline"])?;
    for o in outcomes {
        let pipeline = o
            .best_pipeline
            .as_ref()
            .map(|p| p.components.iter().zip(&p.configs).map(|(c, k)| format!("{c}[{k}]")).collect::<Vec<_>>().join("|"));
        w.write_record([
            o.strategy_label.clone(),
            o.dataset_id.clone(),
            o.run_index.to_string(),
            o.status.as_str().to_string(),
            opt(o.mean_cv_error()),
            o.cost_spent.to_string(),
            pipeline.unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_consistency_csv<W: Write>(cells: &[StrategyCell], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["strategy", "dataset", "runs", "failures", "consistency", "mean_best_error"])?;
    for c in cells {
        w.write_record([
            c.strategy.clone(),
            c.dataset.clone(),
            c.runs.to_string(),
            c.failure_count.to_string(),
            c.consistency.to_string(),
            c.mean_best_error.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_strategy_ranks_csv<W: Write>(ranks: &[StrategyRank], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let datasets: Vec<String> = ranks.first().map(|r| r.ranks.iter().map(|x| x.0.clone()).collect()).unwrap_or_default();
    let mut header = vec!["strategy".to_string(), "avg_rank".to_string()];
    header.extend(datasets.iter().map(|d| format!("rank_{d}")));
    w.write_record(&header)?;
    for r in ranks {
        let mut rec = vec![r.strategy.clone(), r.avg_rank.to_string()];
        rec.extend(r.ranks.iter().map(|x| x.1.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "family", "base", "k", "n_strategies", "mean_consistency", "mean_failures", "mean_rank", "rank_variance",
    ])?;
    for r in rows {
        w.write_record([
            r.family.clone(),
            opt(r.base),
            opt(r.k),
            r.n_strategies.to_string(),
            r.mean_consistency.to_string(),
            r.mean_failures.to_string(),
            r.mean_rank.to_string(),
            r.rank_variance.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
