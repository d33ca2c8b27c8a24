//! Per-dataset predictor rankings, the cross-dataset leaderboard, and
//! correlations between ranking sources.

use std::cmp::Ordering;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::meta_store::{MetaKnowledgeBase, PipelineFilter};

/// Which cell statistic ranks are computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RankKey {
    #[default]
    Mean,
    Best,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMode {
    Pearson,
    /// Pearson on tie-averaged ranks.
    Spearman,
}

/// Ascending ranks, 1 = smallest. Equal values share the mean of the ranks they span.
pub fn rank_with_ties(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

pub fn correlate(xs: &[f64], ys: &[f64], mode: CorrelationMode) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!("length mismatch {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two points".into()));
    }
    match mode {
        CorrelationMode::Pearson => pearson(xs, ys),
        CorrelationMode::Spearman => pearson(&rank_with_ties(xs), &rank_with_ties(ys)),
    }
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 || xs.iter().all(|&x| x == xs[0]) || ys.iter().all(|&y| y == ys[0]) {
        return Err(Error::UndefinedCorrelation("constant input vector".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderboardEntry {
    pub predictor: String,
    pub avg_rank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingTable {
    pub base_id: String,
    pub pipeline_filter: PipelineFilter,
    pub key: RankKey,
    datasets: Vec<String>,
    predictors: Vec<String>,
    /// `values[d][p]`: the ranked statistic (mean error by default).
    values: Vec<Vec<f64>>,
    ranks: Vec<Vec<f64>>,
    evaluated: Vec<Vec<bool>>,
    leaderboard: Vec<LeaderboardEntry>,
}

impl RankingTable {
    /// Ranks a dense `values[dataset][predictor]` matrix.
    pub fn from_matrix(
        base_id: impl Into<String>,
        datasets: Vec<String>,
        predictors: Vec<String>,
        values: Vec<Vec<f64>>,
        evaluated: Option<Vec<Vec<bool>>>,
    ) -> Result<Self> {
        if values.len() != datasets.len() || values.iter().any(|row| row.len() != predictors.len()) {
            return Err(Error::InvalidArgument("value matrix does not match universes".into()));
        }
        if values.iter().flatten().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("NaN in ranking values".into()));
        }
        let evaluated = evaluated.unwrap_or_else(|| vec![vec![true; predictors.len()]; datasets.len()]);
        let ranks: Vec<Vec<f64>> = values.iter().map(|row| rank_with_ties(row)).collect();
        let leaderboard = leaderboard_from(&predictors, &ranks, |_| true);
        Ok(Self {
            base_id: base_id.into(),
            pipeline_filter: PipelineFilter::All,
            key: RankKey::Mean,
            datasets,
            predictors,
            values,
            ranks,
            evaluated,
            leaderboard,
        })
    }

    pub fn datasets(&self) -> &[String] {
        &self.datasets
    }

    pub fn predictors(&self) -> &[String] {
        &self.predictors
    }

    fn d_index(&self, dataset: &str) -> Result<usize> {
        self.datasets.iter().position(|d| d == dataset).ok_or_else(|| Error::UnknownDataset(dataset.into()))
    }

    fn p_index(&self, predictor: &str) -> Result<usize> {
        self.predictors
            .iter()
            .position(|p| p == predictor)
            .ok_or_else(|| Error::UnknownPredictor(predictor.into()))
    }

    pub fn value(&self, dataset: &str, predictor: &str) -> Result<f64> {
        Ok(self.values[self.d_index(dataset)?][self.p_index(predictor)?])
    }

    pub fn rank(&self, dataset: &str, predictor: &str) -> Result<f64> {
        Ok(self.ranks[self.d_index(dataset)?][self.p_index(predictor)?])
    }

    pub fn is_evaluated(&self, dataset: &str, predictor: &str) -> Result<bool> {
        Ok(self.evaluated[self.d_index(dataset)?][self.p_index(predictor)?])
    }

    /// Ranked statistic for every predictor on `dataset`, in [`Self::predictors`] order.
    pub fn values_for(&self, dataset: &str) -> Result<&[f64]> {
        Ok(&self.values[self.d_index(dataset)?])
    }

    pub fn ranks_for(&self, dataset: &str) -> Result<&[f64]> {
        Ok(&self.ranks[self.d_index(dataset)?])
    }

    /// Predictors on `dataset`, best first; equal ranks ordered by id.
    pub fn ranked_predictors(&self, dataset: &str) -> Result<Vec<String>> {
        let ranks = self.ranks_for(dataset)?;
        let mut order: Vec<usize> = (0..self.predictors.len()).collect();
        order.sort_by(|&a, &b| {
            ranks[a].total_cmp(&ranks[b]).then_with(|| self.predictors[a].cmp(&self.predictors[b]))
        });
        Ok(order.into_iter().map(|i| self.predictors[i].clone()).collect())
    }

    pub fn leaderboard(&self) -> &[LeaderboardEntry] {
        &self.leaderboard
    }

    pub fn leaderboard_order(&self) -> Vec<String> {
        self.leaderboard.iter().map(|e| e.predictor.clone()).collect()
    }

    /// Leaderboard compiled from every dataset except `held_out`.
    pub fn leaderboard_excluding(&self, held_out: &str) -> Result<Vec<LeaderboardEntry>> {
        let skip = self.d_index(held_out)?;
        if self.datasets.len() < 2 {
            return Err(Error::InvalidArgument("leaderboard needs at least two datasets".into()));
        }
        Ok(leaderboard_from(&self.predictors, &self.ranks, |d| d != skip))
    }

    pub fn write_rankings_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["dataset", "predictor", "mean_error", "rank"])?;
        for (d, dataset) in self.datasets.iter().enumerate() {
            for (p, predictor) in self.predictors.iter().enumerate() {
                w.write_record([
                    dataset.as_str(),
                    predictor.as_str(),
                    &self.values[d][p].to_string(),
                    &self.ranks[d][p].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_leaderboard_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_leaderboard_csv(&self.leaderboard, writer)
    }
}

pub fn write_leaderboard_csv<W: Write>(entries: &[LeaderboardEntry], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["predictor", "avg_rank", "position"])?;
    for (i, e) in entries.iter().enumerate() {
        w.write_record([e.predictor.as_str(), &e.avg_rank.to_string(), &(i + 1).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn leaderboard_from(
    predictors: &[String],
    ranks: &[Vec<f64>],
    include: impl Fn(usize) -> bool,
) -> Vec<LeaderboardEntry> {
    let used: Vec<usize> = (0..ranks.len()).filter(|&d| include(d)).collect();
    let mut entries: Vec<LeaderboardEntry> = predictors
        .iter()
        .enumerate()
        .map(|(p, id)| {
            let avg_rank = if used.is_empty() {
                0.0
            } else {
                used.iter().map(|&d| ranks[d][p]).sum::<f64>() / used.len() as f64
            };
            LeaderboardEntry { predictor: id.clone(), avg_rank }
        })
        .collect();
    entries.sort_by(|a, b| match a.avg_rank.total_cmp(&b.avg_rank) {
        Ordering::Equal => a.predictor.cmp(&b.predictor),
        other => other,
    });
    entries
}

/// Ranks every predictor of the base's roster on every dataset, penalty cells included.
pub fn build_ranking(base: &MetaKnowledgeBase, filter: PipelineFilter, key: RankKey) -> Result<RankingTable> {
    let datasets = base.datasets().to_vec();
    let predictors = base.predictors().to_vec();
    let mut values = Vec::with_capacity(datasets.len());
    let mut evaluated = Vec::with_capacity(datasets.len());
    for d in &datasets {
        let mut row = Vec::with_capacity(predictors.len());
        let mut seen = Vec::with_capacity(predictors.len());
        for p in &predictors {
            let agg = base.aggregate(d, p, filter)?;
            row.push(match key {
                RankKey::Mean => agg.mean_error,
                RankKey::Best => agg.best_error,
            });
            seen.push(!agg.is_penalty());
        }
        values.push(row);
        evaluated.push(seen);
    }
    let mut table = RankingTable::from_matrix(base.base_id(), datasets, predictors, values, Some(evaluated))?;
    table.pipeline_filter = filter;
    table.key = key;
    Ok(table)
}

/// Leaderboard of `base` compiled without `held_out`.
pub fn leaderboard_excluding(
    base: &MetaKnowledgeBase,
    filter: PipelineFilter,
    held_out: &str,
) -> Result<Vec<String>> {
    let table = build_ranking(base, filter, RankKey::Mean)?;
    Ok(table.leaderboard_excluding(held_out)?.into_iter().map(|e| e.predictor).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub dataset: String,
    /// `None` when undefined (a constant side after restriction).
    pub rank_corr: Option<f64>,
    pub error_corr: Option<f64>,
    pub subset_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossBaseCorrelations {
    pub rows: Vec<CorrelationRow>,
    pub leaderboard_rank_corr: Option<f64>,
    pub subset_label: String,
}

/// Dataset label used for the leaderboard row in `correlations.csv`.
pub const LEADERBOARD_ROW: &str = "*leaderboard*";

/// Compares two bases' rankings and mean errors per shared dataset, restricted to `subset`.
///
/// With `drop_penalty_cells`, predictors unevaluated on a dataset in either
/// base are left out of that dataset's comparison.
pub fn cross_base_correlations(
    a: &RankingTable,
    b: &RankingTable,
    subset: &[String],
    subset_label: &str,
    drop_penalty_cells: bool,
) -> Result<CrossBaseCorrelations> {
    if subset.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "correlation subset `{subset_label}` needs at least two predictors"
        )));
    }
    let ia: Vec<usize> = subset.iter().map(|p| a.p_index(p)).collect::<Result<_>>()?;
    let ib: Vec<usize> = subset.iter().map(|p| b.p_index(p)).collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (da, dataset) in a.datasets.iter().enumerate() {
        let Ok(db) = b.d_index(dataset) else { continue };
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (&pa, &pb) in ia.iter().zip(&ib) {
            if drop_penalty_cells && !(a.evaluated[da][pa] && b.evaluated[db][pb]) {
                continue;
            }
            xs.push(a.values[da][pa]);
            ys.push(b.values[db][pb]);
        }
        rows.push(CorrelationRow {
            dataset: dataset.clone(),
            rank_corr: correlate(&xs, &ys, CorrelationMode::Spearman).ok(),
            error_corr: correlate(&xs, &ys, CorrelationMode::Pearson).ok(),
            subset_label: subset_label.to_string(),
        });
    }

    let lead = |t: &RankingTable, idx: &[usize]| -> Vec<f64> {
        idx.iter()
            .map(|&p| {
                let id = &t.predictors[p];
                t.leaderboard.iter().find(|e| &e.predictor == id).map(|e| e.avg_rank).unwrap_or(f64::NAN)
            })
            .collect()
    };
    let leaderboard_rank_corr = correlate(&lead(a, &ia), &lead(b, &ib), CorrelationMode::Spearman).ok();
    Ok(CrossBaseCorrelations { rows, leaderboard_rank_corr, subset_label: subset_label.to_string() })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_correlations_csv<W: Write>(sets: &[CrossBaseCorrelations], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["dataset", "rank_corr", "error_corr", "subset_label"])?;
    for set in sets {
        for row in &set.rows {
            w.write_record([row.dataset.as_str(), &opt(row.rank_corr), &opt(row.error_corr), &row.subset_label])?;
        }
        w.write_record([LEADERBOARD_ROW, &opt(set.leaderboard_rank_corr), "", &set.subset_label])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tie_rule() {
        assert_eq!(rank_with_ties(&[0.1, 0.2, 0.2, 0.4]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(rank_with_ties(&[0.5]), vec![1.0]);
        assert_eq!(rank_with_ties(&[0.3, 0.3, 0.3]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn single_dataset_table_with_penalty() {
        let t = RankingTable::from_matrix("b", ids(&["d1"]), ids(&["P0", "P1", "P2"]), vec![vec![0.2, 0.4, 1.0]], None)
            .unwrap();
        assert_eq!(t.ranks_for("d1").unwrap(), &[1.0, 2.0, 3.0]);
        assert_eq!(t.leaderboard_order(), ids(&["P0", "P1", "P2"]));
    }

    #[test]
    fn symmetric_datasets_tie_broken_by_id() {
        let t = RankingTable::from_matrix(
            "b",
            ids(&["d1", "d2"]),
            ids(&["B", "A"]),
            vec![vec![0.1, 0.2], vec![0.2, 0.1]],
            None,
        )
        .unwrap();
        assert_eq!(t.leaderboard()[0], LeaderboardEntry { predictor: "A".into(), avg_rank: 1.5 });
        assert_eq!(t.leaderboard()[1].avg_rank, 1.5);
    }

    #[test]
    fn leaderboard_excluding_requires_two_datasets() {
        let one = RankingTable::from_matrix("b", ids(&["d1"]), ids(&["A", "B"]), vec![vec![0.1, 0.2]], None).unwrap();
        assert!(one.leaderboard_excluding("d1").is_err());
        let two = RankingTable::from_matrix(
            "b",
            ids(&["d1", "d2"]),
            ids(&["A", "B"]),
            vec![vec![0.1, 0.2], vec![0.1, 0.2]],
            None,
        )
        .unwrap();
        let held: Vec<String> = two.leaderboard_excluding("d2").unwrap().into_iter().map(|e| e.predictor).collect();
        assert_eq!(held, two.leaderboard_order());
        assert!(matches!(two.leaderboard_excluding("d3"), Err(Error::UnknownDataset(_))));
    }

    #[test]
    fn correlation_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((correlate(&xs, &xs, CorrelationMode::Pearson).unwrap() - 1.0).abs() < 1e-15);
        let rev = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert_eq!(correlate(&xs, &rev, CorrelationMode::Spearman).unwrap(), -1.0);
        assert!(matches!(
            correlate(&xs, &[1.0; 5], CorrelationMode::Pearson),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    /// Spearman through the rank-difference formula, valid without ties.
    fn spearman_by_rank_differences(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let rank = |v: &[f64], i: usize| 1 + v.iter().filter(|&&w| w < v[i]).count();
        let d2: f64 = (0..xs.len()).map(|i| (rank(xs, i) as f64 - rank(ys, i) as f64).powi(2)).sum();
        1.0 - 6.0 * d2 / (n * (n * n - 1.0))
    }

    #[test]
    fn spearman_small_permutation() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [2.0, 1.0, 4.0, 3.0, 5.0];
        let oracle = spearman_by_rank_differences(&xs, &ys);
        // sum of squared rank differences is 4, so 1 - 24/120
        assert_eq!(oracle, 0.8);
        let got = correlate(&xs, &ys, CorrelationMode::Spearman).unwrap();
        assert!((got - oracle).abs() < 1e-12);
    }

    #[test]
    fn cross_base_with_itself_is_perfect() {
        let t = RankingTable::from_matrix(
            "b",
            ids(&["d1", "d2"]),
            ids(&["A", "B", "C"]),
            vec![vec![0.1, 0.2, 0.5], vec![0.3, 0.2, 0.25]],
            None,
        )
        .unwrap();
        let out = cross_base_correlations(&t, &t, &ids(&["A", "B", "C"]), "all", false).unwrap();
        for row in &out.rows {
            assert_eq!(row.rank_corr, Some(1.0));
            assert!((row.error_corr.unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(out.leaderboard_rank_corr, Some(1.0));
        assert!(cross_base_correlations(&t, &t, &ids(&["A"]), "one", false).is_err());
        assert!(cross_base_correlations(&t, &t, &[], "none", false).is_err());
    }

    #[test]
    fn dropping_penalty_cells() {
        let ev = Some(vec![vec![true, true, true, false]]);
        let a = RankingTable::from_matrix("a", ids(&["d"]), ids(&["A", "B", "C", "D"]), vec![vec![0.1, 0.2, 0.3, 1.0]], ev.clone())
            .unwrap();
        let b = RankingTable::from_matrix("b", ids(&["d"]), ids(&["A", "B", "C", "D"]), vec![vec![0.3, 0.2, 0.1, 1.0]], ev)
            .unwrap();
        let all = ids(&["A", "B", "C", "D"]);
        let kept = cross_base_correlations(&a, &b, &all, "all", false).unwrap();
        let dropped = cross_base_correlations(&a, &b, &all, "all", true).unwrap();
        assert!(kept.rows[0].rank_corr.unwrap() > dropped.rows[0].rank_corr.unwrap());
        assert_eq!(dropped.rows[0].rank_corr, Some(-1.0));
    }
}
