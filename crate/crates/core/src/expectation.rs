//! Expected average and expected best ("optimal") loss for oracle and random
//! culling, plus the oracle-to-random normalisation used to place any other
//! strategy between them.
//!
//! Sums run over exact rationals; values become `f64` only on the way out.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::config_space::{apply_strategy, Roster, StrategyInputs, StrategyKind, StrategyLabel};
use crate::error::{Error, Result};
use crate::landmarking::LandmarkMatch;
use crate::ranking::RankingTable;

/// Below this oracle-to-random gap a normalised score is undefined.
pub const DEGENERATE_GAP: f64 = 1e-12;

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("non-finite mean {x}")))
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn sorted_exact(means: &[f64]) -> Result<Vec<BigRational>> {
    let mut v: Vec<BigRational> = means.iter().map(|&m| exact(m)).collect::<Result<_>>()?;
    v.sort();
    Ok(v)
}

fn check_k(means: &[f64], k: usize) -> Result<()> {
    if k == 0 || k > means.len() {
        return Err(Error::KOutOfRange { k, max: means.len() });
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn mean_of(xs: &[BigRational]) -> BigRational {
    let sum: BigRational = xs.iter().cloned().sum();
    sum / BigRational::from_integer(BigInt::from(xs.len()))
}

pub fn expected_oracle_average_exact(means: &[f64], k: usize) -> Result<BigRational> {
    check_k(means, k)?;
    Ok(mean_of(&sorted_exact(means)?[..k]))
}

/// Mean of the `k` smallest mean errors.
pub fn expected_oracle_average(means: &[f64], k: usize) -> Result<f64> {
    Ok(to_f64(&expected_oracle_average_exact(means, k)?))
}

/// Best mean error; independent of `k`.
pub fn expected_oracle_optimal(means: &[f64], k: usize) -> Result<f64> {
    expected_oracle_average(means, 1).and_then(|v| check_k(means, k).map(|_| v))
}

pub fn expected_random_optimal_exact(means: &[f64], k: usize) -> Result<BigRational> {
    check_k(means, k)?;
    let sorted = sorted_exact(means)?;
    let p = sorted.len();
    let total = binomial(p, k);
    let mut acc = BigRational::zero();
    // m_(i) is the subset minimum in C(P-i, k-1) of the C(P, k) subsets.
    for (i, m) in sorted.iter().enumerate().take(p - k + 1) {
        acc += m * BigRational::from_integer(binomial(p - i - 1, k - 1));
    }
    Ok(acc / BigRational::from_integer(total))
}

/// Expected minimum mean error over a uniformly random `k`-subset.
pub fn expected_random_optimal(means: &[f64], k: usize) -> Result<f64> {
    Ok(to_f64(&expected_random_optimal_exact(means, k)?))
}

/// Expected mean error of a uniformly random `k`-subset: the grand mean for every `k`.
pub fn expected_random_average(means: &[f64], k: usize) -> Result<f64> {
    check_k(means, k)?;
    expected_oracle_average(means, means.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoolExpectation {
    pub avg: f64,
    pub opt: f64,
}

/// Mean and minimum of the pool members' mean errors.
pub fn strategy_expectations(pool: &[f64]) -> Result<PoolExpectation> {
    if pool.is_empty() {
        return Err(Error::InvalidArgument("empty pool".into()));
    }
    let exacts: Vec<BigRational> = pool.iter().map(|&m| exact(m)).collect::<Result<_>>()?;
    let opt = exacts.iter().min().expect("non-empty");
    Ok(PoolExpectation { avg: to_f64(&mean_of(&exacts)), opt: to_f64(opt) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Normalized {
    Score(f64),
    Undefined,
}

impl Normalized {
    pub fn score(self) -> Option<f64> {
        match self {
            Normalized::Score(s) => Some(s),
            Normalized::Undefined => None,
        }
    }
}

impl std::fmt::Display for Normalized {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Normalized::Score(s) => write!(f, "{s}"),
            Normalized::Undefined => f.write_str("undefined"),
        }
    }
}

/// Places `value` on a scale where the oracle scores 0 and random culling 1.
pub fn normalize(value: f64, oracle_value: f64, random_value: f64) -> Normalized {
    let gap = random_value - oracle_value;
    if gap.abs() < DEGENERATE_GAP {
        Normalized::Undefined
    } else {
        Normalized::Score((value - oracle_value) / gap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationRow {
    pub k: usize,
    pub eo_avg: f64,
    pub eo_opt: f64,
    pub r_avg: f64,
    pub r_opt: f64,
    pub em_avg: f64,
    pub em_opt: f64,
    /// Blank when the dataset's landmark profile is unsolvable.
    pub el_avg: Option<f64>,
    pub el_opt: Option<f64>,
    pub norm_m_avg: Normalized,
    pub norm_l_avg: Option<Normalized>,
    pub norm_m_opt: Normalized,
    pub norm_l_opt: Option<Normalized>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationReport {
    pub base_id: String,
    pub dataset_id: String,
    pub rows: Vec<ExpectationRow>,
}

/// Settings for [`expectation_report`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpectationOptions {
    /// Count dependency-closure additions as pool members.
    pub include_closure: bool,
}

/// Expectation rows for `dataset` at every `k` in `k_grid` (values above the
/// roster size are an error). `landmark` is the dataset's most similar prior,
/// `None` when its profile was unsolvable.
pub fn expectation_report(
    ranking: &RankingTable,
    roster: &Roster,
    dataset: &str,
    k_grid: &[usize],
    landmark: Option<&LandmarkMatch>,
    options: ExpectationOptions,
) -> Result<ExpectationReport> {
    let means = ranking.values_for(dataset)?.to_vec();
    let pool_means = |ids: Vec<String>| -> Result<Vec<f64>> { ids.iter().map(|p| ranking.value(dataset, p)).collect() };
    let members = |space: crate::config_space::ReducedSpace| {
        if options.include_closure {
            space.searchable()
        } else {
            space.predictor_pool
        }
    };

    let mut rows = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        check_k(&means, k)?;
        let eo_avg = expected_oracle_average(&means, k)?;
        let eo_opt = expected_oracle_optimal(&means, k)?;
        let r_avg = expected_random_average(&means, k)?;
        let r_opt = expected_random_optimal(&means, k)?;

        let leaderboard = StrategyLabel::Culled { kind: StrategyKind::Leaderboard, base: None, k, seed: None };
        let inputs = StrategyInputs { ranking: Some(ranking), target_dataset: Some(dataset), ..StrategyInputs::new(roster) };
        let m = strategy_expectations(&pool_means(members(apply_strategy(&leaderboard, &inputs)?))?)?;

        let l = match landmark {
            Some(hit) => {
                let label = StrategyLabel::Culled { kind: StrategyKind::Landmarked, base: None, k, seed: None };
                let inputs = StrategyInputs { landmark: Some(hit), ..inputs };
                Some(strategy_expectations(&pool_means(members(apply_strategy(&label, &inputs)?))?)?)
            }
            None => None,
        };

        rows.push(ExpectationRow {
            k,
            eo_avg,
            eo_opt,
            r_avg,
            r_opt,
            em_avg: m.avg,
            em_opt: m.opt,
            el_avg: l.map(|e| e.avg),
            el_opt: l.map(|e| e.opt),
            norm_m_avg: normalize(m.avg, eo_avg, r_avg),
            norm_l_avg: l.map(|e| normalize(e.avg, eo_avg, r_avg)),
            norm_m_opt: normalize(m.opt, eo_opt, r_opt),
            norm_l_opt: l.map(|e| normalize(e.opt, eo_opt, r_opt)),
        });
    }
    Ok(ExpectationReport { base_id: ranking.base_id.clone(), dataset_id: dataset.to_string(), rows })
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_expectation_csv<W: Write>(reports: &[ExpectationReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "base", "dataset", "k", "eO_avg", "eO_opt", "R_avg", "R_opt", "eM_avg", "eM_opt", "eL_avg", "eL_opt",
        "norm_M_avg", "norm_L_avg", "norm_M_opt", "norm_L_opt",
    ])?;
    for report in reports {
        for r in &report.rows {
            w.write_record([
                report.base_id.clone(),
                report.dataset_id.clone(),
                r.k.to_string(),
                r.eo_avg.to_string(),
                r.eo_opt.to_string(),
                r.r_avg.to_string(),
                r.r_opt.to_string(),
                r.em_avg.to_string(),
                r.em_opt.to_string(),
                cell(r.el_avg),
                cell(r.el_opt),
                r.norm_m_avg.to_string(),
                cell(r.norm_l_avg),
                r.norm_m_opt.to_string(),
                cell(r.norm_l_opt),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Long layout: one row per (base, dataset, k, strategy, measure).
pub fn write_normalized_csv<W: Write>(reports: &[ExpectationReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["base", "dataset", "k", "strategy", "measure", "normalized"])?;
    for report in reports {
        for r in &report.rows {
            let entries = [
                ("M", "avg", Some(r.norm_m_avg)),
                ("M", "opt", Some(r.norm_m_opt)),
                ("L", "avg", r.norm_l_avg),
                ("L", "opt", r.norm_l_opt),
            ];
            for (strategy, measure, value) in entries {
                w.write_record([
                    report.base_id.as_str(),
                    &report.dataset_id,
                    &r.k.to_string(),
                    strategy,
                    measure,
                    &cell(value),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
