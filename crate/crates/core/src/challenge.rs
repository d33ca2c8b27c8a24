//! Dataset challenge: how predictor mean errors are distributed, which
//! predictors are statistically inseparable, and how likely a random cull is
//! to keep one of the best.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::meta_store::{MetaKnowledgeBase, PipelineFilter};

/// Conventional significance level.
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    /// Top-heavy: skewness above 0.5, few predictors excel.
    Hard,
    /// Bottom-heavy: skewness below 0.5.
    Easy,
    Balanced,
}

/// `(mean - min) / (max - min)` of a mean-error distribution, evaluated exactly.
pub fn skewness(means: &[f64]) -> Result<f64> {
    if means.len() < 2 {
        return Err(Error::UndefinedChallenge("need at least two means".into()));
    }
    let exact: Vec<BigRational> = means
        .iter()
        .map(|&m| BigRational::from_float(m).ok_or_else(|| Error::InvalidArgument(format!("non-finite mean {m}"))))
        .collect::<Result<_>>()?;
    let min = exact.iter().min().expect("non-empty");
    let max = exact.iter().max().expect("non-empty");
    if min == max {
        return Err(Error::UndefinedChallenge("all means are equal".into()));
    }
    let mean = exact.iter().sum::<BigRational>() / BigRational::from_integer(BigInt::from(exact.len()));
    Ok(((mean - min) / (max - min)).to_f64().unwrap_or(f64::NAN))
}

pub fn classify(skew: f64) -> Difficulty {
    if skew > 0.5 {
        Difficulty::Hard
    } else if skew < 0.5 {
        Difficulty::Easy
    } else {
        Difficulty::Balanced
    }
}

struct Moments {
    n: f64,
    mean: f64,
    var: f64,
}

fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.iter().all(|&x| x == xs[0]) {
        0.0
    } else {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    Moments { n, mean, var }
}

/// Two-sided Welch t-test p-value with Welch–Satterthwaite degrees of freedom.
///
/// When both samples have zero variance the test is replaced by a convention:
/// p = 1 for equal means and p = 0 otherwise.
pub fn welch_p(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    if sample_a.len() < 2 || sample_b.len() < 2 {
        return Err(Error::Untestable(format!(
            "sample sizes {} and {}; need at least two each",
            sample_a.len(),
            sample_b.len()
        )));
    }
    let (a, b) = (moments(sample_a), moments(sample_b));
    if a.var == 0.0 && b.var == 0.0 {
        return Ok(if sample_a[0] == sample_b[0] { 1.0 } else { 0.0 });
    }
    let (sa, sb) = (a.var / a.n, b.var / b.n);
    let se2 = sa + sb;
    let t = (a.mean - b.mean) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.n - 1.0) + sb * sb / (b.n - 1.0));
    if t == 0.0 {
        return Ok(1.0);
    }
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Untestable(e.to_string()))?;
    Ok((2.0 * dist.sf(t.abs())).clamp(0.0, 1.0))
}

/// How a p-value is turned into "no significant difference".
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaThreshold {
    /// Indistinguishable iff p > alpha.
    Conventional,
    /// Indistinguishable iff p > 1 - alpha, the literal "p-value above 0.95" reading.
    Literal,
}

impl AlphaThreshold {
    pub fn cutoff(self, alpha: f64) -> f64 {
        match self {
            AlphaThreshold::Conventional => alpha,
            AlphaThreshold::Literal => 1.0 - alpha,
        }
    }
}

impl std::str::FromStr for AlphaThreshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conventional" => Ok(AlphaThreshold::Conventional),
            "literal" => Ok(AlphaThreshold::Literal),
            other => Err(Error::InvalidArgument(format!("unknown alpha threshold `{other}`"))),
        }
    }
}

pub const NO_DIFFERENCE: i8 = 1;
pub const SIGNIFICANT: i8 = 0;
pub const UNTESTABLE: i8 = -1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndistinguishabilityMatrix {
    pub dataset_id: String,
    pub base_id: String,
    /// Predictors by ascending mean error, ties by id.
    pub order: Vec<String>,
    /// Cell values in `order` x `order`.
    pub cells: Vec<Vec<i8>>,
    pub alpha: f64,
    pub threshold: AlphaThreshold,
}

impl IndistinguishabilityMatrix {
    /// Builds the matrix from per-predictor fold-error samples.
    pub fn from_samples(
        dataset_id: &str,
        base_id: &str,
        samples: &[(String, Vec<f64>)],
        alpha: f64,
        threshold: AlphaThreshold,
    ) -> Result<Self> {
        let mean_of = |s: &[f64]| if s.is_empty() { 1.0 } else { s.iter().sum::<f64>() / s.len() as f64 };
        let mut idx: Vec<usize> = (0..samples.len()).collect();
        idx.sort_by(|&a, &b| {
            mean_of(&samples[a].1).total_cmp(&mean_of(&samples[b].1)).then_with(|| samples[a].0.cmp(&samples[b].0))
        });
        let cutoff = threshold.cutoff(alpha);
        let n = idx.len();
        let mut cells = vec![vec![UNTESTABLE; n]; n];
        for i in 0..n {
            for j in i..n {
                let (a, b) = (&samples[idx[i]].1, &samples[idx[j]].1);
                let value = match welch_p(a, b) {
                    Ok(p) if p > cutoff => NO_DIFFERENCE,
                    Ok(_) => SIGNIFICANT,
                    Err(Error::Untestable(_)) => UNTESTABLE,
                    Err(e) => return Err(e),
                };
                cells[i][j] = value;
                cells[j][i] = value;
            }
        }
        Ok(Self {
            dataset_id: dataset_id.to_string(),
            base_id: base_id.to_string(),
            order: idx.iter().map(|&i| samples[i].0.clone()).collect(),
            cells,
            alpha,
            threshold,
        })
    }

    pub fn is_testable(&self, i: usize) -> bool {
        self.cells[i][i] != UNTESTABLE
    }

    pub fn get(&self, a: &str, b: &str) -> Option<i8> {
        let i = self.order.iter().position(|x| x == a)?;
        let j = self.order.iter().position(|x| x == b)?;
        Some(self.cells[i][j])
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["predictor".to_string()];
        header.extend(self.order.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.order.iter().zip(&self.cells) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|c| c.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Welch-test matrix over every predictor of a dataset, pooling all ok single-fold errors per cell.
pub fn indistinguishability_matrix(
    base: &MetaKnowledgeBase,
    dataset_id: &str,
    alpha: f64,
    threshold: AlphaThreshold,
) -> Result<IndistinguishabilityMatrix> {
    if !base.has_dataset(dataset_id) {
        return Err(Error::UnknownDataset(dataset_id.into()));
    }
    let samples: Vec<(String, Vec<f64>)> = base
        .predictors()
        .iter()
        .map(|p| Ok((p.clone(), base.cell_errors(dataset_id, p, PipelineFilter::All)?)))
        .collect::<Result<_>>()?;
    IndistinguishabilityMatrix::from_samples(dataset_id, base.base_id(), &samples, alpha, threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerformerGroups {
    pub dataset_id: String,
    /// Best group first.
    pub groups: Vec<Vec<String>>,
    /// Untestable predictors, in mean order.
    pub unclassified: Vec<String>,
    pub best_group_size: usize,
}

impl PerformerGroups {
    pub fn second_group_size(&self) -> usize {
        self.groups.get(1).map_or(0, Vec::len)
    }
}

/// Greedy sweep in mean-error order.
///
/// The best ungrouped predictor anchors a group; each following predictor
/// joins while it is indistinguishable from that anchor, otherwise it anchors
/// the next group. Groups stay contiguous, so a predictor inseparable from
/// two neighbouring groups lands in the later (worse-anchored) one.
pub fn best_groups(matrix: &IndistinguishabilityMatrix) -> PerformerGroups {
    let mut groups: Vec<Vec<String>> = Vec::new();
    let mut unclassified = Vec::new();
    let mut anchor: Option<usize> = None;
    for i in 0..matrix.order.len() {
        if !matrix.is_testable(i) {
            unclassified.push(matrix.order[i].clone());
            continue;
        }
        match anchor {
            Some(a) if matrix.cells[a][i] == NO_DIFFERENCE => {
                groups.last_mut().expect("anchored group").push(matrix.order[i].clone());
            }
            _ => {
                anchor = Some(i);
                groups.push(vec![matrix.order[i].clone()]);
            }
        }
    }
    let best_group_size = groups.first().map_or(0, Vec::len);
    PerformerGroups { dataset_id: matrix.dataset_id.clone(), groups, unclassified, best_group_size }
}

fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::from(0);
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `1 - C(P-g, k) / C(P, k)` as an exact rational.
pub fn random_top_hit_probability_exact(p: u64, g: u64, k: u64) -> Result<BigRational> {
    if g == 0 || g > p || k == 0 || k > p {
        return Err(Error::InvalidArgument(format!("need 0 < g <= P and 1 <= k <= P (P={p}, g={g}, k={k})")));
    }
    let miss = BigRational::new(binomial(p - g, k), binomial(p, k));
    Ok(BigRational::one() - miss)
}

/// Chance that a uniformly random `k`-subset of `p` predictors keeps at least one of the best `g`.
pub fn random_top_hit_probability(p: u64, g: u64, k: u64) -> Result<f64> {
    Ok(random_top_hit_probability_exact(p, g, k)?.to_f64().unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChallengeRow {
    pub dataset: String,
    pub skewness_automl: Option<f64>,
    pub skewness_default: Option<f64>,
    pub best_group_size: usize,
    pub second_group_size: usize,
    /// `(k, probability)` over the k grid.
    pub hit_probabilities: Vec<(usize, f64)>,
}

pub fn write_challenge_csv<W: Write>(rows: &[ChallengeRow], k_grid: &[usize], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ["dataset", "skewness_automl", "skewness_default", "best_group_size", "second_group_size"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(k_grid.iter().map(|k| format!("hit_prob_k{k}")));
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in rows {
        let mut rec = vec![
            row.dataset.clone(),
            opt(row.skewness_automl),
            opt(row.skewness_default),
            row.best_group_size.to_string(),
            row.second_group_size.to_string(),
        ];
        for k in k_grid {
            let v = row.hit_probabilities.iter().find(|(kk, _)| kk == k).map(|(_, p)| *p);
            rec.push(opt(v));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
