use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

// Studentized range quantiles for infinite degrees of freedom divided by
// sqrt(2), for K = 2..=20.
const Q_05: [f64; 19] = [
    1.959964, 2.343701, 2.569032, 2.727774, 2.849705, 2.948320, 3.030878, 3.101730, 3.163684, 3.218654, 3.268004,
    3.312739, 3.353618, 3.391230, 3.426041, 3.458425, 3.488685, 3.517073, 3.543799,
];
const Q_10: [f64; 19] = [
    1.644854, 2.052293, 2.291341, 2.459516, 2.588521, 2.692732, 2.779884, 2.854606, 2.919889, 2.977768, 3.029694,
    3.076733, 3.119693, 3.159199, 3.195743, 3.229723, 3.261461, 3.291224, 3.319233,
];

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn big_phi(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `P(range of K standard normals <= q)` by composite Simpson integration.
fn range_cdf(k: usize, q: f64) -> f64 {
    let (lo, hi, n) = (-9.0, 9.0, 4000);
    let h = (hi - lo) / n as f64;
    let f = |z: f64| phi(z) * (big_phi(z) - big_phi(z - q)).max(0.0).powi(k as i32 - 1);
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    (k as f64 * acc * h / 3.0).clamp(0.0, 1.0)
}

fn alpha_index(alpha: f64) -> Result<bool> {
    if (alpha - 0.05).abs() < 1e-12 {
        Ok(true)
    } else if (alpha - 0.10).abs() < 1e-12 {
        Ok(false)
    } else {
        Err(Error::UnsupportedAlpha(alpha))
    }
}

/// Nemenyi `q_alpha(K)`: the upper-`alpha` studentized range quantile at
/// infinite degrees of freedom over sqrt(2). Tabulated up to K = 20 and
/// integrated numerically beyond.
pub fn studentized_range_q(k: usize, alpha: f64) -> Result<f64> {
    let five = alpha_index(alpha)?;
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least two strategies, got {k}")));
    }
    if k <= 20 {
        return Ok(if five { Q_05[k - 2] } else { Q_10[k - 2] });
    }
    let target = 1.0 - alpha;
    let (mut lo, mut hi) = (0.0f64, 12.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if range_cdf(k, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) / std::f64::consts::SQRT_2)
}

/// Critical difference `q_alpha(K) * sqrt(K (K + 1) / (6 N))`.
pub fn nemenyi_cd(n_strategies: usize, n_datasets: usize, alpha: f64) -> Result<f64> {
    if n_datasets == 0 {
        return Err(Error::InvalidArgument("need at least one dataset".into()));
    }
    let q = studentized_range_q(n_strategies, alpha)?;
    let k = n_strategies as f64;
    Ok(q * (k * (k + 1.0) / (6.0 * n_datasets as f64)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignificantPair {
    pub better: String,
    pub worse: String,
    pub rank_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NemenyiResult {
    pub n_strategies: usize,
    pub n_datasets: usize,
    pub alpha: f64,
    pub q: f64,
    pub cd: f64,
    pub significant_pairs: Vec<SignificantPair>,
}

/// Flags every pair of strategies whose average-rank gap exceeds the critical difference.
pub fn nemenyi_test(avg_ranks: &[(String, f64)], n_datasets: usize, alpha: f64) -> Result<NemenyiResult> {
    let cd = nemenyi_cd(avg_ranks.len(), n_datasets, alpha)?;
    let q = studentized_range_q(avg_ranks.len(), alpha)?;
    let mut sorted: Vec<&(String, f64)> = avg_ranks.iter().collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let mut pairs = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            let gap = b.1 - a.1;
            if gap > cd {
                pairs.push(SignificantPair { better: a.0.clone(), worse: b.0.clone(), rank_gap: gap });
            }
        }
    }
    Ok(NemenyiResult { n_strategies: avg_ranks.len(), n_datasets, alpha, q, cd, significant_pairs: pairs })
}
