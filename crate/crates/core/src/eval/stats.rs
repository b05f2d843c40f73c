use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest number of non-zero differences for which the exact null
/// distribution is used.
pub const EXACT_MAX_N: usize = 25;

/// Treatment of zero paired differences.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroMethod {
    /// Discard zeros before ranking.
    #[default]
    Drop,
    /// Rank zeros with the others, then discard their ranks.
    Pratt,
}

impl std::str::FromStr for ZeroMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "drop" => Ok(ZeroMethod::Drop),
            "pratt" => Ok(ZeroMethod::Pratt),
            other => Err(format!("unknown zero method '{other}' (drop|pratt)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedRankTest {
    /// `min(W⁺, W⁻)`.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Number of non-zero differences.
    pub n: usize,
    /// Two-sided p-value.
    pub p_value: f64,
    pub exact: bool,
}

/// Midranks of `values` (1-based), doubled so that they are integers.
pub(crate) fn doubled_midranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end+1 share the rank (start + end + 2) / 2
        let doubled = (start + end + 2) as u64;
        for &i in &order[start..=end] {
            ranks[i] = doubled;
        }
        start = end + 1;
    }
    ranks
}

/// Number of sign assignments giving each doubled positive-rank sum.
fn null_counts(ranks: &[u64]) -> Vec<u64> {
    let total: u64 = ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    counts
}

/// Paired two-sided Wilcoxon signed-rank test on `x − y`.
///
/// Ties among |differences| get midranks. Up to [`EXACT_MAX_N`] non-zero
/// differences the p-value is exact, `min(1, 2·P(T ≤ W))` under the
/// permutation null; above it uses the normal approximation with the
/// tie-corrected variance `Σr²/4` and no continuity correction.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64], zeros: ZeroMethod) -> Result<SignedRankTest> {
    if x.len() != y.len() {
        return Err(Error::InvalidSample(format!(
            "paired samples differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::InvalidSample("empty paired sample".into()));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSample("non-finite paired difference".into()));
    }
    let ranked: Vec<f64> = match zeros {
        ZeroMethod::Drop => d.iter().copied().filter(|&v| v != 0.0).collect(),
        ZeroMethod::Pratt => d.clone(),
    };
    let ranks = doubled_midranks(&ranked.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let mut plus = 0u64;
    let mut minus = 0u64;
    let mut used = Vec::with_capacity(ranks.len());
    for (&v, &r) in ranked.iter().zip(&ranks) {
        if v > 0.0 {
            plus += r;
            used.push(r);
        } else if v < 0.0 {
            minus += r;
            used.push(r);
        }
    }
    let n = used.len();
    if n == 0 {
        return Err(Error::DegenerateSample);
    }
    let w2 = plus.min(minus);
    let (p_value, exact) = if n <= EXACT_MAX_N {
        let counts = null_counts(&used);
        let below: u64 = counts[..=w2 as usize].iter().sum();
        let p = 2.0 * below as f64 / (1u64 << n) as f64;
        (p.min(1.0), true)
    } else {
        let sum: f64 = used.iter().map(|&r| r as f64 * 0.5).sum();
        let sum_sq: f64 = used.iter().map(|&r| (r as f64 * 0.5).powi(2)).sum();
        let z = (w2 as f64 * 0.5 - sum / 2.0) / (sum_sq / 4.0).sqrt();
        (erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0), false)
    };
    Ok(SignedRankTest {
        statistic: w2 as f64 * 0.5,
        w_plus: plus as f64 * 0.5,
        w_minus: minus as f64 * 0.5,
        n,
        p_value,
        exact,
    })
}

/// `min(1, m·pᵢ)` for a family of `m` raw p-values.
pub fn bonferroni(p: &[f64]) -> Result<Vec<f64>> {
    let m = p.len() as f64;
    p.iter()
        .map(|&v| {
            if v > 0.0 && v <= 1.0 {
                Ok((m * v).min(1.0))
            } else {
                Err(Error::InvalidPValue(v))
            }
        })
        .collect()
}

/// Mean and sample standard deviation (`n − 1`; zero for one value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}
