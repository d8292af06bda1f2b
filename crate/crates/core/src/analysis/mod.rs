//! Rank-based group comparison and distribution summaries for displacement
//! samples.

mod kde;
mod report;

pub use kde::{kde, Bandwidth, DensityCurve, KDE_GRID_POINTS};
pub use report::{analyze, TestReport};

use serde::{Deserialize, Serialize};
use statrs::function::{erf::erfc, gamma::gamma_ur};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("need at least {need} groups, got {got}")]
    TooFewGroups { need: usize, got: usize },
    #[error("group {0:?} is empty")]
    EmptyGroup(String),
    #[error("group {0:?} contains a non-finite value")]
    NonFinite(String),
    #[error("duplicate group label {0:?}")]
    DuplicateLabel(String),
    #[error("bandwidth must be positive and finite, got {0}")]
    Bandwidth(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleGroup {
    pub label: String,
    pub values: Vec<f64>,
}

impl SampleGroup {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self { label: label.into(), values }
    }

    fn check(&self) -> Result<(), AnalysisError> {
        if self.values.is_empty() {
            return Err(AnalysisError::EmptyGroup(self.label.clone()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(AnalysisError::NonFinite(self.label.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjustment {
    None,
    #[default]
    Bonferroni,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub a: String,
    pub b: String,
    /// Positive when `a` has the higher mean rank.
    pub z: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
}

/// Pooled mid-ranks of every group plus the tie sum Σ(t³ − t).
struct PooledRanks {
    /// Rank sums per group.
    sums: Vec<f64>,
    sizes: Vec<usize>,
    total: usize,
    tie_sum: f64,
}

impl PooledRanks {
    fn new(groups: &[SampleGroup]) -> Result<Self, AnalysisError> {
        check_groups(groups)?;
        let mut pooled: Vec<(f64, usize)> =
            groups.iter().enumerate().flat_map(|(g, s)| s.values.iter().map(move |&v| (v, g))).collect();
        pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ranks = mid_ranks(&pooled.iter().map(|p| p.0).collect::<Vec<_>>());
        let mut sums = vec![0.0; groups.len()];
        for ((_, g), r) in pooled.iter().zip(&ranks.ranks) {
            sums[*g] += r;
        }
        Ok(Self {
            sums,
            sizes: groups.iter().map(|g| g.values.len()).collect(),
            total: pooled.len(),
            tie_sum: ranks.tie_sum,
        })
    }

    fn mean_rank(&self, g: usize) -> f64 {
        self.sums[g] / self.sizes[g] as f64
    }
}

pub(crate) struct MidRanks {
    pub ranks: Vec<f64>,
    pub tie_sum: f64,
}

/// 1-based mid-ranks of already sorted values.
pub(crate) fn mid_ranks(sorted: &[f64]) -> MidRanks {
    let mut ranks = vec![0.0; sorted.len()];
    let mut tie_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        ranks[i..j].fill(rank);
        let t = (j - i) as f64;
        tie_sum += t * t * t - t;
        i = j;
    }
    MidRanks { ranks, tie_sum }
}

fn check_groups(groups: &[SampleGroup]) -> Result<(), AnalysisError> {
    if groups.len() < 2 {
        return Err(AnalysisError::TooFewGroups { need: 2, got: groups.len() });
    }
    for (i, g) in groups.iter().enumerate() {
        g.check()?;
        if groups[..i].iter().any(|o| o.label == g.label) {
            return Err(AnalysisError::DuplicateLabel(g.label.clone()));
        }
    }
    Ok(())
}

/// Tie-corrected H from rank sums.
pub(crate) fn h_statistic(sums: &[f64], sizes: &[usize], total: usize, tie_sum: f64) -> f64 {
    let n = total as f64;
    let correction = 1.0 - tie_sum / (n * n * n - n);
    if correction <= 0.0 {
        return 0.0;
    }
    let ss: f64 = sums.iter().zip(sizes).map(|(r, &k)| r * r / k as f64).sum();
    let h = (12.0 / (n * (n + 1.0)) * ss - 3.0 * (n + 1.0)) / correction;
    h.max(0.0)
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df as f64 / 2.0, x / 2.0).clamp(0.0, 1.0)
}

/// Two-sided standard normal tail probability of `|z|`.
pub fn normal_two_sided(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

pub fn kruskal_wallis(groups: &[SampleGroup]) -> Result<KruskalWallis, AnalysisError> {
    let r = PooledRanks::new(groups)?;
    let h = h_statistic(&r.sums, &r.sizes, r.total, r.tie_sum);
    let df = groups.len() - 1;
    Ok(KruskalWallis { h, df, p_value: chi_square_sf(h, df) })
}

/// Dunn's post-hoc comparisons for every pair `(i, j)` with `i < j`.
pub fn dunns_test(groups: &[SampleGroup], adjustment: Adjustment) -> Result<Vec<PairwiseComparison>, AnalysisError> {
    let r = PooledRanks::new(groups)?;
    let n = r.total as f64;
    let k = groups.len();
    let pairs = (k * (k - 1) / 2) as f64;
    let spread = n * (n + 1.0) / 12.0 - r.tie_sum / (12.0 * (n - 1.0));
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let diff = r.mean_rank(i) - r.mean_rank(j);
            let se = (spread * (1.0 / r.sizes[i] as f64 + 1.0 / r.sizes[j] as f64)).sqrt();
            let z = if se > 0.0 { diff / se } else { 0.0 };
            let p_raw = normal_two_sided(z);
            let p_adjusted = match adjustment {
                Adjustment::None => p_raw,
                Adjustment::Bonferroni => (p_raw * pairs).min(1.0),
            };
            out.push(PairwiseComparison {
                a: groups[i].label.clone(),
                b: groups[j].label.clone(),
                z,
                p_raw,
                p_adjusted,
            });
        }
    }
    Ok(out)
}

/// Labels by descending mean rank, ties broken by input order.
pub fn order_by_mean_rank(groups: &[SampleGroup]) -> Result<Vec<String>, AnalysisError> {
    let r = PooledRanks::new(groups)?;
    let mut idx: Vec<usize> = (0..groups.len()).collect();
    idx.sort_by(|&a, &b| r.mean_rank(b).total_cmp(&r.mean_rank(a)));
    Ok(idx.into_iter().map(|i| groups[i].label.clone()).collect())
}

/// Splits a mean-rank ordering into tiers. A group joins the current tier
/// when it is not significantly different from the tier's leader at `alpha`.
pub fn rank_tiers(order: &[String], pairwise: &[PairwiseComparison], alpha: f64) -> Vec<Vec<String>> {
    let differs = |x: &str, y: &str| {
        pairwise
            .iter()
            .find(|p| (p.a == x && p.b == y) || (p.a == y && p.b == x))
            .is_some_and(|p| p.p_adjusted < alpha)
    };
    let mut tiers: Vec<Vec<String>> = Vec::new();
    for label in order {
        match tiers.last_mut() {
            Some(tier) if !differs(&tier[0], label) => tier.push(label.clone()),
            _ => tiers.push(vec![label.clone()]),
        }
    }
    tiers
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub sd: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary, AnalysisError> {
    SampleGroup::new("", values.to_vec()).check()?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(Summary { n, min: sorted[0], max: sorted[n - 1], median: quantile(&sorted, 0.5), mean, sd })
}

/// Linearly interpolated quantile of sorted values.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}
