use serde::{Deserialize, Serialize};

use super::{
    dunns_test, kruskal_wallis, order_by_mean_rank, rank_tiers, summarize, Adjustment, AnalysisError,
    PairwiseComparison, SampleGroup, Summary,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub adjustment: Adjustment,
    pub pairwise: Vec<PairwiseComparison>,
    /// Labels by descending mean rank.
    pub ranking: Vec<String>,
    /// `ranking` split into groups that are not separable at `alpha`.
    pub tiers: Vec<Vec<String>>,
    pub summaries: Vec<GroupSummary>,
}

impl TestReport {
    /// `"A > B = C > D"`, with `=` joining labels of the same tier.
    pub fn ranking_text(&self) -> String {
        self.tiers.iter().map(|t| t.join(" = ")).collect::<Vec<_>>().join(" > ")
    }
}

pub fn analyze(groups: &[SampleGroup], adjustment: Adjustment, alpha: f64) -> Result<TestReport, AnalysisError> {
    let kw = kruskal_wallis(groups)?;
    let pairwise = dunns_test(groups, adjustment)?;
    let ranking = order_by_mean_rank(groups)?;
    // Without an omnibus difference no pair is treated as separable.
    let tiers = if kw.p_value < alpha { rank_tiers(&ranking, &pairwise, alpha) } else { vec![ranking.clone()] };
    let summaries = groups
        .iter()
        .map(|g| Ok(GroupSummary { label: g.label.clone(), summary: summarize(&g.values)? }))
        .collect::<Result<_, AnalysisError>>()?;
    Ok(TestReport {
        statistic: kw.h,
        degrees_of_freedom: kw.df,
        p_value: kw.p_value,
        alpha,
        adjustment,
        pairwise,
        ranking,
        tiers,
        summaries,
    })
}
