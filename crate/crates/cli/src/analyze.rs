use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use voxevo_core::analysis::{analyze, kde, Adjustment, Bandwidth, DensityCurve, SampleGroup, TestReport};

use crate::robustness::{read_rows, RobustnessRow};
use crate::{write_file, CliError};

pub const REPORT_FILE: &str = "analysis_report.json";
pub const TABLE_FILE: &str = "summary_table.csv";
pub const RANKING_FILE: &str = "ranking.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Displacement,
    Fitness,
}

impl Metric {
    fn pick(self, r: &RobustnessRow) -> f64 {
        match self {
            Metric::Displacement => r.displacement,
            Metric::Fitness => r.fitness,
        }
    }
}

/// One robustness CSV under a label.
#[derive(Debug, Clone)]
pub struct Group {
    pub label: String,
    pub rows: BTreeMap<u32, RobustnessRow>,
}

impl Group {
    pub fn load(label: String, path: &Path) -> Result<Self, CliError> {
        let rows = read_rows(path)?.into_iter().map(|r| (r.scenario_id, r)).collect();
        Ok(Self { label, rows })
    }
}

/// A row of the per-approach summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub approach: String,
    pub number_of_voxels: usize,
    pub mean_displacement: f64,
    pub fitness_value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub metric: Metric,
    pub scenarios_used: usize,
    /// Absent when there are fewer than two groups.
    pub test: Option<TestReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub table: Vec<TableRow>,
}

pub struct AnalysisOutput {
    pub report: AnalysisReport,
    pub densities: Vec<(String, DensityCurve)>,
}

/// Restricts every group to the scenario ids they all share.
fn shared_scenarios(groups: &[Group]) -> BTreeSet<u32> {
    let mut ids: Option<BTreeSet<u32>> = None;
    for g in groups {
        let these: BTreeSet<u32> = g.rows.keys().copied().collect();
        ids = Some(match ids {
            None => these,
            Some(acc) => acc.intersection(&these).copied().collect(),
        });
    }
    ids.unwrap_or_default()
}

pub fn run_analysis(groups: &[Group], metric: Metric, adjustment: Adjustment, alpha: f64) -> Result<AnalysisOutput, CliError> {
    if groups.is_empty() {
        return Err(CliError::Other("no groups to analyze".into()));
    }
    let counts: BTreeSet<usize> = groups.iter().map(|g| g.rows.len()).collect();
    let shared = shared_scenarios(groups);
    if counts.len() > 1 || groups.iter().any(|g| g.rows.len() != shared.len()) {
        let detail: Vec<String> = groups.iter().map(|g| format!("{} has {}", g.label, g.rows.len())).collect();
        log::warn!("scenario sets differ ({}); using the {} shared scenarios", detail.join(", "), shared.len());
    }
    if shared.is_empty() {
        return Err(CliError::Other("the groups share no scenario ids".into()));
    }

    let mut samples = Vec::new();
    let mut table = Vec::new();
    let mut densities = Vec::new();
    for g in groups {
        let rows: Vec<&RobustnessRow> = shared.iter().map(|id| &g.rows[id]).collect();
        let values: Vec<f64> = rows.iter().map(|r| metric.pick(r)).collect();
        let n = rows.len() as f64;
        table.push(TableRow {
            approach: g.label.clone(),
            number_of_voxels: rows[0].voxel_count,
            mean_displacement: rows.iter().map(|r| r.displacement).sum::<f64>() / n,
            fitness_value: rows.iter().map(|r| r.fitness).sum::<f64>() / n,
        });
        let curve = kde(&values, Bandwidth::Silverman).map_err(|e| CliError::Other(format!("{}: {e}", g.label)))?;
        densities.push((g.label.clone(), curve));
        samples.push(SampleGroup::new(g.label.clone(), values));
    }

    let (test, note) = if samples.len() < 2 {
        (None, Some("H is undefined for a single group; summary only".to_owned()))
    } else {
        let report = analyze(&samples, adjustment, alpha).map_err(|e| CliError::Other(e.to_string()))?;
        (Some(report), None)
    };
    Ok(AnalysisOutput { report: AnalysisReport { metric, scenarios_used: shared.len(), test, note, table }, densities })
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("Approach,Number of voxels,Mean displacement,Fitness value\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:.3},{:.3}", r.approach, r.number_of_voxels, r.mean_displacement, r.fitness_value);
    }
    out
}

/// Text printed to the terminal.
pub fn render(report: &AnalysisReport) -> String {
    let mut s = String::new();
    let width = report.table.iter().map(|r| r.approach.len()).max().unwrap_or(0).max(8);
    let _ = writeln!(s, "{:<width$}  {:>16}  {:>17}  {:>13}", "Approach", "Number of voxels", "Mean displacement", "Fitness value");
    for r in &report.table {
        let _ = writeln!(
            s,
            "{:<width$}  {:>16}  {:>17.3}  {:>13.3}",
            r.approach, r.number_of_voxels, r.mean_displacement, r.fitness_value
        );
    }
    let _ = writeln!(s);
    match (&report.test, &report.note) {
        (Some(t), _) => {
            let _ = writeln!(
                s,
                "Kruskal-Wallis on {:?} over {} scenarios: H = {:.4}, df = {}, p = {:.3e}",
                report.metric, report.scenarios_used, t.statistic, t.degrees_of_freedom, t.p_value
            );
            let _ = writeln!(s, "ranking: {}", t.ranking_text());
        }
        (None, Some(note)) => {
            let _ = writeln!(s, "{note}");
        }
        (None, None) => {}
    }
    s
}

fn kde_path(out: &Path, label: &str) -> PathBuf {
    let safe: String = label.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect();
    out.join(format!("kde_{safe}.csv"))
}

/// Writes report, table, ranking and one density file per group.
pub fn write_outputs(output: &AnalysisOutput, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let mut written = vec![out.join(REPORT_FILE), out.join(TABLE_FILE)];
    write_file(&written[0], &serde_json::to_string_pretty(&output.report).expect("report serializes"))?;
    write_file(&written[1], &table_csv(&output.report.table))?;
    if let Some(t) = &output.report.test {
        let path = out.join(RANKING_FILE);
        write_file(&path, &format!("{}\n", t.ranking_text()))?;
        written.push(path);
    }
    for (label, curve) in &output.densities {
        let path = kde_path(out, label);
        write_file(&path, &curve.to_csv())?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(label: &str, ids: impl Iterator<Item = u32>, f: impl Fn(u32) -> f64) -> Group {
        Group {
            label: label.into(),
            rows: ids
                .map(|id| {
                    let d = f(id);
                    (id, RobustnessRow { scenario_id: id, displacement: d, voxel_count: 10, delta_score: d / 20.0, nu_score: 0.5, fitness: 0.25 + d / 40.0 })
                })
                .collect(),
        }
    }

    #[test]
    fn separated_groups_rank_strictly() {
        let groups = [
            group("low", 0..40, |i| f64::from(i % 7) * 0.01),
            group("high", 0..40, |i| 3.0 + f64::from(i % 5) * 0.01),
            group("mid", 0..40, |i| 1.0 + f64::from(i % 3) * 0.01),
        ];
        let out = run_analysis(&groups, Metric::Displacement, Adjustment::Bonferroni, 0.05).unwrap();
        let t = out.report.test.as_ref().unwrap();
        assert_eq!(t.ranking_text(), "high > mid > low");
        assert!(render(&out.report).contains("ranking: high > mid > low"));
    }

    #[test]
    fn one_group_is_summary_only() {
        let out = run_analysis(&[group("solo", 0..5, f64::from)], Metric::Fitness, Adjustment::None, 0.05).unwrap();
        assert!(out.report.test.is_none());
        assert!(out.report.note.as_ref().unwrap().contains("undefined"));
        assert_eq!(out.report.table[0].mean_displacement, 2.0);
    }

    #[test]
    fn mismatched_scenarios_use_the_intersection() {
        let groups = [group("a", 0..10, f64::from), group("b", 5..20, f64::from)];
        let out = run_analysis(&groups, Metric::Displacement, Adjustment::None, 0.05).unwrap();
        assert_eq!(out.report.scenarios_used, 5);
        assert_eq!(out.report.table[1].mean_displacement, 7.0);
    }

    #[test]
    fn table_has_the_summary_columns() {
        let rows = [TableRow { approach: "NEAT".into(), number_of_voxels: 128, mean_displacement: 4.298, fitness_value: 0.46459 }];
        assert_eq!(table_csv(&rows), "Approach,Number of voxels,Mean displacement,Fitness value\nNEAT,128,4.298,0.465\n");
    }
}
