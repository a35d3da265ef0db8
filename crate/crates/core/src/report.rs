//! Versioned trial reports and their table renderers.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Technique, Tool};
use crate::forest::HyperparamSet;
use crate::metrics::{Comparison, ConfusionMatrix, EfficacyReport, GroupEfficacy};
use crate::tuning::{CandidateScore, SearchMethod, SetId};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unsupported report schema version {found} (this build reads {REPORT_SCHEMA_VERSION})")]
    UnsupportedVersion { found: u64 },
    #[error("report is missing `schema_version`")]
    MissingVersion,
    #[error("invalid report: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Rows per class, `[benign, scan]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub train: [usize; 2],
    pub test: [usize; 2],
    pub test_fraction: f64,
    pub split_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub best_config: HyperparamSet,
    pub best_grid_index: usize,
    pub cv_mean_score: f64,
    pub cv_std: f64,
    pub folds: usize,
    pub fold_fingerprint: String,
    pub candidates: Vec<CandidateScore>,
    pub elapsed_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub importance: f64,
}

/// One trial: a single set and search method evaluated on the held-out
/// partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub set_id: SetId,
    pub method: SearchMethod,
    pub seed: u64,
    pub trial_seed: u64,
    pub split: SplitSummary,
    pub search: SearchSummary,
    pub test: EfficacyReport,
    pub confusion: ConfusionMatrix,
    /// Absent when the data carried no tool/technique metadata.
    pub groups: Option<Vec<GroupEfficacy>>,
    pub importances: Vec<FeatureImportance>,
    pub tool_version: String,
    pub elapsed_seconds: f64,
}

impl TrialReport {
    pub fn label(&self) -> String {
        format!("{}/{}", self.set_id, self.method)
    }

    pub fn group(&self, tool: Tool, technique: Technique) -> Option<&GroupEfficacy> {
        self.groups
            .as_ref()?
            .iter()
            .find(|g| g.tool == tool && g.technique == technique)
    }
}

/// On-disk report: one or more trial rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub trials: Vec<TrialReport>,
}

impl ReportFile {
    pub fn new(trials: Vec<TrialReport>) -> Self {
        ReportFile {
            schema_version: REPORT_SCHEMA_VERSION,
            trials,
        }
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Rejects any schema version other than [`REPORT_SCHEMA_VERSION`].
    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("schema_version")
            .ok_or(ReportError::MissingVersion)?
            .as_u64()
            .ok_or_else(|| ReportError::Invalid("schema_version is not an integer".into()))?;
        if found != REPORT_SCHEMA_VERSION as u64 {
            return Err(ReportError::UnsupportedVersion { found });
        }
        let file: ReportFile = serde_json::from_value(value)?;
        file.check()?;
        Ok(file)
    }

    fn check(&self) -> Result<(), ReportError> {
        for t in &self.trials {
            let e = &t.test;
            let fields = [e.accuracy, e.macro_precision, e.macro_recall, e.macro_f1];
            if fields.iter().any(|v| !v.is_finite() || !(0.0..=1.0).contains(v)) {
                return Err(ReportError::Invalid(format!(
                    "{}: efficacy field outside [0, 1]",
                    t.label()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Text,
}

fn table(format: Format, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    match format {
        Format::Markdown => {
            let _ = writeln!(out, "| {} |", header.join(" | "));
            let _ = writeln!(out, "|{}", header.iter().map(|_| "---|").collect::<String>());
            for r in rows {
                let _ = writeln!(out, "| {} |", r.join(" | "));
            }
        }
        Format::Text => {
            let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
            for r in rows {
                for (w, c) in widths.iter_mut().zip(r) {
                    *w = (*w).max(c.len());
                }
            }
            let line = |cells: Vec<&str>| {
                cells
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            };
            let _ = writeln!(out, "{}", line(header.to_vec()));
            let _ = writeln!(
                out,
                "{}",
                line(
                    widths
                        .iter()
                        .map(|w| "-".repeat(*w))
                        .collect::<Vec<_>>()
                        .iter()
                        .map(|s| s.as_str())
                        .collect()
                )
            );
            for r in rows {
                let _ = writeln!(out, "{}", line(r.iter().map(|s| s.as_str()).collect()));
            }
        }
    }
    out
}

fn heading(format: Format, text: &str) -> String {
    match format {
        Format::Markdown => format!("## {text}\n\n"),
        Format::Text => format!("{text}\n{}\n\n", "=".repeat(text.len())),
    }
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

fn depth(d: Option<usize>) -> String {
    d.map_or_else(|| "none".into(), |d| d.to_string())
}

/// Random-search rows before grid-search rows; otherwise input order.
fn ordered(trials: &[TrialReport]) -> Vec<&TrialReport> {
    let mut rows: Vec<&TrialReport> = trials.iter().collect();
    rows.sort_by_key(|t| match t.method {
        SearchMethod::Random => 0,
        SearchMethod::Grid => 1,
    });
    rows
}

/// Efficacy tables per set, then per-group breakdowns.
pub fn render(trials: &[TrialReport], format: Format) -> String {
    let mut out = String::new();
    let mut sets: Vec<SetId> = trials.iter().map(|t| t.set_id).collect();
    sets.sort();
    sets.dedup();
    for set in sets {
        let of_set: Vec<TrialReport> = trials.iter().filter(|t| t.set_id == set).cloned().collect();
        out += &heading(format, &format!("Hyperparameter set {set}"));
        let rows: Vec<Vec<String>> = ordered(&of_set)
            .iter()
            .map(|t| {
                vec![
                    t.method.to_string(),
                    f4(t.test.accuracy),
                    f4(t.test.macro_recall),
                    f4(t.test.macro_precision),
                    f4(t.test.macro_f1),
                    f4(t.search.cv_mean_score),
                    t.search.best_config.n_estimators.to_string(),
                    depth(t.search.best_config.max_depth),
                ]
            })
            .collect();
        out += &table(
            format,
            &[
                "Search",
                "Accuracy",
                "Recall",
                "Precision",
                "F1",
                "CV mean",
                "Trees",
                "Depth",
            ],
            &rows,
        );
        out.push('\n');

        for t in ordered(&of_set) {
            out += &heading(format, &format!("Per-group breakdown, set {set}, {} search", t.method));
            match &t.groups {
                Some(groups) => {
                    let rows: Vec<Vec<String>> = groups
                        .iter()
                        .map(|g| {
                            vec![
                                g.tool.to_string(),
                                g.technique.to_string(),
                                g.scan_rows.to_string(),
                                g.benign_rows.to_string(),
                                f4(g.efficacy.accuracy),
                                f4(g.efficacy.scan.recall),
                                f4(g.efficacy.macro_f1),
                            ]
                        })
                        .collect();
                    out += &table(
                        format,
                        &[
                            "Tool",
                            "Technique",
                            "Scan rows",
                            "Benign rows",
                            "Accuracy",
                            "Scan recall",
                            "F1",
                        ],
                        &rows,
                    );
                }
                None => out += "No tool/technique metadata in the input; breakdown omitted.\n",
            }
            out.push('\n');
        }
    }
    out
}

/// Baseline comparison: one row per pair with the reproduced accuracy
/// alongside, then the t-test line.
pub fn render_comparison(cmp: &Comparison, format: Format) -> String {
    let rows: Vec<Vec<String>> = cmp
        .rows
        .iter()
        .map(|r| {
            vec![
                r.study.clone(),
                f4(r.baseline_accuracy),
                r.trial.clone(),
                f4(r.trial_accuracy),
            ]
        })
        .collect();
    let mut out = heading(format, "Comparison with published results");
    out += &table(
        format,
        &["Study", "Accuracy", "Reproduction", "Reproduction accuracy"],
        &rows,
    );
    let t = &cmp.ttest;
    let _ = writeln!(
        out,
        "\nPaired t-test (reproduction minus study): t = {:.6}, p = {:.6}, df = {}, mean difference = {:.6}",
        t.t, t.p, t.df, t.diff_mean
    );
    out
}
