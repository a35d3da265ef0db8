//! Efficacy metrics, per-group breakdowns and the statistical comparison
//! against published baselines.

mod baseline;
mod ttest;

use std::collections::BTreeMap;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baseline::{
    compare_to_baselines, BaselineStudy, BaselineTable, Comparison, ComparisonRow, BASELINE_TABLE_VERSION,
};
pub use ttest::{ln_gamma, paired_ttest, regularized_incomplete_beta, student_t_cdf, student_t_two_sided, TTestResult};

use crate::dataset::{FlowRecord, Label, Technique, Tool};
use crate::seed;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no labels to evaluate")]
    EmptyInput,
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("no scan row carries tool/technique metadata")]
    NoMetadata,
    #[error("a paired t-test needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("all paired differences are equal; the t statistic is undefined")]
    ZeroVariance,
    #[error("invalid pairing: {0}")]
    InvalidPairing(String),
    #[error("baseline table: {0}")]
    Baseline(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// 2×2 counts indexed `[actual][predicted]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn get(&self, actual: Label, predicted: Label) -> u64 {
        self.counts[actual.index()][predicted.index()]
    }
}

pub fn confusion(actual: &[Label], predicted: &[Label]) -> Result<ConfusionMatrix, MetricsError> {
    if actual.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch {
            left: actual.len(),
            right: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (a, p) in actual.iter().zip(predicted) {
        cm.counts[a.index()][p.index()] += 1;
    }
    Ok(cm)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficacyReport {
    pub accuracy: f64,
    pub benign: ClassMetrics,
    pub scan: ClassMetrics,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Zero-denominator cases that were reported as 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EfficacyReport {
    pub fn class(&self, label: Label) -> &ClassMetrics {
        match label {
            Label::Benign => &self.benign,
            Label::Scan => &self.scan,
        }
    }
}

fn ratio(num: u64, den: u64, what: &str, warnings: &mut Vec<String>) -> f64 {
    if den == 0 {
        warnings.push(format!("{what} undefined (zero denominator), reported as 0"));
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy plus per-class and macro-averaged precision, recall and F1.
pub fn efficacy(cm: &ConfusionMatrix) -> Result<EfficacyReport, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::EmptyMatrix);
    }
    let c = &cm.counts;
    let mut warnings = Vec::new();
    let per_class = |k: usize, warnings: &mut Vec<String>| {
        let label = Label::from_index(k).expect("binary");
        let tp = c[k][k];
        let predicted = c[0][k] + c[1][k];
        let actual = c[k][0] + c[k][1];
        let precision = ratio(tp, predicted, &format!("{label} precision"), warnings);
        let recall = ratio(tp, actual, &format!("{label} recall"), warnings);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            warnings.push(format!("{label} f1 undefined (precision + recall = 0), reported as 0"));
            0.0
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support: actual,
        }
    };
    let benign = per_class(0, &mut warnings);
    let scan = per_class(1, &mut warnings);
    Ok(EfficacyReport {
        accuracy: (c[0][0] + c[1][1]) as f64 / total as f64,
        macro_precision: (benign.precision + scan.precision) / 2.0,
        macro_recall: (benign.recall + scan.recall) / 2.0,
        macro_f1: (benign.f1 + scan.f1) / 2.0,
        benign,
        scan,
        warnings,
    })
}

/// Efficacy for one `(tool, technique)` group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupEfficacy {
    pub tool: Tool,
    pub technique: Technique,
    pub scan_rows: usize,
    pub benign_rows: usize,
    pub efficacy: EfficacyReport,
}

/// Per-`(tool, technique)` efficacy. Each group is scored on its own scan
/// rows plus an equal-size sample (without replacement, capped at the
/// available benign rows) of the evaluated benign rows, drawn per group from
/// `seed`.
pub fn group_breakdown(
    rows: &[FlowRecord],
    predictions: &[Label],
    seed: u64,
) -> Result<BTreeMap<(Tool, Technique), GroupEfficacy>, MetricsError> {
    if rows.len() != predictions.len() {
        return Err(MetricsError::LengthMismatch {
            left: rows.len(),
            right: predictions.len(),
        });
    }
    let mut groups: BTreeMap<(Tool, Technique), Vec<usize>> = BTreeMap::new();
    let mut benign = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        match (row.label, row.group()) {
            (Label::Scan, Some(key)) => groups.entry(key).or_default().push(i),
            (Label::Benign, _) => benign.push(i),
            (Label::Scan, None) => {}
        }
    }
    if groups.is_empty() {
        return Err(MetricsError::NoMetadata);
    }

    let mut out = BTreeMap::new();
    for ((tool, technique), scan_idx) in groups {
        let take = scan_idx.len().min(benign.len());
        let key_seed = seed::derive(
            seed,
            &[
                seed::tag("group"),
                seed::tag(tool.as_str()),
                seed::tag(technique.as_str()),
            ],
        );
        let mut rng = seed::rng(key_seed);
        let mut picked: Vec<usize> = sample(&mut rng, benign.len(), take)
            .into_iter()
            .map(|j| benign[j])
            .collect();
        picked.sort_unstable();
        let idx: Vec<usize> = scan_idx.iter().chain(&picked).copied().collect();
        let actual: Vec<Label> = idx.iter().map(|&i| rows[i].label).collect();
        let predicted: Vec<Label> = idx.iter().map(|&i| predictions[i]).collect();
        out.insert(
            (tool, technique),
            GroupEfficacy {
                tool,
                technique,
                scan_rows: scan_idx.len(),
                benign_rows: take,
                efficacy: efficacy(&confusion(&actual, &predicted)?)?,
            },
        );
    }
    Ok(out)
}
