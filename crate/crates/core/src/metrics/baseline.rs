use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{paired_ttest, MetricsError, TTestResult};

pub const BASELINE_TABLE_VERSION: u32 = 1;

/// Published efficacy of one source study. `None` marks a value the study
/// did not report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineStudy {
    pub study: String,
    pub accuracy: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineTable {
    pub version: u32,
    pub studies: Vec<BaselineStudy>,
}

fn study(name: &str, values: [Option<f64>; 4]) -> BaselineStudy {
    let [accuracy, recall, precision, f1] = values;
    BaselineStudy {
        study: name.to_string(),
        accuracy,
        recall,
        precision,
        f1,
    }
}

impl BaselineTable {
    /// Random forest port-scan results from six prior studies.
    pub fn builtin() -> Self {
        BaselineTable {
            version: BASELINE_TABLE_VERSION,
            studies: vec![
                study("Algaolahi", [Some(0.9975), Some(0.9989), Some(0.9975), Some(0.9982)]),
                study("Baah", [Some(0.9998), Some(0.9997), Some(0.9999), Some(0.9998)]),
                study("Sirisha", [Some(0.7650), Some(0.6525), Some(0.9721), Some(0.7809)]),
                study("SaiKiran", [Some(0.9993), None, None, None]),
                study("Mohseni", [Some(0.9964), None, None, None]),
                study("Bertoli", [None, None, None, Some(1.0000)]),
            ],
        }
    }

    pub fn get(&self, name: &str) -> Option<&BaselineStudy> {
        self.studies.iter().find(|s| s.study.eq_ignore_ascii_case(name.trim()))
    }

    /// Read `study,accuracy,recall,precision,f1`; an empty or `NaN` cell is
    /// an absent value.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, MetricsError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
        if headers != ["study", "accuracy", "recall", "precision", "f1"] {
            return Err(MetricsError::Baseline(format!(
                "expected header study,accuracy,recall,precision,f1, got {}",
                headers.join(",")
            )));
        }
        let mut studies = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let cell = |j: usize| -> Result<Option<f64>, MetricsError> {
                let raw = record.get(j).unwrap_or("").trim();
                if raw.is_empty() || raw.eq_ignore_ascii_case("nan") {
                    return Ok(None);
                }
                raw.parse::<f64>()
                    .map(Some)
                    .map_err(|_| MetricsError::Baseline(format!("row {}: bad number `{raw}`", i + 1)))
            };
            studies.push(study(
                record.get(0).unwrap_or("").trim(),
                [cell(1)?, cell(2)?, cell(3)?, cell(4)?],
            ));
        }
        Ok(BaselineTable {
            version: BASELINE_TABLE_VERSION,
            studies,
        })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, MetricsError> {
        let file = std::fs::File::open(path).map_err(|e| MetricsError::Baseline(e.to_string()))?;
        Self::from_csv(file)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), MetricsError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["study", "accuracy", "recall", "precision", "f1"])?;
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "NaN".into());
        for s in &self.studies {
            wtr.write_record([
                s.study.clone(),
                fmt(s.accuracy),
                fmt(s.recall),
                fmt(s.precision),
                fmt(s.f1),
            ])?;
        }
        wtr.flush().map_err(|e| MetricsError::Baseline(e.to_string()))?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub trial: String,
    pub trial_accuracy: f64,
    pub study: String,
    pub baseline_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// `(trial index, study name)` exactly as requested.
    pub pairing: Vec<(usize, String)>,
    pub rows: Vec<ComparisonRow>,
    pub baseline_version: u32,
    /// Trial accuracy minus baseline accuracy.
    pub ttest: TTestResult,
}

/// Pair trial accuracies with study accuracies and run a paired t-test over
/// the pairs. `trials` holds `(name, accuracy)`; each pairing entry names a
/// trial by index and a study by name.
pub fn compare_to_baselines(
    trials: &[(String, f64)],
    baselines: &BaselineTable,
    pairing: &[(usize, String)],
) -> Result<Comparison, MetricsError> {
    if pairing.len() < 2 {
        return Err(MetricsError::InvalidPairing(format!(
            "need at least 2 pairs, got {}",
            pairing.len()
        )));
    }
    let mut rows = Vec::with_capacity(pairing.len());
    for (trial_idx, study_name) in pairing {
        let (trial, trial_accuracy) = trials.get(*trial_idx).ok_or_else(|| {
            MetricsError::InvalidPairing(format!("trial index {trial_idx} out of range (have {})", trials.len()))
        })?;
        let study = baselines
            .get(study_name)
            .ok_or_else(|| MetricsError::InvalidPairing(format!("unknown study `{study_name}`")))?;
        let baseline_accuracy = study
            .accuracy
            .ok_or_else(|| MetricsError::InvalidPairing(format!("study `{}` reports no accuracy", study.study)))?;
        rows.push(ComparisonRow {
            trial: trial.clone(),
            trial_accuracy: *trial_accuracy,
            study: study.study.clone(),
            baseline_accuracy,
        });
    }
    let a: Vec<f64> = rows.iter().map(|r| r.trial_accuracy).collect();
    let b: Vec<f64> = rows.iter().map(|r| r.baseline_accuracy).collect();
    Ok(Comparison {
        ttest: paired_ttest(&a, &b)?,
        pairing: pairing.to_vec(),
        rows,
        baseline_version: baselines.version,
    })
}
