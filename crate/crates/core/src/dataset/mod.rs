//! Labeled flow records and the operations that load, clean and partition them.

mod csv_io;
mod preprocess;
mod split;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_io::{load_csv, read_csv, read_headers, write_csv, write_csv_path, CsvSchema, LabelMap};
pub use preprocess::{preprocess, NonFinitePolicy, PreprocessPolicy, PreprocessSummary, Scaling};
pub use split::{split_indices, stratified_kfold, stratified_split, Fold, SplitPlan};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    ParseFailure { row: usize, column: String, value: String },
    #[error("row {row}: unrecognised label `{value}`")]
    UnknownLabel { row: usize, value: String },
    #[error("row {row}: {message}")]
    InvalidMetadata { row: usize, message: String },
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("row {row} has {found} features, expected {expected}")]
    DimensionMismatch { row: usize, found: usize, expected: usize },
    #[error("preprocessing removed every row")]
    AllRowsDropped,
    #[error("only the {0} class remains after preprocessing")]
    SingleClassRemaining(Label),
    #[error("class {label} has {count} rows and cannot appear in both partitions")]
    DegenerateClass { label: Label, count: usize },
    #[error("class {label} has {count} rows, fewer than k = {k}")]
    InsufficientClassSize { label: Label, count: usize, k: usize },
    #[error("invalid split plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Binary flow class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Scan,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Benign, Label::Scan];

    pub fn index(self) -> usize {
        match self {
            Label::Benign => 0,
            Label::Scan => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Label> {
        match i {
            0 => Some(Label::Benign),
            1 => Some(Label::Scan),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Benign => "benign",
            Label::Scan => "scan",
        })
    }
}

macro_rules! string_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let lower = s.trim().to_ascii_lowercase();
                $name::ALL
                    .iter()
                    .copied()
                    .find(|v| v.as_str() == lower)
                    .ok_or_else(|| format!("unknown {} `{}`", stringify!($name).to_ascii_lowercase(), s))
            }
        }
    };
}

string_enum!(Tool {
    Nmap => "nmap",
    Masscan => "masscan",
    Unicornscan => "unicornscan",
    Zmap => "zmap",
    Hping => "hping",
});

string_enum!(Technique {
    Connect => "connect",
    Syn => "syn",
    Fin => "fin",
    Null => "null",
    Xmas => "xmas",
    Udp => "udp",
});

/// One network flow.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowRecord {
    pub features: Vec<f64>,
    pub label: Label,
    pub tool: Option<Tool>,
    pub technique: Option<Technique>,
}

impl FlowRecord {
    pub fn benign(features: Vec<f64>) -> Self {
        FlowRecord {
            features,
            label: Label::Benign,
            tool: None,
            technique: None,
        }
    }

    pub fn scan(features: Vec<f64>, tool: Tool, technique: Technique) -> Self {
        FlowRecord {
            features,
            label: Label::Scan,
            tool: Some(tool),
            technique: Some(technique),
        }
    }

    /// `(tool, technique)` when both are present.
    pub fn group(&self) -> Option<(Tool, Technique)> {
        self.tool.zip(self.technique)
    }
}

/// Column-named collection of flow records.
///
/// Construction validates that every row has one value per feature name and
/// that benign rows carry no tool/technique metadata. Scan rows may omit
/// metadata (external corpora rarely have it).
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    rows: Vec<FlowRecord>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, rows: Vec<FlowRecord>) -> Result<Self, DatasetError> {
        let expected = feature_names.len();
        for (i, row) in rows.iter().enumerate() {
            if row.features.len() != expected {
                return Err(DatasetError::DimensionMismatch {
                    row: i + 1,
                    found: row.features.len(),
                    expected,
                });
            }
            if row.label == Label::Benign && (row.tool.is_some() || row.technique.is_some()) {
                return Err(DatasetError::InvalidMetadata {
                    row: i + 1,
                    message: "benign rows must not carry tool/technique metadata".into(),
                });
            }
        }
        Ok(Dataset { feature_names, rows })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> &[FlowRecord] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<FlowRecord> {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Row count per label, indexed by [`Label::index`].
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for row in &self.rows {
            counts[row.label.index()] += 1;
        }
        counts
    }

    pub fn labels(&self) -> Vec<Label> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// True when any scan row carries tool and technique.
    pub fn has_metadata(&self) -> bool {
        self.rows.iter().any(|r| r.group().is_some())
    }

    /// New dataset holding the rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Same rows with feature columns reordered: output column `j` is input column `order[j]`.
    pub fn permute_columns(&self, order: &[usize]) -> Dataset {
        Dataset {
            feature_names: order.iter().map(|&j| self.feature_names[j].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| FlowRecord {
                    features: order.iter().map(|&j| r.features[j]).collect(),
                    ..r.clone()
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enums_parse_case_insensitively() {
        assert_eq!("NMAP".parse::<Tool>().unwrap(), Tool::Nmap);
        assert_eq!(" xmas ".parse::<Technique>().unwrap(), Technique::Xmas);
        assert!("arp".parse::<Technique>().is_err());
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = Dataset::new(vec!["a".into(), "b".into()], vec![FlowRecord::benign(vec![1.0])]).unwrap_err();
        assert!(matches!(
            err,
            DatasetError::DimensionMismatch {
                row: 1,
                found: 1,
                expected: 2
            }
        ));
    }

    #[test]
    fn rejects_benign_metadata() {
        let mut row = FlowRecord::scan(vec![1.0], Tool::Nmap, Technique::Syn);
        row.label = Label::Benign;
        assert!(matches!(
            Dataset::new(vec!["a".into()], vec![row]),
            Err(DatasetError::InvalidMetadata { .. })
        ));
    }

    #[test]
    fn class_counts_track_rows() {
        let d = Dataset::new(
            vec!["a".into()],
            vec![
                FlowRecord::benign(vec![0.0]),
                FlowRecord::benign(vec![1.0]),
                FlowRecord::scan(vec![2.0], Tool::Zmap, Technique::Syn),
            ],
        )
        .unwrap();
        assert_eq!(d.class_counts(), [2, 1]);
        assert_eq!(d.subset(&[2, 0]).class_counts(), [1, 1]);
    }
}
