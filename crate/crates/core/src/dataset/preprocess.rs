use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, FlowRecord, Label};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonFinitePolicy {
    /// Remove rows holding NaN or ±∞ in any feature.
    Drop,
    /// Replace NaN and ±∞ with 0.
    ReplaceWithZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    None,
    /// Per-column `(x - min) / (max - min)`; constant columns map to 0.
    MinMax,
}

/// Cleaning steps, applied in order: non-finite handling, optional scaling,
/// exact-duplicate removal. Labels are already binary once loaded (the
/// label map lives on [`super::CsvSchema`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessPolicy {
    pub non_finite: NonFinitePolicy,
    pub drop_duplicates: bool,
    pub scaling: Scaling,
}

impl Default for PreprocessPolicy {
    fn default() -> Self {
        PreprocessPolicy {
            non_finite: NonFinitePolicy::Drop,
            drop_duplicates: true,
            scaling: Scaling::None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessSummary {
    pub input_rows: usize,
    pub non_finite_dropped: usize,
    pub non_finite_replaced: usize,
    pub duplicates_dropped: usize,
    /// Retained rows whose feature vector also appears under the other label.
    pub conflicting_label_rows: usize,
    pub output_rows: usize,
}

/// Bit-level key for a feature vector; `-0.0` and `0.0` compare equal.
fn row_key(features: &[f64]) -> Vec<u64> {
    features
        .iter()
        .map(|&v| if v == 0.0 { 0 } else { v.to_bits() })
        .collect()
}

pub fn preprocess(raw: &Dataset, policy: &PreprocessPolicy) -> Result<(Dataset, PreprocessSummary), DatasetError> {
    if raw.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let mut summary = PreprocessSummary {
        input_rows: raw.len(),
        ..Default::default()
    };

    let mut rows: Vec<FlowRecord> = Vec::with_capacity(raw.len());
    for row in raw.rows() {
        let bad = row.features.iter().filter(|v| !v.is_finite()).count();
        if bad == 0 {
            rows.push(row.clone());
            continue;
        }
        match policy.non_finite {
            NonFinitePolicy::Drop => summary.non_finite_dropped += 1,
            NonFinitePolicy::ReplaceWithZero => {
                summary.non_finite_replaced += 1;
                let mut row = row.clone();
                row.features
                    .iter_mut()
                    .filter(|v| !v.is_finite())
                    .for_each(|v| *v = 0.0);
                rows.push(row);
            }
        }
    }

    if policy.scaling == Scaling::MinMax && !rows.is_empty() {
        for j in 0..raw.n_features() {
            let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.features[j]), hi.max(r.features[j]))
            });
            let span = hi - lo;
            for r in rows.iter_mut() {
                r.features[j] = if span > 0.0 { (r.features[j] - lo) / span } else { 0.0 };
            }
        }
    }

    if policy.drop_duplicates {
        let mut seen: HashMap<(Vec<u64>, Label), ()> = HashMap::with_capacity(rows.len());
        let before = rows.len();
        rows.retain(|r| seen.insert((row_key(&r.features), r.label), ()).is_none());
        summary.duplicates_dropped = before - rows.len();
    }

    let mut labels_by_key: HashMap<Vec<u64>, [bool; 2]> = HashMap::with_capacity(rows.len());
    for r in &rows {
        labels_by_key.entry(row_key(&r.features)).or_default()[r.label.index()] = true;
    }
    summary.conflicting_label_rows = rows
        .iter()
        .filter(|r| labels_by_key[&row_key(&r.features)] == [true, true])
        .count();

    summary.output_rows = rows.len();
    if rows.is_empty() {
        return Err(DatasetError::AllRowsDropped);
    }
    let out = Dataset::new(raw.feature_names().to_vec(), rows)?;
    match out.class_counts() {
        [0, _] => Err(DatasetError::SingleClassRemaining(Label::Scan)),
        [_, 0] => Err(DatasetError::SingleClassRemaining(Label::Benign)),
        _ => Ok((out, summary)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Technique, Tool};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    fn sample() -> Dataset {
        Dataset::new(
            names(2),
            vec![
                FlowRecord::benign(vec![1.0, 2.0]),
                FlowRecord::benign(vec![1.0, f64::INFINITY]),
                FlowRecord::benign(vec![1.0, 2.0]),
                FlowRecord::scan(vec![5.0, 1.0], Tool::Nmap, Technique::Syn),
                FlowRecord::scan(vec![f64::NAN, 1.0], Tool::Nmap, Technique::Syn),
            ],
        )
        .unwrap()
    }

    #[test]
    fn drops_non_finite_and_duplicates() {
        let (out, summary) = preprocess(&sample(), &PreprocessPolicy::default()).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.rows().iter().all(|r| r.features.iter().all(|v| v.is_finite())));
        assert_eq!(summary.non_finite_dropped, 2);
        assert_eq!(summary.duplicates_dropped, 1);
        assert_eq!(summary.output_rows, 2);
    }

    #[test]
    fn replace_policy_keeps_rows() {
        let policy = PreprocessPolicy {
            non_finite: NonFinitePolicy::ReplaceWithZero,
            ..Default::default()
        };
        let (out, summary) = preprocess(&sample(), &policy).unwrap();
        assert_eq!(summary.non_finite_replaced, 2);
        assert_eq!(out.len(), 4);
        assert_eq!(out.rows()[1].features, vec![1.0, 0.0]);
    }

    #[test]
    fn conflicting_labels_are_retained_and_counted() {
        let d = Dataset::new(
            names(1),
            vec![
                FlowRecord::benign(vec![3.0]),
                FlowRecord::scan(vec![3.0], Tool::Zmap, Technique::Syn),
                FlowRecord::benign(vec![4.0]),
            ],
        )
        .unwrap();
        let (out, summary) = preprocess(&d, &PreprocessPolicy::default()).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(summary.conflicting_label_rows, 2);
    }

    #[test]
    fn signed_zero_counts_as_duplicate() {
        let d = Dataset::new(
            names(1),
            vec![
                FlowRecord::benign(vec![0.0]),
                FlowRecord::benign(vec![-0.0]),
                FlowRecord::scan(vec![1.0], Tool::Zmap, Technique::Syn),
            ],
        )
        .unwrap();
        let (out, _) = preprocess(&d, &PreprocessPolicy::default()).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn everything_dropped() {
        let d = Dataset::new(names(1), vec![FlowRecord::benign(vec![f64::NAN])]).unwrap();
        assert!(matches!(
            preprocess(&d, &PreprocessPolicy::default()),
            Err(DatasetError::AllRowsDropped)
        ));
    }

    #[test]
    fn single_class_left() {
        let d = Dataset::new(
            names(1),
            vec![
                FlowRecord::benign(vec![1.0]),
                FlowRecord::scan(vec![f64::NAN], Tool::Zmap, Technique::Syn),
            ],
        )
        .unwrap();
        assert!(matches!(
            preprocess(&d, &PreprocessPolicy::default()),
            Err(DatasetError::SingleClassRemaining(Label::Benign))
        ));
    }

    #[test]
    fn min_max_scaling_is_idempotent() {
        let policy = PreprocessPolicy {
            scaling: Scaling::MinMax,
            ..Default::default()
        };
        let (once, _) = preprocess(&sample(), &policy).unwrap();
        let (twice, _) = preprocess(&once, &policy).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once.rows()[0].features, vec![0.0, 1.0]);
    }
}
