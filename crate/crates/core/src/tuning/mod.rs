//! Hyperparameter search over stratified k-fold cross-validation and the
//! trial runner built on it.

mod search;
mod trial;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use search::{fold_fingerprint, grid_search, random_search, CandidateScore, SearchResult, DEFAULT_RANDOM_ITER};
pub use trial::{run_trial, run_trial_with, trial_seed};

use crate::dataset::DatasetError;
use crate::forest::{ClassWeight, Criterion, ForestError, HyperparamSet, MaxFeatures};
use crate::metrics::MetricsError;

#[derive(Debug, Error)]
pub enum TuningError {
    #[error("search space yields no candidates")]
    NoCandidates,
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("{stage}: {source}")]
    Dataset { stage: &'static str, source: DatasetError },
    #[error("{stage}: {source}")]
    Forest { stage: &'static str, source: ForestError },
    #[error("{stage}: {source}")]
    Metrics { stage: &'static str, source: MetricsError },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SetId {
    A,
    B,
    C,
    D,
    #[serde(rename = "custom")]
    Custom,
}

impl SetId {
    pub const BUILTIN: [SetId; 4] = [SetId::A, SetId::B, SetId::C, SetId::D];

    pub fn as_str(self) -> &'static str {
        match self {
            SetId::A => "A",
            SetId::B => "B",
            SetId::C => "C",
            SetId::D => "D",
            SetId::Custom => "custom",
        }
    }
}

impl fmt::Display for SetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SetId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(SetId::A),
            "B" | "b" => Ok(SetId::B),
            "C" | "c" => Ok(SetId::C),
            "D" | "d" => Ok(SetId::D),
            s if s.eq_ignore_ascii_case("custom") => Ok(SetId::Custom),
            other => Err(format!(
                "unknown hyperparameter set `{other}` (expected A, B, C, D or custom)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMethod {
    Grid,
    Random,
}

impl SearchMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchMethod::Grid => "grid",
            SearchMethod::Random => "random",
        }
    }
}

impl fmt::Display for SearchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Grid of forest configurations: the Cartesian product of `n_estimators`
/// and `max_depth`, every other field fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub set_id: SetId,
    pub n_estimators: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub criterion: Criterion,
    pub class_weight: ClassWeight,
    #[serde(default = "default_split")]
    pub min_samples_split: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: bool,
}

fn default_split() -> usize {
    2
}

fn default_bootstrap() -> bool {
    true
}

impl SearchSpace {
    /// The four reproduction sets. `Custom` has no built-in definition.
    pub fn builtin(set: SetId) -> Option<SearchSpace> {
        let base = |n_estimators: &[usize], leaf: usize, depth: &[usize]| SearchSpace {
            set_id: set,
            n_estimators: n_estimators.to_vec(),
            max_depth: depth.to_vec(),
            min_samples_leaf: leaf,
            max_features: MaxFeatures::Sqrt,
            criterion: Criterion::Gini,
            class_weight: ClassWeight::Balanced,
            min_samples_split: 2,
            bootstrap: true,
        };
        match set {
            SetId::A => Some(base(&[10, 50, 100, 200], 1, &[5, 10])),
            SetId::B => Some(base(&[15, 25, 50, 100], 1, &[5, 10])),
            SetId::C => Some(base(&[200, 500], 14, &[4, 5, 6, 7, 8])),
            SetId::D => Some(SearchSpace {
                max_features: MaxFeatures::Log2,
                criterion: Criterion::Entropy,
                class_weight: ClassWeight::None,
                ..base(&[200, 500], 14, &[4, 5, 6, 7, 8])
            }),
            SetId::Custom => None,
        }
    }

    pub fn validate(&self) -> Result<(), TuningError> {
        if self.n_estimators.is_empty() || self.max_depth.is_empty() {
            return Err(TuningError::NoCandidates);
        }
        if self.n_estimators.contains(&0) || self.max_depth.contains(&0) {
            return Err(TuningError::InvalidSpace(
                "estimator counts and depths must be positive".into(),
            ));
        }
        if self.min_samples_leaf < 1 || self.min_samples_split < 2 {
            return Err(TuningError::InvalidSpace(
                "min_samples_leaf must be >= 1 and min_samples_split >= 2".into(),
            ));
        }
        Ok(())
    }

    /// Number of grid candidates.
    pub fn grid_size(&self) -> usize {
        self.n_estimators.len() * self.max_depth.len()
    }
}

/// All candidates in lexicographic order: estimators outer, depth inner.
pub fn enumerate_grid(space: &SearchSpace) -> Vec<HyperparamSet> {
    space
        .n_estimators
        .iter()
        .flat_map(|&n| {
            space.max_depth.iter().map(move |&d| HyperparamSet {
                n_estimators: n,
                max_depth: Some(d),
                min_samples_leaf: space.min_samples_leaf,
                min_samples_split: space.min_samples_split,
                max_features: space.max_features,
                criterion: space.criterion,
                class_weight: space.class_weight,
                bootstrap: space.bootstrap,
            })
        })
        .collect()
}
