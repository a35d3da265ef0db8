//! CART trees and the bagged random forest built from them.

mod ensemble;
mod impurity;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ensemble::{ForestModel, MODEL_FORMAT_VERSION};
pub use impurity::{class_weights, entropy, feature_subset_size, gini, ClassWeight, Criterion, MaxFeatures};
pub use tree::{
    best_split, build_tree, majority, FeatureMatrix, Split, TreeNode, GAIN_TOLERANCE, MAX_BOOTSTRAP_REDRAWS,
};

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("impurity of an empty node is undefined")]
    EmptyNode,
    #[error("class {0} has no samples")]
    MissingClass(usize),
    #[error("training data is empty")]
    EmptyDataset,
    #[error("training data holds a single class")]
    SingleClassData,
    #[error("expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidConfig(String),
    #[error("bootstrap sample lost a class after {redraws} redraws")]
    ClassLostInBootstrap { redraws: u64 },
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Forest hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HyperparamSet {
    pub n_estimators: usize,
    /// `None` grows until the other stopping rules apply.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub criterion: Criterion,
    pub class_weight: ClassWeight,
    pub bootstrap: bool,
}

impl Default for HyperparamSet {
    fn default() -> Self {
        HyperparamSet {
            n_estimators: 100,
            max_depth: None,
            min_samples_leaf: 1,
            min_samples_split: 2,
            max_features: MaxFeatures::Sqrt,
            criterion: Criterion::Gini,
            class_weight: ClassWeight::None,
            bootstrap: true,
        }
    }
}

impl HyperparamSet {
    pub fn validate(&self, n_features: usize) -> Result<(), ForestError> {
        let fail = |msg: String| Err(ForestError::InvalidConfig(msg));
        if self.n_estimators < 1 {
            return fail("n_estimators must be at least 1".into());
        }
        if self.min_samples_leaf < 1 {
            return fail("min_samples_leaf must be at least 1".into());
        }
        if self.min_samples_split < 2 {
            return fail("min_samples_split must be at least 2".into());
        }
        if self.max_depth == Some(0) {
            return fail("max_depth must be positive".into());
        }
        if n_features == 0 {
            return fail("data has no feature columns".into());
        }
        if let MaxFeatures::Fixed(m) = self.max_features {
            if m < 1 || m > n_features {
                return fail(format!("max_features {m} outside 1..={n_features}"));
            }
        }
        Ok(())
    }
}
