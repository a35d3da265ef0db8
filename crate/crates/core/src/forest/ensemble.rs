use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, FeatureMatrix, GrownTree, TreeNode};
use super::{ForestError, HyperparamSet};
use crate::dataset::{Dataset, Label};
use crate::seed;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A trained forest. Immutable once fitted; prediction takes `&self` and
/// may run from any number of threads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    config: HyperparamSet,
    feature_names: Vec<String>,
    trees: Vec<TreeNode>,
    importances: Vec<f64>,
    train_seed: u64,
}

/// Seed for tree `index` of a forest trained with `master`. Tree `i` is the
/// same in every forest sharing `master`, data and config, whatever its size.
pub fn tree_seed(master: u64, index: usize) -> u64 {
    seed::derive(master, &[seed::tag("tree"), index as u64])
}

impl ForestModel {
    /// Fit on the current rayon pool.
    pub fn fit(data: &Dataset, config: &HyperparamSet, seed: u64) -> Result<Self, ForestError> {
        Self::fit_inner(data, config, seed)
    }

    /// Fit on a dedicated pool of `workers` threads. Output is identical to
    /// [`ForestModel::fit`] for any worker count.
    pub fn fit_with_workers(
        data: &Dataset,
        config: &HyperparamSet,
        seed: u64,
        workers: usize,
    ) -> Result<Self, ForestError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| ForestError::ThreadPool(e.to_string()))?;
        pool.install(|| Self::fit_inner(data, config, seed))
    }

    fn fit_inner(data: &Dataset, config: &HyperparamSet, seed: u64) -> Result<Self, ForestError> {
        if data.is_empty() {
            return Err(ForestError::EmptyDataset);
        }
        config.validate(data.n_features())?;
        if data.class_counts().contains(&0) {
            return Err(ForestError::SingleClassData);
        }
        let matrix = FeatureMatrix::from_dataset(data);
        let grown: Vec<GrownTree> = (0..config.n_estimators)
            .into_par_iter()
            .map(|i| grow_tree(&matrix, config, tree_seed(seed, i)))
            .collect::<Result<_, _>>()?;
        let importances = aggregate_importances(&grown, data.n_features());
        Ok(ForestModel {
            config: *config,
            feature_names: data.feature_names().to_vec(),
            trees: grown.into_iter().map(|t| t.root).collect(),
            importances,
            train_seed: seed,
        })
    }

    pub fn config(&self) -> &HyperparamSet {
        &self.config
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn importances(&self) -> &[f64] {
        &self.importances
    }

    pub fn train_seed(&self) -> u64 {
        self.train_seed
    }

    fn check_dims(&self, x: &[f64]) -> Result<(), ForestError> {
        if x.len() == self.feature_names.len() {
            Ok(())
        } else {
            Err(ForestError::DimensionMismatch {
                expected: self.feature_names.len(),
                found: x.len(),
            })
        }
    }

    pub fn tree_predictions(&self, x: &[f64]) -> Result<Vec<Label>, ForestError> {
        self.check_dims(x)?;
        Ok(self.trees.iter().map(|t| t.predict(x)).collect())
    }

    /// Majority vote of the trees; a tie goes to [`Label::Benign`].
    pub fn predict(&self, x: &[f64]) -> Result<Label, ForestError> {
        self.check_dims(x)?;
        Ok(self.vote(x, self.trees.len(), None))
    }

    /// Fraction of trees voting [`Label::Scan`].
    pub fn predict_score(&self, x: &[f64]) -> Result<f64, ForestError> {
        self.check_dims(x)?;
        let scan = self.trees.iter().filter(|t| t.predict(x) == Label::Scan).count();
        Ok(scan as f64 / self.trees.len() as f64)
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<Label>, ForestError> {
        data.rows().iter().map(|r| self.predict(&r.features)).collect()
    }

    /// Vote of the first `n_trees` trees, each cut at `max_depth`. This is
    /// exactly the prediction of a forest fitted with the same data, seed and
    /// config but `n_estimators = n_trees` and that depth limit, which lets a
    /// search score several candidates from one fit.
    pub fn predict_truncated(&self, x: &[f64], n_trees: usize, max_depth: Option<usize>) -> Result<Label, ForestError> {
        self.check_dims(x)?;
        Ok(self.vote(x, n_trees.min(self.trees.len()), max_depth))
    }

    fn vote(&self, x: &[f64], n_trees: usize, max_depth: Option<usize>) -> Label {
        let scan = self.trees[..n_trees]
            .iter()
            .filter(|t| t.predict_to_depth(x, max_depth) == Label::Scan)
            .count();
        if 2 * scan > n_trees {
            Label::Scan
        } else {
            Label::Benign
        }
    }

    pub fn to_json(&self) -> Result<String, ForestError> {
        let doc = ModelDocumentRef {
            format_version: MODEL_FORMAT_VERSION,
            model: self,
        };
        Ok(serde_json::to_string(&doc)?)
    }

    /// Parse a model document, rejecting any format version other than
    /// [`MODEL_FORMAT_VERSION`].
    pub fn from_json(text: &str) -> Result<Self, ForestError> {
        #[derive(Deserialize)]
        struct Probe {
            format_version: u32,
        }
        let probe: Probe = deserialize_deep(text)?;
        if probe.format_version != MODEL_FORMAT_VERSION {
            return Err(ForestError::UnsupportedVersion(probe.format_version));
        }
        let doc: ModelDocument = deserialize_deep(text)?;
        Ok(doc.model)
    }
}

#[derive(Serialize)]
struct ModelDocumentRef<'a> {
    format_version: u32,
    model: &'a ForestModel,
}

#[derive(Deserialize)]
struct ModelDocument {
    model: ForestModel,
}

// Unlimited-depth trees nest deeper than serde_json's default limit.
fn deserialize_deep<'de, T: Deserialize<'de>>(text: &'de str) -> Result<T, serde_json::Error> {
    let mut de = serde_json::Deserializer::from_str(text);
    de.disable_recursion_limit();
    let value = T::deserialize(&mut de)?;
    de.end()?;
    Ok(value)
}

/// Mean of per-tree normalised impurity decreases, renormalised to sum to 1.
/// When every split in the forest had zero gain the split counts are used
/// instead, so importances still sum to 1 whenever any split exists.
fn aggregate_importances(trees: &[GrownTree], n_features: usize) -> Vec<f64> {
    let mut total = vec![0.0; n_features];
    for tree in trees {
        let sum: f64 = tree.importances.iter().sum();
        if sum > 0.0 {
            for (t, v) in total.iter_mut().zip(&tree.importances) {
                *t += v / sum;
            }
        }
    }
    if total.iter().sum::<f64>() <= 0.0 {
        for tree in trees {
            tree.root.visit(&mut |node, _| {
                if let TreeNode::Internal { feature, .. } = node {
                    total[*feature] += 1.0;
                }
            });
        }
    }
    let sum: f64 = total.iter().sum();
    if sum > 0.0 {
        total.iter_mut().for_each(|v| *v /= sum);
    }
    total
}
