use serde::{Deserialize, Serialize};

use super::ForestError;

/// Node impurity measure used to score splits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

impl Criterion {
    pub fn evaluate(self, counts: &[f64]) -> Result<f64, ForestError> {
        match self {
            Criterion::Gini => gini(counts),
            Criterion::Entropy => entropy(counts),
        }
    }

    /// Two-class impurity without the empty-node check; `total` must be > 0.
    #[inline]
    pub(crate) fn binary(self, counts: [f64; 2], total: f64) -> f64 {
        let p0 = counts[0] / total;
        let p1 = counts[1] / total;
        match self {
            Criterion::Gini => 1.0 - (p0 * p0 + p1 * p1),
            Criterion::Entropy => -(plogp(p0) + plogp(p1)),
        }
    }
}

#[inline]
fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

fn total(counts: &[f64]) -> Result<f64, ForestError> {
    let total: f64 = counts.iter().sum();
    if total > 0.0 {
        Ok(total)
    } else {
        Err(ForestError::EmptyNode)
    }
}

/// Gini impurity `1 - Σ p_c²` of weighted class counts.
pub fn gini(counts: &[f64]) -> Result<f64, ForestError> {
    let total = total(counts)?;
    Ok(1.0 - counts.iter().map(|c| (c / total).powi(2)).sum::<f64>())
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy(counts: &[f64]) -> Result<f64, ForestError> {
    let total = total(counts)?;
    Ok(-counts.iter().map(|c| plogp(c / total)).sum::<f64>())
}

/// Sample reweighting by class frequency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeight {
    None,
    /// `n / (k * n_c)` over the whole training set.
    Balanced,
    /// `n / (k * n_c)` recomputed on each tree's bootstrap sample.
    BalancedSubsample,
}

/// Per-class weights for `counts`. `Balanced` and `BalancedSubsample` share
/// the formula; they differ only in which counts the caller passes.
pub fn class_weights(mode: ClassWeight, counts: &[usize]) -> Result<Vec<f64>, ForestError> {
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(ForestError::MissingClass(missing));
    }
    Ok(match mode {
        ClassWeight::None => vec![1.0; counts.len()],
        ClassWeight::Balanced | ClassWeight::BalancedSubsample => {
            let n: usize = counts.iter().sum();
            let k = counts.len() as f64;
            counts.iter().map(|&c| n as f64 / (k * c as f64)).collect()
        }
    })
}

/// Number of candidate features examined per node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
    Fixed(usize),
}

pub fn feature_subset_size(policy: MaxFeatures, d: usize) -> usize {
    match policy {
        MaxFeatures::Sqrt => ((d as f64).sqrt().floor() as usize).max(1),
        MaxFeatures::Log2 => ((d as f64).log2().floor() as usize).max(1),
        MaxFeatures::All => d,
        MaxFeatures::Fixed(m) => m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[10.0, 0.0]).unwrap(), 0.0);
        assert_eq!(gini(&[5.0, 5.0]).unwrap(), 0.5);
        assert_abs_diff_eq!(gini(&[2.0, 6.0]).unwrap(), 0.375, epsilon = 1e-15);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[8.0, 0.0]).unwrap(), 0.0);
        assert_eq!(entropy(&[5.0, 5.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(entropy(&[2.0, 6.0]).unwrap(), 0.8113, epsilon = 1e-4);
    }

    #[test]
    fn empty_node() {
        assert!(matches!(gini(&[0.0, 0.0]), Err(ForestError::EmptyNode)));
        assert!(matches!(entropy(&[]), Err(ForestError::EmptyNode)));
    }

    #[test]
    fn binary_fast_path_agrees() {
        for c in [[3.0, 1.0], [0.5, 7.25], [4.0, 0.0]] {
            let t = c[0] + c[1];
            assert_abs_diff_eq!(Criterion::Gini.binary(c, t), gini(&c).unwrap(), epsilon = 1e-15);
            assert_abs_diff_eq!(Criterion::Entropy.binary(c, t), entropy(&c).unwrap(), epsilon = 1e-15);
        }
    }

    #[test]
    fn weights() {
        assert_eq!(class_weights(ClassWeight::None, &[90, 10]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(class_weights(ClassWeight::Balanced, &[50, 50]).unwrap(), vec![1.0, 1.0]);
        let w = class_weights(ClassWeight::Balanced, &[90, 10]).unwrap();
        assert_abs_diff_eq!(w[0], 100.0 / 180.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[0], 0.5556, epsilon = 1e-4);
        assert_eq!(w[1], 5.0);
        assert!(matches!(
            class_weights(ClassWeight::Balanced, &[90, 0]),
            Err(ForestError::MissingClass(1))
        ));
    }

    #[test]
    fn subset_sizes() {
        assert_eq!(feature_subset_size(MaxFeatures::Sqrt, 16), 4);
        assert_eq!(feature_subset_size(MaxFeatures::Log2, 16), 4);
        assert_eq!(feature_subset_size(MaxFeatures::Sqrt, 10), 3);
        assert_eq!(feature_subset_size(MaxFeatures::Sqrt, 1), 1);
        assert_eq!(feature_subset_size(MaxFeatures::Log2, 1), 1);
        assert_eq!(feature_subset_size(MaxFeatures::All, 14), 14);
        assert_eq!(feature_subset_size(MaxFeatures::Fixed(5), 14), 5);
    }
}
