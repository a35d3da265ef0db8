use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, Label};
use crate::seed;

/// Train/test and cross-validation parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub test_fraction: f64,
    pub seed: u64,
    pub folds: usize,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan {
            test_fraction: 0.30,
            seed: 0,
            folds: 10,
        }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(DatasetError::InvalidPlan(format!(
                "test fraction {} outside (0, 1)",
                self.test_fraction
            )));
        }
        if self.folds < 2 {
            return Err(DatasetError::InvalidPlan(format!("fold count {} < 2", self.folds)));
        }
        Ok(())
    }
}

fn indices_by_class(data: &Dataset) -> [Vec<usize>; 2] {
    let mut by_class = [Vec::new(), Vec::new()];
    for (i, row) in data.rows().iter().enumerate() {
        by_class[row.label.index()].push(i);
    }
    by_class
}

/// Per-class test sizes by largest-remainder apportionment of
/// `round(fraction * total)`, clamped so each class keeps at least one row
/// on each side.
fn test_allocation(counts: [usize; 2], fraction: f64) -> [usize; 2] {
    let total: usize = counts.iter().sum();
    let target = (fraction * total as f64).round() as usize;
    let quotas = counts.map(|c| fraction * c as f64);
    let mut alloc = quotas.map(|q| q.floor() as usize);
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut remaining = target.saturating_sub(alloc.iter().sum());
    // fractional parts sum to < 2, so one pass hands out the whole remainder
    for c in order {
        if remaining > 0 && alloc[c] < counts[c] {
            alloc[c] += 1;
            remaining -= 1;
        }
    }
    for c in 0..2 {
        alloc[c] = alloc[c].clamp(1, counts[c] - 1);
    }
    alloc
}

/// Stratified train/test row indices, each sorted ascending.
pub fn split_indices(data: &Dataset, plan: &SplitPlan) -> Result<(Vec<usize>, Vec<usize>), DatasetError> {
    plan.validate()?;
    let counts = data.class_counts();
    for label in Label::ALL {
        if counts[label.index()] < 2 {
            return Err(DatasetError::DegenerateClass {
                label,
                count: counts[label.index()],
            });
        }
    }
    let alloc = test_allocation(counts, plan.test_fraction);
    let mut rng = seed::rng(seed::derive(plan.seed, &[seed::tag("train-test-split")]));
    let mut train = Vec::with_capacity(data.len());
    let mut test = Vec::with_capacity(alloc.iter().sum());
    for (c, mut idx) in indices_by_class(data).into_iter().enumerate() {
        idx.shuffle(&mut rng);
        test.extend_from_slice(&idx[..alloc[c]]);
        train.extend_from_slice(&idx[alloc[c]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified train/test partition. Both halves keep the source row order.
pub fn stratified_split(data: &Dataset, plan: &SplitPlan) -> Result<(Dataset, Dataset), DatasetError> {
    let (train, test) = split_indices(data, plan)?;
    Ok((data.subset(&train), data.subset(&test)))
}

/// One cross-validation fold, as sorted row indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified k-fold assignment. Each class is shuffled and dealt round-robin
/// into the folds; the deal continues where the previous class stopped, so
/// fold sizes differ by at most one overall as well as per class.
pub fn stratified_kfold(data: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>, DatasetError> {
    if k < 2 {
        return Err(DatasetError::InvalidPlan(format!("fold count {k} < 2")));
    }
    let counts = data.class_counts();
    for label in Label::ALL {
        let count = counts[label.index()];
        if count < k {
            return Err(DatasetError::InsufficientClassSize { label, count, k });
        }
    }
    let mut rng = seed::rng(seed::derive(seed, &[seed::tag("kfold")]));
    let mut assignment = vec![0usize; data.len()];
    let mut next = 0usize;
    for mut idx in indices_by_class(data) {
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (validation, train): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| assignment[i] == f);
            Fold { train, validation }
        })
        .collect())
}
