use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::impurity::{class_weights, feature_subset_size, ClassWeight, Criterion};
use super::{ForestError, HyperparamSet};
use crate::dataset::{Dataset, Label};
use crate::seed;

/// Gains within this distance are treated as equal, and nodes whose
/// impurity is at most this are treated as pure.
pub const GAIN_TOLERANCE: f64 = 1e-12;

/// Redraws allowed when a `balanced_subsample` bootstrap misses a class.
pub const MAX_BOOTSTRAP_REDRAWS: u64 = 10;

/// Column-major copy of a dataset's features, the layout split search wants.
#[derive(Clone, Debug)]
pub struct FeatureMatrix {
    columns: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl FeatureMatrix {
    pub fn from_dataset(data: &Dataset) -> Self {
        let mut columns = vec![Vec::with_capacity(data.len()); data.n_features()];
        for row in data.rows() {
            for (col, &v) in columns.iter_mut().zip(&row.features) {
                col.push(v);
            }
        }
        FeatureMatrix {
            columns,
            labels: data.labels(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }
}

/// A split chosen at one node. Rows with `value <= threshold` go left.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// `impurity(parent) - Σ (w_child / w_parent) · impurity(child)`.
    pub impurity_decrease: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        samples: usize,
        class_votes: [f64; 2],
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        samples: usize,
        class_votes: [f64; 2],
        prediction: Label,
    },
}

/// Argmax of weighted votes; ties go to the lower label.
pub fn majority(votes: [f64; 2]) -> Label {
    if votes[1] > votes[0] {
        Label::Scan
    } else {
        Label::Benign
    }
}

impl TreeNode {
    pub fn samples(&self) -> usize {
        match self {
            TreeNode::Internal { samples, .. } | TreeNode::Leaf { samples, .. } => *samples,
        }
    }

    pub fn class_votes(&self) -> [f64; 2] {
        match self {
            TreeNode::Internal { class_votes, .. } | TreeNode::Leaf { class_votes, .. } => *class_votes,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        self.predict_to_depth(x, None)
    }

    /// Prediction of this tree cut off at `max_depth`: a node at that depth
    /// answers with its own vote majority, exactly as a tree grown with that
    /// depth limit would.
    pub fn predict_to_depth(&self, x: &[f64], max_depth: Option<usize>) -> Label {
        let mut node = self;
        let mut depth = 0;
        loop {
            match node {
                TreeNode::Leaf { prediction, .. } => return *prediction,
                TreeNode::Internal { class_votes, .. } if Some(depth) == max_depth => return majority(*class_votes),
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                    depth += 1;
                }
            }
        }
    }

    /// Length of the longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        let mut max = 0;
        self.visit(&mut |_, d| max = max.max(d));
        max
    }

    pub fn internal_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |node, _| {
            if matches!(node, TreeNode::Internal { .. }) {
                n += 1
            }
        });
        n
    }

    /// Pre-order walk with node depth.
    pub fn visit<F: FnMut(&TreeNode, usize)>(&self, f: &mut F) {
        let mut stack = vec![(self, 0usize)];
        while let Some((node, depth)) = stack.pop() {
            f(node, depth);
            if let TreeNode::Internal { left, right, .. } = node {
                stack.push((right, depth + 1));
                stack.push((left, depth + 1));
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Sample {
    row: u32,
    count: u32,
}

enum FeatureScan {
    Constant,
    NoAdmissible,
    Best { threshold: f64, gain: f64 },
}

struct NodeTotals {
    votes: [f64; 2],
    weight: f64,
    samples: usize,
}

fn totals(matrix: &FeatureMatrix, samples: &[Sample], weights: [f64; 2]) -> NodeTotals {
    let mut votes = [0.0; 2];
    let mut n = 0usize;
    for s in samples {
        let c = matrix.labels[s.row as usize].index();
        votes[c] += s.count as f64 * weights[c];
        n += s.count as usize;
    }
    NodeTotals {
        votes,
        weight: votes[0] + votes[1],
        samples: n,
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    if mid < b {
        mid
    } else {
        a
    }
}

/// Best threshold on one feature. Candidate thresholds are midpoints
/// between consecutive distinct sorted values; the lowest threshold wins
/// among equal gains.
#[allow(clippy::too_many_arguments)]
fn scan_feature(
    matrix: &FeatureMatrix,
    samples: &[Sample],
    feature: usize,
    criterion: Criterion,
    weights: [f64; 2],
    min_leaf: usize,
    parent: &NodeTotals,
    buf: &mut Vec<(f64, u8, u32)>,
) -> FeatureScan {
    let column = &matrix.columns[feature];
    buf.clear();
    buf.extend(samples.iter().map(|s| {
        (
            column[s.row as usize],
            matrix.labels[s.row as usize].index() as u8,
            s.count,
        )
    }));
    buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    if buf[0].0 == buf[buf.len() - 1].0 {
        return FeatureScan::Constant;
    }

    let parent_impurity = criterion.binary(parent.votes, parent.weight);
    let mut left = [0.0f64; 2];
    let mut left_n = 0usize;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..buf.len() - 1 {
        let (value, class, count) = buf[i];
        left[class as usize] += count as f64 * weights[class as usize];
        left_n += count as usize;
        let next = buf[i + 1].0;
        if value == next {
            continue;
        }
        if left_n < min_leaf {
            continue;
        }
        if parent.samples - left_n < min_leaf {
            break;
        }
        let right = [
            (parent.votes[0] - left[0]).max(0.0),
            (parent.votes[1] - left[1]).max(0.0),
        ];
        let wl = left[0] + left[1];
        let wr = right[0] + right[1];
        if wl <= 0.0 || wr <= 0.0 {
            continue;
        }
        let gain = parent_impurity
            - (wl / parent.weight) * criterion.binary(left, wl)
            - (wr / parent.weight) * criterion.binary(right, wr);
        if best.is_none_or(|(_, g)| gain > g + GAIN_TOLERANCE) {
            best = Some((midpoint(value, next), gain));
        }
    }
    match best {
        Some((threshold, gain)) => FeatureScan::Best { threshold, gain },
        None => FeatureScan::NoAdmissible,
    }
}

/// Pick the maximum-gain split; ties go to the lowest feature index.
fn choose(mut found: Vec<Split>) -> Option<Split> {
    found.sort_by_key(|s| s.feature);
    let mut best: Option<Split> = None;
    for s in found {
        if best.is_none_or(|b| s.impurity_decrease > b.impurity_decrease + GAIN_TOLERANCE) {
            best = Some(s);
        }
    }
    best
}

/// Exhaustive best split over `candidate_features` for the rows listed
/// (a row listed twice counts twice). Absent when no threshold leaves
/// `min_samples_leaf` rows on both sides or the best decrease is not
/// positive.
pub fn best_split(
    matrix: &FeatureMatrix,
    rows: &[usize],
    candidate_features: &[usize],
    criterion: Criterion,
    class_weights: [f64; 2],
    min_samples_leaf: usize,
) -> Option<Split> {
    if rows.len() < 2 {
        return None;
    }
    let mut counts = vec![0u32; matrix.n_rows()];
    for &r in rows {
        counts[r] += 1;
    }
    let samples = to_samples(&counts);
    let parent = totals(matrix, &samples, class_weights);
    let mut buf = Vec::new();
    let found = candidate_features
        .iter()
        .filter_map(|&f| {
            match scan_feature(
                matrix,
                &samples,
                f,
                criterion,
                class_weights,
                min_samples_leaf.max(1),
                &parent,
                &mut buf,
            ) {
                FeatureScan::Best { threshold, gain } => Some(Split {
                    feature: f,
                    threshold,
                    impurity_decrease: gain,
                }),
                _ => None,
            }
        })
        .collect();
    choose(found).filter(|s| s.impurity_decrease > GAIN_TOLERANCE)
}

fn to_samples(counts: &[u32]) -> Vec<Sample> {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(row, &count)| Sample { row: row as u32, count })
        .collect()
}

/// Class weights for `mode`, treating absent classes as weight 1 (they
/// contribute no samples either way).
fn weights_for(mode: ClassWeight, counts: [usize; 2]) -> [f64; 2] {
    if counts.contains(&0) {
        return [1.0, 1.0];
    }
    let w = class_weights(mode, &counts).expect("both classes present");
    [w[0], w[1]]
}

/// A fitted tree plus its per-feature impurity decrease, normalised by the
/// root weight.
pub(crate) struct GrownTree {
    pub root: TreeNode,
    pub importances: Vec<f64>,
}

struct Grower<'a> {
    matrix: &'a FeatureMatrix,
    config: &'a HyperparamSet,
    weights: [f64; 2],
    subset_size: usize,
    importances: Vec<f64>,
    buf: Vec<(f64, u8, u32)>,
}

impl Grower<'_> {
    fn grow(&mut self, samples: Vec<Sample>, depth: usize, node_seed: u64) -> TreeNode {
        let node = totals(self.matrix, &samples, self.weights);
        let leaf = |node: &NodeTotals| TreeNode::Leaf {
            samples: node.samples,
            class_votes: node.votes,
            prediction: majority(node.votes),
        };
        let cfg = self.config;
        let impurity = cfg.criterion.binary(node.votes, node.weight);
        if cfg.max_depth.is_some_and(|d| depth >= d)
            || node.samples < cfg.min_samples_split
            || node.samples < 2 * cfg.min_samples_leaf
            || impurity <= GAIN_TOLERANCE
        {
            return leaf(&node);
        }

        // Features are visited in a per-node random order until
        // `subset_size` non-constant ones have been examined.
        let mut order: Vec<usize> = (0..self.matrix.n_features()).collect();
        order.shuffle(&mut seed::rng(node_seed));
        let mut found = Vec::with_capacity(self.subset_size);
        let mut examined = 0;
        for f in order {
            if examined >= self.subset_size {
                break;
            }
            match scan_feature(
                self.matrix,
                &samples,
                f,
                cfg.criterion,
                self.weights,
                cfg.min_samples_leaf,
                &node,
                &mut self.buf,
            ) {
                FeatureScan::Constant => {}
                FeatureScan::NoAdmissible => examined += 1,
                FeatureScan::Best { threshold, gain } => {
                    examined += 1;
                    found.push(Split {
                        feature: f,
                        threshold,
                        impurity_decrease: gain,
                    });
                }
            }
        }
        // An impure node takes its best admissible split even at zero gain,
        // so that depth-unlimited trees can always reach purity.
        let Some(split) = choose(found) else {
            return leaf(&node);
        };
        self.importances[split.feature] += node.weight * split.impurity_decrease.max(0.0);

        let column = &self.matrix.columns[split.feature];
        let (left, right): (Vec<Sample>, Vec<Sample>) = samples
            .into_iter()
            .partition(|s| column[s.row as usize] <= split.threshold);
        TreeNode::Internal {
            feature: split.feature,
            threshold: split.threshold,
            samples: node.samples,
            class_votes: node.votes,
            left: Box::new(self.grow(left, depth + 1, seed::derive(node_seed, &[0]))),
            right: Box::new(self.grow(right, depth + 1, seed::derive(node_seed, &[1]))),
        }
    }
}

/// Grow one tree from `tree_seed`. Every random choice (bootstrap draw,
/// per-node feature order) is keyed off that seed, and node seeds depend
/// only on the node's path from the root, so a tree grown with a smaller
/// `max_depth` is exactly this tree cut at that depth.
pub(crate) fn grow_tree(
    matrix: &FeatureMatrix,
    config: &HyperparamSet,
    tree_seed: u64,
) -> Result<GrownTree, ForestError> {
    let n = matrix.n_rows();
    if n == 0 {
        return Err(ForestError::EmptyDataset);
    }
    let full_counts = matrix.class_counts();
    let both_classes = !full_counts.contains(&0);

    for attempt in 0..=MAX_BOOTSTRAP_REDRAWS {
        let attempt_seed = if attempt == 0 {
            tree_seed
        } else {
            seed::derive(tree_seed, &[seed::tag("redraw"), attempt])
        };
        let counts: Vec<u32> = if config.bootstrap {
            let mut rng = seed::rng(seed::derive(attempt_seed, &[seed::tag("bootstrap")]));
            let mut counts = vec![0u32; n];
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1;
            }
            counts
        } else {
            vec![1; n]
        };
        let samples = to_samples(&counts);

        let weights = match config.class_weight {
            ClassWeight::BalancedSubsample if config.bootstrap => {
                let mut drawn = [0usize; 2];
                for s in &samples {
                    drawn[matrix.labels[s.row as usize].index()] += s.count as usize;
                }
                if both_classes && drawn.contains(&0) {
                    continue;
                }
                weights_for(ClassWeight::BalancedSubsample, drawn)
            }
            mode => weights_for(mode, full_counts),
        };

        let mut grower = Grower {
            matrix,
            config,
            weights,
            subset_size: feature_subset_size(config.max_features, matrix.n_features()),
            importances: vec![0.0; matrix.n_features()],
            buf: Vec::with_capacity(n),
        };
        let root_seed = seed::derive(attempt_seed, &[seed::tag("root")]);
        let root = grower.grow(samples, 0, root_seed);
        let root_weight: f64 = root.class_votes().iter().sum();
        let importances = grower.importances.iter().map(|v| v / root_weight).collect();
        return Ok(GrownTree { root, importances });
    }
    Err(ForestError::ClassLostInBootstrap {
        redraws: MAX_BOOTSTRAP_REDRAWS,
    })
}

/// Grow a single tree on `data` under `config`, seeded by `rng_seed`.
pub fn build_tree(data: &Dataset, config: &HyperparamSet, rng_seed: u64) -> Result<TreeNode, ForestError> {
    if data.is_empty() {
        return Err(ForestError::EmptyDataset);
    }
    config.validate(data.n_features())?;
    grow_tree(&FeatureMatrix::from_dataset(data), config, rng_seed).map(|t| t.root)
}
