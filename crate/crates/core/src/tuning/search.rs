use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{enumerate_grid, SearchMethod, SearchSpace, TuningError};
use crate::dataset::{stratified_kfold, Dataset, Fold};
use crate::forest::{ForestModel, HyperparamSet};
use crate::seed;

/// Random-search iterations when none are given.
pub const DEFAULT_RANDOM_ITER: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    /// Position in [`enumerate_grid`] order.
    pub grid_index: usize,
    pub config: HyperparamSet,
    /// Validation accuracy per fold.
    pub fold_scores: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of `fold_scores`.
    pub std: f64,
    /// Fingerprint of the folds this candidate was scored on.
    pub fold_fingerprint: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub method: SearchMethod,
    pub best_config: HyperparamSet,
    pub best_grid_index: usize,
    pub cv_mean_score: f64,
    pub cv_std: f64,
    pub folds: usize,
    pub fold_fingerprint: String,
    /// Candidates in evaluation order.
    pub table: Vec<CandidateScore>,
    pub elapsed_seconds: f64,
}

/// SHA-256 over the validation indices of each fold, in fold order.
pub fn fold_fingerprint(folds: &[Fold]) -> String {
    let mut h = Sha256::new();
    for (i, f) in folds.iter().enumerate() {
        h.update((i as u64).to_le_bytes());
        for &v in &f.validation {
            h.update((v as u64).to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Score every candidate on the same folds.
///
/// Candidates that differ only in `n_estimators` and `max_depth` share one
/// fitted forest per fold: tree `i` depends only on (fold seed, i) and node
/// randomness only on the node's path, so the first `n` trees cut at depth
/// `d` are exactly the forest a separate fit with `(n, d)` would produce.
fn evaluate(
    train: &Dataset,
    candidates: &[(usize, HyperparamSet)],
    k: usize,
    search_seed: u64,
) -> Result<(Vec<CandidateScore>, String), TuningError> {
    let folds = stratified_kfold(train, k, seed::derive(search_seed, &[seed::tag("folds")])).map_err(|source| {
        TuningError::Dataset {
            stage: "cross-validation folds",
            source,
        }
    })?;
    let fingerprint = fold_fingerprint(&folds);

    let mut groups: BTreeMap<usize, (HyperparamSet, Vec<usize>)> = BTreeMap::new();
    let mut shape_ids: Vec<HyperparamSet> = Vec::new();
    for (pos, (_, cfg)) in candidates.iter().enumerate() {
        let shape = HyperparamSet {
            n_estimators: 1,
            max_depth: None,
            ..*cfg
        };
        let id = match shape_ids.iter().position(|s| *s == shape) {
            Some(id) => id,
            None => {
                shape_ids.push(shape);
                shape_ids.len() - 1
            }
        };
        let entry = groups.entry(id).or_insert((shape, Vec::new()));
        entry.0.n_estimators = entry.0.n_estimators.max(cfg.n_estimators);
        entry.0.max_depth = match (entry.1.is_empty(), entry.0.max_depth, cfg.max_depth) {
            (true, _, d) => d,
            (false, Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        entry.1.push(pos);
    }

    let jobs: Vec<(usize, usize)> = groups
        .keys()
        .flat_map(|&g| (0..folds.len()).map(move |f| (g, f)))
        .collect();
    let scored: Vec<Vec<(usize, usize, f64)>> = jobs
        .par_iter()
        .map(|&(g, f)| {
            let (fit_cfg, members) = &groups[&g];
            let fold = &folds[f];
            let fit_seed = seed::derive(search_seed, &[seed::tag("fit"), f as u64]);
            let model = ForestModel::fit(&train.subset(&fold.train), fit_cfg, fit_seed).map_err(|source| {
                TuningError::Forest {
                    stage: "cross-validation fit",
                    source,
                }
            })?;
            members
                .iter()
                .map(|&pos| {
                    let cfg = &candidates[pos].1;
                    let mut correct = 0usize;
                    for &i in &fold.validation {
                        let row = &train.rows()[i];
                        let predicted = model
                            .predict_truncated(&row.features, cfg.n_estimators, cfg.max_depth)
                            .map_err(|source| TuningError::Forest {
                                stage: "cross-validation predict",
                                source,
                            })?;
                        correct += (predicted == row.label) as usize;
                    }
                    Ok((pos, f, correct as f64 / fold.validation.len() as f64))
                })
                .collect()
        })
        .collect::<Result<_, TuningError>>()?;

    let mut fold_scores = vec![vec![0.0; folds.len()]; candidates.len()];
    for (pos, f, score) in scored.into_iter().flatten() {
        fold_scores[pos][f] = score;
    }
    let table = candidates
        .iter()
        .zip(fold_scores)
        .map(|(&(grid_index, config), scores)| {
            let n = scores.len() as f64;
            let mean = scores.iter().sum::<f64>() / n;
            let std = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
            CandidateScore {
                grid_index,
                config,
                fold_scores: scores,
                mean,
                std,
                fold_fingerprint: fingerprint.clone(),
            }
        })
        .collect();
    Ok((table, fingerprint))
}

/// Highest mean; ties go to the lowest grid index.
fn pick_best(table: &[CandidateScore]) -> &CandidateScore {
    table
        .iter()
        .reduce(|best, c| {
            if c.mean > best.mean || (c.mean == best.mean && c.grid_index < best.grid_index) {
                c
            } else {
                best
            }
        })
        .expect("non-empty table")
}

fn run_search(
    train: &Dataset,
    candidates: Vec<(usize, HyperparamSet)>,
    method: SearchMethod,
    k: usize,
    seed: u64,
) -> Result<SearchResult, TuningError> {
    if candidates.is_empty() {
        return Err(TuningError::NoCandidates);
    }
    let start = Instant::now();
    let (table, fold_fingerprint) = evaluate(train, &candidates, k, seed)?;
    let best = pick_best(&table).clone();
    Ok(SearchResult {
        method,
        best_config: best.config,
        best_grid_index: best.grid_index,
        cv_mean_score: best.mean,
        cv_std: best.std,
        folds: k,
        fold_fingerprint,
        table,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Exhaustive search, scored by mean validation accuracy.
pub fn grid_search(train: &Dataset, space: &SearchSpace, k: usize, seed: u64) -> Result<SearchResult, TuningError> {
    space.validate()?;
    let candidates = enumerate_grid(space).into_iter().enumerate().collect();
    run_search(train, candidates, SearchMethod::Grid, k, seed)
}

/// `min(n_iter, grid size)` distinct grid candidates drawn uniformly
/// without replacement. Fold assignment and per-fold fits use the same
/// streams as [`grid_search`], so a candidate scores identically in both.
pub fn random_search(
    train: &Dataset,
    space: &SearchSpace,
    n_iter: usize,
    k: usize,
    seed: u64,
) -> Result<SearchResult, TuningError> {
    space.validate()?;
    if n_iter == 0 {
        return Err(TuningError::NoCandidates);
    }
    let grid = enumerate_grid(space);
    let take = n_iter.min(grid.len());
    let mut rng = seed::rng(seed::derive(seed, &[seed::tag("random-search")]));
    let candidates = sample(&mut rng, grid.len(), take)
        .into_iter()
        .map(|i| (i, grid[i]))
        .collect();
    run_search(train, candidates, SearchMethod::Random, k, seed)
}
