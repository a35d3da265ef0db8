use std::time::Instant;

use super::{grid_search, random_search, SearchMethod, SearchSpace, SetId, TuningError, DEFAULT_RANDOM_ITER};
use crate::dataset::{split_indices, Dataset, SplitPlan};
use crate::forest::ForestModel;
use crate::metrics::{confusion, efficacy, group_breakdown};
use crate::report::{FeatureImportance, SearchSummary, SplitSummary, TrialReport};
use crate::seed;

/// RNG root for one trial. Nothing else carries over between trials.
pub fn trial_seed(seed: u64, set_id: SetId, method: SearchMethod) -> u64 {
    seed::derive(
        seed,
        &[
            seed::tag("trial"),
            seed::tag(set_id.as_str()),
            seed::tag(method.as_str()),
        ],
    )
}

/// [`run_trial_with`] using [`DEFAULT_RANDOM_ITER`].
pub fn run_trial(
    data: &Dataset,
    space: &SearchSpace,
    method: SearchMethod,
    plan: &SplitPlan,
    seed: u64,
) -> Result<TrialReport, TuningError> {
    run_trial_with(data, space, method, plan, seed, DEFAULT_RANDOM_ITER)
}

/// Split, search on the training partition, refit the winner on all of it
/// and score the held-out partition.
///
/// The split depends on `plan.seed` alone so every set and method sees the
/// same partition; search and refit draw from [`trial_seed`].
pub fn run_trial_with(
    data: &Dataset,
    space: &SearchSpace,
    method: SearchMethod,
    plan: &SplitPlan,
    seed: u64,
    n_iter: usize,
) -> Result<TrialReport, TuningError> {
    let start = Instant::now();
    let dataset_err = |stage| move |source| TuningError::Dataset { stage, source };
    let forest_err = |stage| move |source| TuningError::Forest { stage, source };
    let metrics_err = |stage| move |source| TuningError::Metrics { stage, source };

    let (train_idx, test_idx) = split_indices(data, plan).map_err(dataset_err("train/test split"))?;
    let train = data.subset(&train_idx);
    let test = data.subset(&test_idx);

    let tseed = trial_seed(seed, space.set_id, method);
    let search = match method {
        SearchMethod::Grid => grid_search(&train, space, plan.folds, tseed)?,
        SearchMethod::Random => random_search(&train, space, n_iter, plan.folds, tseed)?,
    };

    let model = ForestModel::fit(&train, &search.best_config, seed::derive(tseed, &[seed::tag("refit")]))
        .map_err(forest_err("refit on training partition"))?;
    let predictions = model.predict_dataset(&test).map_err(forest_err("test prediction"))?;
    let cm = confusion(&test.labels(), &predictions).map_err(metrics_err("test evaluation"))?;
    let eff = efficacy(&cm).map_err(metrics_err("test evaluation"))?;
    let groups = if test.has_metadata() {
        let map = group_breakdown(test.rows(), &predictions, seed::derive(tseed, &[seed::tag("groups")]))
            .map_err(metrics_err("group breakdown"))?;
        Some(map.into_values().collect())
    } else {
        None
    };

    let importances = model
        .feature_names()
        .iter()
        .zip(model.importances())
        .map(|(f, &v)| FeatureImportance {
            feature: f.clone(),
            importance: v,
        })
        .collect();

    Ok(TrialReport {
        set_id: space.set_id,
        method,
        seed,
        trial_seed: tseed,
        split: SplitSummary {
            train: train.class_counts(),
            test: test.class_counts(),
            test_fraction: plan.test_fraction,
            split_seed: plan.seed,
        },
        search: SearchSummary {
            best_config: search.best_config,
            best_grid_index: search.best_grid_index,
            cv_mean_score: search.cv_mean_score,
            cv_std: search.cv_std,
            folds: search.folds,
            fold_fingerprint: search.fold_fingerprint,
            candidates: search.table,
            elapsed_seconds: search.elapsed_seconds,
        },
        test: eff,
        confusion: cm,
        groups,
        importances,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}
