use proptest::prelude::*;

use scanforest::dataset::{
    preprocess, read_csv, split_indices, stratified_kfold, write_csv, CsvSchema, PreprocessPolicy, Scaling, SplitPlan,
};
use scanforest::forest::{entropy, gini, ClassWeight, Criterion, ForestModel, HyperparamSet, MaxFeatures};
use scanforest::metrics::{confusion, efficacy, paired_ttest};
use scanforest::{Dataset, FlowRecord, Label, Technique, Tool};

fn record(features: Vec<f64>, scan: bool, meta: usize) -> FlowRecord {
    if scan {
        let tool = Tool::ALL[meta % Tool::ALL.len()];
        FlowRecord::scan(features, tool, Technique::Syn)
    } else {
        FlowRecord::benign(features)
    }
}

prop_compose! {
    /// Both classes present, `width` features, values in a small grid so
    /// duplicates and ties occur.
    fn dataset(width: usize, max_rows: usize)(
        rows in prop::collection::vec(
            (prop::collection::vec(0u8..12, width), any::<bool>(), 0usize..5),
            4..max_rows,
        )
    ) -> Dataset {
        let mut rows: Vec<FlowRecord> = rows
            .into_iter()
            .map(|(f, s, m)| record(f.into_iter().map(|v| v as f64 * 0.5).collect(), s, m))
            .collect();
        rows[0].label = Label::Benign;
        rows[0].tool = None;
        rows[0].technique = None;
        let last = rows.len() - 1;
        rows[last] = record(rows[last].features.clone(), true, 0);
        let names = (0..width).map(|j| format!("f{j}")).collect();
        Dataset::new(names, rows).unwrap()
    }
}

fn forest_config(n: usize, depth: Option<usize>) -> HyperparamSet {
    HyperparamSet {
        n_estimators: n,
        max_depth: depth,
        max_features: MaxFeatures::All,
        ..HyperparamSet::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn csv_round_trip(
        rows in prop::collection::vec(
            (prop::collection::vec(-1e9f64..1e9, 3), any::<bool>(), 0usize..5),
            1..40,
        )
    ) {
        let rows: Vec<FlowRecord> = rows.into_iter().map(|(f, s, m)| record(f, s, m)).collect();
        let data = Dataset::new(vec!["a".into(), "b".into(), "c".into()], rows).unwrap();
        let mut buf = Vec::new();
        write_csv(&data, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &CsvSchema::default()).unwrap();
        prop_assert_eq!(back, data);
    }

    #[test]
    fn split_is_stratified_partition(
        benign in 2usize..400, scan in 2usize..120, seed in any::<u64>(), frac in 0.1f64..0.5,
    ) {
        let rows: Vec<FlowRecord> = (0..benign + scan)
            .map(|i| record(vec![i as f64], i >= benign, i))
            .collect();
        let data = Dataset::new(vec!["x".into()], rows).unwrap();
        let plan = SplitPlan { test_fraction: frac, seed, folds: 2 };
        let (train, test) = split_indices(&data, &plan).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..data.len()).collect::<Vec<_>>());
        for (label, n) in [(Label::Benign, benign), (Label::Scan, scan)] {
            let got = test.iter().filter(|&&i| data.rows()[i].label == label).count();
            prop_assert!((got as f64 - frac * n as f64).abs() <= 1.0 + 1e-9, "{label}: {got} of {n}");
            prop_assert!(got >= 1 && got < n);
        }
    }

    #[test]
    fn kfold_covers_once_and_balances(
        benign in 10usize..200, scan in 10usize..60, k in 2usize..10, seed in any::<u64>(),
    ) {
        let rows: Vec<FlowRecord> = (0..benign + scan)
            .map(|i| record(vec![i as f64], i >= benign, i))
            .collect();
        let data = Dataset::new(vec!["x".into()], rows).unwrap();
        let folds = stratified_kfold(&data, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = vec![0usize; data.len()];
        for f in &folds {
            for &i in &f.validation { seen[i] += 1; }
            prop_assert_eq!(f.train.len() + f.validation.len(), data.len());
            prop_assert!(f.train.iter().all(|i| !f.validation.contains(i)));
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        for label in [Label::Benign, Label::Scan] {
            let sizes: Vec<usize> = folds
                .iter()
                .map(|f| f.validation.iter().filter(|&&i| data.rows()[i].label == label).count())
                .collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn preprocess_is_idempotent(data in dataset(3, 60), scale in any::<bool>()) {
        let policy = PreprocessPolicy {
            scaling: if scale { Scaling::MinMax } else { Scaling::None },
            ..PreprocessPolicy::default()
        };
        if let Ok((once, _)) = preprocess(&data, &policy) {
            let (twice, summary) = preprocess(&once, &policy).unwrap();
            prop_assert_eq!(&twice, &once);
            prop_assert_eq!(summary.duplicates_dropped, 0);
        }
    }

    #[test]
    fn impurity_bounds(a in 0.0f64..1e6, b in 0.0f64..1e6) {
        prop_assume!(a + b > 0.0);
        let g = gini(&[a, b]).unwrap();
        let h = entropy(&[a, b]).unwrap();
        prop_assert!((0.0..=0.5 + 1e-12).contains(&g));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&h));
        prop_assert!((gini(&[b, a]).unwrap() - g).abs() < 1e-12);
    }

    #[test]
    fn predict_is_majority_of_trees(data in dataset(3, 80), n in 1usize..12, seed in any::<u64>()) {
        let model = ForestModel::fit(&data, &forest_config(n, Some(4)), seed).unwrap();
        for row in data.rows() {
            let votes = model.tree_predictions(&row.features).unwrap();
            let scan = votes.iter().filter(|&&l| l == Label::Scan).count();
            let expected = if 2 * scan > votes.len() { Label::Scan } else { Label::Benign };
            prop_assert_eq!(model.predict(&row.features).unwrap(), expected);
        }
    }

    #[test]
    fn importances_are_a_distribution(
        data in dataset(4, 80),
        seed in any::<u64>(),
        weighted in any::<bool>(),
        entropy_crit in any::<bool>(),
    ) {
        let rows = data
            .rows()
            .iter()
            .map(|r| FlowRecord { features: vec![r.features[0], 7.0, r.features[2], r.features[3]], ..r.clone() })
            .collect();
        let data = Dataset::new(data.feature_names().to_vec(), rows).unwrap();
        let config = HyperparamSet {
            class_weight: if weighted { ClassWeight::Balanced } else { ClassWeight::None },
            criterion: if entropy_crit { Criterion::Entropy } else { Criterion::Gini },
            ..forest_config(6, None)
        };
        let model = ForestModel::fit(&data, &config, seed).unwrap();
        let imp = model.importances();
        let splits: usize = model.trees().iter().map(|t| t.internal_count()).sum();
        prop_assert!(imp.iter().all(|&v| v >= 0.0));
        prop_assert_eq!(imp[1], 0.0);
        if splits > 0 {
            prop_assert!((imp.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn ttest_antisymmetric_and_shift_invariant(
        pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..12),
        shift in -5.0f64..5.0,
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let Ok(ab) = paired_ttest(&a, &b) else { return Ok(()); };
        let ba = paired_ttest(&b, &a).unwrap();
        prop_assert!((ab.t + ba.t).abs() <= 1e-9 * ab.t.abs().max(1.0));
        prop_assert!((ab.p - ba.p).abs() <= 1e-12);
        prop_assert_eq!(ab.df, a.len() - 1);
        let a2: Vec<f64> = a.iter().map(|v| v + shift).collect();
        let b2: Vec<f64> = b.iter().map(|v| v + shift).collect();
        if let Ok(s) = paired_ttest(&a2, &b2) {
            prop_assert!((s.t - ab.t).abs() <= 1e-6 * ab.t.abs().max(1.0));
        }
    }

    #[test]
    fn accuracy_ignores_row_order(
        labels in prop::collection::vec((any::<bool>(), any::<bool>()), 1..100),
        rot in 0usize..100,
    ) {
        let lab = |b: bool| if b { Label::Scan } else { Label::Benign };
        let actual: Vec<Label> = labels.iter().map(|p| lab(p.0)).collect();
        let predicted: Vec<Label> = labels.iter().map(|p| lab(p.1)).collect();
        let mut a2 = actual.clone();
        let mut p2 = predicted.clone();
        let r = rot % actual.len();
        a2.rotate_left(r);
        p2.rotate_left(r);
        a2.reverse();
        p2.reverse();
        let e1 = efficacy(&confusion(&actual, &predicted).unwrap()).unwrap();
        let e2 = efficacy(&confusion(&a2, &p2).unwrap()).unwrap();
        prop_assert_eq!(e1, e2);
    }
}
