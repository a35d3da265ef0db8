use scanforest::dataset::{
    load_csv, preprocess, split_indices, write_csv_path, CsvSchema, PreprocessPolicy, SplitPlan,
};
use scanforest::scangen::{generate_corpus, GeneratorConfig};
use scanforest::{Dataset, FlowRecord, Label};

fn corpus(total: usize, seed: u64) -> Dataset {
    generate_corpus(&GeneratorConfig {
        total_flows: total,
        seed,
        ..GeneratorConfig::default()
    })
    .unwrap()
}

#[test]
fn twenty_thousand_rows_survive_a_csv_round_trip() {
    let data = corpus(20_000, 11);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.csv");
    write_csv_path(&data, &path).unwrap();
    let back = load_csv(&path, &CsvSchema::default()).unwrap();
    assert_eq!(back.len(), 20_000);
    assert_eq!(back, data);
}

#[test]
fn injected_duplicates_and_nan_rows_give_19850() {
    // 19,850 distinct rows, then 100 copies and 50 rows carrying a NaN.
    let base = corpus(20_000, 13);
    let keep: Vec<usize> = (0..19_850).collect();
    let clean = base.subset(&keep);
    let mut rows: Vec<FlowRecord> = clean.rows().to_vec();
    for i in 0..100 {
        rows.push(clean.rows()[i * 191].clone());
    }
    for i in 0..50 {
        let mut r = base.rows()[19_850 + i].clone();
        r.features[0] = f64::NAN;
        rows.push(r);
    }
    let dirty = Dataset::new(clean.feature_names().to_vec(), rows).unwrap();
    assert_eq!(dirty.len(), 20_000);
    let (out, s) = preprocess(&dirty, &PreprocessPolicy::default()).unwrap();
    assert_eq!((s.non_finite_dropped, s.duplicates_dropped), (50, 100));
    assert_eq!(out.len(), 19_850);
}

#[test]
fn stratified_split_over_many_seeds() {
    let rows = (0..1000)
        .map(|i| {
            if i < 800 {
                FlowRecord::benign(vec![i as f64])
            } else {
                FlowRecord::scan(vec![i as f64], scanforest::Tool::Nmap, scanforest::Technique::Syn)
            }
        })
        .collect();
    let data = Dataset::new(vec!["x".into()], rows).unwrap();
    for seed in 0..100 {
        let plan = SplitPlan {
            seed,
            ..SplitPlan::default()
        };
        let (_, test) = split_indices(&data, &plan).unwrap();
        let scan = test.iter().filter(|&&i| data.rows()[i].label == Label::Scan).count();
        let benign = test.len() - scan;
        assert!(
            benign.abs_diff(240) <= 1 && scan.abs_diff(60) <= 1,
            "seed {seed}: {benign}/{scan}"
        );
    }
}
