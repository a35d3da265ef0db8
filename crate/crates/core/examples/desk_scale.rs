//! Runs sets A-D with both search methods on a generated corpus and prints
//! the efficacy table.
//!
//! `cargo run --release --example desk_scale -- [seed] [overlap] [total]`
//!
//! Environment: `SETS=AD` restricts the sets, `UNI=0.6` raises the overlap
//! of the unicornscan connect and syn profiles, `RENDER=1` prints the full
//! tables including per-group breakdowns.

use std::time::Instant;

use scanforest::dataset::{preprocess, PreprocessPolicy, SplitPlan};
use scanforest::report::{render, Format};
use scanforest::scangen::{generate_corpus, GeneratorConfig, DEFAULT_OVERLAP};
use scanforest::tuning::{run_trial, SearchMethod, SearchSpace, SetId};
use scanforest::{Technique, Tool};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed: u64 = args.first().map_or(0, |s| s.parse().expect("seed"));
    let overlap: f64 = args.get(1).map_or(DEFAULT_OVERLAP, |s| s.parse().expect("overlap"));
    let total: usize = args.get(2).map_or(20_000, |s| s.parse().expect("total"));
    let config = GeneratorConfig {
        total_flows: total,
        overlap,
        seed,
        ..GeneratorConfig::default()
    };
    let config = match std::env::var("UNI").ok().and_then(|v| v.parse::<f64>().ok()) {
        Some(o) => config
            .with_profile_overlap(Tool::Unicornscan, Technique::Connect, o)
            .with_profile_overlap(Tool::Unicornscan, Technique::Syn, o),
        None => config,
    };
    let raw = generate_corpus(&config).expect("generate");
    let (data, summary) = preprocess(&raw, &PreprocessPolicy::default()).expect("preprocess");
    eprintln!("{summary:?}");
    let plan = SplitPlan {
        seed,
        ..SplitPlan::default()
    };
    let mut trials = Vec::new();
    let only = std::env::var("SETS").unwrap_or_else(|_| "ABCD".into());
    for set in SetId::BUILTIN.into_iter().filter(|s| only.contains(s.as_str())) {
        let space = SearchSpace::builtin(set).expect("builtin");
        for method in [SearchMethod::Random, SearchMethod::Grid] {
            let t = Instant::now();
            let r = run_trial(&data, &space, method, &plan, seed).expect("trial");
            eprintln!(
                "{set}/{method}: acc {:.4} recall {:.4} f1 {:.4} ({:.1}s)",
                r.test.accuracy,
                r.test.macro_recall,
                r.test.macro_f1,
                t.elapsed().as_secs_f64()
            );
            trials.push(r);
        }
    }
    if std::env::var("RENDER").is_ok() {
        print!("{}", render(&trials, Format::Text));
    }
}
