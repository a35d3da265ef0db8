//! Command-line orchestration: generate a corpus, run trials, render
//! reports and compare against published baselines.
//!
//! Every command writes a [`RunManifest`] next to its primary output.
//! Exit codes: 0 success, 2 usage or configuration, 3 I/O, 4 computation,
//! 5 statistical degeneracy.

mod error;
mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use scanforest::dataset::{
    preprocess, read_csv, read_headers, write_csv, CsvSchema, DatasetError, PreprocessPolicy, SplitPlan,
};
use scanforest::metrics::{compare_to_baselines, BaselineTable, MetricsError};
use scanforest::report::{render, render_comparison, Format, ReportFile, TrialReport};
use scanforest::scangen::{generate_corpus, GeneratorConfig, ScanGenError};
use scanforest::tuning::{run_trial_with, SearchMethod, SearchSpace, SetId, TuningError, DEFAULT_RANDOM_ITER};

pub use error::CliError;
pub use manifest::{manifest_path, sha256_hex, InputDigest, RunManifest};
use manifest::{read_input, write_atomic};

/// Environment variable consulted when `--seed` is absent.
pub const SEED_ENV: &str = "SCANFOREST_SEED";

#[derive(Debug, Parser)]
#[command(name = "scanforest", version, about = "Random forest port-scan detection trials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled flow corpus as CSV.
    Generate {
        /// Generator config (JSON). Defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split, tune, refit and evaluate one hyperparameter set.
    Trial {
        /// Corpus CSV.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = parse_set)]
        set: SetId,
        /// Search space JSON, required with `--set custom`.
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0.30)]
        test_fraction: f64,
        /// Random-search iterations.
        #[arg(long, default_value_t = DEFAULT_RANDOM_ITER)]
        n_iter: usize,
        /// JSON report path. A markdown table is written beside it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render one or more reports as tables.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
        format: FormatArg,
        #[arg(long, default_value = "report.md")]
        out: PathBuf,
    },
    /// Paired t-test of trial accuracies against published baselines.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Comma-separated `trial:study` pairs. Trials are numbered from 0
        /// across all given reports in file and row order.
        #[arg(long)]
        pairing: String,
        /// `builtin` or a CSV path.
        #[arg(long, default_value = "builtin")]
        baselines: String,
        /// Comparison JSON. A markdown table is written beside it.
        #[arg(long, default_value = "comparison.json")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Grid,
    Random,
    Both,
}

impl MethodArg {
    /// Random first, matching the table row order.
    fn methods(self) -> Vec<SearchMethod> {
        match self {
            MethodArg::Grid => vec![SearchMethod::Grid],
            MethodArg::Random => vec![SearchMethod::Random],
            MethodArg::Both => vec![SearchMethod::Random, SearchMethod::Grid],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Markdown,
    Text,
}

fn parse_set(s: &str) -> Result<SetId, String> {
    s.parse()
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let command_line = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli.command, command_line) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, command_line: Vec<String>) -> Result<(), CliError> {
    match command {
        Command::Generate { config, out } => cmd_generate(config.as_deref(), &out, command_line),
        Command::Trial {
            data,
            set,
            space,
            method,
            seed,
            folds,
            test_fraction,
            n_iter,
            out,
        } => {
            let opts = TrialOptions {
                set,
                space,
                method,
                seed,
                folds,
                test_fraction,
                n_iter,
            };
            cmd_trial(&data, &opts, &out, command_line)
        }
        Command::Report { reports, format, out } => cmd_report(&reports, format, &out, command_line),
        Command::Compare {
            reports,
            pairing,
            baselines,
            out,
        } => cmd_compare(&reports, &pairing, &baselines, &out, command_line),
    }
}

fn log(stage: &str, msg: impl std::fmt::Display) {
    eprintln!("[{stage}] {msg}");
}

fn scangen_err(e: ScanGenError) -> CliError {
    match e {
        ScanGenError::Json(e) => CliError::Usage(format!("invalid generator config: {e}")),
        other => CliError::Usage(other.to_string()),
    }
}

pub fn cmd_generate(config: Option<&Path>, out: &Path, command_line: Vec<String>) -> Result<(), CliError> {
    let mut inputs = Vec::new();
    let cfg = match config {
        Some(path) => {
            let bytes = read_input(path, &mut inputs)?;
            let text = std::str::from_utf8(&bytes)
                .map_err(|e| CliError::Usage(format!("{}: config is not UTF-8: {e}", path.display())))?;
            GeneratorConfig::from_json(text).map_err(scangen_err)?
        }
        None => GeneratorConfig::default(),
    };
    log("generate", format!("{} flows, seed {}", cfg.total_flows, cfg.seed));
    let data = generate_corpus(&cfg).map_err(scangen_err)?;
    let mut buf = Vec::new();
    write_csv(&data, &mut buf).map_err(|e| CliError::Compute(format!("csv encoding: {e}")))?;
    write_atomic(out, &buf)?;
    let config_json = serde_json::to_value(&cfg).map_err(|e| CliError::Compute(e.to_string()))?;
    let manifest = RunManifest::new(command_line, &config_json, inputs, vec![out.to_path_buf()]);
    manifest.write_beside(out)?;
    log("generate", format!("wrote {}", out.display()));
    Ok(())
}

#[derive(Clone, Debug)]
pub struct TrialOptions {
    pub set: SetId,
    pub space: Option<PathBuf>,
    pub method: MethodArg,
    pub seed: u64,
    pub folds: usize,
    pub test_fraction: f64,
    pub n_iter: usize,
}

fn load_dataset_err(path: &Path, e: DatasetError) -> CliError {
    CliError::io(path, format!("cannot load dataset: {e}"))
}

fn tuning_err(e: TuningError) -> CliError {
    match e {
        TuningError::NoCandidates | TuningError::InvalidSpace(_) => CliError::Usage(e.to_string()),
        other => CliError::Compute(format!("trial failed at {other}")),
    }
}

pub fn cmd_trial(data_path: &Path, opts: &TrialOptions, out: &Path, command_line: Vec<String>) -> Result<(), CliError> {
    let mut inputs = Vec::new();
    let space = match (opts.set, &opts.space) {
        (SetId::Custom, Some(path)) => {
            let bytes = read_input(path, &mut inputs)?;
            let mut space: SearchSpace = serde_json::from_slice(&bytes)
                .map_err(|e| CliError::Usage(format!("{}: invalid search space: {e}", path.display())))?;
            space.set_id = SetId::Custom;
            space
        }
        (SetId::Custom, None) => return Err(CliError::Usage("--set custom requires --space <json>".into())),
        (_, Some(_)) => return Err(CliError::Usage("--space is only accepted with --set custom".into())),
        (set, None) => SearchSpace::builtin(set).expect("built-in set"),
    };
    space.validate().map_err(tuning_err)?;
    let plan = SplitPlan {
        test_fraction: opts.test_fraction,
        seed: opts.seed,
        folds: opts.folds,
    };
    plan.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if opts.n_iter == 0 {
        return Err(CliError::Usage("--n-iter must be positive".into()));
    }

    let bytes = read_input(data_path, &mut inputs)?;
    let headers = read_headers(bytes.as_slice()).map_err(|e| load_dataset_err(data_path, e))?;
    let schema = CsvSchema::flows_for_header(&headers);
    let raw = read_csv(bytes.as_slice(), &schema).map_err(|e| load_dataset_err(data_path, e))?;
    let policy = PreprocessPolicy::default();
    let (data, summary) =
        preprocess(&raw, &policy).map_err(|e| CliError::Compute(format!("trial failed at preprocess: {e}")))?;
    log(
        "preprocess",
        format!(
            "{} rows in, {} out ({} non-finite, {} duplicates dropped)",
            summary.input_rows, summary.output_rows, summary.non_finite_dropped, summary.duplicates_dropped
        ),
    );

    let mut trials: Vec<TrialReport> = Vec::new();
    for method in opts.method.methods() {
        log("trial", format!("set {} with {method} search", space.set_id));
        let report = run_trial_with(&data, &space, method, &plan, opts.seed, opts.n_iter).map_err(tuning_err)?;
        log(
            "trial",
            format!(
                "set {} {method}: accuracy {:.4}, macro F1 {:.4} ({:.1}s)",
                space.set_id, report.test.accuracy, report.test.macro_f1, report.elapsed_seconds
            ),
        );
        trials.push(report);
    }

    let file = ReportFile::new(trials);
    let json = file.to_json().map_err(|e| CliError::Compute(e.to_string()))?;
    let table_path = out.with_extension("md");
    let table = render(&file.trials, Format::Markdown);
    write_atomic(out, json.as_bytes())?;
    write_atomic(&table_path, table.as_bytes())?;
    print!("{table}");

    let config = json!({
        "set": space,
        "methods": opts.method.methods(),
        "seed": opts.seed,
        "plan": plan,
        "n_iter": opts.n_iter,
        "preprocess": format!("{policy:?}"),
    });
    RunManifest::new(command_line, &config, inputs, vec![out.to_path_buf(), table_path]).write_beside(out)?;
    log("trial", format!("wrote {}", out.display()));
    Ok(())
}

fn read_reports(
    paths: &[PathBuf],
    inputs: &mut Vec<manifest::InputDigest>,
) -> Result<Vec<(PathBuf, ReportFile)>, CliError> {
    paths
        .iter()
        .map(|p| {
            let bytes = read_input(p, inputs)?;
            let text = std::str::from_utf8(&bytes).map_err(|e| CliError::io(p, e))?;
            let file = ReportFile::from_json(text).map_err(|e| CliError::io(p, e))?;
            Ok((p.clone(), file))
        })
        .collect()
}

pub fn cmd_report(paths: &[PathBuf], format: FormatArg, out: &Path, command_line: Vec<String>) -> Result<(), CliError> {
    let mut inputs = Vec::new();
    let files = read_reports(paths, &mut inputs)?;
    let trials: Vec<TrialReport> = files.into_iter().flat_map(|(_, f)| f.trials).collect();
    let fmt = match format {
        FormatArg::Markdown => Format::Markdown,
        FormatArg::Text => Format::Text,
    };
    let rendered = render(&trials, fmt);
    write_atomic(out, rendered.as_bytes())?;
    print!("{rendered}");
    let config = json!({ "format": format!("{format:?}") });
    RunManifest::new(command_line, &config, inputs, vec![out.to_path_buf()]).write_beside(out)?;
    Ok(())
}

/// `0:Algaolahi,1:Baah` → `[(0, "Algaolahi"), (1, "Baah")]`.
pub fn parse_pairing(spec: &str) -> Result<Vec<(usize, String)>, CliError> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (idx, study) = item
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("pairing entry `{item}` is not `trial:study`")))?;
            let idx = idx
                .trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("pairing entry `{item}`: trial must be an index")))?;
            Ok((idx, study.trim().to_string()))
        })
        .collect()
}

fn metrics_err(e: MetricsError) -> CliError {
    match e {
        MetricsError::ZeroVariance => CliError::Degenerate(format!(
            "{e}: every trial differs from its paired baseline by the same amount, so no t statistic exists"
        )),
        MetricsError::InvalidPairing(_) | MetricsError::TooFewPairs(_) | MetricsError::LengthMismatch { .. } => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Compute(other.to_string()),
    }
}

pub fn cmd_compare(
    paths: &[PathBuf],
    pairing: &str,
    baselines: &str,
    out: &Path,
    command_line: Vec<String>,
) -> Result<(), CliError> {
    let pairs = parse_pairing(pairing)?;
    let mut inputs = Vec::new();
    let table = if baselines.eq_ignore_ascii_case("builtin") {
        BaselineTable::builtin()
    } else {
        let path = Path::new(baselines);
        let bytes = read_input(path, &mut inputs)?;
        BaselineTable::from_csv(bytes.as_slice())
            .map_err(|e| CliError::Usage(format!("{}: invalid baseline table: {e}", path.display())))?
    };
    let files = read_reports(paths, &mut inputs)?;
    let trials: Vec<(String, f64)> = files
        .iter()
        .flat_map(|(path, f)| {
            let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            f.trials
                .iter()
                .map(move |t| (format!("{stem}:{}", t.label()), t.test.accuracy))
        })
        .collect();
    if trials.len() < 2 {
        return Err(CliError::Usage(format!(
            "comparison needs at least 2 trials, the given reports hold {}",
            trials.len()
        )));
    }
    let comparison = compare_to_baselines(&trials, &table, &pairs).map_err(metrics_err)?;
    let mut json = serde_json::to_string_pretty(&comparison).map_err(|e| CliError::Compute(e.to_string()))?;
    json.push('\n');
    let rendered = render_comparison(&comparison, Format::Markdown);
    let table_path = out.with_extension("md");
    write_atomic(out, json.as_bytes())?;
    write_atomic(&table_path, rendered.as_bytes())?;
    print!("{rendered}");
    let config = json!({ "pairing": pairs, "baselines": baselines, "baseline_version": table.version });
    RunManifest::new(command_line, &config, inputs, vec![out.to_path_buf(), table_path]).write_beside(out)?;
    Ok(())
}
