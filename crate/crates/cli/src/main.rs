//! `foldlab` command-line front end.

mod manifest;
mod presets;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use foldlab::data::{load_dataset, standardize, LoadOptions};
use foldlab::harness::{
    analyze_dataset, load_records, run_experiment, tune_experiment, DatasetMeta, ExperimentConfig, RunOptions,
    TunedFile,
};
use foldlab::learners::MetricKind;
use foldlab::seed::derive_seed;
use foldlab::stats::{analyze_records, write_analysis, AnalysisOptions, BlockBy, Measure, PValueMethod, StatsError};
use foldlab::synth::{generate, SynthSpec};
use serde_json::json;

use manifest::{CellStatus, RunManifest};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "foldlab", version, about = "Cluster-based cross-validation fold strategies and their bias/variance/cost")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Label column name, overriding the config.
    #[arg(long, global = true)]
    label_column: Option<String>,
    /// Force a metric instead of choosing by class balance.
    #[arg(long, global = true, value_parser = parse_metric)]
    metric_override: Option<MetricKind>,
}

fn parse_metric(s: &str) -> Result<MetricKind, String> {
    s.parse()
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Summarize datasets: size, balance and estimated clustering parameters.
    Inspect {
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        /// Skip z-scoring before estimating clustering parameters.
        #[arg(long)]
        raw: bool,
    },
    /// Grid-search learner hyperparameters per dataset.
    Tune {
        #[arg(long)]
        config: PathBuf,
        /// Output TOML with the tuned hyperparameters.
        #[arg(long, default_value = "tuned.toml")]
        out: PathBuf,
    },
    /// Run an experiment grid into a results directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Tuned hyperparameters from `tune`.
        #[arg(long)]
        tuned: Option<PathBuf>,
        /// Keep finished cells already present in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Friedman tests, win counts, distributions and timing tables.
    Analyze {
        results: PathBuf,
        /// Directory for the CSV tables (default: <results>/analysis).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = BlockArg::DatasetLearner)]
        block_by: BlockArg,
        /// Test signed bias instead of |bias|.
        #[arg(long)]
        signed_bias: bool,
        #[arg(long, value_enum, default_value_t = PValueArg::Auto)]
        p_value: PValueArg,
    },
    /// Print or write a bundled configuration (set1, set2, set3, smoke).
    Preset {
        name: String,
        /// Write `<name>.toml` (and smoke data) into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate seeded synthetic datasets as TSV files.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        balanced: usize,
        #[arg(long, default_value_t = 2)]
        imbalanced: usize,
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 4)]
        features: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BlockArg {
    DatasetLearner,
    Dataset,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PValueArg {
    Auto,
    ChiSquare,
    Exact,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

trait Code<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Code<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

/// What a successful command reports; `partial` maps to exit code 3.
struct Outcome {
    text: String,
    json: serde_json::Value,
    partial: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(&cli) {
        Ok(out) => {
            if cli.global.json {
                println!("{}", serde_json::to_string_pretty(&out.json).expect("json"));
            } else {
                print!("{}", out.text);
            }
            if out.partial {
                ExitCode::from(EXIT_PARTIAL)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(f) => {
            if cli.global.json {
                println!("{}", json!({ "error": format!("{:#}", f.error), "exit_code": f.code }));
            }
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Inspect { datasets, raw } => inspect(g, datasets, *raw),
        Command::Tune { config, out } => tune(g, config, out),
        Command::Run { config, out, tuned, resume } => run(g, config, out, tuned.as_deref(), *resume),
        Command::Analyze { results, out, block_by, signed_bias, p_value } => {
            let opts = AnalysisOptions {
                block_by: match block_by {
                    BlockArg::DatasetLearner => BlockBy::DatasetLearner,
                    BlockArg::Dataset => BlockBy::Dataset,
                },
                bias_measure: if *signed_bias { Measure::Bias } else { Measure::AbsBias },
                p_value: match p_value {
                    PValueArg::Auto => PValueMethod::Auto,
                    PValueArg::ChiSquare => PValueMethod::ChiSquare,
                    PValueArg::Exact => PValueMethod::Exact,
                },
            };
            analyze(results, out.clone().unwrap_or_else(|| results.join("analysis")), &opts)
        }
        Command::Preset { name, out } => preset(name, out.as_deref()),
        Command::Synth { out, balanced, imbalanced, instances, features } => {
            synth(g, out, *balanced, *imbalanced, *instances, *features)
        }
    }
}

fn load_config(g: &Global, path: &Path) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(path).code(EXIT_DATA)?;
    if let Some(seed) = g.seed {
        cfg.master_seed = seed;
    }
    if let Some(label) = &g.label_column {
        cfg.label_column = label.clone();
    }
    if let Some(metric) = g.metric_override {
        cfg.metric_override = Some(metric);
    }
    cfg.validate().code(EXIT_USAGE)?;
    Ok(cfg)
}

fn inspect(g: &Global, paths: &[PathBuf], raw: bool) -> Result<Outcome, Failure> {
    let label = g.label_column.as_deref().unwrap_or("target");
    let master = g.seed.unwrap_or(0);
    let mut metas: Vec<DatasetMeta> = Vec::new();
    for path in paths {
        let id = foldlab::harness::dataset_id(path);
        let ds = load_dataset(path, &LoadOptions::for_path(path, label))
            .with_context(|| format!("loading {}", path.display()))
            .code(EXIT_DATA)?
            .with_name(id.clone());
        let ds = if raw { ds } else { standardize(&ds) };
        let seed = derive_seed(master, &["clusters", &id]);
        metas.push(analyze_dataset(&ds, &path.display().to_string(), seed, &Default::default()));
    }
    let mut text = format!(
        "{:<24} {:>9} {:>5} {:>7} {:>9} {:<10} {:>8} {:>9} {:>11}\n",
        "dataset", "instances", "attrs", "classes", "imbalance", "balance", "clusters", "epsilon", "min_samples"
    );
    for m in &metas {
        let (eps, ms) = match m.dbscan {
            Some(p) => (format!("{:.4}", p.epsilon), p.min_samples.to_string()),
            None => ("-".into(), "-".into()),
        };
        text.push_str(&format!(
            "{:<24} {:>9} {:>5} {:>7} {:>9.2} {:<10} {:>8} {:>9} {:>11}\n",
            m.id, m.n_instances, m.n_features, m.n_classes, m.imbalance_index, m.balance.to_string(),
            m.estimated_clusters, eps, ms
        ));
    }
    Ok(Outcome { text, json: serde_json::to_value(&metas).expect("json"), partial: false })
}

fn tune(g: &Global, config: &Path, out: &Path) -> Result<Outcome, Failure> {
    let cfg = load_config(g, config)?;
    let report = tune_experiment(&cfg, g.workers).code(EXIT_DATA)?;
    let file = TunedFile { tuned: report.tuned.clone() };
    std::fs::write(out, file.to_toml().code(EXIT_DATA)?)
        .with_context(|| format!("writing {}", out.display()))
        .code(EXIT_DATA)?;
    let mut text = String::new();
    for t in &report.tuned {
        let hp: Vec<String> = t.hyperparams.iter().map(|(k, v)| format!("{k}={v}")).collect();
        text.push_str(&format!(
            "{} {} {} (balanced accuracy {:.4})\n",
            t.dataset,
            t.learner,
            hp.join(" "),
            t.score.unwrap_or(f64::NAN)
        ));
    }
    for f in &report.failures {
        text.push_str(&format!("FAILED {} {}: {}\n", f.dataset, f.learner, f.error));
    }
    text.push_str(&format!("wrote {}\n", out.display()));
    Ok(Outcome {
        text,
        json: json!({ "out": out, "tuned": report.tuned, "failures": report.failures }),
        partial: !report.failures.is_empty(),
    })
}

fn run(g: &Global, config: &Path, out: &Path, tuned: Option<&Path>, resume: bool) -> Result<Outcome, Failure> {
    let mut cfg = load_config(g, config)?;
    if let Some(path) = tuned {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .code(EXIT_DATA)?;
        cfg.merge_tuned(&TunedFile::from_toml(&text).code(EXIT_DATA)?.tuned);
    }
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display())).code(EXIT_DATA)?;
    let mut manifest = RunManifest::start(&cfg);
    manifest.write(out).code(EXIT_DATA)?;
    let report = run_experiment(&cfg, out, &RunOptions { resume, workers: g.workers }).code(EXIT_DATA)?;
    manifest.finish(&report);
    manifest.write(out).code(EXIT_DATA)?;
    let (done, failed, pending) =
        (manifest.count(CellStatus::Done), manifest.count(CellStatus::Failed), manifest.count(CellStatus::Pending));
    let mut text = format!(
        "{} cells: {done} done, {failed} failed, {pending} pending ({} run now, {} workers)\n",
        manifest.cells.len(),
        report.executed.len(),
        report.workers
    );
    for f in &report.failures {
        text.push_str(&format!("FAILED {}: {}\n", f.key, f.error));
    }
    Ok(Outcome {
        text,
        json: json!({
            "out": out,
            "cells": manifest.cells.len(),
            "done": done,
            "failed": failed,
            "pending": pending,
            "executed": report.executed.len(),
            "failures": report.failures,
        }),
        partial: failed + pending > 0,
    })
}

fn analyze(results: &Path, out: PathBuf, opts: &AnalysisOptions) -> Result<Outcome, Failure> {
    let records = load_records(results)
        .with_context(|| format!("no results in {}", results.display()))
        .code(EXIT_DATA)?;
    let report = match analyze_records(&records, opts) {
        Ok(r) => r,
        Err(StatsError::TooFewTreatments(n)) => {
            return Err(Failure {
                code: EXIT_DATA,
                error: anyhow!("Friedman test needs at least 2 splitters; the results contain {n}"),
            })
        }
        Err(e) => return Err(e).code(EXIT_DATA),
    };
    write_analysis(&out, &report).code(EXIT_DATA)?;
    let mut text = format!("{:<11} {:>3} {:<9} {:>7} {:>12} {:>10}  note\n", "balance", "k", "measure", "blocks", "statistic", "p_value");
    for r in &report.friedman {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.5}"));
        text.push_str(&format!(
            "{:<11} {:>3} {:<9} {:>7} {:>12} {:>10}  {}\n",
            r.balance.to_string(),
            r.k_splits,
            r.measure.as_str(),
            r.n_blocks,
            fmt(r.statistic),
            fmt(r.p_value),
            r.note
        ));
    }
    text.push_str("\nfastest mean run time first:\n");
    for t in &report.time {
        text.push_str(&format!("{:>3}. {:<16} {:.6} s/run\n", t.rank, t.splitter, t.mean_seconds));
    }
    text.push_str(&format!("wrote tables to {}\n", out.display()));
    Ok(Outcome {
        text,
        json: json!({ "out": out, "friedman": report.friedman, "wins": report.wins, "time": report.time }),
        partial: false,
    })
}

fn preset(name: &str, out: Option<&Path>) -> Result<Outcome, Failure> {
    let body = presets::text(name).code(EXIT_USAGE)?;
    match out {
        None => Ok(Outcome { text: body.to_string(), json: json!({ "name": name, "config": body }), partial: false }),
        Some(dir) => {
            let path = presets::write(name, dir).code(EXIT_DATA)?;
            Ok(Outcome {
                text: format!("wrote {}\n", path.display()),
                json: json!({ "name": name, "path": path }),
                partial: false,
            })
        }
    }
}

fn synth(g: &Global, out: &Path, balanced: usize, imbalanced: usize, n: usize, d: usize) -> Result<Outcome, Failure> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display())).code(EXIT_DATA)?;
    let master = g.seed.unwrap_or(0);
    let mut specs = Vec::new();
    for i in 0..balanced {
        let name = format!("synth_balanced_{i}");
        specs.push(SynthSpec::balanced(&name, n, d, derive_seed(master, &["synth", &name])));
    }
    for i in 0..imbalanced {
        let name = format!("synth_imbalanced_{i}");
        specs.push(SynthSpec::imbalanced(&name, n, d, derive_seed(master, &["synth", &name])));
    }
    let mut paths = Vec::new();
    for spec in &specs {
        let ds = generate(spec).code(EXIT_USAGE)?;
        let path = out.join(format!("{}.tsv", spec.name));
        foldlab::data::write_dataset(&ds, &path, b'\t').code(EXIT_DATA)?;
        paths.push(path);
    }
    let text = paths.iter().map(|p| format!("wrote {}\n", p.display())).collect();
    Ok(Outcome { text, json: json!({ "files": paths }), partial: false })
}
