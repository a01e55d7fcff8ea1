//! Command-line front end. Every subcommand takes an optional TOML config,
//! `--set key=value` overrides, and the universal `--seed`, `--r`, `--out`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cwevd::classify::{Hyperparameters, PredictionKind};
use cwevd::eval::EvalMode;
use cwevd::experiment::{self, EvaluateRequest, ExperimentConfig};

#[derive(Parser)]
#[command(name = "cwevd", version, about = "CWE-specific vulnerability detection experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Config override, `key=value`; dotted keys reach nested tables.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// FPR tolerance.
    #[arg(long, global = true)]
    r: Option<f64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest, deduplicate, length-filter and split the configured corpora.
    Prepare,
    /// Write the configured synthetic corpus.
    GenSynthetic,
    /// Length and CWE statistics of a canonical corpus file.
    Stats {
        /// Defaults to `<out>/corpus.jsonl`.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Split manifests and labeled sets for both experiments.
    Split {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Train a model on a labeled-set manifest.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Score records with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Labeled-set manifest restricting the ids; all records otherwise.
        #[arg(long)]
        set: Option<PathBuf>,
        /// Collapse multiclass distributions to binary scores.
        #[arg(long)]
        collapse: bool,
        #[arg(long)]
        predictions: PathBuf,
    },
    /// Evaluate a prediction JSONL against a labeled-set manifest.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// `hard`, `score` or `both`.
        #[arg(long, default_value = "both")]
        mode: String,
        /// Canonical corpus, enabling the pairwise report.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// CWE-specific classifiers vs. one pooled binary classifier.
    RunRq1,
    /// Binary vs. multiclass classifier.
    RunRq2,
    /// Merge report JSON files and render them again.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

fn load_config(common: &Common) -> cwevd::Result<ExperimentConfig> {
    let base = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let mut overrides = common.overrides.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(r) = common.r {
        overrides.push(format!("r={r}"));
    }
    if let Some(out) = &common.out {
        overrides.push(format!("out={}", toml::Value::String(out.display().to_string())));
    }
    base.with_overrides(&overrides)
}

fn modes(arg: &str) -> cwevd::Result<Vec<EvalMode>> {
    match arg {
        "both" => Ok(vec![EvalMode::Hard, EvalMode::Score]),
        one => Ok(vec![one.parse()?]),
    }
}

fn run(cli: Cli) -> cwevd::Result<()> {
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Prepare => {
            let p = experiment::cmd_prepare(&cfg)?;
            println!(
                "{} records ({} vulnerable) -> {}",
                p.corpus.len(),
                p.corpus.vulnerable().len(),
                cfg.out.display()
            );
        }
        Command::GenSynthetic => {
            let path = experiment::cmd_gen_synthetic(&cfg)?;
            println!("{}", path.display());
        }
        Command::Stats { corpus } => {
            let path = corpus.unwrap_or_else(|| cfg.out.join("corpus.jsonl"));
            print!("{}", experiment::cmd_stats(&path, &cfg)?);
        }
        Command::Split { corpus } => {
            let manifests = experiment::cmd_split(&cfg, corpus.as_deref())?;
            for m in manifests {
                println!("{} train={} test={}", m.name, m.train.len(), m.test.len());
            }
        }
        Command::Train { corpus, set, model } => {
            let hp: Hyperparameters = cfg.classifier;
            let m = experiment::cmd_train(&corpus, &set, &hp, cfg.seed, &model)?;
            println!("final loss {:.6} -> {}", m.metadata.final_loss, model.display());
        }
        Command::Predict {
            model,
            corpus,
            set,
            collapse,
            predictions,
        } => {
            let p = experiment::cmd_predict(&model, &corpus, set.as_deref(), collapse, &predictions)?;
            let kind = match p.kind {
                PredictionKind::Binary => "binary",
                PredictionKind::Multiclass => "multiclass",
            };
            println!("{} {kind} predictions -> {}", p.len(), predictions.display());
        }
        Command::Evaluate {
            predictions,
            manifest,
            mode,
            corpus,
        } => {
            let modes = modes(&mode)?;
            let req = EvaluateRequest {
                predictions: &predictions,
                manifest: &manifest,
                modes: &modes,
                corpus: corpus.as_deref(),
            };
            print!("{}", experiment::cmd_evaluate(&req, &cfg)?.to_text());
        }
        Command::RunRq1 => print!("{}", experiment::cmd_run_rq1(&cfg)?.to_text()),
        Command::RunRq2 => print!("{}", experiment::cmd_run_rq2(&cfg)?.to_text()),
        Command::Report { reports } => print!("{}", experiment::cmd_report(&reports, &cfg)?.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.common.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_user_error() { 2 } else { 1 })
        }
    }
}

