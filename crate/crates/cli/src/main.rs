//! `wce`: word confidence estimation for speech translation from the command
//! line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 invalid input
//! data, 3 numeric or objective failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wce::data::Task;
use wce::projection::Strategy;
use wce::synth::SynthConfig;
use wce::Error;

use commands::{CorpusArgs, Sink};
use config::Config;

#[derive(Parser, Debug)]
#[command(name = "wce", version, about = "Word confidence estimation for speech translation")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to `jobs` from the configuration, then 1.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reference G/B labels of each record's hypothesis (JSONL).
    Label {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        task: Option<Task>,
    },
    /// Feature table for a task.
    Extract {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        task: Option<Task>,
        /// Append projected ASR features (slt only).
        #[arg(long, value_enum)]
        projection: Option<StrategyArg>,
        /// Append the reference labels as the last column.
        #[arg(long)]
        with_labels: bool,
    },
    /// Train a labeler on a labeled feature table.
    Train {
        #[arg(long)]
        features: PathBuf,
        /// Comma-separated subset of columns to use.
        #[arg(long, value_delimiter = ',')]
        columns: Option<Vec<String>>,
    },
    /// Per-token p_good and labels for a feature table (JSONL).
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Label file whose ids name the sentences; defaults to indices.
        #[arg(long)]
        ids: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Precision, recall and F of predictions against gold labels.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Scores over a uniform threshold grid (CSV).
    Sweep {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Combine ASR confidences of the transcript with MT confidences of the
    /// speech translation.
    Fuse {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Predictions on `f_hyp`.
        #[arg(long)]
        asr: PathBuf,
        /// Predictions on `e_hyp_slt`.
        #[arg(long)]
        mt: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Sequential backward feature selection.
    Select {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        /// Evaluate the candidates of a round in parallel.
        #[arg(long)]
        parallel: bool,
    },
    /// Best lattice path after confidence-based cost adjustment.
    Rescore {
        #[arg(long)]
        lattice: PathBuf,
        /// `word<TAB>G|B` or `word<TAB>p_good` lines.
        #[arg(long)]
        confidence: Option<PathBuf>,
        #[arg(long)]
        reward: Option<f64>,
        #[arg(long)]
        penalty: Option<f64>,
    },
    /// Label distribution of a label file, or of the corpus for a task.
    Stats {
        #[arg(long)]
        labels: Option<PathBuf>,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        task: Option<Task>,
        /// Tab-separated text with percentages to two decimals.
        #[arg(long)]
        text: bool,
    },
    /// Write a seeded synthetic corpus with its resources and a configuration.
    Synth {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        utterances: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum StrategyArg {
    Joint1,
    Joint2,
    Joint3,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Joint1 => Strategy::Joint1,
            StrategyArg::Joint2 => Strategy::Joint2,
            StrategyArg::Joint3 => Strategy::Joint3,
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let jobs = cli.jobs.or(cfg.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err(Error::Config("--jobs must be >= 1".into()).into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))?;
    let out = Sink(cli.out);
    match cli.command {
        Command::Label { corpus, task } => commands::label(&cfg, &corpus, task, &out),
        Command::Extract {
            corpus,
            task,
            projection,
            with_labels,
        } => commands::extract(&cfg, &corpus, task, projection.map(Into::into), with_labels, &out),
        Command::Train { features, columns } => commands::train_cmd(&cfg, &features, &columns, &out),
        Command::Predict {
            model,
            features,
            ids,
            threshold,
        } => commands::predict_cmd(&cfg, &model, &features, ids.as_deref(), threshold, &out),
        Command::Evaluate { pred, gold } => commands::evaluate_cmd(&pred, &gold, &out),
        Command::Sweep { pred, gold, steps } => commands::sweep_cmd(&cfg, &pred, &gold, steps, &out),
        Command::Fuse {
            corpus,
            asr,
            mt,
            alpha,
            threshold,
        } => commands::fuse_cmd(&cfg, &corpus, &asr, &mt, alpha, threshold, &out),
        Command::Select {
            train,
            dev,
            threshold,
            parallel,
        } => commands::select_cmd(&cfg, &train, &dev, threshold, parallel, &out),
        Command::Rescore {
            lattice,
            confidence,
            reward,
            penalty,
        } => commands::rescore_cmd(&cfg, &lattice, confidence.as_deref(), reward, penalty, &out),
        Command::Stats {
            labels,
            corpus,
            task,
            text,
        } => commands::stats_cmd(&cfg, labels.as_deref(), &corpus, task, text, &out),
        Command::Synth { dir, utterances, seed } => {
            let mut s = SynthConfig::default();
            if let Some(n) = utterances {
                s.utterances = n;
            }
            if let Some(x) = seed {
                s.seed = x;
            }
            commands::synth_cmd(&dir, &s, &out)
        }
    }
}

/// Error category and exit code of a failure.
fn classify(err: &anyhow::Error) -> (&'static str, u8) {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(e) => {
            let kind = e.kind();
            let code = match e {
                Error::Config(_) => 1,
                Error::Io { .. } | Error::Parse { .. } | Error::Validation(_) => 2,
                Error::Numeric(_) | Error::Objective { .. } => 3,
            };
            (kind, code)
        }
        None if err
            .chain()
            .any(|e| e.is::<std::io::Error>() || e.is::<serde_json::Error>()) =>
        {
            ("io", 2)
        }
        None => ("internal", 3),
    }
}

/// Context messages down to the first toolkit error, whose text already
/// includes its own cause.
fn describe(err: &anyhow::Error) -> String {
    let mut parts = Vec::new();
    for e in err.chain() {
        parts.push(e.to_string());
        if e.is::<Error>() {
            break;
        }
    }
    parts.join(": ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WCE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.kind().to_string();
            eprintln!(
                "{}",
                serde_json::json!({"error": {"kind": "usage", "code": 1, "message": msg}})
            );
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = classify(&e);
            let message = describe(&e);
            eprintln!(
                "{}",
                serde_json::json!({"error": {"kind": kind, "code": code, "message": message}})
            );
            eprintln!("wce: {message}");
            ExitCode::from(code)
        }
    }
}
