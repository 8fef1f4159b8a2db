//! The `ndsq` command line: configuration merging and the five subcommands.
//!
//! Exit codes are 0 on success, 1 for usage and configuration errors, 2 for
//! numeric failures (including divergence) and 3 when a gradient check misses
//! its tolerance. Failures print a one-line JSON record to stderr.

mod config;

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::controller::{count_parameters, ControllerKind, Model, ModelConfig};
use crate::error::{Error, Result};
use crate::eval::{run_eval, EvalSpec};
use crate::memory::MemoryKind;
use crate::scalar::{Precision, Scalar};
use crate::tasks::{streams, write_jsonl, SampleConfig, Task};
use crate::training::{
    grad_check, grid_search, load_checkpoint, memory_grad_check, save_checkpoint, train_with,
    CheckpointMeta, GradCheckReport, TrainOutcome, TrainStatus, CSV_HEADER, LEARNING_RATES,
};

pub use config::{parse_config, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_THRESHOLD: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ndsq", version, about = "Neural stacks, queues and deques")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a line-delimited JSON dataset.
    Gen {
        #[command(flatten)]
        config: ConfigArgs,
        /// Number of examples.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Split::Train)]
        split: Split,
    },
    /// Train a model (or one per grid learning rate) and write metrics and a checkpoint.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score a checkpoint on freshly sampled test-length examples.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Finite-difference check of the memory and full-model gradients.
    Gradcheck {
        #[command(flatten)]
        config: ConfigArgs,
        /// Random configurations per check.
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Print the trainable parameter breakdown.
    Params {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Train,
    Test,
}

/// Flags that override keys of the JSON config.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// JSON experiment config; flags take precedence over its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub memory_width: Option<usize>,
    #[arg(long)]
    pub embedding: Option<usize>,
    #[arg(long)]
    pub vocab: Option<usize>,
    #[arg(long)]
    pub min_len: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub test_min_len: Option<usize>,
    #[arg(long)]
    pub test_max_len: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_batches: Option<usize>,
    #[arg(long)]
    pub eval_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub precision: Option<String>,
    #[arg(long)]
    pub grammar: Option<PathBuf>,
    /// Train one model per learning rate of the grid.
    #[arg(long)]
    pub grid: bool,
}

impl ConfigArgs {
    fn overrides(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let mut put = |key: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(key.to_string(), v);
            }
        };
        put("task", self.task.as_ref().map(|v| json!(v)));
        put("model", self.model.as_ref().map(|v| json!(v)));
        put("hidden", self.hidden.map(|v| json!(v)));
        put("memory_width", self.memory_width.map(|v| json!(v)));
        put("embedding", self.embedding.map(|v| json!(v)));
        put("vocab", self.vocab.map(|v| json!(v)));
        put("min_len", self.min_len.map(|v| json!(v)));
        put("max_len", self.max_len.map(|v| json!(v)));
        put("test_min_len", self.test_min_len.map(|v| json!(v)));
        put("test_max_len", self.test_max_len.map(|v| json!(v)));
        put("learning_rate", self.lr.map(|v| json!(v)));
        put("batch_size", self.batch_size.map(|v| json!(v)));
        put("max_batches", self.max_batches.map(|v| json!(v)));
        put("eval_samples", self.eval_samples.map(|v| json!(v)));
        put("seed", self.seed.map(|v| json!(v)));
        put("out_dir", self.out.as_ref().map(|v| json!(v)));
        put("precision", self.precision.as_ref().map(|v| json!(v)));
        put("grammar", self.grammar.as_ref().map(|v| json!(v)));
        put("grid", self.grid.then_some(json!(true)));
        m
    }

    pub fn resolve(&self) -> Result<ExperimentConfig> {
        parse_config(self.config.as_deref(), self.overrides())
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NumericInput(_) | Error::NonFinite(_) => EXIT_NUMERIC,
        _ => EXIT_CONFIG,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Dimension { .. } => "dimension",
        Error::NumericInput(_) => "numeric_input",
        Error::NonFinite(_) => "non_finite",
        Error::KindMismatch { .. } => "kind_mismatch",
        Error::Vocabulary(_) => "vocabulary",
        Error::Config(_) => "config",
        Error::Task(_) => "task",
        Error::Grammar { .. } => "grammar",
        Error::RejectionExhausted { .. } => "rejection_exhausted",
        Error::Checkpoint(_) => "checkpoint",
        Error::StaleTrace(_) => "stale_trace",
        Error::EmptyBatch => "empty_batch",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code(&e);
            let record = json!({"error": error_kind(&e), "message": e.to_string(), "exit": code});
            eprintln!("{record}");
            code
        }
    }
}

pub fn dispatch(command: &Command) -> Result<i32> {
    match command {
        Command::Gen { config, n, split } => gen(&config.resolve()?, *n, *split),
        Command::Train { config } => {
            let cfg = config.resolve()?;
            match cfg.precision {
                Precision::F32 => run_train::<f32>(&cfg),
                Precision::F64 => run_train::<f64>(&cfg),
            }
        }
        Command::Eval { config, checkpoint } => {
            let cfg = config.resolve()?;
            match cfg.precision {
                Precision::F32 => run_eval_cmd::<f32>(&cfg, checkpoint),
                Precision::F64 => run_eval_cmd::<f64>(&cfg, checkpoint),
            }
        }
        Command::Gradcheck { config, trials } => gradcheck(&config.resolve()?, *trials),
        Command::Params { config } => params(&config.resolve()?),
    }
}

fn gen(cfg: &ExperimentConfig, n: usize, split: Split) -> Result<i32> {
    let task = cfg.task()?;
    let (min_len, max_len, stream) = match split {
        Split::Train => (cfg.min_len, cfg.max_len, streams::TRAIN),
        Split::Test => (cfg.test_min_len, cfg.test_max_len, streams::TEST),
    };
    let sample = SampleConfig {
        min_len,
        max_len,
        vocab: cfg.vocab,
        seed: cfg.seed,
        max_attempts: cfg.max_attempts,
    };
    let examples = task.generate(&sample, stream, n)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let split = match split {
        Split::Train => "train",
        Split::Test => "test",
    };
    let path = cfg.out_dir.join(format!("{}-{split}-s{}.jsonl", task.kind(), cfg.seed));
    let mut out = BufWriter::new(fs::File::create(&path)?);
    write_jsonl(&examples, &mut out)?;
    out.flush()?;
    let vocab_path = cfg.out_dir.join(format!("{}-vocab.json", task.kind()));
    fs::write(&vocab_path, serde_json::to_string_pretty(task.vocabulary())?)?;
    println!("{}", json!({"dataset": path, "vocabulary": vocab_path, "examples": n}));
    Ok(EXIT_OK)
}

fn write_run<T: Scalar>(
    dir: &Path,
    cfg: &ExperimentConfig,
    task: &Task,
    outcome: &TrainOutcome<T>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.csv"), outcome.log.to_csv())?;
    fs::write(dir.join("config.json"), serde_json::to_string_pretty(cfg)?)?;
    let meta = CheckpointMeta {
        config: outcome.model.config().clone(),
        vocabulary: task.vocabulary().clone(),
        task: Some(task.kind()),
        batches: outcome.batches,
    };
    save_checkpoint(&dir.join("model.ndsq"), &outcome.model, &meta)?;
    let summary = json!({
        "learning_rate": cfg.learning_rate,
        "status": outcome.status,
        "batches": outcome.batches,
        "examples": outcome.examples,
        "final_train_ppl": outcome.log.last_ppl(),
        "final_accuracy": outcome.log.last_accuracy(),
    });
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

fn run_train<T: Scalar>(cfg: &ExperimentConfig) -> Result<i32> {
    let task = cfg.task()?;
    let model_config = cfg.model_config(&task)?;
    let train_config = cfg.train_config();
    let diverged = if cfg.grid {
        let result = grid_search::<T>(&model_config, cfg.seed, &task, &train_config, &LEARNING_RATES)?;
        for run in &result.runs {
            let run_cfg = ExperimentConfig {
                learning_rate: run.learning_rate,
                ..cfg.clone()
            };
            let dir = cfg.out_dir.join(format!("lr-{:e}", run.learning_rate));
            write_run(&dir, &run_cfg, &task, &run.outcome)?;
        }
        let best = &result.runs[result.best];
        let summary = json!({
            "best_learning_rate": best.learning_rate,
            "runs": result.runs.iter().map(|r| json!({
                "learning_rate": r.learning_rate,
                "status": r.outcome.status,
                "final_train_ppl": r.outcome.log.last_ppl(),
            })).collect::<Vec<_>>(),
        });
        fs::write(cfg.out_dir.join("grid.json"), serde_json::to_string_pretty(&summary)?)?;
        println!("{summary}");
        matches!(best.outcome.status, TrainStatus::Diverged { .. })
    } else {
        let model = Model::<T>::new(model_config, cfg.seed)?;
        eprintln!("{CSV_HEADER}");
        let outcome = train_with(model, &task, &train_config, |r| eprintln!("{}", r.csv_row()))?;
        write_run(&cfg.out_dir, cfg, &task, &outcome)?;
        println!(
            "{}",
            json!({"status": outcome.status, "batches": outcome.batches, "out_dir": cfg.out_dir})
        );
        matches!(outcome.status, TrainStatus::Diverged { .. })
    };
    Ok(if diverged { EXIT_NUMERIC } else { EXIT_OK })
}

fn run_eval_cmd<T: Scalar>(cfg: &ExperimentConfig, checkpoint: &Path) -> Result<i32> {
    let (model, meta) = load_checkpoint::<T>(checkpoint)?;
    let kind = match (cfg.task, meta.task) {
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => return Err(Error::Config("missing key `task`".into())),
    };
    let task = ExperimentConfig {
        task: Some(kind),
        ..cfg.clone()
    }
    .task()?;
    if task.vocabulary() != &meta.vocabulary {
        return Err(Error::Vocabulary(
            "checkpoint vocabulary differs from the task vocabulary".into(),
        ));
    }
    let spec = EvalSpec {
        min_len: cfg.test_min_len,
        max_len: cfg.test_max_len,
        samples: cfg.eval_samples,
        seed: cfg.seed,
        stream: streams::TEST,
        max_attempts: cfg.max_attempts,
    };
    let report = run_eval(&model, &task, &spec)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let record = json!({
        "checkpoint": checkpoint,
        "task": kind,
        "model": meta.config.kind,
        "spec": spec,
        "coarse": report.coarse,
        "fine": report.fine,
        "sequences": report.sequences,
    });
    fs::write(cfg.out_dir.join("eval.json"), serde_json::to_string_pretty(&record)?)?;
    let csv = cfg.out_dir.join("eval.csv");
    let fresh = !csv.exists();
    let mut f = fs::OpenOptions::new().create(true).append(true).open(&csv)?;
    if fresh {
        writeln!(f, "checkpoint,batches,coarse,fine,sequences")?;
    }
    writeln!(
        f,
        "{},{},{},{},{}",
        checkpoint.display(),
        meta.batches,
        report.coarse,
        report.fine,
        report.sequences
    )?;
    println!("{record}");
    Ok(EXIT_OK)
}

/// Memory-only tolerance and full-model tolerance used by `gradcheck`.
pub const MEMORY_TOLERANCE: f64 = 1e-6;
pub const MODEL_TOLERANCE: f64 = 1e-4;

fn gradcheck(cfg: &ExperimentConfig, trials: usize) -> Result<i32> {
    let kind = cfg.model.unwrap_or(ControllerKind::Memory(MemoryKind::Stack));
    let mut reports: Vec<(String, GradCheckReport)> = Vec::new();
    if let Some(mem) = kind.memory() {
        let r = memory_grad_check(mem, 3, 6, trials, MEMORY_TOLERANCE, cfg.seed)?;
        reports.push((format!("memory/{mem}"), r));
    }
    // Small widths keep the central differences cheap; the structure of the
    // computation is the same at any width.
    let small = ModelConfig {
        kind,
        hidden: 4,
        memory_width: 3,
        embedding: 3,
        source_vocab: 4,
        target_vocab: 4,
    };
    let r = grad_check(&small, 4, trials, MODEL_TOLERANCE, cfg.seed)?;
    reports.push((format!("model/{kind}"), r));
    let passed = reports.iter().all(|(_, r)| r.passed());
    let record = json!({
        "model": kind,
        "passed": passed,
        "checks": reports.iter().map(|(name, r)| json!({"check": name, "report": r})).collect::<Vec<_>>(),
    });
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(if passed { EXIT_OK } else { EXIT_THRESHOLD })
}

fn params(cfg: &ExperimentConfig) -> Result<i32> {
    let kind = cfg.require_model()?;
    let (source_vocab, target_vocab) = match cfg.task {
        Some(_) => {
            let t = cfg.task()?;
            (t.vocabulary().source_size(), t.vocabulary().target_size())
        }
        None => (cfg.vocab, cfg.vocab),
    };
    let model = ModelConfig {
        kind,
        hidden: cfg.hidden,
        memory_width: cfg.memory_width,
        embedding: cfg.embedding,
        source_vocab,
        target_vocab,
    };
    model.validate()?;
    let count = count_parameters(&model);
    println!("{}", serde_json::to_string_pretty(&json!({"config": model, "count": count}))?);
    Ok(EXIT_OK)
}
