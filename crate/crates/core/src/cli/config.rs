use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::controller::{ControllerKind, ModelConfig};
use crate::error::{Error, Result};
use crate::scalar::Precision;
use crate::tasks::{Task, TaskKind};
use crate::training::{TrainConfig, DEFAULT_DECAY, DEFAULT_EPSILON};

/// Everything one command needs. Loaded from JSON, then overridden by flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub task: Option<TaskKind>,
    pub model: Option<ControllerKind>,
    pub hidden: usize,
    pub memory_width: usize,
    pub embedding: usize,
    /// Content symbols for the synthetic tasks.
    pub vocab: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub test_min_len: usize,
    pub test_max_len: usize,
    pub learning_rate: f64,
    /// Train one model per rate of the learning-rate grid instead.
    pub grid: bool,
    pub batch_size: usize,
    pub clip: f64,
    pub ppl_every: usize,
    pub acc_every: usize,
    pub max_batches: usize,
    pub eval_samples: usize,
    pub decay: f64,
    pub epsilon: f64,
    pub max_attempts: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub precision: Precision,
    /// Path to a grammar file for the grammar tasks.
    pub grammar: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            task: None,
            model: None,
            hidden: 256,
            memory_width: 256,
            embedding: 64,
            vocab: 128,
            min_len: t.train_min_len,
            max_len: t.train_max_len,
            test_min_len: t.test_min_len,
            test_max_len: t.test_max_len,
            learning_rate: t.learning_rate,
            grid: false,
            batch_size: t.batch_size,
            clip: t.clip,
            ppl_every: t.ppl_every,
            acc_every: t.acc_every,
            max_batches: t.max_batches,
            eval_samples: t.eval_samples,
            decay: DEFAULT_DECAY,
            epsilon: DEFAULT_EPSILON,
            max_attempts: t.max_attempts,
            seed: 0,
            out_dir: PathBuf::from("runs"),
            precision: Precision::F64,
            grammar: None,
        }
    }
}

/// Reads `path` (if any) as a JSON object, lays `overrides` over it and
/// checks the result. Unknown keys are rejected.
pub fn parse_config(path: Option<&Path>, overrides: Map<String, Value>) -> Result<ExperimentConfig> {
    let mut base = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            match serde_json::from_str::<Value>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            {
                Value::Object(m) => m,
                _ => return Err(Error::Config(format!("{}: expected a JSON object", p.display()))),
            }
        }
        None => Map::new(),
    };
    base.extend(overrides);
    let cfg: ExperimentConfig =
        serde_json::from_value(Value::Object(base)).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("hidden", self.hidden),
            ("memory_width", self.memory_width),
            ("embedding", self.embedding),
            ("vocab", self.vocab),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("`{key}` must be positive")));
            }
        }
        if let Some(kind) = self.task {
            let t = self.task_for(kind)?;
            t.check_range(self.min_len, self.max_len)?;
            t.check_range(self.test_min_len, self.test_max_len)?;
            self.train_config().validate(&t)?;
        }
        Ok(())
    }

    pub fn require_task(&self) -> Result<TaskKind> {
        self.task.ok_or_else(|| Error::Config("missing key `task`".into()))
    }

    pub fn require_model(&self) -> Result<ControllerKind> {
        self.model.ok_or_else(|| Error::Config("missing key `model`".into()))
    }

    fn task_for(&self, kind: TaskKind) -> Result<Task> {
        match &self.grammar {
            Some(path) if !kind.is_synthetic() => {
                let text = std::fs::read_to_string(path)?;
                let g = crate::tasks::SyncGrammar::parse(&path.display().to_string(), &text)?;
                Task::from_grammar(kind, g)
            }
            _ => Task::new(kind, self.vocab),
        }
    }

    pub fn task(&self) -> Result<Task> {
        self.task_for(self.require_task()?)
    }

    pub fn model_config(&self, task: &Task) -> Result<ModelConfig> {
        let cfg = ModelConfig {
            kind: self.require_model()?,
            hidden: self.hidden,
            memory_width: self.memory_width,
            embedding: self.embedding,
            source_vocab: task.vocabulary().source_size(),
            target_vocab: task.vocabulary().target_size(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            clip: self.clip,
            ppl_every: self.ppl_every,
            acc_every: self.acc_every,
            max_batches: self.max_batches,
            seed: self.seed,
            decay: self.decay,
            epsilon: self.epsilon,
            train_min_len: self.min_len,
            train_max_len: self.max_len,
            test_min_len: self.test_min_len,
            test_max_len: self.test_max_len,
            eval_samples: self.eval_samples,
            max_attempts: self.max_attempts,
            stop: None,
        }
    }
}
