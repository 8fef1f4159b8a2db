use serde::{Deserialize, Serialize};

use super::optim::{clip_gradients, rmsprop_update, OptimizerState, RmsPropConfig};
use crate::controller::{Model, ParamSet};
use crate::error::{Error, Result};
use crate::eval::{run_eval, EvalReport, EvalSpec};
use crate::scalar::Scalar;
use crate::seqmodel::LossReport;
use crate::tasks::{stream_rng, streams, Task, DEFAULT_ATTEMPTS};

/// Stop as soon as an accuracy round meets both thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    pub train_coarse: f64,
    pub test_coarse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Elementwise gradient clip.
    pub clip: f64,
    /// Batches per perplexity record.
    pub ppl_every: usize,
    /// Batches per accuracy round.
    pub acc_every: usize,
    pub max_batches: usize,
    pub seed: u64,
    pub decay: f64,
    pub epsilon: f64,
    pub train_min_len: usize,
    pub train_max_len: usize,
    pub test_min_len: usize,
    pub test_max_len: usize,
    /// Sequences decoded per accuracy round and split.
    pub eval_samples: usize,
    pub max_attempts: usize,
    pub stop: Option<StopRule>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let rms = RmsPropConfig::default();
        Self {
            learning_rate: 1e-3,
            batch_size: 10,
            clip: 1.0,
            ppl_every: 100,
            acc_every: 1000,
            max_batches: 10_000,
            seed: 0,
            decay: rms.decay,
            epsilon: rms.epsilon,
            train_min_len: 8,
            train_max_len: 64,
            test_min_len: 65,
            test_max_len: 128,
            eval_samples: 1000,
            max_attempts: DEFAULT_ATTEMPTS,
            stop: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, task: &Task) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size),
            ("ppl_every", self.ppl_every),
            ("acc_every", self.acc_every),
            ("eval_samples", self.eval_samples),
            ("max_attempts", self.max_attempts),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("`{name}` must be at least 1")));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("`learning_rate` must be finite and nonnegative".into()));
        }
        if !(self.clip > 0.0) {
            return Err(Error::Config("`clip` must be positive".into()));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) || !(self.epsilon > 0.0) {
            return Err(Error::Config("RMSProp needs 0 < decay < 1 and epsilon > 0".into()));
        }
        task.check_range(self.train_min_len, self.train_max_len)?;
        task.check_range(self.test_min_len, self.test_max_len)
    }

    fn eval_spec(&self, test: bool, round: u64) -> EvalSpec {
        let (min_len, max_len, base) = if test {
            (self.test_min_len, self.test_max_len, streams::TEST)
        } else {
            (self.train_min_len, self.train_max_len, streams::TRAIN_EVAL)
        };
        EvalSpec {
            min_len,
            max_len,
            samples: self.eval_samples,
            seed: self.seed,
            stream: base + 2 * round,
            max_attempts: self.max_attempts,
        }
    }
}

/// One row of the metrics log. Cells not measured at this batch are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub batch: usize,
    pub train_ppl: Option<f64>,
    pub train_coarse: Option<f64>,
    pub train_fine: Option<f64>,
    pub test_coarse: Option<f64>,
    pub test_fine: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<TrainRecord>,
}

pub const CSV_HEADER: &str = "batch,train_ppl,train_coarse,train_fine,test_coarse,test_fine";

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

impl TrainRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.batch,
            cell(self.train_ppl),
            cell(self.train_coarse),
            cell(self.train_fine),
            cell(self.test_coarse),
            cell(self.test_fine)
        )
    }
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }

    /// Most recent average training perplexity.
    pub fn last_ppl(&self) -> Option<f64> {
        self.records.iter().rev().find_map(|r| r.train_ppl)
    }

    /// Most recent accuracy round.
    pub fn last_accuracy(&self) -> Option<&TrainRecord> {
        self.records.iter().rev().find(|r| r.test_coarse.is_some())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrainStatus {
    Completed,
    /// The stop rule fired after `batch` batches.
    Stopped { batch: usize },
    /// A non-finite loss or gradient at `batch`; the model is the last one
    /// with finite parameters.
    Diverged { batch: usize, message: String },
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    pub model: Model<T>,
    pub log: TrainLog,
    pub status: TrainStatus,
    pub batches: usize,
    pub examples: usize,
}

pub fn train<T: Scalar>(model: Model<T>, task: &Task, config: &TrainConfig) -> Result<TrainOutcome<T>> {
    train_with(model, task, config, |_| {})
}

/// [`train`], calling `on_record` as each log row is completed.
pub fn train_with<T: Scalar>(
    mut model: Model<T>,
    task: &Task,
    config: &TrainConfig,
    mut on_record: impl FnMut(&TrainRecord),
) -> Result<TrainOutcome<T>> {
    config.validate(task)?;
    let mut opt = OptimizerState::new(
        model.params(),
        RmsPropConfig {
            decay: config.decay,
            epsilon: config.epsilon,
        },
    );
    let mut grads = ParamSet::zeros_like(model.params());
    let mut rng = stream_rng(config.seed, streams::TRAIN);
    let lr = T::lit(config.learning_rate);
    let clip = T::lit(config.clip);
    let mut log = TrainLog::default();
    let mut window = LossReport::default();
    let mut status = TrainStatus::Completed;
    let mut batches = 0;
    let mut examples = 0;

    'outer: for batch in 1..=config.max_batches {
        grads.fill_zero();
        for _ in 0..config.batch_size {
            let ex = task.sample(
                config.train_min_len,
                config.train_max_len,
                config.max_attempts,
                &mut rng,
            )?;
            let out = match model.forward(&ex) {
                Ok(out) => out,
                Err(Error::NonFinite(message)) => {
                    status = TrainStatus::Diverged { batch, message };
                    break 'outer;
                }
                Err(e) => return Err(e),
            };
            window.merge(&out.loss);
            model.backward_into(&out.trace, None, &mut grads)?;
            examples += 1;
        }
        if !grads.all_finite() {
            status = TrainStatus::Diverged {
                batch,
                message: "non-finite gradient".into(),
            };
            break;
        }
        clip_gradients(&mut grads, clip);
        rmsprop_update(model.params_mut(), &grads, &mut opt, lr)?;
        batches = batch;

        let ppl_due = batch % config.ppl_every == 0;
        let acc_due = batch % config.acc_every == 0;
        if !(ppl_due || acc_due) {
            continue;
        }
        let mut rec = TrainRecord {
            batch,
            train_ppl: None,
            train_coarse: None,
            train_fine: None,
            test_coarse: None,
            test_fine: None,
        };
        if ppl_due {
            rec.train_ppl = Some(window.perplexity());
            window = LossReport::default();
        }
        if acc_due {
            let round = (batch / config.acc_every) as u64;
            let tr: EvalReport = run_eval(&model, task, &config.eval_spec(false, round))?;
            let te = run_eval(&model, task, &config.eval_spec(true, round))?;
            rec.train_coarse = Some(tr.coarse);
            rec.train_fine = Some(tr.fine);
            rec.test_coarse = Some(te.coarse);
            rec.test_fine = Some(te.fine);
        }
        on_record(&rec);
        let stop = match (config.stop, rec.train_coarse, rec.test_coarse) {
            (Some(s), Some(tr), Some(te)) => tr >= s.train_coarse && te >= s.test_coarse,
            _ => false,
        };
        log.records.push(rec);
        if stop {
            status = TrainStatus::Stopped { batch };
            break;
        }
    }
    Ok(TrainOutcome {
        model,
        log,
        status,
        batches,
        examples,
    })
}
