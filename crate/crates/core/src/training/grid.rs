use rayon::prelude::*;

use super::train::{train, TrainConfig, TrainOutcome, TrainStatus};
use crate::controller::{Model, ModelConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tasks::Task;

pub const LEARNING_RATES: [f64; 5] = [5e-3, 1e-3, 5e-4, 1e-4, 5e-5];

/// Worker count: `NDSQ_THREADS` if set to a positive integer, otherwise the
/// number of available cores.
pub fn worker_threads() -> usize {
    std::env::var("NDSQ_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Clone, Debug)]
pub struct GridRun<T> {
    pub learning_rate: f64,
    pub outcome: TrainOutcome<T>,
}

#[derive(Clone, Debug)]
pub struct GridResult<T> {
    pub runs: Vec<GridRun<T>>,
    /// Index of the run with the lowest final training perplexity.
    pub best: usize,
}

/// Trains one model per learning rate from the same initialisation and data
/// stream, in parallel.
pub fn grid_search<T: Scalar>(
    model_config: &ModelConfig,
    init_seed: u64,
    task: &Task,
    config: &TrainConfig,
    rates: &[f64],
) -> Result<GridResult<T>> {
    if rates.is_empty() {
        return Err(Error::Config("empty learning-rate grid".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads())
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let runs = pool.install(|| {
        rates
            .par_iter()
            .map(|&lr| {
                let model = Model::<T>::new(model_config.clone(), init_seed)?;
                let cfg = TrainConfig {
                    learning_rate: lr,
                    ..config.clone()
                };
                Ok(GridRun {
                    learning_rate: lr,
                    outcome: train(model, task, &cfg)?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let score = |r: &GridRun<T>| {
        let diverged = matches!(r.outcome.status, TrainStatus::Diverged { .. });
        let ppl = r.outcome.log.last_ppl().unwrap_or(f64::INFINITY);
        (diverged, ppl)
    };
    let best = (0..runs.len())
        .min_by(|&a, &b| {
            let (da, pa) = score(&runs[a]);
            let (db, pb) = score(&runs[b]);
            da.cmp(&db).then(pa.total_cmp(&pb))
        })
        .expect("non-empty grid");
    Ok(GridResult { runs, best })
}
