//! Optimisation, the training loop, learning-rate grid search, checkpoints
//! and finite-difference gradient checks.

mod checkpoint;
mod grid;
mod gradcheck;
mod optim;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta, GroupManifest, MAGIC};
pub use grid::{grid_search, worker_threads, GridResult, GridRun, LEARNING_RATES};
pub use gradcheck::{
    grad_check, memory_grad_check, relative_error, GradCheckReport, GroupError, FD_STEP, TIE_EXCLUSION,
};
#[doc(hidden)]
pub use gradcheck::memory_grad_check_with_fault;
pub use optim::{
    clip_gradients, rmsprop_update, OptimizerState, RmsPropConfig, DEFAULT_DECAY, DEFAULT_EPSILON,
};
pub use train::{
    train, train_with, StopRule, TrainConfig, TrainLog, TrainOutcome, TrainRecord, TrainStatus, CSV_HEADER,
};
