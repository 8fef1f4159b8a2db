//! Differentiable stacks, queues and deques as recurrent memories for LSTM
//! controllers, together with the transduction tasks used to exercise them.
//!
//! The crate is organised bottom-up:
//!
//! - [`memory`]: parameter-free forward and backward dynamics of the three
//!   continuous structures.
//! - [`controller`]: LSTM cells, the memory-augmented recurrent layer, deep
//!   LSTM baselines, initialisation and parameter counting.
//! - [`seqmodel`]: vocabularies, joint-sequence encoding, full-sequence loss,
//!   backpropagation through time and greedy decoding.
//! - [`tasks`]: copy / reversal / bigram-flip generators and the two
//!   synchronous grammars with rejection sampling.
//! - [`training`]: RMSProp, clipping, the training loop, checkpoints and the
//!   finite-difference gradient checker.
//! - [`eval`]: coarse and fine accuracy.
//! - [`cli`]: configuration parsing and the `ndsq` command dispatcher.
//!
//! Runnable walkthroughs live under `examples/`.

pub mod cli;
pub mod controller;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod memory;
pub mod scalar;
pub mod seqmodel;
pub mod tasks;
pub mod training;

pub use error::{Error, Result};
pub use scalar::{Precision, Scalar};
