//! Recurrent controllers: the memory-augmented LSTM layer and the deep LSTM
//! baselines.

mod lstm;
mod params;
mod step;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::memory::MemoryKind;
use crate::scalar::Scalar;

pub use lstm::{lstm_cell, lstm_cell_backward, LstmCache, LstmParams};
pub use params::{
    count_parameters, init_parameters, Category, EndIds, Layout, LstmIds, ParamCount, ParamGroup,
    ParamSet, FORGET_BIAS, INIT_RANGE, POP_BIAS,
};
pub use step::{
    controller_step, deep_lstm_step, initial_state, step, step_backward, LstmState,
    RecurrentState, StateAdjoint, StepCache,
};

/// Joint-vocabulary symbols reserved ahead of any content symbol.
pub const RESERVED_SYMBOLS: usize = 3;

/// Recurrent core of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ControllerKind {
    /// Single-layer LSTM driving a continuous memory.
    Memory(MemoryKind),
    /// Stacked LSTM baseline with the given number of layers.
    DeepLstm(usize),
}

impl ControllerKind {
    pub const DEEP_LAYERS: [usize; 4] = [1, 2, 4, 8];

    pub fn memory(self) -> Option<MemoryKind> {
        match self {
            ControllerKind::Memory(kind) => Some(kind),
            ControllerKind::DeepLstm(_) => None,
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControllerKind::Memory(kind) => write!(f, "{kind}-lstm"),
            ControllerKind::DeepLstm(l) => write!(f, "lstm-{l}"),
        }
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s {
            "stack-lstm" | "lstm-stack" | "stack" => ControllerKind::Memory(MemoryKind::Stack),
            "queue-lstm" | "lstm-queue" | "queue" => ControllerKind::Memory(MemoryKind::Queue),
            "deque-lstm" | "lstm-deque" | "deque" => ControllerKind::Memory(MemoryKind::Deque),
            other => {
                let layers = other
                    .strip_prefix("deep-lstm-")
                    .or_else(|| other.strip_prefix("lstm-"))
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown model kind `{other}`")))?;
                if !Self::DEEP_LAYERS.contains(&layers) {
                    return Err(Error::Config(format!(
                        "deep LSTM layer count must be one of 1, 2, 4, 8 (got {layers})"
                    )));
                }
                ControllerKind::DeepLstm(layers)
            }
        };
        Ok(kind)
    }
}

impl Serialize for ControllerKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ControllerKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Widths and vocabulary sizes of a model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ControllerKind,
    /// LSTM hidden width (every layer).
    pub hidden: usize,
    /// Embedding width `m` of the memory rows. Unused by deep LSTMs.
    pub memory_width: usize,
    /// Input embedding width; also the width of the output projection.
    pub embedding: usize,
    /// Number of content symbols in the source vocabulary.
    pub source_vocab: usize,
    /// Number of content symbols in the target vocabulary.
    pub target_vocab: usize,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("hidden", self.hidden),
            ("embedding", self.embedding),
            ("source_vocab", self.source_vocab),
            ("target_vocab", self.target_vocab),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.kind.memory().is_some() && self.memory_width == 0 {
            return Err(Error::Config("memory_width must be positive".into()));
        }
        if let ControllerKind::DeepLstm(l) = self.kind {
            if !ControllerKind::DEEP_LAYERS.contains(&l) {
                return Err(Error::Config(format!("unsupported layer count {l}")));
            }
        }
        Ok(())
    }

    /// Rows of the input embedding: reserved symbols, source content, target
    /// content.
    pub fn input_rows(&self) -> usize {
        RESERVED_SYMBOLS + self.source_vocab + self.target_vocab
    }

    /// Softmax classes: EOS plus every target content symbol.
    pub fn output_classes(&self) -> usize {
        self.target_vocab + 1
    }

    pub fn output_width(&self) -> usize {
        self.embedding
    }

    /// Number of read vectors fed back into the controller.
    pub fn read_count(&self) -> usize {
        self.kind.memory().map_or(0, MemoryKind::ends)
    }

    pub(crate) fn lstm_input_width(&self, layer: usize) -> usize {
        if layer == 0 {
            self.embedding + self.read_count() * self.memory_width
        } else {
            self.hidden
        }
    }
}

/// A controller together with its embeddings and output layer.
#[derive(Clone, Debug)]
pub struct Model<T> {
    config: ModelConfig,
    layout: Layout,
    params: ParamSet<T>,
    generation: u64,
}

impl<T: PartialEq> PartialEq for Model<T> {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.params == other.params
    }
}

impl<T: Scalar> Model<T> {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let params = init_parameters(&config, seed);
        Self::with_params(config, params)
    }

    pub fn with_params(config: ModelConfig, params: ParamSet<T>) -> Result<Self> {
        config.validate()?;
        let (layout, specs) = params::build_layout(&config);
        if specs.len() != params.groups.len()
            || specs
                .iter()
                .zip(&params.groups)
                .any(|(s, g)| s.name != g.name || s.rows * s.cols != g.data.len())
        {
            return Err(Error::Config(
                "parameter groups do not match the model configuration".into(),
            ));
        }
        Ok(Self {
            config,
            layout,
            params,
            generation: 0,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    /// Mutable access bumps [`Model::generation`], which invalidates traces
    /// recorded before the change.
    pub fn params_mut(&mut self) -> &mut ParamSet<T> {
        self.generation += 1;
        &mut self.params
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn into_params(self) -> ParamSet<T> {
        self.params
    }
}
