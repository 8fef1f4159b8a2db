//! Joint-sequence encoding, the full-sequence loss, backpropagation through
//! time and greedy decoding.

mod model;
mod vocab;

pub use model::{output_class, Decoded, ForwardOutput, LossReport, StepTrace};
pub(crate) use vocab::encode_example_unchecked;
pub use vocab::{decode_joint, encode_example, TransductionExample, Vocabulary, EOS, SEP, SOS};
