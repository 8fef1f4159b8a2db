//! Coarse and fine sequence accuracy, and the sampled test protocol.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::Model;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seqmodel::{Decoded, EOS};
use crate::tasks::{stream_rng, Task};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Fraction of sequences predicted exactly through EOS.
    pub coarse: f64,
    /// Mean fraction of each target (EOS included) correct before the first error.
    pub fine: f64,
    pub sequences: usize,
    /// Position of the first mismatch per sequence; `None` for exact matches.
    pub first_errors: Vec<Option<usize>>,
}

/// Scores `(prediction, target)` pairs position by position. Both sides are
/// compared as given, so targets should end with EOS and predictions should
/// carry EOS wherever the decoder emitted it.
pub fn accuracy<P: AsRef<[usize]>, Q: AsRef<[usize]>>(pairs: &[(P, Q)]) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut exact = 0usize;
    let mut fine = 0.0;
    let mut first_errors = Vec::with_capacity(pairs.len());
    for (pred, target) in pairs {
        let (pred, target) = (pred.as_ref(), target.as_ref());
        if target.is_empty() {
            return Err(Error::Task("empty target sequence".into()));
        }
        let correct = pred
            .iter()
            .zip(target)
            .take_while(|(p, t)| p == t)
            .count();
        fine += correct as f64 / target.len() as f64;
        if pred == target {
            exact += 1;
            first_errors.push(None);
        } else {
            first_errors.push(Some(correct));
        }
    }
    let n = pairs.len() as f64;
    Ok(EvalReport {
        coarse: exact as f64 / n,
        fine: fine / n,
        sequences: pairs.len(),
        first_errors,
    })
}

/// Anything that maps a source sequence to a predicted target.
pub trait Transducer: Sync {
    fn transduce(&self, source: &[usize], max_len: usize) -> Result<Decoded>;
}

impl<T: Scalar> Transducer for Model<T> {
    fn transduce(&self, source: &[usize], max_len: usize) -> Result<Decoded> {
        self.greedy_decode(source, max_len)
    }
}

/// The sample set of one evaluation round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSpec {
    pub min_len: usize,
    pub max_len: usize,
    pub samples: usize,
    pub seed: u64,
    pub stream: u64,
    pub max_attempts: usize,
}

impl EvalSpec {
    /// Decode cap: twice the longest configured target, plus two.
    pub fn decode_cap(&self) -> usize {
        2 * self.max_len + 2
    }
}

/// Samples `spec.samples` examples, decodes each greedily and scores them.
pub fn run_eval<D: Transducer + ?Sized>(decoder: &D, task: &Task, spec: &EvalSpec) -> Result<EvalReport> {
    let mut rng = stream_rng(spec.seed, spec.stream);
    let examples = (0..spec.samples)
        .map(|_| task.sample(spec.min_len, spec.max_len, spec.max_attempts, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let cap = spec.decode_cap();
    let pairs = examples
        .par_iter()
        .map(|ex| {
            let d = decoder.transduce(&ex.source, cap)?;
            let mut pred = d.tokens;
            if !d.truncated {
                pred.push(EOS);
            }
            let mut target = ex.target.clone();
            target.push(EOS);
            Ok((pred, target))
        })
        .collect::<Result<Vec<_>>>()?;
    accuracy(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_examples() {
        let r = accuracy(&[(vec![3, 4, 2], vec![3, 4, 2])]).unwrap();
        assert_eq!((r.coarse, r.fine), (1.0, 1.0));
        let r = accuracy(&[(vec![3, 4, 9, 6, 2], vec![3, 4, 5, 6, 2])]).unwrap();
        assert_eq!(r.coarse, 0.0);
        assert!((r.fine - 0.4).abs() < 1e-15);
        assert_eq!(r.first_errors, vec![Some(2)]);
    }

    #[test]
    fn overrun_misses_eos() {
        let r = accuracy(&[(vec![3, 4, 5, 6, 2], vec![3, 4, 5, 2])]).unwrap();
        assert_eq!(r.coarse, 0.0);
        assert!((r.fine - 0.75).abs() < 1e-15);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let pairs: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        assert!(matches!(accuracy(&pairs), Err(Error::EmptyBatch)));
    }
}
