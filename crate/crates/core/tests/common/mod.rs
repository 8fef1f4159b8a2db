#![allow(dead_code)]
pub mod itg;
pub mod reference;

use ndsq::controller::{Model, ModelConfig};
use ndsq::seqmodel::{encode_example, TransductionExample, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const KINDS: [&str; 6] = ["stack", "queue", "deque", "lstm-1", "lstm-2", "lstm-4"];

pub fn tiny_config(kind: &str) -> ModelConfig {
    ModelConfig {
        kind: kind.parse().unwrap(),
        hidden: 4,
        memory_width: 3,
        embedding: 3,
        source_vocab: 5,
        target_vocab: 5,
    }
}

pub fn random_example(vocab: usize, src_len: usize, tgt_len: usize, seed: u64) -> TransductionExample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = Vocabulary::synthetic(vocab);
    let src: Vec<usize> = (0..src_len).map(|_| rng.gen_range(3..3 + vocab)).collect();
    let tgt: Vec<usize> = (0..tgt_len).map(|_| rng.gen_range(3..3 + vocab)).collect();
    encode_example(&src, &tgt, &v).unwrap()
}

/// Relative error with a floor on the denominator so that entries that are
/// zero in both gradients do not dominate.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Central finite differences of the summed loss with respect to every
/// parameter; returns the largest relative error against `analytic`.
pub fn max_fd_error(model: &Model<f64>, ex: &TransductionExample, analytic: &[f64], eps: f64) -> f64 {
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    let mut k = 0;
    for g in 0..model.params().groups.len() {
        for i in 0..model.params().groups[g].data.len() {
            let orig = model.params().groups[g].data[i];
            probe.params_mut().groups[g].data[i] = orig + eps;
            let up = probe.forward(ex).unwrap().loss.nll;
            probe.params_mut().groups[g].data[i] = orig - eps;
            let down = probe.forward(ex).unwrap().loss.nll;
            probe.params_mut().groups[g].data[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            worst = worst.max(rel_err(analytic[k], numeric));
            k += 1;
        }
    }
    worst
}
