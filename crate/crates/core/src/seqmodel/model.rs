use serde::{Deserialize, Serialize};

use super::vocab::{TransductionExample, EOS, SEP, SOS};
use crate::controller::{
    initial_state, step, step_backward, Model, ParamSet, RecurrentState, StateAdjoint, StepCache,
    RESERVED_SYMBOLS,
};
use crate::error::{Error, Result};
use crate::linalg::{affine, affine_backward_input, affine_backward_params, argmax, softmax};
use crate::scalar::Scalar;

/// Softmax class of a target-side symbol: EOS is class 0, content symbol `i`
/// is class `i - 2`.
pub fn output_class(symbol: usize) -> Result<usize> {
    match symbol {
        EOS => Ok(0),
        s if s >= RESERVED_SYMBOLS => Ok(s - (RESERVED_SYMBOLS - 1)),
        s => Err(Error::Vocabulary(format!("symbol {s} is not a target-side output"))),
    }
}

fn class_symbol(class: usize) -> usize {
    if class == 0 {
        EOS
    } else {
        class + RESERVED_SYMBOLS - 1
    }
}

/// Summed negative log-likelihood over the scored positions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub nll: f64,
    pub positions: usize,
}

impl LossReport {
    pub fn perplexity(&self) -> f64 {
        if self.positions == 0 {
            1.0
        } else {
            (self.nll / self.positions as f64).exp()
        }
    }

    pub fn merge(&mut self, other: &LossReport) {
        self.nll += other.nll;
        self.positions += other.positions;
    }
}

/// Everything the backward pass needs from one forward pass.
#[derive(Clone, Debug)]
pub struct StepTrace<T> {
    joint: Vec<usize>,
    generation: u64,
    rows: Vec<usize>,
    states: Vec<RecurrentState<T>>,
    caches: Vec<StepCache<T>>,
    first_scored: usize,
    probs: Vec<Vec<T>>,
    classes: Vec<usize>,
}

impl<T> StepTrace<T> {
    /// The joint sequence this trace was recorded on.
    pub fn joint(&self) -> &[usize] {
        &self.joint
    }

    pub fn steps(&self) -> usize {
        self.caches.len()
    }

    /// Index of the first step whose prediction is scored.
    pub fn first_scored(&self) -> usize {
        self.first_scored
    }

    /// Softmax distributions at the scored steps.
    pub fn probabilities(&self) -> &[Vec<T>] {
        &self.probs
    }

    /// Gold classes at the scored steps.
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn states(&self) -> &[RecurrentState<T>] {
        &self.states
    }

    /// Per-step activations: LSTM gates, memory signals and reads.
    pub fn caches(&self) -> &[StepCache<T>] {
        &self.caches
    }
}

impl<T: Scalar> StepTrace<T> {
    /// Smallest distance to a min/max tie over all memory steps; `None` for
    /// controllers without memory.
    pub fn tie_margin(&self) -> Result<Option<T>> {
        let mut out: Option<T> = None;
        for (state, cache) in self.states.iter().zip(&self.caches) {
            if let (Some(mem), Some(sig)) = (&state.memory, &cache.signals) {
                let m = crate::memory::tie_margin(mem, sig)?;
                out = Some(out.map_or(m, |o| o.min(m)));
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct ForwardOutput<T> {
    /// Logits at the scored steps: the SEP input through the last target
    /// input, `|target| + 1` rows.
    pub logits: Vec<Vec<T>>,
    pub loss: LossReport,
    pub trace: StepTrace<T>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decoded {
    pub tokens: Vec<usize>,
    pub truncated: bool,
}

impl<T: Scalar> Model<T> {
    /// Embedding row for joint position `pos`.
    fn input_row(&self, joint: &[usize], pos: usize, sep: usize) -> usize {
        let s = joint[pos];
        if pos > sep && s >= RESERVED_SYMBOLS {
            self.config().source_vocab + s
        } else {
            s
        }
    }

    fn embed(&self, row: usize) -> &[T] {
        let e = self.config().embedding;
        &self.params().get(self.layout().embedding)[row * e..(row + 1) * e]
    }

    fn logits(&self, output: &[T]) -> Vec<T> {
        let l = self.layout();
        let mut z = vec![T::zero(); self.config().output_classes()];
        affine(self.params().get(l.softmax_w), self.params().get(l.softmax_b), output, &mut z);
        z
    }

    fn check_example(&self, ex: &TransductionExample) -> Result<()> {
        let cfg = self.config();
        let expected = super::encode_example_unchecked(&ex.source, &ex.target);
        if ex.joint != expected {
            return Err(Error::Vocabulary("joint sequence does not match source/target".into()));
        }
        let max_src = RESERVED_SYMBOLS + cfg.source_vocab;
        let max_tgt = RESERVED_SYMBOLS + cfg.target_vocab;
        if ex.source.iter().any(|&s| !(RESERVED_SYMBOLS..max_src).contains(&s))
            || ex.target.iter().any(|&s| !(RESERVED_SYMBOLS..max_tgt).contains(&s))
        {
            return Err(Error::Vocabulary("symbol outside the model vocabulary".into()));
        }
        Ok(())
    }

    /// Runs the joint sequence and scores the target segment and EOS.
    pub fn forward(&self, ex: &TransductionExample) -> Result<ForwardOutput<T>> {
        self.check_example(ex)?;
        let joint = &ex.joint;
        let sep = ex.separator();
        let steps = joint.len() - 1;
        let mut states = Vec::with_capacity(steps + 1);
        let mut caches = Vec::with_capacity(steps);
        let mut rows = Vec::with_capacity(steps);
        let mut logits = Vec::new();
        let mut probs = Vec::new();
        let mut classes = Vec::new();
        let mut loss = LossReport::default();
        states.push(initial_state(self));
        for t in 0..steps {
            let row = self.input_row(joint, t, sep);
            let (next, output, cache) = step(self, &states[t], self.embed(row))?;
            if t >= sep {
                let z = self.logits(&output);
                if z.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("logits at joint position {t}")));
                }
                let class = output_class(joint[t + 1])?;
                let mut p = vec![T::zero(); z.len()];
                softmax(&z, &mut p);
                let lp = crate::linalg::log_sum_exp(&z) - z[class];
                loss.nll += lp.to_f64();
                loss.positions += 1;
                logits.push(z);
                probs.push(p);
                classes.push(class);
            }
            rows.push(row);
            states.push(next);
            caches.push(cache);
        }
        if !loss.nll.is_finite() {
            return Err(Error::NonFinite("sequence loss".into()));
        }
        Ok(ForwardOutput {
            logits,
            loss,
            trace: StepTrace {
                joint: joint.clone(),
                generation: self.generation(),
                rows,
                states,
                caches,
                first_scored: sep,
                probs,
                classes,
            },
        })
    }

    /// Gradient of the summed loss of one forward pass.
    pub fn backward(&self, trace: &StepTrace<T>) -> Result<ParamSet<T>> {
        let mut grads = ParamSet::zeros_like(self.params());
        self.backward_into(trace, None, &mut grads)?;
        Ok(grads)
    }

    /// Accumulates into `grads` the gradient of `sum_k w_k * nll_k` over the
    /// scored steps; `None` weights every step by one.
    pub fn backward_into(
        &self,
        trace: &StepTrace<T>,
        weights: Option<&[T]>,
        grads: &mut ParamSet<T>,
    ) -> Result<()> {
        if trace.generation != self.generation() || trace.states.len() != trace.caches.len() + 1 {
            return Err(Error::StaleTrace("trace was recorded with different parameters".into()));
        }
        if !grads.same_layout(self.params()) {
            return Err(Error::StaleTrace("gradient buffer layout differs from the model".into()));
        }
        if let Some(w) = weights {
            crate::error::check_len("position weights", trace.probs.len(), w.len())?;
        }
        let layout = self.layout();
        let e = self.config().embedding;
        let mut d_next = StateAdjoint::zeros_like(trace.states.last().expect("non-empty trace"));
        let mut d_out = vec![T::zero(); self.config().output_width()];
        for t in (0..trace.steps()).rev() {
            d_out.iter_mut().for_each(|v| *v = T::zero());
            if t >= trace.first_scored {
                let k = t - trace.first_scored;
                let w = weights.map_or(T::one(), |w| w[k]);
                let mut dz = trace.probs[k].clone();
                dz[trace.classes[k]] -= T::one();
                dz.iter_mut().for_each(|v| *v *= w);
                let output = &trace.caches[t].output;
                {
                    let (dw, db) = split_two(grads, layout.softmax_w, layout.softmax_b);
                    affine_backward_params(&dz, output, dw, db);
                }
                affine_backward_input(self.params().get(layout.softmax_w), &dz, &mut d_out);
            }
            let (dx, d_prev) = step_backward(
                self,
                &trace.states[t],
                &trace.states[t + 1],
                &trace.caches[t],
                &d_out,
                &d_next,
                grads,
            )?;
            let row = trace.rows[t];
            let emb = &mut grads.get_mut(layout.embedding)[row * e..(row + 1) * e];
            for (g, d) in emb.iter_mut().zip(&dx) {
                *g += *d;
            }
            d_next = d_prev;
        }
        for (ids, d) in layout.layers.iter().zip(&d_next.hidden) {
            for (g, v) in grads.get_mut(ids.h0).iter_mut().zip(&d.h) {
                *g += *v;
            }
        }
        Ok(())
    }

    /// Feeds `SOS source SEP` and then its own argmax predictions until EOS or
    /// `max_len` target symbols.
    pub fn greedy_decode(&self, source: &[usize], max_len: usize) -> Result<Decoded> {
        let cfg = self.config();
        let max_src = RESERVED_SYMBOLS + cfg.source_vocab;
        if let Some(&bad) = source.iter().find(|&&s| !(RESERVED_SYMBOLS..max_src).contains(&s)) {
            return Err(Error::Vocabulary(format!("source symbol {bad} outside the model vocabulary")));
        }
        let mut state = initial_state(self);
        let mut output = Vec::new();
        for &row in std::iter::once(&SOS).chain(source).chain(std::iter::once(&SEP)) {
            let (next, out, _) = step(self, &state, self.embed(row))?;
            state = next;
            output = out;
        }
        let mut tokens = Vec::new();
        loop {
            let z = self.logits(&output);
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("logits at decode step {}", tokens.len())));
            }
            let symbol = class_symbol(argmax(&z));
            if symbol == EOS {
                return Ok(Decoded {
                    tokens,
                    truncated: false,
                });
            }
            if tokens.len() == max_len {
                return Ok(Decoded {
                    tokens,
                    truncated: true,
                });
            }
            tokens.push(symbol);
            let (next, out, _) = step(self, &state, self.embed(cfg.source_vocab + symbol))?;
            state = next;
            output = out;
        }
    }
}

fn split_two<T>(p: &mut ParamSet<T>, a: usize, b: usize) -> (&mut [T], &mut [T]) {
    debug_assert!(a < b);
    let (lo, hi) = p.groups.split_at_mut(b);
    (&mut lo[a].data, &mut hi[0].data)
}
