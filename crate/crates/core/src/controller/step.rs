//! One timestep of a controller, forward and backward.

use super::lstm::{lstm_cell, lstm_cell_backward, LstmCache, LstmParams};
use super::{ControllerKind, Model, ParamSet};
use crate::error::{check_len, Error, Result};
use crate::linalg::{affine, affine_backward_input, affine_backward_params, axpy, dot, sigmoid};
use crate::memory::{self, EndSignals, MemoryGrad, MemorySignals, MemoryState, ReadResult};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct LstmState<T> {
    pub h: Vec<T>,
    pub c: Vec<T>,
}

/// `H_t = (h_t, r_t, (V_t, s_t))`. Deep LSTMs carry one [`LstmState`] per
/// layer and no reads or memory.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentState<T> {
    pub hidden: Vec<LstmState<T>>,
    pub reads: Vec<Vec<T>>,
    pub memory: Option<MemoryState<T>>,
}

/// Everything [`step_backward`] needs from the forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct StepCache<T> {
    pub lstm: Vec<LstmCache<T>>,
    /// Activated output projection `o_t`.
    pub output: Vec<T>,
    pub signals: Option<MemorySignals<T>>,
    pub read: Option<ReadResult<T>>,
}

/// Adjoint of a [`RecurrentState`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateAdjoint<T> {
    pub hidden: Vec<LstmState<T>>,
    pub reads: Vec<Vec<T>>,
    pub memory: Option<MemoryGrad<T>>,
}

impl<T: Scalar> StateAdjoint<T> {
    pub fn zeros_like(state: &RecurrentState<T>) -> Self {
        Self {
            hidden: state
                .hidden
                .iter()
                .map(|s| LstmState {
                    h: vec![T::zero(); s.h.len()],
                    c: vec![T::zero(); s.c.len()],
                })
                .collect(),
            reads: state.reads.iter().map(|r| vec![T::zero(); r.len()]).collect(),
            memory: state.memory.as_ref().map(MemoryGrad::zeros_like),
        }
    }
}

/// `h_0` from the trainable parameters; cell state, reads and memory start at
/// zero and are not trained.
pub fn initial_state<T: Scalar>(model: &Model<T>) -> RecurrentState<T> {
    let cfg = model.config();
    let hidden = model
        .layout()
        .layers
        .iter()
        .map(|ids| LstmState {
            h: model.params().get(ids.h0).to_vec(),
            c: vec![T::zero(); cfg.hidden],
        })
        .collect();
    RecurrentState {
        hidden,
        reads: vec![vec![T::zero(); cfg.memory_width]; cfg.read_count()],
        memory: cfg
            .kind
            .memory()
            .map(|kind| MemoryState::new(kind, cfg.memory_width)),
    }
}

fn lstm_params<'a, T: Scalar>(model: &'a Model<T>, layer: usize) -> LstmParams<'a, T> {
    let ids = &model.layout().layers[layer];
    LstmParams {
        weights: model.params().get(ids.weights),
        bias: model.params().get(ids.bias),
        input: model.config().lstm_input_width(layer),
        hidden: model.config().hidden,
    }
}

fn output_projection<T: Scalar>(model: &Model<T>, top: &[T]) -> Vec<T> {
    let l = model.layout();
    let mut out = vec![T::zero(); model.config().output_width()];
    affine(model.params().get(l.out_w), model.params().get(l.out_b), top, &mut out);
    out.iter_mut().for_each(|x| *x = x.tanh());
    out
}

/// One step of the memory-augmented layer.
///
/// The input is concatenated with the previous read(s) and fed to the LSTM;
/// its new hidden state produces push/pop strengths (sigmoid), pushed values
/// and the layer output (tanh); the memory is then stepped.
pub fn controller_step<T: Scalar>(
    model: &Model<T>,
    prev: &RecurrentState<T>,
    input: &[T],
) -> Result<(RecurrentState<T>, Vec<T>, StepCache<T>)> {
    let cfg = model.config();
    let kind = cfg.kind.memory().ok_or_else(|| Error::KindMismatch {
        expected: "memory-augmented controller".into(),
        found: cfg.kind.to_string(),
    })?;
    let mem = prev.memory.as_ref().ok_or_else(|| Error::KindMismatch {
        expected: kind.to_string(),
        found: "no memory".into(),
    })?;
    if mem.kind() != kind {
        return Err(Error::KindMismatch {
            expected: kind.to_string(),
            found: mem.kind().to_string(),
        });
    }
    check_len("controller input", cfg.embedding, input.len())?;
    check_len("previous reads", kind.ends(), prev.reads.len())?;
    check_len("hidden layers", 1, prev.hidden.len())?;

    let mut x = Vec::with_capacity(cfg.lstm_input_width(0));
    x.extend_from_slice(input);
    for r in &prev.reads {
        check_len("previous read", cfg.memory_width, r.len())?;
        x.extend_from_slice(r);
    }
    let (h, c, cache) = lstm_cell(lstm_params(model, 0), &prev.hidden[0].h, &prev.hidden[0].c, &x)?;

    let p = model.params();
    let ends = model
        .layout()
        .ends
        .iter()
        .map(|ids| {
            let push = sigmoid(dot(p.get(ids.push_w), &h) + p.get(ids.push_b)[0]);
            let pop = sigmoid(dot(p.get(ids.pop_w), &h) + p.get(ids.pop_b)[0]);
            let mut value = vec![T::zero(); cfg.memory_width];
            affine(p.get(ids.value_w), p.get(ids.value_b), &h, &mut value);
            value.iter_mut().for_each(|v| *v = v.tanh());
            EndSignals { value, pop, push }
        })
        .collect();
    let signals = MemorySignals { ends };
    let output = output_projection(model, &h);
    let (memory, read) = memory::step(mem, &signals)?;

    let state = RecurrentState {
        hidden: vec![LstmState { h, c }],
        reads: read.reads.iter().map(|r| r.vector.clone()).collect(),
        memory: Some(memory),
    };
    let cache = StepCache {
        lstm: vec![cache],
        output: output.clone(),
        signals: Some(signals),
        read: Some(read),
    };
    Ok((state, output, cache))
}

/// One step of a stacked LSTM: layer `k` reads layer `k-1`'s new hidden
/// state; the output is a tanh projection of the top layer.
pub fn deep_lstm_step<T: Scalar>(
    model: &Model<T>,
    prev: &RecurrentState<T>,
    input: &[T],
) -> Result<(RecurrentState<T>, Vec<T>, StepCache<T>)> {
    let cfg = model.config();
    let layers = match cfg.kind {
        ControllerKind::DeepLstm(l) => l,
        other => {
            return Err(Error::KindMismatch {
                expected: "deep LSTM".into(),
                found: other.to_string(),
            })
        }
    };
    check_len("controller input", cfg.embedding, input.len())?;
    check_len("hidden layers", layers, prev.hidden.len())?;

    let mut hidden: Vec<LstmState<T>> = Vec::with_capacity(layers);
    let mut caches = Vec::with_capacity(layers);
    for (l, state) in prev.hidden.iter().enumerate() {
        let x = if l == 0 {
            input.to_vec()
        } else {
            hidden[l - 1].h.clone()
        };
        let (h, c, cache) = lstm_cell(lstm_params(model, l), &state.h, &state.c, &x)?;
        hidden.push(LstmState { h, c });
        caches.push(cache);
    }
    let output = output_projection(model, &hidden[layers - 1].h);
    Ok((
        RecurrentState {
            hidden,
            reads: Vec::new(),
            memory: None,
        },
        output.clone(),
        StepCache {
            lstm: caches,
            output,
            signals: None,
            read: None,
        },
    ))
}

/// Dispatches on the model's controller kind.
pub fn step<T: Scalar>(
    model: &Model<T>,
    prev: &RecurrentState<T>,
    input: &[T],
) -> Result<(RecurrentState<T>, Vec<T>, StepCache<T>)> {
    match model.config().kind {
        ControllerKind::Memory(_) => controller_step(model, prev, input),
        ControllerKind::DeepLstm(_) => deep_lstm_step(model, prev, input),
    }
}

/// Adjoint of one [`step`].
///
/// `d_output` is the adjoint of `o_t`, `d_next` that of `H_t`. Parameter
/// gradients are accumulated into `grads`; returns the adjoints of the step
/// input and of `H_{t-1}`.
pub fn step_backward<T: Scalar>(
    model: &Model<T>,
    prev: &RecurrentState<T>,
    next: &RecurrentState<T>,
    cache: &StepCache<T>,
    d_output: &[T],
    d_next: &StateAdjoint<T>,
    grads: &mut ParamSet<T>,
) -> Result<(Vec<T>, StateAdjoint<T>)> {
    let cfg = model.config();
    let layout = model.layout();
    let p = model.params();
    let layers = layout.layers.len();
    check_len("output adjoint", cfg.output_width(), d_output.len())?;
    check_len("hidden adjoint layers", layers, d_next.hidden.len())?;
    check_len("cached layers", layers, cache.lstm.len())?;

    let top_h = &next.hidden[layers - 1].h;
    let one = T::one();
    let dz_out: Vec<T> = d_output
        .iter()
        .zip(&cache.output)
        .map(|(&g, &o)| g * (one - o * o))
        .collect();
    {
        let (dw, db) = split_two(grads, layout.out_w, layout.out_b);
        affine_backward_params(&dz_out, top_h, dw, db);
    }
    let mut dh_top = d_next.hidden[layers - 1].h.clone();
    affine_backward_input(p.get(layout.out_w), &dz_out, &mut dh_top);

    let mut d_prev_memory = None;
    if let (Some(signals), Some(read)) = (&cache.signals, &cache.read) {
        let prev_mem = prev.memory.as_ref().ok_or_else(|| Error::StaleTrace("missing memory state".into()))?;
        let next_mem = next.memory.as_ref().ok_or_else(|| Error::StaleTrace("missing memory state".into()))?;
        let up_mem = d_next
            .memory
            .as_ref()
            .ok_or_else(|| Error::StaleTrace("missing memory adjoint".into()))?;
        let adj = memory::step_backward(prev_mem, signals, next_mem, read, up_mem, &d_next.reads)?;
        let h = &next.hidden[0].h;
        for ((ids, sig), end) in layout.ends.iter().zip(&signals.ends).zip(&adj.ends) {
            let dz_push = end.push * sig.push * (one - sig.push);
            let dz_pop = end.pop * sig.pop * (one - sig.pop);
            axpy(dz_push, h, grads.get_mut(ids.push_w));
            grads.get_mut(ids.push_b)[0] += dz_push;
            axpy(dz_push, p.get(ids.push_w), &mut dh_top);
            axpy(dz_pop, h, grads.get_mut(ids.pop_w));
            grads.get_mut(ids.pop_b)[0] += dz_pop;
            axpy(dz_pop, p.get(ids.pop_w), &mut dh_top);
            let dz_value: Vec<T> = end
                .value
                .iter()
                .zip(&sig.value)
                .map(|(&g, &v)| g * (one - v * v))
                .collect();
            {
                let (dw, db) = split_two(grads, ids.value_w, ids.value_b);
                affine_backward_params(&dz_value, h, dw, db);
            }
            affine_backward_input(p.get(ids.value_w), &dz_value, &mut dh_top);
        }
        d_prev_memory = Some(adj.prev);
    }

    // Walk the layers top-down; each layer's input adjoint feeds the layer below.
    let mut d_hidden: Vec<LstmState<T>> = Vec::with_capacity(layers);
    let mut dh = dh_top;
    let mut dx = Vec::new();
    for l in (0..layers).rev() {
        let ids = &layout.layers[l];
        let (dw, db) = split_two(grads, ids.weights, ids.bias);
        let (dx_l, dh_prev, dc_prev) =
            lstm_cell_backward(lstm_params(model, l), &cache.lstm[l], &dh, &d_next.hidden[l].c, dw, db);
        d_hidden.push(LstmState {
            h: dh_prev,
            c: dc_prev,
        });
        if l > 0 {
            dh = d_next.hidden[l - 1].h.clone();
            for (a, b) in dh.iter_mut().zip(&dx_l) {
                *a += *b;
            }
        }
        dx = dx_l;
    }
    d_hidden.reverse();

    let e = cfg.embedding;
    let m = cfg.memory_width;
    let reads = (0..cfg.read_count())
        .map(|k| dx[e + k * m..e + (k + 1) * m].to_vec())
        .collect();
    dx.truncate(e);
    Ok((
        dx,
        StateAdjoint {
            hidden: d_hidden,
            reads,
            memory: d_prev_memory,
        },
    ))
}

fn split_two<T: Scalar>(set: &mut ParamSet<T>, a: usize, b: usize) -> (&mut [T], &mut [T]) {
    debug_assert!(a < b);
    let (lo, hi) = set.groups.split_at_mut(b);
    (&mut lo[a].data, &mut hi[0].data)
}
