//! Continuous stacks, queues and double-ended queues.
//!
//! A memory is a pure state-transition function with no trainable parameters:
//! `(state, signals) -> (state', read)`. States are immutable values; every
//! step returns a fresh one. The backward functions return the exact adjoints
//! of one step given the adjoints flowing into its outputs.

pub mod ops;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{axpy, dot};
use crate::scalar::Scalar;
pub use ops::End;
use ops::Fault;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemoryKind {
    Stack,
    Queue,
    Deque,
}

impl MemoryKind {
    /// Number of (push, pop, value) triples the structure consumes per step.
    pub fn ends(self) -> usize {
        match self {
            MemoryKind::Deque => 2,
            _ => 1,
        }
    }

    /// Rows appended per step.
    pub fn rows_per_step(self) -> usize {
        self.ends()
    }

    /// The end each read traverses from, in read order.
    pub fn read_ends(self) -> &'static [End] {
        match self {
            MemoryKind::Stack => &[End::Top],
            MemoryKind::Queue => &[End::Bottom],
            MemoryKind::Deque => &[End::Top, End::Bottom],
        }
    }
}

impl std::fmt::Display for MemoryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MemoryKind::Stack => "stack",
            MemoryKind::Queue => "queue",
            MemoryKind::Deque => "deque",
        })
    }
}

/// Append-only record of pushed vectors.
///
/// Rows are indexed bottom (0) to top. Rows pushed at the top go to `above`
/// and rows pushed at the bottom (deque only) go to `below`, both in push
/// order, so growing at either end never moves an existing row.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueMatrix<T> {
    width: usize,
    below: Vec<T>,
    above: Vec<T>,
}

impl<T: Scalar> ValueMatrix<T> {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            below: Vec::new(),
            above: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> usize {
        (self.below.len() + self.above.len()) / self.width.max(1)
    }

    pub fn row(&self, i: usize) -> &[T] {
        let m = self.width;
        let nb = self.below.len() / m;
        if i < nb {
            let j = nb - 1 - i;
            &self.below[j * m..(j + 1) * m]
        } else {
            let j = i - nb;
            &self.above[j * m..(j + 1) * m]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> + '_ {
        (0..self.rows()).map(move |i| self.row(i))
    }

    /// Rows bottom to top, flattened.
    pub fn to_flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.below.len() + self.above.len());
        for row in self.iter() {
            out.extend_from_slice(row);
        }
        out
    }

    fn push_top(&mut self, v: &[T]) {
        self.above.extend_from_slice(v);
    }

    fn push_bottom(&mut self, v: &[T]) {
        self.below.extend_from_slice(v);
    }
}

/// `(V_t, s_t)`: value rows and one strength per row.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryState<T> {
    kind: MemoryKind,
    values: ValueMatrix<T>,
    strengths: Vec<T>,
}

impl<T: Scalar> MemoryState<T> {
    /// The empty structure (`V_0`, `s_0` zero-sized).
    pub fn new(kind: MemoryKind, width: usize) -> Self {
        Self {
            kind,
            values: ValueMatrix::new(width),
            strengths: Vec::new(),
        }
    }

    pub fn kind(&self) -> MemoryKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.values.width
    }

    pub fn values(&self) -> &ValueMatrix<T> {
        &self.values
    }

    pub fn strengths(&self) -> &[T] {
        &self.strengths
    }

    pub fn rows(&self) -> usize {
        self.strengths.len()
    }

    pub fn steps(&self) -> usize {
        self.rows() / self.kind.rows_per_step()
    }

    pub fn total_strength(&self) -> T {
        self.strengths.iter().copied().sum()
    }
}

/// What the controller hands to one end of a structure at one step.
#[derive(Clone, Debug, PartialEq)]
pub struct EndSignals<T> {
    /// `v_t`
    pub value: Vec<T>,
    /// `u_t`
    pub pop: T,
    /// `d_t`
    pub push: T,
}

/// Per-step controls. Stacks and queues take one [`EndSignals`]; a deque takes
/// two, top first.
#[derive(Clone, Debug, PartialEq)]
pub struct MemorySignals<T> {
    pub ends: Vec<EndSignals<T>>,
}

impl<T: Scalar> MemorySignals<T> {
    pub fn single(value: Vec<T>, pop: T, push: T) -> Self {
        Self {
            ends: vec![EndSignals { value, pop, push }],
        }
    }

    pub fn double(top: EndSignals<T>, bot: EndSignals<T>) -> Self {
        Self {
            ends: vec![top, bot],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Read<T> {
    pub vector: Vec<T>,
    pub weights: Vec<T>,
}

/// One read for stacks and queues; for a deque `reads[0]` is the top read and
/// `reads[1]` the bottom read.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadResult<T> {
    pub reads: Vec<Read<T>>,
}

impl<T> ReadResult<T> {
    pub fn read(&self) -> &[T] {
        &self.reads[0].vector
    }

    pub fn top(&self) -> &[T] {
        &self.reads[0].vector
    }

    pub fn bot(&self) -> &[T] {
        &self.reads[self.reads.len() - 1].vector
    }
}

/// Adjoint of a [`MemoryState`]: one entry per value component and strength.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryGrad<T> {
    /// Rows bottom to top, flattened.
    pub values: Vec<T>,
    pub strengths: Vec<T>,
}

impl<T: Scalar> MemoryGrad<T> {
    pub fn zeros_like(state: &MemoryState<T>) -> Self {
        Self {
            values: vec![T::zero(); state.rows() * state.width()],
            strengths: vec![T::zero(); state.rows()],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EndAdjoints<T> {
    pub value: Vec<T>,
    pub pop: T,
    pub push: T,
}

/// Adjoints of one step's inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryAdjoints<T> {
    pub prev: MemoryGrad<T>,
    pub ends: Vec<EndAdjoints<T>>,
}

fn validate_signals<T: Scalar>(state: &MemoryState<T>, sig: &MemorySignals<T>) -> Result<()> {
    check_len("signal ends", state.kind.ends(), sig.ends.len())?;
    for end in &sig.ends {
        check_len("pushed value width", state.width(), end.value.len())?;
        if !end.value.iter().all(|x| x.is_finite()) {
            return Err(Error::NumericInput("pushed value is not finite".into()));
        }
        for (name, x) in [("pop", end.pop), ("push", end.push)] {
            if !x.is_finite() {
                return Err(Error::NumericInput(format!("{name} signal is not finite")));
            }
            if x < T::zero() || x > T::one() {
                return Err(Error::NumericInput(format!(
                    "{name} signal {x} outside [0, 1]"
                )));
            }
        }
    }
    Ok(())
}

fn expect_kind<T>(state: &MemoryState<T>, kind: MemoryKind) -> Result<()> {
    if state.kind == kind {
        Ok(())
    } else {
        Err(Error::KindMismatch {
            expected: kind.to_string(),
            found: state.kind.to_string(),
        })
    }
}

fn weighted_read<T: Scalar>(values: &ValueMatrix<T>, weights: Vec<T>) -> Read<T> {
    let mut vector = vec![T::zero(); values.width()];
    for (row, &w) in values.iter().zip(&weights) {
        if w != T::zero() {
            axpy(w, row, &mut vector);
        }
    }
    Read { vector, weights }
}

/// Pop from the top, push at the top, read from the top.
pub fn stack_step<T: Scalar>(
    state: &MemoryState<T>,
    sig: &MemorySignals<T>,
) -> Result<(MemoryState<T>, ReadResult<T>)> {
    expect_kind(state, MemoryKind::Stack)?;
    step(state, sig)
}

/// Pop from the front (bottom), push at the back (top), read from the front.
pub fn queue_step<T: Scalar>(
    state: &MemoryState<T>,
    sig: &MemorySignals<T>,
) -> Result<(MemoryState<T>, ReadResult<T>)> {
    expect_kind(state, MemoryKind::Queue)?;
    step(state, sig)
}

/// Pop top, then pop bottom, then push at both ends and read both ends.
pub fn deque_step<T: Scalar>(
    state: &MemoryState<T>,
    sig: &MemorySignals<T>,
) -> Result<(MemoryState<T>, ReadResult<T>)> {
    expect_kind(state, MemoryKind::Deque)?;
    step(state, sig)
}

/// One step of whichever structure `state` holds.
pub fn step<T: Scalar>(
    state: &MemoryState<T>,
    sig: &MemorySignals<T>,
) -> Result<(MemoryState<T>, ReadResult<T>)> {
    validate_signals(state, sig)?;
    let mut values = state.values.clone();
    let strengths = match state.kind {
        MemoryKind::Stack | MemoryKind::Queue => {
            let from = state.kind.read_ends()[0];
            let end = &sig.ends[0];
            let mut s = ops::pop(&state.strengths, end.pop, from);
            s.push(end.push);
            values.push_top(&end.value);
            s
        }
        MemoryKind::Deque => {
            let (top, bot) = (&sig.ends[0], &sig.ends[1]);
            let after_top = ops::pop(&state.strengths, top.pop, End::Top);
            let after_both = ops::pop(&after_top, bot.pop, End::Bottom);
            let mut s = Vec::with_capacity(after_both.len() + 2);
            s.push(bot.push);
            s.extend_from_slice(&after_both);
            s.push(top.push);
            values.push_bottom(&bot.value);
            values.push_top(&top.value);
            s
        }
    };
    let reads = state
        .kind
        .read_ends()
        .iter()
        .map(|&from| weighted_read(&values, ops::read_weights(&strengths, from)))
        .collect();
    Ok((
        MemoryState {
            kind: state.kind,
            values,
            strengths,
        },
        ReadResult { reads },
    ))
}

/// Adjoints of one stack step.
pub fn stack_step_backward<T: Scalar>(
    prev: &MemoryState<T>,
    sig: &MemorySignals<T>,
    next: &MemoryState<T>,
    read: &ReadResult<T>,
    upstream_state: &MemoryGrad<T>,
    upstream_reads: &[Vec<T>],
) -> Result<MemoryAdjoints<T>> {
    expect_kind(prev, MemoryKind::Stack)?;
    step_backward(prev, sig, next, read, upstream_state, upstream_reads)
}

/// Adjoints of one queue or deque step; `kind` must match the state.
pub fn queue_deque_step_backward<T: Scalar>(
    kind: MemoryKind,
    prev: &MemoryState<T>,
    sig: &MemorySignals<T>,
    next: &MemoryState<T>,
    read: &ReadResult<T>,
    upstream_state: &MemoryGrad<T>,
    upstream_reads: &[Vec<T>],
) -> Result<MemoryAdjoints<T>> {
    if kind == MemoryKind::Stack {
        return Err(Error::KindMismatch {
            expected: "queue or deque".into(),
            found: kind.to_string(),
        });
    }
    expect_kind(prev, kind)?;
    step_backward(prev, sig, next, read, upstream_state, upstream_reads)
}

/// Adjoints of one step of any structure.
///
/// `prev`, `sig`, `next` and `read` must be exactly the inputs and outputs of
/// [`step`]. `upstream_state` is the adjoint of `next`, `upstream_reads` the
/// adjoint of each read vector.
pub fn step_backward<T: Scalar>(
    prev: &MemoryState<T>,
    sig: &MemorySignals<T>,
    next: &MemoryState<T>,
    read: &ReadResult<T>,
    upstream_state: &MemoryGrad<T>,
    upstream_reads: &[Vec<T>],
) -> Result<MemoryAdjoints<T>> {
    step_backward_with_fault(
        prev,
        sig,
        next,
        read,
        upstream_state,
        upstream_reads,
        Fault::None,
    )
}

#[doc(hidden)]
pub fn step_backward_with_fault<T: Scalar>(
    prev: &MemoryState<T>,
    sig: &MemorySignals<T>,
    next: &MemoryState<T>,
    read: &ReadResult<T>,
    upstream_state: &MemoryGrad<T>,
    upstream_reads: &[Vec<T>],
    fault: Fault,
) -> Result<MemoryAdjoints<T>> {
    let kind = prev.kind;
    expect_kind(next, kind)?;
    let m = prev.width();
    let per_step = kind.rows_per_step();
    check_len("signal ends", kind.ends(), sig.ends.len())?;
    check_len("next state rows", prev.rows() + per_step, next.rows())?;
    check_len("reads", kind.read_ends().len(), read.reads.len())?;
    check_len("upstream reads", kind.read_ends().len(), upstream_reads.len())?;
    check_len("upstream strengths", next.rows(), upstream_state.strengths.len())?;
    check_len("upstream values", next.rows() * m, upstream_state.values.len())?;

    let rows = next.rows();
    let mut g_values = upstream_state.values.clone();
    let mut g_strengths = upstream_state.strengths.clone();

    for ((r, g_read), &from) in read.reads.iter().zip(upstream_reads).zip(kind.read_ends()) {
        check_len("read adjoint width", m, g_read.len())?;
        check_len("read weights", rows, r.weights.len())?;
        let mut g_weights = vec![T::zero(); rows];
        for (i, row) in next.values.iter().enumerate() {
            g_weights[i] = dot(g_read, row);
            if r.weights[i] != T::zero() {
                axpy(r.weights[i], g_read, &mut g_values[i * m..(i + 1) * m]);
            }
        }
        let g_s = ops::read_weights_backward(&next.strengths, from, &g_weights, fault);
        for (a, b) in g_strengths.iter_mut().zip(g_s) {
            *a += b;
        }
    }

    match kind {
        MemoryKind::Stack | MemoryKind::Queue => {
            let n = prev.rows();
            let from = kind.read_ends()[0];
            let end = &sig.ends[0];
            let (g_prev_s, g_pop) =
                ops::pop_backward(&prev.strengths, end.pop, from, &g_strengths[..n], fault);
            Ok(MemoryAdjoints {
                prev: MemoryGrad {
                    values: g_values[..n * m].to_vec(),
                    strengths: g_prev_s,
                },
                ends: vec![EndAdjoints {
                    value: g_values[n * m..].to_vec(),
                    pop: g_pop,
                    push: g_strengths[n],
                }],
            })
        }
        MemoryKind::Deque => {
            let n = prev.rows();
            let (top, bot) = (&sig.ends[0], &sig.ends[1]);
            let after_top = ops::pop(&prev.strengths, top.pop, End::Top);
            let g_both = &g_strengths[1..n + 1];
            let (g_after_top, g_pop_bot) =
                ops::pop_backward(&after_top, bot.pop, End::Bottom, g_both, fault);
            let (g_prev_s, g_pop_top) =
                ops::pop_backward(&prev.strengths, top.pop, End::Top, &g_after_top, fault);
            Ok(MemoryAdjoints {
                prev: MemoryGrad {
                    values: g_values[m..(n + 1) * m].to_vec(),
                    strengths: g_prev_s,
                },
                ends: vec![
                    EndAdjoints {
                        value: g_values[(n + 1) * m..].to_vec(),
                        pop: g_pop_top,
                        push: g_strengths[n + 1],
                    },
                    EndAdjoints {
                        value: g_values[..m].to_vec(),
                        pop: g_pop_bot,
                        push: g_strengths[0],
                    },
                ],
            })
        }
    }
}

/// Distance of the step's min/max decisions to the nearest tie. Finite
/// difference checks skip configurations where this is small.
pub fn tie_margin<T: Scalar>(prev: &MemoryState<T>, sig: &MemorySignals<T>) -> Result<T> {
    let (next, _) = step(prev, sig)?;
    let mut margin = match prev.kind {
        MemoryKind::Stack | MemoryKind::Queue => {
            ops::pop_margin(&prev.strengths, sig.ends[0].pop, prev.kind.read_ends()[0])
        }
        MemoryKind::Deque => {
            let after_top = ops::pop(&prev.strengths, sig.ends[0].pop, End::Top);
            ops::pop_margin(&prev.strengths, sig.ends[0].pop, End::Top)
                .min(ops::pop_margin(&after_top, sig.ends[1].pop, End::Bottom))
        }
    };
    for &from in prev.kind.read_ends() {
        margin = margin.min(ops::read_margin(&next.strengths, from));
    }
    Ok(margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn stack_three_step_trace() {
        let mut st = MemoryState::<f64>::new(MemoryKind::Stack, 1);
        let mut reads = Vec::new();
        for (v, u, d) in [(1.0, 0.0, 0.8), (2.0, 0.1, 0.5), (3.0, 0.9, 0.9)] {
            let (next, r) = stack_step(&st, &MemorySignals::single(vec![v], u, d)).unwrap();
            reads.push(r.read()[0]);
            st = next;
        }
        assert!(close(st.strengths(), &[0.3, 0.0, 0.9]));
        assert!(close(&reads, &[0.8, 1.5, 2.8]));
    }

    #[test]
    fn pop_on_empty_stack_is_noop() {
        let st = MemoryState::<f64>::new(MemoryKind::Stack, 2);
        let (next, r) = step(&st, &MemorySignals::single(vec![0.25, -1.5], 0.7, 1.0)).unwrap();
        assert_eq!(next.strengths(), &[1.0]);
        assert_eq!(r.read(), &[0.25, -1.5]);
    }

    #[test]
    fn full_pop_then_full_push() {
        for kind in [MemoryKind::Stack, MemoryKind::Queue] {
            let st = MemoryState::<f64>::new(kind, 1);
            let (st, _) = step(&st, &MemorySignals::single(vec![4.0], 0.0, 1.0)).unwrap();
            let (st, r) = step(&st, &MemorySignals::single(vec![7.0], 1.0, 1.0)).unwrap();
            assert_eq!(st.strengths(), &[0.0, 1.0]);
            assert_eq!(r.read(), &[7.0]);
        }
    }

    #[test]
    fn queue_reads_the_front() {
        let st = MemoryState::<f64>::new(MemoryKind::Queue, 1);
        let (st, _) = queue_step(&st, &MemorySignals::single(vec![1.0], 0.0, 1.0)).unwrap();
        let (_, r) = queue_step(&st, &MemorySignals::single(vec![2.0], 0.0, 1.0)).unwrap();
        assert_eq!(r.read(), &[1.0]);
    }

    #[test]
    fn queue_two_step_fractional() {
        let st = MemoryState::<f64>::new(MemoryKind::Queue, 1);
        let (st, _) = queue_step(&st, &MemorySignals::single(vec![1.0], 0.0, 0.6)).unwrap();
        let (st, r) = queue_step(&st, &MemorySignals::single(vec![2.0], 0.5, 0.9)).unwrap();
        assert!(close(st.strengths(), &[0.1, 0.9]));
        assert!((r.read()[0] - 1.9).abs() < 1e-12);
    }

    #[test]
    fn deque_one_step_from_empty() {
        let st = MemoryState::<f64>::new(MemoryKind::Deque, 1);
        let sig = MemorySignals::double(
            EndSignals { value: vec![2.0], pop: 0.0, push: 0.5 },
            EndSignals { value: vec![1.0], pop: 0.0, push: 0.5 },
        );
        let (st, r) = deque_step(&st, &sig).unwrap();
        assert_eq!(st.strengths(), &[0.5, 0.5]);
        assert_eq!(st.values().row(0), &[1.0]);
        assert_eq!(st.values().row(1), &[2.0]);
        assert!((r.top()[0] - 1.5).abs() < 1e-12);
        assert!((r.bot()[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn deque_grows_at_both_ends_without_moving_rows() {
        let mut st = MemoryState::<f64>::new(MemoryKind::Deque, 1);
        for t in 0..3 {
            let x = t as f64;
            let sig = MemorySignals::double(
                EndSignals { value: vec![10.0 + x], pop: 0.1, push: 0.5 },
                EndSignals { value: vec![-10.0 - x], pop: 0.1, push: 0.5 },
            );
            st = step(&st, &sig).unwrap().0;
        }
        let rows: Vec<f64> = st.values().iter().map(|r| r[0]).collect();
        assert_eq!(rows, vec![-12.0, -11.0, -10.0, 10.0, 11.0, 12.0]);
        assert_eq!(st.steps(), 3);
    }

    #[test]
    fn errors_on_bad_inputs() {
        let st = MemoryState::<f64>::new(MemoryKind::Stack, 2);
        assert!(matches!(
            step(&st, &MemorySignals::single(vec![1.0], 0.0, 1.0)),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            step(&st, &MemorySignals::single(vec![1.0, f64::NAN], 0.0, 1.0)),
            Err(Error::NumericInput(_))
        ));
        assert!(matches!(
            step(&st, &MemorySignals::single(vec![1.0, 0.0], 1.5, 1.0)),
            Err(Error::NumericInput(_))
        ));
        assert!(matches!(
            queue_step(&st, &MemorySignals::single(vec![1.0, 0.0], 0.0, 1.0)),
            Err(Error::KindMismatch { .. })
        ));
    }

    #[test]
    fn backward_single_push_read() {
        // dL/dr = 1, r = d * v  =>  dL/dv = d, dL/dd = v, dL/du = 0
        let st = MemoryState::<f64>::new(MemoryKind::Stack, 1);
        let sig = MemorySignals::single(vec![5.0], 0.3, 0.8);
        let (next, r) = step(&st, &sig).unwrap();
        let up = MemoryGrad::zeros_like(&next);
        let adj = stack_step_backward(&st, &sig, &next, &r, &up, &[vec![1.0]]).unwrap();
        assert!((adj.ends[0].value[0] - 0.8).abs() < 1e-15);
        assert!((adj.ends[0].push - 5.0).abs() < 1e-15);
        assert_eq!(adj.ends[0].pop, 0.0);
    }
}
