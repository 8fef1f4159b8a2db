//! Classical stacks, queues and deques used as oracles for the discrete limit
//! of the continuous structures.

use std::collections::VecDeque;

use ndsq::memory::{self, EndSignals, MemoryKind, MemorySignals, MemoryState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WIDTH: usize = 2;

/// One discrete step: per end, (pop, push).
pub type Op = Vec<(bool, bool)>;

fn value(t: usize, end: usize) -> Vec<f64> {
    let x = t as f64 + 1.0;
    vec![x + 0.5 * end as f64, -0.25 * x - end as f64]
}

#[derive(Clone, Debug, Default)]
pub struct Reference {
    items: VecDeque<Vec<f64>>,
}

impl Reference {
    /// Applies `op` at time `t` and returns the reads (top first for a deque).
    pub fn step(&mut self, kind: MemoryKind, op: &[(bool, bool)], t: usize) -> Vec<Vec<f64>> {
        let zero = vec![0.0; WIDTH];
        match kind {
            MemoryKind::Stack => {
                let (pop, push) = op[0];
                if pop {
                    self.items.pop_back();
                }
                if push {
                    self.items.push_back(value(t, 0));
                }
                vec![self.items.back().cloned().unwrap_or(zero)]
            }
            MemoryKind::Queue => {
                let (pop, push) = op[0];
                if pop {
                    self.items.pop_front();
                }
                if push {
                    self.items.push_back(value(t, 0));
                }
                vec![self.items.front().cloned().unwrap_or(zero)]
            }
            MemoryKind::Deque => {
                let ((pop_top, push_top), (pop_bot, push_bot)) = (op[0], op[1]);
                if pop_top {
                    self.items.pop_back();
                }
                if pop_bot {
                    self.items.pop_front();
                }
                if push_bot {
                    self.items.push_front(value(t, 1));
                }
                if push_top {
                    self.items.push_back(value(t, 0));
                }
                vec![
                    self.items.back().cloned().unwrap_or(zero.clone()),
                    self.items.front().cloned().unwrap_or(zero),
                ]
            }
        }
    }
}

fn signals(op: &[(bool, bool)], t: usize) -> MemorySignals<f64> {
    let b = |x: bool| if x { 1.0 } else { 0.0 };
    let end = |e: usize| EndSignals {
        value: value(t, e),
        pop: b(op[e].0),
        push: b(op[e].1),
    };
    if op.len() == 2 {
        MemorySignals::double(end(0), end(1))
    } else {
        MemorySignals::single(end(0).value, end(0).pop, end(0).push)
    }
}

/// Largest absolute difference between continuous and reference reads after
/// one step of each.
fn compare(
    kind: MemoryKind,
    state: &MemoryState<f64>,
    reference: &mut Reference,
    op: &[(bool, bool)],
    t: usize,
) -> (MemoryState<f64>, f64) {
    let (next, reads) = memory::step(state, &signals(op, t)).unwrap();
    let want = reference.step(kind, op, t);
    let err = reads
        .reads
        .iter()
        .zip(&want)
        .flat_map(|(r, w)| r.vector.iter().zip(w).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    (next, err)
}

pub fn all_ops(kind: MemoryKind) -> Vec<Op> {
    let single = [(false, false), (false, true), (true, false), (true, true)];
    match kind.ends() {
        1 => single.iter().map(|&s| vec![s]).collect(),
        _ => single
            .iter()
            .flat_map(|&a| single.iter().map(move |&b| vec![a, b]))
            .collect(),
    }
}

/// Walks every binary signal sequence up to `depth` steps, sharing prefixes.
/// Returns the number of sequences checked and the worst read error.
pub fn exhaustive(kind: MemoryKind, depth: usize) -> (usize, f64) {
    fn walk(
        kind: MemoryKind,
        ops: &[Op],
        state: &MemoryState<f64>,
        reference: &Reference,
        t: usize,
        depth: usize,
        acc: &mut (usize, f64),
    ) {
        if t == depth {
            return;
        }
        for op in ops {
            let mut r = reference.clone();
            let (next, err) = compare(kind, state, &mut r, op, t);
            acc.0 += 1;
            acc.1 = acc.1.max(err);
            walk(kind, ops, &next, &r, t + 1, depth, acc);
        }
    }
    let ops = all_ops(kind);
    let mut acc = (0, 0.0);
    walk(kind, &ops, &MemoryState::new(kind, WIDTH), &Reference::default(), 0, depth, &mut acc);
    acc
}

/// `n` random binary sequences with lengths uniform in `1..=max_len`.
pub fn random(kind: MemoryKind, n: usize, max_len: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ops = all_ops(kind);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let len = rng.gen_range(1..=max_len);
        let mut state = MemoryState::new(kind, WIDTH);
        let mut reference = Reference::default();
        for t in 0..len {
            let op = &ops[rng.gen_range(0..ops.len())];
            let (next, err) = compare(kind, &state, &mut reference, op, t);
            worst = worst.max(err);
            state = next;
        }
    }
    worst
}
