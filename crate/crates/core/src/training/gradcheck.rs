use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{Model, ModelConfig};
use crate::error::{Error, Result};
use crate::memory::{self, ops::Fault, EndSignals, MemoryGrad, MemoryKind, MemorySignals, MemoryState};
use crate::seqmodel::{encode_example, Vocabulary};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-6;
/// Trials whose min/max decisions lie closer than this to a tie are redrawn.
pub const TIE_EXCLUSION: f64 = 1e-4;
const REL_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupError {
    pub name: String,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub trials: usize,
    /// Draws rejected for lying near a tie.
    pub skipped: usize,
    pub groups: Vec<GroupError>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.groups.iter().all(|g| g.passed)
    }

    pub fn max_error(&self) -> f64 {
        self.groups.iter().map(|g| g.max_rel_error).fold(0.0, f64::max)
    }

    fn record(&mut self, name: &str, err: f64) {
        match self.groups.iter_mut().find(|g| g.name == name) {
            Some(g) => g.max_rel_error = g.max_rel_error.max(err),
            None => self.groups.push(GroupError {
                name: name.to_string(),
                max_rel_error: err,
                passed: true,
            }),
        }
    }

    fn finish(mut self) -> Self {
        for g in &mut self.groups {
            g.passed = g.max_rel_error < self.tolerance;
        }
        self
    }
}

/// Relative error with a floor on the denominator.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

const MAX_REDRAWS: usize = 1000;

struct MemoryTrial {
    kind: MemoryKind,
    width: usize,
    signals: Vec<MemorySignals<f64>>,
    read_weights: Vec<Vec<Vec<f64>>>,
    value_weights: Vec<f64>,
    strength_weights: Vec<f64>,
}

impl MemoryTrial {
    fn draw(kind: MemoryKind, width: usize, steps: usize, rng: &mut ChaCha8Rng) -> Self {
        let end = |rng: &mut ChaCha8Rng| EndSignals {
            value: (0..width).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            pop: rng.gen_range(0.02..0.98),
            push: rng.gen_range(0.02..0.98),
        };
        let signals = (0..steps)
            .map(|_| MemorySignals {
                ends: (0..kind.ends()).map(|_| end(rng)).collect(),
            })
            .collect();
        let reads = kind.read_ends().len();
        let read_weights = (0..steps)
            .map(|_| {
                (0..reads)
                    .map(|_| (0..width).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect()
            })
            .collect();
        let rows = steps * kind.rows_per_step();
        Self {
            kind,
            width,
            signals,
            read_weights,
            value_weights: (0..rows * width).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            strength_weights: (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        }
    }

    /// A random linear functional of every read and of the final state.
    fn loss(&self) -> Result<f64> {
        let mut state = MemoryState::new(self.kind, self.width);
        let mut loss = 0.0;
        for (sig, cs) in self.signals.iter().zip(&self.read_weights) {
            let (next, read) = memory::step(&state, sig)?;
            for (r, c) in read.reads.iter().zip(cs) {
                loss += r.vector.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
            }
            state = next;
        }
        loss += state.values().to_flat().iter().zip(&self.value_weights).map(|(a, b)| a * b).sum::<f64>();
        loss += state.strengths().iter().zip(&self.strength_weights).map(|(a, b)| a * b).sum::<f64>();
        Ok(loss)
    }

    fn min_margin(&self) -> Result<f64> {
        let mut state = MemoryState::new(self.kind, self.width);
        let mut margin = f64::INFINITY;
        for sig in &self.signals {
            margin = margin.min(memory::tie_margin(&state, sig)?);
            state = memory::step(&state, sig)?.0;
        }
        Ok(margin)
    }

    /// Analytic adjoints of every signal, per step and end.
    fn adjoints(&self, fault: Fault) -> Result<Vec<Vec<memory::EndAdjoints<f64>>>> {
        let mut states = vec![MemoryState::new(self.kind, self.width)];
        let mut reads = Vec::new();
        for sig in &self.signals {
            let (next, read) = memory::step(states.last().expect("state"), sig)?;
            states.push(next);
            reads.push(read);
        }
        let mut up = MemoryGrad {
            values: self.value_weights.clone(),
            strengths: self.strength_weights.clone(),
        };
        let mut out = Vec::with_capacity(self.signals.len());
        for t in (0..self.signals.len()).rev() {
            let adj = memory::step_backward_with_fault(
                &states[t],
                &self.signals[t],
                &states[t + 1],
                &reads[t],
                &up,
                &self.read_weights[t],
                fault,
            )?;
            up = adj.prev;
            out.push(adj.ends);
        }
        out.reverse();
        Ok(out)
    }
}

/// Finite-difference check of a memory structure's backward pass on its own:
/// `trials` random signal sequences of `steps` steps at width `width`.
pub fn memory_grad_check(
    kind: MemoryKind,
    width: usize,
    steps: usize,
    trials: usize,
    tolerance: f64,
    seed: u64,
) -> Result<GradCheckReport> {
    memory_grad_check_with_fault(kind, width, steps, trials, tolerance, seed, Fault::None)
}

#[doc(hidden)]
pub fn memory_grad_check_with_fault(
    kind: MemoryKind,
    width: usize,
    steps: usize,
    trials: usize,
    tolerance: f64,
    seed: u64,
    fault: Fault,
) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport {
        tolerance,
        trials,
        skipped: 0,
        groups: Vec::new(),
    };
    for _ in 0..trials {
        let mut trial = MemoryTrial::draw(kind, width, steps, &mut rng);
        let mut redraws = 0;
        while trial.min_margin()? < TIE_EXCLUSION {
            report.skipped += 1;
            redraws += 1;
            if redraws > MAX_REDRAWS {
                return Err(Error::Config("could not draw a configuration away from ties".into()));
            }
            trial = MemoryTrial::draw(kind, width, steps, &mut rng);
        }
        let adj = trial.adjoints(fault)?;
        for t in 0..steps {
            for e in 0..kind.ends() {
                let fd = |trial: &mut MemoryTrial, get: &dyn Fn(&mut MemoryTrial) -> &mut f64| -> Result<f64> {
                    let orig = *get(trial);
                    *get(trial) = orig + FD_STEP;
                    let up = trial.loss()?;
                    *get(trial) = orig - FD_STEP;
                    let down = trial.loss()?;
                    *get(trial) = orig;
                    Ok((up - down) / (2.0 * FD_STEP))
                };
                let n = fd(&mut trial, &|tr| &mut tr.signals[t].ends[e].pop)?;
                report.record("pop", relative_error(adj[t][e].pop, n));
                let n = fd(&mut trial, &|tr| &mut tr.signals[t].ends[e].push)?;
                report.record("push", relative_error(adj[t][e].push, n));
                for i in 0..width {
                    let n = fd(&mut trial, &|tr| &mut tr.signals[t].ends[e].value[i])?;
                    report.record("value", relative_error(adj[t][e].value[i], n));
                }
            }
        }
    }
    Ok(report.finish())
}

/// Finite-difference check of the whole model on `trials` random small
/// models, each perturbed away from its initialisation, and random examples
/// with source and target length `length`. Reports per parameter group.
pub fn grad_check(
    config: &ModelConfig,
    length: usize,
    trials: usize,
    tolerance: f64,
    seed: u64,
) -> Result<GradCheckReport> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = Vocabulary::new(
        (0..config.source_vocab).map(|i| format!("s{i}")).collect(),
        (0..config.target_vocab).map(|i| format!("t{i}")).collect(),
    )?;
    let mut report = GradCheckReport {
        tolerance,
        trials,
        skipped: 0,
        groups: Vec::new(),
    };
    let mut done = 0;
    while done < trials {
        if report.skipped > MAX_REDRAWS {
            return Err(Error::Config("could not draw a configuration away from ties".into()));
        }
        let mut model = Model::<f64>::new(config.clone(), rng.gen())?;
        for x in model.params_mut().iter_mut() {
            *x += rng.gen_range(-0.3..0.3);
        }
        let src: Vec<usize> = (0..length).map(|_| 3 + rng.gen_range(0..config.source_vocab)).collect();
        let tgt: Vec<usize> = (0..length).map(|_| 3 + rng.gen_range(0..config.target_vocab)).collect();
        let ex = encode_example(&src, &tgt, &vocab)?;
        let out = model.forward(&ex)?;
        if out.trace.tie_margin()?.is_some_and(|m| m < TIE_EXCLUSION) {
            report.skipped += 1;
            continue;
        }
        let grads = model.backward(&out.trace)?;
        let mut probe = model.clone();
        for (g, group) in grads.groups.iter().enumerate() {
            let mut worst: f64 = 0.0;
            for (i, &analytic) in group.data.iter().enumerate() {
                let orig = model.params().groups[g].data[i];
                probe.params_mut().groups[g].data[i] = orig + FD_STEP;
                let up = probe.forward(&ex)?.loss.nll;
                probe.params_mut().groups[g].data[i] = orig - FD_STEP;
                let down = probe.forward(&ex)?.loss.nll;
                probe.params_mut().groups[g].data[i] = orig;
                worst = worst.max(relative_error(analytic, (up - down) / (2.0 * FD_STEP)));
            }
            report.record(&group.name, worst);
        }
        done += 1;
    }
    Ok(report.finish())
}
