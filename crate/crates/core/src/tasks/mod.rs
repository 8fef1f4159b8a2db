//! Synthetic transduction tasks and grammar-generated ones.

mod grammar;
mod itg;
mod synthetic;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use grammar::{Expansion, Sym, SyncGrammar, SyncRule, TerminalClass, ROOT};
pub use itg::{sample_itg, validate, yields, Derivation, ItgSample, DEFAULT_ATTEMPTS, MAX_DEPTH};
pub use synthetic::{bigram_flip, copy, reverse};

use crate::controller::RESERVED_SYMBOLS;
use crate::error::{Error, Result};
use crate::seqmodel::{encode_example, TransductionExample, Vocabulary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Copy,
    Reverse,
    BigramFlip,
    SvoSov,
    Gender,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::Copy,
        TaskKind::Reverse,
        TaskKind::BigramFlip,
        TaskKind::SvoSov,
        TaskKind::Gender,
    ];

    pub fn is_synthetic(self) -> bool {
        matches!(self, TaskKind::Copy | TaskKind::Reverse | TaskKind::BigramFlip)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Copy => "copy",
            TaskKind::Reverse => "reverse",
            TaskKind::BigramFlip => "bigram-flip",
            TaskKind::SvoSov => "svo-sov",
            TaskKind::Gender => "gender",
        })
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::Task(format!("unknown task `{s}`")))
    }
}

/// Where and how to draw examples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub min_len: usize,
    pub max_len: usize,
    /// Content symbols for the synthetic tasks; grammars fix their own.
    pub vocab: usize,
    pub seed: u64,
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
}

fn default_attempts() -> usize {
    DEFAULT_ATTEMPTS
}

/// RNG stream ids used by training and evaluation.
pub mod streams {
    pub const TRAIN: u64 = 0;
    pub const TRAIN_EVAL: u64 = 1;
    pub const TEST: u64 = 2;
}

/// Independent generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A task with its vocabulary; the unit every generator, trainer and
/// evaluator is handed.
#[derive(Clone, Debug)]
pub struct Task {
    kind: TaskKind,
    vocab: Vocabulary,
    grammar: Option<SyncGrammar>,
}

impl Task {
    /// `vocab` is the number of content symbols for the synthetic tasks and
    /// is ignored by the grammar tasks.
    pub fn new(kind: TaskKind, vocab: usize) -> Result<Self> {
        if kind.is_synthetic() {
            if vocab == 0 {
                return Err(Error::Config("vocabulary size must be positive".into()));
            }
            return Ok(Self {
                kind,
                vocab: Vocabulary::synthetic(vocab),
                grammar: None,
            });
        }
        let grammar = SyncGrammar::builtin(&kind.to_string())?;
        Self::from_grammar(kind, grammar)
    }

    /// A grammar task over a user-supplied grammar.
    pub fn from_grammar(kind: TaskKind, grammar: SyncGrammar) -> Result<Self> {
        let (src, tgt) = grammar.terminals();
        Ok(Self {
            kind,
            vocab: Vocabulary::new(src, tgt)?,
            grammar: Some(grammar),
        })
    }

    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn grammar(&self) -> Option<&SyncGrammar> {
        self.grammar.as_ref()
    }

    pub fn check_range(&self, lo: usize, hi: usize) -> Result<()> {
        if lo == 0 || lo > hi {
            return Err(Error::Config(format!("length range [{lo}, {hi}] needs 1 <= lo <= hi")));
        }
        if self.kind == TaskKind::BigramFlip && (lo % 2 != 0 || hi % 2 != 0) {
            return Err(Error::Config(format!(
                "bigram-flip needs even length bounds, got [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// Deterministic target for a synthetic task.
    pub fn transform(&self, source: &[usize]) -> Result<Vec<usize>> {
        match self.kind {
            TaskKind::Copy => Ok(copy(source)),
            TaskKind::Reverse => Ok(reverse(source)),
            TaskKind::BigramFlip => bigram_flip(source),
            k => Err(Error::Task(format!("`{k}` targets are not a function of the source"))),
        }
    }

    /// One example with source length in `[lo, hi]`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        lo: usize,
        hi: usize,
        max_attempts: usize,
        rng: &mut R,
    ) -> Result<TransductionExample> {
        self.check_range(lo, hi)?;
        match &self.grammar {
            None => {
                let len = if self.kind == TaskKind::BigramFlip {
                    2 * rng.gen_range(lo / 2..=hi / 2)
                } else {
                    rng.gen_range(lo..=hi)
                };
                let n = self.vocab.source_size();
                let source: Vec<usize> = (0..len)
                    .map(|_| RESERVED_SYMBOLS + rng.gen_range(0..n))
                    .collect();
                let target = self.transform(&source)?;
                encode_example(&source, &target, &self.vocab)
            }
            Some(g) => {
                let s = sample_itg(g, lo, hi, max_attempts, rng)?;
                self.vocab.encode_symbols(&s.source, &s.target)
            }
        }
    }

    /// `n` examples from stream `stream` of `config`.
    pub fn generate(&self, config: &SampleConfig, stream: u64, n: usize) -> Result<Vec<TransductionExample>> {
        let mut rng = stream_rng(config.seed, stream);
        (0..n)
            .map(|_| self.sample(config.min_len, config.max_len, config.max_attempts, &mut rng))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct Record {
    source: Vec<usize>,
    target: Vec<usize>,
}

/// One `{"source": [...], "target": [...]}` object per line.
pub fn write_jsonl<W: Write>(examples: &[TransductionExample], mut out: W) -> Result<()> {
    for ex in examples {
        serde_json::to_writer(
            &mut out,
            &Record {
                source: ex.source.clone(),
                target: ex.target.clone(),
            },
        )?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R, vocab: &Vocabulary) -> Result<Vec<TransductionExample>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: Record = serde_json::from_str(&line)?;
        out.push(encode_example(&r.source, &r.target, vocab)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in TaskKind::ALL {
            assert_eq!(k.to_string().parse::<TaskKind>().unwrap(), k);
            let j = serde_json::to_string(&k).unwrap();
            assert_eq!(j, format!("\"{k}\""));
        }
        assert!("nope".parse::<TaskKind>().is_err());
    }

    #[test]
    fn bigram_lengths_are_even() {
        let t = Task::new(TaskKind::BigramFlip, 8).unwrap();
        assert!(t.check_range(7, 10).is_err());
        let mut rng = stream_rng(1, 0);
        for _ in 0..100 {
            let ex = t.sample(2, 10, 1, &mut rng).unwrap();
            assert_eq!(ex.source.len() % 2, 0);
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let t = Task::new(TaskKind::Reverse, 16).unwrap();
        let cfg = SampleConfig {
            min_len: 1,
            max_len: 5,
            vocab: 16,
            seed: 3,
            max_attempts: 1,
        };
        let xs = t.generate(&cfg, streams::TRAIN, 20).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&xs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 20);
        assert!(text.starts_with("{\"source\":["));
        assert_eq!(read_jsonl(&buf[..], t.vocabulary()).unwrap(), xs);
    }

    #[test]
    fn streams_are_independent_and_reproducible() {
        let t = Task::new(TaskKind::Copy, 16).unwrap();
        let cfg = SampleConfig {
            min_len: 1,
            max_len: 8,
            vocab: 16,
            seed: 9,
            max_attempts: 1,
        };
        let a = t.generate(&cfg, 0, 10).unwrap();
        assert_eq!(a, t.generate(&cfg, 0, 10).unwrap());
        assert_ne!(a, t.generate(&cfg, 1, 10).unwrap());
    }
}
