use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::controller::RESERVED_SYMBOLS;
use crate::error::{Error, Result};

pub const SOS: usize = 0;
pub const SEP: usize = 1;
pub const EOS: usize = 2;

/// Separate source and target symbol tables. Content symbols are numbered from
/// 3 in each table; 0, 1 and 2 are SOS, SEP and EOS in both.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    source: Vec<String>,
    target: Vec<String>,
    source_index: HashMap<String, usize>,
    target_index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    source: Vec<String>,
    target: Vec<String>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = |syms: &[String]| {
            syms.iter()
                .enumerate()
                .map(|(i, s)| (s.clone(), i + RESERVED_SYMBOLS))
                .collect()
        };
        Self {
            source_index: index(&r.source),
            target_index: index(&r.target),
            source: r.source,
            target: r.target,
        }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        Self {
            source: v.source,
            target: v.target,
        }
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.target == other.target
    }
}

const RESERVED_NAMES: [&str; 3] = ["<s>", "|||", "</s>"];

impl Vocabulary {
    pub fn new(source: Vec<String>, target: Vec<String>) -> Result<Self> {
        for (side, syms) in [("source", &source), ("target", &target)] {
            let mut seen = std::collections::HashSet::new();
            for s in syms {
                if RESERVED_NAMES.contains(&s.as_str()) {
                    return Err(Error::Vocabulary(format!("{side} symbol `{s}` is reserved")));
                }
                if !seen.insert(s) {
                    return Err(Error::Vocabulary(format!("duplicate {side} symbol `{s}`")));
                }
            }
        }
        Ok(VocabularyRepr { source, target }.into())
    }

    /// `n` meaningless symbols shared by both sides: `a1 .. an`.
    pub fn synthetic(n: usize) -> Self {
        let syms: Vec<String> = (1..=n).map(|i| format!("a{i}")).collect();
        VocabularyRepr {
            source: syms.clone(),
            target: syms,
        }
        .into()
    }

    /// Number of source content symbols.
    pub fn source_size(&self) -> usize {
        self.source.len()
    }

    /// Number of target content symbols.
    pub fn target_size(&self) -> usize {
        self.target.len()
    }

    pub fn source_index(&self, symbol: &str) -> Result<usize> {
        self.source_index
            .get(symbol)
            .copied()
            .ok_or_else(|| Error::Vocabulary(format!("unknown source symbol `{symbol}`")))
    }

    pub fn target_index(&self, symbol: &str) -> Result<usize> {
        self.target_index
            .get(symbol)
            .copied()
            .ok_or_else(|| Error::Vocabulary(format!("unknown target symbol `{symbol}`")))
    }

    pub fn source_symbol(&self, index: usize) -> Option<&str> {
        symbol(&self.source, index)
    }

    pub fn target_symbol(&self, index: usize) -> Option<&str> {
        symbol(&self.target, index)
    }

    pub fn is_source_content(&self, index: usize) -> bool {
        (RESERVED_SYMBOLS..RESERVED_SYMBOLS + self.source.len()).contains(&index)
    }

    pub fn is_target_content(&self, index: usize) -> bool {
        (RESERVED_SYMBOLS..RESERVED_SYMBOLS + self.target.len()).contains(&index)
    }

    /// Maps symbol strings to an encoded example.
    pub fn encode_symbols<S: AsRef<str>>(
        &self,
        source: &[S],
        target: &[S],
    ) -> Result<TransductionExample> {
        let src = source
            .iter()
            .map(|s| self.source_index(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let tgt = target
            .iter()
            .map(|s| self.target_index(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        encode_example(&src, &tgt, self)
    }
}

fn symbol(table: &[String], index: usize) -> Option<&str> {
    match index {
        SOS | SEP | EOS => Some(RESERVED_NAMES[index]),
        i => table.get(i - RESERVED_SYMBOLS).map(String::as_str),
    }
}

/// A source/target pair and its joint form `SOS source SEP target EOS`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransductionExample {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    pub joint: Vec<usize>,
}

impl TransductionExample {
    /// Position of SEP in the joint sequence.
    pub fn separator(&self) -> usize {
        self.source.len() + 1
    }
}

pub fn encode_example(
    source: &[usize],
    target: &[usize],
    vocab: &Vocabulary,
) -> Result<TransductionExample> {
    if let Some(&bad) = source.iter().find(|&&i| !vocab.is_source_content(i)) {
        return Err(Error::Vocabulary(format!("source index {bad} is not a content symbol")));
    }
    if let Some(&bad) = target.iter().find(|&&i| !vocab.is_target_content(i)) {
        return Err(Error::Vocabulary(format!("target index {bad} is not a content symbol")));
    }
    Ok(TransductionExample {
        source: source.to_vec(),
        target: target.to_vec(),
        joint: encode_example_unchecked(source, target),
    })
}

pub(crate) fn encode_example_unchecked(source: &[usize], target: &[usize]) -> Vec<usize> {
    let mut joint = Vec::with_capacity(source.len() + target.len() + 3);
    joint.push(SOS);
    joint.extend_from_slice(source);
    joint.push(SEP);
    joint.extend_from_slice(target);
    joint.push(EOS);
    joint
}

/// Splits a joint sequence back into `(source, target)`.
pub fn decode_joint(joint: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let bad = || Error::Vocabulary("joint sequence is not SOS .. SEP .. EOS".into());
    if joint.len() < 3 || joint[0] != SOS || joint[joint.len() - 1] != EOS {
        return Err(bad());
    }
    let body = &joint[1..joint.len() - 1];
    let sep = body.iter().position(|&i| i == SEP).ok_or_else(bad)?;
    let (src, tgt) = (&body[..sep], &body[sep + 1..]);
    if src.iter().chain(tgt).any(|&i| i < RESERVED_SYMBOLS) {
        return Err(bad());
    }
    Ok((src.to_vec(), tgt.to_vec()))
}
