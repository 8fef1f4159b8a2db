use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grammar::{Expansion, Sym, SyncGrammar};
use crate::error::{Error, Result};

/// Expansions deeper than this abort the attempt.
pub const MAX_DEPTH: usize = 64;
pub const DEFAULT_ATTEMPTS: usize = 10_000;

/// A node of a synchronous derivation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    /// Index into [`SyncGrammar::expansions`].
    pub expansion: usize,
    /// Member index (1-based) when the expansion is a terminal class.
    pub member: Option<usize>,
    /// One child per source-side nonterminal, in source order.
    pub children: Vec<Derivation>,
    /// Half-open span of this node's yield in the source string.
    pub source_span: (usize, usize),
    /// Half-open span of this node's yield in the target string.
    pub target_span: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ItgSample {
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub derivation: Derivation,
}

struct Aborted;

/// Draws derivations from the root until one has a source length in
/// `[lo, hi]`.
pub fn sample_itg<R: Rng + ?Sized>(
    grammar: &SyncGrammar,
    lo: usize,
    hi: usize,
    max_attempts: usize,
    rng: &mut R,
) -> Result<ItgSample> {
    if lo > hi {
        return Err(Error::Config(format!("empty length range [{lo}, {hi}]")));
    }
    for _ in 0..max_attempts {
        let mut emitted = 0;
        let Ok(tree) = expand(grammar, &grammar.root, 0, hi, &mut emitted, rng) else {
            continue;
        };
        if emitted < lo {
            continue;
        }
        let mut tree = tree;
        let (source, target) = yields(grammar, &mut tree);
        return Ok(ItgSample {
            source,
            target,
            derivation: tree,
        });
    }
    Err(Error::RejectionExhausted {
        attempts: max_attempts,
    })
}

fn expand<R: Rng + ?Sized>(
    g: &SyncGrammar,
    head: &str,
    depth: usize,
    hi: usize,
    emitted: &mut usize,
    rng: &mut R,
) -> std::result::Result<Derivation, Aborted> {
    if depth > MAX_DEPTH {
        return Err(Aborted);
    }
    let ids = g.rules_for(head);
    let mut u: f64 = rng.gen();
    let mut chosen = *ids.last().expect("every head has expansions");
    for &i in ids {
        let mass = match &g.expansions[i] {
            Expansion::Rule(r) => r.prob,
            Expansion::Class(c) => c.prob * c.count as f64,
        };
        if u < mass {
            chosen = i;
            break;
        }
        u -= mass;
    }
    let node = |member, children| Derivation {
        expansion: chosen,
        member,
        children,
        source_span: (0, 0),
        target_span: (0, 0),
    };
    match &g.expansions[chosen] {
        Expansion::Class(c) => {
            *emitted += 1;
            if *emitted > hi {
                return Err(Aborted);
            }
            Ok(node(Some(rng.gen_range(1..=c.count)), Vec::new()))
        }
        Expansion::Rule(r) => {
            let mut children = Vec::new();
            for s in &r.source {
                match s {
                    Sym::Terminal(_) => {
                        *emitted += 1;
                        if *emitted > hi {
                            return Err(Aborted);
                        }
                    }
                    Sym::NonTerminal { head, .. } => {
                        children.push(expand(g, head, depth + 1, hi, emitted, rng)?);
                    }
                }
            }
            Ok(node(None, children))
        }
    }
}

/// Source and target strings of a derivation; fills in the node spans.
pub fn yields(g: &SyncGrammar, tree: &mut Derivation) -> (Vec<String>, Vec<String>) {
    let mut src = Vec::new();
    source_yield(g, tree, &mut src);
    let mut tgt = Vec::new();
    target_yield(g, tree, &mut tgt);
    (src, tgt)
}

fn source_yield(g: &SyncGrammar, node: &mut Derivation, out: &mut Vec<String>) {
    let start = out.len();
    match &g.expansions[node.expansion] {
        Expansion::Class(c) => out.push(c.source_symbol(node.member.unwrap_or(0))),
        Expansion::Rule(r) => {
            let mut k = 0;
            for s in &r.source {
                match s {
                    Sym::Terminal(t) => out.push(t.clone()),
                    Sym::NonTerminal { .. } => {
                        source_yield(g, &mut node.children[k], out);
                        k += 1;
                    }
                }
            }
        }
    }
    node.source_span = (start, out.len());
}

fn target_yield(g: &SyncGrammar, node: &mut Derivation, out: &mut Vec<String>) {
    let start = out.len();
    match &g.expansions[node.expansion] {
        Expansion::Class(c) => out.push(c.target_symbol(node.member.unwrap_or(0))),
        Expansion::Rule(r) => {
            let links = r.links();
            for (j, s) in r.target.iter().enumerate() {
                match s {
                    Sym::Terminal(t) => out.push(t.clone()),
                    Sym::NonTerminal { .. } => {
                        let k = links.iter().position(|&(_, tj)| tj == j).expect("linked");
                        target_yield(g, &mut node.children[k], out);
                    }
                }
            }
        }
    }
    node.target_span = (start, out.len());
}

/// Checks that `sample` is exactly what its derivation generates under
/// `grammar` and that the tree is well formed.
pub fn validate(grammar: &SyncGrammar, sample: &ItgSample) -> Result<()> {
    let bad = |m: String| Err(Error::Task(format!("derivation check failed: {m}")));
    let mut tree = sample.derivation.clone();
    if !check_node(grammar, &tree, &grammar.root, 0)? {
        return bad("tree does not follow the grammar".into());
    }
    let (src, tgt) = yields(grammar, &mut tree);
    if src != sample.source || tgt != sample.target {
        return bad("yield differs from the sample".into());
    }
    if tree != sample.derivation {
        return bad("recorded spans differ from the yield".into());
    }
    Ok(())
}

fn check_node(g: &SyncGrammar, node: &Derivation, head: &str, depth: usize) -> Result<bool> {
    if depth > MAX_DEPTH || !g.rules_for(head).contains(&node.expansion) {
        return Ok(false);
    }
    Ok(match &g.expansions[node.expansion] {
        Expansion::Class(c) => {
            node.children.is_empty() && node.member.is_some_and(|m| (1..=c.count).contains(&m))
        }
        Expansion::Rule(r) => {
            let heads: Vec<&str> = r
                .source
                .iter()
                .filter_map(|s| match s {
                    Sym::NonTerminal { head, .. } => Some(head.as_str()),
                    _ => None,
                })
                .collect();
            if node.member.is_some() || heads.len() != node.children.len() {
                return Ok(false);
            }
            for (child, h) in node.children.iter().zip(heads) {
                if !check_node(g, child, h, depth + 1)? {
                    return Ok(false);
                }
            }
            true
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn svo_sample_moves_verb() {
        let g = SyncGrammar::builtin("svo-sov").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let s = sample_itg(&g, 3, 20, DEFAULT_ATTEMPTS, &mut rng).unwrap();
            validate(&g, &s).unwrap();
            assert!((3..=20).contains(&s.source.len()));
            assert!(s.target.last().unwrap().starts_with("vo"));
        }
    }

    #[test]
    fn tampering_is_detected() {
        let g = SyncGrammar::builtin("gender").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = sample_itg(&g, 8, 64, DEFAULT_ATTEMPTS, &mut rng).unwrap();
        validate(&g, &s).unwrap();
        s.target.swap(0, 1);
        assert!(validate(&g, &s).is_err());
    }

    #[test]
    fn impossible_range_exhausts_budget() {
        let g = SyncGrammar::parse("t", "1 A -> x | y").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            sample_itg(&g, 2, 5, 100, &mut rng),
            Err(Error::RejectionExhausted { attempts: 100 })
        ));
    }
}
