//! Synchronous grammars in a small plain-text format.
//!
//! One rule per line, `#` starts a comment:
//!
//! ```text
//! 1     A -> S1 VT2 O3 | S1 O3 VT2
//! 1/5   S -> S1 rpi S2 VT3 | S1 rpo S2 VT3
//! 1/33  ST_i -> si_i | so_i
//! ```
//!
//! The probability is a decimal or a fraction. On each side, a token made of
//! an upper-case head name followed by digits is a linked nonterminal; the
//! same token must appear exactly once on each side. Everything else is a
//! terminal. A `X_i -> a_i | b_i` line declares a terminal class of `1/p`
//! equiprobable members `a1 .. an` paired with `b1 .. bn`.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sym {
    Terminal(String),
    /// A nonterminal occurrence; `link` is the full token, e.g. `VT2`.
    NonTerminal { head: String, link: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyncRule {
    pub head: String,
    pub prob: f64,
    pub source: Vec<Sym>,
    pub target: Vec<Sym>,
}

impl SyncRule {
    /// Target-side position of each source-side nonterminal.
    pub fn links(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, s) in self.source.iter().enumerate() {
            if let Sym::NonTerminal { link, .. } = s {
                let j = self
                    .target
                    .iter()
                    .position(|t| matches!(t, Sym::NonTerminal { link: l, .. } if l == link))
                    .expect("validated link");
                out.push((i, j));
            }
        }
        out
    }
}

/// `count` equiprobable terminal pairs `{source}{k} <-> {target}{k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TerminalClass {
    pub head: String,
    pub prob: f64,
    pub count: usize,
    pub source: String,
    pub target: String,
}

impl TerminalClass {
    pub fn source_symbol(&self, k: usize) -> String {
        format!("{}{}", self.source, k)
    }

    pub fn target_symbol(&self, k: usize) -> String {
        format!("{}{}", self.target, k)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expansion {
    Rule(SyncRule),
    Class(TerminalClass),
}

impl Expansion {
    pub fn head(&self) -> &str {
        match self {
            Expansion::Rule(r) => &r.head,
            Expansion::Class(c) => &c.head,
        }
    }

    /// Total probability mass this line contributes to its head.
    fn mass(&self) -> f64 {
        match self {
            Expansion::Rule(r) => r.prob,
            Expansion::Class(c) => c.prob * c.count as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyncGrammar {
    pub name: String,
    pub root: String,
    pub expansions: Vec<Expansion>,
    by_head: BTreeMap<String, Vec<usize>>,
}

pub const ROOT: &str = "A";

const SVO_SOV: &str = "\
1     A -> S1 VT2 O3 | S1 O3 VT2
1/5   S -> S1 S2 | S1 S2
1/5   S -> S1 rpi S2 VT3 | S1 rpo S2 VT3
3/5   S -> ST1 | ST1
1/5   O -> O1 O2 | O1 O2
1/5   O -> S1 rpi S2 VT3 | S1 rpo S2 VT3
3/5   O -> OT1 | OT1
1/33  ST_i -> si_i | so_i
1/33  OT_i -> oi_i | oo_i
1/33  VT_i -> vi_i | vo_i
";

const GENDER: &str = "\
1     A -> B1 | B1
1/4   B -> B1 or B2 | B1 oder B2
1/4   B -> S1 and S2 | S1 und S2
1/2   B -> B1 V1 | B1 V1
3/4   V -> W1 B2 | W1 B2
1/4   V -> W1 | W1
1/6   S -> the M1 | der M1
1/6   S -> the F1 | die F1
1/6   S -> the N1 | das N1
1/6   S -> a M1 | ein M1
1/6   S -> a F1 | eine F1
1/6   S -> a N1 | ein N1
1/25  W_i -> we_i | wg_i
1/25  M_i -> me_i | mg_i
1/25  F_i -> fe_i | fg_i
1/25  N_i -> ne_i | ng_i
";

impl SyncGrammar {
    /// One of the built-in grammars: `svo-sov` or `gender`.
    pub fn builtin(name: &str) -> Result<Self> {
        let text = match name {
            "svo-sov" => SVO_SOV,
            "gender" => GENDER,
            other => return Err(Error::Task(format!("unknown grammar `{other}`"))),
        };
        Self::parse(name, text)
    }

    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut expansions = Vec::new();
        let mut lines = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            expansions.push(parse_line(line).map_err(|message| Error::Grammar {
                line: no + 1,
                message,
            })?);
            lines.push(no + 1);
        }
        let heads: HashSet<String> = expansions.iter().map(|e| e.head().to_string()).collect();
        let mut by_head: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, (e, &line)) in expansions.iter_mut().zip(&lines).enumerate() {
            if let Expansion::Rule(r) = e {
                resolve(r, &heads).map_err(|message| Error::Grammar { line, message })?;
            }
            by_head.entry(e.head().to_string()).or_default().push(i);
        }
        if !by_head.contains_key(ROOT) {
            return Err(Error::Grammar {
                line: 0,
                message: format!("no rule for the root `{ROOT}`"),
            });
        }
        for (head, ids) in &by_head {
            let kinds: HashSet<bool> = ids
                .iter()
                .map(|&i| matches!(expansions[i], Expansion::Class(_)))
                .collect();
            if kinds.len() > 1 {
                return Err(Error::Grammar {
                    line: lines[ids[0]],
                    message: format!("`{head}` mixes rules and a terminal class"),
                });
            }
            let total: f64 = ids.iter().map(|&i| expansions[i].mass()).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Grammar {
                    line: lines[ids[0]],
                    message: format!("probabilities for `{head}` sum to {total}"),
                });
            }
        }
        Ok(Self {
            name: name.to_string(),
            root: ROOT.to_string(),
            expansions,
            by_head,
        })
    }

    /// Expansion indices for `head`, in file order.
    pub fn rules_for(&self, head: &str) -> &[usize] {
        self.by_head.get(head).map_or(&[], Vec::as_slice)
    }

    pub fn heads(&self) -> impl Iterator<Item = &str> {
        self.by_head.keys().map(String::as_str)
    }

    pub fn classes(&self) -> impl Iterator<Item = &TerminalClass> {
        self.expansions.iter().filter_map(|e| match e {
            Expansion::Class(c) => Some(c),
            _ => None,
        })
    }

    /// Total probability of the expansions of `head`.
    pub fn head_mass(&self, head: &str) -> f64 {
        self.rules_for(head).iter().map(|&i| self.expansions[i].mass()).sum()
    }

    /// Source and target terminal symbols, in order of first appearance.
    pub fn terminals(&self) -> (Vec<String>, Vec<String>) {
        let mut src = Vec::new();
        let mut tgt = Vec::new();
        let push = |v: &mut Vec<String>, s: String| {
            if !v.contains(&s) {
                v.push(s);
            }
        };
        for e in &self.expansions {
            match e {
                Expansion::Rule(r) => {
                    for s in &r.source {
                        if let Sym::Terminal(t) = s {
                            push(&mut src, t.clone());
                        }
                    }
                    for s in &r.target {
                        if let Sym::Terminal(t) = s {
                            push(&mut tgt, t.clone());
                        }
                    }
                }
                Expansion::Class(c) => {
                    for k in 1..=c.count {
                        push(&mut src, c.source_symbol(k));
                        push(&mut tgt, c.target_symbol(k));
                    }
                }
            }
        }
        (src, tgt)
    }
}

fn parse_prob(s: &str) -> std::result::Result<f64, String> {
    let p = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.parse().map_err(|_| format!("bad probability `{s}`"))?;
            let b: f64 = b.parse().map_err(|_| format!("bad probability `{s}`"))?;
            a / b
        }
        None => s.parse().map_err(|_| format!("bad probability `{s}`"))?,
    };
    if !(p > 0.0 && p <= 1.0) {
        return Err(format!("probability `{s}` outside (0, 1]"));
    }
    Ok(p)
}

fn is_head_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_uppercase())
}

fn parse_line(line: &str) -> std::result::Result<Expansion, String> {
    let (prob, rest) = line
        .split_once(char::is_whitespace)
        .ok_or("expected `p HEAD -> source | target`")?;
    let prob = parse_prob(prob)?;
    let (head, rhs) = rest.split_once("->").ok_or("missing `->`")?;
    let head = head.trim();
    let (src, tgt) = rhs.split_once('|').ok_or("missing `|` between the two sides")?;
    if tgt.contains('|') {
        return Err("more than one `|`".into());
    }
    if let Some(class) = head.strip_suffix("_i") {
        if !is_head_name(class) {
            return Err(format!("bad class name `{head}`"));
        }
        let side = |s: &str| -> std::result::Result<String, String> {
            let s = s.trim();
            match s.strip_suffix("_i") {
                Some(p) if !p.is_empty() && !p.contains(char::is_whitespace) => Ok(p.to_string()),
                _ => Err(format!("class side `{s}` must be a single `prefix_i`")),
            }
        };
        let count = (1.0 / prob).round();
        if (count * prob - 1.0).abs() > 1e-9 {
            return Err(format!("class probability {prob} is not 1/n"));
        }
        return Ok(Expansion::Class(TerminalClass {
            head: class.to_string(),
            prob,
            count: count as usize,
            source: side(src)?,
            target: side(tgt)?,
        }));
    }
    if !is_head_name(head) {
        return Err(format!("bad head `{head}`"));
    }
    let side = |s: &str| -> Vec<Sym> {
        s.split_whitespace().map(|t| Sym::Terminal(t.to_string())).collect()
    };
    let source = side(src);
    let target = side(tgt);
    if source.is_empty() || target.is_empty() {
        return Err("empty rule side".into());
    }
    Ok(Expansion::Rule(SyncRule {
        head: head.to_string(),
        prob,
        source,
        target,
    }))
}

/// Turns `NAME<digits>` tokens naming a known head into linked nonterminals
/// and checks that links pair one-to-one across the two sides.
fn resolve(rule: &mut SyncRule, heads: &HashSet<String>) -> std::result::Result<(), String> {
    let convert = |side: &mut Vec<Sym>| -> std::result::Result<Vec<String>, String> {
        let mut links = Vec::new();
        for s in side.iter_mut() {
            let Sym::Terminal(tok) = s else { continue };
            let split = tok.find(|c: char| c.is_ascii_digit());
            let Some(at) = split else {
                if tok.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                    return Err(format!("nonterminal `{tok}` has no link index"));
                }
                continue;
            };
            let (name, digits) = tok.split_at(at);
            if !is_head_name(name) || !digits.chars().all(|c| c.is_ascii_digit()) {
                if tok.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                    return Err(format!("malformed nonterminal `{tok}`"));
                }
                continue;
            }
            if !heads.contains(name) {
                return Err(format!("undefined nonterminal `{name}`"));
            }
            links.push(tok.clone());
            *s = Sym::NonTerminal {
                head: name.to_string(),
                link: tok.clone(),
            };
        }
        Ok(links)
    };
    let mut src = convert(&mut rule.source)?;
    let mut tgt = convert(&mut rule.target)?;
    src.sort();
    tgt.sort();
    if src.windows(2).any(|w| w[0] == w[1]) || tgt.windows(2).any(|w| w[0] == w[1]) {
        return Err("a link appears twice on one side".into());
    }
    if src != tgt {
        return Err(format!("links do not pair: {src:?} vs {tgt:?}"));
    }
    Ok(())
}
