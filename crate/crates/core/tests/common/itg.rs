use ndsq::tasks::{Derivation, Expansion, ItgSample, Sym, SyncGrammar};

/// Terminal prefix pairs of the built-in grammars, written out independently.
pub fn pairing(name: &str) -> &'static [(&'static str, &'static str)] {
    match name {
        "svo-sov" => &[("si", "so"), ("oi", "oo"), ("vi", "vo")],
        _ => &[("we", "wg"), ("me", "mg"), ("fe", "fg"), ("ne", "ng")],
    }
}

pub fn class_members(tokens: &[String], prefix: &str) -> Vec<usize> {
    let mut v: Vec<usize> = tokens
        .iter()
        .filter_map(|t| t.strip_prefix(prefix).and_then(|k| k.parse().ok()))
        .collect();
    v.sort();
    v
}

/// Every clause (a rule whose target side ends in a verb nonterminal) ends
/// with that verb on the target side, and the verb's source form sits inside
/// the clause's source span.
pub fn check_verbs(g: &SyncGrammar, s: &ItgSample, node: &Derivation) {
    if let Expansion::Rule(r) = &g.expansions[node.expansion] {
        if let Some(Sym::NonTerminal { head, link }) = r.target.last() {
            if head == "VT" {
                let k = r
                    .source
                    .iter()
                    .filter(|x| matches!(x, Sym::NonTerminal { .. }))
                    .position(|x| matches!(x, Sym::NonTerminal { link: l, .. } if l == link))
                    .unwrap();
                let member = node.children[k].member.unwrap();
                assert_eq!(s.target[node.target_span.1 - 1], format!("vo{member}"));
                let (a, b) = node.source_span;
                assert!(s.source[a..b].contains(&format!("vi{member}")));
            }
        }
    }
    for c in &node.children {
        check_verbs(g, s, c);
    }
}
