//! Defines a small synchronous grammar in the plain-text format, builds a
//! task from it and writes a few examples as line-delimited JSON.
//!
//! Rule lines are `probability HEAD -> source | target`, where nonterminals
//! carry a link number shared by both sides. Class lines expand a head into
//! `1/p` equiprobable terminal pairs indexed by `_i`. Sampling starts at `A`.

use ndsq::tasks::{stream_rng, write_jsonl, SyncGrammar, Task, TaskKind};

const GRAMMAR: &str = "\
# adjectives follow the noun on the target side
1 A -> NP1 | NP1
0.6 NP -> ADJ1 N2 | N2 ADJ1
0.4 NP -> ADJ1 NP2 | NP2 ADJ1
1/8 ADJ_i -> adj_i | jda_i
1/8 N_i -> n_i | nn_i
";

fn main() -> ndsq::Result<()> {
    let g = SyncGrammar::parse("adjectives", GRAMMAR)?;
    let task = Task::from_grammar(TaskKind::SvoSov, g)?;
    let v = task.vocabulary();
    println!("{} source and {} target symbols", v.source_size(), v.target_size());
    let mut rng = stream_rng(1, 0);
    let mut examples = Vec::new();
    for _ in 0..4 {
        let ex = task.sample(2, 8, 1000, &mut rng)?;
        let src: Vec<&str> = ex.source.iter().filter_map(|&i| v.source_symbol(i)).collect();
        let tgt: Vec<&str> = ex.target.iter().filter_map(|&i| v.target_symbol(i)).collect();
        println!("{} ||| {}", src.join(" "), tgt.join(" "));
        examples.push(ex);
    }
    write_jsonl(&examples, std::io::stdout().lock())?;
    Ok(())
}
