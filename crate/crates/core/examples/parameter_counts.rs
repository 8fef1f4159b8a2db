//! Trainable parameter counts for every controller at the experiment widths
//! (hidden 256 and 512, memory width 256, embeddings 64, 128 symbols).

use ndsq::controller::{count_parameters, ControllerKind, ModelConfig};

fn main() {
    let kinds = [
        "lstm-1",
        "lstm-2",
        "lstm-4",
        "lstm-8",
        "stack-lstm",
        "queue-lstm",
        "deque-lstm",
    ];
    println!(
        "{:<12} {:>7} {:>10} {:>11} {:>10} {:>12} {:>10}",
        "model", "hidden", "total", "embeddings", "core", "projections", "output"
    );
    for hidden in [256, 512] {
        for name in kinds {
            let config = ModelConfig {
                kind: name.parse::<ControllerKind>().expect("known kind"),
                hidden,
                memory_width: 256,
                embedding: 64,
                source_vocab: 128,
                target_vocab: 128,
            };
            let c = count_parameters(&config);
            println!(
                "{:<12} {:>7} {:>10} {:>11} {:>10} {:>12} {:>10}",
                name, hidden, c.total, c.embeddings, c.recurrent_core, c.projections, c.output
            );
        }
    }
}
