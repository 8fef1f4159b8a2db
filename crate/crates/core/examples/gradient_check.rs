//! Finite-difference checks of the memory backward passes and of full-model
//! backpropagation through time, printed per parameter group.

use ndsq::controller::ModelConfig;
use ndsq::memory::MemoryKind;
use ndsq::training::{grad_check, memory_grad_check};

fn main() -> ndsq::Result<()> {
    for kind in [MemoryKind::Stack, MemoryKind::Queue, MemoryKind::Deque] {
        let r = memory_grad_check(kind, 4, 8, 50, 1e-6, 1)?;
        println!("{kind:<6} memory  max rel. error {:.2e}  ({} tie draws skipped)", r.max_error(), r.skipped);
    }
    for kind in ["stack-lstm", "deque-lstm", "lstm-2"] {
        let config = ModelConfig {
            kind: kind.parse()?,
            hidden: 5,
            memory_width: 3,
            embedding: 4,
            source_vocab: 4,
            target_vocab: 4,
        };
        let r = grad_check(&config, 5, 10, 1e-4, 2)?;
        println!("{kind}: {}", if r.passed() { "ok" } else { "FAILED" });
        for g in &r.groups {
            println!("  {:<28} {:.2e}", g.name, g.max_rel_error);
        }
    }
    Ok(())
}
