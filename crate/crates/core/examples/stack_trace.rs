//! Steps a one-dimensional continuous stack by hand and prints strengths and
//! reads after each step, then the same for a queue fed identical signals.

use ndsq::memory::{step, MemoryKind, MemorySignals, MemoryState};

fn main() -> ndsq::Result<()> {
    // (value, pop, push)
    let script = [(1.0, 0.0, 0.8), (2.0, 0.1, 0.5), (3.0, 0.9, 0.9)];
    for kind in [MemoryKind::Stack, MemoryKind::Queue] {
        println!("{kind}");
        let mut state = MemoryState::<f64>::new(kind, 1);
        for (t, &(v, u, d)) in script.iter().enumerate() {
            let (next, read) = step(&state, &MemorySignals::single(vec![v], u, d))?;
            let rows: Vec<f64> = next.values().iter().map(|r| r[0]).collect();
            let s: Vec<String> = next.strengths().iter().map(|x| format!("{x:.2}")).collect();
            println!(
                "  t={} v={v} u={u} d={d}  V={rows:?}  s=[{}]  r={:.3}",
                t + 1,
                s.join(", "),
                read.read()[0]
            );
            state = next;
        }
    }
    Ok(())
}
