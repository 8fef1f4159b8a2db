//! With push and pop signals at exactly 0 or 1 the continuous deque behaves
//! like `VecDeque`. This replays a script against both and prints the reads.

use std::collections::VecDeque;

use ndsq::memory::{step, EndSignals, MemoryKind, MemorySignals, MemoryState};

fn end(value: f64, pop: bool, push: bool) -> EndSignals<f64> {
    EndSignals {
        value: vec![value],
        pop: if pop { 1.0 } else { 0.0 },
        push: if push { 1.0 } else { 0.0 },
    }
}

fn main() -> ndsq::Result<()> {
    // (pop top, push top, pop bottom, push bottom)
    let script = [
        (false, true, false, false),
        (false, true, false, true),
        (false, false, false, true),
        (true, false, false, false),
        (false, true, true, false),
        (true, false, true, false),
        (false, false, true, false),
    ];
    let mut state = MemoryState::<f64>::new(MemoryKind::Deque, 1);
    let mut reference: VecDeque<f64> = VecDeque::new();
    println!("{:>3} {:>20} {:>9} {:>9} {:>9} {:>9}", "t", "contents", "top", "want", "bottom", "want");
    for (t, &(ut, dt, ub, db)) in script.iter().enumerate() {
        let (vt, vb) = (10.0 + t as f64, -10.0 - t as f64);
        let (next, read) = step(&state, &MemorySignals::double(end(vt, ut, dt), end(vb, ub, db)))?;
        if ut {
            reference.pop_back();
        }
        if ub {
            reference.pop_front();
        }
        if db {
            reference.push_front(vb);
        }
        if dt {
            reference.push_back(vt);
        }
        println!(
            "{:>3} {:>20} {:>9} {:>9} {:>9} {:>9}",
            t + 1,
            format!("{reference:?}"),
            read.top()[0],
            reference.back().copied().unwrap_or(0.0),
            read.bot()[0],
            reference.front().copied().unwrap_or(0.0),
        );
        state = next;
    }
    Ok(())
}
