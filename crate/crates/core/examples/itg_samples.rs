//! Samples from the two built-in synchronous grammars, with acceptance rates
//! for the training and test length ranges.
//!
//! cargo run --release --example itg_samples

use ndsq::tasks::{sample_itg, validate, stream_rng, SyncGrammar};

fn main() -> ndsq::Result<()> {
    for name in ["svo-sov", "gender"] {
        let g = SyncGrammar::builtin(name)?;
        let mut rng = stream_rng(7, 0);
        println!("== {name}");
        for _ in 0..3 {
            let s = sample_itg(&g, 8, 20, 10_000, &mut rng)?;
            validate(&g, &s)?;
            println!("{} ||| {}", s.source.join(" "), s.target.join(" "));
        }
        for (lo, hi) in [(8, 64), (65, 128)] {
            let n = 200;
            let mut attempts = 0;
            for _ in 0..n {
                // Count the single-draw attempts each accepted sample needed.
                loop {
                    attempts += 1;
                    if sample_itg(&g, lo, hi, 1, &mut rng).is_ok() {
                        break;
                    }
                }
            }
            println!("range [{lo}, {hi}]: acceptance {:.3}", n as f64 / attempts as f64);
        }
    }
    Ok(())
}
