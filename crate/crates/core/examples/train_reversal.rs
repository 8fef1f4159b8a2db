//! Trains a Stack-LSTM on sequence reversal at desk scale and prints the
//! metrics log as it goes.
//!
//! cargo run --release --example train_reversal -- [model] [seed] [lr] [f32|f64]

use std::time::Instant;

use ndsq::controller::{Model, ModelConfig};
use ndsq::tasks::{Task, TaskKind};
use ndsq::training::{train_with, StopRule, TrainConfig, CSV_HEADER};
use ndsq::Scalar;

fn run<T: Scalar>(kind: &str, seed: u64, lr: f64, task: TaskKind) -> ndsq::Result<()> {
    let task = Task::new(task, 32)?;
    let config = ModelConfig {
        kind: kind.parse()?,
        hidden: 128,
        memory_width: 64,
        embedding: 32,
        source_vocab: 32,
        target_vocab: 32,
    };
    let train = TrainConfig {
        learning_rate: lr,
        max_batches: std::env::var("BATCHES").ok().and_then(|v| v.parse().ok()).unwrap_or(5000),
        acc_every: 250,
        ppl_every: 50,
        eval_samples: 200,
        seed,
        train_min_len: 4,
        train_max_len: 16,
        test_min_len: 17,
        test_max_len: 32,
        stop: Some(StopRule {
            train_coarse: 0.95,
            test_coarse: 0.9,
        }),
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let model = Model::<T>::new(config, seed)?;
    println!("{CSV_HEADER},seconds");
    let out = train_with(model, &task, &train, |r| {
        println!("{},{:.1}", r.csv_row(), start.elapsed().as_secs_f64());
    })?;
    println!("{:?} after {} examples", out.status, out.examples);
    Ok(())
}

fn main() -> ndsq::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind = args.first().map_or("stack-lstm", String::as_str);
    let seed = args.get(1).map_or(Ok(1), |s| s.parse()).unwrap_or(1);
    let lr = args.get(2).map_or(Ok(1e-3), |s| s.parse()).unwrap_or(1e-3);
    let task = match args.get(4) {
        Some(t) => t.parse()?,
        None => TaskKind::Reverse,
    };
    match args.get(3).map(String::as_str) {
        Some("f64") => run::<f64>(kind, seed, lr, task),
        _ => run::<f32>(kind, seed, lr, task),
    }
}
