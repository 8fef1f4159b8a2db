//! Trains a Queue-LSTM to copy, saves a checkpoint, reloads it and evaluates
//! on sequences twice as long as any seen in training.
//!
//! cargo run --release --example queue_copy -- [seed]

use ndsq::controller::{Model, ModelConfig};
use ndsq::eval::{run_eval, EvalSpec};
use ndsq::tasks::{streams, Task, TaskKind};
use ndsq::training::{load_checkpoint, save_checkpoint, train_with, CheckpointMeta, StopRule, TrainConfig};

fn main() -> ndsq::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let task = Task::new(TaskKind::Copy, 32)?;
    let config = ModelConfig {
        kind: "queue-lstm".parse()?,
        hidden: 128,
        memory_width: 64,
        embedding: 32,
        source_vocab: 32,
        target_vocab: 32,
    };
    let train = TrainConfig {
        learning_rate: 5e-3,
        max_batches: 5000,
        acc_every: 250,
        eval_samples: 200,
        seed,
        train_min_len: 4,
        train_max_len: 16,
        test_min_len: 17,
        test_max_len: 32,
        stop: Some(StopRule {
            train_coarse: 0.9,
            test_coarse: 0.8,
        }),
        ..TrainConfig::default()
    };
    let model = Model::<f32>::new(config.clone(), seed)?;
    let out = train_with(model, &task, &train, |r| println!("{}", r.csv_row()))?;
    println!("{:?} after {} examples", out.status, out.examples);

    let dir = std::env::temp_dir().join("ndsq-queue-copy");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("model.ndsq");
    let meta = CheckpointMeta {
        config,
        vocabulary: task.vocabulary().clone(),
        task: Some(task.kind()),
        batches: out.batches,
    };
    save_checkpoint(&path, &out.model, &meta)?;
    let (reloaded, _) = load_checkpoint::<f32>(&path)?;

    let spec = EvalSpec {
        min_len: 33,
        max_len: 64,
        samples: 200,
        seed: 99,
        stream: streams::TEST,
        max_attempts: 1,
    };
    let report = run_eval(&reloaded, &task, &spec)?;
    println!("lengths 33-64: coarse {:.3}, fine {:.3}", report.coarse, report.fine);
    Ok(())
}
