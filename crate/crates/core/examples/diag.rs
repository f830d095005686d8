//! Train and evaluate on a synthetic dataset, then print the confusion
//! matrix and every misclassified clip.
//!
//! Usage: cargo run --release --example diag [train_per_class] [test_per_class]

use darklight_core::experiment::{run_experiment, Split};
use darklight_core::pipeline::PipelineConfig;
use darklight_core::synth::{gen_synthetic, SyntheticSpec};

fn main() {
    let mut args = std::env::args().skip(1);
    let train_per_class: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let test_per_class: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);

    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec { train_per_class, test_per_class, ..SyntheticSpec::default() };
    let manifest = gen_synthetic(&spec, dir.path()).unwrap();
    let config = PipelineConfig::benchmark_default();
    let outcome = run_experiment(&config, &manifest, &manifest).unwrap();
    println!(
        "top1 {:.4} top5 {:.4} ({} ms)",
        outcome.row.top1, outcome.row.top5, outcome.wall_ms
    );

    let class_names = &outcome.models.classifier.class_names;
    let c = class_names.len();
    let mut confusion = vec![vec![0usize; c]; c];
    let argmax = |scores: &[f64]| {
        scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0
    };
    for (scores, &truth) in outcome.eval.predictions.iter().zip(outcome.eval.labels.iter()) {
        confusion[truth][argmax(scores)] += 1;
    }
    println!("confusion (rows = truth):");
    print!("{:>12}", "");
    for name in class_names {
        print!("{:>12}", &name[..name.len().min(11)]);
    }
    println!();
    for (i, row) in confusion.iter().enumerate() {
        print!("{:>12}", class_names[i]);
        for v in row {
            print!("{v:>12}");
        }
        println!();
    }

    println!("\nmisclassified test clips:");
    let test_entries = manifest.split_entries(Split::Test);
    for ((scores, &truth), entry) in outcome
        .eval
        .predictions
        .iter()
        .zip(outcome.eval.labels.iter())
        .zip(test_entries.iter())
    {
        let pred = argmax(scores);
        if pred != truth {
            println!(
                "{:>24} gamma={:.2} truth={} pred={}",
                entry.path, entry.gamma, class_names[truth], class_names[pred]
            );
        }
    }
}
