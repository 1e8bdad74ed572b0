//! The file-based workflow end to end: write an embedding matrix and its
//! labels to disk, run the full pipeline, and inspect everything it wrote.
//! This is what the `tabledc train` subcommand does.
//!
//!     cargo run --release --example pipeline_files

use tabledc::harness::synth::gaussian_blobs;
use tabledc::harness::{io, run_pipeline, RunConfig};
use tabledc::rng::RngState;

fn main() {
    let dir = std::env::temp_dir().join("tabledc-example-pipeline");
    std::fs::create_dir_all(&dir).unwrap();

    let mut rng = RngState::new(1);
    let (x, labels) = gaussian_blobs(240, 20, 4, 9.0, 0.8, &mut rng);
    let input = dir.join("embeddings.csv");
    let truth = dir.join("truth.txt");
    io::save_matrix_csv(&input, &x).unwrap();
    io::save_labels(&truth, &labels).unwrap();
    println!("wrote {} and {}", input.display(), truth.display());

    let mut config = RunConfig::new(input.display().to_string(), 4);
    config.labels = Some(truth.display().to_string());
    config.out = dir.join("run").display().to_string();
    config.hidden_dims = Some(vec![32, 12]);
    config.pretrain_epochs = Some(15);
    config.pretrain_lr = 1e-2;
    config.epochs = Some(25);
    config.seed = 2;

    let report = run_pipeline(&config).unwrap();

    println!("\noutputs:");
    println!("  report: {}", report.files.report);
    println!("  losses: {}", report.files.losses);
    println!("  labels: {}", report.files.labels);
    println!(
        "\nphase timings (s): pretrain {:.2}, init {:.3}, train {:.2}",
        report.timings.pretrain_seconds, report.timings.init_seconds, report.timings.train_seconds,
    );
    if let Some(m) = &report.metrics {
        println!(
            "scores: ARI {:.3}, ACC {:.3}, {} predicted clusters",
            m.ari, m.acc, m.k_predicted
        );
    }

    let losses = std::fs::read_to_string(&report.files.losses).unwrap();
    println!("\nfirst loss-curve rows:");
    for line in losses.lines().take(4) {
        println!("  {line}");
    }
    println!(
        "\nthe echoed config inside report.json replays this run exactly \
         (same seed, byte-identical labels)"
    );
}
