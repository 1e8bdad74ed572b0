//! Runs the ablation grid on overlapping blobs: three distances under the
//! Cauchy kernel, three kernels under the Mahalanobis distance, and the
//! three initializers, every cell reusing one pretrained snapshot.
//!
//!     cargo run --release --example ablation_grid

use tabledc::harness::synth::gaussian_blobs;
use tabledc::harness::{ablate, io, RunConfig};
use tabledc::rng::RngState;

fn main() {
    let dir = std::env::temp_dir().join("tabledc-example-ablation");
    std::fs::create_dir_all(&dir).unwrap();

    // deliberately overlapping clusters: separation only 2.5 sigma
    let mut rng = RngState::new(909);
    let (x, labels) = gaussian_blobs(300, 16, 3, 2.5, 1.0, &mut rng);
    let input = dir.join("x.csv");
    let truth = dir.join("y.txt");
    io::save_matrix_csv(&input, &x).unwrap();
    io::save_labels(&truth, &labels).unwrap();

    let mut config = RunConfig::new(input.display().to_string(), 3);
    config.labels = Some(truth.display().to_string());
    config.out = dir.join("grid").display().to_string();
    config.hidden_dims = Some(vec![24, 8]);
    config.pretrain_epochs = Some(10);
    config.pretrain_lr = 1e-2;
    config.epochs = Some(15);
    config.gamma = 10.0;
    config.seed = 5;

    let report = ablate(&config).unwrap();
    println!("{:<10} {:<14} {:>7} {:>7}", "group", "cell", "ari", "acc");
    for cell in &report.cells {
        match (cell.ari, cell.acc) {
            (Some(ari), Some(acc)) => {
                println!(
                    "{:<10} {:<14} {:>7.3} {:>7.3}",
                    cell.group, cell.cell, ari, acc
                );
            }
            _ => {
                println!(
                    "{:<10} {:<14} failed: {}",
                    cell.group,
                    cell.cell,
                    cell.error.as_deref().unwrap_or("?")
                );
            }
        }
    }
    println!("\ngrid written to {}", report.csv);
}
