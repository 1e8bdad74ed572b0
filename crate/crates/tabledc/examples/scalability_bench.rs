//! Measures per-epoch training time as the cluster count doubles. The
//! cost is dominated by the point-to-center distance pass, which is linear
//! in K: no adjacency matrix is ever built.
//!
//!     cargo run --release --example scalability_bench
//!
//! Larger grids in the spirit of entity-resolution workloads work too,
//! for example `--k-grid 300,600,1200,2400` through the CLI.

use tabledc::harness::{bench_scalability, BenchOptions, RunConfig};

fn main() {
    let mut config = RunConfig::new("", 1);
    config.out = std::env::temp_dir()
        .join("tabledc-example-bench")
        .display()
        .to_string();
    config.hidden_dims = Some(vec![128, 64]);
    config.pretrain_epochs = Some(3);
    config.seed = 88;

    let opts = BenchOptions {
        k_grid: vec![50, 100, 200, 400],
        n: 2000,
        d: 100,
        warmup_epochs: 2,
        measured_epochs: 5,
    };
    println!(
        "timing {} synthetic points, {} dims, warmup {} + measured {} epochs per K",
        opts.n, opts.d, opts.warmup_epochs, opts.measured_epochs
    );

    let report = bench_scalability(&config, &opts).unwrap();
    println!(
        "\n{:>6} {:>18} {:>16}",
        "K", "seconds_per_epoch", "ratio_vs_prev"
    );
    let mut prev: Option<f64> = None;
    for p in &report.points {
        let ratio = prev
            .map(|t| format!("{:.2}", p.seconds_per_epoch / t))
            .unwrap_or_else(|| "-".into());
        println!("{:>6} {:>18.4} {:>16}", p.k, p.seconds_per_epoch, ratio);
        prev = Some(p.seconds_per_epoch);
    }
    println!("\ncsv written to {}", report.csv);
    if !report.hardware.is_empty() {
        println!("hardware: {:?}", report.hardware);
    }
}
