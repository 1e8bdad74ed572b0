//! Builds a CF-tree over blob data, shows the threshold grid search, and
//! extracts cluster centers from the leaf entries.
//!
//!     cargo run --release --example birch_init

use tabledc::harness::synth::gaussian_blobs;
use tabledc::init::{birch_init, threshold_search, BirchConfig, CfTree};
use tabledc::rng::RngState;

fn main() {
    let mut rng = RngState::new(21);
    // tight, well-separated blobs: each fits inside one CF entry at a
    // coarse threshold
    let (z, labels) = gaussian_blobs(500, 12, 4, 10.0, 0.3, &mut rng);

    // watch individual insertions absorb or open entries
    let mut tree = CfTree::new(12, BirchConfig::with_threshold(0.8).unwrap());
    for i in 0..z.rows() {
        tree.insert(z.row(i)).unwrap();
    }
    println!(
        "threshold 0.8: {} points compressed into {} leaf entries",
        tree.point_count(),
        tree.leaf_entry_count()
    );
    let mut sizes: Vec<usize> = tree.leaf_entries().iter().map(|e| e.stats.count).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    println!(
        "largest entries hold {:?} points",
        &sizes[..sizes.len().min(8)]
    );

    // grid search: largest threshold giving at least k stable subclusters
    let base = BirchConfig::with_threshold(1.0).unwrap();
    let search = threshold_search(&z, 4, &base).unwrap();
    println!("\nthreshold grid search (threshold -> leaf entries):");
    for step in &search.steps {
        println!("  {:>10.4} -> {}", step.threshold, step.leaf_entries);
    }
    println!("chosen threshold: {:.4}", search.threshold);

    // full initialization: tree, weighted reduction to k centers, means
    let config = BirchConfig {
        threshold: search.threshold,
        ..base
    };
    let centroids = birch_init(&z, 4, &config, &mut RngState::new(3)).unwrap();
    println!("\nextracted {} centers", centroids.k());

    // purity against the generator labels
    let mut agreement = 0usize;
    let mut votes = vec![[0usize; 4]; 4];
    for (i, &c) in centroids.assignment.iter().enumerate() {
        votes[c][labels[i]] += 1;
    }
    for row in &votes {
        agreement += row.iter().max().unwrap();
    }
    println!(
        "majority-vote purity of the initialization: {:.3}",
        agreement as f64 / z.rows() as f64
    );
}
