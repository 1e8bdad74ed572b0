//! Clustering evaluation on hand-made label vectors: agreement scores,
//! optimal label matching, and unary-cluster counting.
//!
//!     cargo run --example evaluate_labels

use tabledc::metrics::{ari, clustering_accuracy, evaluate, unary_cluster_count};

fn main() {
    let truth = vec![0, 0, 0, 1, 1, 1, 2, 2, 2];

    // a relabeled copy of the truth is still a perfect clustering
    let relabeled: Vec<usize> = truth.iter().map(|&c| (c + 1) % 3).collect();
    println!(
        "relabeled truth:  ARI {:.3}",
        ari(&truth, &relabeled).unwrap()
    );

    // one point moved across a boundary
    let mut noisy = relabeled.clone();
    noisy[0] = 2;
    println!(
        "one swap:         ARI {:.3}  ACC {:.3}",
        ari(&truth, &noisy).unwrap(),
        clustering_accuracy(&truth, &noisy).unwrap()
    );

    // collapsing everything into a single cluster
    let collapsed = vec![0; truth.len()];
    println!(
        "single cluster:   ARI {:.3}  ACC {:.3}",
        ari(&truth, &collapsed).unwrap(),
        clustering_accuracy(&truth, &collapsed).unwrap()
    );

    // over-fragmentation shows up as unary clusters
    let fragmented = vec![0, 1, 2, 3, 4, 5, 6, 6, 6];
    let report = evaluate(&truth, &fragmented).unwrap();
    println!(
        "fragmented:       ARI {:.3}  ACC {:.3}  {} unary of {} predicted",
        report.ari,
        report.acc,
        unary_cluster_count(&fragmented),
        report.k_predicted
    );
}
