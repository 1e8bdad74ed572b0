//! Synthetic Gaussian mixtures for tests, examples, and benchmarks.

use crate::linalg::Matrix;
use crate::rng::RngState;

/// Isotropic Gaussian blobs: `k` centers whose closest pair sits exactly
/// `separation` apart, each point drawn as `center + sigma * noise`.
/// Labels are assigned round-robin so every cluster gets `n / k` points
/// (up to remainder). Deterministic for a given generator state.
pub fn gaussian_blobs(
    n: usize,
    d: usize,
    k: usize,
    separation: f64,
    sigma: f64,
    rng: &mut RngState,
) -> (Matrix, Vec<usize>) {
    assert!(k >= 1 && d >= 1 && n >= k);

    // draw center directions, then rescale the whole set so the minimum
    // pairwise distance equals the requested separation
    let centers: Vec<Vec<f64>> = loop {
        let candidate: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| rng.next_gaussian()).collect())
            .collect();
        if k == 1 {
            break candidate;
        }
        let mut min_dist = f64::INFINITY;
        for i in 0..k {
            for j in (i + 1)..k {
                let dist: f64 = candidate[i]
                    .iter()
                    .zip(&candidate[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                min_dist = min_dist.min(dist);
            }
        }
        if min_dist > 0.0 {
            let scale = separation / min_dist;
            break candidate
                .into_iter()
                .map(|c| c.into_iter().map(|v| v * scale).collect())
                .collect();
        }
    };

    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % k;
        labels.push(c);
        for t in 0..d {
            data.push(centers[c][t] + sigma * rng.next_gaussian());
        }
    }
    (Matrix::new(n, d, data).unwrap(), labels)
}
