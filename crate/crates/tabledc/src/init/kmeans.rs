//! Lloyd's algorithm with uniform or k-means++ seeding, multiple restarts,
//! and deterministic empty-cluster rescue.

use super::{distance_sq, nearest_center, Centroids, InitError};
use crate::linalg::Matrix;
use crate::rng::RngState;

/// Center seeding strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seeding {
    /// K distinct indices drawn uniformly.
    Uniform,
    /// Squared-distance-weighted seeding.
    PlusPlus,
}

const MAX_ITERATIONS: usize = 300;
const SHIFT_TOLERANCE: f64 = 1e-6;

fn seed_centers(
    points: &Matrix,
    weights: &[f64],
    k: usize,
    seeding: Seeding,
    rng: &mut RngState,
) -> Matrix {
    let n = points.rows();
    let dim = points.cols();
    let mut centers = Matrix::zeros(k, dim);
    match seeding {
        Seeding::Uniform => {
            // partial Fisher-Yates over the index set
            let mut idx: Vec<usize> = (0..n).collect();
            for c in 0..k {
                let pick = c + rng.index(n - c);
                idx.swap(c, pick);
                centers.row_mut(c).copy_from_slice(points.row(idx[c]));
            }
        }
        Seeding::PlusPlus => {
            let first = rng.weighted_index(weights);
            centers.row_mut(0).copy_from_slice(points.row(first));
            let mut min_d = vec![f64::INFINITY; n];
            for c in 1..k {
                let prev = centers.row(c - 1).to_vec();
                let mut probs = vec![0.0; n];
                let mut total = 0.0;
                for i in 0..n {
                    let d = distance_sq(points.row(i), &prev);
                    if d < min_d[i] {
                        min_d[i] = d;
                    }
                    probs[i] = weights[i] * min_d[i];
                    total += probs[i];
                }
                let pick = if total > 0.0 {
                    rng.weighted_index(&probs)
                } else {
                    // every remaining point coincides with a chosen center
                    rng.index(n)
                };
                centers.row_mut(c).copy_from_slice(points.row(pick));
            }
        }
    }
    centers
}

fn lloyd_once(
    points: &Matrix,
    weights: &[f64],
    k: usize,
    seeding: Seeding,
    rng: &mut RngState,
) -> (Matrix, Vec<usize>, f64) {
    let n = points.rows();
    let dim = points.cols();
    let mut centers = seed_centers(points, weights, k, seeding, rng);
    let mut assignment = vec![0usize; n];

    for _ in 0..MAX_ITERATIONS {
        for (i, a) in assignment.iter_mut().enumerate() {
            *a = nearest_center(points.row(i), &centers);
        }
        rescue_empty_clusters(points, &centers, &mut assignment, k);

        let mut sums = Matrix::zeros(k, dim);
        let mut mass = vec![0.0f64; k];
        for (i, &a) in assignment.iter().enumerate() {
            let w = weights[i];
            mass[a] += w;
            let dest = sums.row_mut(a);
            for (d, v) in dest.iter_mut().zip(points.row(i)) {
                *d += w * v;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            let m = mass[c];
            let old = centers.row(c).to_vec();
            let dest = sums.row_mut(c);
            if m > 0.0 {
                for v in dest.iter_mut() {
                    *v /= m;
                }
            } else {
                dest.copy_from_slice(&old);
            }
            shift = shift.max(distance_sq(dest, &old).sqrt());
        }
        centers = sums;
        if shift < SHIFT_TOLERANCE {
            break;
        }
    }

    let wcss = assignment
        .iter()
        .enumerate()
        .map(|(i, &a)| weights[i] * distance_sq(points.row(i), centers.row(a)))
        .sum();
    (centers, assignment, wcss)
}

/// Moves the globally farthest point (from its own center) into each empty
/// cluster, lowest cluster index first; never drains a singleton cluster.
fn rescue_empty_clusters(points: &Matrix, centers: &Matrix, assignment: &mut [usize], k: usize) {
    let mut counts = vec![0usize; k];
    for &a in assignment.iter() {
        counts[a] += 1;
    }
    for dead in 0..k {
        if counts[dead] > 0 {
            continue;
        }
        let mut far_idx = usize::MAX;
        let mut far_d = -1.0;
        for (i, &a) in assignment.iter().enumerate() {
            if counts[a] <= 1 {
                continue;
            }
            let d = distance_sq(points.row(i), centers.row(a));
            if d > far_d {
                far_d = d;
                far_idx = i;
            }
        }
        if far_idx == usize::MAX {
            continue;
        }
        counts[assignment[far_idx]] -= 1;
        assignment[far_idx] = dead;
        counts[dead] = 1;
    }
}

/// Weighted Lloyd iterations over several restarts, keeping the restart
/// with the lowest weighted within-cluster sum of squares.
pub(crate) fn weighted_kmeans(
    points: &Matrix,
    weights: &[f64],
    k: usize,
    restarts: usize,
    seeding: Seeding,
    rng: &mut RngState,
) -> Result<Centroids, InitError> {
    if k == 0 || restarts == 0 {
        return Err(InitError::InvalidConfig(
            "k and restarts must be >= 1".into(),
        ));
    }
    if points.rows() < k {
        return Err(InitError::TooFewPoints {
            needed: k,
            got: points.rows(),
        });
    }
    if weights.len() != points.rows() {
        return Err(InitError::DimensionMismatch {
            expected: points.rows(),
            got: weights.len(),
        });
    }

    let mut best: Option<(f64, Matrix, Vec<usize>)> = None;
    for _ in 0..restarts {
        let (centers, assignment, wcss) = lloyd_once(points, weights, k, seeding, rng);
        if best.as_ref().is_none_or(|(b, _, _)| wcss < *b) {
            best = Some((wcss, centers, assignment));
        }
    }
    let (_, centers, assignment) = best.unwrap();
    Ok(Centroids {
        centers,
        assignment,
    })
}

/// K-means over the rows of `z`: Lloyd's iterations to convergence
/// (center shift below 1e-6 or 300 iterations) per restart, returning the
/// restart with the minimum within-cluster sum of squares.
pub fn kmeans_init(
    z: &Matrix,
    k: usize,
    restarts: usize,
    seeding: Seeding,
    rng: &mut RngState,
) -> Result<Centroids, InitError> {
    let weights = vec![1.0; z.rows()];
    weighted_kmeans(z, &weights, k, restarts, seeding, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_cluster_is_the_global_mean() {
        let z = Matrix::new(4, 2, vec![0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0]).unwrap();
        let result = kmeans_init(&z, 1, 3, Seeding::PlusPlus, &mut RngState::new(1)).unwrap();
        assert_abs_diff_eq!(result.centers.get(0, 0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(result.centers.get(0, 1), 1.0, epsilon = 1e-12);
        assert!(result.assignment.iter().all(|&a| a == 0));
    }

    #[test]
    fn separated_blobs_give_tight_clusters() {
        let mut rng = RngState::new(21);
        let n_per = 80;
        let mut data = Vec::new();
        for i in 0..2 * n_per {
            let offset = if i % 2 == 0 { 0.0 } else { 12.0 };
            data.push(offset + 0.5 * rng.next_gaussian());
            data.push(offset + 0.5 * rng.next_gaussian());
        }
        let z = Matrix::new(2 * n_per, 2, data).unwrap();
        let result = kmeans_init(&z, 2, 20, Seeding::PlusPlus, &mut RngState::new(5)).unwrap();

        let wcss: f64 = result
            .assignment
            .iter()
            .enumerate()
            .map(|(i, &a)| distance_sq(z.row(i), result.centers.row(a)))
            .sum();
        let mut mean = vec![0.0; 2];
        for i in 0..z.rows() {
            for (m, v) in mean.iter_mut().zip(z.row(i)) {
                *m += v / z.rows() as f64;
            }
        }
        let total: f64 = (0..z.rows()).map(|i| distance_sq(z.row(i), &mean)).sum();
        assert!(wcss < 0.05 * total, "wcss {wcss} vs total {total}");
    }

    #[test]
    fn same_seed_reproduces_centers() {
        let mut gen = RngState::new(33);
        let z = Matrix::from_fn(50, 3, |_, _| gen.next_gaussian());
        let a = kmeans_init(&z, 4, 5, Seeding::Uniform, &mut RngState::new(7)).unwrap();
        let b = kmeans_init(&z, 4, 5, Seeding::Uniform, &mut RngState::new(7)).unwrap();
        assert_eq!(a.centers.data(), b.centers.data());
        assert_eq!(a.assignment, b.assignment);
    }

    #[test]
    fn every_cluster_gets_a_member_even_with_duplicates() {
        // nine copies of one point and a single outlier, k = 3
        let mut data = vec![0.0; 18];
        data[16] = 50.0;
        data[17] = 50.0;
        let z = Matrix::new(9, 2, data).unwrap();
        let result = kmeans_init(&z, 3, 4, Seeding::PlusPlus, &mut RngState::new(11)).unwrap();
        let mut counts = vec![0usize; 3];
        for &a in &result.assignment {
            counts[a] += 1;
        }
        assert!(counts.iter().all(|&c| c > 0), "counts {counts:?}");
    }

    #[test]
    fn rejects_more_clusters_than_points() {
        let z = Matrix::zeros(2, 2);
        assert!(matches!(
            kmeans_init(&z, 3, 1, Seeding::Uniform, &mut RngState::new(1)),
            Err(InitError::TooFewPoints { needed: 3, got: 2 })
        ));
    }
}
