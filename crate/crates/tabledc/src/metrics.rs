//! Clustering evaluation: Adjusted Rand Index, optimal-assignment
//! clustering accuracy, and unary-cluster counting.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

/// Metric errors.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("label vectors have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} labeled instances, got {got}")]
    TooFewInstances { needed: usize, got: usize },
}

/// Summary of one evaluation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricsReport {
    pub ari: f64,
    pub acc: f64,
    pub unary_clusters: usize,
    pub k_predicted: usize,
}

/// Builds the contingency table between two labelings along with the
/// marginal counts, using dense indices in first-appearance order.
fn contingency(y_true: &[usize], y_pred: &[usize]) -> (Vec<Vec<u64>>, Vec<u64>, Vec<u64>) {
    let mut true_ids = BTreeMap::new();
    let mut pred_ids = BTreeMap::new();
    for &t in y_true {
        let next = true_ids.len();
        true_ids.entry(t).or_insert(next);
    }
    for &p in y_pred {
        let next = pred_ids.len();
        pred_ids.entry(p).or_insert(next);
    }
    let mut table = vec![vec![0u64; pred_ids.len()]; true_ids.len()];
    let mut row_sums = vec![0u64; true_ids.len()];
    let mut col_sums = vec![0u64; pred_ids.len()];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        let i = true_ids[&t];
        let j = pred_ids[&p];
        table[i][j] += 1;
        row_sums[i] += 1;
        col_sums[j] += 1;
    }
    (table, row_sums, col_sums)
}

fn pairs(n: u64) -> i128 {
    let n = n as i128;
    n * (n - 1) / 2
}

/// Adjusted Rand Index between two partitions, in `[-1, 1]`.
///
/// Pair counts are accumulated in exact integer arithmetic and only the
/// final ratio is evaluated in floating point, so results are stable up to
/// millions of instances. Two trivial partitions that agree exactly (the
/// degenerate zero-denominator case) score 1.
pub fn ari(y_true: &[usize], y_pred: &[usize]) -> Result<f64, MetricError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricError::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.len() < 2 {
        return Err(MetricError::TooFewInstances {
            needed: 2,
            got: y_true.len(),
        });
    }

    let (table, row_sums, col_sums) = contingency(y_true, y_pred);
    let index: i128 = table
        .iter()
        .flat_map(|row| row.iter())
        .map(|&c| pairs(c))
        .sum();
    let sum_rows: i128 = row_sums.iter().map(|&c| pairs(c)).sum();
    let sum_cols: i128 = col_sums.iter().map(|&c| pairs(c)).sum();
    let total = pairs(y_true.len() as u64);

    // ARI = (index - expected) / (max_index - expected) with
    // expected = sum_rows * sum_cols / total; multiply through by 2 * total
    // to stay in integers until the final division.
    let numerator = 2 * (index * total - sum_rows * sum_cols);
    let denominator = (sum_rows + sum_cols) * total - 2 * sum_rows * sum_cols;
    if denominator == 0 {
        return Ok(1.0);
    }
    Ok(numerator as f64 / denominator as f64)
}

/// Dense Hungarian solver (minimizing), `O(n^3)` over integer costs.
/// Returns, for each row, its assigned column.
fn hungarian(costs: &[Vec<i64>]) -> Vec<usize> {
    let n = costs.len();
    if n == 0 {
        return Vec::new();
    }
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = costs[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Clustering accuracy: the largest fraction of instances matched under
/// any one-to-one mapping between predicted and true cluster ids, found by
/// optimal assignment on the contingency matrix. When the cluster counts
/// differ the matrix is padded square with zeros, so unmatched clusters
/// contribute nothing.
pub fn clustering_accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64, MetricError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricError::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(MetricError::TooFewInstances { needed: 1, got: 0 });
    }

    let (table, row_sums, col_sums) = contingency(y_true, y_pred);
    let size = row_sums.len().max(col_sums.len());
    // negate counts to turn maximization into the minimizing solver
    let mut costs = vec![vec![0i64; size]; size];
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            costs[i][j] = -(c as i64);
        }
    }
    let assignment = hungarian(&costs);
    let matched: u64 = assignment
        .iter()
        .enumerate()
        .filter(|&(i, &j)| i < table.len() && j < table[i].len())
        .map(|(i, &j)| table[i][j])
        .sum();
    Ok(matched as f64 / y_true.len() as f64)
}

/// Number of predicted clusters with exactly one member.
pub fn unary_cluster_count(y_pred: &[usize]) -> usize {
    let mut counts = BTreeMap::new();
    for &p in y_pred {
        *counts.entry(p).or_insert(0usize) += 1;
    }
    counts.values().filter(|&&c| c == 1).count()
}

/// Number of distinct predicted cluster ids.
pub fn distinct_clusters(y_pred: &[usize]) -> usize {
    let mut ids: Vec<usize> = y_pred.to_vec();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

/// Full evaluation of a prediction against ground truth.
pub fn evaluate(y_true: &[usize], y_pred: &[usize]) -> Result<MetricsReport, MetricError> {
    Ok(MetricsReport {
        ari: ari(y_true, y_pred)?,
        acc: clustering_accuracy(y_true, y_pred)?,
        unary_clusters: unary_cluster_count(y_pred),
        k_predicted: distinct_clusters(y_pred),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;
    use approx::assert_abs_diff_eq;

    /// Exhaustive search over injective label mappings, for cross-checking
    /// the Hungarian route on small cluster counts.
    pub(crate) fn brute_force_accuracy(y_true: &[usize], y_pred: &[usize]) -> f64 {
        let (table, row_sums, col_sums) = contingency(y_true, y_pred);
        let n_true = row_sums.len();
        let n_pred = col_sums.len();
        fn search(
            table: &[Vec<u64>],
            n_true: usize,
            used: &mut Vec<bool>,
            col: usize,
            acc: u64,
        ) -> u64 {
            if col == table[0].len() {
                return acc;
            }
            // leave this predicted cluster unmatched
            let mut best = search(table, n_true, used, col + 1, acc);
            for row in 0..n_true {
                if !used[row] {
                    used[row] = true;
                    best = best.max(search(table, n_true, used, col + 1, acc + table[row][col]));
                    used[row] = false;
                }
            }
            best
        }
        let mut used = vec![false; n_true];
        let best = if n_pred == 0 {
            0
        } else {
            search(&table, n_true, &mut used, 0, 0)
        };
        best as f64 / y_true.len() as f64
    }

    #[test]
    fn ari_perfect_and_relabeled() {
        let y = vec![0, 0, 1, 1, 2, 2];
        assert_eq!(ari(&y, &y).unwrap(), 1.0);
        let relabeled = vec![5, 5, 9, 9, 1, 1];
        assert_eq!(ari(&y, &relabeled).unwrap(), 1.0);
    }

    #[test]
    fn ari_constant_prediction_on_balanced_truth_is_zero() {
        let y_true = vec![0, 0, 1, 1];
        let y_pred = vec![0, 0, 0, 0];
        assert_abs_diff_eq!(ari(&y_true, &y_pred).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ari_is_symmetric_and_bounded() {
        let mut rng = RngState::new(71);
        for _ in 0..200 {
            let n = 2 + rng.index(40);
            let ka = 1 + rng.index(6);
            let kb = 1 + rng.index(6);
            let a: Vec<usize> = (0..n).map(|_| rng.index(ka)).collect();
            let b: Vec<usize> = (0..n).map(|_| rng.index(kb)).collect();
            let ab = ari(&a, &b).unwrap();
            let ba = ari(&b, &a).unwrap();
            assert_abs_diff_eq!(ab, ba, epsilon = 1e-12);
            assert!((-1.0..=1.0).contains(&ab), "ari out of range: {ab}");
        }
    }

    #[test]
    fn ari_rejects_bad_inputs() {
        assert_eq!(
            ari(&[0, 1], &[0]),
            Err(MetricError::LengthMismatch { left: 2, right: 1 })
        );
        assert_eq!(
            ari(&[0], &[0]),
            Err(MetricError::TooFewInstances { needed: 2, got: 1 })
        );
    }

    #[test]
    fn accuracy_recovers_permuted_labels() {
        let y = vec![0, 1, 2, 0, 1, 2, 2];
        let permuted: Vec<usize> = y.iter().map(|&v| (v + 1) % 3).collect();
        assert_eq!(clustering_accuracy(&y, &permuted).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_hand_computed_cases() {
        let y_true = vec![0, 0, 1, 1];
        assert_abs_diff_eq!(
            clustering_accuracy(&y_true, &[1, 1, 0, 1]).unwrap(),
            0.75,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            clustering_accuracy(&y_true, &[0, 0, 0, 0]).unwrap(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn accuracy_matches_exhaustive_search() {
        let mut rng = RngState::new(72);
        for _ in 0..200 {
            let n = 4 + rng.index(30);
            let kt = 1 + rng.index(6);
            let kp = 1 + rng.index(6);
            let y_true: Vec<usize> = (0..n).map(|_| rng.index(kt)).collect();
            let y_pred: Vec<usize> = (0..n).map(|_| rng.index(kp)).collect();
            let fast = clustering_accuracy(&y_true, &y_pred).unwrap();
            let brute = brute_force_accuracy(&y_true, &y_pred);
            assert_abs_diff_eq!(fast, brute, epsilon = 1e-12);
        }
    }

    #[test]
    fn metrics_invariant_under_relabeling() {
        let mut rng = RngState::new(73);
        for _ in 0..50 {
            let n = 5 + rng.index(30);
            let y_true: Vec<usize> = (0..n).map(|_| rng.index(4)).collect();
            let y_pred: Vec<usize> = (0..n).map(|_| rng.index(4)).collect();
            // bijective relabelings
            let perm_t = [2usize, 0, 3, 1];
            let perm_p = [1usize, 3, 0, 2];
            let y_true2: Vec<usize> = y_true.iter().map(|&v| perm_t[v]).collect();
            let y_pred2: Vec<usize> = y_pred.iter().map(|&v| perm_p[v]).collect();
            assert_abs_diff_eq!(
                ari(&y_true, &y_pred).unwrap(),
                ari(&y_true2, &y_pred2).unwrap(),
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                clustering_accuracy(&y_true, &y_pred).unwrap(),
                clustering_accuracy(&y_true2, &y_pred2).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn accuracy_stays_in_unit_interval() {
        let mut rng = RngState::new(74);
        for _ in 0..100 {
            let n = 1 + rng.index(25);
            let y_true: Vec<usize> = (0..n).map(|_| rng.index(5)).collect();
            let y_pred: Vec<usize> = (0..n).map(|_| rng.index(8)).collect();
            let acc = clustering_accuracy(&y_true, &y_pred).unwrap();
            assert!((0.0..=1.0).contains(&acc));
        }
    }

    #[test]
    fn unary_counting() {
        assert_eq!(unary_cluster_count(&[0, 0, 1, 2]), 2);
        assert_eq!(unary_cluster_count(&[3, 3, 3]), 0);
        assert_eq!(unary_cluster_count(&[0, 1, 2, 3, 4]), 5);
    }

    #[test]
    fn evaluate_bundles_everything() {
        let y_true = vec![0, 0, 1, 1];
        let y_pred = vec![2, 2, 7, 9];
        let report = evaluate(&y_true, &y_pred).unwrap();
        assert_eq!(report.k_predicted, 3);
        assert_eq!(report.unary_clusters, 2);
        assert!(report.acc > 0.0);
    }
}
