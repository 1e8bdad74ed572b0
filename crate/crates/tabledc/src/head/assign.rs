//! Soft assignments, predicted and target distributions, and the losses.

use super::{HeadError, Kernel};
use crate::linalg::{row_softmax, Matrix};

/// Raw soft assignments: each distance mapped through the kernel. All
/// outputs lie in `(0, 1]` (the Normal kernel can underflow to zero at
/// extreme distances).
pub fn kernel_similarity(distances: &Matrix, kernel: &Kernel) -> Matrix {
    match *kernel {
        Kernel::Cauchy { gamma } => {
            let g2 = gamma * gamma;
            distances.map(|d| 1.0 / (1.0 + d * d / g2))
        }
        Kernel::StudentsT { nu } => {
            let exponent = -(nu + 1.0) / 2.0;
            distances.map(|d| (1.0 + d * d / nu).powf(exponent))
        }
        Kernel::Normal { gamma } => {
            let g2 = 2.0 * gamma * gamma;
            distances.map(|d| (-d * d / g2).exp())
        }
    }
}

/// Derivative of the kernel with respect to the squared distance,
/// expressed from the distance and the already-computed kernel value.
pub(crate) fn kernel_derivative_wrt_sq(kernel: &Kernel, distance: f64, value: f64) -> f64 {
    match *kernel {
        Kernel::Cauchy { gamma } => -value * value / (gamma * gamma),
        Kernel::StudentsT { nu } => {
            let base = 1.0 + distance * distance / nu;
            -value * (nu + 1.0) / (2.0 * nu * base)
        }
        Kernel::Normal { gamma } => -value / (2.0 * gamma * gamma),
    }
}

/// Divides each row by its sum plus `epsilon`. A row of zeros stays zero
/// instead of failing.
pub fn normalize_assignments(raw: &Matrix, epsilon: f64) -> Matrix {
    let mut out = raw.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let sum: f64 = row.iter().sum();
        let denom = sum + epsilon;
        for v in row {
            *v /= denom;
        }
    }
    out
}

/// Predicted probabilities: row-wise softmax of the normalized soft
/// assignments.
pub fn predicted_distribution(soft: &Matrix) -> Matrix {
    row_softmax(soft)
}

/// Target distribution: squares each assignment, divides by the cluster's
/// column sum, then renormalizes each row to sum to one. A column sum below
/// 1e-12 signals a dead cluster. Rows that are entirely zero stay zero.
pub fn target_distribution(soft: &Matrix) -> Result<Matrix, HeadError> {
    let (n, k) = (soft.rows(), soft.cols());
    let mut col_sums = vec![0.0f64; k];
    for i in 0..n {
        for (s, v) in col_sums.iter_mut().zip(soft.row(i)) {
            *s += v;
        }
    }
    if let Some(column) = col_sums.iter().position(|&s| s < 1e-12) {
        return Err(HeadError::DegenerateColumn {
            column,
            sum: col_sums[column],
        });
    }

    let mut out = Matrix::zeros(n, k);
    for i in 0..n {
        let src = soft.row(i);
        let dest = out.row_mut(i);
        let mut row_sum = 0.0;
        for ((d, &q), &f) in dest.iter_mut().zip(src).zip(&col_sums) {
            *d = q * q / f;
            row_sum += *d;
        }
        if row_sum > 0.0 {
            for d in dest.iter_mut() {
                *d /= row_sum;
            }
        }
    }
    Ok(out)
}

/// `sum p * ln(p / q)` with the `0 ln 0` terms dropped. Returns infinity
/// when the reference distribution vanishes where `p` does not.
pub fn kl_divergence(p: &Matrix, q: &Matrix) -> f64 {
    let mut acc = 0.0;
    for (pv, qv) in p.data().iter().zip(q.data()) {
        if *pv > 0.0 {
            acc += pv * (pv / qv).ln();
        }
    }
    acc
}

/// KL divergence of the prediction from the target, failing loudly if a
/// predicted probability underflowed to zero where the target has mass.
pub fn clustering_loss(target: &Matrix, predicted: &Matrix) -> Result<f64, HeadError> {
    if target.rows() != predicted.rows() || target.cols() != predicted.cols() {
        return Err(HeadError::DimensionMismatch {
            left: target.rows() * target.cols(),
            right: predicted.rows() * predicted.cols(),
        });
    }
    for i in 0..target.rows() {
        for (j, (&p, &m)) in target.row(i).iter().zip(predicted.row(i)).enumerate() {
            if p > 0.0 && m <= 0.0 {
                return Err(HeadError::NonFiniteDivergence { row: i, col: j });
            }
        }
    }
    Ok(kl_divergence(target, predicted))
}

/// `alpha * clustering + reconstruction`.
pub fn total_loss(clustering: f64, reconstruction: f64, alpha: f64) -> f64 {
    alpha * clustering + reconstruction
}

/// Row-wise argmax; ties break to the lowest cluster index.
pub fn hard_assign(predicted: &Matrix) -> Vec<usize> {
    (0..predicted.rows())
        .map(|i| {
            let row = predicted.row(i);
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for (j, &v) in row.iter().enumerate() {
                if v > best_v {
                    best_v = v;
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cauchy_kernel_anchor_points() {
        let gamma = 0.7;
        let kernel = Kernel::Cauchy { gamma };
        let d = Matrix::new(1, 2, vec![0.0, gamma]).unwrap();
        let q = kernel_similarity(&d, &kernel);
        assert_abs_diff_eq!(q.get(0, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.get(0, 1), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn students_t_with_one_dof_equals_cauchy_unit_bandwidth() {
        let mut rng = RngState::new(8);
        let d = Matrix::from_fn(5, 4, |_, _| rng.uniform(0.0, 10.0));
        let t = kernel_similarity(&d, &Kernel::StudentsT { nu: 1.0 });
        let c = kernel_similarity(&d, &Kernel::Cauchy { gamma: 1.0 });
        assert!(t.max_abs_diff(&c) < 1e-12);
    }

    #[test]
    fn normal_kernel_is_gaussian_decay() {
        let kernel = Kernel::Normal { gamma: 2.0 };
        let d = Matrix::new(1, 1, vec![2.0]).unwrap();
        let q = kernel_similarity(&d, &kernel);
        assert_abs_diff_eq!(q.get(0, 0), (-0.5f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn normalization_examples() {
        let raw = Matrix::new(1, 2, vec![0.2, 0.2]).unwrap();
        let q = normalize_assignments(&raw, 1e-10);
        assert_abs_diff_eq!(q.get(0, 0), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(q.get(0, 1), 0.5, epsilon = 1e-9);

        let raw = Matrix::new(1, 3, vec![1.0, 0.5, 0.5]).unwrap();
        let q = normalize_assignments(&raw, 1e-10);
        assert_abs_diff_eq!(q.get(0, 0), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(q.get(0, 1), 0.25, epsilon = 1e-9);
        assert_abs_diff_eq!(q.get(0, 2), 0.25, epsilon = 1e-9);
    }

    #[test]
    fn normalization_survives_zero_rows() {
        let raw = Matrix::zeros(1, 2);
        let q = normalize_assignments(&raw, 1e-10);
        assert_eq!(q.get(0, 0), 0.0);
        assert_eq!(q.get(0, 1), 0.0);
    }

    #[test]
    fn predicted_distribution_matches_softmax() {
        let q = Matrix::new(1, 2, vec![0.5, 0.5]).unwrap();
        let m = predicted_distribution(&q);
        assert_abs_diff_eq!(m.get(0, 0), 0.5, epsilon = 1e-12);

        let q = Matrix::new(1, 2, vec![1.0, 0.0]).unwrap();
        let m = predicted_distribution(&q);
        assert_abs_diff_eq!(m.get(0, 0), 0.7311, epsilon = 1e-4);
        assert_abs_diff_eq!(m.get(0, 1), 0.2689, epsilon = 1e-4);
    }

    #[test]
    fn target_fixed_points() {
        let uniform = Matrix::new(2, 2, vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        let p = target_distribution(&uniform).unwrap();
        assert!(p.max_abs_diff(&uniform) < 1e-12);

        let one_hot = Matrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let p = target_distribution(&one_hot).unwrap();
        assert!(p.max_abs_diff(&one_hot) < 1e-12);
    }

    #[test]
    fn target_sharpens_and_row_normalizes() {
        let q = Matrix::new(2, 2, vec![0.8, 0.2, 0.6, 0.4]).unwrap();
        let p = target_distribution(&q).unwrap();
        // column sums (1.4, 0.6); first row (0.64/1.4, 0.04/0.6) renormalized
        assert_abs_diff_eq!(p.get(0, 0), 0.8727, epsilon = 1e-4);
        assert_abs_diff_eq!(p.get(0, 1), 0.1273, epsilon = 1e-4);
        for i in 0..2 {
            let sum: f64 = p.row(i).iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn target_flags_dead_clusters() {
        let q = Matrix::new(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(
            target_distribution(&q),
            Err(HeadError::DegenerateColumn { column: 1, .. })
        ));
    }

    #[test]
    fn clustering_loss_cases() {
        let p = Matrix::new(1, 2, vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(clustering_loss(&p, &p).unwrap(), 0.0, epsilon = 1e-15);

        let p = Matrix::new(1, 2, vec![1.0, 0.0]).unwrap();
        let m = Matrix::new(1, 2, vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(
            clustering_loss(&p, &m).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-12
        );

        // underflowed prediction where the target has mass
        let bad = Matrix::new(1, 2, vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            clustering_loss(&p, &bad),
            Err(HeadError::NonFiniteDivergence { row: 0, col: 0 })
        ));
    }

    #[test]
    fn kl_is_nonnegative_for_random_stochastic_pairs() {
        let mut rng = RngState::new(23);
        for _ in 0..200 {
            let k = 2 + rng.index(5);
            let random_stochastic = |rng: &mut RngState| {
                let mut m = Matrix::from_fn(3, k, |_, _| rng.uniform(0.01, 1.0));
                for i in 0..3 {
                    let sum: f64 = m.row(i).iter().sum();
                    for v in m.row_mut(i) {
                        *v /= sum;
                    }
                }
                m
            };
            let p = random_stochastic(&mut rng);
            let q = random_stochastic(&mut rng);
            assert!(clustering_loss(&p, &q).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn total_loss_arithmetic() {
        assert_abs_diff_eq!(total_loss(1.0, 1.0, 0.9), 1.9, epsilon = 1e-15);
        assert_abs_diff_eq!(total_loss(1.0, 0.3, 0.0), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(total_loss(0.5, 0.2, 0.9), 0.65, epsilon = 1e-15);
    }

    #[test]
    fn hard_assign_rules() {
        let m = Matrix::new(2, 2, vec![0.9, 0.1, 0.5, 0.5]).unwrap();
        assert_eq!(hard_assign(&m), vec![0, 0]);
    }

    #[test]
    fn hard_assign_is_invariant_under_monotone_transforms() {
        let mut rng = RngState::new(29);
        for _ in 0..100 {
            let m = Matrix::from_fn(6, 4, |_, _| rng.uniform(0.0, 1.0));
            let base = hard_assign(&m);
            let squashed = hard_assign(&m.map(|v| (3.0 * v).tanh()));
            let scaled = hard_assign(&m.map(|v| 7.0 * v + 2.0));
            assert_eq!(base, squashed);
            assert_eq!(base, scaled);
        }
    }

    #[test]
    fn hard_assign_commutes_with_column_permutation() {
        let mut rng = RngState::new(30);
        let m = Matrix::from_fn(8, 3, |_, _| rng.uniform(0.0, 1.0));
        let base = hard_assign(&m);
        // rotate columns left by one
        let rotated = Matrix::from_fn(8, 3, |i, j| m.get(i, (j + 1) % 3));
        let perm = hard_assign(&rotated);
        for (b, p) in base.iter().zip(&perm) {
            assert_eq!((*b + 3 - 1) % 3, *p % 3);
        }
    }
}
