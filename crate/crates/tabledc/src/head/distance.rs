//! Point-to-center distance matrices.
//!
//! The Mahalanobis route goes through the covariance factor: every latent
//! point and center is pushed through a triangular solve and distances are
//! plain Euclidean in the whitened coordinates. With the scaled-identity
//! covariance this equals `||z - c|| / sqrt(delta)`, which the tests hold
//! it to.

use super::{covariance_factor, CovarianceSpec, Distance, HeadError};
use crate::linalg::{solve_lower_triangular, Matrix};

fn pairwise_euclidean(points: &Matrix, centers: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(points.rows(), centers.rows());
    for i in 0..points.rows() {
        let p = points.row(i);
        let dest = out.row_mut(i);
        for (j, d) in dest.iter_mut().enumerate() {
            let c = centers.row(j);
            let mut acc = 0.0;
            for (a, b) in p.iter().zip(c) {
                let diff = a - b;
                acc += diff * diff;
            }
            *d = acc.sqrt();
        }
    }
    out
}

fn whiten(m: &Matrix, factor: &crate::linalg::LowerTriangular) -> Result<Matrix, HeadError> {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        let solved = solve_lower_triangular(factor, m.row(i))?;
        out.row_mut(i).copy_from_slice(&solved);
    }
    Ok(out)
}

pub(crate) fn row_norms(m: &Matrix) -> Vec<f64> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

/// Entry `(i, j)` is the distance from latent point `i` to center `j`.
///
/// Cosine distance is `1 - dot / (|z| |c|)` and rejects vectors with norm
/// below 1e-12.
pub fn distance_matrix(
    z: &Matrix,
    centers: &Matrix,
    kind: Distance,
    spec: &CovarianceSpec,
) -> Result<Matrix, HeadError> {
    if z.cols() != centers.cols() {
        return Err(HeadError::DimensionMismatch {
            left: z.cols(),
            right: centers.cols(),
        });
    }
    match kind {
        Distance::Euclidean => Ok(pairwise_euclidean(z, centers)),
        Distance::Mahalanobis => {
            if spec.dim != z.cols() {
                return Err(HeadError::DimensionMismatch {
                    left: spec.dim,
                    right: z.cols(),
                });
            }
            let factor = covariance_factor(spec)?;
            let zw = whiten(z, &factor)?;
            let cw = whiten(centers, &factor)?;
            Ok(pairwise_euclidean(&zw, &cw))
        }
        Distance::Cosine => {
            let zn = row_norms(z);
            let cn = row_norms(centers);
            if let Some(i) = zn.iter().position(|&v| v < 1e-12) {
                return Err(HeadError::ZeroVector {
                    side: "point",
                    index: i,
                });
            }
            if let Some(j) = cn.iter().position(|&v| v < 1e-12) {
                return Err(HeadError::ZeroVector {
                    side: "center",
                    index: j,
                });
            }
            let mut out = Matrix::zeros(z.rows(), centers.rows());
            for i in 0..z.rows() {
                let p = z.row(i);
                let dest = out.row_mut(i);
                for (j, d) in dest.iter_mut().enumerate() {
                    let c = centers.row(j);
                    let dot: f64 = p.iter().zip(c).map(|(a, b)| a * b).sum();
                    *d = 1.0 - dot / (zn[i] * cn[j]);
                }
            }
            Ok(out)
        }
    }
}
