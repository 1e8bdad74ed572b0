//! Joint training: alternating forward passes through the autoencoder and
//! the clustering head with one optimizer step per epoch.
//!
//! Each epoch encodes the data, computes distances to the centers, turns
//! them into soft assignments, predictions, and a sharpened target, then
//! backpropagates the weighted total loss through the network and (unless
//! frozen) the centers. The target acts as a constant within an epoch's
//! backward pass and is recomputed on the configured interval.

use std::time::Instant;

use super::assign::{
    clustering_loss, hard_assign, kernel_derivative_wrt_sq, kernel_similarity, kl_divergence,
    normalize_assignments, predicted_distribution, target_distribution, total_loss,
};
use super::distance::{distance_matrix, row_norms};
use super::{
    AssignmentSet, ClusteringResult, CovarianceSpec, Distance, EpochLosses, HeadError, InitMethod,
    InitSummary, TrainConfig,
};
use crate::autoencoder::{
    adam_update, reconstruction_loss, reconstruction_loss_grad, AdamParams, AutoencoderState,
    Gradients,
};
use crate::init::{birch_init, kmeans_init, threshold_search, BirchConfig, Centroids, Seeding};
use crate::linalg::Matrix;
use crate::rng::RngState;

/// The three loss values of one objective evaluation.
#[derive(Debug, Clone, Copy)]
pub struct JointLosses {
    pub reconstruction: f64,
    pub clustering: f64,
    pub total: f64,
}

struct HeadForward {
    distances: Matrix,
    raw: Matrix,
    soft: Matrix,
    predicted: Matrix,
}

fn head_forward(
    latent: &Matrix,
    centers: &Matrix,
    cfg: &TrainConfig,
) -> Result<HeadForward, HeadError> {
    let spec = CovarianceSpec::new(cfg.delta, latent.cols())?;
    let distances = distance_matrix(latent, centers, cfg.distance, &spec)?;
    let raw = kernel_similarity(&distances, &cfg.kernel);
    let soft = normalize_assignments(&raw, cfg.epsilon);
    let predicted = predicted_distribution(&soft);
    Ok(HeadForward {
        distances,
        raw,
        soft,
        predicted,
    })
}

/// Gradient of the clustering term with respect to the latent points and
/// the centers, given the upstream gradient `w` with respect to squared
/// distances.
fn distance_backward(
    latent: &Matrix,
    centers: &Matrix,
    kind: Distance,
    delta: f64,
    distances: &Matrix,
    w: &Matrix,
) -> (Matrix, Matrix) {
    let n = latent.rows();
    let k = centers.rows();
    let dim = latent.cols();
    let mut d_latent = Matrix::zeros(n, dim);
    let mut d_centers = Matrix::zeros(k, dim);

    match kind {
        Distance::Mahalanobis | Distance::Euclidean => {
            let scale = match kind {
                Distance::Mahalanobis => 2.0 / delta,
                _ => 2.0,
            };
            let mut col_sum = vec![0.0f64; k];
            let mut cross = Matrix::zeros(k, dim); // sum_i w_ij * z_i
            for i in 0..n {
                let wrow = w.row(i);
                let zrow = latent.row(i);
                let mut row_sum = 0.0;
                let mut acc = vec![0.0f64; dim]; // sum_j w_ij * c_j
                for (j, &wij) in wrow.iter().enumerate() {
                    if wij == 0.0 {
                        continue;
                    }
                    row_sum += wij;
                    col_sum[j] += wij;
                    let crow = centers.row(j);
                    for (a, &cv) in acc.iter_mut().zip(crow) {
                        *a += wij * cv;
                    }
                    let xrow = cross.row_mut(j);
                    for (x, &zv) in xrow.iter_mut().zip(zrow) {
                        *x += wij * zv;
                    }
                }
                let drow = d_latent.row_mut(i);
                for ((d, &zv), &a) in drow.iter_mut().zip(zrow).zip(&acc) {
                    *d = scale * (row_sum * zv - a);
                }
            }
            for j in 0..k {
                let crow = centers.row(j).to_vec();
                let xrow = cross.row(j).to_vec();
                let drow = d_centers.row_mut(j);
                for ((d, &cv), &x) in drow.iter_mut().zip(&crow).zip(&xrow) {
                    *d = scale * (col_sum[j] * cv - x);
                }
            }
        }
        Distance::Cosine => {
            let zn = row_norms(latent);
            let cn = row_norms(centers);
            for i in 0..n {
                let zrow = latent.row(i);
                for j in 0..k {
                    let wij = w.get(i, j);
                    if wij == 0.0 {
                        continue;
                    }
                    let crow = centers.row(j);
                    let d = distances.get(i, j);
                    let cos = 1.0 - d;
                    let upstream = 2.0 * d * wij; // dL/dD
                    let inv = 1.0 / (zn[i] * cn[j]);
                    for t in 0..dim {
                        let dz = -(crow[t] * inv - cos * zrow[t] / (zn[i] * zn[i]));
                        let dc = -(zrow[t] * inv - cos * crow[t] / (cn[j] * cn[j]));
                        d_latent.set(i, t, d_latent.get(i, t) + upstream * dz);
                        d_centers.set(j, t, d_centers.get(j, t) + upstream * dc);
                    }
                }
            }
        }
    }
    (d_latent, d_centers)
}

/// Gradient with respect to latent points and centers of
/// `alpha * KL(target || predicted)` through softmax, normalization,
/// kernel, and distance. The target is a constant here.
fn head_backward(
    latent: &Matrix,
    centers: &Matrix,
    cfg: &TrainConfig,
    fwd: &HeadForward,
    target: &Matrix,
) -> (Matrix, Matrix) {
    let n = latent.rows();
    let k = centers.rows();

    // d(alpha * ce)/d soft, through the softmax
    let mut d_soft = Matrix::zeros(n, k);
    for i in 0..n {
        let target_mass: f64 = target.row(i).iter().sum();
        let m = fwd.predicted.row(i);
        let p = target.row(i);
        let dest = d_soft.row_mut(i);
        for ((d, &mv), &pv) in dest.iter_mut().zip(m).zip(p) {
            *d = cfg.alpha * (mv * target_mass - pv);
        }
    }

    // through the row normalization
    let mut w = Matrix::zeros(n, k);
    for i in 0..n {
        let raw_sum: f64 = fwd.raw.row(i).iter().sum();
        let denom = raw_sum + cfg.epsilon;
        let row_dot: f64 = d_soft
            .row(i)
            .iter()
            .zip(fwd.soft.row(i))
            .map(|(a, b)| a * b)
            .sum();
        let dest = w.row_mut(i);
        for (j, d) in dest.iter_mut().enumerate() {
            let d_raw = (d_soft.get(i, j) - row_dot) / denom;
            // through the kernel, leaving d/d(squared distance)
            *d = d_raw
                * kernel_derivative_wrt_sq(&cfg.kernel, fwd.distances.get(i, j), fwd.raw.get(i, j));
        }
    }

    distance_backward(latent, centers, cfg.distance, cfg.delta, &fwd.distances, &w)
}

/// Evaluates the total objective at the given parameters against a frozen
/// target distribution. This is the function the per-epoch update descends,
/// and what finite-difference checks probe.
pub fn joint_loss_with_target(
    x: &Matrix,
    ae: &AutoencoderState,
    centers: &Matrix,
    cfg: &TrainConfig,
    target: &Matrix,
) -> Result<JointLosses, HeadError> {
    let cache = ae.forward(x)?;
    let fwd = head_forward(cache.latent(), centers, cfg)?;
    let reconstruction = reconstruction_loss(x, cache.output())?;
    let clustering = clustering_loss(target, &fwd.predicted)?;
    Ok(JointLosses {
        reconstruction,
        clustering,
        total: total_loss(clustering, reconstruction, cfg.alpha),
    })
}

/// Analytic gradients of [`joint_loss_with_target`] for every autoencoder
/// parameter and the centers.
pub fn joint_gradients_with_target(
    x: &Matrix,
    ae: &AutoencoderState,
    centers: &Matrix,
    cfg: &TrainConfig,
    target: &Matrix,
) -> Result<(Gradients, Matrix, JointLosses), HeadError> {
    let cache = ae.forward(x)?;
    let fwd = head_forward(cache.latent(), centers, cfg)?;
    let reconstruction = reconstruction_loss(x, cache.output())?;
    let clustering = clustering_loss(target, &fwd.predicted)?;
    let losses = JointLosses {
        reconstruction,
        clustering,
        total: total_loss(clustering, reconstruction, cfg.alpha),
    };

    let (d_latent, d_centers) = head_backward(cache.latent(), centers, cfg, &fwd, target);
    let d_out = reconstruction_loss_grad(x, cache.output());
    let grads = ae.backward(&cache, &d_out, Some(&d_latent));
    Ok((grads, d_centers, losses))
}

fn initialize_centers(
    latent: &Matrix,
    cfg: &TrainConfig,
    rng: &mut RngState,
) -> Result<(Centroids, InitSummary), HeadError> {
    let started = Instant::now();
    match cfg.init {
        InitMethod::Birch => {
            let base = BirchConfig::new(
                cfg.birch_threshold.unwrap_or(1.0),
                cfg.birch_branching,
                cfg.birch_leaf_capacity,
            )?;
            let (threshold, steps) = match cfg.birch_threshold {
                Some(t) => (t, Vec::new()),
                None => {
                    let search = threshold_search(latent, cfg.k, &base)?;
                    let steps = search
                        .steps
                        .iter()
                        .map(|s| (s.threshold, s.leaf_entries))
                        .collect();
                    (search.threshold, steps)
                }
            };
            let config = BirchConfig { threshold, ..base };
            let centroids = birch_init(latent, cfg.k, &config, rng)?;
            Ok((
                centroids,
                InitSummary {
                    method: Some(InitMethod::Birch),
                    birch_threshold: Some(threshold),
                    threshold_steps: steps,
                    seconds: started.elapsed().as_secs_f64(),
                },
            ))
        }
        InitMethod::KMeans | InitMethod::KMeansPlusPlus => {
            let seeding = if cfg.init == InitMethod::KMeans {
                Seeding::Uniform
            } else {
                Seeding::PlusPlus
            };
            let centroids = kmeans_init(latent, cfg.k, cfg.restarts, seeding, rng)?;
            Ok((
                centroids,
                InitSummary {
                    method: Some(cfg.init),
                    birch_threshold: None,
                    threshold_steps: Vec::new(),
                    seconds: started.elapsed().as_secs_f64(),
                },
            ))
        }
    }
}

/// Per-epoch snapshot handed to a training observer.
pub struct EpochView<'a> {
    pub epoch: usize,
    pub soft: &'a Matrix,
    pub predicted: &'a Matrix,
    pub target: &'a Matrix,
    pub losses: &'a EpochLosses,
}

/// Joint training of the autoencoder and the clustering head.
///
/// Initializes centers on the pretrained latent representation, then runs
/// `cfg.epochs` full-batch epochs, each recording the reconstruction loss,
/// the clustering divergence, their weighted total, and the divergence of
/// the soft assignments from the target. Returns hard labels from the
/// final predicted probabilities. Identical inputs and seed give
/// bit-identical results.
pub fn train(
    x: &Matrix,
    cfg: &TrainConfig,
    ae: AutoencoderState,
    rng: &mut RngState,
) -> Result<ClusteringResult, HeadError> {
    train_with_observer(x, cfg, ae, rng, |_| {})
}

/// [`train`] with a per-epoch observer over the three distributions and
/// the epoch losses.
pub fn train_with_observer(
    x: &Matrix,
    cfg: &TrainConfig,
    mut ae: AutoencoderState,
    rng: &mut RngState,
    observer: impl FnMut(EpochView<'_>),
) -> Result<ClusteringResult, HeadError> {
    cfg.validate(x.rows())?;
    ae.reset_optimizer();
    let z0 = ae.encode(x)?;
    let (centroids, init_summary) = initialize_centers(&z0, cfg, rng)?;
    run_epochs(x, cfg, ae, centroids.centers, init_summary, observer)
}

/// Joint training from caller-supplied centers, skipping initialization.
/// The centers must be `cfg.k` rows of the latent dimensionality.
pub fn train_from_centers(
    x: &Matrix,
    cfg: &TrainConfig,
    mut ae: AutoencoderState,
    centers: Matrix,
    observer: impl FnMut(EpochView<'_>),
) -> Result<ClusteringResult, HeadError> {
    cfg.validate(x.rows())?;
    if centers.rows() != cfg.k {
        return Err(HeadError::DimensionMismatch {
            left: centers.rows(),
            right: cfg.k,
        });
    }
    if centers.cols() != ae.latent_dim() {
        return Err(HeadError::DimensionMismatch {
            left: centers.cols(),
            right: ae.latent_dim(),
        });
    }
    ae.reset_optimizer();
    let summary = InitSummary {
        method: None,
        birch_threshold: None,
        threshold_steps: Vec::new(),
        seconds: 0.0,
    };
    run_epochs(x, cfg, ae, centers, summary, observer)
}

fn run_epochs(
    x: &Matrix,
    cfg: &TrainConfig,
    mut ae: AutoencoderState,
    mut centers: Matrix,
    init_summary: InitSummary,
    mut observer: impl FnMut(EpochView<'_>),
) -> Result<ClusteringResult, HeadError> {
    let adam = AdamParams::default();
    let mut center_m = vec![0.0; centers.data().len()];
    let mut center_v = vec![0.0; centers.data().len()];

    let mut target: Option<Matrix> = None;
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    let mut epoch_seconds = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let started = Instant::now();

        let cache = ae.forward(x)?;
        let fwd = head_forward(cache.latent(), &centers, cfg)?;
        if target.is_none() || epoch % cfg.target_refresh == 0 {
            target = Some(target_distribution(&fwd.soft)?);
        }
        let tgt = target.as_ref().unwrap();

        let reconstruction = reconstruction_loss(x, cache.output())?;
        let clustering = clustering_loss(tgt, &fwd.predicted)?;
        let total = total_loss(clustering, reconstruction, cfg.alpha);
        if !reconstruction.is_finite() || !clustering.is_finite() || !total.is_finite() {
            return Err(HeadError::NonFiniteLoss { epoch });
        }
        let losses = EpochLosses {
            reconstruction,
            clustering,
            total,
            kl_target_soft: kl_divergence(tgt, &fwd.soft),
        };
        observer(EpochView {
            epoch,
            soft: &fwd.soft,
            predicted: &fwd.predicted,
            target: tgt,
            losses: &losses,
        });
        loss_curve.push(losses);

        let (d_latent, d_centers) = head_backward(cache.latent(), &centers, cfg, &fwd, tgt);
        let d_out = reconstruction_loss_grad(x, cache.output());
        let grads = ae.backward(&cache, &d_out, Some(&d_latent));
        ae.gradient_step(&grads, cfg.lr)?;
        if cfg.centers_trainable {
            adam_update(
                centers.data_mut(),
                d_centers.data(),
                &mut center_m,
                &mut center_v,
                (epoch + 1) as u64,
                cfg.lr,
                &adam,
            );
        }

        epoch_seconds.push(started.elapsed().as_secs_f64());
    }

    // assignments reflect the state after the final update
    let latent = ae.encode(x)?;
    let fwd = head_forward(&latent, &centers, cfg)?;
    let final_target = target_distribution(&fwd.soft)?;
    let labels = hard_assign(&fwd.predicted);
    Ok(ClusteringResult {
        labels,
        centers,
        loss_curve,
        assignments: AssignmentSet {
            soft: fwd.soft,
            predicted: fwd.predicted,
            target: final_target,
        },
        epoch_seconds,
        init: init_summary,
    })
}
