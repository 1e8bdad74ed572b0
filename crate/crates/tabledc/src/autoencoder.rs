//! Multi-layer encoder/decoder with manual backpropagation and an
//! Adam optimizer.
//!
//! The encoder applies `activation(W x + b)` per layer with a linear final
//! (latent) layer; the decoder mirrors the encoder dimensions in reverse
//! with a linear output layer, since dense embeddings are unbounded and a
//! squashing output could not reconstruct them. Training is full-batch by
//! default so that a seed fully determines the result; a batch-size option
//! exists for experimentation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::rng::RngState;

/// Autoencoder errors.
#[derive(Debug, Error)]
pub enum AeError {
    #[error("input has {got} columns, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("gradient shape mismatch at {0}")]
    ShapeMismatch(&'static str),
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HiddenActivation {
    Relu,
    Sigmoid,
}

/// Adam hyperparameters. The defaults are beta1 = 0.9, beta2 = 0.999,
/// epsilon = 1e-8.
#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam update of one parameter buffer, in place.
///
/// `step` is the 1-based step count after incrementing.
pub(crate) fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    lr: f64,
    hp: &AdamParams,
) {
    let bc1 = 1.0 - hp.beta1.powi(step as i32);
    let bc2 = 1.0 - hp.beta2.powi(step as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g;
        v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + hp.epsilon);
    }
}

/// Encoder/decoder layout: `layer_dims` lists the encoder dimensions from
/// input to latent (the decoder mirrors them in reverse). The standard
/// configuration, [`AeConfig::default_dims`], has four encoder layers with
/// a latent size of 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeConfig {
    pub layer_dims: Vec<usize>,
    pub activation: HiddenActivation,
    /// None = full batch (the default; deterministic and the convention here).
    pub batch_size: Option<usize>,
}

impl AeConfig {
    pub fn new(layer_dims: Vec<usize>, activation: HiddenActivation) -> Result<Self, AeError> {
        if layer_dims.len() < 2 {
            return Err(AeError::InvalidConfig(
                "need at least an input and a latent dimension".into(),
            ));
        }
        if layer_dims.contains(&0) {
            return Err(AeError::InvalidConfig("zero-sized layer".into()));
        }
        Ok(AeConfig {
            layer_dims,
            activation,
            batch_size: None,
        })
    }

    /// The standard four-layer encoder `d -> 500 -> 500 -> 2000 -> 100`.
    pub fn default_dims(input_dim: usize) -> Self {
        AeConfig {
            layer_dims: vec![input_dim, 500, 500, 2000, 100],
            activation: HiddenActivation::Relu,
            batch_size: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn latent_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }
}

/// One affine layer: `weights` is `out_dim x in_dim`, `bias` has `out_dim`.
#[derive(Debug, Clone)]
pub struct LayerParams {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone)]
struct LayerMoments {
    w_m: Vec<f64>,
    w_v: Vec<f64>,
    b_m: Vec<f64>,
    b_v: Vec<f64>,
}

impl LayerMoments {
    fn zeros_like(layer: &LayerParams) -> Self {
        LayerMoments {
            w_m: vec![0.0; layer.weights.data().len()],
            w_v: vec![0.0; layer.weights.data().len()],
            b_m: vec![0.0; layer.bias.len()],
            b_v: vec![0.0; layer.bias.len()],
        }
    }
}

/// Gradient of one layer, same shapes as [`LayerParams`].
#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Parameter-shaped gradients for the whole autoencoder.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub encoder: Vec<LayerGrad>,
    pub decoder: Vec<LayerGrad>,
}

/// Autoencoder parameters plus optimizer moments and step counter.
#[derive(Debug, Clone)]
pub struct AutoencoderState {
    pub config: AeConfig,
    pub encoder: Vec<LayerParams>,
    pub decoder: Vec<LayerParams>,
    adam: AdamParams,
    enc_moments: Vec<LayerMoments>,
    dec_moments: Vec<LayerMoments>,
    step: u64,
}

/// Per-layer activations from a full forward pass, kept for backprop.
/// `enc_acts[0]` is the input, `enc_acts.last()` the latent; `dec_acts[0]`
/// aliases the latent and `dec_acts.last()` is the reconstruction.
#[derive(Debug)]
pub struct ForwardCache {
    enc_acts: Vec<Matrix>,
    dec_acts: Vec<Matrix>,
}

impl ForwardCache {
    pub fn latent(&self) -> &Matrix {
        self.enc_acts.last().unwrap()
    }

    pub fn output(&self) -> &Matrix {
        self.dec_acts.last().unwrap()
    }
}

fn affine(input: &Matrix, layer: &LayerParams) -> Matrix {
    let n = input.rows();
    let out_dim = layer.weights.rows();
    let mut out = Matrix::zeros(n, out_dim);
    for i in 0..n {
        let x = input.row(i);
        let dest = out.row_mut(i);
        for (o, d) in dest.iter_mut().enumerate() {
            let w = layer.weights.row(o);
            let mut acc = layer.bias[o];
            for (wk, xk) in w.iter().zip(x) {
                acc += wk * xk;
            }
            *d = acc;
        }
    }
    out
}

fn apply_activation(m: &mut Matrix, act: Option<HiddenActivation>) {
    match act {
        None => {}
        Some(HiddenActivation::Relu) => {
            for v in m.data_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        Some(HiddenActivation::Sigmoid) => {
            for v in m.data_mut() {
                *v = 1.0 / (1.0 + (-*v).exp());
            }
        }
    }
}

/// Derivative of the activation, expressed from the layer output.
/// relu'(0) is taken as 0.
fn activation_derivative(output: f64, act: Option<HiddenActivation>) -> f64 {
    match act {
        None => 1.0,
        Some(HiddenActivation::Relu) => {
            if output > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Some(HiddenActivation::Sigmoid) => output * (1.0 - output),
    }
}

impl AutoencoderState {
    /// Fresh state: weights uniform in `(-1/sqrt(fan_in), +1/sqrt(fan_in))`
    /// from the seeded generator, biases zero, moments zero.
    pub fn init(config: AeConfig, rng: &mut RngState) -> Self {
        let dims = &config.layer_dims;
        let mut enc_pairs: Vec<(usize, usize)> = Vec::new();
        for w in dims.windows(2) {
            enc_pairs.push((w[0], w[1]));
        }
        let dec_pairs: Vec<(usize, usize)> = enc_pairs.iter().rev().map(|&(a, b)| (b, a)).collect();

        let mut make_stack = |pairs: &[(usize, usize)]| -> Vec<LayerParams> {
            pairs
                .iter()
                .map(|&(in_dim, out_dim)| {
                    let bound = 1.0 / (in_dim as f64).sqrt();
                    let weights =
                        Matrix::from_fn(out_dim, in_dim, |_, _| rng.uniform(-bound, bound));
                    LayerParams {
                        weights,
                        bias: vec![0.0; out_dim],
                    }
                })
                .collect()
        };

        let encoder = make_stack(&enc_pairs);
        let decoder = make_stack(&dec_pairs);
        let enc_moments = encoder.iter().map(LayerMoments::zeros_like).collect();
        let dec_moments = decoder.iter().map(LayerMoments::zeros_like).collect();
        AutoencoderState {
            config,
            encoder,
            decoder,
            adam: AdamParams::default(),
            enc_moments,
            dec_moments,
            step: 0,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.config.latent_dim()
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Drops accumulated optimizer moments and resets the step counter,
    /// as when a new training phase starts on the same parameters.
    pub fn reset_optimizer(&mut self) {
        self.enc_moments = self.encoder.iter().map(LayerMoments::zeros_like).collect();
        self.dec_moments = self.decoder.iter().map(LayerMoments::zeros_like).collect();
        self.step = 0;
    }

    fn run_stack(stack: &[LayerParams], hidden: HiddenActivation, input: &Matrix) -> Vec<Matrix> {
        let mut acts = Vec::with_capacity(stack.len() + 1);
        acts.push(input.clone());
        for (l, layer) in stack.iter().enumerate() {
            let act = if l + 1 == stack.len() {
                None
            } else {
                Some(hidden)
            };
            let mut next = affine(acts.last().unwrap(), layer);
            apply_activation(&mut next, act);
            acts.push(next);
        }
        acts
    }

    /// Latent representation of `x` (rows are samples).
    pub fn encode(&self, x: &Matrix) -> Result<Matrix, AeError> {
        if x.cols() != self.config.input_dim() {
            return Err(AeError::DimensionMismatch {
                expected: self.config.input_dim(),
                got: x.cols(),
            });
        }
        let acts = Self::run_stack(&self.encoder, self.config.activation, x);
        Ok(acts.into_iter().last().unwrap())
    }

    /// Reconstruction from a latent matrix.
    pub fn decode(&self, z: &Matrix) -> Result<Matrix, AeError> {
        if z.cols() != self.config.latent_dim() {
            return Err(AeError::DimensionMismatch {
                expected: self.config.latent_dim(),
                got: z.cols(),
            });
        }
        let acts = Self::run_stack(&self.decoder, self.config.activation, z);
        Ok(acts.into_iter().last().unwrap())
    }

    /// Full forward pass with cached per-layer activations.
    pub fn forward(&self, x: &Matrix) -> Result<ForwardCache, AeError> {
        if x.cols() != self.config.input_dim() {
            return Err(AeError::DimensionMismatch {
                expected: self.config.input_dim(),
                got: x.cols(),
            });
        }
        let enc_acts = Self::run_stack(&self.encoder, self.config.activation, x);
        let dec_acts = Self::run_stack(
            &self.decoder,
            self.config.activation,
            enc_acts.last().unwrap(),
        );
        Ok(ForwardCache { enc_acts, dec_acts })
    }

    fn backward_stack(
        stack: &[LayerParams],
        hidden: HiddenActivation,
        acts: &[Matrix],
        mut upstream: Matrix,
    ) -> (Vec<LayerGrad>, Matrix) {
        let mut grads: Vec<Option<LayerGrad>> = (0..stack.len()).map(|_| None).collect();
        for l in (0..stack.len()).rev() {
            let act = if l + 1 == stack.len() {
                None
            } else {
                Some(hidden)
            };
            let output = &acts[l + 1];
            let input = &acts[l];
            let n = input.rows();
            let out_dim = stack[l].weights.rows();
            let in_dim = stack[l].weights.cols();

            // delta = upstream .* act'(output)
            let mut delta = upstream;
            for (d, o) in delta.data_mut().iter_mut().zip(output.data()) {
                *d *= activation_derivative(*o, act);
            }

            let mut dw = Matrix::zeros(out_dim, in_dim);
            let mut db = vec![0.0; out_dim];
            for i in 0..n {
                let drow = delta.row(i);
                let xrow = input.row(i);
                for (o, &dv) in drow.iter().enumerate() {
                    if dv == 0.0 {
                        continue;
                    }
                    db[o] += dv;
                    let wrow = dw.row_mut(o);
                    for (wk, &xk) in wrow.iter_mut().zip(xrow) {
                        *wk += dv * xk;
                    }
                }
            }

            // propagate to the layer input: delta (n x out) * W (out x in)
            let mut prev = Matrix::zeros(n, in_dim);
            for i in 0..n {
                let drow = delta.row(i);
                let prow = prev.row_mut(i);
                for (o, &dv) in drow.iter().enumerate() {
                    if dv == 0.0 {
                        continue;
                    }
                    let wrow = stack[l].weights.row(o);
                    for (pk, &wk) in prow.iter_mut().zip(wrow) {
                        *pk += dv * wk;
                    }
                }
            }

            grads[l] = Some(LayerGrad {
                weights: dw,
                bias: db,
            });
            upstream = prev;
        }
        (grads.into_iter().map(Option::unwrap).collect(), upstream)
    }

    /// Backpropagates `d_output` (the loss gradient with respect to the
    /// reconstruction) through decoder and encoder. `extra_latent_grad`,
    /// when given, is added to the latent gradient between the two stacks,
    /// which is how the clustering head injects its term.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        d_output: &Matrix,
        extra_latent_grad: Option<&Matrix>,
    ) -> Gradients {
        let (dec_grads, mut d_latent) = Self::backward_stack(
            &self.decoder,
            self.config.activation,
            &cache.dec_acts,
            d_output.clone(),
        );
        if let Some(extra) = extra_latent_grad {
            for (d, e) in d_latent.data_mut().iter_mut().zip(extra.data()) {
                *d += e;
            }
        }
        let (enc_grads, _) = Self::backward_stack(
            &self.encoder,
            self.config.activation,
            &cache.enc_acts,
            d_latent,
        );
        Gradients {
            encoder: enc_grads,
            decoder: dec_grads,
        }
    }

    /// One Adam step over every parameter, with bias correction; the step
    /// counter increments once per call. All-zero gradients still advance
    /// the counter but leave parameters unchanged.
    pub fn gradient_step(&mut self, grads: &Gradients, lr: f64) -> Result<(), AeError> {
        if grads.encoder.len() != self.encoder.len() || grads.decoder.len() != self.decoder.len() {
            return Err(AeError::ShapeMismatch("layer count"));
        }
        for (g, p) in grads
            .encoder
            .iter()
            .zip(&self.encoder)
            .chain(grads.decoder.iter().zip(&self.decoder))
        {
            if g.weights.rows() != p.weights.rows()
                || g.weights.cols() != p.weights.cols()
                || g.bias.len() != p.bias.len()
            {
                return Err(AeError::ShapeMismatch("layer parameters"));
            }
        }

        self.step += 1;
        let step = self.step;
        let hp = self.adam;
        for (layer, (grad, mom)) in self
            .encoder
            .iter_mut()
            .zip(grads.encoder.iter().zip(self.enc_moments.iter_mut()))
            .chain(
                self.decoder
                    .iter_mut()
                    .zip(grads.decoder.iter().zip(self.dec_moments.iter_mut())),
            )
        {
            adam_update(
                layer.weights.data_mut(),
                grad.weights.data(),
                &mut mom.w_m,
                &mut mom.w_v,
                step,
                lr,
                &hp,
            );
            adam_update(
                &mut layer.bias,
                &grad.bias,
                &mut mom.b_m,
                &mut mom.b_v,
                step,
                lr,
                &hp,
            );
        }
        Ok(())
    }
}

/// Mean squared error over all `n x d` entries.
pub fn reconstruction_loss(x: &Matrix, x_hat: &Matrix) -> Result<f64, AeError> {
    if x.rows() != x_hat.rows() || x.cols() != x_hat.cols() {
        return Err(AeError::DimensionMismatch {
            expected: x.cols(),
            got: x_hat.cols(),
        });
    }
    let total: f64 = x
        .data()
        .iter()
        .zip(x_hat.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(total / x.data().len() as f64)
}

/// Gradient of [`reconstruction_loss`] with respect to the reconstruction.
pub(crate) fn reconstruction_loss_grad(x: &Matrix, x_hat: &Matrix) -> Matrix {
    let scale = 2.0 / x.data().len() as f64;
    let mut out = x_hat.clone();
    for (o, t) in out.data_mut().iter_mut().zip(x.data()) {
        *o = (*o - t) * scale;
    }
    out
}

/// Full-batch Adam minimization of the reconstruction error. Returns the
/// trained state and one loss value per epoch (the loss of the forward pass
/// each update was computed from).
pub fn pretrain(
    x: &Matrix,
    config: AeConfig,
    epochs: usize,
    lr: f64,
    rng: &mut RngState,
) -> Result<(AutoencoderState, Vec<f64>), AeError> {
    if x.rows() == 0 {
        return Err(AeError::InvalidConfig("empty input".into()));
    }
    let batch = config.batch_size;
    let mut state = AutoencoderState::init(config, rng);
    let mut losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let loss = match batch {
            None => {
                let cache = state.forward(x)?;
                let loss = reconstruction_loss(x, cache.output())?;
                let d_out = reconstruction_loss_grad(x, cache.output());
                let grads = state.backward(&cache, &d_out, None);
                state.gradient_step(&grads, lr)?;
                loss
            }
            Some(b) => {
                let b = b.max(1);
                let n = x.rows();
                let mut weighted = 0.0;
                let mut start = 0;
                while start < n {
                    let stop = (start + b).min(n);
                    let chunk = Matrix::from_fn(stop - start, x.cols(), |i, j| x.get(start + i, j));
                    let cache = state.forward(&chunk)?;
                    let loss = reconstruction_loss(&chunk, cache.output())?;
                    let d_out = reconstruction_loss_grad(&chunk, cache.output());
                    let grads = state.backward(&cache, &d_out, None);
                    state.gradient_step(&grads, lr)?;
                    weighted += loss * (stop - start) as f64;
                    start = stop;
                }
                weighted / n as f64
            }
        };
        if !loss.is_finite() {
            return Err(AeError::NonFiniteLoss { epoch });
        }
        losses.push(loss);
    }
    Ok((state, losses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_config(dims: &[usize]) -> AeConfig {
        AeConfig::new(dims.to_vec(), HiddenActivation::Relu).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(AeConfig::new(vec![4], HiddenActivation::Relu).is_err());
        assert!(AeConfig::new(vec![4, 0, 2], HiddenActivation::Relu).is_err());
        let cfg = AeConfig::default_dims(64);
        assert_eq!(cfg.layer_dims, vec![64, 500, 500, 2000, 100]);
        assert_eq!(cfg.latent_dim(), 100);
    }

    #[test]
    fn zero_weights_encode_to_zero() {
        let mut rng = RngState::new(1);
        let mut state = AutoencoderState::init(small_config(&[3, 2]), &mut rng);
        for layer in state.encoder.iter_mut().chain(state.decoder.iter_mut()) {
            layer.weights = Matrix::zeros(layer.weights.rows(), layer.weights.cols());
            layer.bias.iter_mut().for_each(|b| *b = 0.0);
        }
        let x = Matrix::new(2, 3, vec![1.0, -2.0, 3.0, 0.5, 0.5, 0.5]).unwrap();
        let z = state.encode(&x).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
        let out = state.decode(&z).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_layer_is_identity() {
        let mut rng = RngState::new(1);
        // single linear layer each way
        let mut state = AutoencoderState::init(small_config(&[2, 2]), &mut rng);
        for layer in state.encoder.iter_mut().chain(state.decoder.iter_mut()) {
            layer.weights = Matrix::scaled_identity(2, 1.0);
            layer.bias = vec![0.0, 0.0];
        }
        let x = Matrix::new(1, 2, vec![0.7, -0.4]).unwrap();
        let z = state.encode(&x).unwrap();
        assert_eq!(z.data(), x.data());
        assert_eq!(state.decode(&z).unwrap().data(), x.data());
    }

    #[test]
    fn relu_hidden_layer_hand_evaluation() {
        let mut rng = RngState::new(1);
        // 2 -> 2 (relu hidden) -> 1; inspect the hidden activation by making
        // the second layer sum its inputs.
        let mut state = AutoencoderState::init(small_config(&[2, 2, 1]), &mut rng);
        state.encoder[0].weights = Matrix::scaled_identity(2, 1.0);
        state.encoder[0].bias = vec![1.0, 1.0];
        state.encoder[1].weights = Matrix::new(1, 2, vec![1.0, 1.0]).unwrap();
        state.encoder[1].bias = vec![0.0];
        let x = Matrix::new(1, 2, vec![-2.0, 3.0]).unwrap();
        // hidden = relu((-2, 3) + (1, 1)) = (0, 4); latent = 0 + 4
        let z = state.encode(&x).unwrap();
        assert_eq!(z.get(0, 0), 4.0);
    }

    #[test]
    fn decoder_scaling_hand_evaluation() {
        let mut rng = RngState::new(1);
        let mut state = AutoencoderState::init(small_config(&[2, 2]), &mut rng);
        state.decoder[0].weights = Matrix::scaled_identity(2, 2.0);
        state.decoder[0].bias = vec![0.0, 0.0];
        let z = Matrix::new(1, 2, vec![1.0, -1.0]).unwrap();
        assert_eq!(state.decode(&z).unwrap().data(), &[2.0, -2.0]);
    }

    #[test]
    fn reconstruction_loss_cases() {
        let x = Matrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        assert_eq!(reconstruction_loss(&x, &x).unwrap(), 0.0);

        let x_hat = Matrix::new(1, 2, vec![2.0, 3.0]).unwrap();
        assert_eq!(reconstruction_loss(&x, &x_hat).unwrap(), 1.0);

        // doubling residuals quadruples the loss
        let x_hat2 = Matrix::new(1, 2, vec![3.0, 4.0]).unwrap();
        assert_eq!(reconstruction_loss(&x, &x_hat2).unwrap(), 4.0);

        let bad = Matrix::zeros(2, 2);
        assert!(reconstruction_loss(&x, &bad).is_err());
    }

    #[test]
    fn adam_first_step_magnitude_is_lr() {
        // scalar parameter, constant unit gradient
        let mut p = vec![0.5];
        let mut m = vec![0.0];
        let mut v = vec![0.0];
        adam_update(
            &mut p,
            &[1.0],
            &mut m,
            &mut v,
            1,
            0.1,
            &AdamParams::default(),
        );
        assert_abs_diff_eq!(p[0], 0.4, epsilon = 1e-8);
    }

    #[test]
    fn adam_step_decays_after_gradient_stops() {
        let hp = AdamParams::default();
        let mut p = vec![0.0];
        let mut m = vec![0.0];
        let mut v = vec![0.0];
        adam_update(&mut p, &[1.0], &mut m, &mut v, 1, 0.1, &hp);
        let after1 = p[0];
        adam_update(&mut p, &[0.0], &mut m, &mut v, 2, 0.1, &hp);
        let step2 = (p[0] - after1).abs();
        let after2 = p[0];
        adam_update(&mut p, &[0.0], &mut m, &mut v, 3, 0.1, &hp);
        let step3 = (p[0] - after2).abs();
        assert!(step2 < after1.abs());
        assert!(step3 < step2);
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut rng = RngState::new(9);
        let mut state = AutoencoderState::init(small_config(&[3, 2]), &mut rng);
        let before: Vec<f64> = state.encoder[0].weights.data().to_vec();
        let grads = Gradients {
            encoder: state
                .encoder
                .iter()
                .map(|l| LayerGrad {
                    weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
            decoder: state
                .decoder
                .iter()
                .map(|l| LayerGrad {
                    weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        };
        state.gradient_step(&grads, 0.1).unwrap();
        assert_eq!(state.encoder[0].weights.data(), before.as_slice());
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn pretrain_zero_epochs_returns_fresh_state() {
        let x = Matrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let cfg = small_config(&[3, 2]);
        let (state, losses) = pretrain(&x, cfg.clone(), 0, 1e-3, &mut RngState::new(4)).unwrap();
        let fresh = AutoencoderState::init(cfg, &mut RngState::new(4));
        assert!(losses.is_empty());
        for (a, b) in state.encoder.iter().zip(&fresh.encoder) {
            assert_eq!(a.weights.data(), b.weights.data());
        }
    }

    #[test]
    fn pretrain_fits_a_constant_dataset() {
        let row = [0.8, -0.3, 0.5, 1.2];
        let x = Matrix::from_fn(16, 4, |_, j| row[j]);
        let cfg = small_config(&[4, 6, 3]);
        let (_, losses) = pretrain(&x, cfg, 200, 0.02, &mut RngState::new(2)).unwrap();
        assert_eq!(losses.len(), 200);
        assert!(losses.iter().all(|l| l.is_finite()));
        assert!(
            losses[199] < 1e-3 * losses[0],
            "expected 1000x reduction, got {} -> {}",
            losses[0],
            losses[199]
        );
    }

    #[test]
    fn pretrain_descends_on_random_data() {
        let mut rng = RngState::new(31);
        let x = Matrix::from_fn(40, 8, |_, _| rng.next_gaussian());
        let (_, losses) = pretrain(&x, small_config(&[8, 16, 4]), 30, 1e-2, &mut rng).unwrap();
        assert_eq!(losses.len(), 30);
        assert!(losses[29] < losses[0]);
        // monotone trend allowing small transient upticks
        let upticks = losses
            .windows(2)
            .filter(|w| w[1] > w[0] * 1.0000001)
            .count();
        assert!(
            upticks * 20 <= losses.len(),
            "too many upticks: {upticks} of {}",
            losses.len()
        );
    }

    #[test]
    fn pretrain_is_bit_deterministic() {
        let mut gen = RngState::new(55);
        let x = Matrix::from_fn(10, 5, |_, _| gen.next_gaussian());
        let cfg = small_config(&[5, 4, 2]);
        let (a, la) = pretrain(&x, cfg.clone(), 15, 1e-3, &mut RngState::new(8)).unwrap();
        let (b, lb) = pretrain(&x, cfg, 15, 1e-3, &mut RngState::new(8)).unwrap();
        assert_eq!(la, lb);
        for (x, y) in a
            .encoder
            .iter()
            .zip(&b.encoder)
            .chain(a.decoder.iter().zip(&b.decoder))
        {
            assert_eq!(x.weights.data(), y.weights.data());
            assert_eq!(x.bias, y.bias);
        }
    }

    #[test]
    fn batched_pretrain_still_descends() {
        let mut rng = RngState::new(13);
        let x = Matrix::from_fn(30, 6, |_, _| rng.next_gaussian());
        let mut cfg = small_config(&[6, 8, 3]);
        cfg.batch_size = Some(10);
        let (_, losses) = pretrain(&x, cfg, 40, 1e-2, &mut rng).unwrap();
        assert!(losses[39] < losses[0]);
    }

    #[test]
    fn encode_and_decode_reject_wrong_width() {
        let mut rng = RngState::new(3);
        let state = AutoencoderState::init(small_config(&[4, 2]), &mut rng);
        let x = Matrix::zeros(1, 3);
        assert!(matches!(
            state.encode(&x),
            Err(AeError::DimensionMismatch {
                expected: 4,
                got: 3
            })
        ));
        assert!(matches!(
            state.decode(&x),
            Err(AeError::DimensionMismatch {
                expected: 2,
                got: 3
            })
        ));
    }

    /// Central-difference check of every parameter gradient of the
    /// reconstruction loss on a 8 -> 6 -> 4 -> 2 network. The seed puts
    /// every hidden preactivation well away from the relu kink, so the
    /// difference quotient is valid at this point.
    #[test]
    fn reconstruction_gradients_match_finite_differences() {
        let mut rng = RngState::new(179);
        let x = Matrix::from_fn(20, 8, |_, _| rng.next_gaussian());
        let cfg = small_config(&[8, 6, 4, 2]);
        let state = AutoencoderState::init(cfg, &mut rng);

        let cache = state.forward(&x).unwrap();
        let d_out = reconstruction_loss_grad(&x, cache.output());
        let grads = state.backward(&cache, &d_out, None);

        let loss_of = |s: &AutoencoderState| -> f64 {
            let c = s.forward(&x).unwrap();
            reconstruction_loss(&x, c.output()).unwrap()
        };

        let h = 1e-5;
        let mut checked = 0usize;
        for enc in [true, false] {
            let layer_count = if enc {
                state.encoder.len()
            } else {
                state.decoder.len()
            };
            for l in 0..layer_count {
                let (rows, cols) = {
                    let p = if enc {
                        &state.encoder[l]
                    } else {
                        &state.decoder[l]
                    };
                    (p.weights.rows(), p.weights.cols())
                };
                for r in 0..rows {
                    for c in 0..cols + 1 {
                        // c == cols probes the bias entry r
                        let mut plus = state.clone();
                        let mut minus = state.clone();
                        {
                            let (p, m) = if enc {
                                (&mut plus.encoder[l], &mut minus.encoder[l])
                            } else {
                                (&mut plus.decoder[l], &mut minus.decoder[l])
                            };
                            if c < cols {
                                p.weights.set(r, c, p.weights.get(r, c) + h);
                                m.weights.set(r, c, m.weights.get(r, c) - h);
                            } else {
                                p.bias[r] += h;
                                m.bias[r] -= h;
                            }
                        }
                        let numeric = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
                        let g = if enc {
                            &grads.encoder[l]
                        } else {
                            &grads.decoder[l]
                        };
                        let analytic = if c < cols {
                            g.weights.get(r, c)
                        } else {
                            g.bias[r]
                        };
                        let denom = analytic.abs().max(numeric.abs()).max(1e-4);
                        assert!(
                            (analytic - numeric).abs() / denom < 1e-4,
                            "gradient mismatch enc={enc} layer={l} r={r} c={c}: {analytic} vs {numeric}"
                        );
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 100);
    }
}
