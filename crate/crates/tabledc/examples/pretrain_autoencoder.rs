//! Pretrains the autoencoder on synthetic blob embeddings and prints the
//! reconstruction-loss curve.
//!
//!     cargo run --release --example pretrain_autoencoder

use tabledc::autoencoder::{pretrain, AeConfig, HiddenActivation};
use tabledc::harness::synth::gaussian_blobs;
use tabledc::rng::RngState;

fn main() {
    let mut rng = RngState::new(7);
    let (x, _) = gaussian_blobs(400, 32, 5, 8.0, 1.0, &mut rng);

    // four encoder layers down to a 16-dimensional latent space
    let config = AeConfig::new(vec![32, 64, 48, 16], HiddenActivation::Relu).unwrap();
    let (state, losses) = pretrain(&x, config, 30, 1e-2, &mut rng).unwrap();

    println!("epoch  reconstruction_loss");
    for (epoch, loss) in losses.iter().enumerate() {
        println!("{:>5}  {loss:.6}", epoch + 1);
    }
    println!();
    println!(
        "loss fell from {:.4} to {:.4} over {} epochs",
        losses.first().unwrap(),
        losses.last().unwrap(),
        losses.len()
    );

    let z = state.encode(&x).unwrap();
    println!("latent representation: {} x {}", z.rows(), z.cols());
}
