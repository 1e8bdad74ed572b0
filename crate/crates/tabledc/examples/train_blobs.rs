//! End-to-end joint training on synthetic blobs: pretrain, Birch
//! initialization, the full training loop, and evaluation against the
//! generator labels.
//!
//!     cargo run --release --example train_blobs

use tabledc::autoencoder::{pretrain, AeConfig, HiddenActivation};
use tabledc::harness::synth::gaussian_blobs;
use tabledc::head::{train_with_observer, TrainConfig};
use tabledc::metrics::evaluate;
use tabledc::rng::RngState;

fn main() {
    let mut rng = RngState::new(404);
    let (x, truth) = gaussian_blobs(600, 50, 6, 15.0, 1.0, &mut rng);
    println!("data: {} points, {} dims, 6 clusters", x.rows(), x.cols());

    let ae_cfg = AeConfig::new(vec![50, 128, 64, 32], HiddenActivation::Relu).unwrap();
    let (ae, pre_losses) = pretrain(&x, ae_cfg, 30, 1e-2, &mut rng).unwrap();
    println!(
        "pretraining: reconstruction {:.4} -> {:.4}",
        pre_losses[0],
        pre_losses.last().unwrap()
    );

    let mut cfg = TrainConfig::new(6);
    cfg.epochs = 50;
    let result = train_with_observer(&x, &cfg, ae, &mut rng, |view| {
        if (view.epoch + 1) % 10 == 0 {
            let l = view.losses;
            println!(
                "epoch {:>3}: re {:.4}  kl(p||m) {:.4}  total {:.4}",
                view.epoch + 1,
                l.reconstruction,
                l.clustering,
                l.total
            );
        }
    })
    .unwrap();

    println!(
        "initialized with {:?}, threshold {:?}",
        result.init.method, result.init.birch_threshold
    );

    let report = evaluate(&truth, &result.labels).unwrap();
    println!(
        "ARI {:.3}  ACC {:.3}  predicted clusters {}  unary {}",
        report.ari, report.acc, report.k_predicted, report.unary_clusters
    );
}
