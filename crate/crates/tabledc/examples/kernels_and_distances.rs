//! The assignment pipeline by hand on a tiny latent set: distances through
//! a kernel into soft assignments, predicted probabilities, and the
//! sharpened target, under each distance and kernel.
//!
//!     cargo run --example kernels_and_distances

use tabledc::head::{
    distance_matrix, hard_assign, kernel_similarity, normalize_assignments, predicted_distribution,
    target_distribution, CovarianceSpec, Distance, Kernel,
};
use tabledc::linalg::Matrix;

fn main() {
    // five latent points around two directionally distinct centers (and
    // away from the origin, so the cosine distance stays defined)
    let z = Matrix::new(5, 2, vec![2.1, 0.3, 1.9, 0.4, 2.0, 0.2, 0.4, 2.1, 0.3, 1.9]).unwrap();
    let centers = Matrix::new(2, 2, vec![2.0, 0.3, 0.35, 2.0]).unwrap();
    let spec = CovarianceSpec::new(0.01, 2).unwrap();

    for distance in [Distance::Mahalanobis, Distance::Euclidean, Distance::Cosine] {
        let d = distance_matrix(&z, &centers, distance, &spec).unwrap();
        println!("{distance:?} distances to the two centers:");
        for i in 0..d.rows() {
            println!("  point {i}: [{:.3}, {:.3}]", d.get(i, 0), d.get(i, 1));
        }
    }

    // the Mahalanobis scale (delta = 0.01 multiplies distances by 10)
    // calls for a matching bandwidth
    let d = distance_matrix(&z, &centers, Distance::Mahalanobis, &spec).unwrap();
    for kernel in [
        Kernel::Cauchy { gamma: 10.0 },
        Kernel::StudentsT { nu: 1.0 },
        Kernel::Normal { gamma: 10.0 },
    ] {
        let raw = kernel_similarity(&d, &kernel);
        let soft = normalize_assignments(&raw, 1e-10);
        let predicted = predicted_distribution(&soft);
        let target = target_distribution(&soft).unwrap();
        let labels = hard_assign(&predicted);
        println!("\n{kernel:?}");
        println!(
            "  soft row 0:      [{:.4}, {:.4}]",
            soft.get(0, 0),
            soft.get(0, 1)
        );
        println!(
            "  predicted row 0: [{:.4}, {:.4}]",
            predicted.get(0, 0),
            predicted.get(0, 1)
        );
        println!(
            "  target row 0:    [{:.4}, {:.4}]  (sharpened)",
            target.get(0, 0),
            target.get(0, 1)
        );
        println!("  hard labels:     {labels:?}");
    }
}
