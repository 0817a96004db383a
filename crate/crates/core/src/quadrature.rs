//! Gauss-Hermite rules for expectations over Gaussian quasistatic noise.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights for `E[f(X)]`, `X ~ N(0, 1)` (probabilists' convention,
/// weights sum to 1), via Golub-Welsch.
pub fn gauss_hermite(order: usize) -> Vec<(f64, f64)> {
    if order == 0 {
        return Vec::new();
    }
    if order == 1 {
        return vec![(0.0, 1.0)];
    }
    // Jacobi matrix of the probabilists' Hermite polynomials: off-diagonal √k.
    let mut j = DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let b = (k as f64).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut rule: Vec<(f64, f64)> = (0..order)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}
