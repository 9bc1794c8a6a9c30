//! Sparse storage, direct and iterative solvers, dense coarse solves.

mod cholesky;
mod csr;
mod dense;
mod krylov;
mod mm;

pub use cholesky::CholeskyFactor;
pub use csr::CsrMatrix;
pub use dense::{dense_spd_solve, DenseCholesky};
pub use krylov::{cg, projected_pcg, KrylovOutcome, Reorthogonalization};
pub use mm::{read_matrix_market, read_vector, write_matrix_market, write_vector};

/// Dot product with a fixed left-to-right reduction order.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
