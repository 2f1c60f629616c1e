//! Sparse and dense kernels, flexible GMRES, and Chebyshev relaxation.

pub mod chebyshev;
pub mod dense;
pub mod krylov;
pub mod sparse;

pub use chebyshev::{chebyshev, estimate_lambda_max, ChebyshevBounds, LambdaEstimate};
pub use dense::{DenseLu, DenseMatrix};
pub use krylov::{fgmres, FgmresOptions, KrylovReport, KrylovTimings};
pub use sparse::CsrMatrix;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
