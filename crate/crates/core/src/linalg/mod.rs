//! Sparse storage, banded factorisation and symmetric-definite eigensolvers.

mod banded;
mod csr;
pub mod eigen;

pub use banded::BandedCholesky;
pub use csr::{CsrMatrix, Pattern};
pub use eigen::{dense_largest, largest_shift_invert, EigOptions, EigPair};

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// y += c x
#[inline]
pub fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}
