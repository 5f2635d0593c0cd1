//! Largest eigenpair of the symmetric-definite pencil `A x = λ B x`.
//!
//! The iterative path is a thick-restart Lanczos on the shift-inverted operator
//! `(σB − A)⁻¹ B`, orthogonalised in the B-inner product. The shift σ must lie
//! above the whole spectrum so that `σB − A` is positive definite and admits a
//! banded Cholesky factorisation. The dense path reduces to a standard
//! symmetric problem through the Cholesky factor of B.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, BandedCholesky, CsrMatrix};

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct EigOptions {
    /// Target for ‖A x − λ B x‖ / ‖B x‖.
    pub tol: f64,
    pub krylov_dim: usize,
    pub keep: usize,
    pub max_restarts: usize,
    /// Relative gap below which two top eigenvalues are treated as one.
    pub degeneracy_tol: f64,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            tol: 1e-9,
            krylov_dim: 60,
            keep: 12,
            max_restarts: 400,
            degeneracy_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigPair {
    pub value: f64,
    /// Normalised so that xᵀ B x = 1.
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Picks the representative of a (numerically) degenerate top eigenspace.
///
/// `weight` is the quadratic form used for tie-breaking: among B-normalised
/// combinations of the candidate vectors, the one maximising `weight` wins.
pub type TieBreak<'a> = &'a dyn Fn(&[f64]) -> f64;

fn b_norm(b: &CsrMatrix, x: &[f64]) -> f64 {
    b.quad_form(x).max(0.0).sqrt()
}

fn residual(a: &CsrMatrix, b: &CsrMatrix, x: &[f64], lambda: f64) -> f64 {
    let ax = a.mul_vec(x);
    let bx = b.mul_vec(x);
    let num: f64 = ax
        .iter()
        .zip(&bx)
        .map(|(p, q)| (p - lambda * q).powi(2))
        .sum::<f64>()
        .sqrt();
    num / dot(&bx, &bx).sqrt()
}

/// Fixes the sign so that the entry of largest magnitude is positive.
pub fn canonical_sign(x: &mut [f64]) {
    let mut best = 0usize;
    let mut mag = -1.0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > mag {
            mag = v.abs();
            best = i;
        }
    }
    if x.get(best).is_some_and(|v| *v < 0.0) {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Among B-orthonormal `cands`, returns the combination maximising `tie`.
fn resolve_degenerate(cands: &[Vec<f64>], tie: TieBreak<'_>) -> Vec<f64> {
    if cands.len() == 1 {
        return cands[0].clone();
    }
    let k = cands.len();
    // The tie-break functional is a quadratic form; recover its Gram matrix by polarisation.
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        g[(i, i)] = tie(&cands[i]);
    }
    for i in 0..k {
        for j in i + 1..k {
            let s: Vec<f64> = cands[i].iter().zip(&cands[j]).map(|(p, q)| p + q).collect();
            let v = 0.5 * (tie(&s) - g[(i, i)] - g[(j, j)]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(g);
    let top = argmax(eig.eigenvalues.as_slice());
    let coef = eig.eigenvectors.column(top);
    let n = cands[0].len();
    let mut x = vec![0.0; n];
    for (c, v) in coef.iter().zip(cands) {
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi += c * vi;
        }
    }
    x
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Deterministic pseudo-random start vector.
pub fn start_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
}

/// Largest eigenpair of `A x = λ B x` by shift-invert thick-restart Lanczos.
///
/// `sigma` must exceed the largest eigenvalue; a failed factorisation of
/// `σB − A` is reported as [`Error::SingularSystem`].
pub fn largest_shift_invert(
    a: &CsrMatrix,
    b: &CsrMatrix,
    sigma: f64,
    warm: Option<&[f64]>,
    opts: &EigOptions,
    tie: Option<TieBreak<'_>>,
) -> Result<EigPair> {
    let n = a.n();
    if b.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.n(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty eigenproblem".into()));
    }
    let shifted = CsrMatrix::lincomb(&[(sigma, b), (-1.0, a)])?;
    let chol = BandedCholesky::factor(&shifted)?;
    let op = |v: &[f64], bv: &mut Vec<f64>| -> Vec<f64> {
        *bv = b.mul_vec(v);
        chol.solve(bv)
    };

    let m = opts.krylov_dim.min(n).max(2.min(n));
    let keep = opts.keep.min(m.saturating_sub(2)).max(1);

    let mut x0 = start_vector(n, 0x5eed_1a2c);
    if let Some(w) = warm {
        if w.len() == n {
            let scale = b_norm(b, w).max(1e-300);
            let noise = b_norm(b, &x0).max(1e-300);
            for (xi, wi) in x0.iter_mut().zip(w) {
                *xi = wi / scale + 1e-3 * *xi / noise;
            }
        }
    }

    // basis vectors, their B-images, and the projected matrix
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut bbasis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = DMatrix::<f64>::zeros(m + 1, m + 1);

    let nrm = b_norm(b, &x0);
    let v0: Vec<f64> = x0.iter().map(|x| x / nrm).collect();
    bbasis.push(b.mul_vec(&v0));
    basis.push(v0);
    let mut filled = 0usize; // number of columns of h already computed

    let mut iterations = 0usize;
    let mut best_res = f64::INFINITY;

    for restart in 0..=opts.max_restarts {
        // extend the basis up to m vectors
        let mut breakdown = false;
        let mut j = filled;
        while j < m {
            let mut bv = Vec::new();
            let mut w = op(&basis[j], &mut bv);
            iterations += 1;
            // two passes of classical Gram-Schmidt in the B-inner product
            for pass in 0..2 {
                for (i, (vi, bvi)) in basis.iter().zip(&bbasis).enumerate() {
                    let c = dot(bvi, &w);
                    if pass == 0 {
                        h[(i, j)] = c;
                    } else {
                        h[(i, j)] += c;
                    }
                    for (wk, vk) in w.iter_mut().zip(vi) {
                        *wk -= c * vk;
                    }
                }
            }
            for i in 0..=j {
                h[(j, i)] = h[(i, j)];
            }
            let bw = b.mul_vec(&w);
            let beta = dot(&w, &bw).max(0.0).sqrt();
            j += 1;
            let scale = h.view((0, 0), (j, j)).abs().max().max(1e-300);
            if beta <= 1e-13 * scale || j == n {
                breakdown = true;
                h[(j.min(m), j - 1)] = 0.0;
                break;
            }
            h[(j, j - 1)] = beta;
            h[(j - 1, j)] = beta;
            basis.push(w.iter().map(|x| x / beta).collect());
            bbasis.push(bw.iter().map(|x| x / beta).collect());
        }
        let k = j;
        let hk = h.view((0, 0), (k, k)).into_owned();
        let eig = SymmetricEigen::new(hk);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&p, &q| eig.eigenvalues[q].total_cmp(&eig.eigenvalues[p]));

        let ritz = |col: usize| -> Vec<f64> {
            let s = eig.eigenvectors.column(col);
            let mut y = vec![0.0; n];
            for (c, v) in s.iter().zip(&basis[..k]) {
                for (yi, vi) in y.iter_mut().zip(v) {
                    *yi += c * vi;
                }
            }
            y
        };

        let theta_top = eig.eigenvalues[order[0]];
        let lambda_top = sigma - 1.0 / theta_top;
        // candidates numerically degenerate with the top one
        let mut cands = vec![ritz(order[0])];
        for &c in order.iter().skip(1) {
            let lam = sigma - 1.0 / eig.eigenvalues[c];
            if (lambda_top - lam).abs() <= opts.degeneracy_tol * lambda_top.abs().max(1.0) {
                cands.push(ritz(c));
            } else {
                break;
            }
        }
        let mut x = match (tie, cands.len()) {
            (Some(t), l) if l > 1 => resolve_degenerate(&cands, t),
            _ => cands.swap_remove(0),
        };
        let nx = b_norm(b, &x);
        x.iter_mut().for_each(|v| *v /= nx);
        canonical_sign(&mut x);
        let value = a.quad_form(&x);
        let res = residual(a, b, &x, value);
        best_res = best_res.min(res);
        let pair = EigPair {
            value,
            vector: x,
            residual: res,
            iterations,
        };
        if res <= opts.tol || breakdown {
            if res > opts.tol && breakdown {
                // invariant subspace reached: the Ritz pair is exact up to rounding
                return if res <= opts.tol.max(1e-6) {
                    Ok(pair)
                } else {
                    Err(Error::EigensolverStall {
                        iterations,
                        residual: res,
                    })
                };
            }
            return Ok(pair);
        }
        if restart == opts.max_restarts {
            break;
        }

        // thick restart: keep the top `keep` Ritz vectors plus the residual direction
        let beta = h[(k, k - 1)];
        let resid_vec = basis[k].clone();
        let resid_b = bbasis[k].clone();
        let kept: Vec<usize> = order.iter().copied().take(keep).collect();
        let mut new_basis = Vec::with_capacity(m + 1);
        let mut new_bbasis = Vec::with_capacity(m + 1);
        let mut new_h = DMatrix::<f64>::zeros(m + 1, m + 1);
        for (r, &c) in kept.iter().enumerate() {
            let y = ritz(c);
            new_bbasis.push(b.mul_vec(&y));
            new_basis.push(y);
            new_h[(r, r)] = eig.eigenvalues[c];
            let coupling = beta * eig.eigenvectors[(k - 1, c)];
            new_h[(kept.len(), r)] = coupling;
            new_h[(r, kept.len())] = coupling;
        }
        new_basis.push(resid_vec);
        new_bbasis.push(resid_b);
        basis = new_basis;
        bbasis = new_bbasis;
        h = new_h;
        filled = kept.len();
    }
    Err(Error::EigensolverStall {
        iterations,
        residual: best_res,
    })
}

/// Dense oracle: all eigenpairs of `A x = λ B x`, largest first, B-normalised.
pub fn dense_generalized(a: &CsrMatrix, b: &CsrMatrix) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let ad = a.to_dense();
    let bd = b.to_dense();
    let chol = nalgebra::Cholesky::new(bd).ok_or(Error::SingularSystem {
        pivot: 0,
        value: 0.0,
    })?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or(Error::SingularSystem {
        pivot: 0,
        value: 0.0,
    })?;
    let mut c = &linv * ad * linv.transpose();
    c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[q].total_cmp(&eig.eigenvalues[p]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let lt_inv = linv.transpose();
    let mut vecs = DMatrix::zeros(a.n(), a.n());
    for (col, &i) in order.iter().enumerate() {
        let y = eig.eigenvectors.column(i);
        let x = &lt_inv * y;
        vecs.set_column(col, &x);
    }
    Ok((values, vecs))
}

/// Dense oracle for the largest eigenpair, with the same tie-break and sign rule
/// as the iterative path.
pub fn dense_largest(
    a: &CsrMatrix,
    b: &CsrMatrix,
    degeneracy_tol: f64,
    tie: Option<TieBreak<'_>>,
) -> Result<EigPair> {
    let (values, vecs) = dense_generalized(a, b)?;
    let top = values[0];
    let mut cands: Vec<Vec<f64>> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        if (top - v).abs() <= degeneracy_tol * top.abs().max(1.0) {
            cands.push(vecs.column(i).iter().copied().collect());
        } else {
            break;
        }
    }
    let mut x = match (tie, cands.len()) {
        (Some(t), l) if l > 1 => resolve_degenerate(&cands, t),
        _ => cands.swap_remove(0),
    };
    let nx = b_norm(b, &x);
    x.iter_mut().for_each(|v| *v /= nx);
    canonical_sign(&mut x);
    let value = a.quad_form(&x);
    let res = residual(a, b, &x, value);
    Ok(EigPair {
        value,
        vector: x,
        residual: res,
        iterations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Pattern;
    use std::sync::Arc;

    // 1D Laplacian-type pencil with known spectrum: A = -K (stiffness), B = I.
    fn laplace_pencil(n: usize) -> (CsrMatrix, CsrMatrix) {
        let rows = (0..n)
            .map(|i| (i.saturating_sub(1)..(i + 2).min(n)).collect())
            .collect();
        let pat = Arc::new(Pattern::from_rows(rows));
        let mut a = CsrMatrix::zeros(pat.clone());
        let mut b = CsrMatrix::zeros(pat);
        for i in 0..n {
            a.add(i, i, -2.0);
            b.add(i, i, 1.0);
            if i + 1 < n {
                a.add(i, i + 1, 1.0);
                a.add(i + 1, i, 1.0);
            }
        }
        (a, b)
    }

    #[test]
    fn lanczos_finds_top_of_laplacian() {
        let n = 200;
        let (a, b) = laplace_pencil(n);
        let exact = -2.0 + 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        let pair = largest_shift_invert(&a, &b, 1.0, None, &EigOptions::default(), None).unwrap();
        assert!(
            (pair.value - exact).abs() < 1e-12,
            "{} vs {}",
            pair.value,
            exact
        );
        assert!(pair.residual <= 1e-9);
        assert!((b.quad_form(&pair.vector) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_and_iterative_agree() {
        let (a, b) = laplace_pencil(40);
        let d = dense_largest(&a, &b, 1e-10, None).unwrap();
        let it = largest_shift_invert(&a, &b, 0.5, None, &EigOptions::default(), None).unwrap();
        assert!((d.value - it.value).abs() < 1e-12);
        let overlap = b.bilinear(&d.vector, &it.vector).abs();
        assert!((overlap - 1.0).abs() < 1e-8);
    }

    #[test]
    fn degenerate_top_resolved_by_tiebreak() {
        // diag(1, 1, 0.5): any unit vector in span(e0, e1) is a top eigenvector
        let pat = Arc::new(Pattern::from_rows(vec![vec![0], vec![1], vec![2]]));
        let mut a = CsrMatrix::zeros(pat.clone());
        let mut b = CsrMatrix::zeros(pat);
        for (i, v) in [1.0, 1.0, 0.5].iter().enumerate() {
            a.add(i, i, *v);
            b.add(i, i, 1.0);
        }
        let prefer_e1 = |x: &[f64]| x[1] * x[1];
        let d = dense_largest(&a, &b, 1e-10, Some(&prefer_e1)).unwrap();
        assert!((d.vector[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shift_below_spectrum_is_rejected() {
        let (a, b) = laplace_pencil(10);
        let r = largest_shift_invert(&a, &b, -5.0, None, &EigOptions::default(), None);
        assert!(matches!(r, Err(Error::SingularSystem { .. })));
    }
}
