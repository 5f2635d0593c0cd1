use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Row-compressed sparsity pattern, shared between operators assembled on the
/// same space so that linear combinations are a plain value-wise sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl Pattern {
    /// Build a pattern from per-row column lists. Columns are sorted and deduplicated.
    pub fn from_rows(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        Pattern {
            n,
            row_ptr,
            col_idx,
        }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    #[inline]
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    /// Largest |i - j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.n {
            for &j in &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]] {
                bw = bw.max(i.abs_diff(j));
            }
        }
        bw
    }
}

/// Square sparse matrix in CSR format.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<Pattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        CsrMatrix { pattern, values }
    }

    pub fn identity(n: usize) -> Self {
        let pattern = Arc::new(Pattern::from_rows((0..n).map(|i| vec![i]).collect()));
        CsrMatrix {
            pattern,
            values: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Adds `v` to entry (i, j). Panics if the entry is not in the pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .pattern
            .find(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.find(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.pattern.row_ptr[i];
        let hi = self.pattern.row_ptr[i + 1];
        self.pattern.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let p = &*self.pattern;
        for i in 0..p.n {
            let mut acc = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                acc += self.values[k] * x[p.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// xᵀ A x.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// xᵀ A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let p = &*self.pattern;
        let mut total = 0.0;
        for i in 0..p.n {
            let mut acc = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                acc += self.values[k] * y[p.col_idx[k]];
            }
            total += x[i] * acc;
        }
        total
    }

    /// Σ cᵢ Aᵢ over matrices sharing one pattern.
    pub fn lincomb(terms: &[(f64, &CsrMatrix)]) -> Result<CsrMatrix> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidInput("empty linear combination".into()))?;
        let mut out = CsrMatrix::zeros(first.pattern.clone());
        for (c, m) in terms {
            if !Arc::ptr_eq(&m.pattern, &first.pattern) && *m.pattern != *first.pattern {
                return Err(Error::InvalidInput(
                    "pattern mismatch in linear combination".into(),
                ));
            }
            for (o, v) in out.values.iter_mut().zip(&m.values) {
                *o += c * v;
            }
        }
        Ok(out)
    }

    /// Largest |A - Aᵀ| entry; zero for exactly symmetric assembly.
    pub fn asymmetry(&self) -> f64 {
        let p = &*self.pattern;
        let mut worst: f64 = 0.0;
        for i in 0..p.n {
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                let j = p.col_idx[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in self.row(i) {
                d[(i, j)] += v;
            }
        }
        d
    }

    /// Coordinate-format dump: one `row col value` line per stored nonzero.
    pub fn write_coo<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for i in 0..self.n() {
            for (j, v) in self.row(i) {
                if v != 0.0 {
                    writeln!(w, "{} {} {}", i, j, crate::io::fmt_f64(v))?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> CsrMatrix {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![i];
                if i > 0 {
                    r.push(i - 1);
                }
                if i + 1 < n {
                    r.push(i + 1);
                }
                r
            })
            .collect();
        let mut m = CsrMatrix::zeros(Arc::new(Pattern::from_rows(rows)));
        for i in 0..n {
            m.add(i, i, 2.0);
            if i + 1 < n {
                m.add(i, i + 1, -1.0);
                m.add(i + 1, i, -1.0);
            }
        }
        m
    }

    #[test]
    fn matvec_and_forms() {
        let m = tridiag(4);
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(m.mul_vec(&x), vec![0.0, 0.0, 0.0, 5.0]);
        assert_eq!(m.quad_form(&x), 20.0);
        assert_eq!(m.asymmetry(), 0.0);
        assert_eq!(m.pattern().bandwidth(), 1);
    }

    #[test]
    fn lincomb_matches_dense() {
        let a = tridiag(5);
        let b = CsrMatrix::lincomb(&[(2.0, &a), (-0.5, &a)]).unwrap();
        let d = a.to_dense() * 1.5;
        assert!((b.to_dense() - d).abs().max() < 1e-15);
    }

    #[test]
    fn coo_dump_lists_nonzeros() {
        let a = tridiag(3);
        let mut buf = Vec::new();
        a.write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("0 0 2.0000000000000000e0"));
    }
}
