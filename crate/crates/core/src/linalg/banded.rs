use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

/// Cholesky factor L (A = L Lᵀ) of a symmetric positive-definite band matrix.
///
/// Row `i` stores columns `i - bw ..= i` contiguously, so the inner products of
/// the factorisation run over contiguous slices.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        let bw = a.pattern().bandwidth();
        let w = bw + 1;
        let mut data = vec![0.0; n * w];
        // lower triangle of A into band storage
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    data[i * w + (bw - (i - j))] += v;
                }
            }
        }
        for j in 0..n {
            let j0 = j.saturating_sub(bw);
            // L[j][k] lives at data[j*w + bw - (j-k)]
            let rj = &data[j * w + (bw - (j - j0))..j * w + bw];
            let d = data[j * w + bw] - rj.iter().map(|x| x * x).sum::<f64>();
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::SingularSystem { pivot: j, value: d });
            }
            let ljj = d.sqrt();
            data[j * w + bw] = ljj;
            let i_end = (j + bw + 1).min(n);
            for i in j + 1..i_end {
                let i0 = i.saturating_sub(bw);
                let k0 = i0.max(j0);
                // dot over k in [k0, j)
                let mut s = 0.0;
                let ri = i * w + bw - i;
                let rjj = j * w + bw - j;
                for k in k0..j {
                    s += data[ri + k] * data[rjj + k];
                }
                let idx = ri + j;
                data[idx] = (data[idx] - s) / ljj;
            }
        }
        Ok(BandedCholesky { n, bw, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        // L y = b
        for i in 0..n {
            let i0 = i.saturating_sub(bw);
            let base = i * w + bw - i;
            let mut s = x[i];
            for k in i0..i {
                s -= self.data[base + k] * x[k];
            }
            x[i] = s / self.data[i * w + bw];
        }
        // Lᵀ x = y
        for i in (0..n).rev() {
            x[i] /= self.data[i * w + bw];
            let xi = x[i];
            let i0 = i.saturating_sub(bw);
            let base = i * w + bw - i;
            for k in i0..i {
                x[k] -= self.data[base + k] * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
