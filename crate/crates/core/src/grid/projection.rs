use std::sync::Arc;

use super::{FeSpace, MAX_QUAD};
use crate::error::{Error, Result};
use crate::linalg::{BandedCholesky, CsrMatrix};

/// L² projection of quadrature-point data onto a scalar Q1 space.
#[derive(Debug)]
pub struct Projector {
    space: Arc<FeSpace>,
    mass: CsrMatrix,
    chol: BandedCholesky,
}

impl Projector {
    pub fn new(space: Arc<FeSpace>) -> Result<Self> {
        if space.components() != 1 {
            return Err(Error::InvalidInput(
                "projection target must be a scalar space".into(),
            ));
        }
        let mut mass = CsrMatrix::zeros(space.pattern());
        let qd = space.quad();
        let nl = space.local_len();
        for c in 0..space.mesh().cell_count() {
            let dofs = space.cell_dofs(c);
            for q in 0..qd.nq {
                let w = qd.weights[q];
                for a in 0..nl {
                    if dofs[a] == usize::MAX {
                        continue;
                    }
                    for b in 0..nl {
                        if dofs[b] != usize::MAX {
                            mass.add(dofs[a], dofs[b], w * qd.phi[q][a] * qd.phi[q][b]);
                        }
                    }
                }
            }
        }
        let chol = BandedCholesky::factor(&mass)?;
        Ok(Projector { space, mass, chol })
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// Load vector ∫ f φᵢ for f given at every quadrature point (cell-major).
    pub fn load(&self, values: &[f64]) -> Vec<f64> {
        let qd = self.space.quad();
        let nq = qd.nq;
        let nl = self.space.local_len();
        let mut out = vec![0.0; self.space.n_dofs()];
        for c in 0..self.space.mesh().cell_count() {
            let dofs = self.space.cell_dofs(c);
            for q in 0..nq {
                let f = qd.weights[q] * values[c * nq + q];
                for a in 0..nl {
                    if dofs[a] != usize::MAX {
                        out[dofs[a]] += f * qd.phi[q][a];
                    }
                }
            }
        }
        out
    }

    pub fn project(&self, values: &[f64]) -> Vec<f64> {
        let mut b = self.load(values);
        self.chol.solve_in_place(&mut b);
        b
    }

    /// Solves M x = b with the scalar mass matrix.
    pub fn solve_mass(&self, b: &[f64]) -> Vec<f64> {
        self.chol.solve(b)
    }
}

/// Values of a scalar field at every quadrature point (cell-major).
pub fn scalar_at_quad(space: &FeSpace, coeffs: &[f64]) -> Vec<f64> {
    let nq = space.quad().nq;
    let mut out = Vec::with_capacity(space.mesh().cell_count() * nq);
    let mut val = [[0.0; 3]; MAX_QUAD];
    let mut grad = [[[0.0; 3]; 3]; MAX_QUAD];
    for c in 0..space.mesh().cell_count() {
        space.eval_cell(coeffs, c, &mut val, &mut grad);
        out.extend(val[..nq].iter().map(|v| v[0]));
    }
    out
}

/// Values and gradients of a vector field at every quadrature point (cell-major).
#[derive(Debug, Clone)]
pub struct VectorAtQuad {
    pub dim: usize,
    pub val: Vec<[f64; 3]>,
    pub grad: Vec<[[f64; 3]; 3]>,
}

impl VectorAtQuad {
    pub fn new(space: &FeSpace, coeffs: &[f64]) -> Self {
        let nq = space.quad().nq;
        let n = space.mesh().cell_count() * nq;
        let mut out = VectorAtQuad {
            dim: space.mesh().dim(),
            val: Vec::with_capacity(n),
            grad: Vec::with_capacity(n),
        };
        let mut val = [[0.0; 3]; MAX_QUAD];
        let mut grad = [[[0.0; 3]; 3]; MAX_QUAD];
        for c in 0..space.mesh().cell_count() {
            space.eval_cell(coeffs, c, &mut val, &mut grad);
            out.val.extend_from_slice(&val[..nq]);
            out.grad.extend_from_slice(&grad[..nq]);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.val.len()
    }

    pub fn is_empty(&self) -> bool {
        self.val.is_empty()
    }

    #[inline]
    pub fn div(&self, k: usize) -> f64 {
        (0..self.dim).map(|c| self.grad[k][c][c]).sum()
    }

    #[inline]
    pub fn vertical(&self, k: usize) -> f64 {
        self.val[k][self.dim - 1]
    }
}

/// L² norm of quadrature-point data.
pub fn quad_l2(space: &FeSpace, values: &[f64]) -> f64 {
    let qd = space.quad();
    values
        .iter()
        .enumerate()
        .map(|(k, v)| qd.weights[k % qd.nq] * v * v)
        .sum::<f64>()
        .sqrt()
}

/// ∫ f over the mesh for quadrature-point data.
pub fn quad_integral(space: &FeSpace, values: &[f64]) -> f64 {
    let qd = space.quad();
    values
        .iter()
        .enumerate()
        .map(|(k, v)| qd.weights[k % qd.nq] * v)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoxMesh;

    #[test]
    fn projection_reproduces_q1_functions() {
        let mesh = Arc::new(BoxMesh::unit(2, 5).unwrap());
        let s = Arc::new(FeSpace::scalar(mesh));
        let p = Projector::new(s.clone()).unwrap();
        let f = s.interpolate(|x, _| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1]);
        let back = p.project(&scalar_at_quad(&s, &f));
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let ones = vec![1.0; s.mesh().cell_count() * s.quad().nq];
        assert!((quad_integral(&s, &ones) - 1.0).abs() < 1e-14);
        assert!((quad_l2(&s, &ones) - 1.0).abs() < 1e-14);
    }
}
