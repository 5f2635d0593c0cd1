use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{FeSpace, MAX_LOCAL};
use crate::linalg::{norm2, BandedCholesky, CsrMatrix};
use crate::steady::PhysParams;

/// Dirichlet Lamé problem μΔu + μ₀∇div u = f, u|∂Ω = 0, in weak form
/// K u = −∫f·w with K the matrix of ∫μ∇u:∇w + μ₀ div u div w.
#[derive(Debug)]
pub struct LameSolver {
    space: Arc<FeSpace>,
    k: CsrMatrix,
    chol: BandedCholesky,
}

impl LameSolver {
    pub fn new(space: Arc<FeSpace>, params: &PhysParams) -> Result<Self> {
        if !space.is_constrained() || space.components() != space.mesh().dim() {
            return Err(Error::InvalidInput(
                "Lamé solve needs the constrained velocity space".into(),
            ));
        }
        let k = assemble_lame(&space, params.mu, params.mu0);
        let chol = BandedCholesky::factor(&k)?;
        Ok(LameSolver { space, k, chol })
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.k
    }

    /// Solves K u = load.
    pub fn solve_load(&self, load: &[f64]) -> Result<Vec<f64>> {
        if load.len() != self.k.n() {
            return Err(Error::DimensionMismatch {
                expected: self.k.n(),
                got: load.len(),
            });
        }
        Ok(self.chol.solve(load))
    }

    /// Solves μΔu + μ₀∇div u = f for a pointwise body force f.
    pub fn solve_force(&self, f: impl Fn(&[f64; 3]) -> [f64; 3]) -> Result<Vec<f64>> {
        let load = force_load(&self.space, f);
        self.solve_load(&load.iter().map(|v| -v).collect::<Vec<_>>())
    }

    /// ‖K u − load‖ / ‖load‖ (absolute when the load vanishes).
    pub fn relative_residual(&self, u: &[f64], load: &[f64]) -> f64 {
        let r: Vec<f64> = self
            .k
            .mul_vec(u)
            .iter()
            .zip(load)
            .map(|(a, b)| a - b)
            .collect();
        let scale = norm2(load);
        if scale > 0.0 {
            norm2(&r) / scale
        } else {
            norm2(&r)
        }
    }
}

/// ∫ f·φᵢ for a pointwise vector function.
pub fn force_load(space: &FeSpace, f: impl Fn(&[f64; 3]) -> [f64; 3]) -> Vec<f64> {
    let mesh = space.mesh();
    let qd = space.quad();
    let nc = space.components();
    let mut out = vec![0.0; space.n_dofs()];
    for c in 0..mesh.cell_count() {
        let dofs = space.cell_dofs(c);
        for q in 0..qd.nq {
            let fx = f(&qd.point(mesh, c, q));
            for a in 0..qd.nodes {
                for comp in 0..nc {
                    let i = dofs[a * nc + comp];
                    if i != usize::MAX {
                        out[i] += qd.weights[q] * fx[comp] * qd.phi[q][a];
                    }
                }
            }
        }
    }
    out
}

pub(crate) fn assemble_lame(space: &FeSpace, mu: f64, mu0: f64) -> CsrMatrix {
    let mesh = space.mesh();
    let qd = space.quad();
    let dim = mesh.dim();
    let nl = space.local_len();
    let mut k = CsrMatrix::zeros(space.pattern());
    let mut loc = [[0.0; MAX_LOCAL]; MAX_LOCAL];
    for c in 0..mesh.cell_count() {
        for row in loc.iter_mut() {
            *row = [0.0; MAX_LOCAL];
        }
        for q in 0..qd.nq {
            let w = qd.weights[q];
            let gr = &qd.grad[q];
            for la in 0..nl {
                let (an, ai) = (la / dim, la % dim);
                for lb in 0..nl {
                    let (bn, bj) = (lb / dim, lb % dim);
                    let mut v = mu0 * gr[an][ai] * gr[bn][bj];
                    if ai == bj {
                        v += mu * (0..dim).map(|d| gr[an][d] * gr[bn][d]).sum::<f64>();
                    }
                    loc[la][lb] += w * v;
                }
            }
        }
        let dofs = space.cell_dofs(c);
        for la in 0..nl {
            if dofs[la] == usize::MAX {
                continue;
            }
            for lb in 0..nl {
                if dofs[lb] != usize::MAX {
                    k.add(dofs[la], dofs[lb], loc[la][lb]);
                }
            }
        }
    }
    k
}
