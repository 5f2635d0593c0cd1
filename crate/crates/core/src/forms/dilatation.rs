use crate::grid::{FeSpace, MAX_LOCAL};

use super::CoefficientTable;

/// ρ̄-weighted cell mean of the divergence, X_K(v) = ∫_K ρ̄ div v / ∫_K ρ̄,
/// stored as per-cell coefficients on the local velocity basis.
#[derive(Debug, Clone)]
pub struct MeanDilatation {
    coef: Vec<[f64; MAX_LOCAL]>,
    nq: usize,
}

impl MeanDilatation {
    pub fn new(space: &FeSpace, coefs: &CoefficientTable) -> Self {
        let mesh = space.mesh();
        let qd = space.quad();
        let dim = mesh.dim();
        let nl = space.local_len();
        let coef = (0..mesh.cell_count())
            .map(|c| {
                let mut x = [0.0; MAX_LOCAL];
                let mut mass = 0.0;
                for q in 0..qd.nq {
                    let wr = qd.weights[q] * coefs.get(mesh, qd, c, q).rho;
                    mass += wr;
                    for (la, xl) in x.iter_mut().enumerate().take(nl) {
                        *xl += wr * qd.grad[q][la / dim][la % dim];
                    }
                }
                for xl in x.iter_mut() {
                    *xl /= mass;
                }
                x
            })
            .collect();
        MeanDilatation { coef, nq: qd.nq }
    }

    /// Coefficients of X_K on the local basis of cell `c`.
    pub fn local(&self, c: usize) -> &[f64; MAX_LOCAL] {
        &self.coef[c]
    }

    /// X_K(v) for every cell.
    pub fn per_cell(&self, space: &FeSpace, v: &[f64]) -> Vec<f64> {
        let nl = space.local_len();
        (0..self.coef.len())
            .map(|c| {
                let dofs = space.cell_dofs(c);
                (0..nl)
                    .filter(|&la| dofs[la] != usize::MAX)
                    .map(|la| self.coef[c][la] * v[dofs[la]])
                    .sum()
            })
            .collect()
    }

    /// X_K(v) repeated at each quadrature point of the cell.
    pub fn at_quad(&self, space: &FeSpace, v: &[f64]) -> Vec<f64> {
        self.per_cell(space, v)
            .into_iter()
            .flat_map(|x| std::iter::repeat_n(x, self.nq))
            .collect()
    }
}
