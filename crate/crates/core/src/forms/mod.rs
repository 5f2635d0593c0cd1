//! Symmetric discrete operators for the energy functionals of the growth-rate
//! problem, and the auxiliary Lamé and weighted-divergence maps.

mod dilatation;
mod lame;
mod weighted_div;

pub use dilatation::MeanDilatation;
pub use lame::LameSolver;
pub use weighted_div::WeightedDiv;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{CellQuadrature, FeSpace, VerticalTable, MAX_LOCAL, QUAD_POINTS_1D};
use crate::linalg::CsrMatrix;
use crate::steady::{Coefficients, PhysParams, SteadyProfile};

/// Steady coefficients tabulated at the quadrature heights of a mesh.
pub type CoefficientTable = VerticalTable<Coefficients>;

pub fn coefficient_table(space: &FeSpace, profile: &SteadyProfile) -> Result<CoefficientTable> {
    let mesh = space.mesh();
    let (lo, hi) = mesh.vertical_range();
    let (plo, phi) = profile.z_range();
    let tol = 1e-12 * (hi - lo);
    if (plo - lo).abs() > tol || (phi - hi).abs() > tol {
        return Err(Error::ProfileDomainMismatch {
            lo: plo,
            hi: phi,
            mesh_lo: lo,
            mesh_hi: hi,
        });
    }
    Ok(VerticalTable::build(
        mesh,
        space.quad(),
        QUAD_POINTS_1D,
        |z| profile.eval(z),
    ))
}

/// Operators on the constrained velocity space.
///
/// * `m`: ∫ρ̄ v·w
/// * `k1`: ∫ gρ̄′v₃w₃ + gρ̄(v₃ Xw + w₃ Xv) − (1+a)p̄ Xv Xw, X the
///   ρ̄-weighted cell mean of the divergence ([`MeanDilatation`])
/// * `k2`: ∫ μ∇v:∇w + μ₀ div v div w
/// * `k1_buoyancy`: ∫ gρ̄′v₃w₃
/// * `k1_no_pressure`: `k1` without the pressure term
/// * `laplace`: ∫ ∇v:∇w
/// * `div_reduced`: ∫ div v div w with one point per cell
#[derive(Debug, Clone)]
pub struct AssembledForms {
    pub space: Arc<FeSpace>,
    pub profile: Arc<SteadyProfile>,
    pub coefs: Arc<CoefficientTable>,
    pub dilatation: Arc<MeanDilatation>,
    pub m: CsrMatrix,
    pub k1: CsrMatrix,
    pub k2: CsrMatrix,
    pub k1_buoyancy: CsrMatrix,
    pub k1_no_pressure: CsrMatrix,
    pub laplace: CsrMatrix,
    pub div_reduced: CsrMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticForms {
    pub e1: f64,
    pub e2: f64,
    pub j: f64,
}

impl QuadraticForms {
    /// E(v, s) = e1 − s·e2.
    pub fn e_of_s(&self, s: f64) -> f64 {
        self.e1 - s * self.e2
    }
}

impl AssembledForms {
    pub fn assemble(space: Arc<FeSpace>, profile: Arc<SteadyProfile>) -> Result<Self> {
        if !space.is_constrained() || space.components() != space.mesh().dim() {
            return Err(Error::InvalidInput(
                "forms need the constrained velocity space".into(),
            ));
        }
        let coefs = Arc::new(coefficient_table(&space, &profile)?);
        let dilatation = Arc::new(MeanDilatation::new(&space, &coefs));
        let params = *profile.params();
        let pattern = space.pattern();
        let zero = CsrMatrix::zeros(pattern);
        let mut out = [(); 7].map(|_| zero.clone());

        let mesh = space.mesh().clone();
        let qd: &CellQuadrature = space.quad();
        let dim = mesh.dim();
        let vz = dim - 1;
        let nl = space.local_len();
        let PhysParams { g, a, mu, mu0, .. } = params;

        // one-point rule at the cell centre for the reduced divergence term
        let centre = CellQuadrature::new(&mesh, 1);

        let mut loc = vec![[[0.0; MAX_LOCAL]; MAX_LOCAL]; 7];
        for c in 0..mesh.cell_count() {
            for l in loc.iter_mut() {
                for row in l.iter_mut() {
                    *row = [0.0; MAX_LOCAL];
                }
            }
            let xc = dilatation.local(c);
            for q in 0..qd.nq {
                let w = qd.weights[q];
                let cf = coefs.get(&mesh, qd, c, q);
                let phi = &qd.phi[q];
                let gr = &qd.grad[q];
                for la in 0..nl {
                    let (an, ai) = (la / dim, la % dim);
                    for lb in 0..nl {
                        let (bn, bj) = (lb / dim, lb % dim);
                        let pp = phi[an] * phi[bn];
                        let gg: f64 = (0..dim).map(|k| gr[an][k] * gr[bn][k]).sum();
                        let dd = gr[an][ai] * gr[bn][bj];
                        let same = ai == bj;
                        let mass = if same { w * cf.rho * pp } else { 0.0 };
                        let lap = if same { w * gg } else { 0.0 };
                        let buoy = if ai == vz && bj == vz {
                            w * g * cf.rho_p * pp
                        } else {
                            0.0
                        };
                        let mut cross = 0.0;
                        if ai == vz {
                            cross += phi[an] * xc[lb];
                        }
                        if bj == vz {
                            cross += phi[bn] * xc[la];
                        }
                        let cross = w * g * cf.rho * cross;
                        let press = -w * (1.0 + a) * cf.p * (xc[la] * xc[lb]);
                        loc[0][la][lb] += mass;
                        loc[1][la][lb] += buoy + cross + press;
                        loc[2][la][lb] += mu * lap + mu0 * w * dd;
                        loc[3][la][lb] += buoy;
                        loc[4][la][lb] += buoy + cross;
                        loc[5][la][lb] += lap;
                    }
                }
            }
            let w0 = centre.weights[0];
            let g0 = &centre.grad[0];
            for la in 0..nl {
                for lb in 0..nl {
                    loc[6][la][lb] += w0 * g0[la / dim][la % dim] * g0[lb / dim][lb % dim];
                }
            }
            let dofs = space.cell_dofs(c);
            for la in 0..nl {
                let i = dofs[la];
                if i == usize::MAX {
                    continue;
                }
                for lb in 0..nl {
                    let j = dofs[lb];
                    if j == usize::MAX {
                        continue;
                    }
                    for (mat, l) in out.iter_mut().zip(&loc) {
                        mat.add(i, j, l[la][lb]);
                    }
                }
            }
        }
        let [m, k1, k2, k1_buoyancy, k1_no_pressure, laplace, div_reduced] = out;
        Ok(AssembledForms {
            space,
            profile,
            coefs,
            dilatation,
            m,
            k1,
            k2,
            k1_buoyancy,
            k1_no_pressure,
            laplace,
            div_reduced,
        })
    }

    pub fn params(&self) -> &PhysParams {
        self.profile.params()
    }

    pub fn n_dofs(&self) -> usize {
        self.space.n_dofs()
    }

    pub fn quadratic_forms(&self, v: &[f64]) -> Result<QuadraticForms> {
        if v.len() != self.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_dofs(),
                got: v.len(),
            });
        }
        Ok(QuadraticForms {
            e1: self.k1.quad_form(v),
            e2: self.k2.quad_form(v),
            j: self.m.quad_form(v),
        })
    }

    /// K1 − sK2.
    pub fn pencil(&self, s: f64) -> CsrMatrix {
        CsrMatrix::lincomb(&[(1.0, &self.k1), (-s, &self.k2)]).expect("shared pattern")
    }

    /// Quadratic form of the vertical component in L² (unweighted), used for tie-breaking.
    pub fn vertical_l2_sq(&self, v: &[f64]) -> f64 {
        let n = self.space.vertical_l2(v);
        n * n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoxMesh;
    use crate::steady::{Density, EnergyConstant};

    pub(crate) fn reference_forms(n: usize) -> AssembledForms {
        let params = PhysParams::new(1.0, 5.0 / 3.0, 0.1, 0.1).unwrap();
        let prof = SteadyProfile::build(
            Density::Linear {
                rho0: 1.0,
                slope: 1.0,
            },
            (0.0, 1.0),
            params,
            EnergyConstant::Explicit(-2.0),
        )
        .unwrap();
        let mesh = Arc::new(BoxMesh::unit(2, n).unwrap());
        AssembledForms::assemble(Arc::new(FeSpace::velocity(mesh)), Arc::new(prof)).unwrap()
    }

    #[test]
    fn operators_are_exactly_symmetric() {
        let f = reference_forms(5);
        for m in [
            &f.m,
            &f.k1,
            &f.k2,
            &f.laplace,
            &f.div_reduced,
            &f.k1_buoyancy,
        ] {
            assert_eq!(m.asymmetry(), 0.0);
        }
    }

    #[test]
    fn zero_vector_gives_zero_forms() {
        let f = reference_forms(4);
        let q = f.quadratic_forms(&vec![0.0; f.n_dofs()]).unwrap();
        assert_eq!((q.e1, q.e2, q.j), (0.0, 0.0, 0.0));
        assert_eq!(q.e_of_s(3.0), 0.0);
        assert!(f.quadratic_forms(&[1.0]).is_err());
    }

    #[test]
    fn profile_must_cover_mesh() {
        let params = PhysParams::new(1.0, 2.0, 0.1, 0.0).unwrap();
        let prof = SteadyProfile::build(
            Density::Linear {
                rho0: 1.0,
                slope: 1.0,
            },
            (0.0, 2.0),
            params,
            EnergyConstant::Floor(0.1),
        )
        .unwrap();
        let mesh = Arc::new(BoxMesh::unit(2, 4).unwrap());
        let r = AssembledForms::assemble(Arc::new(FeSpace::velocity(mesh)), Arc::new(prof));
        assert!(matches!(r, Err(Error::ProfileDomainMismatch { .. })));
    }
}
