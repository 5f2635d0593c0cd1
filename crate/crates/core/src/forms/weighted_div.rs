use std::sync::Arc;

use super::{AssembledForms, CoefficientTable, MeanDilatation};
use crate::error::{Error, Result};
use crate::grid::{FeSpace, Projector, VectorAtQuad};

/// Quadrature-level maps v ↦ ρ̄′v₃ + ρ̄ Xv and v ↦ ρ̄ē′v₃ + p̄ Xv, X the
/// mean dilatation of the forms, and their L² projections onto a scalar space.
#[derive(Debug)]
pub struct WeightedDiv {
    velocity: Arc<FeSpace>,
    projector: Projector,
    coefs: Arc<CoefficientTable>,
    dilatation: Arc<MeanDilatation>,
    a: f64,
}

impl WeightedDiv {
    pub fn new(forms: &AssembledForms, scalar: Arc<FeSpace>) -> Result<Self> {
        if !forms.space.same_mesh(&scalar) {
            return Err(Error::MeshMismatch);
        }
        Ok(WeightedDiv {
            velocity: forms.space.clone(),
            projector: Projector::new(scalar)?,
            coefs: forms.coefs.clone(),
            dilatation: forms.dilatation.clone(),
            a: forms.params().a,
        })
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }

    // f(v₃, Xv, coefficients) at every quadrature point
    fn per_point(
        &self,
        v: &[f64],
        f: impl Fn(f64, f64, &crate::steady::Coefficients) -> f64,
    ) -> Vec<f64> {
        let uq = VectorAtQuad::new(&self.velocity, v);
        let x = self.dilatation.at_quad(&self.velocity, v);
        let mesh = self.velocity.mesh();
        let qd = self.velocity.quad();
        let nq = qd.nq;
        (0..uq.len())
            .map(|k| {
                let cf = self.coefs.get(mesh, qd, k / nq, k % nq);
                f(uq.vertical(k), x[k], &cf)
            })
            .collect()
    }

    /// Discrete div(ρ̄v): ρ̄′v₃ + ρ̄ Xv at every quadrature point.
    pub fn div_rho_at_quad(&self, v: &[f64]) -> Vec<f64> {
        self.per_point(v, |v3, x, c| c.rho_p * v3 + c.rho * x)
    }

    /// ē′v₃ + aē Xv at every quadrature point.
    pub fn energy_flux_at_quad(&self, v: &[f64]) -> Vec<f64> {
        let a = self.a;
        self.per_point(v, |v3, x, c| c.e_p * v3 + a * c.e * x)
    }

    /// ρ̄ē′v₃ + p̄ Xv at every quadrature point.
    pub fn companion_at_quad(&self, v: &[f64]) -> Vec<f64> {
        self.per_point(v, |v3, x, c| c.rho * c.e_p * v3 + c.p * x)
    }

    /// L²-projection of the discrete div(ρ̄v).
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.projector.project(&self.div_rho_at_quad(v))
    }

    /// L²-projection of ρ̄ē′v₃ + p̄ div v.
    pub fn companion(&self, v: &[f64]) -> Vec<f64> {
        self.projector.project(&self.companion_at_quad(v))
    }

    /// L²-projection of ē′v₃ + aē div v.
    pub fn energy_flux(&self, v: &[f64]) -> Vec<f64> {
        self.projector.project(&self.energy_flux_at_quad(v))
    }
}
