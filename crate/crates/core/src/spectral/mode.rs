use std::sync::Arc;

use serde::Serialize;

use super::GrowthRateResult;
use crate::error::{Error, Result};
use crate::forms::{AssembledForms, WeightedDiv};
use crate::grid::{scalar_at_quad, FeSpace};
use crate::linalg::{dot, BandedCholesky};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModeResiduals {
    /// ‖Λρ̃ + P div(ρ̄ṽ)‖_{L²}
    pub mass: f64,
    /// dual-norm residual of the momentum line, relative to ‖Λρ̄ṽ‖ in the same norm
    pub momentum: f64,
    /// ‖Λθ̃ + P(ē′ṽ₃ + aē div ṽ)‖_{L²}
    pub energy: f64,
    /// max |ṽ| over boundary nodes
    pub boundary: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowingMode {
    pub lambda: f64,
    #[serde(skip)]
    pub v: Vec<f64>,
    /// ρ̃ = −P div(ρ̄ṽ)/Λ on the scalar space
    #[serde(skip)]
    pub rho: Vec<f64>,
    /// θ̃ = −P(ē′ṽ₃ + aē div ṽ)/Λ on the scalar space
    #[serde(skip)]
    pub theta: Vec<f64>,
    /// −P(ρ̄ē′ṽ₃ + p̄ div ṽ)/Λ, i.e. the projection of ρ̄θ̃
    #[serde(skip)]
    pub rho_theta: Vec<f64>,
    pub residuals: ModeResiduals,
    pub horizontal_l2: f64,
    pub vertical_l2: f64,
    pub rho_l2: f64,
    pub theta_l2: f64,
    pub nontrivial: bool,
}

/// Builds (ρ̃, ṽ, θ̃) from the maximiser at s = Λ and measures how well it
/// solves the time-independent linear system.
pub fn reconstruct_mode(
    forms: &AssembledForms,
    result: &GrowthRateResult,
    scalar: Arc<FeSpace>,
) -> Result<GrowingMode> {
    let lambda = result.lambda;
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "Λ = {lambda} must be positive"
        )));
    }
    let v = result.eigvec.clone();
    let space = &forms.space;
    let l2 = space.norms(&v)?.l2;
    if !(l2 > 1e-12) {
        return Err(Error::DegenerateMode(format!("‖v‖ = {l2:e}")));
    }
    let wd = WeightedDiv::new(forms, scalar.clone())?;
    let div_q = wd.div_rho_at_quad(&v);
    let flux_q = wd.energy_flux_at_quad(&v);
    let proj = wd.projector();
    let rho: Vec<f64> = proj.project(&div_q).iter().map(|x| -x / lambda).collect();
    let theta: Vec<f64> = proj.project(&flux_q).iter().map(|x| -x / lambda).collect();
    let rho_theta: Vec<f64> = wd.companion(&v).iter().map(|x| -x / lambda).collect();

    let pdiv = proj.project(&div_q);
    let mass_res: Vec<f64> = rho.iter().zip(&pdiv).map(|(r, d)| lambda * r + d).collect();
    let pflux = proj.project(&flux_q);
    let energy_res: Vec<f64> = theta
        .iter()
        .zip(&pflux)
        .map(|(t, d)| lambda * t + d)
        .collect();
    let mass = scalar.norms(&mass_res)?.l2;
    let energy = scalar.norms(&energy_res)?.l2;

    let momentum = momentum_residual(forms, lambda, &v, &rho, &theta, &scalar)?;

    let horizontal_l2 = space.horizontal_l2(&v);
    let vertical_l2 = space.vertical_l2(&v);
    let rho_l2 = scalar.norms(&rho)?.l2;
    let theta_l2 = scalar.norms(&theta)?.l2;
    let thresh = 1e-8 * l2;
    let mut nontrivial = horizontal_l2 > thresh && vertical_l2 > thresh;
    if forms.profile.classify().monotone_nonneg {
        nontrivial &= rho_l2 > 1e-8 * l2;
    }
    Ok(GrowingMode {
        lambda,
        v,
        rho,
        theta,
        rho_theta,
        residuals: ModeResiduals {
            mass,
            momentum,
            energy,
            boundary: 0.0,
        },
        horizontal_l2,
        vertical_l2,
        rho_l2,
        theta_l2,
        nontrivial,
    })
}

/// Residual of Λρ̄ṽ + a∇(ēρ̃ + ρ̄θ̃) − μΔṽ − μ₀∇div ṽ + gρ̃e₃ = 0 in the discrete
/// H⁻¹ norm √(rᵀL⁻¹r), L the vector Laplacian, divided by the same norm of Λρ̄ṽ.
fn momentum_residual(
    forms: &AssembledForms,
    lambda: f64,
    v: &[f64],
    rho: &[f64],
    theta: &[f64],
    scalar: &FeSpace,
) -> Result<f64> {
    let space = &forms.space;
    let mesh = space.mesh();
    let qd = space.quad();
    let dim = mesh.dim();
    let a = forms.params().a;
    let g = forms.params().g;
    let rho_q = scalar_at_quad(scalar, rho);
    let theta_q = scalar_at_quad(scalar, theta);
    let mut r: Vec<f64> = forms.m.mul_vec(v).iter().map(|x| lambda * x).collect();
    let inertia = r.clone();
    let k2v = forms.k2.mul_vec(v);
    for (ri, ki) in r.iter_mut().zip(&k2v) {
        *ri += ki;
    }
    let nl = space.local_len();
    for c in 0..mesh.cell_count() {
        let dofs = space.cell_dofs(c);
        for q in 0..qd.nq {
            let k = c * qd.nq + q;
            let cf = forms.coefs.get(mesh, qd, c, q);
            let pres = a * (cf.e * rho_q[k] + cf.rho * theta_q[k]);
            let w = qd.weights[q];
            for la in 0..nl {
                let i = dofs[la];
                if i == usize::MAX {
                    continue;
                }
                let (an, ai) = (la / dim, la % dim);
                let mut val = -pres * qd.grad[q][an][ai];
                if ai == dim - 1 {
                    val += g * rho_q[k] * qd.phi[q][an];
                }
                r[i] += w * val;
            }
        }
    }
    let chol = BandedCholesky::factor(&forms.laplace)?;
    let dual = |x: &[f64]| dot(x, &chol.solve(x)).max(0.0).sqrt();
    let scale = dual(&inertia);
    Ok(dual(&r) / scale)
}
