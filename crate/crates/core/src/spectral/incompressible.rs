use serde::{Deserialize, Serialize};

use super::fixed_point::find_with_solver;
use super::{AlphaSolver, GrowthOptions, Pencil};
use crate::error::{Error, Result};
use crate::forms::AssembledForms;
use crate::linalg::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncompressibleOptions {
    pub eps_start: f64,
    pub eps_min: f64,
    pub eps_factor: f64,
    /// stop once consecutive rates differ by less than this fraction
    pub rel_change: f64,
    pub growth: GrowthOptions,
}

impl Default for IncompressibleOptions {
    fn default() -> Self {
        IncompressibleOptions {
            eps_start: 1e-2,
            eps_min: 1e-8,
            eps_factor: 0.1,
            rel_change: 5e-3,
            growth: GrowthOptions {
                frak_s: false,
                ..GrowthOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PenaltyStep {
    pub eps: f64,
    pub lambda: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IncompressibleResult {
    pub lambda_inc: f64,
    pub schedule: Vec<PenaltyStep>,
    /// relative change between the last two penalty levels
    pub final_change: f64,
    #[serde(skip)]
    pub eigvec: Vec<f64>,
}

/// Growth rate with E₁ = g∫ρ̄′v₃² and E₂ = μ∫|∇v|² + ε⁻¹∫(div v)², ε decreasing
/// geometrically until the rate settles.
pub fn incompressible_growth_rate(
    forms: &AssembledForms,
    opts: &IncompressibleOptions,
) -> Result<IncompressibleResult> {
    if !(opts.eps_factor > 0.0 && opts.eps_factor < 1.0) || !(opts.eps_start > 0.0) {
        return Err(Error::InvalidInput(
            "penalty schedule must decrease geometrically from a positive start".into(),
        ));
    }
    let p = forms.params();
    // sup g∫ρ̄′v₃²/∫ρ̄|v|² ≤ g‖ρ̄′/ρ̄‖_∞
    let mut bound: f64 = 0.0;
    for z in forms.profile.samples(4097) {
        bound = bound.max(forms.profile.rho_prime(z) / forms.profile.rho(z));
    }
    let upper = p.g * bound.max(0.0) * (1.0 + 1e-9) + 1e-12;

    let mut schedule: Vec<PenaltyStep> = Vec::new();
    let mut eps = opts.eps_start;
    let mut last_change = f64::INFINITY;
    while eps >= opts.eps_min * (1.0 - 1e-12) {
        let e2 = CsrMatrix::lincomb(&[(p.mu, &forms.laplace), (1.0 / eps, &forms.div_reduced)])?;
        let pencil = Pencil {
            e1: &forms.k1_buoyancy,
            e2: &e2,
            j: &forms.m,
            upper,
        };
        let mut eig = opts.growth.eig;
        // the penalty inflates ‖E₂‖; measure the residual against that scale
        eig.tol *= 1.0 + 1.0 / (eps * p.mu);
        let growth = GrowthOptions {
            eig,
            frak_s: false,
            ..opts.growth
        };
        let mut solver = AlphaSolver::with_pencil(forms, pencil, eig);
        let r = find_with_solver(forms, &mut solver, &growth)?;
        if let Some(prev) = schedule.last() {
            last_change = (r.lambda - prev.lambda).abs() / prev.lambda.abs().max(1e-300);
        }
        schedule.push(PenaltyStep {
            eps,
            lambda: r.lambda,
            residual: r.residual,
        });
        if last_change < opts.rel_change {
            let lambda_inc = schedule.last().map(|s| s.lambda).unwrap_or(0.0);
            return Ok(IncompressibleResult {
                lambda_inc,
                schedule,
                final_change: last_change,
                eigvec: r.eigvec,
            });
        }
        eps *= opts.eps_factor;
    }
    Err(Error::PenaltyNonconvergence { last_change })
}
