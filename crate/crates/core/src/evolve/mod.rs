//! Time integration of the linearised and the full perturbation equations,
//! growth-rate fits, the stable-case energy ledger, compatible initial data
//! and the escape-time experiment.
//!
//! Density and internal-energy perturbations are carried at quadrature points;
//! velocities live on the constrained Q1 space.

mod compat;
mod escape;
mod fit;
mod ledger;
mod linear;
mod nonlinear;

pub use compat::{boundary_residual, build_compatible_data, CompatOptions, CompatibleData};
pub use escape::{
    escape_time_experiment, first_crossing, EscapeOptions, EscapeRun, EscapeTimeReport,
};
pub use fit::{
    fit_escape_slope, fit_exponential, fit_line, measure_growth_rate, GrowthFit, SlopeFit,
};
pub use ledger::{verify_stability_identity, LedgerTracker, StabilityLedger};
pub use linear::{appendix_bound, linear_step, run_linear, AppendixReport, LinearStepper};
pub use nonlinear::{NonlinearOptions, NonlinearStepper};

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{AssembledForms, MeanDilatation};
use crate::grid::{quad_l2, FeSpace, VectorAtQuad};
use crate::steady::Coefficients;

/// (ϱ, u, θ) at time t.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationState {
    pub t: f64,
    /// ϱ at quadrature points (cell-major)
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    /// θ at quadrature points (cell-major)
    pub theta: Vec<f64>,
}

impl PerturbationState {
    pub fn zero(forms: &AssembledForms) -> Self {
        let nk = quad_len(&forms.space);
        PerturbationState {
            t: 0.0,
            rho: vec![0.0; nk],
            u: vec![0.0; forms.n_dofs()],
            theta: vec![0.0; nk],
        }
    }

    pub fn check(&self, forms: &AssembledForms) -> Result<()> {
        let nk = quad_len(&forms.space);
        if self.u.len() != forms.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: forms.n_dofs(),
                got: self.u.len(),
            });
        }
        for v in [&self.rho, &self.theta] {
            if v.len() != nk {
                return Err(Error::DimensionMismatch {
                    expected: nk,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        PerturbationState {
            t: self.t,
            rho: self.rho.iter().map(|x| c * x).collect(),
            u: self.u.iter().map(|x| c * x).collect(),
            theta: self.theta.iter().map(|x| c * x).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub u3_l2: f64,
    pub uh_l2: f64,
    pub rho_l2: f64,
    pub theta_l2: f64,
    /// (‖ϱ‖² + ∫ρ̄|u|² + ‖θ‖²)^½
    pub energy: f64,
}

impl Diagnostics {
    pub const HEADER: [&'static str; 6] = ["t", "u3_l2", "uh_l2", "rho_l2", "theta_l2", "energy"];

    pub fn row(&self) -> Vec<f64> {
        vec![
            self.t,
            self.u3_l2,
            self.uh_l2,
            self.rho_l2,
            self.theta_l2,
            self.energy,
        ]
    }
}

pub fn diagnostics(forms: &AssembledForms, s: &PerturbationState) -> Diagnostics {
    let space = &forms.space;
    let r = quad_l2(space, &s.rho);
    let th = quad_l2(space, &s.theta);
    let ke = forms.m.quad_form(&s.u).max(0.0);
    Diagnostics {
        t: s.t,
        u3_l2: space.vertical_l2(&s.u),
        uh_l2: space.horizontal_l2(&s.u),
        rho_l2: r,
        theta_l2: th,
        energy: (r * r + ke + th * th).sqrt(),
    }
}

/// Linear growing mode: ṽ and the quadrature-level ρ̃ = −Dṽ/Λ, θ̃ = −Tṽ/Λ.
#[derive(Debug, Clone)]
pub struct ModeSeed {
    pub lambda: f64,
    pub v: Vec<f64>,
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
}

impl ModeSeed {
    pub fn new(forms: &AssembledForms, lambda: f64, v: Vec<f64>) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidInput(format!(
                "Λ = {lambda} must be positive"
            )));
        }
        if v.len() != forms.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: forms.n_dofs(),
                got: v.len(),
            });
        }
        let ops = QuadOps::new(forms);
        let rho = ops.d_op(&v).iter().map(|x| -x / lambda).collect();
        let theta = ops.t_op(&v).iter().map(|x| -x / lambda).collect();
        Ok(ModeSeed {
            lambda,
            v,
            rho,
            theta,
        })
    }

    pub fn state(&self, amplitude: f64) -> PerturbationState {
        PerturbationState {
            t: 0.0,
            rho: self.rho.iter().map(|x| amplitude * x).collect(),
            u: self.v.iter().map(|x| amplitude * x).collect(),
            theta: self.theta.iter().map(|x| amplitude * x).collect(),
        }
    }
}

pub(crate) fn quad_len(space: &FeSpace) -> usize {
    space.mesh().cell_count() * space.quad().nq
}

/// Steady coefficients unpacked per quadrature point, with the linear maps
/// D u = ρ̄′u₃ + ρ̄ Xu, T u = ē′u₃ + aē Xu (X the mean dilatation) and the
/// load of the linear pressure/gravity terms.
#[derive(Debug, Clone)]
pub(crate) struct QuadOps {
    pub space: Arc<FeSpace>,
    pub dil: Arc<MeanDilatation>,
    pub coefs: Vec<Coefficients>,
    pub a: f64,
    pub g: f64,
}

impl QuadOps {
    pub fn new(forms: &AssembledForms) -> Self {
        let space = forms.space.clone();
        let mesh = space.mesh();
        let qd = space.quad();
        let coefs = (0..mesh.cell_count() * qd.nq)
            .map(|k| forms.coefs.get(mesh, qd, k / qd.nq, k % qd.nq))
            .collect();
        let p = forms.params();
        QuadOps {
            space,
            dil: forms.dilatation.clone(),
            coefs,
            a: p.a,
            g: p.g,
        }
    }

    pub fn d_op(&self, u: &[f64]) -> Vec<f64> {
        let uq = VectorAtQuad::new(&self.space, u);
        let x = self.dil.at_quad(&self.space, u);
        self.coefs
            .iter()
            .enumerate()
            .map(|(k, c)| c.rho_p * uq.vertical(k) + c.rho * x[k])
            .collect()
    }

    pub fn t_op(&self, u: &[f64]) -> Vec<f64> {
        let uq = VectorAtQuad::new(&self.space, u);
        let x = self.dil.at_quad(&self.space, u);
        let a = self.a;
        self.coefs
            .iter()
            .enumerate()
            .map(|(k, c)| c.e_p * uq.vertical(k) + a * c.e * x[k])
            .collect()
    }

    /// ⟨G(ϱ, θ), w⟩ = ∫ a(ēϱ + ρ̄θ) Xw − gϱ w₃.
    pub fn linear_load(&self, rho: &[f64], theta: &[f64]) -> Vec<f64> {
        let a = self.a;
        let g = self.g;
        weak_load(&self.space, &self.dil, |k| {
            let c = &self.coefs[k];
            let mut f = [0.0; 3];
            f[self.space.mesh().dim() - 1] = -g * rho[k];
            (a * (c.e * rho[k] + c.rho * theta[k]), f)
        })
    }
}

/// b_i = Σ_q w_q [s_q Xφ_i + f_q·φ_i] over the velocity space, with
/// (s_q, f_q) supplied per quadrature point.
pub(crate) fn weak_load(
    space: &FeSpace,
    dil: &MeanDilatation,
    at: impl Fn(usize) -> (f64, [f64; 3]),
) -> Vec<f64> {
    let mesh = space.mesh();
    let qd = space.quad();
    let dim = mesh.dim();
    let nl = space.local_len();
    let mut out = vec![0.0; space.n_dofs()];
    for c in 0..mesh.cell_count() {
        let dofs = space.cell_dofs(c);
        let xc = dil.local(c);
        let mut s_int = 0.0;
        for q in 0..qd.nq {
            let (s, f) = at(c * qd.nq + q);
            let w = qd.weights[q];
            s_int += w * s;
            for la in 0..nl {
                let i = dofs[la];
                if i != usize::MAX {
                    out[i] += w * f[la % dim] * qd.phi[q][la / dim];
                }
            }
        }
        for la in 0..nl {
            let i = dofs[la];
            if i != usize::MAX {
                out[i] += s_int * xc[la];
            }
        }
    }
    out
}

/// Smooth solenoidal field from a random stream function, vanishing on the
/// boundary: u = (−∂₃ψ, ∂₁ψ) in the (x₁, x₃) plane.
pub fn random_solenoidal(space: &FeSpace, rng: &mut impl Rng, modes: usize) -> Vec<f64> {
    let mesh = space.mesh();
    let dim = mesh.dim();
    let ext: Vec<(f64, f64)> = mesh.extents().to_vec();
    let mut coef = Vec::new();
    for k in 0..modes {
        for l in 0..modes {
            coef.push((
                k as f64,
                l as f64,
                rng.random_range(-1.0..1.0) / (1.0 + (k * k + l * l) as f64),
            ));
        }
    }
    let psi = |x: &[f64; 3]| -> f64 {
        let mut bub = 1.0;
        let mut s = [0.0; 3];
        for ax in 0..dim {
            let (lo, hi) = ext[ax];
            s[ax] = (x[ax] - lo) / (hi - lo);
            bub *= (s[ax] * (1.0 - s[ax])).powi(2);
        }
        let (x1, x3) = (s[0], s[dim - 1]);
        let pi = std::f64::consts::PI;
        bub * coef
            .iter()
            .map(|(k, l, c)| c * (k * pi * x1).cos() * (l * pi * x3).cos())
            .sum::<f64>()
    };
    let h = 1e-6;
    space.interpolate(|x, comp| {
        let d = |ax: usize| {
            let (mut p, mut m) = (*x, *x);
            p[ax] += h;
            m[ax] -= h;
            (psi(&p) - psi(&m)) / (2.0 * h)
        };
        if comp == 0 {
            -d(dim - 1)
        } else if comp == dim - 1 {
            d(0)
        } else {
            0.0
        }
    })
}
