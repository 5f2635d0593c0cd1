use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{weak_load, ModeSeed, PerturbationState, QuadOps};
use crate::error::{Error, Result};
use crate::forms::{AssembledForms, LameSolver};
use crate::grid::{FeSpace, Projector, VectorAtQuad};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompatOptions {
    /// stop when successive iterates differ by at most this in the discrete H¹ norm
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CompatOptions {
    fn default() -> Self {
        CompatOptions {
            tol: 1e-10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatibleData {
    pub delta: f64,
    #[serde(skip)]
    pub state: PerturbationState,
    #[serde(skip)]
    pub u_r: Vec<f64>,
    pub iterations: usize,
    /// ‖uⁿ⁺¹ − uⁿ‖ / ‖uⁿ − uⁿ⁻¹‖ in the discrete H¹ norm
    pub contraction: Vec<f64>,
    pub max_contraction: f64,
    pub u_r_h1: f64,
    /// boundary max norm of the compatibility expression for the data
    pub boundary_residual: f64,
    /// the same for the unmodified data δ(ρ̃, ṽ, θ̃)
    pub linear_data_residual: f64,
}

fn h1(space: &FeSpace, v: &[f64]) -> Result<f64> {
    let n = space.norms(v)?;
    Ok((n.l2 * n.l2 + n.h1_semi * n.h1_semi).sqrt())
}

/// Initial data δ(ρ̃, ṽ, θ̃) + δ²(ρ̃, u_r, θ̃) where u_r solves, by Picard
/// iteration on the Lamé operator,
///
/// μΔu_r + μ₀∇div u_r − δϱ**(ṽ·∇u_r + u_r·∇ṽ) − δ²ϱ** u_r·∇u_r
///   = a∇(ēρ̃ + ρ̄θ̃) + gρ̃e₃ + ϱ**ṽ·∇ṽ + a∇(ϱ*θ*),
///
/// ϱ* = (1+δ)ρ̃, θ* = (1+δ)θ̃, ϱ** = (δ+δ²)ρ̃ + ρ̄.
pub fn build_compatible_data(
    forms: &AssembledForms,
    lame: &LameSolver,
    seed: &ModeSeed,
    delta: f64,
    opts: &CompatOptions,
) -> Result<CompatibleData> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "δ = {delta} must lie in (0, 1)"
        )));
    }
    if !lame.space().same_mesh(&forms.space) {
        return Err(Error::MeshMismatch);
    }
    let space = &forms.space;
    let ops = QuadOps::new(forms);
    let dim = space.mesh().dim();
    let (a, g) = (ops.a, ops.g);
    let vq = VectorAtQuad::new(space, &seed.v);
    let s1 = 1.0 + delta;
    let rho2: Vec<f64> = ops
        .coefs
        .iter()
        .enumerate()
        .map(|(k, c)| (delta + delta * delta) * seed.rho[k] + c.rho)
        .collect();

    // fixed part of the load
    let base = weak_load(space, &ops.dil, |k| {
        let c = &ops.coefs[k];
        let pres = a * (c.e * seed.rho[k] + c.rho * seed.theta[k])
            + a * s1 * s1 * seed.rho[k] * seed.theta[k];
        let mut f = convect(&vq, &vq, k, dim);
        for x in f.iter_mut() {
            *x *= rho2[k];
        }
        f[dim - 1] += g * seed.rho[k];
        // ∫∇q·w = −∫q div w, with the discrete divergence of the forms
        (-pres, f)
    });

    let solve = |u: &[f64]| -> Result<Vec<f64>> {
        let uq = VectorAtQuad::new(space, u);
        let extra = weak_load(space, &ops.dil, |k| {
            let lin_a = convect(&vq, &uq, k, dim);
            let lin_b = convect(&uq, &vq, k, dim);
            let quad = convect(&uq, &uq, k, dim);
            let mut f = [0.0; 3];
            for i in 0..dim {
                f[i] = rho2[k] * (delta * (lin_a[i] + lin_b[i]) + delta * delta * quad[i]);
            }
            (0.0, f)
        });
        // K u = −⟨f, w⟩
        let load: Vec<f64> = base.iter().zip(&extra).map(|(b, e)| -(b + e)).collect();
        lame.solve_load(&load)
    };

    let mut u = solve(&vec![0.0; space.n_dofs()])?;
    let mut contraction = Vec::new();
    let mut prev_diff: Option<f64> = None;
    let mut iterations = 1;
    loop {
        let next = solve(&u)?;
        let d: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        let diff = h1(space, &d)?;
        u = next;
        iterations += 1;
        if let Some(p) = prev_diff {
            if p > 0.0 {
                let f = diff / p;
                contraction.push(f);
                if f >= 1.0 && diff > opts.tol {
                    return Err(Error::PicardDivergence { factor: f });
                }
            }
        }
        if diff <= opts.tol {
            break;
        }
        if iterations >= opts.max_iter {
            let factor = contraction.last().copied().unwrap_or(f64::NAN);
            return Err(Error::PicardDivergence { factor });
        }
        prev_diff = Some(diff);
    }

    let d2 = delta * delta;
    let state = PerturbationState {
        t: 0.0,
        rho: seed.rho.iter().map(|x| (delta + d2) * x).collect(),
        u: seed
            .v
            .iter()
            .zip(&u)
            .map(|(v, r)| delta * v + d2 * r)
            .collect(),
        theta: seed.theta.iter().map(|x| (delta + d2) * x).collect(),
    };
    let boundary = boundary_residual(forms, &state)?;
    let linear_data_residual = boundary_residual(forms, &seed.state(delta))?;
    let max_contraction = contraction.iter().cloned().fold(0.0, f64::max);
    Ok(CompatibleData {
        delta,
        u_r_h1: h1(space, &u)?,
        state,
        u_r: u,
        iterations,
        contraction,
        max_contraction,
        boundary_residual: boundary,
        linear_data_residual,
    })
}

/// (a·∇)b at quadrature point k.
fn convect(a: &VectorAtQuad, b: &VectorAtQuad, k: usize, dim: usize) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate().take(dim) {
        *o = (0..dim).map(|j| a.val[k][j] * b.grad[k][i][j]).sum();
    }
    out
}

/// Max over boundary nodes of the strong-form compatibility expression
/// (ϱ+ρ̄)u·∇u + a∇(ēϱ + ρ̄θ + ϱθ) − μΔu − μ₀∇div u + gϱe₃, with second
/// derivatives taken from L²-recovered nodal gradients and the result
/// projected onto the scalar Q1 space.
pub fn boundary_residual(forms: &AssembledForms, s: &PerturbationState) -> Result<f64> {
    s.check(forms)?;
    let space = &forms.space;
    let mesh = space.mesh();
    let dim = mesh.dim();
    let ops = QuadOps::new(forms);
    let p = forms.params();
    let scalar = Arc::new(FeSpace::scalar(mesh.clone()));
    let proj = Projector::new(scalar.clone())?;
    let uq = VectorAtQuad::new(space, &s.u);
    let nk = uq.len();

    // ∂ⱼuᵢ recovered on nodes, differentiated again at quadrature points
    let mut second = vec![[[[0.0; 3]; 3]; 3]; nk];
    for i in 0..dim {
        for j in 0..dim {
            let vals: Vec<f64> = (0..nk).map(|k| uq.grad[k][i][j]).collect();
            let rec = VectorAtQuad::new(&scalar, &proj.project(&vals));
            for (k, sk) in second.iter_mut().enumerate() {
                sk[i][j] = rec.grad[k][0];
            }
        }
    }
    let pres: Vec<f64> = ops
        .coefs
        .iter()
        .enumerate()
        .map(|(k, c)| c.e * s.rho[k] + c.rho * s.theta[k] + s.rho[k] * s.theta[k])
        .collect();
    let pres_rec = VectorAtQuad::new(&scalar, &proj.project(&pres));

    let mut worst: f64 = 0.0;
    for i in 0..dim {
        let expr: Vec<f64> = (0..nk)
            .map(|k| {
                let c = &ops.coefs[k];
                let conv = convect(&uq, &uq, k, dim)[i];
                let lap: f64 = (0..dim).map(|j| second[k][i][j][j]).sum();
                let grad_div: f64 = (0..dim).map(|j| second[k][j][j][i]).sum();
                let mut v = (c.rho + s.rho[k]) * conv + p.a * pres_rec.grad[k][0][i]
                    - p.mu * lap
                    - p.mu0 * grad_div;
                if i == dim - 1 {
                    v += p.g * s.rho[k];
                }
                v
            })
            .collect();
        let nodal = proj.project(&expr);
        for (node, x) in nodal.iter().enumerate() {
            if mesh.on_boundary(node) {
                worst = worst.max(x.abs());
            }
        }
    }
    Ok(worst)
}
