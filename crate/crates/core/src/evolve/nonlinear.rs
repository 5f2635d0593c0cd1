use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{diagnostics, weak_load, Diagnostics, PerturbationState, QuadOps};
use crate::error::{Error, Result};
use crate::forms::AssembledForms;
use crate::grid::{FeSpace, Projector, VectorAtQuad};
use crate::linalg::{BandedCholesky, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearOptions {
    /// fixed step; when absent the step follows the stability limit
    pub dt: Option<f64>,
    /// fraction of the stability limit allowed
    pub cfl: f64,
}

impl Default for NonlinearOptions {
    fn default() -> Self {
        NonlinearOptions { dt: None, cfl: 0.5 }
    }
}

/// IMEX step for the full perturbation equations: Lamé viscosity implicit
/// against the mass matrix of ϱ + ρ̄, pressure, gravity, advection and
/// heating explicit; ϱ and θ are then updated with the new velocity.
#[derive(Debug)]
pub struct NonlinearStepper {
    forms: Arc<AssembledForms>,
    ops: QuadOps,
    projector: Projector,
    opts: NonlinearOptions,
}

impl NonlinearStepper {
    pub fn new(forms: Arc<AssembledForms>, opts: NonlinearOptions) -> Result<Self> {
        if !(opts.cfl > 0.0) {
            return Err(Error::InvalidInput(format!(
                "cfl = {} must be positive",
                opts.cfl
            )));
        }
        if let Some(dt) = opts.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::InvalidInput(format!("dt = {dt} must be positive")));
            }
        }
        let scalar = Arc::new(FeSpace::scalar(forms.space.mesh().clone()));
        let projector = Projector::new(scalar)?;
        let ops = QuadOps::new(&forms);
        Ok(NonlinearStepper {
            forms,
            ops,
            projector,
            opts,
        })
    }

    pub fn forms(&self) -> &Arc<AssembledForms> {
        &self.forms
    }

    /// min over quadrature points of h/(|u| + c_s) and h²(ρ̄+ϱ)/(μ+μ₀),
    /// c_s = √(γa(ē+θ)).
    pub fn stability_limit(&self, s: &PerturbationState) -> f64 {
        let p = self.forms.params();
        let h = self.forms.space.mesh().min_h();
        let uq = VectorAtQuad::new(&self.forms.space, &s.u);
        let mut lim = f64::INFINITY;
        for (k, c) in self.ops.coefs.iter().enumerate() {
            let speed: f64 = uq.val[k].iter().map(|x| x * x).sum::<f64>().sqrt();
            let cs = (p.gamma * p.a * (c.e + s.theta[k]).max(0.0)).sqrt();
            lim = lim.min(h / (speed + cs));
            lim = lim.min(h * h * (c.rho + s.rho[k]) / (p.mu + p.mu0));
        }
        lim
    }

    /// Step size for the next step; a fixed dt above the limit is an error.
    pub fn next_dt(&self, s: &PerturbationState) -> Result<f64> {
        let limit = self.opts.cfl * self.stability_limit(s);
        match self.opts.dt {
            Some(dt) if dt > limit => Err(Error::CflViolation { dt, limit }),
            Some(dt) => Ok(dt),
            None => Ok(limit),
        }
    }

    fn weighted_mass(&self, weight: &[f64]) -> CsrMatrix {
        let space = &self.forms.space;
        let mesh = space.mesh();
        let qd = space.quad();
        let dim = mesh.dim();
        let mut m = CsrMatrix::zeros(space.pattern());
        for c in 0..mesh.cell_count() {
            let dofs = space.cell_dofs(c);
            let mut loc = [[0.0; 8]; 8];
            for q in 0..qd.nq {
                let w = qd.weights[q] * weight[c * qd.nq + q];
                for a in 0..qd.nodes {
                    for b in 0..qd.nodes {
                        loc[a][b] += w * qd.phi[q][a] * qd.phi[q][b];
                    }
                }
            }
            for a in 0..qd.nodes {
                for b in 0..qd.nodes {
                    for comp in 0..dim {
                        let (i, j) = (dofs[a * dim + comp], dofs[b * dim + comp]);
                        if i != usize::MAX && j != usize::MAX {
                            m.add(i, j, loc[a][b]);
                        }
                    }
                }
            }
        }
        m
    }

    /// Values and gradients at quadrature points of the L² projection of
    /// quadrature data onto the scalar space.
    fn recover(&self, values: &[f64]) -> VectorAtQuad {
        let coeffs = self.projector.project(values);
        VectorAtQuad::new(self.projector.space(), &coeffs)
    }

    pub fn step(&mut self, s: &mut PerturbationState, dt: f64) -> Result<()> {
        s.check(&self.forms)?;
        let p = *self.forms.params();
        let space = self.forms.space.clone();
        let dim = space.mesh().dim();
        let coefs = &self.ops.coefs;
        let uq = VectorAtQuad::new(&space, &s.u);

        let dens: Vec<f64> = coefs.iter().zip(&s.rho).map(|(c, r)| c.rho + r).collect();
        let m = self.weighted_mass(&dens);
        let mut b = m.mul_vec(&s.u);
        for x in b.iter_mut() {
            *x /= dt;
        }
        let load = weak_load(&space, &self.ops.dil, |k| {
            let c = &coefs[k];
            let (r, th) = (s.rho[k], s.theta[k]);
            let pres = p.a * (c.e * r + c.rho * th + r * th);
            let mut f = [0.0; 3];
            for (i, fi) in f.iter_mut().enumerate().take(dim) {
                let adv: f64 = (0..dim).map(|j| uq.val[k][j] * uq.grad[k][i][j]).sum();
                *fi = -dens[k] * adv;
            }
            f[dim - 1] -= p.g * r;
            (pres, f)
        });
        for (bi, li) in b.iter_mut().zip(&load) {
            *bi += li;
        }
        let a = CsrMatrix::lincomb(&[(1.0 / dt, &m), (1.0, &self.forms.k2)])?;
        let chol = BandedCholesky::factor(&a)
            .map_err(|e| Error::LinearSolveFailure(format!("momentum solve: {e}")))?;
        let u1 = chol.solve(&b);
        let u1q = VectorAtQuad::new(&space, &u1);
        let x1 = self.ops.dil.at_quad(&space, &u1);

        let rr = self.recover(&s.rho);
        let tr = self.recover(&s.theta);
        let (mut min_rho, mut min_e) = (f64::INFINITY, f64::INFINITY);
        for (k, c) in coefs.iter().enumerate() {
            let v = &u1q.val[k];
            let gr = &u1q.grad[k];
            let div = u1q.div(k);
            let v3 = v[dim - 1];
            let grad_r: f64 = (0..dim).map(|j| v[j] * rr.grad[k][0][j]).sum();
            let flux = c.rho_p * v3 + c.rho * x1[k] + grad_r + rr.val[k][0] * div;
            let rho1 = s.rho[k] - dt * flux;

            let grad_t: f64 = (0..dim).map(|j| v[j] * tr.grad[k][0][j]).sum();
            let mut sym = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    let e = gr[i][j] + gr[j][i];
                    sym += e * e;
                }
            }
            let heat = p.mu * sym / 2.0 + p.lambda_v * div * div;
            let th = s.theta[k];
            let rate =
                c.e_p * v3 + p.a * c.e * x1[k] + grad_t + p.a * th * div - heat / (c.rho + rho1);
            let th1 = th - dt * rate;

            s.rho[k] = rho1;
            s.theta[k] = th1;
            min_rho = min_rho.min(c.rho + rho1);
            min_e = min_e.min(c.e + th1);
        }
        s.u = u1;
        s.t += dt;
        if !(min_rho > 0.0 && min_e > 0.0) {
            return Err(Error::PositivityLoss {
                t: s.t,
                min_rho,
                min_e,
            });
        }
        Ok(())
    }

    /// Advances to `t_end` (the last step is shortened to land on it).
    pub fn run(
        &mut self,
        s: &mut PerturbationState,
        t_end: f64,
        every: usize,
    ) -> Result<Vec<Diagnostics>> {
        let every = every.max(1);
        let mut out = vec![diagnostics(&self.forms, s)];
        let mut n = 0;
        while s.t < t_end - 1e-12 * t_end.abs().max(1.0) {
            let dt = self.next_dt(s)?.min(t_end - s.t);
            self.step(s, dt)?;
            n += 1;
            if n % every == 0 || s.t >= t_end - 1e-12 * t_end.abs().max(1.0) {
                out.push(diagnostics(&self.forms, s));
            }
        }
        Ok(out)
    }
}
