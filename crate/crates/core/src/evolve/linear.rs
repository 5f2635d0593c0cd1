use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::fit::fit_exponential;
use super::{diagnostics, random_solenoidal, Diagnostics, PerturbationState, QuadOps};
use crate::error::{Error, Result};
use crate::forms::AssembledForms;
use crate::linalg::{axpy, norm2, BandedCholesky, CsrMatrix};

/// Crank–Nicolson for the coupled linear system. Eliminating the midpoint
/// values of ϱ and θ leaves one SPD solve per step:
///
/// [M/dt + K2/2 − (dt/4)K1] u¹ = [M/dt − K2/2 + (dt/4)K1] u⁰ + G(ϱ⁰, θ⁰)
///
/// after which ϱ¹ = ϱ⁰ − (dt/2)D(u⁰ + u¹) and θ¹ = θ⁰ − (dt/2)T(u⁰ + u¹).
#[derive(Debug)]
pub struct LinearStepper {
    forms: Arc<AssembledForms>,
    ops: QuadOps,
    dt: f64,
    lhs: CsrMatrix,
    rhs: CsrMatrix,
    chol: BandedCholesky,
    /// largest relative residual of the reduced solve so far
    pub max_residual: f64,
}

impl LinearStepper {
    pub fn new(forms: Arc<AssembledForms>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("dt = {dt} must be positive")));
        }
        let lhs = CsrMatrix::lincomb(&[
            (1.0 / dt, &forms.m),
            (0.5, &forms.k2),
            (-0.25 * dt, &forms.k1),
        ])?;
        let rhs = CsrMatrix::lincomb(&[
            (1.0 / dt, &forms.m),
            (-0.5, &forms.k2),
            (0.25 * dt, &forms.k1),
        ])?;
        let chol = BandedCholesky::factor(&lhs).map_err(|e| {
            Error::LinearSolveFailure(format!("Crank–Nicolson matrix at dt = {dt}: {e}"))
        })?;
        let ops = QuadOps::new(&forms);
        Ok(LinearStepper {
            forms,
            ops,
            dt,
            lhs,
            rhs,
            chol,
            max_residual: 0.0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn forms(&self) -> &Arc<AssembledForms> {
        &self.forms
    }

    pub fn step(&mut self, s: &mut PerturbationState) -> Result<()> {
        s.check(&self.forms)?;
        let mut b = self.rhs.mul_vec(&s.u);
        let g = self.ops.linear_load(&s.rho, &s.theta);
        axpy(1.0, &g, &mut b);
        let u1 = self.chol.solve(&b);
        let mut r = self.lhs.mul_vec(&u1);
        axpy(-1.0, &b, &mut r);
        let nb = norm2(&b);
        let res = if nb > 0.0 { norm2(&r) / nb } else { norm2(&r) };
        if !(res <= 1e-10) {
            return Err(Error::LinearSolveFailure(format!(
                "relative residual {res:e} at t = {}",
                s.t
            )));
        }
        self.max_residual = self.max_residual.max(res);

        let sum: Vec<f64> = s.u.iter().zip(&u1).map(|(a, b)| a + b).collect();
        let h = 0.5 * self.dt;
        axpy(-h, &self.ops.d_op(&sum), &mut s.rho);
        axpy(-h, &self.ops.t_op(&sum), &mut s.theta);
        s.u = u1;
        s.t += self.dt;
        Ok(())
    }
}

/// One Crank–Nicolson step (factorises afresh; use [`LinearStepper`] for runs).
pub fn linear_step(
    state: &PerturbationState,
    dt: f64,
    forms: Arc<AssembledForms>,
) -> Result<PerturbationState> {
    let mut st = LinearStepper::new(forms, dt)?;
    let mut s = state.clone();
    st.step(&mut s)?;
    Ok(s)
}

/// Advances to `t_end`, recording diagnostics every `every` steps (and at the end).
pub fn run_linear(
    stepper: &mut LinearStepper,
    state: &mut PerturbationState,
    t_end: f64,
    every: usize,
) -> Result<Vec<Diagnostics>> {
    let every = every.max(1);
    let forms = stepper.forms().clone();
    let steps = ((t_end - state.t) / stepper.dt()).round().max(0.0) as usize;
    let mut out = vec![diagnostics(&forms, state)];
    for n in 1..=steps {
        stepper.step(state)?;
        if n % every == 0 || n == steps {
            out.push(diagnostics(&forms, state));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct AppendixReport {
    pub lambda: f64,
    /// sup_t e^{−Λt}‖(ϱ,u,θ)(t)‖ / ‖(ϱ,u,θ)(0)‖ per random start
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// fitted ln‖u₃‖ slope over the second half of each run
    pub tail_rates: Vec<f64>,
}

/// Random solenoidal starts with ϱ = θ = 0; tracks e^{−Λt} times the energy
/// diagnostic and the late-time growth rate.
pub fn appendix_bound(
    forms: Arc<AssembledForms>,
    lambda: f64,
    seeds: &[u64],
    dt: f64,
    t_end: f64,
) -> Result<AppendixReport> {
    let mut stepper = LinearStepper::new(forms.clone(), dt)?;
    let mut ratios = Vec::with_capacity(seeds.len());
    let mut tail_rates = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = PerturbationState::zero(&forms);
        s.u = random_solenoidal(&forms.space, &mut rng, 4);
        let every = ((t_end / dt) as usize / 200).max(1);
        let traj = run_linear(&mut stepper, &mut s, t_end, every)?;
        let e0 = traj[0].energy;
        let ratio = traj
            .iter()
            .map(|d| (-lambda * d.t).exp() * d.energy / e0)
            .fold(0.0, f64::max);
        ratios.push(ratio);
        let tail: Vec<&Diagnostics> = traj.iter().filter(|d| d.t >= 0.5 * t_end).collect();
        let t: Vec<f64> = tail.iter().map(|d| d.t).collect();
        let a: Vec<f64> = tail.iter().map(|d| d.u3_l2).collect();
        let rate = match fit_exponential(&t, &a) {
            Ok(f) => f.lambda,
            Err(Error::InsufficientGrowth { .. }) => {
                super::fit::fit_line(&t, &a.iter().map(|x| x.ln()).collect::<Vec<_>>()).slope
            }
            Err(e) => return Err(e),
        };
        tail_rates.push(rate);
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(AppendixReport {
        lambda,
        ratios,
        max_ratio,
        tail_rates,
    })
}
