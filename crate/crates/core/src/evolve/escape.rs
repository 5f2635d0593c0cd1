use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::compat::{build_compatible_data, CompatOptions};
use super::fit::fit_escape_slope;
use super::nonlinear::{NonlinearOptions, NonlinearStepper};
use super::{diagnostics, Diagnostics, ModeSeed};
use crate::error::{Error, Result};
use crate::forms::{AssembledForms, LameSolver};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EscapeOptions {
    pub deltas: Vec<f64>,
    /// escape threshold for ‖u₃‖; defaults to 1e-2·√(gL), L the height
    pub eps_target: Option<f64>,
    /// defaults to 3(1/Λ)ln(1/min δ)
    pub t_max: Option<f64>,
    /// diagnostics are kept every this many steps
    pub record_every: usize,
    pub nonlinear: NonlinearOptions,
    pub compat: CompatOptions,
}

impl Default for EscapeOptions {
    fn default() -> Self {
        EscapeOptions {
            deltas: vec![1e-5, 1e-4, 1e-3],
            eps_target: None,
            t_max: None,
            record_every: 10,
            nonlinear: NonlinearOptions::default(),
            compat: CompatOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EscapeRun {
    pub delta: f64,
    pub escape_time: f64,
    pub u3_at_escape: f64,
    pub uh_at_escape: f64,
    pub steps: usize,
    pub picard_iterations: usize,
    pub picard_max_contraction: f64,
    pub boundary_residual: f64,
    #[serde(skip)]
    pub trajectory: Vec<Diagnostics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EscapeTimeReport {
    pub deltas: Vec<f64>,
    pub escape_times: Vec<f64>,
    pub fit_slope: f64,
    pub fit_intercept: f64,
    pub lambda_ref: f64,
    pub inverse_lambda: f64,
    /// |slope − 1/Λ| Λ
    pub relative_error: f64,
    pub eps_target: f64,
    /// ε‖ṽ_h‖/(2‖ṽ₃‖), the bar for the horizontal component at escape
    pub horizontal_threshold: f64,
    pub both_components_exceed: bool,
    /// escape times strictly decrease as δ increases
    pub monotone: bool,
    pub runs: Vec<EscapeRun>,
}

/// First time the sampled amplitude reaches `level`, interpolating ln(amp)
/// linearly between samples.
pub fn first_crossing(t: &[f64], amp: &[f64], level: f64) -> Option<f64> {
    if amp.first().is_some_and(|a| *a >= level) {
        return t.first().copied();
    }
    for i in 1..t.len() {
        if amp[i] >= level {
            let (a0, a1) = (amp[i - 1].ln(), amp[i].ln());
            let f = if a1 > a0 {
                (level.ln() - a0) / (a1 - a0)
            } else {
                1.0
            };
            return Some(t[i - 1] + f * (t[i] - t[i - 1]));
        }
    }
    None
}

fn log_interp(t0: f64, t1: f64, a0: f64, a1: f64, t: f64) -> f64 {
    if t1 <= t0 || !(a0 > 0.0 && a1 > 0.0) {
        return a1;
    }
    let f = (t - t0) / (t1 - t0);
    (a0.ln() + f * (a1.ln() - a0.ln())).exp()
}

fn run_one(
    forms: &Arc<AssembledForms>,
    lame: &LameSolver,
    seed: &ModeSeed,
    delta: f64,
    eps: f64,
    t_max: f64,
    opts: &EscapeOptions,
) -> Result<EscapeRun> {
    let data = build_compatible_data(forms, lame, seed, delta, &opts.compat)?;
    let mut stepper = NonlinearStepper::new(forms.clone(), opts.nonlinear)?;
    let mut s = data.state.clone();
    let mut prev = diagnostics(forms, &s);
    let mut traj = vec![prev];
    let mut steps = 0;
    let every = opts.record_every.max(1);
    loop {
        if prev.u3_l2 >= eps {
            // only reachable for the initial state
            return Ok(EscapeRun {
                delta,
                escape_time: prev.t,
                u3_at_escape: prev.u3_l2,
                uh_at_escape: prev.uh_l2,
                steps,
                picard_iterations: data.iterations,
                picard_max_contraction: data.max_contraction,
                boundary_residual: data.boundary_residual,
                trajectory: traj,
            });
        }
        if s.t >= t_max {
            return Err(Error::NoEscape { delta, t_max });
        }
        let dt = stepper.next_dt(&s)?.min(t_max - s.t).max(1e-300);
        stepper.step(&mut s, dt)?;
        steps += 1;
        let d = diagnostics(forms, &s);
        if d.u3_l2 >= eps {
            let te = first_crossing(&[prev.t, d.t], &[prev.u3_l2, d.u3_l2], eps).unwrap_or(d.t);
            let uh = log_interp(prev.t, d.t, prev.uh_l2, d.uh_l2, te);
            traj.push(d);
            return Ok(EscapeRun {
                delta,
                escape_time: te,
                u3_at_escape: eps,
                uh_at_escape: uh,
                steps,
                picard_iterations: data.iterations,
                picard_max_contraction: data.max_contraction,
                boundary_residual: data.boundary_residual,
                trajectory: traj,
            });
        }
        if steps % every == 0 {
            traj.push(d);
        }
        prev = d;
    }
}

/// Seeds compatible data for each δ, integrates the full equations until
/// ‖u₃‖ reaches the threshold, and fits escape time against ln(1/δ).
/// Runs for different δ are independent and execute in parallel.
pub fn escape_time_experiment(
    forms: Arc<AssembledForms>,
    seed: &ModeSeed,
    opts: &EscapeOptions,
) -> Result<EscapeTimeReport> {
    if opts.deltas.len() < 2 {
        return Err(Error::InvalidInput("at least two deltas are needed".into()));
    }
    if opts.deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(Error::InvalidInput("deltas must lie in (0, 1)".into()));
    }
    let p = *forms.params();
    let (zlo, zhi) = forms.space.mesh().vertical_range();
    let eps = opts.eps_target.unwrap_or(1e-2 * (p.g * (zhi - zlo)).sqrt());
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "eps_target = {eps} must be positive"
        )));
    }
    let min_delta = opts.deltas.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = opts
        .t_max
        .unwrap_or(3.0 / seed.lambda * (1.0 / min_delta).ln());
    let lame = LameSolver::new(forms.space.clone(), &p)?;

    let runs: Vec<EscapeRun> = opts
        .deltas
        .par_iter()
        .map(|&d| run_one(&forms, &lame, seed, d, eps, t_max, opts))
        .collect::<Result<Vec<_>>>()?;

    let times: Vec<f64> = runs.iter().map(|r| r.escape_time).collect();
    let fit = fit_escape_slope(&opts.deltas, &times)?;
    let inv = 1.0 / seed.lambda;
    let vh = forms.space.horizontal_l2(&seed.v);
    let v3 = forms.space.vertical_l2(&seed.v);
    let horizontal_threshold = 0.5 * eps * vh / v3;
    let both = runs
        .iter()
        .all(|r| r.u3_at_escape >= eps && r.uh_at_escape >= horizontal_threshold);
    let mut order: Vec<(f64, f64)> = opts
        .deltas
        .iter()
        .cloned()
        .zip(times.iter().cloned())
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = order.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(EscapeTimeReport {
        deltas: opts.deltas.clone(),
        escape_times: times,
        fit_slope: fit.slope,
        fit_intercept: fit.intercept,
        lambda_ref: seed.lambda,
        inverse_lambda: inv,
        relative_error: (fit.slope - inv).abs() / inv,
        eps_target: eps,
        horizontal_threshold,
        both_components_exceed: both,
        monotone,
        runs,
    })
}
