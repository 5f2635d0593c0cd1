use serde::{Deserialize, Serialize};

use super::{poincare_type_constant, AlphaSolver};
use crate::error::{Error, Result};
use crate::forms::AssembledForms;
use crate::linalg::EigOptions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthOptions {
    /// target for |α(Λ) − Λ²|
    pub tol: f64,
    /// initial right end of the bracket; defaults to √UB
    pub s_max_guess: Option<f64>,
    /// the bracket is doubled up to this value
    pub s_cap: f64,
    pub max_bisections: usize,
    /// also bracket 𝔖 (the zero of α)
    pub frak_s: bool,
    pub frak_s_rel_tol: f64,
    pub eig: EigOptions,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        GrowthOptions {
            tol: 1e-9,
            s_max_guess: None,
            s_cap: 1e6,
            max_bisections: 200,
            frak_s: true,
            frak_s_rel_tol: 1e-6,
            eig: EigOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BisectionStep {
    pub lo: f64,
    pub hi: f64,
    pub s: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthRateResult {
    pub lambda: f64,
    pub alpha_at_lambda: f64,
    /// |α(Λ) − Λ²|
    pub residual: f64,
    /// eigen-residual of the maximiser at s = Λ
    pub eig_residual: f64,
    pub alpha0: f64,
    pub upper_bound: f64,
    /// M-normalised maximiser at s = Λ
    #[serde(skip)]
    pub eigvec: Vec<f64>,
    pub bracket_history: Vec<BisectionStep>,
    /// (s with α(s) > 0, s with α(s) < 0)
    pub frak_s: Option<(f64, f64)>,
    /// discrete constant with α(s) < 0 for s > c₃/μ
    pub c3: Option<f64>,
    pub eigensolves: usize,
}

/// Solves Λ² = α(Λ) by bisection on h(s) = α(s) − s².
pub fn find_growth_rate(forms: &AssembledForms, opts: &GrowthOptions) -> Result<GrowthRateResult> {
    let mut solver = AlphaSolver::new(forms, opts.eig);
    find_with_solver(forms, &mut solver, opts)
}

pub(crate) fn find_with_solver(
    forms: &AssembledForms,
    solver: &mut AlphaSolver<'_>,
    opts: &GrowthOptions,
) -> Result<GrowthRateResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(
            "growth tolerance must be positive".into(),
        ));
    }
    let upper = solver.upper();
    let a0 = solver.alpha(0.0)?;
    let alpha0 = a0.alpha;
    if alpha0 <= 1e-10 * upper.max(1.0) {
        return Err(Error::NotUnstable { alpha0 });
    }
    let h = |v: f64, s: f64| v - s * s;

    let mut lo = 0.0;
    let mut lo_val = a0;
    let mut hi = opts
        .s_max_guess
        .unwrap_or_else(|| upper.max(alpha0).sqrt() * (1.0 + 1e-9));
    let mut hi_val = solver.alpha(hi)?;
    while h(hi_val.alpha, hi) >= 0.0 {
        if hi >= opts.s_cap {
            return Err(Error::BracketFailure { s_max: hi });
        }
        lo = hi;
        lo_val = hi_val;
        hi = (2.0 * hi).min(opts.s_cap);
        hi_val = solver.alpha(hi)?;
    }

    let mut history = Vec::new();
    let mut best = if h(lo_val.alpha, lo).abs() < h(hi_val.alpha, hi).abs() {
        (lo, lo_val)
    } else {
        (hi, hi_val)
    };
    for _ in 0..opts.max_bisections {
        if h(best.1.alpha, best.0).abs() <= opts.tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = solver.alpha(mid)?;
        let hm = h(v.alpha, mid);
        history.push(BisectionStep {
            lo,
            hi,
            s: mid,
            h: hm,
        });
        if hm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hm.abs() <= h(best.1.alpha, best.0).abs() {
            best = (mid, v);
        }
    }
    let (lambda, at) = best;
    let residual = h(at.alpha, lambda).abs();

    let (frak_s, c3) = if opts.frak_s {
        let c3 = poincare_type_constant(forms, &opts.eig)?;
        let br = frak_s_bracket(forms, solver, lambda, c3, opts.frak_s_rel_tol)?;
        (Some(br), Some(c3))
    } else {
        (None, None)
    };

    Ok(GrowthRateResult {
        lambda,
        alpha_at_lambda: at.alpha,
        residual,
        eig_residual: at.residual,
        alpha0,
        upper_bound: upper,
        eigvec: at.vector,
        bracket_history: history,
        frak_s,
        c3,
        eigensolves: solver.solves,
    })
}

/// Brackets 𝔖, the zero of α, between `s_pos` (α > 0) and c₃/μ (α < 0).
pub fn frak_s_bracket(
    forms: &AssembledForms,
    solver: &mut AlphaSolver<'_>,
    s_pos: f64,
    c3: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    let mu = forms.params().mu;
    let mut lo = s_pos;
    let mut hi = (c3 / mu).max(s_pos) * (1.0 + 1e-6) + 1e-12;
    let mut tries = 0;
    while solver.alpha(hi)?.alpha >= 0.0 {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 40 {
            return Err(Error::BracketFailure { s_max: hi });
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if solver.alpha(mid)?.alpha > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}
