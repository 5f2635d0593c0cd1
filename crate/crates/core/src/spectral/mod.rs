//! α(s), the growth-rate fixed point Λ² = α(Λ), the growing mode and the
//! incompressible comparison rate.

mod bounds;
mod fixed_point;
mod incompressible;
mod lower_bound;
mod mode;

pub use bounds::{poincare_constant, poincare_type_constant, upper_bound, upper_bound_discrete};
pub use fixed_point::{
    find_growth_rate, frak_s_bracket, BisectionStep, GrowthOptions, GrowthRateResult,
};
pub use incompressible::{
    incompressible_growth_rate, IncompressibleOptions, IncompressibleResult, PenaltyStep,
};
pub use lower_bound::{lower_bound_test_function, test_field_divergence, TestFunction};
pub use mode::{reconstruct_mode, GrowingMode, ModeResiduals};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::AssembledForms;
use crate::linalg::{dense_largest, largest_shift_invert, CsrMatrix, EigOptions, EigPair};

/// The pencil (E₁, E₂, J) whose largest eigenvalue of E₁ − sE₂ against J is α(s).
#[derive(Debug, Clone, Copy)]
pub struct Pencil<'a> {
    pub e1: &'a CsrMatrix,
    pub e2: &'a CsrMatrix,
    pub j: &'a CsrMatrix,
    /// a bound with α(s) ≤ upper for all s ≥ 0
    pub upper: f64,
}

/// Evaluates α(s) with warm starts and monotone shift selection.
pub struct AlphaSolver<'a> {
    forms: &'a AssembledForms,
    pencil: Pencil<'a>,
    opts: EigOptions,
    warm: Option<Vec<f64>>,
    // (s, α(s)) pairs computed so far
    history: Vec<(f64, f64)>,
    pub solves: usize,
}

#[derive(Debug, Clone)]
pub struct AlphaValue {
    pub s: f64,
    pub alpha: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl<'a> AlphaSolver<'a> {
    /// Solver for the compressible pencil (K1, K2, M).
    pub fn new(forms: &'a AssembledForms, opts: EigOptions) -> Self {
        let upper = upper_bound(&forms.profile).max(upper_bound_discrete(forms));
        let pencil = Pencil {
            e1: &forms.k1,
            e2: &forms.k2,
            j: &forms.m,
            upper,
        };
        Self::with_pencil(forms, pencil, opts)
    }

    pub fn with_pencil(forms: &'a AssembledForms, pencil: Pencil<'a>, opts: EigOptions) -> Self {
        AlphaSolver {
            forms,
            pencil,
            opts,
            warm: None,
            history: Vec::new(),
            solves: 0,
        }
    }

    pub fn upper(&self) -> f64 {
        self.pencil.upper
    }

    fn known_bound(&self, s: f64) -> f64 {
        // α is nonincreasing, so any α(s') with s' ≤ s bounds α(s) from above
        self.history
            .iter()
            .filter(|(t, _)| *t <= s)
            .map(|(_, a)| *a)
            .fold(self.pencil.upper, f64::min)
    }

    pub fn matrix(&self, s: f64) -> CsrMatrix {
        CsrMatrix::lincomb(&[(1.0, self.pencil.e1), (-s, self.pencil.e2)]).expect("shared pattern")
    }

    /// Largest eigenpair of (E₁ − sE₂) x = α J x.
    pub fn alpha(&mut self, s: f64) -> Result<AlphaValue> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::InvalidInput(format!(
                "s = {s} must be finite and nonnegative"
            )));
        }
        let a = self.matrix(s);
        let bound = self.known_bound(s);
        let scale = self.pencil.upper.abs().max(1e-3);
        let sigma = bound + 0.05 * scale + 0.05 * bound.abs();
        let forms = self.forms;
        let tie = move |v: &[f64]| forms.vertical_l2_sq(v);
        let warm = self.warm.as_deref();
        let pair =
            match largest_shift_invert(&a, self.pencil.j, sigma, warm, &self.opts, Some(&tie)) {
                Ok(p) => p,
                Err(Error::SingularSystem { .. }) => {
                    let safe = self.pencil.upper * 1.01 + 0.05 * scale;
                    largest_shift_invert(&a, self.pencil.j, safe, warm, &self.opts, Some(&tie))?
                }
                Err(e) => return Err(e),
            };
        self.solves += 1;
        let EigPair {
            value,
            vector,
            residual,
            iterations,
        } = pair;
        self.history.push((s, value));
        self.warm = Some(vector.clone());
        Ok(AlphaValue {
            s,
            alpha: value,
            vector,
            residual,
            iterations,
        })
    }

    /// Dense-oracle evaluation (full eigendecomposition).
    pub fn alpha_dense(&self, s: f64) -> Result<AlphaValue> {
        let a = self.matrix(s);
        let forms = self.forms;
        let tie = move |v: &[f64]| forms.vertical_l2_sq(v);
        let p = dense_largest(&a, self.pencil.j, self.opts.degeneracy_tol, Some(&tie))?;
        Ok(AlphaValue {
            s,
            alpha: p.value,
            vector: p.vector,
            residual: p.residual,
            iterations: 0,
        })
    }
}

/// α(s) for one s with default solver options.
pub fn alpha(forms: &AssembledForms, s: f64, opts: &EigOptions) -> Result<AlphaValue> {
    AlphaSolver::new(forms, *opts).alpha(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaSample {
    pub s: f64,
    pub alpha: f64,
    /// E₂ of the maximiser; −α′(s) at this s
    pub e2: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaCurve {
    pub samples: Vec<AlphaSample>,
    /// max |Δα/Δs| over consecutive samples
    pub lipschitz_estimate: f64,
    /// max E₂ of the sampled maximisers; bounds every difference quotient
    pub lipschitz_bound: f64,
    pub lower_bound: Option<(f64, f64)>,
    pub upper_bound: f64,
    /// (s with α > 0, s with α < 0) around the first sign change
    pub frak_s: Option<(f64, f64)>,
    /// largest α(s₂) − α(s₁) over s₁ < s₂ (positive means a monotonicity violation)
    pub max_increase: f64,
    /// smallest α(s) − (c₁ − c₂s) and UB − α(s) over the samples
    pub lower_margin: Option<f64>,
    pub upper_margin: f64,
}

/// Samples α on a strictly increasing grid, warm-starting each solve.
pub fn sample_alpha_curve(
    forms: &AssembledForms,
    s_grid: &[f64],
    opts: &EigOptions,
    lower: Option<(f64, f64)>,
) -> Result<AlphaCurve> {
    if s_grid.is_empty() {
        return Err(Error::InvalidInput("empty s grid".into()));
    }
    if s_grid.windows(2).any(|w| !(w[1] > w[0])) || s_grid[0] < 0.0 {
        return Err(Error::InvalidInput(
            "s grid must be nonnegative and strictly increasing".into(),
        ));
    }
    let mut solver = AlphaSolver::new(forms, *opts);
    let mut samples = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let v = solver.alpha(s)?;
        let e2 = forms.k2.quad_form(&v.vector);
        samples.push(AlphaSample {
            s,
            alpha: v.alpha,
            e2,
            residual: v.residual,
        });
    }
    let upper = solver.upper();
    let mut lipschitz_estimate: f64 = 0.0;
    let mut max_increase = f64::NEG_INFINITY;
    let mut frak_s = None;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            max_increase = max_increase.max(samples[j].alpha - samples[i].alpha);
        }
        if i + 1 < samples.len() {
            let (p, q) = (&samples[i], &samples[i + 1]);
            lipschitz_estimate = lipschitz_estimate.max(((q.alpha - p.alpha) / (q.s - p.s)).abs());
            if frak_s.is_none() && p.alpha > 0.0 && q.alpha < 0.0 {
                frak_s = Some((p.s, q.s));
            }
        }
    }
    if samples.len() == 1 {
        max_increase = 0.0;
    }
    let lipschitz_bound = samples.iter().map(|p| p.e2).fold(0.0, f64::max);
    let lower_margin = lower.map(|(c1, c2)| {
        samples
            .iter()
            .map(|p| p.alpha - (c1 - c2 * p.s))
            .fold(f64::INFINITY, f64::min)
    });
    let upper_margin = samples
        .iter()
        .map(|p| upper - p.alpha)
        .fold(f64::INFINITY, f64::min);
    Ok(AlphaCurve {
        samples,
        lipschitz_estimate,
        lipschitz_bound,
        lower_bound: lower,
        upper_bound: upper,
        frak_s,
        max_increase,
        lower_margin,
        upper_margin,
    })
}
