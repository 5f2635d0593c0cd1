use serde::Serialize;

use super::{PerturbationState, QuadOps};
use crate::error::{Error, Result};
use crate::forms::AssembledForms;

#[derive(Debug, Clone, Serialize)]
pub struct StabilityLedger {
    pub times: Vec<f64>,
    /// ∫ ϱ²/(−ρ̄′) + ρ̄|u|²/g + ρ̄θ²/(gē)
    pub lhs: Vec<f64>,
    /// ∫₀ᵗ ∫ 2μ/g |∇u|² + 2μ₀/g (div u)², trapezoid rule in time
    pub dissipation: Vec<f64>,
    pub rhs0: f64,
    /// max_t |lhs + dissipation − rhs0| / rhs0
    pub max_violation: f64,
}

/// Streaming evaluation of the stable-case energy identity; feed it every
/// state of a run in order.
#[derive(Debug)]
pub struct LedgerTracker<'a> {
    forms: &'a AssembledForms,
    ops: QuadOps,
    last_rate: Option<f64>,
    last_t: f64,
    ledger: StabilityLedger,
}

impl<'a> LedgerTracker<'a> {
    /// Requires ρ̄′ < 0 strictly and ē constant.
    pub fn new(forms: &'a AssembledForms) -> Result<Self> {
        let prof = &forms.profile;
        let (max_rp, _) = prof.rho_prime_range();
        if max_rp >= -1e-10 {
            return Err(Error::WrongProfileClass(format!(
                "max ρ̄′ = {max_rp:e} must be negative"
            )));
        }
        let (e_lo, e_hi) = prof.energy_range();
        if prof.max_abs_e_prime() > 1e-8 * e_hi || e_hi - e_lo > 1e-8 * e_hi {
            return Err(Error::WrongProfileClass(format!(
                "ē varies over [{e_lo}, {e_hi}]; it must be constant"
            )));
        }
        Ok(LedgerTracker {
            forms,
            ops: QuadOps::new(forms),
            last_rate: None,
            last_t: 0.0,
            ledger: StabilityLedger {
                times: Vec::new(),
                lhs: Vec::new(),
                dissipation: Vec::new(),
                rhs0: 0.0,
                max_violation: 0.0,
            },
        })
    }

    fn lhs(&self, s: &PerturbationState) -> f64 {
        let g = self.ops.g;
        let qd = self.forms.space.quad();
        let mut acc = self.forms.m.quad_form(&s.u) / g;
        for (k, c) in self.ops.coefs.iter().enumerate() {
            let w = qd.weights[k % qd.nq];
            acc += w
                * (s.rho[k] * s.rho[k] / (-c.rho_p) + c.rho * s.theta[k] * s.theta[k] / (g * c.e));
        }
        acc
    }

    pub fn record(&mut self, s: &PerturbationState) -> Result<()> {
        s.check(self.forms)?;
        let rate = 2.0 * self.forms.k2.quad_form(&s.u) / self.ops.g;
        let l = self.lhs(s);
        let led = &mut self.ledger;
        let diss = match self.last_rate {
            None => {
                led.rhs0 = l;
                0.0
            }
            Some(prev) => {
                led.dissipation[led.dissipation.len() - 1]
                    + 0.5 * (s.t - self.last_t) * (prev + rate)
            }
        };
        self.last_rate = Some(rate);
        self.last_t = s.t;
        led.times.push(s.t);
        led.lhs.push(l);
        led.dissipation.push(diss);
        if led.rhs0 > 0.0 {
            led.max_violation = led
                .max_violation
                .max((l + diss - led.rhs0).abs() / led.rhs0);
        }
        Ok(())
    }

    pub fn finish(self) -> StabilityLedger {
        self.ledger
    }
}

/// Ledger of a recorded trajectory (every time step, in order).
pub fn verify_stability_identity(
    forms: &AssembledForms,
    states: &[PerturbationState],
) -> Result<StabilityLedger> {
    let mut tr = LedgerTracker::new(forms)?;
    for s in states {
        tr.record(s)?;
    }
    Ok(tr.finish())
}
