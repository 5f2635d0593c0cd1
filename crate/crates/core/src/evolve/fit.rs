use serde::Serialize;

use super::Diagnostics;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// standard error of the slope (0 for exact or two-point fits)
    pub std_err: f64,
}

/// Ordinary least squares y ≈ slope·x + intercept.
pub fn fit_line(x: &[f64], y: &[f64]) -> SlopeFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let std_err = if x.len() > 2 {
        let sse: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    SlopeFit {
        slope,
        intercept,
        std_err,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    pub lambda: f64,
    pub intercept: f64,
    pub std_err: f64,
    /// normal-approximation 95% interval for the rate
    pub ci95: (f64, f64),
    pub samples: usize,
    /// amplitude ratio last/first
    pub gain: f64,
    pub t_start: f64,
    pub t_end: f64,
}

/// Slope of ln(amplitude) against t.
pub fn fit_exponential(t: &[f64], amp: &[f64]) -> Result<GrowthFit> {
    if t.len() != amp.len() {
        return Err(Error::DimensionMismatch {
            expected: t.len(),
            got: amp.len(),
        });
    }
    if t.len() < 20 {
        return Err(Error::InvalidInput(format!(
            "{} samples; at least 20 are needed",
            t.len()
        )));
    }
    if amp.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        return Err(Error::InvalidInput(
            "amplitudes must be positive and finite".into(),
        ));
    }
    let gain = amp[amp.len() - 1] / amp[0];
    if !(gain >= std::f64::consts::E) {
        return Err(Error::InsufficientGrowth { gain });
    }
    let y: Vec<f64> = amp.iter().map(|a| a.ln()).collect();
    let f = fit_line(t, &y);
    Ok(GrowthFit {
        lambda: f.slope,
        intercept: f.intercept,
        std_err: f.std_err,
        ci95: (f.slope - 1.96 * f.std_err, f.slope + 1.96 * f.std_err),
        samples: t.len(),
        gain,
        t_start: t[0],
        t_end: t[t.len() - 1],
    })
}

/// Fits ‖u₃‖ over an optional time window of a recorded trajectory.
pub fn measure_growth_rate(traj: &[Diagnostics], window: Option<(f64, f64)>) -> Result<GrowthFit> {
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let pts: Vec<&Diagnostics> = traj.iter().filter(|d| d.t >= lo && d.t <= hi).collect();
    let t: Vec<f64> = pts.iter().map(|d| d.t).collect();
    let a: Vec<f64> = pts.iter().map(|d| d.u3_l2).collect();
    fit_exponential(&t, &a)
}

/// Least-squares slope of escape time against ln(1/δ).
pub fn fit_escape_slope(deltas: &[f64], times: &[f64]) -> Result<SlopeFit> {
    if deltas.len() != times.len() || deltas.len() < 2 {
        return Err(Error::InvalidInput("need at least two (δ, T) pairs".into()));
    }
    let x: Vec<f64> = deltas.iter().map(|d| (1.0 / d).ln()).collect();
    Ok(fit_line(&x, times))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_is_recovered() {
        let t: Vec<f64> = (0..40).map(|k| 0.1 * k as f64).collect();
        let a: Vec<f64> = t.iter().map(|t| 3e-4 * (0.7 * t).exp()).collect();
        let f = fit_exponential(&t, &a).unwrap();
        assert!((f.lambda - 0.7).abs() < 1e-12);
        assert!(f.std_err < 1e-12);
    }

    #[test]
    fn flat_signal_is_rejected() {
        let t: Vec<f64> = (0..30).map(|k| k as f64).collect();
        let a = vec![1.0; 30];
        assert!(matches!(
            fit_exponential(&t, &a),
            Err(Error::InsufficientGrowth { .. })
        ));
        assert!(fit_exponential(&t[..10], &a[..10]).is_err());
    }

    #[test]
    fn escape_slope_of_pure_exponential() {
        let (lam, eps) = (0.4, 1e-2);
        let deltas = [1e-5, 1e-4, 1e-3];
        let times: Vec<f64> = deltas.iter().map(|d: &f64| (eps / d).ln() / lam).collect();
        let f = fit_escape_slope(&deltas, &times).unwrap();
        assert!((f.slope - 1.0 / lam).abs() < 1e-12);
    }
}
