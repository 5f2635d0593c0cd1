use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Density profile ρ̄(x₃) as given in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    /// rho0 + slope·x₃
    Linear { rho0: f64, slope: f64 },
    /// rho0·exp(rate·x₃)
    Exponential { rho0: f64, rate: f64 },
    /// base + amp·exp(−((x₃ − center)/width)²)
    Bump {
        base: f64,
        amp: f64,
        center: f64,
        width: f64,
    },
    /// Smooth step from `lower` (bottom) to `upper` (top).
    Tanh {
        lower: f64,
        upper: f64,
        center: f64,
        width: f64,
    },
    /// Σ cₖ x₃ᵏ
    Polynomial { coeffs: Vec<f64> },
    /// Isothermal atmosphere rho0·exp(−g x₃/(a e0)); the steady energy is e0 everywhere.
    Isothermal { rho0: f64, e0: f64 },
    /// Two-column CSV (x₃, ρ̄) interpolated by a natural cubic spline.
    Table { path: PathBuf },
}

/// Evaluable density. Tables are loaded eagerly.
#[derive(Debug, Clone)]
pub enum Density {
    Linear {
        rho0: f64,
        slope: f64,
    },
    Exponential {
        rho0: f64,
        rate: f64,
    },
    Bump {
        base: f64,
        amp: f64,
        center: f64,
        width: f64,
    },
    Tanh {
        lower: f64,
        upper: f64,
        center: f64,
        width: f64,
    },
    Polynomial(Vec<f64>),
    Spline(CubicSpline),
}

impl Density {
    /// Resolves a spec. `g` and `a` fix the scale height of the isothermal family.
    pub fn from_spec(spec: &DensitySpec, g: f64, a: f64) -> Result<Self> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must be finite")))
            }
        };
        Ok(match spec {
            DensitySpec::Linear { rho0, slope } => {
                finite("rho0", *rho0)?;
                finite("slope", *slope)?;
                Density::Linear {
                    rho0: *rho0,
                    slope: *slope,
                }
            }
            DensitySpec::Exponential { rho0, rate } => {
                finite("rho0", *rho0)?;
                finite("rate", *rate)?;
                Density::Exponential {
                    rho0: *rho0,
                    rate: *rate,
                }
            }
            DensitySpec::Bump {
                base,
                amp,
                center,
                width,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidInput("bump width must be positive".into()));
                }
                Density::Bump {
                    base: *base,
                    amp: *amp,
                    center: *center,
                    width: *width,
                }
            }
            DensitySpec::Tanh {
                lower,
                upper,
                center,
                width,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidInput("tanh width must be positive".into()));
                }
                Density::Tanh {
                    lower: *lower,
                    upper: *upper,
                    center: *center,
                    width: *width,
                }
            }
            DensitySpec::Polynomial { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidInput(
                        "polynomial needs finite coefficients".into(),
                    ));
                }
                Density::Polynomial(coeffs.clone())
            }
            DensitySpec::Isothermal { rho0, e0 } => {
                if !(*e0 > 0.0) {
                    return Err(Error::InvalidInput("isothermal e0 must be positive".into()));
                }
                Density::Exponential {
                    rho0: *rho0,
                    rate: -g / (a * e0),
                }
            }
            DensitySpec::Table { path } => Density::Spline(CubicSpline::from_csv(path)?),
        })
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Density::Linear { rho0, slope } => rho0 + slope * x,
            Density::Exponential { rho0, rate } => rho0 * (rate * x).exp(),
            Density::Bump {
                base,
                amp,
                center,
                width,
            } => {
                let r = (x - center) / width;
                base + amp * (-r * r).exp()
            }
            Density::Tanh {
                lower,
                upper,
                center,
                width,
            } => 0.5 * (lower + upper) + 0.5 * (upper - lower) * ((x - center) / width).tanh(),
            Density::Polynomial(c) => c.iter().rev().fold(0.0, |acc, ck| acc * x + ck),
            Density::Spline(s) => s.value(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Density::Linear { slope, .. } => *slope,
            Density::Exponential { rho0, rate } => rho0 * rate * (rate * x).exp(),
            Density::Bump {
                amp, center, width, ..
            } => {
                let r = (x - center) / width;
                -2.0 * amp * r / width * (-r * r).exp()
            }
            Density::Tanh {
                lower,
                upper,
                center,
                width,
            } => {
                let t = ((x - center) / width).tanh();
                0.5 * (upper - lower) * (1.0 - t * t) / width
            }
            Density::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, ck)| acc * x + k as f64 * ck),
            Density::Spline(s) => s.derivative(x),
        }
    }

    /// Interval on which the profile is defined (tables only).
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Density::Spline(s) => Some((s.x[0], *s.x.last().expect("nonempty table"))),
            _ => None,
        }
    }
}

/// Natural cubic spline through (xᵢ, yᵢ).
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// second derivatives at the knots
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidInput(
                "spline needs at least two (x, y) pairs".into(),
            ));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "spline abscissae must be strictly increasing".into(),
            ));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // tridiagonal system for interior second derivatives (Thomas algorithm)
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let f = lower / diag[i - 1];
                diag[i] -= f * upper[i - 1];
                rhs[i] -= f * rhs[i - 1];
            }
            for i in (0..k).rev() {
                let next = if i + 1 < k { upper[i] * m[i + 2] } else { 0.0 };
                m[i + 1] = (rhs[i] - next) / diag[i];
            }
        }
        Ok(CubicSpline { x, y, m })
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)?;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |k: usize| rec.get(k).and_then(|s| s.parse::<f64>().ok());
            match (parse(0), parse(1)) {
                (Some(x), Some(y)) => {
                    xs.push(x);
                    ys.push(y);
                }
                // tolerate a header row
                _ if line == 0 && xs.is_empty() => {}
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "{}: row {} is not two numbers",
                        path.display(),
                        line + 1
                    )))
                }
            }
        }
        Self::new(xs, ys)
    }

    fn interval(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.partition_point(|&xi| xi <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h
            + ((1.0 - 3.0 * a * a) * self.m[i] + (3.0 * b * b - 1.0) * self.m[i + 1]) * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_linear_data() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 / 9.0).collect();
        let y: Vec<f64> = x.iter().map(|t| 1.0 + t).collect();
        let s = CubicSpline::new(x, y).unwrap();
        for t in [0.0, 0.123, 0.5, 0.999, 1.0] {
            assert!((s.value(t) - (1.0 + t)).abs() < 1e-14);
            assert!((s.derivative(t) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn spline_interpolates_knots_and_is_close_to_smooth_data() {
        let x: Vec<f64> = (0..33).map(|i| i as f64 / 32.0).collect();
        let y: Vec<f64> = x.iter().map(|t| t.sin()).collect();
        let s = CubicSpline::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((s.value(*xi) - yi).abs() < 1e-15);
        }
        assert!((s.value(0.51) - 0.51f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn polynomial_derivative() {
        let d = Density::Polynomial(vec![1.0, 0.0, 1.0, -2.0, 1.0]);
        let x: f64 = 0.3;
        assert!((d.value(x) - (1.0 + x * x - 2.0 * x.powi(3) + x.powi(4))).abs() < 1e-15);
        assert!((d.derivative(x) - (2.0 * x - 6.0 * x * x + 4.0 * x.powi(3))).abs() < 1e-15);
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let cases = [
            Density::Exponential {
                rho0: 1.3,
                rate: -0.7,
            },
            Density::Bump {
                base: 1.0,
                amp: 0.4,
                center: 0.6,
                width: 0.2,
            },
            Density::Tanh {
                lower: 1.0,
                upper: 3.0,
                center: 0.5,
                width: 0.1,
            },
        ];
        let h = 1e-5;
        for d in &cases {
            for x in [0.1, 0.45, 0.8] {
                let fd = (d.value(x + h) - d.value(x - h)) / (2.0 * h);
                assert!((fd - d.derivative(x)).abs() < 1e-8, "{d:?} at {x}");
            }
        }
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = DensitySpec::Linear {
            rho0: 1.0,
            slope: 1.0,
        };
        let s = toml::to_string(&spec).unwrap();
        assert_eq!(toml::from_str::<DensitySpec>(&s).unwrap(), spec);
    }
}
