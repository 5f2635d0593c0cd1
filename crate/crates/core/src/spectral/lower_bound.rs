use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::AssembledForms;
use crate::quadrature::GaussLegendre;
use crate::steady::SteadyProfile;

/// Divergence-free test field supported in a cube where ρ̄′ > 0, with the
/// constants of the linear lower bound α(s) ≥ c₁ − c₂s.
#[derive(Debug, Clone, Serialize)]
pub struct TestFunction {
    /// nodal interpolant on the velocity space
    pub coeffs: Vec<f64>,
    pub center: [f64; 3],
    /// half-width of the support (δ/4)
    pub radius: f64,
    /// g∫ρ̄′v₃² / ∫ρ̄|v|² of the exact field
    pub c1: f64,
    /// μ∫|∇v|² / ∫ρ̄|v|² of the exact field
    pub c2: f64,
    /// the same ratios for the interpolant, through the assembled forms
    pub c1_h: f64,
    pub c2_h: f64,
}

/// Odd cutoff f(r) = r(R² − r²)² on |r| < R, its derivative, and the even
/// antiderivative F(r) = −(R² − r²)³/6 vanishing at ±R.
#[derive(Debug, Clone, Copy)]
struct Cutoff {
    r2: f64,
}

impl Cutoff {
    fn f(&self, r: f64) -> f64 {
        let t = self.r2 - r * r;
        if t <= 0.0 {
            0.0
        } else {
            r * t * t
        }
    }
    fn df(&self, r: f64) -> f64 {
        let t = self.r2 - r * r;
        if t <= 0.0 {
            0.0
        } else {
            t * (self.r2 - 5.0 * r * r)
        }
    }
    fn big_f(&self, r: f64) -> f64 {
        let t = self.r2 - r * r;
        if t <= 0.0 {
            0.0
        } else {
            -t * t * t / 6.0
        }
    }
}

/// Exact field and gradient at x: (v, ∇v) with grad[comp][axis].
fn field(dim: usize, cut: Cutoff, center: &[f64; 3], x: &[f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut v = [0.0; 3];
    let mut g = [[0.0; 3]; 3];
    if dim == 2 {
        // stream function F(r₁)F(r₃): v = (−F(r₁)f(r₃), f(r₁)F(r₃))
        let (r1, r3) = (x[0] - center[0], x[1] - center[1]);
        let (f1, f3) = (cut.f(r1), cut.f(r3));
        let (d1, d3) = (cut.df(r1), cut.df(r3));
        let (b1, b3) = (cut.big_f(r1), cut.big_f(r3));
        v[0] = -b1 * f3;
        v[1] = f1 * b3;
        g[0] = [-f1 * f3, -b1 * d3, 0.0];
        g[1] = [d1 * b3, f1 * f3, 0.0];
    } else {
        // f(r₁)·(0, −f(r₃)F(r₂), f(r₂)F(r₃))
        let r = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
        let f = r.map(|t| cut.f(t));
        let d = r.map(|t| cut.df(t));
        let b = r.map(|t| cut.big_f(t));
        v[1] = -f[0] * f[2] * b[1];
        v[2] = f[0] * f[1] * b[2];
        g[1] = [
            -d[0] * f[2] * b[1],
            -f[0] * f[2] * f[1],
            -f[0] * d[2] * b[1],
        ];
        g[2] = [d[0] * f[1] * b[2], f[0] * d[1] * b[2], f[0] * f[1] * f[2]];
    }
    (v, g)
}

/// Longest run of sample heights on which ρ̄′ > 0.
fn positive_interval(profile: &SteadyProfile) -> Option<(f64, f64)> {
    let zs = profile.samples(4097);
    let mut best: Option<(f64, f64)> = None;
    let mut run: Option<(f64, f64)> = None;
    for &z in &zs {
        if profile.rho_prime(z) > 0.0 {
            run = Some(run.map_or((z, z), |(lo, _)| (lo, z)));
        } else {
            run = None;
        }
        if let Some(r) = run {
            if best.is_none_or(|b| r.1 - r.0 > b.1 - b.0) {
                best = Some(r);
            }
        }
    }
    best.filter(|(lo, hi)| hi > lo)
}

pub fn lower_bound_test_function(forms: &AssembledForms) -> Result<TestFunction> {
    let profile = &forms.profile;
    let mesh = forms.space.mesh();
    let dim = mesh.dim();
    let (zlo, zhi) = positive_interval(profile).ok_or(Error::NoUnstableRegion)?;
    let mut center = [0.0; 3];
    let mut radius = f64::INFINITY;
    for axis in 0..dim - 1 {
        let (lo, hi) = mesh.extents()[axis];
        center[axis] = 0.5 * (lo + hi);
        radius = radius.min(0.5 * (hi - lo));
    }
    center[dim - 1] = 0.5 * (zlo + zhi);
    radius = radius.min(0.5 * (zhi - zlo));
    let cut = Cutoff {
        r2: radius * radius,
    };

    // high-order tensor quadrature over the support cube
    let rule = GaussLegendre::new(6);
    let sub = 8;
    let h = 2.0 * radius / sub as f64;
    let nodes_1d: Vec<(f64, f64)> = (0..sub)
        .flat_map(|k| {
            let lo = -radius + k as f64 * h;
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(move |(p, w)| (lo + 0.5 * h * (p + 1.0), 0.5 * h * w))
                .collect::<Vec<_>>()
        })
        .collect();
    let n1 = nodes_1d.len();
    let total = n1.pow(dim as u32);
    let params = forms.params();
    let (mut j, mut buoy, mut grad2) = (0.0, 0.0, 0.0);
    for idx in 0..total {
        let mut x = center;
        let mut w = 1.0;
        let mut r = idx;
        for xa in x.iter_mut().take(dim) {
            let (off, wt) = nodes_1d[r % n1];
            r /= n1;
            *xa += off;
            w *= wt;
        }
        let (v, g) = field(dim, cut, &center, &x);
        let z = x[dim - 1];
        let rho = profile.rho(z);
        let v2: f64 = v[..dim].iter().map(|c| c * c).sum();
        j += w * rho * v2;
        buoy += w * params.g * profile.rho_prime(z) * v[dim - 1] * v[dim - 1];
        grad2 += w * g[..dim]
            .iter()
            .map(|row| row[..dim].iter().map(|t| t * t).sum::<f64>())
            .sum::<f64>();
    }
    let c1 = buoy / j;
    let c2 = params.mu * grad2 / j;

    let coeffs = forms
        .space
        .interpolate(|x, comp| field(dim, cut, &center, x).0[comp]);
    let jh = forms.m.quad_form(&coeffs);
    let c1_h = forms.k1.quad_form(&coeffs) / jh;
    let c2_h = forms.k2.quad_form(&coeffs) / jh;
    Ok(TestFunction {
        coeffs,
        center,
        radius,
        c1,
        c2,
        c1_h,
        c2_h,
    })
}

/// Pointwise divergence of the exact field; zero up to rounding.
pub fn test_field_divergence(dim: usize, center: &[f64; 3], radius: f64, x: &[f64; 3]) -> f64 {
    let (_, g) = field(
        dim,
        Cutoff {
            r2: radius * radius,
        },
        center,
        x,
    );
    (0..dim).map(|c| g[c][c]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_is_odd_with_compact_antiderivative() {
        let c = Cutoff { r2: 0.25 * 0.25 };
        for r in [0.01, 0.1, 0.2, 0.3] {
            assert_eq!(c.f(-r), -c.f(r));
            assert_eq!(c.big_f(-r), c.big_f(r));
        }
        assert_eq!(c.big_f(0.25), 0.0);
        let h = 1e-6;
        for r in [-0.2, 0.05, 0.17] {
            let fd = (c.big_f(r + h) - c.big_f(r - h)) / (2.0 * h);
            assert!((fd - c.f(r)).abs() < 1e-12);
            let fd = (c.f(r + h) - c.f(r - h)) / (2.0 * h);
            assert!((fd - c.df(r)).abs() < 1e-10);
        }
    }

    #[test]
    fn field_is_divergence_free() {
        for dim in [2, 3] {
            let center = [0.5, 0.5, 0.5];
            for k in 0..50 {
                let t = k as f64 / 50.0;
                let x = [0.3 + 0.4 * t, 0.7 - 0.3 * t, 0.2 + 0.6 * t * t];
                assert!(test_field_divergence(dim, &center, 0.4, &x).abs() < 1e-14);
            }
        }
    }
}
