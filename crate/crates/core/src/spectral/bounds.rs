use std::f64::consts::PI;

use crate::error::Result;
use crate::forms::AssembledForms;
use crate::linalg::{largest_shift_invert, EigOptions};
use crate::steady::SteadyProfile;

/// g[‖ρ̄′/ρ̄‖_∞ + g(1+a)⁻¹‖ρ̄/p̄‖_∞], an upper bound for α(s) at every s ≥ 0.
pub fn upper_bound(profile: &SteadyProfile) -> f64 {
    let p = profile.params();
    let mut lr: f64 = 0.0;
    let mut rp: f64 = 0.0;
    for z in profile.samples(4097) {
        let c = profile.eval(z);
        lr = lr.max((c.rho_p / c.rho).abs());
        rp = rp.max((c.rho / c.p).abs());
    }
    p.g * (lr + p.g / (1.0 + p.a) * rp)
}

/// Same bound with the sup taken over the quadrature heights actually used by the forms.
pub fn upper_bound_discrete(forms: &AssembledForms) -> f64 {
    let p = forms.params();
    let mesh = forms.space.mesh();
    let nz = mesh.cells()[mesh.dim() - 1];
    let mut lr: f64 = 0.0;
    let mut rp: f64 = 0.0;
    for iz in 0..nz {
        for qz in 0..crate::grid::QUAD_POINTS_1D {
            let c = forms.coefs.at(iz, qz);
            lr = lr.max((c.rho_p / c.rho).abs());
            rp = rp.max((c.rho / c.p).abs());
        }
    }
    p.g * (lr + p.g / (1.0 + p.a) * rp)
}

/// Poincaré constant of the box: ‖v‖ ≤ C_P ‖∇v‖ for v ∈ H¹₀.
pub fn poincare_constant(extents: &[(f64, f64)]) -> f64 {
    let s: f64 = extents.iter().map(|(lo, hi)| 1.0 / (hi - lo).powi(2)).sum();
    1.0 / (PI * s.sqrt())
}

/// Discrete c₃: the largest value of g∫(ρ̄′v₃² + 2ρ̄v₃ div v) / ∫|∇v|².
///
/// α(s) < 0 for every s > c₃/μ.
pub fn poincare_type_constant(forms: &AssembledForms, opts: &EigOptions) -> Result<f64> {
    let profile = &forms.profile;
    let p = forms.params();
    let mesh = forms.space.mesh();
    let cp = poincare_constant(mesh.extents());
    let mut rho_p_max: f64 = 0.0;
    let mut rho_max: f64 = 0.0;
    for z in profile.samples(4097) {
        rho_p_max = rho_p_max.max(profile.rho_prime(z).abs());
        rho_max = rho_max.max(profile.rho(z));
    }
    let dim = mesh.dim() as f64;
    let sigma = 1.01 * p.g * (rho_p_max * cp * cp + 2.0 * rho_max * cp * dim.sqrt()) + 1e-12;
    let tie = |v: &[f64]| forms.vertical_l2_sq(v);
    let pair = largest_shift_invert(
        &forms.k1_no_pressure,
        &forms.laplace,
        sigma,
        None,
        opts,
        Some(&tie),
    )?;
    Ok(pair.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::{Density, EnergyConstant, PhysParams};

    #[test]
    fn reference_upper_bound_is_3_4() {
        let params = PhysParams::new(1.0, 5.0 / 3.0, 0.1, 0.1).unwrap();
        let prof = SteadyProfile::build(
            Density::Linear {
                rho0: 1.0,
                slope: 1.0,
            },
            (0.0, 1.0),
            params,
            EnergyConstant::Explicit(-2.0),
        )
        .unwrap();
        assert!((upper_bound(&prof) - 3.4).abs() < 1e-12);
    }

    #[test]
    fn unit_square_poincare() {
        let c = poincare_constant(&[(0.0, 1.0), (0.0, 1.0)]);
        assert!((c - 1.0 / (PI * 2f64.sqrt())).abs() < 1e-15);
    }
}
