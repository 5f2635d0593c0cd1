//! Hydrostatic steady states (ρ̄, 0, ē) with p̄ = aρ̄ē and dp̄/dx₃ = −gρ̄.

mod density;

pub use density::{CubicSpline, Density, DensitySpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Physical constants. `a` and `mu0` are derived and kept consistent by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct PhysParams {
    pub g: f64,
    pub gamma: f64,
    pub a: f64,
    pub mu: f64,
    pub lambda_v: f64,
    pub mu0: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    g: f64,
    gamma: f64,
    mu: f64,
    #[serde(alias = "lambda")]
    lambda_v: f64,
}

impl TryFrom<RawParams> for PhysParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        PhysParams::new(r.g, r.gamma, r.mu, r.lambda_v)
    }
}

impl From<PhysParams> for RawParams {
    fn from(p: PhysParams) -> Self {
        RawParams {
            g: p.g,
            gamma: p.gamma,
            mu: p.mu,
            lambda_v: p.lambda_v,
        }
    }
}

impl PhysParams {
    pub fn new(g: f64, gamma: f64, mu: f64, lambda_v: f64) -> Result<Self> {
        let all_finite = [g, gamma, mu, lambda_v].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::BadParams("parameters must be finite".into()));
        }
        if !(g > 0.0) {
            return Err(Error::BadParams(format!("g = {g} must be positive")));
        }
        if !(gamma > 1.0) {
            return Err(Error::BadParams(format!("gamma = {gamma} must exceed 1")));
        }
        if !(mu > 0.0) {
            return Err(Error::BadParams(format!("mu = {mu} must be positive")));
        }
        if 3.0 * lambda_v + 2.0 * mu < 0.0 {
            return Err(Error::BadParams(format!(
                "3 lambda + 2 mu = {} < 0",
                3.0 * lambda_v + 2.0 * mu
            )));
        }
        Ok(PhysParams {
            g,
            gamma,
            a: gamma - 1.0,
            mu,
            lambda_v,
            mu0: mu + lambda_v,
        })
    }
}

/// How the additive constant of ∫ρ̄ dx₃ is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyConstant {
    /// Use this constant as is.
    Explicit(f64),
    /// Largest constant with min ē ≥ floor.
    Floor(f64),
}

pub const DEFAULT_E_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    UnstableType,
    StableType,
    /// max ρ̄′ = 0: neither of the above.
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileClass {
    pub kind: ProfileKind,
    pub monotone_nonneg: bool,
}

const FINE_CELLS: usize = 512;
const SAMPLES: usize = 2048;

/// Steady profile on [z_lo, z_hi]. Immutable once built.
#[derive(Debug, Clone)]
pub struct SteadyProfile {
    params: PhysParams,
    density: Density,
    z_lo: f64,
    z_hi: f64,
    constant: f64,
    // ∫_{z_lo}^{node k} ρ̄ on a fine uniform grid
    cumulative: Vec<f64>,
    rule: GaussLegendre,
    hydrostatic_residual: f64,
}

impl SteadyProfile {
    pub fn build(
        density: Density,
        z_range: (f64, f64),
        params: PhysParams,
        constant: EnergyConstant,
    ) -> Result<Self> {
        let (z_lo, z_hi) = z_range;
        if !(z_hi > z_lo) || !z_lo.is_finite() || !z_hi.is_finite() {
            return Err(Error::BadExtents {
                axis: 0,
                lo: z_lo,
                hi: z_hi,
            });
        }
        if let Some((lo, hi)) = density.support() {
            let slack = 1e-12 * (z_hi - z_lo);
            if lo > z_lo + slack || hi < z_hi - slack {
                return Err(Error::ProfileDomainMismatch {
                    lo,
                    hi,
                    mesh_lo: z_lo,
                    mesh_hi: z_hi,
                });
            }
        }
        let zs = sample_points(z_lo, z_hi, SAMPLES);
        let (mut min, mut at) = (f64::INFINITY, z_lo);
        for &z in &zs {
            let r = density.value(z);
            if !(r > min) {
                min = r;
                at = z;
            }
        }
        if !(min > 0.0) {
            return Err(Error::NonPositiveDensity { min, at });
        }

        let rule = GaussLegendre::new(5);
        let hf = (z_hi - z_lo) / FINE_CELLS as f64;
        let mut cumulative = Vec::with_capacity(FINE_CELLS + 1);
        cumulative.push(0.0);
        for k in 0..FINE_CELLS {
            let lo = z_lo + k as f64 * hf;
            let piece = rule.integrate(lo, lo + hf, |z| density.value(z));
            cumulative.push(cumulative[k] + piece);
        }

        let mut profile = SteadyProfile {
            params,
            density,
            z_lo,
            z_hi,
            constant: 0.0,
            cumulative,
            rule,
            hydrostatic_residual: 0.0,
        };
        profile.constant = match constant {
            EnergyConstant::Explicit(c) => c,
            EnergyConstant::Floor(floor) => {
                if !(floor > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "e_floor = {floor} must be positive"
                    )));
                }
                profile.floor_constant(floor, &zs)?
            }
        };
        if !profile.constant.is_finite() {
            return Err(Error::NoValidConstant("constant is not finite".into()));
        }
        let (e_min, _) = profile.energy_range();
        if !(e_min > 0.0) {
            return Err(Error::NoValidConstant(format!(
                "constant {} gives min e = {e_min:e}",
                profile.constant
            )));
        }
        profile.hydrostatic_residual = profile.measure_hydrostatic_residual();
        Ok(profile)
    }

    /// Builds from a config spec: an explicit constant wins, then the isothermal
    /// family's own constant, then the energy floor.
    pub fn from_spec(
        spec: &DensitySpec,
        z_range: (f64, f64),
        params: PhysParams,
        constant: Option<f64>,
        e_floor: Option<f64>,
    ) -> Result<Self> {
        let density = Density::from_spec(spec, params.g, params.a)?;
        let choice = match (constant, spec) {
            (Some(c), _) => EnergyConstant::Explicit(c),
            (None, DensitySpec::Isothermal { e0, .. }) => {
                // ē ≡ e0 requires ∫_{z_lo} ρ̄ + C = −a e0 ρ̄/g, evaluated at z_lo
                EnergyConstant::Explicit(-params.a * e0 * density.value(z_range.0) / params.g)
            }
            (None, _) => EnergyConstant::Floor(e_floor.unwrap_or(DEFAULT_E_FLOOR)),
        };
        Self::build(density, z_range, params, choice)
    }

    // C = min_z [−I(z) − a·floor·ρ̄(z)/g]
    fn floor_constant(&self, floor: f64, zs: &[f64]) -> Result<f64> {
        let (g, a) = (self.params.g, self.params.a);
        let f = |z: f64| -self.integral(z) - a * floor * self.density.value(z) / g;
        let mut k_best = 0;
        let mut best = f64::INFINITY;
        for (k, &z) in zs.iter().enumerate() {
            let v = f(z);
            if v < best {
                best = v;
                k_best = k;
            }
        }
        if !best.is_finite() {
            return Err(Error::NoValidConstant(
                "floor objective is not finite".into(),
            ));
        }
        // golden-section refinement between the neighbouring samples
        let mut lo = zs[k_best.saturating_sub(1)];
        let mut hi = zs[(k_best + 1).min(zs.len() - 1)];
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..80 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = f(x2);
            }
        }
        Ok(best.min(f1).min(f2))
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn z_range(&self) -> (f64, f64) {
        (self.z_lo, self.z_hi)
    }

    pub fn integration_constant(&self) -> f64 {
        self.constant
    }

    /// max |dp̄/dx₃ + gρ̄| measured by finite differences of p̄ on sample points.
    pub fn hydrostatic_residual(&self) -> f64 {
        self.hydrostatic_residual
    }

    /// ∫_{z_lo}^{z} ρ̄.
    pub fn integral(&self, z: f64) -> f64 {
        let hf = (self.z_hi - self.z_lo) / FINE_CELLS as f64;
        let k = (((z - self.z_lo) / hf).floor().max(0.0) as usize).min(FINE_CELLS - 1);
        let node = self.z_lo + k as f64 * hf;
        self.cumulative[k] + self.rule.integrate(node, z, |t| self.density.value(t))
    }

    pub fn rho(&self, z: f64) -> f64 {
        self.density.value(z)
    }

    pub fn rho_prime(&self, z: f64) -> f64 {
        self.density.derivative(z)
    }

    pub fn p(&self, z: f64) -> f64 {
        -self.params.g * (self.integral(z) + self.constant)
    }

    pub fn e(&self, z: f64) -> f64 {
        self.p(z) / (self.params.a * self.rho(z))
    }

    /// ē′ = −g/a − ēρ̄′/ρ̄, from p̄′ = −gρ̄.
    pub fn e_prime(&self, z: f64) -> f64 {
        -self.params.g / self.params.a - self.e(z) * self.rho_prime(z) / self.rho(z)
    }

    /// All steady quantities at one height.
    pub fn eval(&self, z: f64) -> Coefficients {
        let rho = self.rho(z);
        let rho_p = self.rho_prime(z);
        let p = self.p(z);
        let e = p / (self.params.a * rho);
        let e_p = -self.params.g / self.params.a - e * rho_p / rho;
        Coefficients {
            rho,
            rho_p,
            p,
            e,
            e_p,
        }
    }

    pub fn samples(&self, n: usize) -> Vec<f64> {
        sample_points(self.z_lo, self.z_hi, n)
    }

    pub fn energy_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for z in self.samples(SAMPLES) {
            let e = self.e(z);
            lo = lo.min(e);
            hi = hi.max(e);
        }
        (lo, hi)
    }

    pub fn max_pressure(&self) -> f64 {
        self.samples(SAMPLES)
            .into_iter()
            .map(|z| self.p(z).abs())
            .fold(0.0, f64::max)
    }

    fn measure_hydrostatic_residual(&self) -> f64 {
        let h = 1e-3 * (self.z_hi - self.z_lo);
        let g = self.params.g;
        let mut worst: f64 = 0.0;
        for z in self.samples(257) {
            // fourth-order central difference of p̄ = aρ̄ē
            let p = |t: f64| self.params.a * self.rho(t) * self.e(t);
            let dp =
                (p(z - 2.0 * h) - 8.0 * p(z - h) + 8.0 * p(z + h) - p(z + 2.0 * h)) / (12.0 * h);
            worst = worst.max((dp + g * self.rho(z)).abs());
        }
        worst
    }

    /// Classification by the sign of ρ̄′ over dense samples.
    pub fn classify(&self) -> ProfileClass {
        let mut max_d = f64::NEG_INFINITY;
        let mut min_d = f64::INFINITY;
        for z in self.samples(SAMPLES) {
            let d = self.rho_prime(z);
            max_d = max_d.max(d);
            min_d = min_d.min(d);
        }
        let kind = if max_d > 0.0 {
            ProfileKind::UnstableType
        } else if max_d < 0.0 {
            ProfileKind::StableType
        } else {
            ProfileKind::Neutral
        };
        ProfileClass {
            kind,
            monotone_nonneg: min_d >= 0.0,
        }
    }

    /// (max ρ̄′, min ρ̄′) over dense samples.
    pub fn rho_prime_range(&self) -> (f64, f64) {
        self.samples(SAMPLES)
            .into_iter()
            .map(|z| self.rho_prime(z))
            .fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), d| {
                (hi.max(d), lo.min(d))
            })
    }

    /// sup |ē′| over dense samples; zero for isothermal profiles.
    pub fn max_abs_e_prime(&self) -> f64 {
        self.samples(SAMPLES)
            .into_iter()
            .map(|z| self.e_prime(z).abs())
            .fold(0.0, f64::max)
    }

    /// Rows (x₃, ρ̄, ē, p̄, ρ̄′) for a profile dump.
    pub fn table(&self, n: usize) -> Vec<Vec<f64>> {
        self.samples(n)
            .into_iter()
            .map(|z| {
                let c = self.eval(z);
                vec![z, c.rho, c.e, c.p, c.rho_p]
            })
            .collect()
    }
}

/// Steady coefficients at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub rho: f64,
    pub rho_p: f64,
    pub p: f64,
    pub e: f64,
    pub e_p: f64,
}

fn sample_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Convenience entry point: floor-based constant on [z_lo, z_hi].
pub fn build_steady_state(
    density: Density,
    z_range: (f64, f64),
    params: PhysParams,
    e_floor: f64,
) -> Result<SteadyProfile> {
    SteadyProfile::build(density, z_range, params, EnergyConstant::Floor(e_floor))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn reference() -> SteadyProfile {
        let params = PhysParams::new(1.0, 5.0 / 3.0, 0.1, 0.1).unwrap();
        SteadyProfile::build(
            Density::Linear {
                rho0: 1.0,
                slope: 1.0,
            },
            (0.0, 1.0),
            params,
            EnergyConstant::Explicit(-2.0),
        )
        .unwrap()
    }

    #[test]
    fn params_derive_a_and_mu0() {
        let p = PhysParams::new(1.0, 5.0 / 3.0, 0.1, 0.1).unwrap();
        assert_eq!(p.a, 5.0 / 3.0 - 1.0);
        assert_eq!(p.mu0, 0.1 + 0.1);
        assert!(PhysParams::new(0.0, 1.4, 1.0, 0.0).is_err());
        assert!(PhysParams::new(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(PhysParams::new(1.0, 1.4, 0.0, 0.0).is_err());
        assert!(PhysParams::new(1.0, 1.4, 0.3, -0.21).is_err());
        assert!(PhysParams::new(1.0, 1.4, 0.3, -0.19).is_ok());
    }

    #[test]
    fn params_serde_validates() {
        let p: PhysParams = toml::from_str("g = 1.0\ngamma = 2.0\nmu = 0.5\nlambda = 0.0").unwrap();
        assert_eq!(p.a, 1.0);
        assert!(
            toml::from_str::<PhysParams>("g = -1.0\ngamma = 2.0\nmu = 0.5\nlambda = 0.0").is_err()
        );
    }

    #[test]
    fn floor_constant_is_largest_admissible() {
        let params = PhysParams::new(1.0, 5.0 / 3.0, 0.1, 0.1).unwrap();
        let prof = build_steady_state(
            Density::Linear {
                rho0: 1.0,
                slope: 1.0,
            },
            (0.0, 1.0),
            params,
            0.375,
        )
        .unwrap();
        assert!((prof.integration_constant() + 2.0).abs() < 1e-13);
        let (e_min, _) = prof.energy_range();
        assert!((e_min - 0.375).abs() < 1e-12);
    }

    #[test]
    fn reference_pressure_and_energy() {
        let prof = reference();
        for z in [0.0, 0.3, 0.77, 1.0] {
            let p = 2.0 - z - z * z / 2.0;
            assert!((prof.p(z) - p).abs() < 1e-14);
            assert!((prof.e(z) - p / ((2.0 / 3.0) * (1.0 + z))).abs() < 1e-14);
        }
        assert!(prof.hydrostatic_residual() < 1e-10);
    }

    #[test]
    fn classification() {
        let params = PhysParams::new(1.0, 2.0, 0.1, 0.0).unwrap();
        let build = |d| {
            build_steady_state(d, (0.0, 1.0), params, 0.1)
                .unwrap()
                .classify()
        };
        let c = build(Density::Linear {
            rho0: 1.0,
            slope: 1.0,
        });
        assert_eq!(c.kind, ProfileKind::UnstableType);
        assert!(c.monotone_nonneg);
        let c = build(Density::Linear {
            rho0: 2.0,
            slope: -1.0,
        });
        assert_eq!(c.kind, ProfileKind::StableType);
        assert!(!c.monotone_nonneg);
        let c = build(Density::Polynomial(vec![1.0, 0.0, 1.0, -2.0, 1.0]));
        assert_eq!(c.kind, ProfileKind::UnstableType);
        assert!(!c.monotone_nonneg);
    }

    #[test]
    fn isothermal_energy_is_constant() {
        let params = PhysParams::new(1.0, 1.4, 0.1, 0.0).unwrap();
        let spec = DensitySpec::Isothermal { rho0: 2.0, e0: 5.0 };
        let prof = SteadyProfile::from_spec(&spec, (0.0, 1.0), params, None, None).unwrap();
        for z in [0.0, 0.5, 1.0] {
            assert!((prof.e(z) - 5.0).abs() < 1e-12);
        }
        assert!(prof.max_abs_e_prime() < 1e-11);
        assert_eq!(prof.classify().kind, ProfileKind::StableType);
    }

    #[test]
    fn rejects_nonpositive_density() {
        let params = PhysParams::new(1.0, 2.0, 0.1, 0.0).unwrap();
        let r = build_steady_state(
            Density::Linear {
                rho0: 0.5,
                slope: -1.0,
            },
            (0.0, 1.0),
            params,
            0.1,
        );
        assert!(matches!(r, Err(Error::NonPositiveDensity { .. })));
    }
}
