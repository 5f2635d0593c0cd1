//! Run configuration (TOML).

use std::path::{Path, PathBuf};

use rtgrowth::evolve::{CompatOptions, EscapeOptions, NonlinearOptions};
use rtgrowth::spectral::{GrowthOptions, IncompressibleOptions};
use rtgrowth::steady::{DensitySpec, PhysParams};
use rtgrowth::{Error, Result};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// seed for randomised starts
    #[serde(default)]
    pub seed: u64,
    /// worker threads; 0 uses every core
    #[serde(default)]
    pub jobs: usize,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    pub params: PhysParams,
    pub profile: ProfileConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub growth: GrowthConfig,
    #[serde(default)]
    pub linear: LinearConfig,
    #[serde(default)]
    pub nonlinear: NonlinearConfig,
    #[serde(default)]
    pub escape: EscapeOptions,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    #[serde(default = "unit_range")]
    pub z_range: (f64, f64),
    /// explicit integration constant for ∫ρ̄
    pub constant: Option<f64>,
    /// lower bound on ē used when no constant is given
    pub e_floor: Option<f64>,
    pub density: DensitySpec,
    /// rows in profile.csv
    #[serde(default = "default_dump_rows")]
    pub dump_rows: usize,
}

fn unit_range() -> (f64, f64) {
    (0.0, 1.0)
}

fn default_dump_rows() -> usize {
    201
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub dim: usize,
    pub cells: Vec<usize>,
    /// horizontal extents; the vertical one is the profile's z_range
    pub horizontal: Vec<(f64, f64)>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            dim: 2,
            cells: vec![16, 16],
            horizontal: vec![(0.0, 1.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthConfig {
    /// explicit α-curve grid; empty means `s_points` points over [0, 2𝔖]
    pub s_grid: Vec<f64>,
    pub s_points: usize,
    pub solver: GrowthOptions,
    pub incompressible: IncompressibleOptions,
    /// skip the penalised incompressible solve
    pub skip_incompressible: bool,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig {
            s_grid: Vec::new(),
            s_points: 12,
            solver: GrowthOptions::default(),
            incompressible: IncompressibleOptions::default(),
            skip_incompressible: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearConfig {
    pub dt: f64,
    /// run length in units of 1/Λ
    pub e_foldings: f64,
    pub amplitude: f64,
    pub record_every: usize,
    /// number of random solenoidal starts
    pub random_starts: usize,
    /// horizon of the random-start runs in units of 1/Λ
    pub random_e_foldings: f64,
    /// allowed relative deviation of the fitted rate from Λ
    pub rate_tolerance: f64,
    /// stable profiles: time step and horizon of the energy ledger
    pub ledger_dt: f64,
    pub ledger_t_end: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            dt: 0.01,
            e_foldings: 2.0,
            amplitude: 1e-3,
            record_every: 10,
            random_starts: 3,
            random_e_foldings: 5.0,
            rate_tolerance: 0.02,
            ledger_dt: 1e-4,
            ledger_t_end: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearConfig {
    pub delta: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub stepper: NonlinearOptions,
    pub compat: CompatOptions,
}

impl Default for NonlinearConfig {
    fn default() -> Self {
        NonlinearConfig {
            delta: 1e-3,
            t_end: 5.0,
            record_every: 10,
            stepper: NonlinearOptions::default(),
            compat: CompatOptions::default(),
        }
    }
}

impl RunConfig {
    /// Parses and validates; relative table paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let DensitySpec::Table { path } = &mut cfg.profile.density {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let (lo, hi) = self.profile.z_range;
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return bad(format!("profile.z_range [{lo}, {hi}] is empty"));
        }
        if let Some(f) = self.profile.e_floor {
            positive("profile.e_floor", f)?;
        }
        if let DensitySpec::Table { path } = &self.profile.density {
            if !path.is_file() {
                return Err(Error::FileNotFound(path.clone()));
            }
        }
        if self.profile.dump_rows < 2 {
            return bad("profile.dump_rows must be at least 2".into());
        }

        let m = &self.mesh;
        if m.dim != 2 && m.dim != 3 {
            return bad(format!("mesh.dim = {} must be 2 or 3", m.dim));
        }
        if m.cells.len() != m.dim {
            return bad(format!("mesh.cells needs {} entries", m.dim));
        }
        if m.cells.iter().any(|&n| n < 2) {
            return bad("mesh.cells entries must be at least 2".into());
        }
        if m.horizontal.len() != m.dim - 1 {
            return bad(format!("mesh.horizontal needs {} entries", m.dim - 1));
        }
        if m.horizontal
            .iter()
            .any(|(a, b)| !(a.is_finite() && b.is_finite() && b > a))
        {
            return bad("mesh.horizontal extents must be nonempty".into());
        }

        let g = &self.growth;
        positive("growth.solver.tol", g.solver.tol)?;
        positive("growth.solver.eig.tol", g.solver.eig.tol)?;
        positive("growth.solver.frak_s_rel_tol", g.solver.frak_s_rel_tol)?;
        positive(
            "growth.incompressible.rel_change",
            g.incompressible.rel_change,
        )?;
        positive(
            "growth.incompressible.eps_start",
            g.incompressible.eps_start,
        )?;
        positive("growth.incompressible.eps_min", g.incompressible.eps_min)?;
        if !(g.incompressible.eps_factor > 0.0 && g.incompressible.eps_factor < 1.0) {
            return bad("growth.incompressible.eps_factor must lie in (0, 1)".into());
        }
        if g.s_grid.is_empty() {
            if g.s_points < 2 {
                return bad("growth.s_points must be at least 2".into());
            }
        } else if g.s_grid[0] < 0.0 || g.s_grid.windows(2).any(|w| w[1] <= w[0] || w[1].is_nan()) {
            return bad("growth.s_grid must be nonnegative and strictly increasing".into());
        }

        let l = &self.linear;
        positive("linear.dt", l.dt)?;
        positive("linear.e_foldings", l.e_foldings)?;
        positive("linear.amplitude", l.amplitude)?;
        positive("linear.random_e_foldings", l.random_e_foldings)?;
        positive("linear.rate_tolerance", l.rate_tolerance)?;
        positive("linear.ledger_dt", l.ledger_dt)?;
        positive("linear.ledger_t_end", l.ledger_t_end)?;

        let n = &self.nonlinear;
        if !(n.delta > 0.0 && n.delta < 1.0) {
            return bad(format!("nonlinear.delta = {} must lie in (0, 1)", n.delta));
        }
        positive("nonlinear.t_end", n.t_end)?;
        positive("nonlinear.stepper.cfl", n.stepper.cfl)?;
        if let Some(dt) = n.stepper.dt {
            positive("nonlinear.stepper.dt", dt)?;
        }
        positive("nonlinear.compat.tol", n.compat.tol)?;

        let e = &self.escape;
        if e.deltas.len() < 2 || e.deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
            return bad("escape.deltas needs at least two values in (0, 1)".into());
        }
        if let Some(v) = e.eps_target {
            positive("escape.eps_target", v)?;
        }
        if let Some(v) = e.t_max {
            positive("escape.t_max", v)?;
        }
        positive("escape.nonlinear.cfl", e.nonlinear.cfl)?;
        positive("escape.compat.tol", e.compat.tol)?;
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} must be positive")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
[params]
g = 1.0
gamma = 1.6666666666666667
mu = 0.1
lambda = 0.1
[profile.density]
family = "linear"
rho0 = 1.0
slope = 1.0
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = RunConfig::from_toml(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(c.mesh.cells, vec![16, 16]);
        assert_eq!(c.growth.s_points, 12);
        assert_eq!(c.escape.deltas, vec![1e-5, 1e-4, 1e-3]);
    }

    #[test]
    fn unknown_keys_report_their_line() {
        let text = format!("{MINIMAL}bogus = 3\n");
        let e = RunConfig::from_toml(&text, Path::new("."))
            .unwrap_err()
            .to_string();
        assert!(e.contains("line"), "{e}");
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let text = MINIMAL.replace("schema_version = 1", "schema_version = 9");
        assert!(matches!(
            RunConfig::from_toml(&text, Path::new(".")),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn missing_table_is_file_not_found() {
        let text = MINIMAL.replace(
            "family = \"linear\"\nrho0 = 1.0\nslope = 1.0",
            "family = \"table\"\npath = \"no/such/table.csv\"",
        );
        match RunConfig::from_toml(&text, Path::new("/tmp")) {
            Err(Error::FileNotFound(p)) => assert!(p.ends_with("no/such/table.csv")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nonpositive_tolerance_is_rejected() {
        let text = format!("{MINIMAL}[linear]\ndt = 0.0\n");
        assert!(RunConfig::from_toml(&text, Path::new(".")).is_err());
    }
}
