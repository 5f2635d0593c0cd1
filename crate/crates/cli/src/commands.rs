use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rtgrowth::evolve::{
    appendix_bound, build_compatible_data, diagnostics, escape_time_experiment,
    measure_growth_rate, random_solenoidal, run_linear, AppendixReport, CompatibleData,
    Diagnostics, EscapeTimeReport, GrowthFit, LedgerTracker, LinearStepper, ModeSeed,
    NonlinearStepper, PerturbationState,
};
use rtgrowth::forms::{AssembledForms, LameSolver};
use rtgrowth::grid::{BoxMesh, FeSpace};
use rtgrowth::io::{write_csv, write_json, write_nodal_csv, write_vtk};
use rtgrowth::spectral::{
    find_growth_rate, incompressible_growth_rate, lower_bound_test_function, reconstruct_mode,
    sample_alpha_curve, upper_bound, AlphaCurve, AlphaSolver, GrowingMode, GrowthRateResult,
    PenaltyStep,
};
use rtgrowth::steady::{ProfileKind, SteadyProfile};
use rtgrowth::{Error, Result};
use serde::Serialize;

use crate::config::{RunConfig, SCHEMA_VERSION};

/// Relative tolerance on the fitted escape slope.
pub const SLOPE_TOLERANCE: f64 = 0.1;

pub fn build_profile(cfg: &RunConfig) -> Result<Arc<SteadyProfile>> {
    let p = &cfg.profile;
    Ok(Arc::new(SteadyProfile::from_spec(
        &p.density, p.z_range, cfg.params, p.constant, p.e_floor,
    )?))
}

pub fn build_mesh(cfg: &RunConfig) -> Result<Arc<BoxMesh>> {
    let mut ext = cfg.mesh.horizontal.clone();
    ext.push(cfg.profile.z_range);
    Ok(Arc::new(BoxMesh::new(cfg.mesh.dim, &ext, &cfg.mesh.cells)?))
}

pub fn build_forms(cfg: &RunConfig, profile: Arc<SteadyProfile>) -> Result<Arc<AssembledForms>> {
    let space = Arc::new(FeSpace::velocity(build_mesh(cfg)?));
    Ok(Arc::new(AssembledForms::assemble(space, profile)?))
}

fn prepare_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyReport {
    pub schema_version: u32,
    pub classification: ProfileKind,
    pub monotone_nonneg: bool,
    pub hydrostatic_residual: f64,
    /// residual divided by max p̄
    pub hydrostatic_relative: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub rho_prime_min: f64,
    pub rho_prime_max: f64,
    pub integration_constant: f64,
    pub max_pressure: f64,
}

pub fn steady_report(profile: &SteadyProfile) -> SteadyReport {
    let class = profile.classify();
    let (e_min, e_max) = profile.energy_range();
    let (rho_prime_max, rho_prime_min) = profile.rho_prime_range();
    let max_pressure = profile.max_pressure();
    SteadyReport {
        schema_version: SCHEMA_VERSION,
        classification: class.kind,
        monotone_nonneg: class.monotone_nonneg,
        hydrostatic_residual: profile.hydrostatic_residual(),
        hydrostatic_relative: profile.hydrostatic_residual() / max_pressure,
        e_min,
        e_max,
        rho_prime_min,
        rho_prime_max,
        integration_constant: profile.integration_constant(),
        max_pressure,
    }
}

/// profile.csv and steady_report.json.
pub fn cmd_steady(cfg: &RunConfig, out: &Path) -> Result<SteadyReport> {
    cfg.validate()?;
    let profile = build_profile(cfg)?;
    prepare_out(out)?;
    write_csv(
        &out.join("profile.csv"),
        &["x3", "rho", "e", "p", "rho_prime"],
        profile.table(cfg.profile.dump_rows),
    )?;
    let rep = steady_report(&profile);
    write_json(&out.join("steady_report.json"), &rep)?;
    Ok(rep)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LowerBound {
    /// constants of the interpolated test field, valid for the discrete α
    pub c1: f64,
    pub c2: f64,
    pub c1_exact: f64,
    pub c2_exact: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveSummary {
    pub points: usize,
    pub max_increase: f64,
    pub lower_margin: Option<f64>,
    pub upper_margin: f64,
    pub lipschitz_estimate: f64,
    pub lipschitz_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub schema_version: u32,
    pub status: &'static str,
    pub dofs: usize,
    pub alpha0: f64,
    pub lambda: Option<f64>,
    /// |α(Λ) − Λ²|
    pub residual: Option<f64>,
    pub eig_residual: Option<f64>,
    pub frak_s: Option<(f64, f64)>,
    pub c3: Option<f64>,
    pub bound_lower: Option<LowerBound>,
    pub bound_upper: f64,
    pub curve: Option<CurveSummary>,
    pub lambda_inc: Option<f64>,
    pub lambda_ge_lambda_inc: Option<bool>,
    pub penalty_schedule: Vec<PenaltyStep>,
    pub mode: Option<GrowingMode>,
}

impl GrowthReport {
    fn not_unstable(dofs: usize, alpha0: f64, bound_upper: f64) -> Self {
        GrowthReport {
            schema_version: SCHEMA_VERSION,
            status: "not_unstable",
            dofs,
            alpha0,
            lambda: None,
            residual: None,
            eig_residual: None,
            frak_s: None,
            c3: None,
            bound_lower: None,
            bound_upper,
            curve: None,
            lambda_inc: None,
            lambda_ge_lambda_inc: None,
            penalty_schedule: Vec::new(),
            mode: None,
        }
    }
}

/// Everything the growth command computes, for reuse by `verify`.
#[derive(Debug)]
pub struct GrowthOutcome {
    pub forms: Arc<AssembledForms>,
    pub result: GrowthRateResult,
    pub curve: AlphaCurve,
    pub mode: GrowingMode,
    pub report: GrowthReport,
}

fn s_grid(cfg: &RunConfig, result: &GrowthRateResult) -> Vec<f64> {
    if !cfg.growth.s_grid.is_empty() {
        return cfg.growth.s_grid.clone();
    }
    let top = 2.0 * result.frak_s.map(|b| b.1).unwrap_or(2.0 * result.lambda);
    let n = cfg.growth.s_points;
    (0..n).map(|k| top * k as f64 / (n - 1) as f64).collect()
}

fn mode_fields(forms: &AssembledForms, mode: Option<&GrowingMode>) -> (Vec<String>, Vec<Vec<f64>>) {
    let mesh = forms.space.mesh();
    let dim = mesh.dim();
    let mut names: Vec<String> = (0..dim)
        .map(|c| {
            if c == dim - 1 {
                "v3".into()
            } else {
                format!("v{}", c + 1)
            }
        })
        .collect();
    names.push("rho".into());
    names.push("theta".into());
    let Some(m) = mode else {
        return (names, Vec::new());
    };
    let mut fields: Vec<Vec<f64>> = (0..dim)
        .map(|c| forms.space.nodal_component(&m.v, c))
        .collect();
    fields.push(m.rho.clone());
    fields.push(m.theta.clone());
    (names, fields)
}

fn write_mode(out: &Path, forms: &AssembledForms, mode: Option<&GrowingMode>) -> Result<()> {
    let (names, fields) = mode_fields(forms, mode);
    let mesh = forms.space.mesh();
    if fields.is_empty() {
        let mut header = vec!["x1".to_string()];
        if mesh.dim() == 3 {
            header.push("x2".into());
        }
        header.push("x3".into());
        header.extend(names);
        let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        return write_csv(&out.join("mode.csv"), &header, std::iter::empty());
    }
    let pairs: Vec<(&str, &[f64])> = names
        .iter()
        .map(|s| s.as_str())
        .zip(fields.iter().map(|f| f.as_slice()))
        .collect();
    write_nodal_csv(&out.join("mode.csv"), mesh, &pairs)?;
    write_vtk(&out.join("mode.vtk"), mesh, "growing mode", &pairs)
}

/// Runs the spectral pipeline without writing anything.
pub fn compute_growth(cfg: &RunConfig) -> Result<GrowthOutcome> {
    let profile = build_profile(cfg)?;
    let forms = build_forms(cfg, profile.clone())?;
    let result = find_growth_rate(&forms, &cfg.growth.solver)?;
    let lower = lower_bound_test_function(&forms).ok();
    let bound_lower = lower.as_ref().map(|t| LowerBound {
        c1: t.c1_h,
        c2: t.c2_h,
        c1_exact: t.c1,
        c2_exact: t.c2,
    });
    let grid = s_grid(cfg, &result);
    let curve = sample_alpha_curve(
        &forms,
        &grid,
        &cfg.growth.solver.eig,
        bound_lower.map(|b| (b.c1, b.c2)),
    )?;
    let scalar = Arc::new(FeSpace::scalar(forms.space.mesh().clone()));
    let mode = reconstruct_mode(&forms, &result, scalar)?;
    let (lambda_inc, schedule) = if cfg.growth.skip_incompressible {
        (None, Vec::new())
    } else {
        let inc = incompressible_growth_rate(&forms, &cfg.growth.incompressible)?;
        (Some(inc.lambda_inc), inc.schedule)
    };
    let report = GrowthReport {
        schema_version: SCHEMA_VERSION,
        status: "unstable",
        dofs: forms.n_dofs(),
        alpha0: result.alpha0,
        lambda: Some(result.lambda),
        residual: Some(result.residual),
        eig_residual: Some(result.eig_residual),
        frak_s: result.frak_s,
        c3: result.c3,
        bound_lower,
        bound_upper: upper_bound(&profile),
        curve: Some(CurveSummary {
            points: curve.samples.len(),
            max_increase: curve.max_increase,
            lower_margin: curve.lower_margin,
            upper_margin: curve.upper_margin,
            lipschitz_estimate: curve.lipschitz_estimate,
            lipschitz_bound: curve.lipschitz_bound,
        }),
        lambda_inc,
        lambda_ge_lambda_inc: lambda_inc.map(|li| result.lambda >= li - 1e-6),
        penalty_schedule: schedule,
        mode: Some(mode.clone()),
    };
    Ok(GrowthOutcome {
        forms,
        result,
        curve,
        mode,
        report,
    })
}

fn write_curve(out: &Path, curve: &AlphaCurve) -> Result<()> {
    let lower = curve.lower_bound;
    write_csv(
        &out.join("alpha_curve.csv"),
        &["s", "alpha", "lower_bound", "upper_bound", "e2", "residual"],
        curve.samples.iter().map(|p| {
            let lb = lower.map(|(c1, c2)| c1 - c2 * p.s).unwrap_or(f64::NAN);
            vec![p.s, p.alpha, lb, curve.upper_bound, p.e2, p.residual]
        }),
    )
}

/// alpha_curve.csv, growth_rate.json and the mode dumps. A stable profile
/// writes a report with status "not_unstable", an empty mode dump, and
/// returns [`Error::NotUnstable`].
pub fn cmd_growth(cfg: &RunConfig, out: &Path) -> Result<GrowthReport> {
    cfg.validate()?;
    prepare_out(out)?;
    match compute_growth(cfg) {
        Ok(g) => {
            write_curve(out, &g.curve)?;
            write_mode(out, &g.forms, Some(&g.mode))?;
            write_json(&out.join("growth_rate.json"), &g.report)?;
            Ok(g.report)
        }
        Err(Error::NotUnstable { alpha0 }) => {
            let profile = build_profile(cfg)?;
            let forms = build_forms(cfg, profile.clone())?;
            let rep = GrowthReport::not_unstable(forms.n_dofs(), alpha0, upper_bound(&profile));
            write_json(&out.join("growth_rate.json"), &rep)?;
            write_mode(out, &forms, None)?;
            Err(Error::NotUnstable { alpha0 })
        }
        Err(e) => Err(e),
    }
}

/// Λ and the mode seed, skipping the 𝔖 bracket.
pub fn growing_seed(cfg: &RunConfig) -> Result<(Arc<AssembledForms>, ModeSeed)> {
    let profile = build_profile(cfg)?;
    let forms = build_forms(cfg, profile)?;
    let opts = rtgrowth::spectral::GrowthOptions {
        frak_s: false,
        ..cfg.growth.solver
    };
    let r = find_growth_rate(&forms, &opts)?;
    let seed = ModeSeed::new(&forms, r.lambda, r.eigvec)?;
    Ok((forms, seed))
}

fn write_trajectory(path: &Path, traj: &[Diagnostics]) -> Result<()> {
    write_csv(path, &Diagnostics::HEADER, traj.iter().map(|d| d.row()))
}

#[derive(Debug, Clone, Serialize)]
pub struct LedgerSummary {
    pub dt: f64,
    pub t_end: f64,
    pub rhs0: f64,
    pub max_violation: f64,
    pub max_violation_half_dt: f64,
    /// violation ratio under dt halving
    pub ratio: f64,
    pub energy_nonincreasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearReport {
    pub schema_version: u32,
    pub lambda: Option<f64>,
    pub fit: Option<GrowthFit>,
    pub fitted_lambda: Option<f64>,
    pub relative_error: Option<f64>,
    pub rate_tolerance: f64,
    pub random_starts: Option<AppendixReport>,
    /// max over random starts of (tail rate − Λ)/Λ
    pub max_tail_excess: Option<f64>,
    pub ledger: Option<LedgerSummary>,
    pub passed: bool,
}

fn ledger_once(
    forms: &AssembledForms,
    u0: &[f64],
    dt: f64,
    t_end: f64,
) -> Result<(f64, f64, bool)> {
    let mut st = LinearStepper::new(Arc::new(forms.clone()), dt)?;
    let mut s = PerturbationState::zero(forms);
    s.u = u0.to_vec();
    let mut tr = LedgerTracker::new(forms)?;
    tr.record(&s)?;
    let steps = (t_end / dt).round() as usize;
    for _ in 0..steps {
        st.step(&mut s)?;
        tr.record(&s)?;
    }
    let l = tr.finish();
    let mono = l.lhs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    Ok((l.max_violation, l.rhs0, mono))
}

/// Energy ledger of a random solenoidal start at dt and dt/2.
pub fn stable_ledger(cfg: &RunConfig, forms: &AssembledForms) -> Result<LedgerSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let u0 = random_solenoidal(&forms.space, &mut rng, 3);
    let (dt, t_end) = (cfg.linear.ledger_dt, cfg.linear.ledger_t_end);
    let (v1, rhs0, mono) = ledger_once(forms, &u0, dt, t_end)?;
    let (v2, _, _) = ledger_once(forms, &u0, 0.5 * dt, t_end)?;
    Ok(LedgerSummary {
        dt,
        t_end,
        rhs0,
        max_violation: v1,
        max_violation_half_dt: v2,
        ratio: v1 / v2,
        energy_nonincreasing: mono,
    })
}

/// Mode-seeded linear run with a growth-rate fit plus random starts; for
/// strictly stable isothermal profiles the energy ledger instead.
pub fn cmd_evolve_linear(cfg: &RunConfig, out: &Path) -> Result<LinearReport> {
    cfg.validate()?;
    let profile = build_profile(cfg)?;
    prepare_out(out)?;
    let lc = &cfg.linear;
    if profile.classify().kind == ProfileKind::StableType {
        let forms = build_forms(cfg, profile)?;
        let ledger = stable_ledger(cfg, &forms)?;
        let passed = ledger.max_violation <= 1e-6 && ledger.energy_nonincreasing;
        let rep = LinearReport {
            schema_version: SCHEMA_VERSION,
            lambda: None,
            fit: None,
            fitted_lambda: None,
            relative_error: None,
            rate_tolerance: lc.rate_tolerance,
            random_starts: None,
            max_tail_excess: None,
            ledger: Some(ledger),
            passed,
        };
        write_json(&out.join("linear_report.json"), &rep)?;
        return Ok(rep);
    }
    let (forms, seed) = growing_seed(cfg)?;
    let lambda = seed.lambda;
    let mut st = LinearStepper::new(forms.clone(), lc.dt)?;
    let mut s = seed.state(lc.amplitude);
    let traj = run_linear(&mut st, &mut s, lc.e_foldings / lambda, lc.record_every)?;
    write_trajectory(&out.join("trajectory_linear.csv"), &traj)?;
    let fit = measure_growth_rate(&traj, None)?;
    let rel = (fit.lambda - lambda).abs() / lambda;

    let seeds: Vec<u64> = (0..lc.random_starts as u64)
        .map(|k| cfg.seed.wrapping_add(k))
        .collect();
    let random = if seeds.is_empty() {
        None
    } else {
        Some(appendix_bound(
            forms,
            lambda,
            &seeds,
            lc.dt,
            lc.random_e_foldings / lambda,
        )?)
    };
    let excess = random.as_ref().map(|r| {
        r.tail_rates
            .iter()
            .map(|t| (t - lambda) / lambda)
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let passed = rel <= lc.rate_tolerance && excess.is_none_or(|x| x <= lc.rate_tolerance);
    let rep = LinearReport {
        schema_version: SCHEMA_VERSION,
        lambda: Some(lambda),
        fitted_lambda: Some(fit.lambda),
        fit: Some(fit),
        relative_error: Some(rel),
        rate_tolerance: lc.rate_tolerance,
        random_starts: random,
        max_tail_excess: excess,
        ledger: None,
        passed,
    };
    write_json(&out.join("linear_report.json"), &rep)?;
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct NonlinearReport {
    pub schema_version: u32,
    pub lambda: f64,
    pub delta: f64,
    pub t_end: f64,
    pub compat: CompatibleData,
    pub initial: Diagnostics,
    pub last: Diagnostics,
    pub max_u3_l2: f64,
}

/// Full equations from compatible data δ(ρ̃, ṽ, θ̃) + δ²(ρ̃, u_r, θ̃).
pub fn cmd_evolve_nonlinear(cfg: &RunConfig, out: &Path) -> Result<NonlinearReport> {
    cfg.validate()?;
    let nc = &cfg.nonlinear;
    let (forms, seed) = growing_seed(cfg)?;
    prepare_out(out)?;
    let lame = LameSolver::new(forms.space.clone(), forms.params())?;
    let data = build_compatible_data(&forms, &lame, &seed, nc.delta, &nc.compat)?;
    let mut stepper = NonlinearStepper::new(forms.clone(), nc.stepper)?;
    let mut s = data.state.clone();
    let initial = diagnostics(&forms, &s);
    stepper.next_dt(&s)?;
    let traj = stepper.run(&mut s, nc.t_end, nc.record_every)?;
    write_trajectory(&out.join("trajectory_nonlinear.csv"), &traj)?;
    let rep = NonlinearReport {
        schema_version: SCHEMA_VERSION,
        lambda: seed.lambda,
        delta: nc.delta,
        t_end: nc.t_end,
        compat: data,
        initial,
        last: *traj.last().expect("run records the initial state"),
        max_u3_l2: traj.iter().map(|d| d.u3_l2).fold(0.0, f64::max),
    };
    write_json(&out.join("nonlinear_report.json"), &rep)?;
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct EscapeSummary {
    pub schema_version: u32,
    pub slope_tolerance: f64,
    pub passed: bool,
    #[serde(flatten)]
    pub report: EscapeTimeReport,
}

/// escape_report.json plus one trajectory per δ.
pub fn cmd_escape(cfg: &RunConfig, out: &Path) -> Result<EscapeSummary> {
    cfg.validate()?;
    let (forms, seed) = growing_seed(cfg)?;
    prepare_out(out)?;
    let report = escape_time_experiment(forms, &seed, &cfg.escape)?;
    for (k, run) in report.runs.iter().enumerate() {
        write_trajectory(
            &out.join(format!("trajectory_escape_{k}.csv")),
            &run.trajectory,
        )?;
    }
    let passed = report.relative_error <= SLOPE_TOLERANCE
        && report.both_components_exceed
        && report.monotone;
    let rep = EscapeSummary {
        schema_version: SCHEMA_VERSION,
        slope_tolerance: SLOPE_TOLERANCE,
        passed,
        report,
    };
    write_json(&out.join("escape_report.json"), &rep)?;
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// "<=" or ">="
    pub relation: &'static str,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            relation: "<=",
            limit,
            passed: value <= limit,
        }
    }
    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            relation: ">=",
            limit,
            passed: value >= limit,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub classification: ProfileKind,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Largest mesh on which `verify` compares against a dense eigensolve.
const DENSE_DOFS: usize = 2500;

/// Invariant suite for the configured profile.
pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<VerifyReport> {
    cfg.validate()?;
    let profile = build_profile(cfg)?;
    prepare_out(out)?;
    let mut checks = Vec::new();
    let st = steady_report(&profile);
    checks.push(Check::at_most(
        "hydrostatic_relative",
        st.hydrostatic_relative,
        1e-8,
    ));
    checks.push(Check::at_least("e_min", st.e_min, f64::MIN_POSITIVE));

    if st.classification == ProfileKind::UnstableType {
        let g = compute_growth(cfg)?;
        let r = &g.result;
        checks.push(Check::at_most(
            "alpha_max_increase",
            g.curve.max_increase.max(0.0),
            1e-8,
        ));
        if let Some(m) = g.curve.lower_margin {
            checks.push(Check::at_least("alpha_lower_margin", m, -1e-8));
        }
        checks.push(Check::at_least(
            "alpha_upper_margin",
            g.curve.upper_margin,
            -1e-8,
        ));
        checks.push(Check::at_most("fixed_point_residual", r.residual, 1e-8));
        checks.push(Check::at_most(
            "mode_mass_residual",
            g.mode.residuals.mass,
            1e-10,
        ));
        checks.push(Check::at_least(
            "mode_nontrivial",
            g.mode.nontrivial as u8 as f64,
            1.0,
        ));
        if let Some(li) = g.report.lambda_inc {
            checks.push(Check::at_least(
                "lambda_minus_lambda_inc",
                r.lambda - li,
                -1e-6,
            ));
        }
        if g.forms.n_dofs() <= DENSE_DOFS {
            let solver = AlphaSolver::new(&g.forms, cfg.growth.solver.eig);
            let dense = solver.alpha_dense(r.lambda)?;
            let rel = (dense.alpha - r.alpha_at_lambda).abs() / dense.alpha.abs().max(1e-300);
            checks.push(Check::at_most("iterative_vs_dense", rel, 1e-8));
        }
        let lin = cmd_evolve_linear(cfg, out)?;
        if let Some(e) = lin.relative_error {
            checks.push(Check::at_most(
                "linear_fit_relative_error",
                e,
                cfg.linear.rate_tolerance,
            ));
        }
        if let Some(x) = lin.max_tail_excess {
            checks.push(Check::at_most(
                "random_tail_excess",
                x,
                cfg.linear.rate_tolerance,
            ));
        }
        let seed = ModeSeed::new(&g.forms, r.lambda, r.eigvec.clone())?;
        let lame = LameSolver::new(g.forms.space.clone(), g.forms.params())?;
        let data = build_compatible_data(&g.forms, &lame, &seed, 1e-2, &cfg.nonlinear.compat)?;
        checks.push(Check::at_most(
            "picard_contraction",
            data.max_contraction,
            1.0 - 1e-12,
        ));
    } else if st.classification == ProfileKind::StableType {
        let forms = build_forms(cfg, profile.clone())?;
        match stable_ledger(cfg, &forms) {
            Ok(l) => {
                checks.push(Check::at_most("ledger_violation", l.max_violation, 1e-6));
                checks.push(Check::at_least(
                    "energy_nonincreasing",
                    l.energy_nonincreasing as u8 as f64,
                    1.0,
                ));
            }
            Err(Error::WrongProfileClass(_)) => {}
            Err(e) => return Err(e),
        }
        match find_growth_rate(&forms, &cfg.growth.solver) {
            Err(Error::NotUnstable { alpha0 }) => {
                checks.push(Check::at_most("alpha0", alpha0, 0.0))
            }
            Ok(r) => checks.push(Check::at_most("alpha0", r.alpha0, 0.0)),
            Err(e) => return Err(e),
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    let rep = VerifyReport {
        schema_version: SCHEMA_VERSION,
        classification: st.classification,
        checks,
        passed,
    };
    write_json(&out.join("verify_report.json"), &rep)?;
    Ok(rep)
}

/// Output directory: the flag wins over the config.
pub fn resolve_out(cfg: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| cfg.output_dir.clone())
}
