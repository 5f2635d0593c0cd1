//! Acceptance suite: one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtgrowth::evolve::*;
use rtgrowth::forms::{AssembledForms, LameSolver};
use rtgrowth::grid::{BoxMesh, FeSpace};
use rtgrowth::linalg::EigOptions;
use rtgrowth::spectral::*;
use rtgrowth::steady::*;
use rtgrowth::Error;
use rtgrowth_cli::{cmd_evolve_linear, cmd_growth, cmd_steady, RunConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn params() -> PhysParams {
    PhysParams::new(1.0, 5.0 / 3.0, 0.1, 0.1).unwrap()
}

fn reference_profile() -> Arc<SteadyProfile> {
    let d = Density::Linear {
        rho0: 1.0,
        slope: 1.0,
    };
    Arc::new(SteadyProfile::build(d, (0.0, 1.0), params(), EnergyConstant::Explicit(-2.0)).unwrap())
}

fn forms(profile: Arc<SteadyProfile>, n: usize) -> Arc<AssembledForms> {
    let mesh = Arc::new(BoxMesh::unit(2, n).unwrap());
    Arc::new(AssembledForms::assemble(Arc::new(FeSpace::velocity(mesh)), profile).unwrap())
}

fn reference(n: usize) -> Arc<AssembledForms> {
    forms(reference_profile(), n)
}

fn growth(f: &AssembledForms, frak_s: bool) -> GrowthRateResult {
    find_growth_rate(
        f,
        &GrowthOptions {
            frak_s,
            ..GrowthOptions::default()
        },
    )
    .unwrap()
}

fn seed_of(f: &AssembledForms) -> ModeSeed {
    let r = growth(f, false);
    ModeSeed::new(f, r.lambda, r.eigvec).unwrap()
}

/// α over 12 points spanning [0, 2𝔖] on the 16² reference mesh.
fn reference_curve() -> (Arc<AssembledForms>, GrowthRateResult, AlphaCurve) {
    let f = reference(16);
    let r = growth(&f, true);
    let top = 2.0 * r.frak_s.unwrap().1;
    let grid: Vec<f64> = (0..12).map(|k| top * k as f64 / 11.0).collect();
    let lb = lower_bound_test_function(&f).unwrap();
    let curve =
        sample_alpha_curve(&f, &grid, &EigOptions::default(), Some((lb.c1_h, lb.c2_h))).unwrap();
    (f, r, curve)
}

fn c1_monotone() -> Outcome {
    let (_, _, curve) = reference_curve();
    let inc = curve.max_increase;
    outcome(
        inc <= 1e-8,
        format!("max α(s₂) − α(s₁) over s₁ < s₂ = {inc:.3e} (≤ 1e-8)"),
    )
}

fn c2_sandwich() -> Outcome {
    let (f, _, curve) = reference_curve();
    let ub = upper_bound(&f.profile);
    let (c1, c2) = curve.lower_bound.unwrap();
    let lower_ok = curve
        .samples
        .iter()
        .all(|p| c1 - c2 * p.s - 1e-8 <= p.alpha);
    let upper_ok = curve.samples.iter().all(|p| p.alpha <= ub + 1e-8);
    let ub_ok = (ub - 3.4).abs() <= 1e-12;
    outcome(
        lower_ok && upper_ok && ub_ok,
        format!(
            "c1 = {c1:.4e}, c2 = {c2:.4e}, UB = {ub:.12}, lower margin {:.3e}, upper margin {:.3e}",
            curve.lower_margin.unwrap(),
            curve.upper_margin
        ),
    )
}

fn c3_fixed_point() -> Outcome {
    let (_, r, curve) = reference_curve();
    let h: Vec<f64> = curve.samples.iter().map(|p| p.alpha - p.s * p.s).collect();
    let changes = h
        .windows(2)
        .filter(|w| (w[0] > 0.0) != (w[1] > 0.0))
        .count();
    let pass = r.residual <= 1e-8 && changes == 1;
    outcome(
        pass,
        format!(
            "Λ = {:.10}, |α(Λ) − Λ²| = {:.3e}, sign changes of α − s² on grid: {changes}",
            r.lambda, r.residual
        ),
    )
}

fn random_case(rng: &mut ChaCha8Rng) -> (Arc<AssembledForms>, f64) {
    let p = PhysParams::new(
        1.0,
        rng.random_range(1.2..2.0),
        rng.random_range(0.05..0.5),
        rng.random_range(0.0..0.3),
    )
    .unwrap();
    let spec = match rng.random_range(0..3) {
        0 => DensitySpec::Linear {
            rho0: rng.random_range(0.5..2.0),
            slope: rng.random_range(-0.4..1.5),
        },
        1 => DensitySpec::Bump {
            base: 1.0,
            amp: rng.random_range(0.2..1.0),
            center: rng.random_range(0.3..0.7),
            width: rng.random_range(0.15..0.4),
        },
        _ => DensitySpec::Tanh {
            lower: 1.0,
            upper: rng.random_range(1.2..3.0),
            center: rng.random_range(0.3..0.7),
            width: rng.random_range(0.05..0.3),
        },
    };
    let e_floor = rng.random_range(0.1..1.0);
    let prof = SteadyProfile::from_spec(&spec, (0.0, 1.0), p, None, Some(e_floor)).unwrap();
    let n = rng.random_range(6..=20);
    (forms(Arc::new(prof), n), rng.random_range(0.0..1.0))
}

fn c4_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut max_dofs = 0;
    let cases = 12;
    for _ in 0..cases {
        let (f, s) = random_case(&mut rng);
        max_dofs = max_dofs.max(f.n_dofs());
        let mut solver = AlphaSolver::new(&f, EigOptions::default());
        let it = solver.alpha(s).unwrap().alpha;
        let de = solver.alpha_dense(s).unwrap().alpha;
        worst = worst.max((it - de).abs() / de.abs().max(1e-300));
    }
    outcome(
        worst <= 1e-8 && max_dofs <= 2500,
        format!("{cases} random (profile, s) cases, ≤ {max_dofs} dofs, worst relative gap {worst:.3e} (≤ 1e-8)"),
    )
}

fn c5_mode() -> Outcome {
    let mut mom = Vec::new();
    let mut mass: f64 = 0.0;
    let mut nontrivial = true;
    for n in [8, 16, 32] {
        let f = reference(n);
        let r = growth(&f, false);
        let scalar = Arc::new(FeSpace::scalar(f.space.mesh().clone()));
        let m = reconstruct_mode(&f, &r, scalar).unwrap();
        mom.push(m.residuals.momentum);
        mass = mass.max(m.residuals.mass);
        nontrivial &=
            m.nontrivial && m.horizontal_l2 > 0.0 && m.vertical_l2 > 0.0 && m.rho_l2 > 0.0;
    }
    let orders: Vec<f64> = mom.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let pass = mass <= 1e-13 && orders.iter().all(|o| *o >= 1.0) && nontrivial;
    outcome(
        pass,
        format!(
            "mass-line residual ≤ {mass:.1e}; momentum residual 8/16/32: {:.3e}, {:.3e}, {:.3e} (orders {:.2}, {:.2}); nontrivial: {nontrivial}",
            mom[0], mom[1], mom[2], orders[0], orders[1]
        ),
    )
}

fn c6_incompressible() -> Outcome {
    let f = reference(16);
    let r = growth(&f, false);
    let inc = incompressible_growth_rate(&f, &IncompressibleOptions::default()).unwrap();
    let pass = r.lambda >= inc.lambda_inc - 1e-6 && inc.final_change < 5e-3;
    outcome(
        pass,
        format!(
            "Λ = {:.6}, Λ_inc = {:.6}, final penalty change {:.2e} (< 5e-3), {} penalty steps",
            r.lambda,
            inc.lambda_inc,
            inc.final_change,
            inc.schedule.len()
        ),
    )
}

fn c7_linear() -> Outcome {
    let f = reference(16);
    let seed = seed_of(&f);
    let lam = seed.lambda;
    let mut st = LinearStepper::new(f.clone(), 0.01).unwrap();
    let mut s = seed.state(1e-3);
    let traj = run_linear(&mut st, &mut s, 2.0 / lam, 10).unwrap();
    let fit = measure_growth_rate(&traj, None).unwrap();
    let rel = (fit.lambda - lam).abs() / lam;
    let rep = appendix_bound(f, lam, &[11, 12, 13], 0.05, 8.0 / lam).unwrap();
    let worst = rep
        .tail_rates
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let pass = rel <= 0.02 && worst <= 1.02 * lam;
    outcome(
        pass,
        format!("fitted {:.6} vs Λ = {lam:.6} (rel {rel:.2e}); random-start tail rates ≤ {worst:.6} (≤ 1.02Λ)", fit.lambda),
    )
}

fn ledger_violation(f: &AssembledForms, u0: &[f64], dt: f64, t_end: f64) -> f64 {
    let mut st = LinearStepper::new(Arc::new(f.clone()), dt).unwrap();
    let mut s = PerturbationState::zero(f);
    s.u = u0.to_vec();
    let mut tr = LedgerTracker::new(f).unwrap();
    tr.record(&s).unwrap();
    for _ in 0..(t_end / dt).round() as usize {
        st.step(&mut s).unwrap();
        tr.record(&s).unwrap();
    }
    tr.finish().max_violation
}

fn c8_ledger() -> Outcome {
    // ρ̄ = 2 − x₃ cannot carry a constant ē; the isothermal profile starting at 2 is the stable, constant-ē case
    let linear = SteadyProfile::from_spec(
        &DensitySpec::Linear {
            rho0: 2.0,
            slope: -1.0,
        },
        (0.0, 1.0),
        params(),
        None,
        Some(5.0),
    )
    .unwrap();
    let rejected = matches!(
        LedgerTracker::new(&forms(Arc::new(linear), 4)),
        Err(Error::WrongProfileClass(_))
    );
    let iso = SteadyProfile::from_spec(
        &DensitySpec::Isothermal { rho0: 2.0, e0: 3.0 },
        (0.0, 1.0),
        params(),
        None,
        None,
    )
    .unwrap();
    let f = forms(Arc::new(iso), 12);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u0 = random_solenoidal(&f.space, &mut rng, 3);
    let v1 = ledger_violation(&f, &u0, 1e-4, 0.1);
    let v2 = ledger_violation(&f, &u0, 5e-5, 0.1);
    let ratio = v1 / v2;
    let pass = v1 <= 1e-6 && (3.5..=4.5).contains(&ratio) && rejected;
    outcome(
        pass,
        format!("isothermal ρ̄ = 2e^(−x₃/2): violation {v1:.3e} at dt = 1e-4, {v2:.3e} at 5e-5 (ratio {ratio:.3}); 2 − x₃ rejected: {rejected}"),
    )
}

fn c9_compat() -> Outcome {
    let f = reference(16);
    let seed = seed_of(&f);
    let lame = LameSolver::new(f.space.clone(), f.params()).unwrap();
    let mut contraction: f64 = 0.0;
    let mut norms = Vec::new();
    let mut boundary: f64 = 0.0;
    for d in [1e-4, 1e-3, 1e-2] {
        let c = build_compatible_data(&f, &lame, &seed, d, &CompatOptions::default()).unwrap();
        contraction = contraction.max(c.max_contraction);
        norms.push(c.u_r_h1);
        boundary = boundary.max(c.boundary_residual);
    }
    let hi = norms.iter().cloned().fold(0.0, f64::max);
    let lo = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = (hi - lo) / hi;
    let pass = contraction < 1.0 && spread < 0.05 && boundary <= 1e-8;
    outcome(
        pass,
        format!(
            "max contraction {contraction:.3e} (< 1); ‖u_r‖_H¹ spread {:.2}% (< 5%); boundary residual {boundary:.3e} (≤ 1e-8)",
            100.0 * spread
        ),
    )
}

fn c10_escape() -> Outcome {
    let f = reference(32);
    let seed = seed_of(&f);
    let t0 = Instant::now();
    let rep = escape_time_experiment(f, &seed, &EscapeOptions::default()).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let pass = rep.relative_error <= 0.1 && rep.both_components_exceed && secs <= 1800.0;
    outcome(
        pass,
        format!(
            "32²: slope {:.4} vs 1/Λ = {:.4} (rel {:.2e}); both components exceed: {}; escape times {:?}; {secs:.0} s",
            rep.fit_slope,
            rep.inverse_lambda,
            rep.relative_error,
            rep.both_components_exceed,
            rep.escape_times.iter().map(|t| (t * 1e3).round() / 1e3).collect::<Vec<_>>()
        ),
    )
}

fn run_all(cfg: &RunConfig, out: &Path) {
    cmd_steady(cfg, out).unwrap();
    cmd_growth(cfg, out).unwrap();
    cmd_evolve_linear(cfg, out).unwrap();
}

fn c11_determinism() -> Outcome {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let cfg = RunConfig::load(&configs.join("reference.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_all(&cfg, &a);
    run_all(&cfg, &b);
    let mut names: Vec<_> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let differing: Vec<String> = names
        .iter()
        .filter(|n| std::fs::read(a.join(n)).unwrap() != std::fs::read(b.join(n)).unwrap())
        .map(|n| n.to_string_lossy().into_owned())
        .collect();
    outcome(
        differing.is_empty(),
        format!(
            "{} output files compared; differing: {differing:?}",
            names.len()
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("alpha-monotonicity", c1_monotone),
        ("sandwich bounds", c2_sandwich),
        ("fixed point", c3_fixed_point),
        ("oracle equivalence", c4_oracle),
        ("mode reconstruction", c5_mode),
        ("compressibility comparison", c6_incompressible),
        ("linear evolution", c7_linear),
        ("stable-case identity", c8_ledger),
        ("compatibility construction", c9_compat),
        ("escape-time scaling", c10_escape),
        ("determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !o.pass {
            failed += 1;
        }
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {name}: {tag} [{:.1} s] {}",
            k + 1,
            t0.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
