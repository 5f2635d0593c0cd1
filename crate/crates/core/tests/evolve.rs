mod common;

use std::sync::Arc;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rtgrowth::evolve::*;
use rtgrowth::forms::{AssembledForms, LameSolver};
use rtgrowth::grid::quad_integral;
use rtgrowth::spectral::{find_growth_rate, GrowthOptions};
use rtgrowth::Error;

fn reference_seed(n: usize) -> (Arc<AssembledForms>, ModeSeed) {
    let forms = Arc::new(reference_forms(n));
    let r = find_growth_rate(
        &forms,
        &GrowthOptions {
            frak_s: false,
            ..GrowthOptions::default()
        },
    )
    .unwrap();
    let seed = ModeSeed::new(&forms, r.lambda, r.eigvec).unwrap();
    (forms, seed)
}

fn ledger_run(forms: &AssembledForms, stepper: &mut LinearStepper, t_end: f64) -> StabilityLedger {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut s = PerturbationState::zero(forms);
    s.u = random_solenoidal(&forms.space, &mut rng, 3);
    let mut tr = LedgerTracker::new(forms).unwrap();
    tr.record(&s).unwrap();
    let steps = (t_end / stepper.dt()).round() as usize;
    for _ in 0..steps {
        stepper.step(&mut s).unwrap();
        tr.record(&s).unwrap();
    }
    tr.finish()
}

#[test]
fn zero_state_stays_zero() {
    let forms = Arc::new(reference_forms(6));
    let z = PerturbationState::zero(&forms);
    let s = linear_step(&z, 0.01, forms.clone()).unwrap();
    assert!(s.u.iter().chain(&s.rho).chain(&s.theta).all(|x| *x == 0.0));

    let mut nl = NonlinearStepper::new(forms.clone(), NonlinearOptions::default()).unwrap();
    let mut s = z.clone();
    nl.run(&mut s, 0.1, 1).unwrap();
    let d = diagnostics(&forms, &s);
    assert!(d.energy <= 1e-10 * 0.1, "{}", d.energy);
}

#[test]
fn mode_amplifies_by_exp_lambda_dt() {
    let (forms, seed) = reference_seed(16);
    let s0 = seed.state(1.0);
    let err = |dt: f64| {
        let s1 = linear_step(&s0, dt, forms.clone()).unwrap();
        let amp = diagnostics(&forms, &s1).energy / diagnostics(&forms, &s0).energy;
        (amp - (seed.lambda * dt).exp()).abs()
    };
    assert!(err(1e-3) <= 1e-3);
    // per-step error is third order; over a fixed horizon the ratio is 4
    let (e1, e2) = (err(0.2), err(0.1));
    let r = (e1 / 0.2) / (e2 / 0.1);
    assert!(r > 3.5 && r < 4.5, "{r}");
}

#[test]
fn seeded_linear_run_recovers_lambda() {
    let (forms, seed) = reference_seed(16);
    let mut st = LinearStepper::new(forms.clone(), 0.01).unwrap();
    let mut s = seed.state(1e-3);
    let traj = run_linear(&mut st, &mut s, 2.0 / seed.lambda, 10).unwrap();
    let f = measure_growth_rate(&traj, None).unwrap();
    assert!((f.lambda - seed.lambda).abs() <= 0.02 * seed.lambda);
    assert!(f.samples >= 20);
    assert!(st.max_residual <= 1e-10);
}

#[test]
fn random_starts_do_not_outgrow_lambda() {
    let (forms, seed) = reference_seed(12);
    let rep = appendix_bound(forms, seed.lambda, &[1, 2, 3], 0.05, 50.0).unwrap();
    for r in &rep.tail_rates {
        assert!(*r <= 1.02 * seed.lambda, "{r} vs {}", seed.lambda);
    }
    assert!(rep.max_ratio.is_finite() && rep.max_ratio < 1e3);
}

#[test]
fn stable_ledger_closes_and_converges() {
    let forms = Arc::new(forms_on(isothermal_profile(), 12));
    let t_end = 0.2;
    let mut a = LinearStepper::new(forms.clone(), 1e-3).unwrap();
    let mut b = LinearStepper::new(forms.clone(), 5e-4).unwrap();
    let la = ledger_run(&forms, &mut a, t_end);
    let lb = ledger_run(&forms, &mut b, t_end);
    assert!(la.max_violation > 0.0);
    let ratio = la.max_violation / lb.max_violation;
    assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
    // dissipative: the energy never increases
    for w in la.lhs.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12));
    }
}

#[test]
fn ledger_of_zero_trajectory_is_trivial() {
    let forms = forms_on(isothermal_profile(), 4);
    let z = PerturbationState::zero(&forms);
    let l = verify_stability_identity(&forms, &[z.clone(), z]).unwrap();
    assert_eq!(l.max_violation, 0.0);
    assert_eq!(l.rhs0, 0.0);
}

#[test]
fn ledger_rejects_unstable_profile() {
    let forms = reference_forms(4);
    assert!(matches!(
        LedgerTracker::new(&forms),
        Err(Error::WrongProfileClass(_))
    ));
}

#[test]
fn ledger_rejects_mixed_sign_profile() {
    let spec = rtgrowth::steady::DensitySpec::Bump {
        base: 1.0,
        amp: 0.5,
        center: 0.5,
        width: 0.2,
    };
    let prof = rtgrowth::steady::SteadyProfile::from_spec(
        &spec,
        (0.0, 1.0),
        reference_params(),
        None,
        Some(1.0),
    );
    let forms = forms_on(Arc::new(prof.unwrap()), 4);
    assert!(matches!(
        LedgerTracker::new(&forms),
        Err(Error::WrongProfileClass(_))
    ));
}

#[test]
fn compatible_data_picard_contracts() {
    let (forms, seed) = reference_seed(16);
    let lame = LameSolver::new(forms.space.clone(), forms.params()).unwrap();
    let mut norms = Vec::new();
    for d in [1e-4, 1e-3, 1e-2] {
        let c = build_compatible_data(&forms, &lame, &seed, d, &CompatOptions::default()).unwrap();
        assert!(c.max_contraction < 1.0);
        if d == 1e-3 {
            assert!(c.iterations <= 10, "{}", c.iterations);
        }
        assert!(c.state.u.len() == forms.n_dofs());
        norms.push(c.u_r_h1);
    }
    let (lo, hi) = norms
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
    assert!((hi - lo) / hi < 0.05, "{norms:?}");
    assert!(build_compatible_data(&forms, &lame, &seed, 1.5, &CompatOptions::default()).is_err());
}

#[test]
fn nonlinear_tracks_linear_for_small_seed() {
    let (forms, seed) = reference_seed(12);
    let mut nl = NonlinearStepper::new(
        forms.clone(),
        NonlinearOptions {
            dt: Some(2e-3),
            cfl: 0.5,
        },
    )
    .unwrap();
    let mut lin = LinearStepper::new(forms.clone(), 2e-3).unwrap();
    let mut a = seed.state(1e-6);
    let mut b = a.clone();
    for _ in 0..500 {
        nl.step(&mut a, 2e-3).unwrap();
        lin.step(&mut b).unwrap();
    }
    let diff: Vec<f64> = a.u.iter().zip(&b.u).map(|(x, y)| x - y).collect();
    let rel = forms.m.quad_form(&diff).sqrt() / forms.m.quad_form(&b.u).sqrt();
    assert!(rel <= 0.05, "{rel}");
}

#[test]
fn nonlinear_mass_is_conserved() {
    let (forms, seed) = reference_seed(10);
    let mut nl = NonlinearStepper::new(forms.clone(), NonlinearOptions::default()).unwrap();
    let mut s = seed.state(1e-2);
    for _ in 0..20 {
        let before = quad_integral(&forms.space, &s.rho);
        let dt = nl.next_dt(&s).unwrap();
        nl.step(&mut s, dt).unwrap();
        let after = quad_integral(&forms.space, &s.rho);
        assert!((after - before).abs() <= 1e-12, "{}", after - before);
    }
}

#[test]
fn nonlinear_stable_seed_decays() {
    let forms = Arc::new(forms_on(isothermal_profile(), 10));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut s = PerturbationState::zero(&forms);
    s.u = random_solenoidal(&forms.space, &mut rng, 3)
        .iter()
        .map(|x| 1e-3 * x)
        .collect();
    let e0 = forms.m.quad_form(&s.u);
    let mut nl = NonlinearStepper::new(forms.clone(), NonlinearOptions::default()).unwrap();
    nl.run(&mut s, 2.0, 50).unwrap();
    assert!(forms.m.quad_form(&s.u) < e0);
}

#[test]
fn huge_fixed_step_is_rejected() {
    let forms = Arc::new(reference_forms(8));
    let nl = NonlinearStepper::new(
        forms.clone(),
        NonlinearOptions {
            dt: Some(10.0),
            cfl: 0.5,
        },
    )
    .unwrap();
    let s = PerturbationState::zero(&forms);
    assert!(matches!(nl.next_dt(&s), Err(Error::CflViolation { .. })));
}

#[test]
fn escape_crossing_of_pure_exponential() {
    let (lam, eps) = (0.3, 1e-2);
    let deltas = [1e-5, 1e-4, 1e-3];
    let mut times = Vec::new();
    for d in deltas {
        let t: Vec<f64> = (0..400).map(|k| 0.1 * k as f64).collect();
        let a: Vec<f64> = t.iter().map(|t| d * (lam * t).exp()).collect();
        let te = first_crossing(&t, &a, eps).unwrap();
        assert!((te - (eps / d).ln() / lam).abs() < 1e-10);
        times.push(te);
    }
    let f = fit_escape_slope(&deltas, &times).unwrap();
    assert!((f.slope - 1.0 / lam).abs() < 1e-9);
}

#[test]
fn escape_on_coarse_grid() {
    let (forms, seed) = reference_seed(16);
    let rep = escape_time_experiment(forms, &seed, &EscapeOptions::default()).unwrap();
    assert!(rep.monotone);
    assert!(rep.relative_error < 0.1, "{}", rep.relative_error);
    assert!(rep.both_components_exceed);
}
