mod common;

use std::sync::Arc;

use common::*;
use proptest::prelude::*;
use rtgrowth::forms::AssembledForms;
use rtgrowth::steady::{Density, EnergyConstant, SteadyProfile};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// 2×2 mesh: the centre node carries the only two dofs.
fn hat(forms: &AssembledForms, comp: usize) -> Vec<f64> {
    let mut v = vec![0.0; forms.n_dofs()];
    v[forms.space.dof(4, comp).unwrap()] = 1.0;
    v
}

fn uniform_forms(n: usize) -> AssembledForms {
    let prof = SteadyProfile::build(
        Density::Linear {
            rho0: 1.0,
            slope: 0.0,
        },
        (0.0, 1.0),
        reference_params(),
        EnergyConstant::Floor(1.0),
    )
    .unwrap();
    forms_on(Arc::new(prof), n)
}

#[test]
fn hat_function_forms_match_closed_form() {
    let f = reference_forms(2);
    assert_eq!(f.n_dofs(), 2);
    let p = reference_params();
    for comp in 0..2 {
        let v = hat(&f, comp);
        let q = f.quadratic_forms(&v).unwrap();
        // ∫ρ̄φ² = 1.5 · (1/3)², ∫|∇φ|² = 8/3, ∫(∂φ)² = 4/3
        assert!((q.j - 1.0 / 6.0).abs() < 1e-14);
        assert!((q.e2 - (p.mu * 8.0 / 3.0 + p.mu0 * 4.0 / 3.0)).abs() < 1e-13);
    }
}

#[test]
fn uniform_density_potential_is_pure_pressure() {
    // mean dilatation of the centre hat is ±1 in every cell, and buoyancy cancels by symmetry
    let f = uniform_forms(2);
    let prof = &f.profile;
    let mean_p = 0.5 * (prof.p(0.0) + prof.p(1.0));
    let expect = -(1.0 + reference_params().a) * mean_p;
    for comp in 0..2 {
        let q = f.quadratic_forms(&hat(&f, comp)).unwrap();
        assert!(
            (q.e1 - expect).abs() < 1e-12 * expect.abs(),
            "{} vs {expect}",
            q.e1
        );
    }
}

fn random_field(f: &AssembledForms, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..f.n_dofs())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mean_dilatation_keeps_weighted_mass(seed in 0u64..10_000, n in 3usize..9) {
        // Σ_K X_K ∫_K ρ̄ = ∫ρ̄ div v = −∫ρ̄′v₃ for ρ̄ = 1 + x₃
        let f = reference_forms(n);
        let v = random_field(&f, seed);
        let mesh = f.space.mesh();
        let h = 1.0 / n as f64;
        let x = f.dilatation.per_cell(&f.space, &v);
        let lhs: f64 = (0..mesh.cell_count())
            .map(|c| x[c] * h * h * (1.0 + mesh.cell_origin(c)[1] + 0.5 * h))
            .sum();
        let rhs: f64 = -f.space.nodal_component(&v, 1).iter().sum::<f64>() * h * h;
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn quadratic_forms_are_matrix_forms(seed in 0u64..10_000, scale in 0.1f64..10.0) {
        let f = reference_forms(5);
        let v = random_field(&f, seed);
        let q = f.quadratic_forms(&v).unwrap();
        prop_assert!((q.e1 - dot(&v, &f.k1.mul_vec(&v))).abs() < 1e-12 * (1.0 + q.e1.abs()));
        prop_assert!((q.e2 - dot(&v, &f.k2.mul_vec(&v))).abs() < 1e-12 * q.e2);
        prop_assert!((q.j - dot(&v, &f.m.mul_vec(&v))).abs() < 1e-12 * q.j);
        prop_assert!(q.e2 > 0.0 && q.j > 0.0);
        let w: Vec<f64> = v.iter().map(|x| scale * x).collect();
        let qs = f.quadratic_forms(&w).unwrap();
        let s2 = scale * scale;
        prop_assert!((qs.e1 - s2 * q.e1).abs() < 1e-11 * (1.0 + (s2 * q.e1).abs()));
        prop_assert!((qs.e2 - s2 * q.e2).abs() < 1e-11 * s2 * q.e2);
    }
}
