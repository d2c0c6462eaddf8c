use std::f64::consts::PI;

use lyap_core::base::{BaseSystem, Potential};
use lyap_core::cocycle::{self, Cocycle};
use lyap_core::linalg::{ExtComplex, Sl2Element};
use lyap_core::quadrature::{QuadOptions, Sample};
use lyap_core::regularizer::{self, PhiQuery};
use lyap_core::C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn disk_point() -> impl Strategy<Value = C64> {
    (0.0..0.999f64, 0.0..(2.0 * PI)).prop_map(|(r, th)| C64::from_polar(r, th))
}

/// Period-2 exponent from `t = u₀u₁ − 2` and the roots of `λ² − tλ + 1`.
fn period_two_exponent(u0: f64, u1: f64) -> f64 {
    let t = u0 * u1 - 2.0;
    if t.abs() <= 2.0 {
        0.0
    } else {
        0.5 * ((t.abs() + (t * t - 4.0).sqrt()) / 2.0).ln()
    }
}

fn query(v: &[f64], w: &[f64], eps: f64) -> PhiQuery {
    PhiQuery::new(BaseSystem::periodic(v.len()), Potential::periodic(v), Potential::periodic(w), eps)
}

fn periodic_case(w_max: f64) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (1usize..=3).prop_flat_map(move |n| {
        (
            proptest::collection::vec(-2.5..2.5f64, n),
            proptest::collection::vec(-w_max..w_max, n),
            0.05..0.5f64,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conformal_maps_are_inverse(z in disk_point()) {
        let h = regularizer::phi_map(z);
        prop_assert!(h.im > 0.0);
        prop_assert!((regularizer::phi_inv(h) - z).norm() < 1e-9 * (1.0 + 1.0 / (1.0 - z.norm())));
    }

    #[test]
    fn psi_maps_the_disk_into_the_upper_half_disk(z in disk_point()) {
        let p = regularizer::psi(z);
        prop_assert!(p.norm() < 1.0 + 1e-12 && p.im >= -1e-12, "ψ({z}) = {p}");
    }

    #[test]
    fn psi_splits_the_circle(beta in 0.001..(PI - 0.001)) {
        // upper half → upper arc, lower half → the segment (−1, 1)
        let up = regularizer::psi(C64::from_polar(1.0, beta));
        prop_assert!((up.norm() - 1.0).abs() < 1e-9 && up.im > 0.0);
        let down = regularizer::psi(C64::from_polar(1.0, -beta));
        prop_assert!(down.im.abs() < 1e-9 && down.re.abs() < 1.0);
    }

    #[test]
    fn rotation_generator_expands_the_hemisphere(
        z in disk_point(), m in -20.0..20.0f64,
        a in proptest::collection::vec(-0.04..0.04f64, 3),
    ) {
        // with b = J the derivative is Im(z)(1 + m²) + O(|a|), positive for small real a
        prop_assume!(z.im > 0.05);
        let b = Sl2Element::rotation_generator();
        let a = Sl2Element::real(a[0], a[1], a[2]);
        let d = regularizer::cone_derivative_check(&b, &a, z, ExtComplex::Finite(m.into()));
        prop_assert!(d > 0.0, "{d}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, max_global_rejects: 4096, ..ProptestConfig::default() })]

    /// Positivity at `t = 0` propagates to `Φ_ε`.
    #[test]
    fn positivity_propagates((v, w, eps) in periodic_case(1.0)) {
        let q = query(&v, &w, eps);
        let start = cocycle::lyapunov_periodic_exact(&Cocycle::with_symbol(q.base.clone(), q.symbol(C64::new(0.0, 0.0)).unwrap()).unwrap()).unwrap();
        prop_assume!(start.value > 0.01);
        let p = regularizer::phi(&q).unwrap();
        prop_assert!(p.value > 3.0 * p.quad_error, "{p:?}");
    }

    #[test]
    fn boundary_representation_agrees((v, w, eps) in periodic_case(0.45)) {
        let q = query(&v, &w, eps);
        let a = regularizer::phi(&q).unwrap();
        let b = regularizer::phi_boundary(&q).unwrap();
        prop_assert!((a.value - b.value).abs() <= 2.0 * (a.quad_error + b.quad_error), "{a:?} {b:?}");
        let p = regularizer::poisson_check(&q).unwrap();
        prop_assert!(p.defect.abs() <= 2.0 * p.quad_error + 1e-12, "{p:?}");
    }
}

#[test]
fn weighted_integral_of_one_is_the_mass() {
    let r = regularizer::weighted_integral(|_| Ok(Sample::exact(1.0)), &QuadOptions::with_abs_tol(1e-14)).unwrap();
    assert!((r.value - regularizer::WEIGHT_MASS).abs() < 1e-13);
}

#[test]
fn phi_matches_closed_form_on_period_two() {
    let (v, w, eps) = ([0.9, -1.3], [0.2, -0.1], 0.4);
    let q = query(&v, &w, eps).with_quad(QuadOptions::with_abs_tol(1e-11));
    let engine = regularizer::phi(&q).unwrap();
    // fine composite midpoint rule on the closed form
    let m = 400_000;
    let oracle: f64 = (0..m)
        .map(|k| {
            let t = -1.0 + 2.0 * (k as f64 + 0.5) / m as f64;
            let u = |j: usize| v[j] + eps * (t + (1.0 - t * t) * w[j]);
            regularizer::weight(t) * period_two_exponent(u(0), u(1))
        })
        .sum::<f64>()
        * 2.0
        / m as f64;
    assert!((engine.value - oracle).abs() < 1e-8, "{} vs {oracle}", engine.value);
}

#[test]
fn convolution_matches_monte_carlo() {
    let (v, w, eps, delta) = ([0.9, -1.3], [0.2, -0.1], 0.4, 0.3);
    let q = query(&v, &w, eps);
    let engine = regularizer::phi_convolved(&q, delta).unwrap();
    // uniform (a, b, t) on [−δ, δ] × [0, 1] × [−1, 1]
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let samples: Vec<f64> = (0..10_000)
        .map(|_| {
            let a = rng.random_range(-delta..delta);
            let b = rng.random_range(0.0..1.0);
            let t = rng.random_range(-1.0..1.0);
            let u = |j: usize| v[j] + eps * a + eps * (t + (1.0 - t * t) * b * w[j]);
            2.0 * delta * 2.0 * regularizer::weight(t) * period_two_exponent(u(0), u(1))
        })
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let stderr = (var / n).sqrt();
    assert!((engine.value - mean).abs() <= 4.0 * stderr + engine.quad_error, "{engine:?} vs {mean} ± {stderr}");
}

#[test]
fn analyticity_probe_residuals_decay() {
    let grid = regularizer::chebyshev_grid(32);
    let quad = QuadOptions { abs_tol: 1e-11, max_panels: 2000, ..QuadOptions::default() };
    for (v, w, eps) in [(vec![0.3], vec![0.3], 0.4), (vec![1.1, -0.6], vec![0.2, 0.25], 0.3), (vec![-1.8, 0.4, 1.0], vec![0.1, -0.3, 0.2], 0.25)] {
        let q = query(&v, &w, eps).with_quad(quad);
        let fits = regularizer::analyticity_probe(&q, &grid, &[4, 12]).unwrap();
        assert!(fits[0].residual >= 10.0 * fits[1].residual, "{v:?}: {} → {}", fits[0].residual, fits[1].residual);
    }
}

#[test]
fn out_of_ball_directions_are_flagged_not_refused() {
    let q = query(&[0.3], &[0.5], 0.2);
    assert_eq!(regularizer::phi(&q).unwrap().domain_flag, regularizer::DomainFlag::OutOfBall);
    assert!(regularizer::analyticity_probe(&q, &regularizer::chebyshev_grid(8), &[2]).is_err());
}
