use std::f64::consts::PI;

use lyap_core::base::{BasePoint, BaseSystem, Potential};
use lyap_core::cocycle::{self, Cocycle};
use lyap_core::spectral::{self, PeriodicPotential, DEFAULT_RESOLUTION};
use proptest::prelude::*;

fn potential() -> impl Strategy<Value = Vec<f64>> {
    (1usize..=6).prop_flat_map(|n| proptest::collection::vec(-2.5..2.5f64, n))
}

/// Eigenvalues of the Dirichlet truncation of size `size` below `e`, from the
/// signs of the LDLᵀ pivots of `H − e` (Sylvester's law of inertia).
fn count_below(v: &[f64], size: usize, e: f64) -> usize {
    let mut pivot = 1.0;
    let mut count = 0;
    for j in 0..size {
        let diag = v[j % v.len()] - e;
        pivot = if j == 0 { diag } else { diag - 1.0 / pivot };
        if pivot == 0.0 {
            pivot = 1e-300;
        }
        if pivot < 0.0 {
            count += 1;
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bands_are_ordered_and_bounded(v in potential()) {
        let n = v.len();
        let p = PeriodicPotential::new(v).unwrap();
        let s = spectral::bands(&p, DEFAULT_RESOLUTION);
        prop_assert!(s.count() >= 1 && s.count() <= n);
        prop_assert_eq!(s.floquet.len(), n);
        for w in s.bands.windows(2) {
            prop_assert!(w[0].1 < w[1].0);
        }
        for &(a, b) in &s.floquet {
            prop_assert!(a <= b && b - a <= 2.0 * PI / n as f64 + 1e-9);
            // the discriminant is ±2 at Floquet band edges
            prop_assert!((spectral::discriminant(&p, a.into()).re.abs() - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn discriminant_is_the_trace_of_the_cocycle_product(v in potential(), e in -4.0..4.0f64) {
        let p = PeriodicPotential::new(v.clone()).unwrap();
        let c = Cocycle::schrodinger(BaseSystem::periodic(v.len()), &Potential::periodic(&v), e.into()).unwrap();
        let m = c.product(&BasePoint::Periodic { orbit: 0, phase: 0 }, v.len()).unwrap();
        let t = spectral::discriminant(&p, e.into());
        prop_assert!((t - m.trace()).norm() <= 1e-10 * (1.0 + t.norm()));
    }

    #[test]
    fn ids_is_a_distribution_function(v in potential(), mut es in proptest::collection::vec(-6.0..6.0f64, 8)) {
        let n = v.len();
        let p = PeriodicPotential::new(v).unwrap();
        let ids = spectral::ids(&p);
        es.sort_by(f64::total_cmp);
        let values: Vec<f64> = es.iter().map(|&e| ids.n_at(e)).collect();
        for w in values.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-15);
        }
        prop_assert!(values.iter().all(|&x| (0.0..=1.0).contains(&x)));
        // N equals k/n in the k-th gap
        let s = spectral::bands(&p, DEFAULT_RESOLUTION);
        for (k, (a, b)) in s.floquet.windows(2).map(|w| (w[0].1, w[1].0)).enumerate() {
            if b - a > 1e-6 {
                prop_assert!((ids.n_at(0.5 * (a + b)) - (k + 1) as f64 / n as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ids_matches_eigenvalue_counting(v in potential(), e in -4.0..4.0f64) {
        let size = 840; // divisible by every period up to 6
        let ids = spectral::ids(&PeriodicPotential::new(v.clone()).unwrap());
        let counted = count_below(&v, size, e) as f64 / size as f64;
        // a Dirichlet truncation misses at most one eigenvalue per band
        prop_assert!((ids.n_at(e) - counted).abs() <= (v.len() + 1) as f64 / size as f64, "{} vs {counted}", ids.n_at(e));
    }

    #[test]
    fn thouless_formula_matches_transfer_matrices(v in potential(), e in -5.0..5.0f64) {
        let ids = spectral::ids(&PeriodicPotential::new(v.clone()).unwrap());
        let c = Cocycle::schrodinger(BaseSystem::periodic(v.len()), &Potential::periodic(&v), e.into()).unwrap();
        let exact = cocycle::lyapunov_periodic_exact(&c).unwrap().value;
        prop_assert!((spectral::thouless_lyapunov(&ids, e) - exact).abs() < 1e-6);
    }

    #[test]
    fn gap_opening_yields_all_bands(v in potential(), seed in 0u64..1000) {
        let n = v.len();
        prop_assume!(n >= 2);
        let p = PeriodicPotential::new(v).unwrap();
        let q = spectral::gap_open_perturb(&p, (seed as usize) % n, seed).unwrap();
        let moved: f64 = p.values().iter().zip(q.values()).map(|(a, b)| (a - b).abs()).sum();
        prop_assert!(moved < 0.05);
        prop_assert_eq!(spectral::bands(&q, DEFAULT_RESOLUTION).count(), n);
        let e = spectral::find_hyperbolic_energy(&q).unwrap();
        prop_assert!(e.abs() < 3.0 * PI / n as f64);
        prop_assert!(spectral::discriminant(&q, e.into()).re.abs() > 2.0);
    }
}

#[test]
fn constant_potentials_have_closed_gaps() {
    for n in 2..=8 {
        let p = PeriodicPotential::new(vec![0.7; n]).unwrap();
        let s = spectral::bands(&p, DEFAULT_RESOLUTION);
        assert_eq!(s.count(), 1, "n = {n}");
        assert!((s.bands[0].0 + 1.3).abs() < 1e-9 && (s.bands[0].1 - 2.7).abs() < 1e-9);
    }
}
