//! The acceptance suite: one function per criterion, each returning a
//! pass/fail verdict, a human-readable detail line and a fingerprint of every
//! number it computed (used by the determinism criterion).

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::Hasher;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::base::{BasePoint, BaseSystem, Potential};
use crate::cocycle::{self, Cocycle, LyapunovOptions};
use crate::linalg::{mobius_act, spherical_dist, Mat2, ProjPoint};
use crate::quadrature::{QuadOptions, Sample};
use crate::regularizer::{self, PhiQuery};
use crate::search::{self, SearchOptions, SearchReport};
use crate::spectral::{self, PeriodicPotential};
use crate::uh::{self, Cone, ConeField, BOUNDARY_DIRECTIONS};
use crate::{Error, Result, C64};

/// Seed shared by every seeded criterion.
pub const SUITE_SEED: u64 = 20_240_601;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Hash of the bit patterns of every computed value.
    pub fingerprint: u64,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CriterionOutcome {
    /// `PASS`/`FAIL` line for the summary table.
    pub fn line(&self) -> String {
        let budget =
            if self.budget_seconds.is_finite() { format!("{:.0}s", self.budget_seconds) } else { "no limit".into() };
        format!(
            "[{}] {:>2}. {} ({:.1}s / {budget}): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

#[derive(Default)]
struct Fingerprint(DefaultHasher);

impl Fingerprint {
    fn f(&mut self, x: f64) {
        self.0.write_u64(x.to_bits());
    }

    fn all(&mut self, xs: &[f64]) {
        for &x in xs {
            self.f(x);
        }
    }

    fn n(&mut self, k: usize) {
        self.0.write_usize(k);
    }

    fn finish(&self) -> u64 {
        self.0.finish()
    }
}

struct Verdict {
    passed: bool,
    detail: String,
    print: Fingerprint,
}

fn timed(id: u32, name: &str, budget_seconds: f64, body: impl FnOnce() -> Result<Verdict>) -> CriterionOutcome {
    let start = Instant::now();
    let verdict = body();
    let seconds = start.elapsed().as_secs_f64();
    let (passed, mut detail, fingerprint) = match verdict {
        Ok(v) => (v.passed, v.detail, v.print.finish()),
        Err(e) => (false, format!("error: {e}"), 0),
    };
    let in_time = seconds < budget_seconds;
    if !in_time {
        detail.push_str(&format!("; over the time budget ({seconds:.1}s)"));
    }
    CriterionOutcome {
        id,
        name: name.to_string(),
        passed: passed && in_time,
        detail,
        fingerprint,
        seconds,
        budget_seconds,
    }
}

fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(crate::base::derived_stream(SUITE_SEED, stream))
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn values(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, lo, hi)).collect()
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `ln` of the spectral radius of `[[u, −1], [1, 0]]` from the roots of
/// `λ² − uλ + 1`, independent of the cocycle engine.
fn closed_form_symbol_exponent(u: C64) -> f64 {
    let root = (u * u - 4.0).sqrt();
    let a = (u + root) / 2.0;
    let b = (u - root) / 2.0;
    a.norm().max(b.norm()).ln()
}

/// `∫₋₁¹ (1−t²)/(t⁴+6t²+1) dt` from the factorization `(t² + a)(t² + b)`,
/// `a, b = 3 ± 2√2`.
pub fn weight_mass_partial_fractions() -> f64 {
    let a = 3.0 + 2.0 * 2f64.sqrt();
    let b = 3.0 - 2.0 * 2f64.sqrt();
    let ca = (1.0 + a) / (b - a);
    let cb = -1.0 - ca;
    let piece = |c: f64| 2.0 / c.sqrt() * (1.0 / c.sqrt()).atan();
    ca * piece(a) + cb * piece(b)
}

pub fn weight_normalization<W: Fn(f64) -> f64 + Sync>(weight: W) -> CriterionOutcome {
    timed(1, "weight normalization", 1.0, || {
        let quad = QuadOptions { abs_tol: 1e-14, max_panels: 400, ..QuadOptions::default() };
        let r = regularizer::weighted_integral_with(weight, |_| Ok(Sample::exact(1.0)), &quad)?;
        let oracle = weight_mass_partial_fractions();
        let target = PI / 4.0;
        let mut print = Fingerprint::default();
        print.all(&[r.value, r.error, oracle]);
        Ok(Verdict {
            passed: (r.value - target).abs() <= 1e-10 && (oracle - target).abs() <= 1e-12,
            detail: format!("quadrature {:.15}, partial fractions {oracle:.15}, π/4 {target:.15}", r.value),
            print,
        })
    })
}

pub fn rotation_average() -> CriterionOutcome {
    timed(2, "rotation-average identity", 30.0, || {
        let c = Cocycle::constant(BaseSystem::fixed_point(), Mat2::real(2.0, 0.0, 0.0, 0.5))?;
        let r = cocycle::ab_average_check(&c, 4096, &LyapunovOptions::default())?;
        let target = 1.25f64.ln();
        let mut print = Fingerprint::default();
        print.all(&[r.lhs, r.rhs, r.lhs_error]);
        Ok(Verdict {
            passed: (r.lhs - target).abs() <= 2e-3 && (r.rhs - target).abs() <= 1e-12,
            detail: format!("θ-average {:.6}, right side {:.6}, ln 1.25 = {target:.6}", r.lhs, r.rhs),
            print,
        })
    })
}

pub fn constant_exponents() -> CriterionOutcome {
    timed(3, "constant-cocycle exponents", 10.0, || {
        let golden = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        let mut print = Fingerprint::default();
        let mut worst_rotation = 0.0f64;
        for angle in [0.3, 1.0, 2.0 * PI * crate::base::golden_alpha(), 3.0] {
            let c = Cocycle::constant(BaseSystem::golden_rotation(), Mat2::rotation(angle))?;
            let e = cocycle::lyapunov_birkhoff(&c, 10_000, 16, SUITE_SEED)?;
            print.f(e.value);
            worst_rotation = worst_rotation.max(e.value.abs());
        }
        let e3 = Cocycle::schrodinger(BaseSystem::golden_rotation(), &Potential::constant(0.0), real(3.0))?;
        let birkhoff = cocycle::lyapunov_birkhoff(&e3, 10_000, 16, SUITE_SEED)?;
        let e3 = Cocycle::schrodinger(BaseSystem::fixed_point(), &Potential::constant(0.0), real(3.0))?;
        let exact = cocycle::lyapunov_periodic_exact(&e3)?;
        print.all(&[birkhoff.value, birkhoff.stderr, exact.value]);
        Ok(Verdict {
            passed: worst_rotation <= 1e-6
                && (birkhoff.value - golden).abs() <= 1e-3
                && (exact.value - golden).abs() <= 1e-12,
            detail: format!(
                "rotations max |L| {worst_rotation:.1e}; E = 3: Birkhoff {:.6}, exact {:.12} (target {golden:.12})",
                birkhoff.value, exact.value
            ),
            print,
        })
    })
}

/// Seeded potentials with values in `[−2, 2]`; the `i`-th has period
/// `periods[i % periods.len()]`.
fn seeded_potentials(stream: u64, count: usize, periods: &[usize]) -> Vec<Vec<f64>> {
    let mut r = rng(stream);
    (0..count).map(|i| values(&mut r, periods[i % periods.len()], -2.0, 2.0)).collect()
}

pub fn thouless_consistency() -> CriterionOutcome {
    timed(4, "Thouless consistency", 120.0, || {
        let mut print = Fingerprint::default();
        let mut worst = 0.0f64;
        let potentials = seeded_potentials(4, 20, &[1, 2, 3, 4, 5]);
        for v in &potentials {
            let p = PeriodicPotential::new(v.clone())?;
            let n = spectral::ids(&p);
            let (lo, hi) = p.spectral_window();
            let base = BaseSystem::periodic(v.len());
            let pot = Potential::periodic(v);
            for k in 0..50 {
                let e = (lo - 1.0) + (hi - lo + 2.0) * (k as f64 + 0.5) / 50.0;
                let thouless = spectral::thouless_lyapunov(&n, e);
                let exact = cocycle::lyapunov_periodic_exact(&Cocycle::schrodinger(base.clone(), &pot, real(e))?)?.value;
                print.all(&[thouless, exact]);
                worst = worst.max((thouless - exact).abs());
            }
        }
        Ok(Verdict {
            passed: worst <= 1e-6,
            detail: format!("max |Thouless − exact| = {worst:.2e} over 20 potentials × 50 energies"),
            print,
        })
    })
}

pub fn band_facts() -> CriterionOutcome {
    timed(5, "band facts", 120.0, || {
        let mut print = Fingerprint::default();
        let mut r = rng(5);
        let mut failures = Vec::new();
        let mut worst_slack = f64::INFINITY;
        for i in 0..100 {
            let n = 2 + i % 7;
            // every fourth potential is constant, so all its gaps start closed
            let v = if i % 4 == 0 { vec![uniform(&mut r, -2.0, 2.0); n] } else { values(&mut r, n, -2.0, 2.0) };
            let p = PeriodicPotential::new(v)?;
            let before = spectral::bands(&p, spectral::DEFAULT_RESOLUTION).count();
            let q = spectral::gap_open_perturb(&p, i % n, crate::base::derived_stream(SUITE_SEED, 500 + i as u64))?;
            let s = spectral::bands(&q, spectral::DEFAULT_RESOLUTION);
            let bound = 2.0 * PI / n as f64;
            let longest = s.bands.iter().map(|(a, b)| b - a).fold(0.0, f64::max);
            worst_slack = worst_slack.min(bound - longest);
            let e = spectral::find_hyperbolic_energy(&q)?;
            let t = spectral::discriminant(&q, real(e)).re;
            print.n(before);
            print.all(q.values());
            print.all(&[longest, e, t]);
            let ok = before <= n && s.count() == n && longest <= bound + 1e-9 && e.abs() < 3.0 * PI / n as f64 && t.abs() > 2.0;
            if !ok {
                failures.push(i);
            }
        }
        Ok(Verdict {
            passed: failures.is_empty(),
            detail: format!("{} of 100 potentials violate a band fact {failures:?}; min 2π/n − longest band = {worst_slack:.3e}", failures.len()),
            print,
        })
    })
}

/// Forward and backward invariance of the direction fields at every probe
/// point: `A(x)·u(x) = u(f x)` and `A(x)·s(x) = s(f x)`.
fn invariance_defect(c: &Cocycle, probes: &[BasePoint], steps: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in probes {
        let fx = c.base().step(x)?;
        let a = c.at(x);
        let pairs: [(ProjPoint, ProjPoint); 2] = [
            (uh::unstable_direction(c, x, steps).0, uh::unstable_direction(c, &fx, steps).0),
            (uh::stable_direction(c, x, steps).0, uh::stable_direction(c, &fx, steps).0),
        ];
        for (here, there) in pairs {
            worst = worst.max(spherical_dist(&mobius_act(&a, &here), &there));
        }
    }
    Ok(worst)
}

pub fn conefield() -> CriterionOutcome {
    timed(6, "conefield criterion", 30.0, || {
        let mut print = Fingerprint::default();
        let imaginary = Cocycle::with_symbol(BaseSystem::fixed_point(), Potential::Constant(C64::i()))?;
        let cert = uh::certify_uh(&imaginary, &ConeField::hemisphere(), 8, BOUNDARY_DIRECTIONS, SUITE_SEED)?;
        let steps_ok = cert.steps == 2;
        let free = Cocycle::schrodinger(BaseSystem::fixed_point(), &Potential::constant(0.0), real(0.0))?;
        let free_fails = matches!(
            uh::certify_uh(&free, &ConeField::hemisphere(), 16, BOUNDARY_DIRECTIONS, SUITE_SEED),
            Err(Error::NoContraction { .. })
        );
        let certified: Vec<(Cocycle, ConeField)> = vec![
            (imaginary, ConeField::hemisphere()),
            (
                Cocycle::with_symbol(BaseSystem::periodic(2), Potential::periodic_complex(vec![C64::new(0.3, 0.8), C64::new(-1.0, 0.5)]))?,
                ConeField::hemisphere(),
            ),
            (
                Cocycle::with_symbol(
                    BaseSystem::periodic(3),
                    Potential::periodic_complex(vec![C64::new(1.5, 0.6), C64::new(-0.4, 1.2), C64::new(0.0, 0.5)]),
                )?,
                ConeField::hemisphere(),
            ),
            (
                Cocycle::constant(BaseSystem::fixed_point(), Mat2::real(2.0, 0.0, 0.0, 0.5))?,
                ConeField::Constant { cone: Cone::new(ProjPoint::infinity(), 0.3)? },
            ),
            (
                Cocycle::schrodinger(BaseSystem::periodic(2), &Potential::periodic(&[0.0, 3.0]), real(1.5))?,
                ConeField::Constant { cone: Cone::new(ProjPoint::real(1.0, 0.0)?, 0.5)? },
            ),
        ];
        let mut worst_invariance = 0.0f64;
        let mut worst_duality = 0.0f64;
        let mut uncertified = 0;
        for (c, cone) in &certified {
            let Ok(cert) = uh::certify_uh(c, cone, 16, BOUNDARY_DIRECTIONS, SUITE_SEED) else {
                uncertified += 1;
                continue;
            };
            let exact = uh::lyapunov_uh_exact(c, &cert, &crate::base::IntegrationScheme::Exact)?;
            let probes: Vec<BasePoint> = cert.unstable.iter().map(|(x, _)| *x).collect();
            let inv = invariance_defect(c, &probes, exact.direction_steps)?;
            print.n(cert.steps);
            print.all(&[cert.margin, exact.estimate.value, exact.dual, inv]);
            worst_invariance = worst_invariance.max(inv);
            worst_duality = worst_duality.max(exact.discrepancy);
        }
        Ok(Verdict {
            passed: steps_ok && free_fails && uncertified == 0 && worst_invariance <= 1e-8 && worst_duality <= 1e-8,
            detail: format!(
                "v ≡ i certified at n = {}; free E = 0 rejected: {free_fails}; {uncertified} uncertified; invariance {worst_invariance:.1e}, duality {worst_duality:.1e}",
                cert.steps
            ),
            print,
        })
    })
}

pub fn harmonicity() -> CriterionOutcome {
    timed(7, "subharmonicity / harmonicity", 60.0, || {
        let mut print = Fingerprint::default();
        let opts = LyapunovOptions::default();
        // (level c, disk centre, radius) for the family z ↦ symbol z − c
        let uh_disks = [(0.0, C64::new(5.0, 0.0), 0.5), (1.0, C64::new(-0.5, 1.5), 1.0), (-0.7, C64::new(2.0, -3.0), 2.5), (0.0, C64::new(-4.0, 0.5), 1.5)];
        let crossing = [(0.0, C64::new(0.0, 0.0), 1.0), (0.5, C64::new(1.5, 0.0), 0.8), (0.0, C64::new(2.0, 0.1), 0.5), (-1.0, C64::new(0.0, 0.3), 2.0)];
        let probe = |level: f64, z0: C64, r: f64| {
            let family = move |z: C64| Cocycle::with_symbol(BaseSystem::fixed_point(), Potential::Constant(z - level));
            uh::harmonicity_probe(family, z0, r, 128, &opts)
        };
        let mut worst_uh = 0.0f64;
        let mut worst_oracle = 0.0f64;
        for &(level, z0, r) in &uh_disks {
            let p = probe(level, z0, r)?;
            print.all(&[p.center_value, p.circle_mean]);
            worst_uh = worst_uh.max(p.defect.abs());
            worst_oracle = worst_oracle.max((p.center_value - closed_form_symbol_exponent(z0 - level)).abs());
        }
        let mut min_crossing = f64::INFINITY;
        let mut max_crossing = f64::NEG_INFINITY;
        for &(level, z0, r) in &crossing {
            let p = probe(level, z0, r)?;
            print.all(&[p.center_value, p.circle_mean]);
            min_crossing = min_crossing.min(p.defect);
            max_crossing = max_crossing.max(p.defect);
            worst_oracle = worst_oracle.max((p.center_value - closed_form_symbol_exponent(z0 - level)).abs());
        }
        Ok(Verdict {
            passed: worst_uh <= 1e-6 && min_crossing >= -1e-6 && max_crossing > 1e-6 && worst_oracle <= 1e-12,
            detail: format!(
                "UH disks max |defect| {worst_uh:.1e}; crossing disks defect in [{min_crossing:.2e}, {max_crossing:.2e}]; centre vs closed form {worst_oracle:.1e}"
            ),
            print,
        })
    })
}

fn periodic_query(r: &mut ChaCha8Rng, w_max: f64) -> PhiQuery {
    let n = 1 + (r.random::<u32>() % 3) as usize;
    let v = values(r, n, -2.5, 2.5);
    let w = values(r, n, -w_max, w_max);
    let eps = uniform(r, 0.05, 0.5);
    PhiQuery::new(BaseSystem::periodic(n), Potential::periodic(&v), Potential::periodic(&w), eps)
}

pub fn boundary_identity() -> CriterionOutcome {
    timed(8, "boundary identity", 300.0, || {
        let mut print = Fingerprint::default();
        let mut r = rng(8);
        let mut worst_ratio = 0.0f64;
        let mut failures = 0;
        for _ in 0..20 {
            // boundary domain ‖w‖ < η/2 = 1/2
            let q = periodic_query(&mut r, 0.45);
            let a = regularizer::phi(&q)?;
            let b = regularizer::phi_boundary(&q)?;
            let diff = (a.value - b.value).abs();
            let allowed = 2.0 * (a.quad_error + b.quad_error);
            print.all(&[a.value, a.quad_error, b.value, b.quad_error]);
            worst_ratio = worst_ratio.max(diff / allowed);
            if diff > allowed {
                failures += 1;
            }
        }
        let uh_levels: [&[f64]; 5] = [&[-5.0], &[4.5], &[-4.0, -5.5], &[4.2, 5.0], &[-4.5, -5.0, -6.0]];
        let mut worst_defect = 0.0f64;
        for (k, v) in uh_levels.iter().enumerate() {
            let w: Vec<f64> = (0..v.len()).map(|j| 0.1 * (j as f64 - 0.5 * k as f64)).collect();
            let q = PhiQuery::new(BaseSystem::periodic(v.len()), Potential::periodic(v), Potential::periodic(&w), 0.2);
            let p = regularizer::poisson_check(&q)?;
            print.all(&[p.center, p.boundary_mean]);
            worst_defect = worst_defect.max(p.defect.abs());
        }
        Ok(Verdict {
            passed: failures == 0 && worst_defect <= 1e-6,
            detail: format!(
                "{failures} of 20 queries outside 2× combined error (worst diff/allowed {worst_ratio:.2}); Poisson max |defect| {worst_defect:.1e}"
            ),
            print,
        })
    })
}

pub fn positivity_propagation() -> CriterionOutcome {
    timed(9, "positivity propagation", 120.0, || {
        let mut print = Fingerprint::default();
        let mut r = rng(9);
        let mut failures = 0;
        let mut accepted = 0;
        let mut drawn = 0;
        let mut min_ratio = f64::INFINITY;
        while accepted < 20 {
            drawn += 1;
            let q = periodic_query(&mut r, 1.0);
            let start = cocycle::lyapunov_periodic_exact(&Cocycle::with_symbol(q.base.clone(), q.symbol(C64::new(0.0, 0.0))?)?)?;
            if !(start.value > 0.01) {
                continue;
            }
            accepted += 1;
            let p = regularizer::phi(&q)?;
            print.all(&[start.value, p.value, p.quad_error]);
            min_ratio = min_ratio.min(p.value / p.quad_error.max(f64::MIN_POSITIVE));
            if !(p.value > 3.0 * p.quad_error) {
                failures += 1;
            }
        }
        print.n(drawn);
        Ok(Verdict {
            passed: failures == 0,
            detail: format!("{failures} of 20 cases (from {drawn} draws) without Φ > 3·error; min Φ/error {min_ratio:.2e}"),
            print,
        })
    })
}

pub fn analyticity() -> CriterionOutcome {
    timed(10, "analyticity probe", 300.0, || {
        let mut print = Fingerprint::default();
        let mut r = rng(10);
        let grid = regularizer::chebyshev_grid(32);
        let quad = QuadOptions { abs_tol: 1e-11, max_panels: 2000, ..QuadOptions::default() };
        let mut worst_drop = f64::INFINITY;
        for _ in 0..10 {
            let n = 1 + (r.random::<u32>() % 3) as usize;
            let v = values(&mut r, n, -2.0, 2.0);
            let mut w = values(&mut r, n, -1.0, 1.0);
            // scale into the ball of radius 2^{−3/2} ≈ 0.354
            let norm = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let target = uniform(&mut r, 0.1, 0.3);
            w.iter_mut().for_each(|x| *x *= target / norm);
            let eps = uniform(&mut r, 0.1, 0.5);
            let q = PhiQuery::new(BaseSystem::periodic(n), Potential::periodic(&v), Potential::periodic(&w), eps).with_quad(quad);
            let fits = regularizer::analyticity_probe(&q, &grid, &[4, 12])?;
            for f in &fits {
                print.all(&f.coefficients);
                print.f(f.residual);
            }
            worst_drop = worst_drop.min(fits[0].residual / fits[1].residual);
        }
        Ok(Verdict {
            passed: worst_drop >= 10.0,
            detail: format!("smallest residual drop from degree 4 to 12: {worst_drop:.1}×"),
            print,
        })
    })
}

fn search_print(print: &mut Fingerprint, r: &SearchReport) {
    print.n(r.phi_evaluations);
    print.f(r.perturbation_norm);
    if let Some(p) = &r.point {
        print.all(&[p.epsilon, p.t, p.s]);
        print.all(&p.coefficients);
    }
    for e in [&r.lyapunov_at_result, &r.reverified].into_iter().flatten() {
        print.all(&[e.value, e.stderr]);
    }
}

fn search_verdict(r: &SearchReport) -> (bool, String) {
    let reverified = r.reverified.as_ref();
    let ok = r.found && reverified.is_some_and(|e| e.value > 3.0 * e.stderr) && r.perturbation_norm < 0.5;
    let detail = match reverified {
        Some(e) => format!(
            "found {}, re-verified L = {:.4} ± {:.1e}, perturbation {:.4}, {} Φ evaluations",
            r.found, e.value, e.stderr, r.perturbation_norm, r.phi_evaluations
        ),
        None => format!("found {}, outcome {:?}, {} Φ evaluations", r.found, r.outcome, r.phi_evaluations),
    };
    (ok, detail)
}

pub fn density_search_schrodinger() -> CriterionOutcome {
    timed(11, "density search (Schrödinger)", 600.0, || {
        let r = search::search_positive_schrodinger(
            &BaseSystem::golden_rotation(),
            &Potential::constant(0.0),
            0.0,
            0.5,
            &search::cosine_basis(6),
            &SearchOptions::default(),
        )?;
        let mut print = Fingerprint::default();
        search_print(&mut print, &r);
        let (passed, detail) = search_verdict(&r);
        Ok(Verdict { passed, detail, print })
    })
}

pub fn density_search_general() -> CriterionOutcome {
    timed(11, "density search (general cocycle)", 600.0, || {
        let base = BaseSystem::golden_rotation();
        let a = search::resonant_rotation_cocycle(&base)?;
        let r = search::search_positive_general(&a, 0.5, &search::general_basis(3), &SearchOptions::default())?;
        let mut print = Fingerprint::default();
        search_print(&mut print, &r);
        let (passed, detail) = search_verdict(&r);
        Ok(Verdict { passed, detail, print })
    })
}

pub fn quantita_demo() -> CriterionOutcome {
    timed(12, "quantitative scan", 120.0, || {
        let mut print = Fingerprint::default();
        let mut r = rng(12);
        let base = BaseSystem::periodic(2);
        let opts = LyapunovOptions::default();
        for attempt in 0..100 {
            let v = Potential::periodic(&values(&mut r, 2, -2.0, 2.0));
            let w = Potential::periodic(&values(&mut r, 2, -0.3, 0.3));
            let eps = uniform(&mut r, 0.1, 0.5);
            let scan = match search::quantita_scan(&base, &v, &w, eps, 64, 256, &opts) {
                Err(Error::Precondition(_)) => continue,
                other => other?,
            };
            print.n(attempt);
            for row in &scan.values {
                print.all(row);
            }
            print.f(scan.fraction);
            return Ok(Verdict {
                passed: scan.fraction >= 0.9,
                detail: format!("instance {attempt} (ε = {eps:.3}): fraction {:.4} on 64×256", scan.fraction),
                print,
            });
        }
        Err(Error::NotFound)
    })
}

/// Criteria 1–12, in order (criterion 11 contributes two lines).
pub fn run_numbered() -> Vec<CriterionOutcome> {
    vec![
        weight_normalization(regularizer::weight),
        rotation_average(),
        constant_exponents(),
        thouless_consistency(),
        band_facts(),
        conefield(),
        harmonicity(),
        boundary_identity(),
        positivity_propagation(),
        analyticity(),
        density_search_schrodinger(),
        density_search_general(),
        quantita_demo(),
    ]
}

/// Reruns criteria 1–12 in a pool with a different thread count and compares
/// fingerprints with `reference`.
pub fn determinism(reference: &[CriterionOutcome]) -> CriterionOutcome {
    timed(13, "determinism across thread counts", f64::INFINITY, || {
        let threads = if rayon::current_num_threads() == 3 { 2 } else { 3 };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        let rerun = pool.install(run_numbered);
        let mismatched: Vec<String> = reference
            .iter()
            .zip(&rerun)
            .filter(|(a, b)| a.fingerprint != b.fingerprint || a.fingerprint == 0)
            .map(|(a, _)| format!("{} ({})", a.id, a.name))
            .collect();
        let mut print = Fingerprint::default();
        rerun.iter().for_each(|o| print.n(o.fingerprint as usize));
        Ok(Verdict {
            passed: mismatched.is_empty() && reference.len() == rerun.len(),
            detail: format!(
                "{} vs {threads} threads: {}",
                rayon::current_num_threads(),
                if mismatched.is_empty() { "all fingerprints identical".to_string() } else { format!("mismatch in {}", mismatched.join(", ")) }
            ),
            print,
        })
    })
}

/// The full suite, criterion 13 last.
pub fn run_all() -> Vec<CriterionOutcome> {
    let mut outcomes = run_numbered();
    let det = determinism(&outcomes);
    outcomes.push(det);
    outcomes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_fraction_mass_is_quarter_pi() {
        assert!((weight_mass_partial_fractions() - PI / 4.0).abs() < 1e-14);
    }

    #[test]
    fn corrupted_weight_fails_normalization() {
        assert!(weight_normalization(regularizer::weight).passed);
        assert!(!weight_normalization(|t| 1.001 * regularizer::weight(t)).passed);
        assert!(!weight_normalization(|t| (1.0 - t * t) / (t.powi(4) + 6.0 * t * t + 1.1)).passed);
    }

    #[test]
    fn closed_form_exponent_examples() {
        assert!((closed_form_symbol_exponent(real(3.0)) - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-15);
        assert_eq!(closed_form_symbol_exponent(real(1.0)), 0.0);
    }
}
