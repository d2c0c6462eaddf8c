//! Uniform hyperbolicity: conefield certificates, invariant directions by
//! projective iteration and the exponent as the integral of the expansion
//! along the unstable direction.
//!
//! Certificates are numerical: cone images are checked on discretized cone
//! boundaries at finitely many base points, not with validated enclosures.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::{BasePoint, BaseSystem, IntegrationScheme};
use crate::cocycle::{self, Cocycle, LyapunovEstimate, LyapunovMethod, LyapunovOptions};
use crate::error::{Error, Result};
use crate::linalg::{expansion_coeff, mobius_act, spherical_dist, Mat2, ProjPoint};
use crate::numeric;

/// Boundary directions checked per cone.
pub const BOUNDARY_DIRECTIONS: usize = 64;
const MARGIN_FLOOR: f64 = 1e-12;
const DIRECTION_TOL: f64 = 1e-10;
const INITIAL_DIRECTION_STEPS: usize = 64;
const MAX_DIRECTION_STEPS: usize = 1 << 14;

/// A chordal disk `{m : d(m, center) < radius}` in ℂP¹.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cone {
    pub center: ProjPoint,
    pub radius: f64,
}

impl Cone {
    pub fn new(center: ProjPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(Error::InvalidInput(format!("cone radius {radius} outside (0, 1)")));
        }
        Ok(Self { center, radius })
    }

    /// The cone of directions `x/y` in the upper half plane: centred on
    /// `(i, 1)` with radius `1/√2`, so that its boundary is ℝP¹.
    pub fn hemisphere() -> Self {
        Self { center: ProjPoint::new(C64::i(), C64::new(1.0, 0.0)).expect("nonzero"), radius: FRAC_1_SQRT_2 }
    }

    /// `radius − d(center, m)`; positive exactly inside the cone.
    pub fn margin(&self, m: &ProjPoint) -> f64 {
        self.radius - spherical_dist(&self.center, m)
    }

    /// `√(1 − r²)·c + r·e^{iφ}·c⊥`, the boundary point at angle `φ`.
    pub fn boundary_point(&self, phi: f64) -> ProjPoint {
        self.circle_point(self.radius, phi)
    }

    fn circle_point(&self, r: f64, phi: f64) -> ProjPoint {
        let c = self.center.coords();
        let perp = self.center.orthogonal().coords();
        let a = (1.0 - r * r).sqrt();
        let e = C64::from_polar(r, phi);
        ProjPoint::new(c[0] * a + perp[0] * e, c[1] * a + perp[1] * e).expect("unit combination")
    }

    /// Directions sampled from the closed cone: `directions` boundary points,
    /// half as many on the half-radius circle, and the center.
    pub fn sample_closure(&self, directions: usize) -> Vec<ProjPoint> {
        let mut out: Vec<ProjPoint> = (0..directions)
            .map(|k| self.boundary_point(2.0 * PI * k as f64 / directions as f64))
            .collect();
        let inner = (directions / 2).max(1);
        out.extend((0..inner).map(|k| self.circle_point(0.5 * self.radius, 2.0 * PI * (k as f64 + 0.5) / inner as f64)));
        out.push(self.center);
        out
    }
}

/// A cone at every base point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConeField {
    Constant { cone: Cone },
    /// Cones at the orbit points of a periodic base.
    Table { cones: Vec<(BasePoint, Cone)> },
}

impl ConeField {
    pub fn hemisphere() -> Self {
        ConeField::Constant { cone: Cone::hemisphere() }
    }

    pub fn cone_at(&self, x: &BasePoint) -> Option<Cone> {
        match self {
            ConeField::Constant { cone } => Some(*cone),
            ConeField::Table { cones } => cones.iter().find(|(p, _)| p == x).map(|(_, c)| *c),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            ConeField::Constant { cone } => cone.radius > 0.0 && cone.radius < 1.0,
            ConeField::Table { cones } => !cones.is_empty() && cones.iter().all(|(_, c)| c.radius > 0.0 && c.radius < 1.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("cone radii must lie in (0, 1)".into()))
        }
    }
}

/// Outcome of a successful conefield search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UhCertificate {
    pub steps: usize,
    pub cone: ConeField,
    /// Smallest `radius − distance` over all probed image directions.
    pub margin: f64,
    pub probe_count: usize,
    /// `exp(min_x (1/n) λ(A_n(x), u(x)))` over probe points: a heuristic
    /// per-step expansion rate, not a rigorous constant.
    pub lambda_lower: f64,
    pub unstable: Vec<(BasePoint, ProjPoint)>,
    pub stable: Vec<(BasePoint, ProjPoint)>,
    /// Smallest `d(u(x), s(x))` over the probe points.
    pub separation: f64,
    pub direction_residual: f64,
    /// Always true: the certificate is sampled, not validated.
    pub numerical: bool,
}

/// Searches `n ≤ n_max` such that `A_n(x)` maps the sampled closure of the
/// cone at `x` strictly inside the cone at `f^n(x)` for every probe point.
pub fn certify_uh(c: &Cocycle, cone0: &ConeField, n_max: usize, directions: usize, seed: u64) -> Result<UhCertificate> {
    cone0.validate()?;
    let base = c.base();
    let probes = base.probe_points(seed);
    let sources: Vec<(BasePoint, Vec<ProjPoint>)> = probes
        .iter()
        .map(|x| {
            let cone = cone0.cone_at(x).ok_or_else(|| Error::InvalidInput(format!("no cone at probe point {x:?}")))?;
            Ok((*x, cone.sample_closure(directions.max(4))))
        })
        .collect::<Result<_>>()?;
    let mut products: Vec<Mat2> = vec![Mat2::identity(); probes.len()];
    let mut best = f64::NEG_INFINITY;
    for n in 1..=n_max {
        let rows: Vec<(Mat2, f64)> = sources
            .par_iter()
            .zip(products.par_iter())
            .map(|((x, dirs), prev)| {
                let a = c.at(&base.advance(x, n as i64 - 1)) * *prev;
                let a = a.scale_real(1.0 / a.frobenius_norm());
                let target = cone0.cone_at(&base.advance(x, n as i64));
                let margin = match target {
                    Some(t) => dirs.iter().map(|m| t.margin(&mobius_act(&a, m))).fold(f64::INFINITY, f64::min),
                    None => f64::NEG_INFINITY,
                };
                (a, margin)
            })
            .collect();
        products = rows.iter().map(|r| r.0).collect();
        let margin = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        best = best.max(margin);
        if margin > MARGIN_FLOOR {
            return build_certificate(c, cone0.clone(), n, margin, &probes);
        }
    }
    Err(Error::NoContraction { n_max, best_margin: best })
}

fn build_certificate(c: &Cocycle, cone: ConeField, n: usize, margin: f64, probes: &[BasePoint]) -> Result<UhCertificate> {
    let steps = converged_steps(c, probes)?;
    let dirs: Vec<(ProjPoint, ProjPoint, f64)> = probes
        .par_iter()
        .map(|x| {
            let (u, ru) = unstable_direction(c, x, steps);
            let (s, rs) = stable_direction(c, x, steps);
            (u, s, ru.max(rs))
        })
        .collect();
    let rates: Vec<f64> = probes
        .par_iter()
        .zip(dirs.par_iter())
        .map(|(x, (u, _, _))| {
            let a = c.product(x, n).unwrap_or_else(|_| Mat2::identity());
            expansion_coeff(&a, u) / n as f64
        })
        .collect();
    Ok(UhCertificate {
        steps: n,
        cone,
        margin,
        probe_count: probes.len(),
        lambda_lower: rates.iter().copied().fold(f64::INFINITY, f64::min).exp(),
        unstable: probes.iter().zip(&dirs).map(|(x, d)| (*x, d.0)).collect(),
        stable: probes.iter().zip(&dirs).map(|(x, d)| (*x, d.1)).collect(),
        separation: dirs.iter().map(|d| spherical_dist(&d.0, &d.1)).fold(f64::INFINITY, f64::min),
        direction_residual: dirs.iter().map(|d| d.2).fold(0.0, f64::max),
        numerical: true,
    })
}

/// A fixed seed direction in general position with respect to real and
/// rational-slope invariant lines.
fn seed_direction() -> ProjPoint {
    ProjPoint::new(C64::new(0.612_372, 0.183_917), C64::new(0.769_514, -0.054_613)).expect("nonzero")
}

fn push_forward(c: &Cocycle, x: &BasePoint, n: usize) -> ProjPoint {
    let base = c.base();
    let mut y = base.advance(x, -(n as i64));
    let mut m = seed_direction();
    for _ in 0..n {
        m = mobius_act(&c.at(&y), &m);
        y = base.advance(&y, 1);
    }
    m
}

fn pull_back(c: &Cocycle, x: &BasePoint, n: usize) -> ProjPoint {
    let base = c.base();
    let mut m = seed_direction();
    for k in (0..n as i64).rev() {
        m = mobius_act(&c.at(&base.advance(x, k)).inverse(), &m);
    }
    m
}

/// `A_n(f^{−n}x)·m₀` for a fixed generic `m₀`. The residual is the larger of
/// the distances to the `n/2` and `n − 1` iterates, so that periodic
/// projective orbits are not mistaken for convergence.
pub fn unstable_direction(c: &Cocycle, x: &BasePoint, n: usize) -> (ProjPoint, f64) {
    let n = n.max(2);
    let u = push_forward(c, x, n);
    let residual = spherical_dist(&u, &push_forward(c, x, n / 2)).max(spherical_dist(&u, &push_forward(c, x, n - 1)));
    (u, residual)
}

/// `A_n(x)⁻¹·m₀`, the mirror of [`unstable_direction`].
pub fn stable_direction(c: &Cocycle, x: &BasePoint, n: usize) -> (ProjPoint, f64) {
    let n = n.max(2);
    let s = pull_back(c, x, n);
    let residual = spherical_dist(&s, &pull_back(c, x, n / 2)).max(spherical_dist(&s, &pull_back(c, x, n - 1)));
    (s, residual)
}

/// Smallest power-of-two iterate count (from 64) at which both direction
/// fields converge to 1e−10 at every probe point.
fn converged_steps(c: &Cocycle, probes: &[BasePoint]) -> Result<usize> {
    let mut n = INITIAL_DIRECTION_STEPS;
    loop {
        let residual = probes
            .par_iter()
            .map(|x| unstable_direction(c, x, n).1.max(stable_direction(c, x, n).1))
            .reduce(|| 0.0, f64::max);
        if residual <= DIRECTION_TOL {
            return Ok(n);
        }
        if n >= MAX_DIRECTION_STEPS {
            return Err(Error::DirectionsUnconverged { residual });
        }
        n *= 2;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UhExact {
    pub estimate: LyapunovEstimate,
    /// `−∫ λ(A(x), s(x)) dμ`, which equals the exponent as well.
    pub dual: f64,
    pub discrepancy: f64,
    /// Error of the μ-integration (zero on periodic bases).
    pub integration_error: f64,
    pub direction_steps: usize,
}

/// `L(A) = ∫ λ(A(x), u(x)) dμ` on a certified cocycle.
pub fn lyapunov_uh_exact(c: &Cocycle, cert: &UhCertificate, scheme: &IntegrationScheme) -> Result<UhExact> {
    if !(cert.margin > 0.0) {
        return Err(Error::Precondition("the certificate has no positive margin".into()));
    }
    let base = c.base();
    let probes: Vec<BasePoint> = cert.unstable.iter().map(|(x, _)| *x).collect();
    let steps = converged_steps(c, &probes)?;
    let forward = base.integrate(|x| expansion_coeff(&c.at(x), &unstable_direction(c, x, steps).0), scheme)?;
    let backward = base.integrate(|x| expansion_coeff(&c.at(x), &stable_direction(c, x, steps).0), scheme)?;
    let (n, samples) = match scheme {
        IntegrationScheme::Exact => (steps, base.periodic_points().len()),
        IntegrationScheme::Birkhoff { n, .. } => (steps, *n),
        IntegrationScheme::MonteCarlo { samples, .. } => (steps, *samples),
    };
    Ok(UhExact {
        estimate: LyapunovEstimate { value: forward.value, stderr: 0.0, method: LyapunovMethod::UhExact, n, samples },
        dual: -backward.value,
        discrepancy: (forward.value + backward.value).abs(),
        integration_error: forward.error.max(backward.error),
        direction_steps: steps,
    })
}

/// The natural integration scheme for a base.
pub fn default_scheme(base: &BaseSystem, opts: &LyapunovOptions) -> IntegrationScheme {
    match base {
        BaseSystem::PeriodicOrbits { .. } => IntegrationScheme::Exact,
        BaseSystem::CircleRotation { .. } => IntegrationScheme::Birkhoff { n: opts.n, seed: opts.seed },
        BaseSystem::BernoulliShift { .. } => IntegrationScheme::MonteCarlo { samples: opts.samples, seed: opts.seed },
    }
}

/// The most accurate exponent available: the exact periodic formula, then a
/// hemisphere-certified UH integral, then the Birkhoff estimator.
pub fn lyapunov_best(c: &Cocycle, opts: &LyapunovOptions) -> Result<LyapunovEstimate> {
    if cocycle::has_exact_formula(c) {
        return cocycle::lyapunov_periodic_exact(c);
    }
    if let Ok(cert) = certify_uh(c, &ConeField::hemisphere(), 8, BOUNDARY_DIRECTIONS, opts.seed) {
        if let Ok(r) = lyapunov_uh_exact(c, &cert, &default_scheme(c.base(), opts)) {
            return Ok(LyapunovEstimate { stderr: r.integration_error, ..r.estimate });
        }
    }
    cocycle::lyapunov_birkhoff(c, opts.n, opts.samples, opts.seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicityProbe {
    pub center_value: f64,
    pub circle_mean: f64,
    /// `circle_mean − center_value`; nonnegative for subharmonic functions.
    pub defect: f64,
}

/// Compares `L(family(z₀))` with its mean over the circle `|z − z₀| = r`
/// (trapezoidal rule on `circle_nodes` equispaced nodes).
pub fn harmonicity_probe<F>(family: F, z0: C64, radius: f64, circle_nodes: usize, opts: &LyapunovOptions) -> Result<HarmonicityProbe>
where
    F: Fn(C64) -> Result<Cocycle> + Sync,
{
    if circle_nodes == 0 {
        return Err(Error::InvalidInput("need at least one circle node".into()));
    }
    let center_value = lyapunov_best(&family(z0)?, opts)?.value;
    let values: Vec<f64> = (0..circle_nodes)
        .into_par_iter()
        .map(|k| {
            let z = z0 + C64::from_polar(radius, 2.0 * PI * k as f64 / circle_nodes as f64);
            Ok(lyapunov_best(&family(z)?, opts)?.value)
        })
        .collect::<Result<_>>()?;
    let circle_mean = numeric::sum(values) / circle_nodes as f64;
    Ok(HarmonicityProbe { center_value, circle_mean, defect: circle_mean - center_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::Potential;

    fn real(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn hemisphere_boundary_is_the_real_line() {
        let h = Cone::hemisphere();
        for t in [-3.0, -0.2, 0.0, 0.7, 12.0] {
            let m = ProjPoint::real(t, 1.0).unwrap();
            assert!(h.margin(&m).abs() < 1e-15);
        }
        assert!(h.margin(&ProjPoint::infinity()).abs() < 1e-15);
        assert!(h.margin(&ProjPoint::from_chart_value(C64::new(0.3, 0.1))) > 0.0);
        assert!(h.margin(&ProjPoint::from_chart_value(C64::new(0.3, -0.1))) < 0.0);
        let dirs = h.sample_closure(BOUNDARY_DIRECTIONS);
        let has = |target: ProjPoint| dirs.iter().any(|d| spherical_dist(d, &target) < 1e-12);
        assert!(has(ProjPoint::infinity()) && has(ProjPoint::zero()));
    }

    #[test]
    fn imaginary_symbol_certifies_at_two_steps() {
        let c = Cocycle::with_symbol(BaseSystem::fixed_point(), Potential::Constant(C64::i())).unwrap();
        let cert = certify_uh(&c, &ConeField::hemisphere(), 5, BOUNDARY_DIRECTIONS, 0).unwrap();
        assert_eq!(cert.steps, 2);
        assert!(cert.margin > 0.0 && cert.separation > 0.1);
    }

    #[test]
    fn free_operator_at_zero_has_no_cone() {
        let c = Cocycle::schrodinger(BaseSystem::fixed_point(), &Potential::constant(0.0), real(0.0)).unwrap();
        assert!(matches!(
            certify_uh(&c, &ConeField::hemisphere(), 12, BOUNDARY_DIRECTIONS, 0),
            Err(Error::NoContraction { .. })
        ));
        let (_, residual) = unstable_direction(&c, &BasePoint::Periodic { orbit: 0, phase: 0 }, 100);
        assert!(residual > 0.1);
    }

    #[test]
    fn diagonal_cone_margin_matches_mobius_oracle() {
        let d = Cocycle::constant(BaseSystem::fixed_point(), Mat2::real(2.0, 0.0, 0.0, 0.5)).unwrap();
        let cone = ConeField::Constant { cone: Cone::new(ProjPoint::infinity(), 0.3).unwrap() };
        let cert = certify_uh(&d, &cone, 3, 256, 0).unwrap();
        assert_eq!(cert.steps, 1);
        // boundary direction (1, t) with |t|/√(1+t²) = 0.3 maps to (1, t/4): the
        // worst image sits at chordal distance 0.15/√(4·0.91 + 0.0225) from (1, 0)
        let oracle = 0.3 - 0.15 / (4.0 * 0.91 + 0.0225f64).sqrt();
        assert!((cert.margin - oracle).abs() < 1e-12);
    }

    #[test]
    fn direction_examples() {
        let x0 = BasePoint::Periodic { orbit: 0, phase: 0 };
        let d = Cocycle::constant(BaseSystem::fixed_point(), Mat2::real(2.0, 0.0, 0.0, 0.5)).unwrap();
        let (u, r) = unstable_direction(&d, &x0, 50);
        assert!(spherical_dist(&u, &ProjPoint::infinity()) < 1e-12 && r < 1e-12);
        let (s, _) = stable_direction(&d, &x0, 50);
        assert!(spherical_dist(&s, &ProjPoint::zero()) < 1e-12);

        let sym = Cocycle::with_symbol(BaseSystem::fixed_point(), Potential::Constant(C64::i())).unwrap();
        let a = Mat2::schrodinger(C64::i());
        let (big, small) = a.eigenvalues();
        // eigenvector of [[v, −1], [1, 0]] for λ is (λ, 1)
        let (u, ru) = unstable_direction(&sym, &x0, 100);
        let (s, rs) = stable_direction(&sym, &x0, 100);
        assert!(spherical_dist(&u, &ProjPoint::from_chart_value(big)) < 1e-10 && ru < 1e-10);
        assert!(spherical_dist(&s, &ProjPoint::from_chart_value(small)) < 1e-10 && rs < 1e-10);

        let e3 = Cocycle::schrodinger(BaseSystem::fixed_point(), &Potential::constant(0.0), real(3.0)).unwrap();
        let (s, _) = stable_direction(&e3, &x0, 100);
        let small = (3.0 - 5f64.sqrt()) / 2.0;
        assert!(spherical_dist(&s, &ProjPoint::real(small, 1.0).unwrap()) < 1e-10);
    }

    #[test]
    fn uh_exact_examples() {
        let d = Cocycle::constant(BaseSystem::fixed_point(), Mat2::real(2.0, 0.0, 0.0, 0.5)).unwrap();
        let cone = ConeField::Constant { cone: Cone::new(ProjPoint::infinity(), 0.3).unwrap() };
        let cert = certify_uh(&d, &cone, 3, 64, 0).unwrap();
        let r = lyapunov_uh_exact(&d, &cert, &IntegrationScheme::Exact).unwrap();
        assert!((r.estimate.value - 2f64.ln()).abs() < 1e-15);

        let sym = Cocycle::with_symbol(BaseSystem::fixed_point(), Potential::Constant(C64::i())).unwrap();
        let cert = certify_uh(&sym, &ConeField::hemisphere(), 4, 64, 0).unwrap();
        let r = lyapunov_uh_exact(&sym, &cert, &IntegrationScheme::Exact).unwrap();
        let exact = cocycle::lyapunov_periodic_exact(&sym).unwrap().value;
        assert!((r.estimate.value - exact).abs() < 1e-9);
        assert!(r.discrepancy < 1e-9);
    }

    #[test]
    fn harmonicity_examples() {
        let opts = LyapunovOptions::default();
        let free = |z: C64| Cocycle::schrodinger(BaseSystem::fixed_point(), &Potential::constant(0.0), z);
        let p = harmonicity_probe(|z| free(real(5.0) + z), real(0.0), 0.5, 64, &opts).unwrap();
        assert!(p.defect.abs() < 1e-8);
        let p = harmonicity_probe(free, real(0.0), 1.0, 256, &opts).unwrap();
        assert!(p.defect > 0.1);
        let constant = |_: C64| Cocycle::constant(BaseSystem::fixed_point(), Mat2::real(2.0, 0.0, 0.0, 0.5));
        let p = harmonicity_probe(constant, real(0.0), 1.0, 16, &opts).unwrap();
        assert_eq!(p.defect, 0.0);
    }
}
