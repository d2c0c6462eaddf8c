//! Cocycles `(f, A)` over a base, overflow-safe iteration and Lyapunov
//! exponent estimators.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::{BasePoint, BaseSystem, Potential};
use crate::error::{Error, Result};
use crate::fast;
use crate::linalg::{exp_sl2, Mat2, Sl2Element, DET_TOL};
use crate::numeric::{self, CompensatedSum};

const VALIDATION_PROBES: u64 = 1000;
const VALIDATION_SEED: u64 = 0x5eed;

/// An sl(2)-valued observable `x ↦ [[b1(x), b2(x)], [b3(x), −b1(x)]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sl2Field {
    pub b1: Potential,
    pub b2: Potential,
    pub b3: Potential,
}

impl Sl2Field {
    pub fn constant(b: &Sl2Element) -> Self {
        Self { b1: Potential::Constant(b.b1), b2: Potential::Constant(b.b2), b3: Potential::Constant(b.b3) }
    }

    /// `p(x)·b` for a scalar potential `p` and a fixed element `b`.
    pub fn from_potential(p: &Potential, b: &Sl2Element) -> Self {
        Self { b1: p.scale(b.b1), b2: p.scale(b.b2), b3: p.scale(b.b3) }
    }

    pub fn eval(&self, base: &BaseSystem, x: &BasePoint) -> Sl2Element {
        Sl2Element::new(self.b1.eval(base, x), self.b2.eval(base, x), self.b3.eval(base, x))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { b1: self.b1.scale(s), b2: self.b2.scale(s), b3: self.b3.scale(s) }
    }

    pub fn add(&self, other: &Sl2Field) -> Result<Self> {
        Ok(Self { b1: self.b1.add(&other.b1)?, b2: self.b2.add(&other.b2)?, b3: self.b3.add(&other.b3)? })
    }

    pub fn check_compatible(&self, base: &BaseSystem) -> Result<()> {
        self.b1.check_compatible(base)?;
        self.b2.check_compatible(base)?;
        self.b3.check_compatible(base)
    }

    pub fn is_real(&self) -> bool {
        self.b1.is_real() && self.b2.is_real() && self.b3.is_real()
    }

    /// Upper bound on `sup_x ‖field(x)‖` (operator norm ≤ Frobenius norm).
    pub fn sup_norm(&self) -> f64 {
        let (a, b, c) = (self.b1.sup_norm(), self.b2.sup_norm(), self.b3.sup_norm());
        (2.0 * a * a + b * b + c * c).sqrt()
    }
}

/// The fiber map `x ↦ A(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fiber {
    Constant { matrix: Mat2 },
    /// `[[u(x), −1], [1, 0]]`; for the Schrödinger cocycle `u = E − v`.
    Schrodinger { symbol: Potential },
    /// `exp(g(x))`.
    Exp { generator: Sl2Field },
    /// `left(x) · right(x)`.
    Product { left: Box<Fiber>, right: Box<Fiber> },
}

impl Fiber {
    pub fn matrix(&self, base: &BaseSystem, x: &BasePoint) -> Mat2 {
        match self {
            Fiber::Constant { matrix } => *matrix,
            Fiber::Schrodinger { symbol } => Mat2::schrodinger(symbol.eval(base, x)),
            Fiber::Exp { generator } => exp_sl2(&generator.eval(base, x), C64::new(1.0, 0.0)),
            Fiber::Product { left, right } => left.matrix(base, x) * right.matrix(base, x),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Fiber::Constant { .. } => true,
            Fiber::Schrodinger { symbol } => matches!(symbol, Potential::Constant(_)),
            Fiber::Exp { generator } => [&generator.b1, &generator.b2, &generator.b3]
                .iter()
                .all(|p| matches!(p, Potential::Constant(_))),
            Fiber::Product { left, right } => left.is_constant() && right.is_constant(),
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            Fiber::Constant { matrix } => matrix.is_real(),
            Fiber::Schrodinger { symbol } => symbol.is_real(),
            Fiber::Exp { generator } => generator.is_real(),
            Fiber::Product { left, right } => left.is_real() && right.is_real(),
        }
    }

    fn check_compatible(&self, base: &BaseSystem) -> Result<()> {
        match self {
            Fiber::Constant { .. } => Ok(()),
            Fiber::Schrodinger { symbol } => symbol.check_compatible(base),
            Fiber::Exp { generator } => generator.check_compatible(base),
            Fiber::Product { left, right } => {
                left.check_compatible(base)?;
                right.check_compatible(base)
            }
        }
    }
}

/// A base system with an SL(2,ℂ)-valued fiber map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cocycle {
    base: BaseSystem,
    fiber: Fiber,
}

/// A product `A_n(x) = M · e^{log_norm}` with `‖M‖_HS = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Renormalized {
    pub matrix: Mat2,
    pub log_norm: f64,
}

impl Renormalized {
    /// `ln ‖A_n(x)‖` in the operator norm.
    pub fn log_op_norm(&self) -> f64 {
        self.log_norm + self.matrix.op_norm().ln()
    }
}

impl Cocycle {
    /// Builds a cocycle after checking the base, the fiber's compatibility with
    /// it, and unimodularity at up to 1000 seeded probe points.
    pub fn new(base: BaseSystem, fiber: Fiber) -> Result<Self> {
        base.validate()?;
        fiber.check_compatible(&base)?;
        let c = Self { base, fiber };
        let probes: Vec<BasePoint> = if c.fiber.is_constant() {
            vec![c.base.sample_point(VALIDATION_SEED, 0)]
        } else {
            match &c.base {
                BaseSystem::PeriodicOrbits { .. } => c.base.periodic_points().into_iter().map(|p| p.0).collect(),
                _ => (0..VALIDATION_PROBES).map(|i| c.base.sample_point(VALIDATION_SEED, i)).collect(),
            }
        };
        for x in &probes {
            c.at(x).check_unimodular(DET_TOL)?;
        }
        Ok(c)
    }

    pub fn constant(base: BaseSystem, matrix: Mat2) -> Result<Self> {
        Self::new(base, Fiber::Constant { matrix })
    }

    /// Fiber `[[u(x), −1], [1, 0]]` for an arbitrary (possibly complex) symbol `u`.
    pub fn with_symbol(base: BaseSystem, symbol: Potential) -> Result<Self> {
        Self::new(base, Fiber::Schrodinger { symbol })
    }

    /// The Schrödinger cocycle `A^{(E−v)}`.
    pub fn schrodinger(base: BaseSystem, potential: &Potential, energy: C64) -> Result<Self> {
        let symbol = Potential::Constant(energy).add(&potential.scale(C64::new(-1.0, 0.0)))?;
        Self::with_symbol(base, symbol)
    }

    pub fn base(&self) -> &BaseSystem {
        &self.base
    }

    pub fn fiber(&self) -> &Fiber {
        &self.fiber
    }

    pub fn is_real(&self) -> bool {
        self.fiber.is_real()
    }

    pub fn is_constant(&self) -> bool {
        self.fiber.is_constant()
    }

    /// `A(x)`.
    pub fn at(&self, x: &BasePoint) -> Mat2 {
        self.fiber.matrix(&self.base, x)
    }

    /// The cocycle `x ↦ A(x) · right`.
    pub fn times_constant(&self, right: Mat2) -> Result<Self> {
        Self::new(
            self.base.clone(),
            Fiber::Product { left: Box::new(self.fiber.clone()), right: Box::new(Fiber::Constant { matrix: right }) },
        )
    }

    /// The cocycle `x ↦ left(x) · A(x)`.
    pub fn premultiplied(&self, left: Fiber) -> Result<Self> {
        Self::new(self.base.clone(), Fiber::Product { left: Box::new(left), right: Box::new(self.fiber.clone()) })
    }

    fn check_point(&self, x: &BasePoint) -> Result<()> {
        if self.base.contains(x) {
            Ok(())
        } else {
            Err(Error::FamilyMismatch(format!("point {x:?} is not on the {} base", self.base.family())))
        }
    }

    /// The plain product `A_n(x)` without rescaling.
    pub fn product(&self, x: &BasePoint, n: usize) -> Result<Mat2> {
        self.check_point(x)?;
        let mut m = Mat2::identity();
        let mut y = *x;
        for _ in 0..n {
            m = self.at(&y) * m;
            y = self.base.step_unchecked(&y);
        }
        Ok(m)
    }

    /// `A_n(x)` rescaled to unit Frobenius norm after every factor, with the
    /// logarithms of the scale factors accumulated by compensated summation.
    pub fn iterate_renormalized(&self, x: &BasePoint, n: usize) -> Result<Renormalized> {
        if n == 0 {
            return Err(Error::InvalidInput("iterate length must be at least 1".into()));
        }
        self.check_point(x)?;
        Ok(self.iterate_with(x, n, |_| false, |_, _| {}))
    }

    /// Renormalized iteration calling `visit(k, partial)` after `k` factors
    /// whenever `want(k)`. Real fibers run in real arithmetic.
    fn iterate_with<W, V>(&self, x: &BasePoint, n: usize, want: W, mut visit: V) -> Renormalized
    where
        W: Fn(usize) -> bool,
        V: FnMut(usize, &Renormalized),
    {
        if self.fiber.is_real() {
            return fast::iterate_real(&self.base, &self.fiber, x, n, want, visit);
        }
        let mut m = Mat2::identity();
        let mut log = CompensatedSum::new();
        let mut y = *x;
        for k in 1..=n {
            m = self.at(&y) * m;
            let f = m.frobenius_norm();
            m = m.scale_real(1.0 / f);
            log.add(f.ln());
            y = self.base.step_unchecked(&y);
            if want(k) {
                visit(k, &Renormalized { matrix: m, log_norm: log.value() });
            }
        }
        Renormalized { matrix: m, log_norm: log.value() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovMethod {
    Birkhoff,
    PeriodicExact,
    UhExact,
    Fubini,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub value: f64,
    pub stderr: f64,
    pub method: LyapunovMethod,
    pub n: usize,
    pub samples: usize,
}

impl LyapunovEstimate {
    /// `value > k · stderr`, the detection rule used for positivity claims.
    pub fn exceeds(&self, k: f64) -> bool {
        self.value > k * self.stderr
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovOptions {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        Self { n: 10_000, samples: 64, seed: 1 }
    }
}

/// Starting points with weights for sampled μ-averages: every orbit point on
/// periodic bases, a seeded stratified grid on the circle, seeded sequences on
/// the shift.
pub fn sample_points(base: &BaseSystem, samples: usize, seed: u64) -> Vec<(BasePoint, f64)> {
    match base {
        BaseSystem::PeriodicOrbits { .. } => base.periodic_points(),
        BaseSystem::CircleRotation { .. } => {
            let u = match base.sample_point(seed, u64::MAX) {
                BasePoint::Circle(t) => t,
                _ => 0.0,
            };
            let m = samples.max(1);
            (0..m).map(|i| (BasePoint::Circle(((i as f64 + u) / m as f64).fract()), 1.0 / m as f64)).collect()
        }
        BaseSystem::BernoulliShift { .. } => {
            let m = samples.max(1);
            (0..m as u64).map(|i| (base.sample_point(seed, i), 1.0 / m as f64)).collect()
        }
    }
}

/// Birkhoff estimate: the μ-average of `(1/n) ln ‖A_n(x)‖`.
///
/// `stderr` combines the sampling standard error with the finite-`n` bias
/// proxy `|L_n − L_{n/2}|` in quadrature. On periodic bases every orbit point
/// is used and only the bias term remains.
pub fn lyapunov_birkhoff(c: &Cocycle, n: usize, samples: usize, seed: u64) -> Result<LyapunovEstimate> {
    if n == 0 || samples == 0 {
        return Err(Error::InvalidInput("Birkhoff estimation needs n ≥ 1 and samples ≥ 1".into()));
    }
    let points = sample_points(&c.base, samples, seed);
    let half = (n / 2).max(1);
    let rows: Vec<(f64, f64)> = points
        .par_iter()
        .map(|(x, _)| {
            let mut at_half = 0.0;
            let full = c.iterate_with(x, n, |k| k == half, |_, r| at_half = r.log_op_norm());
            (full.log_op_norm() / n as f64, at_half / half as f64)
        })
        .collect();
    let value = numeric::sum(points.iter().zip(&rows).map(|((_, w), r)| w * r.0));
    let value_half = numeric::sum(points.iter().zip(&rows).map(|((_, w), r)| w * r.1));
    let bias = if n >= 2 { (value - value_half).abs() } else { 0.0 };
    let sampling = match c.base {
        BaseSystem::PeriodicOrbits { .. } => 0.0,
        _ => numeric::mean_and_stderr(&rows.iter().map(|r| r.0).collect::<Vec<_>>()).1,
    };
    Ok(LyapunovEstimate {
        value,
        stderr: sampling.hypot(bias),
        method: LyapunovMethod::Birkhoff,
        n,
        samples: points.len(),
    })
}

/// `ln ρ` of the true product `M · e^{log}`, clamped at 0; real elliptic or
/// parabolic products give exactly 0.
fn log_spectral_radius_of(r: &Renormalized) -> f64 {
    let scale = r.log_norm.exp();
    if r.matrix.is_real() && scale.is_finite() && (r.matrix.trace().re * scale).abs() <= 2.0 {
        return 0.0;
    }
    let (big, _) = r.matrix.eigenvalues();
    (r.log_norm + big.norm().ln()).max(0.0)
}

/// Exact exponent `Σ_j w_j (1/n_j) ln ρ(A_{n_j}(x_j))` on periodic bases, and
/// `ln ρ(A)` for constant fibers over any base.
pub fn lyapunov_periodic_exact(c: &Cocycle) -> Result<LyapunovEstimate> {
    let (value, n) = if c.is_constant() {
        let x = c.base.sample_point(0, 0);
        (c.at(&x).log_spectral_radius(), 1)
    } else {
        match &c.base {
            BaseSystem::PeriodicOrbits { orbits } => {
                let terms: Vec<f64> = orbits
                    .iter()
                    .enumerate()
                    .map(|(j, o)| {
                        let x = BasePoint::Periodic { orbit: j, phase: 0 };
                        let r = c.iterate_with(&x, o.period, |_| false, |_, _| {});
                        o.weight * log_spectral_radius_of(&r) / o.period as f64
                    })
                    .collect();
                (numeric::sum(terms), orbits.iter().map(|o| o.period).max().unwrap_or(1))
            }
            _ => {
                return Err(Error::FamilyMismatch(
                    "the exact periodic formula needs a periodic base or a constant fiber".into(),
                ))
            }
        }
    };
    Ok(LyapunovEstimate { value, stderr: 0.0, method: LyapunovMethod::PeriodicExact, n, samples: 1 })
}

/// Whether [`lyapunov_periodic_exact`] applies.
pub fn has_exact_formula(c: &Cocycle) -> bool {
    c.is_constant() || matches!(c.base, BaseSystem::PeriodicOrbits { .. })
}

/// The exact formula where it applies, the Birkhoff estimator otherwise.
pub fn lyapunov_auto(c: &Cocycle, opts: &LyapunovOptions) -> Result<LyapunovEstimate> {
    if has_exact_formula(c) {
        lyapunov_periodic_exact(c)
    } else {
        lyapunov_birkhoff(c, opts.n, opts.samples, opts.seed)
    }
}

/// `∫ 2^{−m} ln ‖A_{2^m}(x)‖_HS dμ` for `m = 0..=max_doubling`; a
/// non-increasing sequence of upper bounds for the exponent.
pub fn lyapunov_fubini(c: &Cocycle, max_doubling: u32, samples: usize, seed: u64) -> Result<Vec<f64>> {
    if max_doubling > 20 {
        return Err(Error::InvalidInput("at most 20 doublings are supported".into()));
    }
    let points = sample_points(&c.base, samples, seed);
    let n = 1usize << max_doubling;
    let rows: Vec<Vec<f64>> = points
        .par_iter()
        .map(|(x, _)| {
            let mut logs = Vec::with_capacity(max_doubling as usize + 1);
            c.iterate_with(x, n, |k| k.is_power_of_two(), |k, r| {
                // the renormalized matrix has unit HS norm
                logs.push(r.log_norm / k as f64);
            });
            logs
        })
        .collect();
    Ok((0..=max_doubling as usize)
        .map(|m| numeric::sum(points.iter().zip(&rows).map(|((_, w), r)| w * r[m])))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbAverage {
    /// Midpoint-rule average over θ of `L(A R_θ)`.
    pub lhs: f64,
    /// Largest error estimate among the individual exponents.
    pub lhs_error: f64,
    /// `∫ ln((‖A‖ + ‖A‖⁻¹)/2) dμ`.
    pub rhs: f64,
}

/// Both sides of the rotation-average identity
/// `∫₀¹ L(A R_{2πθ}) dθ = ∫ ln((‖A‖ + ‖A‖⁻¹)/2) dμ`.
pub fn ab_average_check(c: &Cocycle, theta_nodes: usize, opts: &LyapunovOptions) -> Result<AbAverage> {
    if !c.is_real() {
        return Err(Error::Precondition("the rotation average needs a real fiber".into()));
    }
    if theta_nodes < 16 {
        return Err(Error::InvalidInput("use at least 16 θ nodes".into()));
    }
    let estimates: Vec<LyapunovEstimate> = (0..theta_nodes)
        .into_par_iter()
        .map(|k| {
            let theta = (k as f64 + 0.5) / theta_nodes as f64;
            lyapunov_auto(&c.times_constant(Mat2::rotation(2.0 * PI * theta))?, opts)
        })
        .collect::<Result<_>>()?;
    let lhs = numeric::sum(estimates.iter().map(|e| e.value)) / theta_nodes as f64;
    let lhs_error = estimates.iter().map(|e| e.stderr).fold(0.0, f64::max);
    let points = sample_points(&c.base, opts.samples, opts.seed);
    let rhs = numeric::sum(points.iter().map(|(x, w)| {
        let norm = c.at(x).op_norm();
        w * ((norm + 1.0 / norm) / 2.0).ln()
    }));
    Ok(AbAverage { lhs, lhs_error, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat2;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn golden_e3() -> f64 {
        ((3.0 + 5f64.sqrt()) / 2.0).ln()
    }

    #[test]
    fn renormalized_identity_product() {
        let id = Cocycle::constant(BaseSystem::golden_rotation(), Mat2::identity()).unwrap();
        let r = id.iterate_renormalized(&BasePoint::Circle(0.1), 1_000_000).unwrap();
        // the product is the identity: M e^{log} = I with M = I/√2
        assert!((r.log_norm - 2f64.sqrt().ln()).abs() < 1e-15);
        let back = r.matrix.scale_real(r.log_norm.exp());
        assert!((back - Mat2::identity()).max_abs() < 1e-14);
    }

    #[test]
    fn renormalized_diagonal_powers() {
        let d = Cocycle::constant(BaseSystem::fixed_point(), Mat2::real(2.0, 0.0, 0.0, 0.5)).unwrap();
        let x = BasePoint::Periodic { orbit: 0, phase: 0 };
        let r = d.iterate_renormalized(&x, 100).unwrap();
        assert!((r.log_op_norm() - 100.0 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn free_schrodinger_at_zero_has_order_four() {
        let s = Cocycle::schrodinger(BaseSystem::fixed_point(), &Potential::constant(0.0), c(0.0)).unwrap();
        let m = s.product(&BasePoint::Periodic { orbit: 0, phase: 0 }, 4).unwrap();
        assert!((m - Mat2::identity()).max_abs() < 1e-15);
    }

    #[test]
    fn birkhoff_examples() {
        let rot = Cocycle::constant(BaseSystem::golden_rotation(), Mat2::rotation(0.7)).unwrap();
        let e = lyapunov_birkhoff(&rot, 10_000, 8, 3).unwrap();
        assert!(e.value.abs() < 1e-6);

        let d = Cocycle::constant(BaseSystem::golden_rotation(), Mat2::real(2.0, 0.0, 0.0, 0.5)).unwrap();
        let e = lyapunov_birkhoff(&d, 1000, 4, 3).unwrap();
        assert!((e.value - 2f64.ln()).abs() < 1e-9);

        let s = Cocycle::schrodinger(BaseSystem::golden_rotation(), &Potential::cosine(0).scale(c(0.0)), c(3.0))
            .unwrap();
        let e = lyapunov_birkhoff(&s, 10_000, 4, 3).unwrap();
        assert!((e.value - golden_e3()).abs() < 1e-3);
    }

    #[test]
    fn periodic_exact_examples() {
        let free = |e: C64| Cocycle::schrodinger(BaseSystem::fixed_point(), &Potential::constant(0.0), e).unwrap();
        assert_eq!(lyapunov_periodic_exact(&free(c(1.0))).unwrap().value, 0.0);
        assert!((lyapunov_periodic_exact(&free(c(3.0))).unwrap().value - golden_e3()).abs() < 1e-15);

        // v ≡ i at E = 0: the fiber is [[−i, −1], [1, 0]].
        let complex = Cocycle::schrodinger(BaseSystem::fixed_point(), &Potential::Constant(C64::i()), c(0.0)).unwrap();
        let exact = lyapunov_periodic_exact(&complex).unwrap().value;
        // independent oracle: growth of the power sequence
        let a = Mat2::schrodinger(-C64::i());
        let mut m = Mat2::identity();
        let mut log = 0.0;
        for _ in 0..2000 {
            m = a * m;
            let f = m.frobenius_norm();
            m = m.scale_real(1.0 / f);
            log += f.ln();
        }
        assert!((exact - log / 2000.0).abs() < 1e-3);
        assert!((exact - 0.481_211_825_059_603_4).abs() < 1e-12);
    }

    #[test]
    fn fubini_examples() {
        let id = Cocycle::constant(BaseSystem::fixed_point(), Mat2::identity()).unwrap();
        let seq = lyapunov_fubini(&id, 10, 1, 0).unwrap();
        for (m, t) in seq.iter().enumerate() {
            assert!((t - 2f64.sqrt().ln() / (1u64 << m) as f64).abs() < 1e-15);
        }

        let d = Cocycle::constant(BaseSystem::fixed_point(), Mat2::real(2.0, 0.0, 0.0, 0.5)).unwrap();
        let seq = lyapunov_fubini(&d, 12, 1, 0).unwrap();
        for (m, t) in seq.iter().enumerate() {
            let k = (1u64 << m) as f64;
            let oracle = (k * 2f64.ln() + 0.5 * (16f64.powf(-k)).ln_1p()) / k;
            assert!((t - oracle).abs() < 1e-12);
            assert!(*t >= 2f64.ln() - 1e-15);
        }
        assert!(seq.windows(2).all(|w| w[1] <= w[0] + 1e-15));

        let free = Cocycle::schrodinger(BaseSystem::fixed_point(), &Potential::constant(0.0), c(0.0)).unwrap();
        let seq = lyapunov_fubini(&free, 12, 1, 0).unwrap();
        assert!(seq.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(*seq.last().unwrap() < 1e-3);
    }

    #[test]
    fn rotation_average_examples() {
        let opts = LyapunovOptions { n: 2000, samples: 4, seed: 1 };
        let rot = Cocycle::constant(BaseSystem::fixed_point(), Mat2::rotation(0.4)).unwrap();
        let r = ab_average_check(&rot, 64, &opts).unwrap();
        assert!(r.rhs.abs() < 1e-15 && r.lhs.abs() < 1e-15);

        let d = Cocycle::constant(BaseSystem::fixed_point(), Mat2::real(2.0, 0.0, 0.0, 0.5)).unwrap();
        let r = ab_average_check(&d, 10_000, &opts).unwrap();
        assert!((r.rhs - 1.25f64.ln()).abs() < 1e-15);
        // oracle: acosh⁺(|2.5 cos 2πθ| / 2) integrated by the midpoint rule
        let n = 10_000;
        let oracle: f64 = (0..n)
            .map(|k| {
                let t = (2.5 * (2.0 * PI * (k as f64 + 0.5) / n as f64).cos()).abs() / 2.0;
                if t > 1.0 { t.acosh() } else { 0.0 }
            })
            .sum::<f64>()
            / n as f64;
        assert!((r.lhs - oracle).abs() < 1e-12);
        assert!((r.lhs - r.rhs).abs() < 1e-3);

        let free = Cocycle::schrodinger(BaseSystem::fixed_point(), &Potential::constant(0.0), c(0.0)).unwrap();
        let r = ab_average_check(&free, 64, &opts).unwrap();
        assert!(r.lhs.abs() < 1e-15 && r.rhs.abs() < 1e-15);
    }

    #[test]
    fn unimodularity_is_enforced() {
        let bad = Cocycle::constant(BaseSystem::fixed_point(), Mat2::real(2.0, 0.0, 0.0, 1.0));
        assert!(matches!(bad, Err(Error::NotUnimodular { .. })));
        let mismatch = Cocycle::with_symbol(BaseSystem::golden_rotation(), Potential::periodic(&[1.0, 2.0]));
        assert!(matches!(mismatch, Err(Error::FamilyMismatch(_))));
    }
}
