//! The regularized functionals
//! `Φ_ε(v, v0, w) = ∫₋₁¹ weight(t) L(v + ε(t·v0 + (1−t²)w)) dt`, their
//! boundary representation through the conformal map `ψ : 𝔻 → 𝔻 ∩ ℍ`, the
//! matrix-exponential variant for general cocycles and the convolved form.
//!
//! Potentials here are *symbols*: `L(u)` is the exponent of the cocycle with
//! fiber `[[u, −1], [1, 0]]`, so the Schrödinger cocycle at energy `E` has
//! symbol `E − v`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::{BasePoint, BaseSystem, Potential};
use crate::cocycle::{self, Cocycle, Fiber, LyapunovEstimate, LyapunovOptions, Sl2Field};
use crate::error::{Error, Result};
use crate::linalg::{ExtComplex, Mat2, Sl2Element};
use crate::numeric;
use crate::quadrature::{self, kronrod_rule, QuadOptions, QuadResult, Sample};
use crate::uh::{self, ConeField, BOUNDARY_DIRECTIONS};

/// Default radius of the balls around `([[0,1],[−1,0]], 0)` used by the
/// general form. Only existence of some radius is known.
pub const ETA_GEN: f64 = 0.05;
const ETA_SAMPLES: usize = 1000;
const UH_STEPS: usize = 16;

/// `(1 − t²) / |t² + 2it + 1|² = (1 − t²) / (t⁴ + 6t² + 1)`.
pub fn weight(t: f64) -> f64 {
    let t2 = t * t;
    (1.0 - t2) / (t2 * t2 + 6.0 * t2 + 1.0)
}

/// `∫₋₁¹ weight = π/4`.
pub const WEIGHT_MASS: f64 = PI / 4.0;

/// `φ(z) = i(1 − z)/(1 + z)`, taking `𝔻` onto the upper half plane.
pub fn phi_map(z: C64) -> C64 {
    C64::i() * (1.0 - z) / (1.0 + z)
}

/// `φ⁻¹(z) = −(z − i)/(z + i)`.
pub fn phi_inv(z: C64) -> C64 {
    -(z - C64::i()) / (z + C64::i())
}

/// Square root with the cut along the negative imaginary axis: arguments are
/// taken in `[−π/2, 3π/2)`. Values of `φ` on the unit circle are real up to
/// rounding, and this keeps both half-lines away from the cut.
fn sqrt_cut_down(z: C64) -> C64 {
    let (r, mut arg) = z.to_polar();
    if arg < -0.5 * PI {
        arg += 2.0 * PI;
    }
    C64::from_polar(r.sqrt(), 0.5 * arg)
}

/// `ψ(z) = φ⁻¹(φ(z)^{1/2})`, taking `𝔻` onto `𝔻 ∩ ℍ`. The upper unit
/// semicircle goes to the upper arc, the lower one to `(−1, 1)`.
pub fn psi(z: C64) -> C64 {
    phi_inv(sqrt_cut_down(phi_map(z)))
}

/// `ψ(0) = (√2 − 1)i`.
pub fn psi_center() -> C64 {
    psi(C64::new(0.0, 0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainFlag {
    InBall,
    OutOfBall,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiResult {
    pub value: f64,
    pub quad_error: f64,
    pub domain_flag: DomainFlag,
    pub nodes_used: usize,
}

/// Arguments of `Φ_ε(v, v0, w)`. The symbol at a complex parameter `z` is
/// `v + ε(z·v0 + (1 − z²)·w)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiQuery {
    pub base: BaseSystem,
    pub v: Potential,
    pub v0: Potential,
    pub w: Potential,
    pub epsilon: f64,
    pub quad: QuadOptions,
    pub lyapunov: LyapunovOptions,
}

/// Quadrature defaults: absolute tolerance `1e-8` with exact exponents,
/// `1e-3` when exponents are sampled.
pub fn default_quad(base: &BaseSystem) -> QuadOptions {
    let abs_tol = if base.is_periodic() { 1e-8 } else { 1e-3 };
    QuadOptions { abs_tol, max_panels: 400, ..QuadOptions::default() }
}

impl PhiQuery {
    /// The `v0 ≡ 1` form.
    pub fn new(base: BaseSystem, v: Potential, w: Potential, epsilon: f64) -> Self {
        let quad = default_quad(&base);
        Self { base, v, v0: Potential::constant(1.0), w, epsilon, quad, lyapunov: LyapunovOptions::default() }
    }

    pub fn with_v0(mut self, v0: Potential) -> Self {
        self.v0 = v0;
        self
    }

    pub fn with_quad(mut self, quad: QuadOptions) -> Self {
        self.quad = quad;
        self
    }

    /// `η = inf v0`.
    pub fn eta(&self) -> f64 {
        self.v0.inf_real()
    }

    /// Radius `η / 2^{3/2}` of the ball of analyticity in `w`.
    pub fn ball_radius(&self) -> f64 {
        self.eta() / (2.0 * SQRT_2)
    }

    pub fn domain_flag(&self) -> DomainFlag {
        if self.w.sup_norm() < self.ball_radius() {
            DomainFlag::InBall
        } else {
            DomainFlag::OutOfBall
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !self.v.is_real() || !self.v0.is_real() {
            return Err(Error::InvalidInput("v and v0 must be real".into()));
        }
        self.base.validate()?;
        for p in [&self.v, &self.v0, &self.w] {
            p.check_compatible(&self.base)?;
        }
        Ok(())
    }

    /// `v + ε(z·v0 + (1 − z²)·w)`.
    pub fn symbol(&self, z: C64) -> Result<Potential> {
        let eps = C64::new(self.epsilon, 0.0);
        self.v.add_scaled(&self.v0, eps * z)?.add_scaled(&self.w, eps * (1.0 - z * z))
    }

    /// `L` at the symbol for parameter `z`: exact on periodic bases, Birkhoff
    /// otherwise.
    pub fn lyapunov_at(&self, z: C64) -> Result<LyapunovEstimate> {
        let c = Cocycle::with_symbol(self.base.clone(), self.symbol(z)?)?;
        cocycle::lyapunov_auto(&c, &self.lyapunov)
    }

    /// `L` at a parameter where the symbol has positive imaginary part: exact
    /// on periodic bases, otherwise through a hemisphere-cone certificate and
    /// the unstable-direction integral.
    fn lyapunov_uh(&self, z: C64) -> Result<f64> {
        let symbol = self.symbol(z)?;
        let min_im = self
            .base
            .probe_points(self.lyapunov.seed)
            .iter()
            .map(|x| symbol.eval(&self.base, x).im)
            .fold(f64::INFINITY, f64::min);
        let not_uh = Error::NotUniformlyHyperbolic { re: z.re, im: z.im };
        if !(min_im > 0.0) {
            return Err(not_uh);
        }
        let c = Cocycle::with_symbol(self.base.clone(), symbol)?;
        if cocycle::has_exact_formula(&c) {
            return Ok(cocycle::lyapunov_periodic_exact(&c)?.value);
        }
        let cert = uh::certify_uh(&c, &ConeField::hemisphere(), UH_STEPS, BOUNDARY_DIRECTIONS, self.lyapunov.seed)
            .map_err(|_| not_uh.clone())?;
        let scheme = uh::default_scheme(&self.base, &self.lyapunov);
        Ok(uh::lyapunov_uh_exact(&c, &cert, &scheme).map_err(|_| not_uh)?.estimate.value)
    }
}

/// `∫₋₁¹ weight(t) f(t) dt` for an arbitrary (possibly noisy) integrand, with
/// a caller-supplied weight.
pub fn weighted_integral_with<W, F>(weight: W, f: F, quad: &QuadOptions) -> Result<QuadResult>
where
    W: Fn(f64) -> f64 + Sync,
    F: Fn(f64) -> Result<Sample> + Sync,
{
    quadrature::integrate(
        |t| {
            let w = weight(t);
            let s = f(t)?;
            Ok(Sample { value: w * s.value, noise: w * s.noise })
        },
        -1.0,
        1.0,
        quad,
    )
}

/// `∫₋₁¹ weight(t) f(t) dt`.
pub fn weighted_integral<F>(f: F, quad: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<Sample> + Sync,
{
    weighted_integral_with(weight, f, quad)
}

fn estimate_sample(e: &LyapunovEstimate) -> Sample {
    Sample { value: e.value, noise: e.stderr }
}

/// Grid used to locate band-edge crossings of the real segment.
const CROSSING_GRID: usize = 2048;

/// Parameters `t ∈ (−1, 1)` where the real symbol crosses a band edge of some
/// periodic orbit (`|tr A_n| = 2`), where `t ↦ L` has a square-root kink.
/// Empty on non-periodic bases.
fn band_crossings(q: &PhiQuery) -> Result<Vec<f64>> {
    let BaseSystem::PeriodicOrbits { orbits } = &q.base else {
        return Ok(Vec::new());
    };
    let excess = |t: f64, orbit: usize, period: usize| -> f64 {
        let Ok(symbol) = q.symbol(C64::new(t, 0.0)) else { return f64::NAN };
        let x = BasePoint::Periodic { orbit, phase: 0 };
        let trace = (0..period).fold(Mat2::identity(), |m, k| {
            let xk = q.base.advance(&x, k as i64);
            Mat2::schrodinger(symbol.eval(&q.base, &xk)) * m
        });
        trace.trace().re.abs() - 2.0
    };
    let mut points = Vec::new();
    for (j, o) in orbits.iter().enumerate() {
        let h = 2.0 / CROSSING_GRID as f64;
        let grid: Vec<(f64, f64)> = (0..=CROSSING_GRID)
            .into_par_iter()
            .map(|k| {
                let t = -1.0 + h * k as f64;
                (t, excess(t, j, o.period))
            })
            .collect();
        for w in grid.windows(2) {
            let ((t0, e0), (t1, e1)) = (w[0], w[1]);
            if e0.is_finite() && e1.is_finite() && (e0 < 0.0) != (e1 < 0.0) {
                points.push(numeric::bisect(|t| excess(t, j, o.period), t0, t1, 1e-15));
            }
        }
    }
    points.sort_by(f64::total_cmp);
    Ok(points)
}

/// `Φ_ε(v, v0, w)`. Out-of-ball queries are evaluated and flagged.
///
/// On periodic bases the integration panels are split at band-edge
/// crossings, so that no panel straddles a kink of the integrand.
pub fn phi(q: &PhiQuery) -> Result<PhiResult> {
    q.validate()?;
    let mut points = vec![-1.0];
    points.extend(band_crossings(q)?);
    points.push(1.0);
    let f = |t: f64| Ok(estimate_sample(&q.lyapunov_at(C64::new(t, 0.0))?));
    let r = quadrature::integrate_with_breaks(
        |t| {
            let w = weight(t);
            let s: Sample = f(t)?;
            Ok(Sample { value: w * s.value, noise: w * s.noise })
        },
        &points,
        &q.quad,
    )?;
    Ok(PhiResult { value: r.value, quad_error: r.error, domain_flag: q.domain_flag(), nodes_used: r.evaluations })
}

/// `(1/π) ∫₀^π ρ(e^{iβ}) sin β / (1 + cos² β) dβ`, the mean of `ρ ∘ ψ` over
/// the upper half of the unit circle (the part mapped to the upper arc).
fn upper_arc_mean(q: &PhiQuery) -> Result<QuadResult> {
    quadrature::integrate(
        |beta: f64| {
            let (s, c) = beta.sin_cos();
            let density = s / (PI * (1.0 + c * c));
            Ok(Sample::exact(density * q.lyapunov_uh(C64::from_polar(1.0, beta))?))
        },
        0.0,
        PI,
        &q.quad,
    )
}

fn check_boundary_domain(q: &PhiQuery) -> Result<f64> {
    q.validate()?;
    let eta = q.eta();
    if !(eta > 0.0) {
        return Err(Error::Precondition(format!("inf v0 must be positive, got {eta}")));
    }
    let norm = q.w.sup_norm();
    if !(norm < eta / 2.0) {
        return Err(Error::Precondition(format!("‖w‖ = {norm} is not below η/2 = {}", eta / 2.0)));
    }
    Ok(eta)
}

/// `Φ_ε` through its boundary representation.
///
/// With `ρ(z) = L(v + ε(z·v0 + (1 − z²)·w))`, harmonic on `𝔻 ∩ ℍ` for
/// `‖w‖ < η/2`, the mean value property of `ρ ∘ ψ` at 0 splits the unit
/// circle into the upper half (mapped onto the upper arc, where every cocycle
/// is uniformly hyperbolic) and the lower half (mapped onto `(−1, 1)`, where
/// the change of variables gives `(2/π)·Φ_ε`). Hence
/// `Φ_ε = (π/2)·(ρ(ψ(0)) − upper-arc mean)`, which only uses uniformly
/// hyperbolic cocycles.
///
/// The query's `w` is the statement's: it equals `ε` times the `w` of the
/// `ρ_w(z) = L(v + εz·v0 + ε²(1−z²)w)` parameterization.
pub fn phi_boundary(q: &PhiQuery) -> Result<PhiResult> {
    check_boundary_domain(q)?;
    let center = q.lyapunov_uh(psi_center())?;
    let arc = upper_arc_mean(q)?;
    Ok(PhiResult {
        value: 0.5 * PI * (center - arc.value),
        quad_error: 0.5 * PI * arc.error,
        domain_flag: q.domain_flag(),
        nodes_used: arc.evaluations + 1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonCheck {
    /// `ρ(ψ(0))`.
    pub center: f64,
    /// `∫₀¹ ρ(ψ(e^{2πiθ})) dθ`.
    pub boundary_mean: f64,
    /// `boundary_mean − center`; nonnegative by subharmonicity.
    pub defect: f64,
    pub quad_error: f64,
}

/// Mean value property of `ρ ∘ ψ` at the origin over the full circle.
pub fn poisson_check(q: &PhiQuery) -> Result<PoissonCheck> {
    check_boundary_domain(q)?;
    if !q.w.is_real() {
        return Err(Error::Precondition("the Poisson check needs a real w".into()));
    }
    let center = q.lyapunov_uh(psi_center())?;
    let arc = upper_arc_mean(q)?;
    let segment = phi(q)?;
    let boundary_mean = arc.value + 2.0 / PI * segment.value;
    Ok(PoissonCheck {
        center,
        boundary_mean,
        defect: boundary_mean - center,
        quad_error: arc.error + 2.0 / PI * segment.quad_error,
    })
}

/// Arguments of `∫₋₁¹ weight(t) L(e^{ε(t·b + (1−t²)·a)} A) dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralQuery {
    pub cocycle: Cocycle,
    pub b: Sl2Element,
    pub a: Sl2Field,
    pub epsilon: f64,
    pub eta_gen: f64,
    pub quad: QuadOptions,
    pub lyapunov: LyapunovOptions,
}

impl GeneralQuery {
    /// `b = [[0,1],[−1,0]]`, default tolerances and `η_gen`.
    pub fn new(cocycle: Cocycle, a: Sl2Field, epsilon: f64) -> Self {
        let quad = default_quad(cocycle.base());
        Self {
            cocycle,
            b: Sl2Element::rotation_generator(),
            a,
            epsilon,
            eta_gen: ETA_GEN,
            quad,
            lyapunov: LyapunovOptions::default(),
        }
    }

    pub fn domain_flag(&self) -> DomainFlag {
        let db = (self.b - Sl2Element::rotation_generator()).norm();
        if db <= self.eta_gen && self.a.sup_norm() <= self.eta_gen {
            DomainFlag::InBall
        } else {
            DomainFlag::OutOfBall
        }
    }

    /// The perturbed cocycle `x ↦ e^{ε(t·b + (1−t²)·a(x))} A(x)`.
    pub fn perturbed(&self, t: f64) -> Result<Cocycle> {
        let generator = Sl2Field::constant(&self.b)
            .scale(C64::new(self.epsilon * t, 0.0))
            .add(&self.a.scale(C64::new(self.epsilon * (1.0 - t * t), 0.0)))?;
        self.cocycle.premultiplied(Fiber::Exp { generator })
    }
}

/// The regularized functional for general cocycles.
pub fn phi_general(q: &GeneralQuery) -> Result<PhiResult> {
    if !(q.epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {}", q.epsilon)));
    }
    if !q.cocycle.is_real() || !q.b.is_real() || !q.a.is_real() {
        return Err(Error::InvalidInput("the general form takes real cocycles and generators".into()));
    }
    q.a.check_compatible(q.cocycle.base())?;
    let r = weighted_integral(|t| Ok(estimate_sample(&cocycle::lyapunov_auto(&q.perturbed(t)?, &q.lyapunov)?)), &q.quad)?;
    Ok(PhiResult { value: r.value, quad_error: r.error, domain_flag: q.domain_flag(), nodes_used: r.evaluations })
}

/// `Im dm/dε` at `ε = 0` for `m_ε = e^{ε(z·b + (1−z²)·a)} · m`, in the first
/// chart, or in the second chart when `m = ∞`. Positive values mean the
/// family pushes real directions into the upper half plane.
pub fn cone_derivative_check(b: &Sl2Element, a: &Sl2Element, z: C64, m: ExtComplex) -> f64 {
    let g = 1.0 - z * z;
    match m {
        ExtComplex::Finite(m) => {
            let quad = |e: &Sl2Element| 2.0 * e.b1 * m + e.b2 - e.b3 * m * m;
            (z * quad(b) + g * quad(a)).im
        }
        ExtComplex::Infinity => (-z * b.b3 - g * a.b3).im,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaValidation {
    pub eta: f64,
    pub halvings: u32,
    /// Smallest `check / (Im z · (1 + m²))` at the accepted radius.
    pub worst_ratio: f64,
}

fn random_element<R: Rng>(rng: &mut R, radius: f64, complex: bool) -> Sl2Element {
    let mut draw = || {
        let re = rng.random_range(-1.0..1.0);
        let im = if complex { rng.random_range(-1.0..1.0) } else { 0.0 };
        C64::new(re, im)
    };
    let e = Sl2Element::new(draw(), draw(), draw());
    let n = e.norm();
    if n == 0.0 {
        return e;
    }
    let r = radius * rng.random::<f64>();
    e.scale(C64::new(r / n, 0.0))
}

/// Runs [`cone_derivative_check`] on seeded samples of both cases of the
/// cone argument: `z` on the upper arc or at `ψ(0)` with complex `a`, and `z`
/// in `𝔻 ∩ ℍ` with real `a`. The radius is halved until every sample passes.
pub fn validate_eta_gen(eta: f64, seed: u64) -> Result<EtaValidation> {
    if !(eta > 0.0) {
        return Err(Error::InvalidInput("η_gen must be positive".into()));
    }
    let mut eta = eta;
    for halvings in 0..40 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = f64::INFINITY;
        for k in 0..ETA_SAMPLES {
            let boundary_case = k % 2 == 0;
            let z = if boundary_case {
                if k % 8 == 0 {
                    psi_center()
                } else {
                    C64::from_polar(1.0, rng.random_range(1e-6..PI - 1e-6))
                }
            } else {
                let r = rng.random::<f64>().sqrt();
                C64::from_polar(r, rng.random_range(1e-6..PI - 1e-6))
            };
            let b = Sl2Element::rotation_generator() + random_element(&mut rng, eta, false);
            let a = random_element(&mut rng, eta, boundary_case);
            let (m, scale) = if k % 16 == 1 {
                (ExtComplex::Infinity, z.im)
            } else {
                let m: f64 = rng.random_range(-1.0..1.0) / rng.random_range(0.01..1.0);
                (ExtComplex::Finite(m.into()), z.im * (1.0 + m * m))
            };
            worst = worst.min(cone_derivative_check(&b, &a, z, m) / scale);
        }
        if worst > 0.0 {
            return Ok(EtaValidation { eta, halvings, worst_ratio: worst });
        }
        eta *= 0.5;
    }
    Err(Error::Precondition("no admissible η_gen found".into()))
}

/// `Φ_{ε,δ}(v, w) = ∫₀¹ ∫_{−δ}^{δ} Φ_ε(v + εa, b·w) da db` for an arbitrary
/// inner functional `inner(a, b) -> (value, error)`, by the tensor product
/// of 15-point Kronrod rules. The error is the Kronrod–Gauss difference plus
/// the weighted inner errors.
pub fn convolve_box<F>(inner: F, delta: f64) -> Result<PhiResult>
where
    F: Fn(f64, f64) -> Result<(f64, f64)> + Sync,
{
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
    }
    let rule = kronrod_rule();
    let nodes: Vec<(usize, usize)> = (0..15).flat_map(|i| (0..15).map(move |j| (i, j))).collect();
    let values: Vec<(f64, f64)> = nodes
        .par_iter()
        .map(|&(i, j)| {
            let a = delta * rule[i].0;
            let b = 0.5 * (1.0 + rule[j].0);
            inner(a, b)
        })
        .collect::<Result<_>>()?;
    // Jacobian of [−1,1]² → [−δ,δ] × [0,1]
    let jac = delta * 0.5;
    let kronrod = numeric::sum(nodes.iter().zip(&values).map(|(&(i, j), v)| rule[i].1 * rule[j].1 * v.0));
    let gauss = numeric::sum(nodes.iter().zip(&values).map(|(&(i, j), v)| rule[i].2 * rule[j].2 * v.0));
    let inner_err = numeric::sum(nodes.iter().zip(&values).map(|(&(i, j), v)| rule[i].1 * rule[j].1 * v.1));
    Ok(PhiResult {
        value: jac * kronrod,
        quad_error: jac * ((kronrod - gauss).abs() + inner_err),
        domain_flag: DomainFlag::InBall,
        nodes_used: nodes.len(),
    })
}

/// `Φ_{ε,δ}` in the `v0 ≡ 1` form; the domain flag refers to `w` itself.
pub fn phi_convolved(q: &PhiQuery, delta: f64) -> Result<PhiResult> {
    q.validate()?;
    let eps = C64::new(q.epsilon, 0.0);
    let mut r = convolve_box(
        |a, b| {
            let inner = PhiQuery {
                v: q.v.add(&Potential::Constant(eps * a))?,
                w: q.w.scale(b.into()),
                ..q.clone()
            };
            let p = phi(&inner)?;
            Ok((p.value, p.quad_error))
        },
        delta,
    )?;
    r.domain_flag = q.domain_flag();
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticityFit {
    pub degree: usize,
    /// Chebyshev coefficients of the least-squares fit.
    pub coefficients: Vec<f64>,
    /// Largest absolute deviation of the fit on the grid.
    pub residual: f64,
    /// Largest quadrature error among the sampled values.
    pub quad_error: f64,
    pub samples: Vec<(f64, f64)>,
}

/// `n` Chebyshev points of the first kind on `[−1, 1]`, ascending.
pub fn chebyshev_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| -((2 * k + 1) as f64 * PI / (2 * n) as f64).cos()).collect()
}

/// Least-squares Chebyshev fit of degree `degree` to `(s, y)` pairs.
pub fn chebyshev_fit(samples: &[(f64, f64)], degree: usize) -> Result<(Vec<f64>, f64)> {
    if samples.len() <= degree {
        return Err(Error::InvalidInput(format!(
            "{} samples cannot determine a degree {degree} fit",
            samples.len()
        )));
    }
    let basis = |s: f64| {
        let mut t = vec![1.0; degree + 1];
        if degree >= 1 {
            t[1] = s;
        }
        for k in 2..=degree {
            t[k] = 2.0 * s * t[k - 1] - t[k - 2];
        }
        t
    };
    let m = DMatrix::from_fn(samples.len(), degree + 1, |i, k| basis(samples[i].0)[k]);
    let y = DVector::from_iterator(samples.len(), samples.iter().map(|p| p.1));
    let coef = m
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::InvalidInput(format!("least squares failed: {e}")))?;
    let residual = (&m * &coef - &y).amax();
    Ok((coef.iter().copied().collect(), residual))
}

/// Samples `s ↦ Φ_ε(v, v0, s·w)` on `s_grid` and fits polynomials of each
/// requested degree. Analyticity in `s` shows up as fast residual decay.
pub fn analyticity_probe(q: &PhiQuery, s_grid: &[f64], degrees: &[usize]) -> Result<Vec<AnalyticityFit>> {
    q.validate()?;
    let s_max = s_grid.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if !(q.w.sup_norm() * s_max < q.ball_radius()) {
        return Err(Error::Precondition("the scaled directions leave the ball of analyticity".into()));
    }
    let results: Vec<PhiResult> = s_grid
        .par_iter()
        .map(|&s| phi(&PhiQuery { w: q.w.scale(s.into()), ..q.clone() }))
        .collect::<Result<_>>()?;
    let samples: Vec<(f64, f64)> = s_grid.iter().zip(&results).map(|(&s, r)| (s, r.value)).collect();
    let quad_error = results.iter().map(|r| r.quad_error).fold(0.0, f64::max);
    degrees
        .iter()
        .map(|&d| {
            let (coefficients, residual) = chebyshev_fit(&samples, d)?;
            Ok(AnalyticityFit { degree: d, coefficients, residual, quad_error, samples: samples.clone() })
        })
        .collect()
}
