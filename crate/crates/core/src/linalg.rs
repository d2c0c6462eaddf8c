//! 2×2 complex matrices, the projective line ℂP¹ and the sl(2) exponential.
//!
//! Everything here is tolerance-audited floating point. Determinant drift is
//! reported by [`Mat2::check_unimodular`] but never silently corrected;
//! rescaling happens in the cocycle engine.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance on `|det - 1|` for matrices accepted as SL(2,ℂ) elements.
pub const DET_TOL: f64 = 1e-10;

/// Below this `|δ|` the exponential switches to its Taylor series.
const EXP_SERIES_SWITCH: f64 = 1e-4;
const EXP_SERIES_TERMS: usize = 6;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A 2×2 complex matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self { a, b, c, d }
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn diag(p: C64, q: C64) -> Self {
        Self::new(p, ZERO, ZERO, q)
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::real(c, -s, s, c)
    }

    /// The Schrödinger transfer matrix `[[u, -1], [1, 0]]`.
    pub fn schrodinger(u: C64) -> Self {
        Self::new(u, -ONE, ONE, ZERO)
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> C64 {
        self.a + self.d
    }

    pub fn entries(&self) -> [C64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    /// Inverse through the adjugate. Singular input yields non-finite entries.
    pub fn inverse(&self) -> Self {
        let det = self.det();
        Self::new(self.d / det, -self.b / det, -self.c / det, self.a / det)
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.entries().iter().all(|z| z.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries().iter().map(|z| z.norm_sqr()).sum()
    }

    /// Frobenius (Hilbert–Schmidt) norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    /// Operator norm from the closed-form 2×2 singular values:
    /// `‖A‖² = (s + √(s² − 4|det|²)) / 2` with `s` the squared Frobenius norm.
    pub fn op_norm(&self) -> f64 {
        let s = self.frobenius_sq();
        let det2 = self.det().norm_sqr();
        let disc = (s * s - 4.0 * det2).max(0.0);
        ((s + disc.sqrt()) / 2.0).sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    pub fn check_unimodular(&self, tol: f64) -> Result<()> {
        let deviation = (self.det() - ONE).norm();
        if deviation <= tol {
            Ok(())
        } else {
            Err(Error::NotUnimodular { deviation, tolerance: tol })
        }
    }

    /// Eigenvalues `(λ_big, λ_small)` ordered by modulus. `λ_small` is taken
    /// as `det / λ_big` to avoid cancellation.
    pub fn eigenvalues(&self) -> (C64, C64) {
        let half_tr = self.trace() * 0.5;
        let root = (half_tr * half_tr - self.det()).sqrt();
        let plus = half_tr + root;
        let minus = half_tr - root;
        let big = if plus.norm() >= minus.norm() { plus } else { minus };
        if big.norm() == 0.0 {
            return (ZERO, ZERO);
        }
        (big, self.det() / big)
    }

    /// `ln ρ(A)` for a unimodular matrix, clamped at zero. Real matrices with
    /// `|tr| ≤ 2` (elliptic or parabolic) return exactly 0.
    pub fn log_spectral_radius(&self) -> f64 {
        if self.is_real() && self.trace().re.abs() <= 2.0 {
            return 0.0;
        }
        let (big, _) = self.eigenvalues();
        big.norm().ln().max(0.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.a * r.a + self.b * r.c,
            self.a * r.b + self.b * r.d,
            self.c * r.a + self.d * r.c,
            self.c * r.b + self.d * r.d,
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, r: Mat2) -> Mat2 {
        Mat2::new(self.a + r.a, self.b + r.b, self.c + r.c, self.d + r.d)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, r: Mat2) -> Mat2 {
        Mat2::new(self.a - r.a, self.b - r.b, self.c - r.c, self.d - r.d)
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// A point of ℂP¹ stored as a unit homogeneous pair whose first nonzero
/// coordinate is real and positive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[C64; 2]", into = "[C64; 2]")]
pub struct ProjPoint {
    x: C64,
    y: C64,
}

impl ProjPoint {
    pub fn new(x: C64, y: C64) -> Result<Self> {
        let norm = x.norm_sqr().sqrt().hypot(y.norm());
        if !(norm > 0.0) || !norm.is_finite() {
            // retry with a rescale in case of overflow in the hypot
            let m = x.norm().max(y.norm());
            if m > 0.0 && m.is_finite() {
                return Self::new(x / m, y / m);
            }
            return Err(Error::DegenerateDirection);
        }
        let (x, y) = (x / norm, y / norm);
        let lead = if x != ZERO { x } else { y };
        let phase = lead.conj() / lead.norm();
        Ok(Self { x: x * phase, y: y * phase })
    }

    pub fn real(x: f64, y: f64) -> Result<Self> {
        Self::new(x.into(), y.into())
    }

    /// The direction of `(1, 0)`, chart value ∞.
    pub fn infinity() -> Self {
        Self { x: ONE, y: ZERO }
    }

    /// The direction of `(0, 1)`, chart value 0.
    pub fn zero() -> Self {
        Self { x: ZERO, y: ONE }
    }

    /// Direction with first-chart coordinate `w`, i.e. the line through `(w, 1)`.
    pub fn from_chart_value(w: C64) -> Self {
        Self::new(w, ONE).expect("(w, 1) is never degenerate")
    }

    pub fn x(&self) -> C64 {
        self.x
    }

    pub fn y(&self) -> C64 {
        self.y
    }

    pub fn coords(&self) -> [C64; 2] {
        [self.x, self.y]
    }

    /// Unit vector orthogonal to this direction (Hermitian inner product).
    pub fn orthogonal(&self) -> Self {
        Self::new(-self.y.conj(), self.x.conj()).expect("unit pair")
    }
}

impl TryFrom<[C64; 2]> for ProjPoint {
    type Error = Error;

    fn try_from(v: [C64; 2]) -> Result<Self> {
        Self::new(v[0], v[1])
    }
}

impl From<ProjPoint> for [C64; 2] {
    fn from(p: ProjPoint) -> Self {
        p.coords()
    }
}

/// Chordal distance `|x₁y₂ − x₂y₁|` between unit representatives; lies in [0, 1].
pub fn spherical_dist(m1: &ProjPoint, m2: &ProjPoint) -> f64 {
    (m1.x * m2.y - m2.x * m1.y).norm().min(1.0)
}

/// Projective action `m ↦ A·m`.
pub fn mobius_act(a: &Mat2, m: &ProjPoint) -> ProjPoint {
    let [x, y] = a.apply(m.coords());
    ProjPoint::new(x, y).expect("nonsingular matrix maps nonzero vectors to nonzero vectors")
}

/// `ln ‖A z‖` for the unit representative `z` of `m`.
pub fn expansion_coeff(a: &Mat2, m: &ProjPoint) -> f64 {
    let [x, y] = a.apply(m.coords());
    x.norm().hypot(y.norm()).ln()
}

/// A traceless matrix `[[b1, b2], [b3, -b1]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sl2Element {
    pub b1: C64,
    pub b2: C64,
    pub b3: C64,
}

impl Sl2Element {
    pub const fn new(b1: C64, b2: C64, b3: C64) -> Self {
        Self { b1, b2, b3 }
    }

    pub fn real(b1: f64, b2: f64, b3: f64) -> Self {
        Self::new(b1.into(), b2.into(), b3.into())
    }

    /// `[[0, 1], [-1, 0]]`, the generator of rotations.
    pub fn rotation_generator() -> Self {
        Self::real(0.0, 1.0, -1.0)
    }

    pub fn zero() -> Self {
        Self::real(0.0, 0.0, 0.0)
    }

    pub fn to_matrix(&self) -> Mat2 {
        Mat2::new(self.b1, self.b2, self.b3, -self.b1)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.b1 * s, self.b2 * s, self.b3 * s)
    }

    pub fn is_real(&self) -> bool {
        self.b1.im == 0.0 && self.b2.im == 0.0 && self.b3.im == 0.0
    }

    /// Operator norm of the matrix representative.
    pub fn norm(&self) -> f64 {
        self.to_matrix().op_norm()
    }
}

impl Add for Sl2Element {
    type Output = Sl2Element;

    fn add(self, r: Sl2Element) -> Sl2Element {
        Sl2Element::new(self.b1 + r.b1, self.b2 + r.b2, self.b3 + r.b3)
    }
}

impl Sub for Sl2Element {
    type Output = Sl2Element;

    fn sub(self, r: Sl2Element) -> Sl2Element {
        Sl2Element::new(self.b1 - r.b1, self.b2 - r.b2, self.b3 - r.b3)
    }
}

impl Neg for Sl2Element {
    type Output = Sl2Element;

    fn neg(self) -> Sl2Element {
        Sl2Element::new(-self.b1, -self.b2, -self.b3)
    }
}

/// `e^{s·b}` through `cosh(δ)·I + (sinh δ / δ)·(s·b)`, `δ² = s²(b1² + b2·b3)`.
///
/// Both coefficients are even in `δ`, so the branch of the square root is
/// irrelevant. For `|δ| < 1e-4` a six-term series replaces the closed form.
pub fn exp_sl2(b: &Sl2Element, s: C64) -> Mat2 {
    let x = b.scale(s);
    let delta_sq = x.b1 * x.b1 + x.b2 * x.b3;
    let (cosh, sinhc) = if delta_sq.norm() < EXP_SERIES_SWITCH * EXP_SERIES_SWITCH {
        let mut cosh = ZERO;
        let mut sinhc = ZERO;
        let mut power = ONE;
        let mut fact = 1.0;
        for k in 0..EXP_SERIES_TERMS {
            cosh += power / fact;
            fact *= (2 * k + 1) as f64;
            sinhc += power / fact;
            fact *= (2 * k + 2) as f64;
            power *= delta_sq;
        }
        (cosh, sinhc)
    } else {
        let delta = delta_sq.sqrt();
        (delta.cosh(), delta.sinh() / delta)
    };
    Mat2::identity().scale(cosh) + x.to_matrix().scale(sinhc)
}

/// A point of the extended complex plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtComplex {
    Finite(C64),
    Infinity,
}

impl ExtComplex {
    pub fn finite(self) -> Option<C64> {
        match self {
            ExtComplex::Finite(z) => Some(z),
            ExtComplex::Infinity => None,
        }
    }
}

/// Affine charts of ℂP¹: `First` is `x/y`, `Second` is `−y/x`.
///
/// Both send the hemisphere centred on `(i, 1)` to the upper half plane;
/// the second chart places the first chart's ∞ at 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    First,
    Second,
}

pub fn chart(m: &ProjPoint, which: Chart) -> ExtComplex {
    let (num, den) = match which {
        Chart::First => (m.x, m.y),
        Chart::Second => (-m.y, m.x),
    };
    if den == ZERO {
        ExtComplex::Infinity
    } else {
        ExtComplex::Finite(num / den)
    }
}

pub fn unchart(value: ExtComplex, which: Chart) -> ProjPoint {
    match (which, value) {
        (Chart::First, ExtComplex::Finite(w)) => ProjPoint::from_chart_value(w),
        (Chart::First, ExtComplex::Infinity) => ProjPoint::infinity(),
        (Chart::Second, ExtComplex::Finite(w)) => ProjPoint::new(ONE, -w).expect("nonzero"),
        (Chart::Second, ExtComplex::Infinity) => ProjPoint::zero(),
    }
}
