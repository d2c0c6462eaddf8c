//! Concrete base dynamics `(f, μ)`: unions of periodic orbits, circle
//! rotations with Lebesgue measure and Bernoulli shifts, plus the potentials
//! (observables) living on them and μ-integration schemes.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{self, CompensatedSum};

const SUM_TOL: f64 = 1e-12;
/// Largest continued-fraction denominator considered when flagging rational rotations.
pub const MAX_RATIONAL_DENOMINATOR: u64 = 1_000_000;
const RATIONAL_TOL: f64 = 1e-14;
const SUP_SAMPLES: usize = 4096;
const PROBE_COUNT: usize = 256;
const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Orbit {
    pub period: usize,
    pub weight: f64,
}

/// The base map together with its invariant probability measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSystem {
    PeriodicOrbits { orbits: Vec<Orbit> },
    CircleRotation { alpha: f64 },
    BernoulliShift { probabilities: Vec<f64> },
}

/// A point of the base. Shift points are two-sided symbol sequences drawn
/// from a counter-based stream; `offset` is the index of the current symbol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasePoint {
    Periodic { orbit: usize, phase: usize },
    Circle(f64),
    Shift { stream: u64, offset: i64 },
}

/// How to approximate `∫ g dμ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegrationScheme {
    /// Weighted sum over all orbit points of a periodic base.
    Exact,
    /// A single seeded orbit segment of length `n`.
    Birkhoff { n: usize, seed: u64 },
    /// Independent seeded samples from μ.
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// The golden-mean rotation number `(√5 − 1)/2`.
pub fn golden_alpha() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// Continued-fraction convergents `p/q` of `alpha` with `q ≤ max_q`.
pub fn convergents(alpha: f64, max_q: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let (mut p_prev, mut q_prev, mut p, mut q) = (1u64, 0u64, alpha.floor() as u64, 1u64);
    let mut x = alpha - alpha.floor();
    out.push((p, q));
    for _ in 0..64 {
        if x.abs() < 1e-300 {
            break;
        }
        let inv = 1.0 / x;
        let a = inv.floor();
        if !a.is_finite() || a > 1e12 {
            break;
        }
        let a = a as u64;
        let (pn, qn) = (a * p + p_prev, a * q + q_prev);
        if qn > max_q {
            break;
        }
        (p_prev, q_prev, p, q) = (p, q, pn, qn);
        out.push((p, q));
        x = inv - inv.floor();
    }
    out
}

/// `Some((p, q))` when `alpha` is numerically rational with denominator at most 10⁶.
pub fn rational_approximation(alpha: f64) -> Option<(u64, u64)> {
    convergents(alpha, MAX_RATIONAL_DENOMINATOR)
        .into_iter()
        .find(|&(p, q)| (alpha - p as f64 / q as f64).abs() < RATIONAL_TOL)
}

fn stream_word(stream: u64, index: i64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    rng.set_word_pos(2 * (index as u64) as u128);
    rng.next_u64()
}

/// Stream identifier for the `i`-th sample drawn under `seed`.
pub fn derived_stream(seed: u64, i: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng.next_u64()
}

fn seeded_unit(seed: u64) -> f64 {
    ChaCha8Rng::seed_from_u64(seed).random::<f64>()
}

impl BaseSystem {
    pub fn periodic(period: usize) -> Self {
        BaseSystem::PeriodicOrbits { orbits: vec![Orbit { period, weight: 1.0 }] }
    }

    pub fn fixed_point() -> Self {
        Self::periodic(1)
    }

    pub fn rotation(alpha: f64) -> Self {
        BaseSystem::CircleRotation { alpha }
    }

    pub fn golden_rotation() -> Self {
        Self::rotation(golden_alpha())
    }

    pub fn bernoulli(probabilities: Vec<f64>) -> Self {
        BaseSystem::BernoulliShift { probabilities }
    }

    pub fn family(&self) -> &'static str {
        match self {
            BaseSystem::PeriodicOrbits { .. } => "periodic_orbits",
            BaseSystem::CircleRotation { .. } => "circle_rotation",
            BaseSystem::BernoulliShift { .. } => "bernoulli_shift",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaseSystem::PeriodicOrbits { orbits } => {
                if orbits.is_empty() || orbits.iter().any(|o| o.period == 0 || !(o.weight >= 0.0)) {
                    return Err(Error::InvalidInput("orbits need positive periods and nonnegative weights".into()));
                }
                let total: f64 = numeric::sum(orbits.iter().map(|o| o.weight));
                if (total - 1.0).abs() > SUM_TOL {
                    return Err(Error::InvalidInput(format!("orbit weights sum to {total}, not 1")));
                }
            }
            BaseSystem::CircleRotation { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(Error::InvalidInput(format!("rotation number {alpha} outside (0, 1)")));
                }
            }
            BaseSystem::BernoulliShift { probabilities } => {
                if probabilities.len() < 2 || probabilities.iter().any(|p| !(*p >= 0.0)) {
                    return Err(Error::InvalidInput("a shift needs at least two symbols with nonnegative probabilities".into()));
                }
                let total: f64 = numeric::sum(probabilities.iter().copied());
                if (total - 1.0).abs() > SUM_TOL {
                    return Err(Error::InvalidInput(format!("symbol probabilities sum to {total}, not 1")));
                }
            }
        }
        Ok(())
    }

    /// Whether μ is supported on periodic orbits: always for periodic bases,
    /// for rotations whose number is numerically rational, never for shifts.
    pub fn is_periodic(&self) -> bool {
        match self {
            BaseSystem::PeriodicOrbits { .. } => true,
            BaseSystem::CircleRotation { alpha } => rational_approximation(*alpha).is_some(),
            BaseSystem::BernoulliShift { .. } => false,
        }
    }

    pub fn symbol_count(&self) -> Option<usize> {
        match self {
            BaseSystem::BernoulliShift { probabilities } => Some(probabilities.len()),
            _ => None,
        }
    }

    /// The symbol at position `index` of the sequence identified by `stream`.
    pub fn symbol(&self, stream: u64, index: i64) -> usize {
        let BaseSystem::BernoulliShift { probabilities } = self else {
            return 0;
        };
        let u = (stream_word(stream, index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let mut acc = 0.0;
        for (k, p) in probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    /// Symbols `x_0, …, x_{len-1}` of a shift point.
    pub fn window(&self, x: &BasePoint, len: usize) -> Vec<usize> {
        match x {
            BasePoint::Shift { stream, offset } => {
                (0..len as i64).map(|j| self.symbol(*stream, offset + j)).collect()
            }
            _ => Vec::new(),
        }
    }

    pub fn contains(&self, x: &BasePoint) -> bool {
        match (self, x) {
            (BaseSystem::PeriodicOrbits { orbits }, BasePoint::Periodic { orbit, phase }) => {
                orbits.get(*orbit).is_some_and(|o| *phase < o.period)
            }
            (BaseSystem::CircleRotation { .. }, BasePoint::Circle(t)) => (0.0..1.0).contains(t),
            (BaseSystem::BernoulliShift { .. }, BasePoint::Shift { .. }) => true,
            _ => false,
        }
    }

    fn check_point(&self, x: &BasePoint) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::FamilyMismatch(format!("point {x:?} does not belong to a {} base", self.family())))
        }
    }

    /// One application of `f`.
    pub fn step(&self, x: &BasePoint) -> Result<BasePoint> {
        self.check_point(x)?;
        Ok(self.step_unchecked(x))
    }

    /// One application of `f⁻¹`.
    pub fn step_back(&self, x: &BasePoint) -> Result<BasePoint> {
        self.check_point(x)?;
        Ok(self.step_back_unchecked(x))
    }

    pub(crate) fn step_unchecked(&self, x: &BasePoint) -> BasePoint {
        match (self, *x) {
            (BaseSystem::PeriodicOrbits { orbits }, BasePoint::Periodic { orbit, phase }) => {
                BasePoint::Periodic { orbit, phase: (phase + 1) % orbits[orbit].period }
            }
            (BaseSystem::CircleRotation { alpha }, BasePoint::Circle(t)) => BasePoint::Circle(wrap_unit(t + alpha)),
            (_, BasePoint::Shift { stream, offset }) => BasePoint::Shift { stream, offset: offset + 1 },
            (_, p) => p,
        }
    }

    pub(crate) fn step_back_unchecked(&self, x: &BasePoint) -> BasePoint {
        match (self, *x) {
            (BaseSystem::PeriodicOrbits { orbits }, BasePoint::Periodic { orbit, phase }) => {
                let n = orbits[orbit].period;
                BasePoint::Periodic { orbit, phase: (phase + n - 1) % n }
            }
            (BaseSystem::CircleRotation { alpha }, BasePoint::Circle(t)) => BasePoint::Circle(wrap_unit(t - alpha)),
            (_, BasePoint::Shift { stream, offset }) => BasePoint::Shift { stream, offset: offset - 1 },
            (_, p) => p,
        }
    }

    /// `f^k(x)` for any integer `k`.
    pub fn advance(&self, x: &BasePoint, k: i64) -> BasePoint {
        match (self, *x) {
            (BaseSystem::PeriodicOrbits { orbits }, BasePoint::Periodic { orbit, phase }) => {
                let n = orbits[orbit].period as i64;
                BasePoint::Periodic { orbit, phase: (phase as i64 + k).rem_euclid(n) as usize }
            }
            (BaseSystem::CircleRotation { alpha }, BasePoint::Circle(t)) => {
                BasePoint::Circle(wrap_unit(t + (k as f64 * alpha).rem_euclid(1.0)))
            }
            (_, BasePoint::Shift { stream, offset }) => BasePoint::Shift { stream, offset: offset + k },
            (_, p) => p,
        }
    }

    /// All orbit points of a periodic base with their μ-masses.
    pub fn periodic_points(&self) -> Vec<(BasePoint, f64)> {
        match self {
            BaseSystem::PeriodicOrbits { orbits } => orbits
                .iter()
                .enumerate()
                .flat_map(|(j, o)| {
                    (0..o.period).map(move |phase| (BasePoint::Periodic { orbit: j, phase }, o.weight / o.period as f64))
                })
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Deterministic probe points: every orbit point, a 256-point grid on the
    /// circle, or 256 seeded symbol sequences.
    pub fn probe_points(&self, seed: u64) -> Vec<BasePoint> {
        match self {
            BaseSystem::PeriodicOrbits { .. } => self.periodic_points().into_iter().map(|(p, _)| p).collect(),
            BaseSystem::CircleRotation { .. } => {
                (0..PROBE_COUNT).map(|k| BasePoint::Circle(k as f64 / PROBE_COUNT as f64)).collect()
            }
            BaseSystem::BernoulliShift { .. } => (0..PROBE_COUNT as u64)
                .map(|i| BasePoint::Shift { stream: derived_stream(seed, i), offset: 0 })
                .collect(),
        }
    }

    /// A μ-distributed starting point for the `i`-th sample under `seed`.
    pub fn sample_point(&self, seed: u64, i: u64) -> BasePoint {
        match self {
            BaseSystem::PeriodicOrbits { .. } => {
                let pts = self.periodic_points();
                let mut u = seeded_unit(derived_stream(seed, i));
                for (p, w) in &pts {
                    if u < *w {
                        return *p;
                    }
                    u -= w;
                }
                pts.last().map(|(p, _)| *p).unwrap_or(BasePoint::Periodic { orbit: 0, phase: 0 })
            }
            BaseSystem::CircleRotation { .. } => BasePoint::Circle(seeded_unit(derived_stream(seed, i))),
            BaseSystem::BernoulliShift { .. } => BasePoint::Shift { stream: derived_stream(seed, i), offset: 0 },
        }
    }

    /// `∫ g dμ` with an error estimate.
    pub fn integrate<G>(&self, g: G, scheme: &IntegrationScheme) -> Result<Integral>
    where
        G: Fn(&BasePoint) -> f64 + Sync,
    {
        match (self, scheme) {
            (BaseSystem::PeriodicOrbits { .. }, IntegrationScheme::Exact) => {
                let pts = self.periodic_points();
                let values: Vec<f64> = pts.par_iter().map(|(p, w)| w * g(p)).collect();
                Ok(Integral { value: numeric::sum(values), error: 0.0 })
            }
            (BaseSystem::PeriodicOrbits { .. }, _) | (_, IntegrationScheme::Exact) => Err(Error::FamilyMismatch(
                format!("scheme {scheme:?} is not available on a {} base", self.family()),
            )),
            (_, IntegrationScheme::Birkhoff { n, seed }) => {
                if *n < 2 {
                    return Err(Error::InvalidInput("a Birkhoff average needs n ≥ 2".into()));
                }
                let start = self.sample_point(*seed, 0);
                let half = n / 2;
                let sum_range = |lo: usize, hi: usize| -> f64 {
                    let chunks: Vec<(usize, usize)> =
                        (lo..hi).step_by(CHUNK).map(|c| (c, (c + CHUNK).min(hi))).collect();
                    let partial: Vec<f64> = chunks
                        .par_iter()
                        .map(|&(a, b)| {
                            let mut s = CompensatedSum::new();
                            let mut x = self.advance(&start, a as i64);
                            for _ in a..b {
                                s.add(g(&x));
                                x = self.step_unchecked(&x);
                            }
                            s.value()
                        })
                        .collect();
                    numeric::sum(partial)
                };
                let first = sum_range(0, half);
                let second = sum_range(half, *n);
                let full = (first + second) / *n as f64;
                let half_mean = first / half as f64;
                Ok(Integral { value: full, error: (full - half_mean).abs() })
            }
            (_, IntegrationScheme::MonteCarlo { samples, seed }) => {
                if *samples == 0 {
                    return Err(Error::InvalidInput("Monte Carlo needs at least one sample".into()));
                }
                let values: Vec<f64> =
                    (0..*samples as u64).into_par_iter().map(|i| g(&self.sample_point(*seed, i))).collect();
                let (mean, stderr) = numeric::mean_and_stderr(&values);
                Ok(Integral { value: mean, error: stderr })
            }
        }
    }
}

fn wrap_unit(t: f64) -> f64 {
    // one rotation step leaves [0, 1) by at most one unit
    if (0.0..1.0).contains(&t) {
        return t;
    }
    if (1.0..2.0).contains(&t) && t - 1.0 < 1.0 {
        return t - 1.0;
    }
    let w = t.rem_euclid(1.0);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// A real or complex observable on a base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "PotentialDto", try_from = "PotentialDto")]
pub enum Potential {
    /// The same value at every point of any base.
    Constant(C64),
    /// `values[j][k]` at phase `k` of orbit `j`.
    PeriodicTable { values: Vec<Vec<C64>> },
    /// `constant + Σ_k cos[k-1]·cos(2πkx) + sin[k-1]·sin(2πkx)`.
    TrigPolynomial { constant: C64, cos: Vec<C64>, sin: Vec<C64> },
    /// Locally constant on cylinders of length `depth`: the value at a sequence
    /// is `values[Σ_j x_j · symbols^j]`.
    CylinderTable { depth: usize, symbols: usize, values: Vec<C64> },
}

impl Potential {
    pub fn constant(c: f64) -> Self {
        Potential::Constant(c.into())
    }

    /// A table on a single periodic orbit.
    pub fn periodic(values: &[f64]) -> Self {
        Potential::PeriodicTable { values: vec![values.iter().map(|&v| v.into()).collect()] }
    }

    pub fn periodic_complex(values: Vec<C64>) -> Self {
        Potential::PeriodicTable { values: vec![values] }
    }

    /// `cos(2πkx)`, or the constant 1 for `k = 0`.
    pub fn cosine(k: usize) -> Self {
        if k == 0 {
            return Potential::constant(1.0);
        }
        let mut cos = vec![C64::new(0.0, 0.0); k];
        cos[k - 1] = 1.0.into();
        Potential::TrigPolynomial { constant: 0.0.into(), cos, sin: Vec::new() }
    }

    /// `sin(2πkx)` for `k ≥ 1`.
    pub fn sine(k: usize) -> Self {
        let mut sin = vec![C64::new(0.0, 0.0); k.max(1)];
        sin[k.max(1) - 1] = 1.0.into();
        Potential::TrigPolynomial { constant: 0.0.into(), cos: Vec::new(), sin }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Potential::Constant(_) => "constant",
            Potential::PeriodicTable { .. } => "periodic_table",
            Potential::TrigPolynomial { .. } => "trig_polynomial",
            Potential::CylinderTable { .. } => "cylinder_table",
        }
    }

    fn values(&self) -> Box<dyn Iterator<Item = &C64> + '_> {
        match self {
            Potential::Constant(c) => Box::new(std::iter::once(c)),
            Potential::PeriodicTable { values } => Box::new(values.iter().flatten()),
            Potential::TrigPolynomial { constant, cos, sin } => {
                Box::new(std::iter::once(constant).chain(cos.iter()).chain(sin.iter()))
            }
            Potential::CylinderTable { values, .. } => Box::new(values.iter()),
        }
    }

    pub fn is_real(&self) -> bool {
        self.values().all(|z| z.im == 0.0)
    }

    /// Whether this representation can be evaluated on `base`.
    pub fn check_compatible(&self, base: &BaseSystem) -> Result<()> {
        let ok = match (self, base) {
            (Potential::Constant(_), _) => true,
            (Potential::PeriodicTable { values }, BaseSystem::PeriodicOrbits { orbits }) => {
                values.len() == orbits.len() && values.iter().zip(orbits).all(|(v, o)| v.len() == o.period)
            }
            (Potential::TrigPolynomial { .. }, BaseSystem::CircleRotation { .. }) => true,
            (Potential::CylinderTable { depth, symbols, values }, BaseSystem::BernoulliShift { probabilities }) => {
                *symbols == probabilities.len()
                    && *depth >= 1
                    && symbols.checked_pow(*depth as u32) == Some(values.len())
            }
            _ => false,
        };
        if ok && self.values().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::FamilyMismatch(format!(
                "a {} potential does not fit this {} base",
                self.kind(),
                base.family()
            )))
        }
    }

    /// Value at `x`. The pair must have passed [`Potential::check_compatible`];
    /// otherwise NaN is returned.
    pub fn eval(&self, base: &BaseSystem, x: &BasePoint) -> C64 {
        match (self, x) {
            (Potential::Constant(c), _) => *c,
            (Potential::PeriodicTable { values }, BasePoint::Periodic { orbit, phase }) => values
                .get(*orbit)
                .and_then(|v| v.get(*phase))
                .copied()
                .unwrap_or(C64::new(f64::NAN, f64::NAN)),
            (Potential::TrigPolynomial { .. }, BasePoint::Circle(t)) => self.eval_circle(*t),
            (Potential::CylinderTable { depth, symbols, values }, BasePoint::Shift { stream, offset }) => {
                let mut index = 0usize;
                let mut place = 1usize;
                for j in 0..*depth as i64 {
                    index += base.symbol(*stream, offset + j) * place;
                    place *= symbols;
                }
                values.get(index).copied().unwrap_or(C64::new(f64::NAN, f64::NAN))
            }
            _ => C64::new(f64::NAN, f64::NAN),
        }
    }

    /// Evaluation of a trigonometric polynomial (or constant) at `t ∈ ℝ/ℤ`.
    pub fn eval_circle(&self, t: f64) -> C64 {
        match self {
            Potential::Constant(c) => *c,
            Potential::TrigPolynomial { constant, cos, sin } => {
                let base = C64::from_polar(1.0, 2.0 * PI * t);
                let mut power = C64::new(1.0, 0.0);
                let mut acc = *constant;
                for k in 0..cos.len().max(sin.len()) {
                    power *= base;
                    if let Some(c) = cos.get(k) {
                        acc += c * power.re;
                    }
                    if let Some(s) = sin.get(k) {
                        acc += s * power.im;
                    }
                }
                acc
            }
            _ => C64::new(f64::NAN, f64::NAN),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    fn map<F: Fn(C64) -> C64>(&self, f: F) -> Self {
        match self {
            Potential::Constant(c) => Potential::Constant(f(*c)),
            Potential::PeriodicTable { values } => {
                Potential::PeriodicTable { values: values.iter().map(|v| v.iter().map(|z| f(*z)).collect()).collect() }
            }
            Potential::TrigPolynomial { constant, cos, sin } => Potential::TrigPolynomial {
                constant: f(*constant),
                cos: cos.iter().map(|z| f(*z)).collect(),
                sin: sin.iter().map(|z| f(*z)).collect(),
            },
            Potential::CylinderTable { depth, symbols, values } => Potential::CylinderTable {
                depth: *depth,
                symbols: *symbols,
                values: values.iter().map(|z| f(*z)).collect(),
            },
        }
    }

    /// The constant potential `c` in the representation of `self`.
    fn constant_like(&self, c: C64) -> Self {
        match self {
            Potential::Constant(_) => Potential::Constant(c),
            Potential::PeriodicTable { values } => {
                Potential::PeriodicTable { values: values.iter().map(|v| vec![c; v.len()]).collect() }
            }
            Potential::TrigPolynomial { .. } => Potential::TrigPolynomial { constant: c, cos: Vec::new(), sin: Vec::new() },
            Potential::CylinderTable { depth, symbols, values } => {
                Potential::CylinderTable { depth: *depth, symbols: *symbols, values: vec![c; values.len()] }
            }
        }
    }

    fn lift_cylinder(&self, new_depth: usize) -> Self {
        match self {
            Potential::CylinderTable { depth, symbols, values } if new_depth > *depth => {
                let size = symbols.pow(new_depth as u32);
                let modulus = values.len();
                Potential::CylinderTable {
                    depth: new_depth,
                    symbols: *symbols,
                    values: (0..size).map(|i| values[i % modulus]).collect(),
                }
            }
            p => p.clone(),
        }
    }

    /// Pointwise sum; a constant is promoted to the other representation.
    pub fn add(&self, other: &Potential) -> Result<Potential> {
        use Potential::*;
        let mismatch = || Error::FamilyMismatch(format!("cannot add {} and {} potentials", self.kind(), other.kind()));
        match (self, other) {
            (Constant(a), Constant(b)) => Ok(Constant(a + b)),
            (Constant(a), p) => p.add(&p.constant_like(*a)),
            (p, Constant(b)) => p.add(&p.constant_like(*b)),
            (PeriodicTable { values: a }, PeriodicTable { values: b }) => {
                if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.len() != y.len()) {
                    return Err(mismatch());
                }
                Ok(PeriodicTable {
                    values: a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect()).collect(),
                })
            }
            (TrigPolynomial { constant: c1, cos: a1, sin: b1 }, TrigPolynomial { constant: c2, cos: a2, sin: b2 }) => {
                let pad = |x: &Vec<C64>, y: &Vec<C64>| -> Vec<C64> {
                    let zero = C64::new(0.0, 0.0);
                    (0..x.len().max(y.len()))
                        .map(|k| x.get(k).copied().unwrap_or(zero) + y.get(k).copied().unwrap_or(zero))
                        .collect()
                };
                Ok(TrigPolynomial { constant: c1 + c2, cos: pad(a1, a2), sin: pad(b1, b2) })
            }
            (CylinderTable { depth: d1, symbols: s1, .. }, CylinderTable { depth: d2, symbols: s2, .. }) => {
                if s1 != s2 {
                    return Err(mismatch());
                }
                let depth = (*d1).max(*d2);
                match (self.lift_cylinder(depth), other.lift_cylinder(depth)) {
                    (CylinderTable { values: a, .. }, CylinderTable { values: b, .. }) => Ok(CylinderTable {
                        depth,
                        symbols: *s1,
                        values: a.iter().zip(&b).map(|(p, q)| p + q).collect(),
                    }),
                    _ => Err(mismatch()),
                }
            }
            _ => Err(mismatch()),
        }
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &Potential, s: C64) -> Result<Potential> {
        self.add(&other.scale(s))
    }

    /// An upper bound on the sup-norm: exact except for trigonometric
    /// polynomials, where the coefficient ℓ¹ norm is used.
    pub fn sup_norm(&self) -> f64 {
        match self {
            Potential::TrigPolynomial { .. } => self.values().map(|z| z.norm()).sum(),
            _ => self.values().map(|z| z.norm()).fold(0.0, f64::max),
        }
    }

    /// `(lower, upper)` bounds on the sup-norm. Trigonometric polynomials are
    /// sampled at 4096 points for the lower bound.
    pub fn sup_norm_bounds(&self) -> (f64, f64) {
        match self {
            Potential::TrigPolynomial { .. } => {
                let lower = (0..SUP_SAMPLES)
                    .map(|k| self.eval_circle(k as f64 / SUP_SAMPLES as f64).norm())
                    .fold(0.0, f64::max);
                (lower, self.sup_norm())
            }
            _ => (self.sup_norm(), self.sup_norm()),
        }
    }

    /// A lower bound on `inf Re v`: exact for tables, coefficient-based for
    /// trigonometric polynomials.
    pub fn inf_real(&self) -> f64 {
        match self {
            Potential::Constant(c) => c.re,
            Potential::TrigPolynomial { constant, cos, sin } => {
                constant.re - cos.iter().chain(sin).map(|z| z.norm()).sum::<f64>()
            }
            _ => self.values().map(|z| z.re).fold(f64::INFINITY, f64::min),
        }
    }
}

/// A JSON scalar: a real number or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl From<C64> for Scalar {
    fn from(z: C64) -> Self {
        if z.im == 0.0 {
            Scalar::Real(z.re)
        } else {
            Scalar::Complex([z.re, z.im])
        }
    }
}

impl From<Scalar> for C64 {
    fn from(s: Scalar) -> Self {
        match s {
            Scalar::Real(re) => C64::new(re, 0.0),
            Scalar::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialDto {
    Constant {
        value: Scalar,
    },
    PeriodicTable {
        values: Vec<Vec<Scalar>>,
    },
    TrigPolynomial {
        #[serde(default = "zero_scalar")]
        constant: Scalar,
        #[serde(default)]
        cos: Vec<Scalar>,
        #[serde(default)]
        sin: Vec<Scalar>,
    },
    CylinderTable {
        depth: usize,
        symbols: usize,
        values: Vec<Scalar>,
    },
}

fn zero_scalar() -> Scalar {
    Scalar::Real(0.0)
}

fn to_c(v: &[Scalar]) -> Vec<C64> {
    v.iter().map(|&s| s.into()).collect()
}

fn to_s(v: &[C64]) -> Vec<Scalar> {
    v.iter().map(|&z| z.into()).collect()
}

impl From<Potential> for PotentialDto {
    fn from(p: Potential) -> Self {
        match p {
            Potential::Constant(c) => PotentialDto::Constant { value: c.into() },
            Potential::PeriodicTable { values } => {
                PotentialDto::PeriodicTable { values: values.iter().map(|v| to_s(v)).collect() }
            }
            Potential::TrigPolynomial { constant, cos, sin } => {
                PotentialDto::TrigPolynomial { constant: constant.into(), cos: to_s(&cos), sin: to_s(&sin) }
            }
            Potential::CylinderTable { depth, symbols, values } => {
                PotentialDto::CylinderTable { depth, symbols, values: to_s(&values) }
            }
        }
    }
}

impl TryFrom<PotentialDto> for Potential {
    type Error = Error;

    fn try_from(d: PotentialDto) -> Result<Self> {
        Ok(match d {
            PotentialDto::Constant { value } => Potential::Constant(value.into()),
            PotentialDto::PeriodicTable { values } => {
                if values.is_empty() || values.iter().any(|v| v.is_empty()) {
                    return Err(Error::InvalidInput("periodic tables need at least one value per orbit".into()));
                }
                Potential::PeriodicTable { values: values.iter().map(|v| to_c(v)).collect() }
            }
            PotentialDto::TrigPolynomial { constant, cos, sin } => {
                Potential::TrigPolynomial { constant: constant.into(), cos: to_c(&cos), sin: to_c(&sin) }
            }
            PotentialDto::CylinderTable { depth, symbols, values } => {
                if depth == 0 || symbols < 2 || symbols.checked_pow(depth as u32) != Some(values.len()) {
                    return Err(Error::InvalidInput("cylinder table needs symbols^depth values".into()));
                }
                Potential::CylinderTable { depth, symbols, values: to_c(&values) }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_examples() {
        let base = BaseSystem::periodic(3);
        let x = BasePoint::Periodic { orbit: 0, phase: 2 };
        assert_eq!(base.step(&x).unwrap(), BasePoint::Periodic { orbit: 0, phase: 0 });

        let rot = BaseSystem::rotation(0.25);
        match rot.step(&BasePoint::Circle(0.9)).unwrap() {
            BasePoint::Circle(t) => assert!((t - 0.15).abs() < 1e-15),
            p => panic!("unexpected {p:?}"),
        }

        let shift = BaseSystem::bernoulli(vec![0.5, 0.5]);
        let x = BasePoint::Shift { stream: 7, offset: 0 };
        let y = shift.step(&x).unwrap();
        assert_eq!(shift.window(&x, 9)[1..], shift.window(&y, 8)[..]);
        assert_eq!(shift.step_back(&y).unwrap(), x);

        assert!(matches!(rot.step(&x), Err(Error::FamilyMismatch(_))));
    }

    #[test]
    fn advance_agrees_with_steps() {
        for base in [BaseSystem::periodic(5), BaseSystem::golden_rotation(), BaseSystem::bernoulli(vec![0.3, 0.7])] {
            let x = base.sample_point(3, 1);
            let mut y = x;
            for _ in 0..13 {
                y = base.step(&y).unwrap();
            }
            let z = base.advance(&x, 13);
            match (y, z) {
                (BasePoint::Circle(a), BasePoint::Circle(b)) => assert!((a - b).abs() < 1e-12),
                (a, b) => assert_eq!(a, b),
            }
            let back = base.advance(&z, -13);
            match (back, x) {
                (BasePoint::Circle(a), BasePoint::Circle(b)) => assert!((a - b).abs() < 1e-12),
                (a, b) => assert_eq!(a, b),
            }
        }
    }

    #[test]
    fn integrate_examples() {
        let r = BaseSystem::fixed_point().integrate(|_| 2.5, &IntegrationScheme::Exact).unwrap();
        assert_eq!((r.value, r.error), (2.5, 0.0));

        let rot = BaseSystem::golden_rotation();
        let cos = |x: &BasePoint| match x {
            BasePoint::Circle(t) => (2.0 * PI * t).cos(),
            _ => f64::NAN,
        };
        let r = rot.integrate(cos, &IntegrationScheme::Birkhoff { n: 100_000, seed: 1 }).unwrap();
        assert!(r.value.abs() < 1e-4);

        let shift = BaseSystem::bernoulli(vec![0.5, 0.5]);
        let first = |x: &BasePoint| shift.window(x, 1)[0] as f64;
        let r = shift.integrate(first, &IntegrationScheme::MonteCarlo { samples: 1_000_000, seed: 9 }).unwrap();
        assert!((r.value - 0.5).abs() <= 3.0 * r.error);
        assert!(r.error > 0.0 && r.error < 1e-3);
    }

    #[test]
    fn scheme_mismatch_is_rejected() {
        let err = BaseSystem::golden_rotation().integrate(|_| 1.0, &IntegrationScheme::Exact);
        assert!(matches!(err, Err(Error::FamilyMismatch(_))));
        let err = BaseSystem::periodic(2).integrate(|_| 1.0, &IntegrationScheme::MonteCarlo { samples: 4, seed: 0 });
        assert!(matches!(err, Err(Error::FamilyMismatch(_))));
    }

    #[test]
    fn rationality_flag() {
        assert!(!BaseSystem::golden_rotation().is_periodic());
        assert!(BaseSystem::rotation(0.375).is_periodic());
        assert!(BaseSystem::rotation(1.0 / 7.0).is_periodic());
        assert!(!BaseSystem::rotation(2f64.sqrt() - 1.0).is_periodic());
        assert!(BaseSystem::periodic(4).is_periodic());
        assert!(!BaseSystem::bernoulli(vec![0.5, 0.5]).is_periodic());
    }

    #[test]
    fn validation() {
        assert!(BaseSystem::bernoulli(vec![0.5, 0.4]).validate().is_err());
        assert!(BaseSystem::rotation(1.5).validate().is_err());
        let two = BaseSystem::PeriodicOrbits {
            orbits: vec![Orbit { period: 2, weight: 0.25 }, Orbit { period: 3, weight: 0.75 }],
        };
        assert!(two.validate().is_ok());
        assert_eq!(two.periodic_points().len(), 5);
        let total: f64 = two.periodic_points().iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn potential_arithmetic() {
        let v = Potential::cosine(2).add(&Potential::constant(1.0)).unwrap();
        let t = 0.3;
        let expect = 1.0 + (4.0 * PI * t).cos();
        assert!((v.eval_circle(t).re - expect).abs() < 1e-14);
        assert_eq!(v.sup_norm(), 2.0);
        let (lo, hi) = v.sup_norm_bounds();
        assert!(lo <= hi && (hi - lo) < 1e-6);

        let a = Potential::CylinderTable { depth: 1, symbols: 2, values: vec![1.0.into(), 2.0.into()] };
        let b = Potential::CylinderTable {
            depth: 2,
            symbols: 2,
            values: vec![0.0.into(), 10.0.into(), 20.0.into(), 30.0.into()],
        };
        let shift = BaseSystem::bernoulli(vec![0.5, 0.5]);
        let s = a.add(&b).unwrap();
        s.check_compatible(&shift).unwrap();
        for stream in 0..20 {
            let x = BasePoint::Shift { stream, offset: 3 };
            let lhs = s.eval(&shift, &x);
            let rhs = a.eval(&shift, &x) + b.eval(&shift, &x);
            assert_eq!(lhs, rhs);
        }
        assert!(Potential::periodic(&[1.0, 2.0]).add(&Potential::cosine(1)).is_err());
        assert_eq!(Potential::periodic(&[1.0, -3.0]).inf_real(), -3.0);
    }

    #[test]
    fn potential_json_round_trip() {
        let v = Potential::PeriodicTable { values: vec![vec![C64::new(1.0, 0.0), C64::new(0.5, -2.0)]] };
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"{"kind":"periodic_table","values":[[1.0,[0.5,-2.0]]]}"#);
        let back: Potential = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        let base: BaseSystem = serde_json::from_str(r#"{"family":"circle_rotation","alpha":0.25}"#).unwrap();
        assert_eq!(base, BaseSystem::rotation(0.25));
        assert!(serde_json::from_str::<BaseSystem>(r#"{"family":"circle_rotation","alpha":0.25,"x":1}"#).is_err());
    }
}
