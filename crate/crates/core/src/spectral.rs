//! Periodic discrete Schrödinger operators: the discriminant, band
//! structure, integrated density of states and the Thouless formula.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::numeric;
use crate::quadrature::{self, QuadOptions};

/// Gaps narrower than this are reported as closed.
pub const DEFAULT_RESOLUTION: f64 = 1e-9;
const EDGE_TOL: f64 = 1e-12;
/// A gap whose discriminant exceeds 2 in modulus by at most this much at the
/// critical point is numerically closed: its edges are only determined to
/// about the square root of the rounding error in `t`.
const CLOSED_GAP_EXCESS: f64 = 1e-11;
const SAMPLES_PER_PERIOD: usize = 64;
const MAX_PERTURB_ATTEMPTS: usize = 50;
const PERTURB_MAX: f64 = 0.05;

/// A real potential of period `n ≥ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PeriodicPotential {
    values: Vec<f64>,
}

impl PeriodicPotential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("a periodic potential needs at least one finite value".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn period(&self) -> usize {
        self.values.len()
    }

    /// `[min v − 2, max v + 2]`, which contains the spectrum.
    pub fn spectral_window(&self) -> (f64, f64) {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo - 2.0, hi + 2.0)
    }

    /// The monodromy `A_n^{(E−v)}(x₀)` started at index 0.
    pub fn monodromy(&self, energy: C64) -> Mat2 {
        self.values
            .iter()
            .fold(Mat2::identity(), |m, &v| Mat2::schrodinger(energy - v) * m)
    }

    /// `t(E)` and `t'(E)` for real `E`, by forward differentiation of the product.
    pub fn discriminant_with_derivative(&self, energy: f64) -> (f64, f64) {
        // m = [[a, b], [c, d]], dm its derivative
        let (mut a, mut b, mut c, mut d) = (1.0, 0.0, 0.0, 1.0);
        let (mut da, mut db, mut dc, mut dd) = (0.0, 0.0, 0.0, 0.0);
        for &v in &self.values {
            let u = energy - v;
            let (na, nb, nc, nd) = (u * a - c, u * b - d, a, b);
            let (nda, ndb) = (a + u * da - dc, b + u * db - dd);
            let (ndc, ndd) = (da, db);
            (a, b, c, d) = (na, nb, nc, nd);
            (da, db, dc, dd) = (nda, ndb, ndc, ndd);
        }
        (a + d, da + dd)
    }

    fn t(&self, energy: f64) -> f64 {
        self.discriminant_with_derivative(energy).0
    }
}

impl TryFrom<Vec<f64>> for PeriodicPotential {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<PeriodicPotential> for Vec<f64> {
    fn from(p: PeriodicPotential) -> Self {
        p.values
    }
}

/// `tr A_n^{(E−v)}(x₀)`, evaluated by direct matrix product.
pub fn discriminant(v: &PeriodicPotential, energy: C64) -> C64 {
    v.monodromy(energy).trace()
}

/// The spectrum `{E : |t(E)| ≤ 2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    /// Disjoint bands after merging gaps narrower than the resolution.
    pub bands: Vec<(f64, f64)>,
    /// The `n` Floquet bands `t⁻¹([−2, 2])` on the monotone branches of `t`,
    /// before merging.
    pub floquet: Vec<(f64, f64)>,
    pub resolution: f64,
}

impl BandStructure {
    pub fn count(&self) -> usize {
        self.bands.len()
    }

    /// Open gaps `(right edge of band k, left edge of band k+1)`.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.bands.windows(2).map(|w| (w[0].1, w[1].0)).collect()
    }

    pub fn contains(&self, energy: f64) -> bool {
        self.bands.iter().any(|&(a, b)| a <= energy && energy <= b)
    }
}

/// The `n − 1` critical points of `t`, found from sign changes of `t'` on a
/// grid and refined by bisection. The grid is refined until all are found.
fn critical_points(v: &PeriodicPotential) -> Vec<f64> {
    let n = v.period();
    if n == 1 {
        return Vec::new();
    }
    let (lo, hi) = v.spectral_window();
    let mut per_period = SAMPLES_PER_PERIOD;
    loop {
        let m = per_period * n;
        let h = (hi - lo) / m as f64;
        let grid: Vec<(f64, f64)> = (0..=m)
            .into_par_iter()
            .map(|k| {
                let e = lo + h * k as f64;
                (e, v.discriminant_with_derivative(e).1)
            })
            .collect();
        let mut found = Vec::with_capacity(n - 1);
        for w in grid.windows(2) {
            let ((e0, d0), (e1, d1)) = (w[0], w[1]);
            if d0 == 0.0 {
                found.push(e0);
            } else if (d0 < 0.0) != (d1 < 0.0) && d1 != 0.0 {
                found.push(numeric::bisect(|e| v.discriminant_with_derivative(e).1, e0, e1, EDGE_TOL));
            }
        }
        if found.len() >= n - 1 || per_period >= SAMPLES_PER_PERIOD << 10 {
            found.truncate(n - 1);
            return found;
        }
        per_period *= 4;
    }
}

/// Solves `t(E) = target` on a segment where `t` is monotone.
fn solve_monotone(v: &PeriodicPotential, target: f64, lo: f64, hi: f64) -> f64 {
    numeric::bisect(|e| v.t(e) - target, lo, hi, EDGE_TOL)
}

/// Band edges of `{|t| ≤ 2}` on each monotone branch of `t`; gaps narrower
/// than `resolution` are merged.
pub fn bands(v: &PeriodicPotential, resolution: f64) -> BandStructure {
    let (lo, hi) = v.spectral_window();
    let mut breaks = vec![lo - 0.5];
    breaks.extend(critical_points(v));
    breaks.push(hi + 0.5);
    let floquet: Vec<(f64, f64)> = breaks
        .windows(2)
        .map(|w| {
            let (l, r) = (w[0], w[1]);
            let (tl, tr) = (v.t(l), v.t(r));
            let inside = |t: f64| t.abs() <= 2.0 + CLOSED_GAP_EXCESS;
            let a = if inside(tl) { l } else { solve_monotone(v, 2.0 * tl.signum(), l, r) };
            let b = if inside(tr) { r } else { solve_monotone(v, 2.0 * tr.signum(), l, r) };
            (a, b)
        })
        .collect();
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(floquet.len());
    for &(a, b) in &floquet {
        match merged.last_mut() {
            Some(last) if a - last.1 < resolution => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    BandStructure { bands: merged, floquet, resolution }
}

/// Perturbs `v_k` by a seeded amount in `(0, 0.05)` until all `n − 1` gaps
/// are open. Potentials whose gaps are already open are returned unchanged.
pub fn gap_open_perturb(v: &PeriodicPotential, k: usize, seed: u64) -> Result<PeriodicPotential> {
    let n = v.period();
    if n < 2 || k >= n {
        return Err(Error::InvalidInput(format!("need period ≥ 2 and index < period (got n = {n}, k = {k})")));
    }
    if bands(v, DEFAULT_RESOLUTION).count() == n {
        return Ok(v.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_PERTURB_ATTEMPTS {
        let eps = loop {
            let e: f64 = rng.random::<f64>() * PERTURB_MAX;
            if e > 0.0 {
                break e;
            }
        };
        let mut values = v.values.clone();
        values[k] += eps;
        let candidate = PeriodicPotential::new(values)?;
        if bands(&candidate, DEFAULT_RESOLUTION).count() == n {
            return Ok(candidate);
        }
    }
    Err(Error::GapsStubborn { attempts: MAX_PERTURB_ATTEMPTS })
}

/// An energy in `(−3π/n, 3π/n)` outside the spectrum, taken at the middle of
/// the first complementary interval met in that window.
pub fn find_hyperbolic_energy(v: &PeriodicPotential) -> Result<f64> {
    let n = v.period();
    let spectrum = bands(v, DEFAULT_RESOLUTION);
    if spectrum.count() != n {
        return Err(Error::Precondition(format!("{} of {n} bands are separated; open the gaps first", spectrum.count())));
    }
    let limit = 3.0 * PI / n as f64;
    let mut edges = vec![f64::NEG_INFINITY];
    for &(a, b) in &spectrum.bands {
        edges.push(a);
        edges.push(b);
    }
    edges.push(f64::INFINITY);
    for gap in edges.chunks(2) {
        let (l, r) = (gap[0].max(-limit), gap[1].min(limit));
        if r > l {
            let e = 0.5 * (l + r);
            if v.t(e).abs() > 2.0 {
                return Ok(e);
            }
        }
    }
    Err(Error::NotFound)
}

/// Integrated density of states of a periodic operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ids {
    potential: PeriodicPotential,
    floquet: Vec<(f64, f64)>,
}

/// Builds the per-band arccos parameterization of `N`.
pub fn ids(v: &PeriodicPotential) -> Ids {
    Ids { potential: v.clone(), floquet: bands(v, DEFAULT_RESOLUTION).floquet }
}

impl Ids {
    pub fn period(&self) -> usize {
        self.potential.period()
    }

    pub fn floquet_bands(&self) -> &[(f64, f64)] {
        &self.floquet
    }

    /// `σ_k = (−1)^{n−k}` for band `k` (1-based): `t` rises on band `n`.
    fn sign(&self, k: usize) -> f64 {
        if (self.period() - k).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// `θ_k(E) = arccos(−σ_k t(E)/2) ∈ [0, π]` on band `k`.
    fn theta(&self, k: usize, energy: f64) -> f64 {
        (-self.sign(k) * self.potential.t(energy) / 2.0).clamp(-1.0, 1.0).acos()
    }

    /// `N(E)`: zero below the spectrum, `k/n` on the gap after band `k`,
    /// `(k − 1)/n + θ_k(E)/(nπ)` inside band `k`.
    pub fn n_at(&self, energy: f64) -> f64 {
        let n = self.period() as f64;
        for (i, &(a, b)) in self.floquet.iter().enumerate() {
            if energy < a {
                return i as f64 / n;
            }
            if energy <= b {
                return (i as f64 + self.theta(i + 1, energy) / PI) / n;
            }
        }
        1.0
    }

    /// The energy `E_k(θ)` in band `k` with `θ_k(E) = θ`, by safeguarded Newton.
    pub fn energy_at(&self, k: usize, theta: f64) -> f64 {
        let (mut a, mut b) = self.floquet[k - 1];
        let target = -2.0 * self.sign(k) * theta.cos();
        // t − target changes sign on [a, b]; find its orientation
        let rising = self.sign(k) > 0.0;
        let mut e = a + (b - a) * theta / PI;
        for _ in 0..100 {
            let (t, dt) = self.potential.discriminant_with_derivative(e);
            let f = t - target;
            if f == 0.0 {
                return e;
            }
            if (f < 0.0) == rising {
                a = e;
            } else {
                b = e;
            }
            let newton = e - f / dt;
            let next = if dt != 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if (next - e).abs() <= 1e-15 * (1.0 + e.abs()) || b - a <= 1e-15 * (1.0 + e.abs()) {
                return next;
            }
            e = next;
        }
        e
    }
}

/// `∫ ln|c − θ| dθ` over `[0, π]`.
fn log_distance_integral(c: f64) -> f64 {
    let part = |x: f64| if x > 0.0 { x * x.ln() - x } else { 0.0 };
    part(c) + part(PI - c)
}

/// `∫ ln|E' − E| dN(E')`, band by band in the θ parameterization. When `E`
/// lies in band `k` the singular factor `ln|θ − θ_k(E)|` is integrated in
/// closed form. No clamping is applied to the result.
pub fn thouless_lyapunov(ids: &Ids, energy: f64) -> f64 {
    let n = ids.period();
    let opts = QuadOptions { abs_tol: 1e-11, rel_tol: 0.0, max_panels: 400, initial_panels: 2 };
    let terms: Vec<f64> = (1..=n)
        .map(|k| {
            let (a, b) = ids.floquet[k - 1];
            if a <= energy && energy <= b {
                let c = ids.theta(k, energy);
                let smooth = |theta: f64| {
                    let d = theta - c;
                    let e = ids.energy_at(k, theta) - energy;
                    if d == 0.0 || e == 0.0 {
                        0.0
                    } else {
                        (e / d).abs().ln()
                    }
                };
                let mut total = log_distance_integral(c);
                if c > 0.0 {
                    total += quadrature::integrate_exact(smooth, 0.0, c, &opts).value;
                }
                if c < PI {
                    total += quadrature::integrate_exact(smooth, c, PI, &opts).value;
                }
                total
            } else {
                quadrature::integrate_exact(|theta| (ids.energy_at(k, theta) - energy).abs().ln(), 0.0, PI, &opts).value
            }
        })
        .collect();
    numeric::sum(terms) / (n as f64 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pot(v: &[f64]) -> PeriodicPotential {
        PeriodicPotential::new(v.to_vec()).unwrap()
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn discriminant_examples() {
        let e = 0.37;
        assert!((discriminant(&pot(&[0.0]), c(e)) - c(e)).norm() < 1e-15);
        assert!((discriminant(&pot(&[0.0, 0.0]), c(e)) - c(e * e - 2.0)).norm() < 1e-15);
        let (a, b) = (0.4, -1.3);
        let t = discriminant(&pot(&[a, b]), c(e));
        assert!((t - c((e - a) * (e - b) - 2.0)).norm() < 1e-14);
        let (t, dt) = pot(&[a, b]).discriminant_with_derivative(e);
        assert!((t - ((e - a) * (e - b) - 2.0)).abs() < 1e-14);
        assert!((dt - (2.0 * e - a - b)).abs() < 1e-14);
    }

    #[test]
    fn band_examples() {
        let s = bands(&pot(&[0.0]), DEFAULT_RESOLUTION);
        assert_eq!(s.bands.len(), 1);
        assert!((s.bands[0].0 + 2.0).abs() < 1e-11 && (s.bands[0].1 - 2.0).abs() < 1e-11);

        let s = bands(&pot(&[0.0, 0.0]), DEFAULT_RESOLUTION);
        assert_eq!(s.bands.len(), 1);
        assert_eq!(s.floquet.len(), 2);
        assert!((s.bands[0].0 + 2.0).abs() < 1e-11 && (s.bands[0].1 - 2.0).abs() < 1e-11);

        // t(E) = E(E − 3) − 2: bands between the roots of E² − 3E − 4 and E² − 3E
        let s = bands(&pot(&[0.0, 3.0]), DEFAULT_RESOLUTION);
        assert_eq!(s.bands.len(), 2);
        let expect = [(-1.0, 0.0), (3.0, 4.0)];
        for (got, want) in s.bands.iter().zip(expect) {
            assert!((got.0 - want.0).abs() < 1e-11 && (got.1 - want.1).abs() < 1e-11, "{got:?}");
        }
    }

    #[test]
    fn perturbation_examples() {
        let v = gap_open_perturb(&pot(&[0.0, 0.0]), 1, 4).unwrap();
        let eps = v.values()[1];
        assert!(eps > 0.0 && eps < 0.05);
        let s = bands(&v, DEFAULT_RESOLUTION);
        assert_eq!(s.count(), 2);
        // t = E(E − ε) − 2 = ±2: inner edges are 0 and ε
        assert!((s.bands[0].1 - 0.0).abs() < 1e-11 && (s.bands[1].0 - eps).abs() < 1e-11);

        let open = pot(&[0.0, 3.0]);
        assert_eq!(gap_open_perturb(&open, 0, 1).unwrap(), open);

        let v = gap_open_perturb(&pot(&[1.0, 1.0, 1.0]), 0, 9).unwrap();
        assert_eq!(bands(&v, DEFAULT_RESOLUTION).count(), 3);
    }

    #[test]
    fn hyperbolic_energy_examples() {
        let e = find_hyperbolic_energy(&pot(&[0.0])).unwrap();
        assert!(e.abs() > 2.0 && e.abs() < 3.0 * PI);
        let v = pot(&[0.0, 3.0]);
        let e = find_hyperbolic_energy(&v).unwrap();
        assert!(discriminant(&v, c(e)).re.abs() > 2.0 && e.abs() < 1.5 * PI);
        assert!(matches!(find_hyperbolic_energy(&pot(&[0.0, 0.0])), Err(Error::Precondition(_))));
    }

    /// Eigenvalues of the Dirichlet truncation below `e`, by Sylvester's
    /// inertia law on the LDLᵀ pivots of `H − e`.
    fn count_below(v: &PeriodicPotential, size: usize, e: f64) -> usize {
        let mut pivot = 1.0;
        let mut count = 0;
        for j in 0..size {
            let diag = v.values()[j % v.period()] - e;
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

    #[test]
    fn ids_examples() {
        let free = ids(&pot(&[0.0]));
        assert!((free.n_at(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(free.n_at(-2.5), 0.0);
        assert_eq!(free.n_at(2.5), 1.0);
        for e in [-1.5, -0.3, 0.8, 1.9] {
            let closed = (-e / 2.0f64).acos() / PI;
            assert!((free.n_at(e) - closed).abs() < 1e-14);
            let counted = count_below(&pot(&[0.0]), 512, e) as f64 / 512.0;
            assert!((free.n_at(e) - counted).abs() < 2.0 / 512.0);
        }
        let two = pot(&[0.0, 3.0]);
        let n = ids(&two);
        for e in [0.1, 1.5, 2.9] {
            assert_eq!(n.n_at(e), 0.5);
            assert_eq!(count_below(&two, 512, e), 256);
        }
        for e in [-0.7, -0.2, 3.3, 3.9] {
            let counted = count_below(&two, 512, e) as f64 / 512.0;
            assert!((n.n_at(e) - counted).abs() < 2.0 / 512.0);
        }
    }

    #[test]
    fn thouless_examples() {
        let free = ids(&pot(&[0.0]));
        let golden = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((thouless_lyapunov(&free, 3.0) - golden).abs() < 1e-6);
        assert!(thouless_lyapunov(&free, 0.0).abs() < 1e-6);
        let e: f64 = 1e3;
        let closed = (e / 2.0 * (1.0 + (1.0 - 4.0 / (e * e)).sqrt())).ln();
        assert!((thouless_lyapunov(&free, e) - closed).abs() < 1e-3);
    }
}
