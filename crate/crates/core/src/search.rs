//! Constructive positivity search: the density argument run as an algorithm.
//!
//! Starting from a cocycle with (numerically) zero exponent, the search looks
//! for a direction `w` in a finite perturbation basis with `Φ_ε > 0`, then
//! scans `s ↓ 0` and `t ∈ (−1, 1)` for a member of the family
//! `v + ε(t + (1−t²)s·w)` whose exponent is detected positive.

use std::f64::consts::SQRT_2;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::{self, BaseSystem, Potential};
use crate::cocycle::{self, Cocycle, LyapunovEstimate, LyapunovOptions, Sl2Field};
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Sl2Element};
use crate::quadrature::QuadOptions;
use crate::regularizer::{self, GeneralQuery, PhiQuery, PhiResult};
use crate::uh;

/// Radius used for `w` inside the ball `‖w‖ < 2^{−3/2}`.
pub const W_RADIUS: f64 = 0.95 / (2.0 * SQRT_2);
/// Detection threshold: `L > DETECTION_SIGMAS · stderr`.
pub const DETECTION_SIGMAS: f64 = 3.0;
const EPSILON_SAFETY: f64 = 0.9;
const ASCENT_ROUNDS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Maximal number of `Φ` evaluations; zero disables the search.
    pub budget: usize,
    pub restarts: usize,
    pub t_nodes: usize,
    /// The `s` scan visits `2^{−j}` for `j = 0..=s_levels`.
    pub s_levels: u32,
    pub lyapunov: LyapunovOptions,
    /// Quadrature for `Φ`; [`search_quad`] when absent.
    pub quad: Option<QuadOptions>,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            budget: 64,
            restarts: 16,
            t_nodes: 512,
            s_levels: 20,
            // rotations are uniquely ergodic: a few long orbits suffice
            lyapunov: LyapunovOptions { n: 10_000, samples: 16, seed: 1 },
            quad: None,
            seed: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchOutcome {
    /// The starting point already has a detected positive exponent.
    AlreadyPositive,
    Found,
    BudgetExhausted,
    /// No admissible `ε` (for instance `δ ≤ 0`).
    EmptyRegion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Initial,
    Phi,
    Scan,
    Refine,
    Reverify,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub stage: Stage,
    /// Stage-specific parameters: basis coefficients for `Phi`, `(s, t)` for
    /// scans.
    pub params: Vec<f64>,
    pub value: f64,
    pub error: f64,
}

/// The perturbation found, in family coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyPoint {
    pub epsilon: f64,
    pub t: f64,
    pub s: f64,
    pub coefficients: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub found: bool,
    pub outcome: SearchOutcome,
    pub point: Option<FamilyPoint>,
    /// The new potential `v2` (Schrödinger search only).
    pub v2: Option<Potential>,
    /// The perturbing generator `ε(t·b + (1−t²)s·a)` (general search only).
    pub generator: Option<Sl2Field>,
    /// An upper bound on the size of the perturbation.
    pub perturbation_norm: f64,
    pub lyapunov_at_result: Option<LyapunovEstimate>,
    /// Recomputation with doubled `n` and a fresh seed.
    pub reverified: Option<LyapunovEstimate>,
    /// Best `Φ` seen, with its coefficients, when the search fails.
    pub best_phi: Option<(Vec<f64>, f64)>,
    pub phi_evaluations: usize,
    pub trace: Vec<TraceEntry>,
    pub warnings: Vec<String>,
}

impl SearchReport {
    fn empty(outcome: SearchOutcome) -> Self {
        Self {
            found: false,
            outcome,
            point: None,
            v2: None,
            generator: None,
            perturbation_norm: 0.0,
            lyapunov_at_result: None,
            reverified: None,
            best_phi: None,
            phi_evaluations: 0,
            trace: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

/// Default quadrature for the `Φ` stage: the regularizer defaults, with the
/// sampled-exponent tolerance tightened to `2e-5` so that the detection rule
/// `Φ > 3·quad_error` can fire on gap-sized signals.
pub fn search_quad(base: &BaseSystem) -> QuadOptions {
    let mut q = regularizer::default_quad(base);
    q.abs_tol = q.abs_tol.min(2e-5);
    q
}

fn detected(e: &LyapunovEstimate) -> bool {
    e.value > 0.0 && e.exceeds(DETECTION_SIGMAS)
}

fn phi_positive(p: &PhiResult) -> bool {
    p.value > 0.0 && p.value > DETECTION_SIGMAS * p.quad_error
}

fn fresh(opts: &LyapunovOptions) -> LyapunovOptions {
    LyapunovOptions { n: 2 * opts.n, samples: opts.samples, seed: base::derived_stream(opts.seed, 0x7e11) }
}

/// A one-parameter-family problem: `Φ` at basis coefficients, and the
/// exponent at a family point.
trait Family: Sync {
    fn dimension(&self) -> usize;
    /// Norm of the perturbation direction for coefficients `c`.
    fn direction_norm(&self, c: &[f64]) -> f64;
    fn radius(&self) -> f64;
    fn phi(&self, c: &[f64]) -> Result<PhiResult>;
    fn lyapunov(&self, t: f64, s: f64, c: &[f64], opts: &LyapunovOptions) -> Result<LyapunovEstimate>;
}

fn project(f: &dyn Family, mut c: Vec<f64>) -> Vec<f64> {
    let n = f.direction_norm(&c);
    if n > f.radius() {
        let k = f.radius() / n;
        c.iter_mut().for_each(|x| *x *= k);
    }
    c
}

struct PhiSearch {
    evaluations: usize,
    best: Option<(Vec<f64>, f64)>,
    trace: Vec<TraceEntry>,
}

impl PhiSearch {
    /// Evaluates `Φ` unless the budget is spent; returns whether `c` is a
    /// positive direction.
    fn try_point(&mut self, f: &dyn Family, c: Vec<f64>, budget: usize) -> Result<Option<bool>> {
        if self.evaluations >= budget {
            return Ok(None);
        }
        self.evaluations += 1;
        let p = f.phi(&c)?;
        self.trace.push(TraceEntry { stage: Stage::Phi, params: c.clone(), value: p.value, error: p.quad_error });
        let better = self.best.as_ref().is_none_or(|b| p.value > b.1);
        if better {
            self.best = Some((c, p.value));
        }
        Ok(Some(phi_positive(&p)))
    }
}

/// Finds coefficients with `Φ > 3·quad_error`: signed basis directions,
/// coordinate ascent from the best one, then seeded random restarts.
fn search_direction(f: &dyn Family, opts: &SearchOptions, state: &mut PhiSearch) -> Result<Option<Vec<f64>>> {
    let dim = f.dimension();
    let r = f.radius();
    let unit = |k: usize, sign: f64| {
        let mut c = vec![0.0; dim];
        c[k] = sign;
        let n = f.direction_norm(&c);
        c[k] = sign * r / n;
        c
    };
    for k in 0..dim {
        for sign in [1.0, -1.0] {
            let c = unit(k, sign);
            match state.try_point(f, c.clone(), opts.budget)? {
                None => return Ok(None),
                Some(true) => return Ok(Some(c)),
                Some(false) => {}
            }
        }
    }
    let mut step = 0.5 * r;
    for _ in 0..ASCENT_ROUNDS {
        let Some((center, value)) = state.best.clone() else { break };
        let mut improved = false;
        for k in 0..dim {
            for sign in [1.0, -1.0] {
                let mut c = center.clone();
                c[k] += sign * step * unit(k, 1.0)[k] / r;
                let c = project(f, c);
                match state.try_point(f, c.clone(), opts.budget)? {
                    None => return Ok(None),
                    Some(true) => return Ok(Some(c)),
                    Some(false) => {}
                }
                improved |= state.best.as_ref().is_some_and(|b| b.1 > value);
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        let c: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = f.direction_norm(&c);
        let scale = r * rng.random::<f64>().sqrt() / n.max(f64::MIN_POSITIVE);
        let c: Vec<f64> = c.iter().map(|x| x * scale).collect();
        match state.try_point(f, c.clone(), opts.budget)? {
            None => return Ok(None),
            Some(true) => return Ok(Some(c)),
            Some(false) => {}
        }
    }
    Ok(None)
}

fn t_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| -1.0 + 2.0 * (k as f64 + 0.5) / n as f64).collect()
}

/// Scans `t` at fixed `s`; returns the node with the largest `L / stderr`
/// among detections, together with the best ratio seen.
fn scan_t(
    f: &dyn Family,
    c: &[f64],
    s: f64,
    nodes: usize,
    opts: &LyapunovOptions,
    trace: &mut Vec<TraceEntry>,
    stage: Stage,
) -> Result<Option<(f64, LyapunovEstimate)>> {
    let ts = t_grid(nodes);
    let estimates: Vec<LyapunovEstimate> = ts.par_iter().map(|&t| f.lyapunov(t, s, c, opts)).collect::<Result<_>>()?;
    let score = |e: &LyapunovEstimate| if e.stderr > 0.0 { e.value / e.stderr } else { e.value * f64::MAX.sqrt() };
    let best = ts
        .iter()
        .zip(&estimates)
        .filter(|(_, e)| detected(e))
        .fold(None::<(f64, LyapunovEstimate)>, |best, (&t, e)| match best {
            Some((_, b)) if score(&b) >= score(e) => best,
            _ => Some((t, *e)),
        });
    let (t_rep, e_rep) = match best {
        Some((t, e)) => (t, e),
        None => {
            let i = (0..estimates.len()).max_by(|&i, &j| estimates[i].value.total_cmp(&estimates[j].value)).unwrap_or(0);
            (ts[i], estimates[i])
        }
    };
    trace.push(TraceEntry { stage, params: vec![s, t_rep], value: e_rep.value, error: e_rep.stderr });
    Ok(best)
}

struct Located {
    point: FamilyPoint,
    estimate: LyapunovEstimate,
    reverified: LyapunovEstimate,
}

/// The staged search shared by both forms. `epsilon` must already be
/// admissible.
fn staged_search(f: &dyn Family, epsilon: f64, opts: &SearchOptions, report: &mut SearchReport) -> Result<Option<Located>> {
    let mut state = PhiSearch { evaluations: 0, best: None, trace: Vec::new() };
    let direction = search_direction(f, opts, &mut state);
    report.phi_evaluations = state.evaluations;
    report.best_phi = state.best.clone();
    report.trace.append(&mut state.trace);
    let Some(c) = direction? else { return Ok(None) };
    let nodes = opts.t_nodes.max(1);
    let mut best_level: Option<(f64, f64)> = None;
    for j in 0..=opts.s_levels {
        let s = 0.5f64.powi(j as i32);
        let hit = scan_t(f, &c, s, nodes, &opts.lyapunov, &mut report.trace, Stage::Scan)?;
        let last = report.trace.last().map(|e| e.value).unwrap_or(0.0);
        if best_level.is_none_or(|b| last > b.1) {
            best_level = Some((s, last));
        }
        if let Some(found) = try_reverify(f, &c, s, hit, epsilon, opts, report)? {
            return Ok(Some(found));
        }
    }
    if let Some((s, _)) = best_level {
        let hit = scan_t(f, &c, s, 4 * nodes, &opts.lyapunov, &mut report.trace, Stage::Refine)?;
        if let Some(found) = try_reverify(f, &c, s, hit, epsilon, opts, report)? {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

fn try_reverify(
    f: &dyn Family,
    c: &[f64],
    s: f64,
    hit: Option<(f64, LyapunovEstimate)>,
    epsilon: f64,
    opts: &SearchOptions,
    report: &mut SearchReport,
) -> Result<Option<Located>> {
    let Some((t, estimate)) = hit else { return Ok(None) };
    let reverified = f.lyapunov(t, s, c, &fresh(&opts.lyapunov))?;
    report.trace.push(TraceEntry {
        stage: Stage::Reverify,
        params: vec![s, t],
        value: reverified.value,
        error: reverified.stderr,
    });
    if !detected(&reverified) {
        return Ok(None);
    }
    Ok(Some(Located { point: FamilyPoint { epsilon, t, s, coefficients: c.to_vec() }, estimate, reverified }))
}

struct SchrodingerFamily<'a> {
    query: PhiQuery,
    basis: &'a [Potential],
}

impl SchrodingerFamily<'_> {
    fn direction(&self, c: &[f64]) -> Result<Potential> {
        let mut w = Potential::constant(0.0);
        for (b, &x) in self.basis.iter().zip(c) {
            if x != 0.0 {
                w = w.add_scaled(b, x.into())?;
            }
        }
        Ok(w)
    }
}

impl Family for SchrodingerFamily<'_> {
    fn dimension(&self) -> usize {
        self.basis.len()
    }

    fn direction_norm(&self, c: &[f64]) -> f64 {
        self.direction(c).map(|w| w.sup_norm()).unwrap_or(f64::INFINITY)
    }

    fn radius(&self) -> f64 {
        W_RADIUS
    }

    fn phi(&self, c: &[f64]) -> Result<PhiResult> {
        regularizer::phi(&PhiQuery { w: self.direction(c)?, ..self.query.clone() })
    }

    fn lyapunov(&self, t: f64, s: f64, c: &[f64], opts: &LyapunovOptions) -> Result<LyapunovEstimate> {
        let q = PhiQuery { w: self.direction(c)?.scale(s.into()), lyapunov: *opts, ..self.query.clone() };
        let cocycle = Cocycle::with_symbol(q.base.clone(), q.symbol(C64::new(t, 0.0))?)?;
        uh::lyapunov_best(&cocycle, opts)
    }
}

/// Periodic bases are allowed but flagged: density of positive exponents
/// needs non-periodic dynamics.
fn base_warnings(base: &BaseSystem) -> Vec<String> {
    if base.is_periodic() {
        vec![format!("{} base is periodic; positive exponents need not be dense", base.family())]
    } else {
        Vec::new()
    }
}

/// Searches a potential `v2` with `‖v2 − v1‖ < δ` and `L(E − v2) > 0`,
/// perturbing along `v2 = v1 − ε(t + (1−t²)s·w)` with `w` in the span of
/// `basis`.
pub fn search_positive_schrodinger(
    base: &BaseSystem,
    v1: &Potential,
    energy: f64,
    delta: f64,
    basis: &[Potential],
    opts: &SearchOptions,
) -> Result<SearchReport> {
    if !v1.is_real() || basis.iter().any(|b| !b.is_real()) {
        return Err(Error::InvalidInput("the Schrödinger search needs real potentials".into()));
    }
    if basis.iter().any(|b| b.sup_norm() == 0.0) {
        return Err(Error::InvalidInput("basis elements must be nonzero".into()));
    }
    if !(delta > 0.0) || opts.budget == 0 {
        let outcome = if delta > 0.0 { SearchOutcome::BudgetExhausted } else { SearchOutcome::EmptyRegion };
        return Ok(SearchReport::empty(outcome));
    }
    let mut report = SearchReport::empty(SearchOutcome::BudgetExhausted);
    report.warnings = base_warnings(base);
    let v = Potential::constant(energy).add(&v1.scale((-1.0).into()))?;
    let start = Cocycle::with_symbol(base.clone(), v.clone())?;
    let initial = uh::lyapunov_best(&start, &opts.lyapunov)?;
    report.trace.push(TraceEntry { stage: Stage::Initial, params: vec![energy], value: initial.value, error: initial.stderr });
    if detected(&initial) {
        let again = uh::lyapunov_best(&start, &fresh(&opts.lyapunov))?;
        if detected(&again) {
            report.found = true;
            report.outcome = SearchOutcome::AlreadyPositive;
            report.v2 = Some(v1.clone());
            report.lyapunov_at_result = Some(initial);
            report.reverified = Some(again);
            return Ok(report);
        }
    }
    // ‖v2 − v1‖ ≤ ε(‖v0‖ + ‖w‖) < δ with v0 ≡ 1
    let epsilon = EPSILON_SAFETY * delta / (1.0 + W_RADIUS);
    let mut query = PhiQuery::new(base.clone(), v, Potential::constant(0.0), epsilon);
    query.lyapunov = opts.lyapunov;
    query.quad = opts.quad.unwrap_or_else(|| search_quad(base));
    let family = SchrodingerFamily { query, basis };
    let Some(found) = staged_search(&family, epsilon, opts, &mut report)? else { return Ok(report) };
    let FamilyPoint { t, s, ref coefficients, .. } = found.point;
    let w = family.direction(coefficients)?;
    let shift = Potential::constant(t).add_scaled(&w, ((1.0 - t * t) * s).into())?.scale(epsilon.into());
    report.v2 = Some(v1.add_scaled(&shift, (-1.0).into())?);
    report.perturbation_norm = shift.sup_norm();
    report.found = report.perturbation_norm < delta;
    report.outcome = if report.found { SearchOutcome::Found } else { SearchOutcome::BudgetExhausted };
    report.lyapunov_at_result = Some(found.estimate);
    report.reverified = Some(found.reverified);
    report.point = Some(found.point);
    Ok(report)
}

/// Trigonometric monomials `cos(2πkx)`, `k = 0..=degree`.
pub fn cosine_basis(degree: usize) -> Vec<Potential> {
    (0..=degree).map(Potential::cosine).collect()
}

/// `{cos(2πkx), sin(2πkx)} ⊗ {diag(1,−1), [[0,1],[1,0]]}` for
/// `k = 0..=degree` (constants once), spanning sl(2,ℝ)-valued trigonometric
/// fields together with the rotation direction `b`.
pub fn general_basis(degree: usize) -> Vec<Sl2Field> {
    let h = Sl2Element::real(1.0, 0.0, 0.0);
    let x = Sl2Element::real(0.0, 1.0, 1.0);
    let mut out = Vec::new();
    for k in 0..=degree {
        let mut scalars = vec![Potential::cosine(k)];
        if k > 0 {
            scalars.push(Potential::sine(k));
        }
        for p in scalars {
            for e in [&h, &x] {
                out.push(Sl2Field::from_potential(&p, e));
            }
        }
    }
    out
}

struct GeneralFamily<'a> {
    query: GeneralQuery,
    basis: &'a [Sl2Field],
}

impl GeneralFamily<'_> {
    fn direction(&self, c: &[f64]) -> Result<Sl2Field> {
        let mut a = Sl2Field::constant(&Sl2Element::zero());
        for (b, &x) in self.basis.iter().zip(c) {
            if x != 0.0 {
                a = a.add(&b.scale(x.into()))?;
            }
        }
        Ok(a)
    }
}

impl Family for GeneralFamily<'_> {
    fn dimension(&self) -> usize {
        self.basis.len()
    }

    fn direction_norm(&self, c: &[f64]) -> f64 {
        self.direction(c).map(|a| a.sup_norm()).unwrap_or(f64::INFINITY)
    }

    fn radius(&self) -> f64 {
        self.query.eta_gen
    }

    fn phi(&self, c: &[f64]) -> Result<PhiResult> {
        regularizer::phi_general(&GeneralQuery { a: self.direction(c)?, ..self.query.clone() })
    }

    fn lyapunov(&self, t: f64, s: f64, c: &[f64], opts: &LyapunovOptions) -> Result<LyapunovEstimate> {
        let q = GeneralQuery { a: self.direction(c)?.scale(s.into()), ..self.query.clone() };
        uh::lyapunov_best(&q.perturbed(t)?, opts)
    }
}

/// Largest `‖A(x)‖` over the base's probe points (exact for constant fibers).
fn fiber_sup_norm(c: &Cocycle, seed: u64) -> f64 {
    c.base().probe_points(seed).iter().map(|x| c.at(x).op_norm()).fold(0.0, f64::max)
}

/// Searches a perturbation `e^{ε(t·b + (1−t²)s·a)} A` with positive
/// exponent, `b = [[0,1],[−1,0]]` and `a` in the span of `basis` within the
/// `η_gen` ball. The perturbation size is measured as
/// `sup ‖e^{G} A − A‖ ≤ sup ‖A‖ · (e^{‖G‖} − 1)`.
pub fn search_positive_general(a: &Cocycle, delta: f64, basis: &[Sl2Field], opts: &SearchOptions) -> Result<SearchReport> {
    if !a.is_real() || basis.iter().any(|b| !b.is_real()) {
        return Err(Error::InvalidInput("the general search needs a real cocycle and real basis".into()));
    }
    if !(delta > 0.0) || opts.budget == 0 {
        let outcome = if delta > 0.0 { SearchOutcome::BudgetExhausted } else { SearchOutcome::EmptyRegion };
        return Ok(SearchReport::empty(outcome));
    }
    let mut report = SearchReport::empty(SearchOutcome::BudgetExhausted);
    report.warnings = base_warnings(a.base());
    let initial = uh::lyapunov_best(a, &opts.lyapunov)?;
    report.trace.push(TraceEntry { stage: Stage::Initial, params: Vec::new(), value: initial.value, error: initial.stderr });
    if detected(&initial) {
        let again = uh::lyapunov_best(a, &fresh(&opts.lyapunov))?;
        if detected(&again) {
            report.found = true;
            report.outcome = SearchOutcome::AlreadyPositive;
            report.lyapunov_at_result = Some(initial);
            report.reverified = Some(again);
            return Ok(report);
        }
    }
    let validation = regularizer::validate_eta_gen(regularizer::ETA_GEN, opts.seed)?;
    let eta = validation.eta;
    let norm_a = fiber_sup_norm(a, opts.seed);
    let b = Sl2Element::rotation_generator();
    // ‖t·b + (1−t²)s·a‖ ≤ ‖b‖ + η
    let epsilon = EPSILON_SAFETY * (1.0 + delta / norm_a).ln() / (b.norm() + eta);
    let mut query = GeneralQuery::new(a.clone(), Sl2Field::constant(&Sl2Element::zero()), epsilon);
    query.eta_gen = eta;
    query.lyapunov = opts.lyapunov;
    query.quad = opts.quad.unwrap_or_else(|| search_quad(a.base()));
    let family = GeneralFamily { query, basis };
    let Some(found) = staged_search(&family, epsilon, opts, &mut report)? else { return Ok(report) };
    let FamilyPoint { t, s, ref coefficients, .. } = found.point;
    let direction = family.direction(coefficients)?;
    let generator = Sl2Field::constant(&b)
        .scale((epsilon * t).into())
        .add(&direction.scale((epsilon * (1.0 - t * t) * s).into()))?;
    report.perturbation_norm = norm_a * generator.sup_norm().exp_m1();
    report.found = report.perturbation_norm < delta;
    report.outcome = if report.found { SearchOutcome::Found } else { SearchOutcome::BudgetExhausted };
    report.generator = Some(generator);
    report.lyapunov_at_result = Some(found.estimate);
    report.reverified = Some(found.reverified);
    report.point = Some(found.point);
    Ok(report)
}

/// The rotation cocycle `x ↦ R_{2π(1−α)}` over the rotation by `α`.
pub fn resonant_rotation_cocycle(base: &BaseSystem) -> Result<Cocycle> {
    let BaseSystem::CircleRotation { alpha } = base else {
        return Err(Error::FamilyMismatch("the resonant rotation cocycle lives over a circle rotation".into()));
    };
    Cocycle::constant(base.clone(), Mat2::rotation(2.0 * std::f64::consts::PI * (1.0 - alpha)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantitaScan {
    /// Fraction of `t` nodes with some detected positive `E`.
    pub fraction: f64,
    pub t_grid: Vec<f64>,
    pub e_grid: Vec<f64>,
    /// `L(E − v − t·w)` with `t` along rows.
    pub values: Vec<Vec<f64>>,
    /// `L(−v − εw)`, the entry check.
    pub precondition: LyapunovEstimate,
}

fn midpoints(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * (k as f64 + 0.5) / n as f64).collect()
}

/// For `t` on a midpoint grid in `(0, ε)`, looks for `E` on a midpoint grid
/// in `(−2ε, 2ε)` with a detected `L(E − v − t·w) > 0`. Requires
/// `L(−v − εw) > 0` and `‖w‖ < 2^{−3/2}`.
pub fn quantita_scan(
    base: &BaseSystem,
    v: &Potential,
    w: &Potential,
    epsilon: f64,
    t_nodes: usize,
    e_nodes: usize,
    opts: &LyapunovOptions,
) -> Result<QuantitaScan> {
    if !(epsilon > 0.0) || t_nodes == 0 || e_nodes == 0 {
        return Err(Error::InvalidInput("need ε > 0 and nonempty grids".into()));
    }
    if !v.is_real() || !w.is_real() {
        return Err(Error::InvalidInput("v and w must be real".into()));
    }
    if !(w.sup_norm() < 1.0 / (2.0 * SQRT_2)) {
        return Err(Error::Precondition(format!("‖w‖ = {} is not below 2^(-3/2)", w.sup_norm())));
    }
    let symbol = |e: f64, t: f64| -> Result<Potential> {
        Potential::constant(e).add(&v.scale((-1.0).into()))?.add_scaled(w, (-t).into())
    };
    let lyap = |e: f64, t: f64| -> Result<LyapunovEstimate> {
        let c = Cocycle::with_symbol(base.clone(), symbol(e, t)?)?;
        if cocycle::has_exact_formula(&c) {
            cocycle::lyapunov_periodic_exact(&c)
        } else {
            uh::lyapunov_best(&c, opts)
        }
    };
    let precondition = lyap(0.0, epsilon)?;
    if !detected(&precondition) {
        return Err(Error::Precondition(format!(
            "L(−v − εw) = {} is not detected positive",
            precondition.value
        )));
    }
    let t_grid = midpoints(0.0, epsilon, t_nodes);
    let e_grid = midpoints(-2.0 * epsilon, 2.0 * epsilon, e_nodes);
    let rows: Vec<(Vec<f64>, bool)> = t_grid
        .par_iter()
        .map(|&t| {
            let mut values = Vec::with_capacity(e_grid.len());
            let mut hit = false;
            for &e in &e_grid {
                let l = lyap(e, t)?;
                hit |= detected(&l);
                values.push(l.value);
            }
            Ok((values, hit))
        })
        .collect::<Result<_>>()?;
    let hits = rows.iter().filter(|r| r.1).count();
    Ok(QuantitaScan {
        fraction: hits as f64 / t_nodes as f64,
        t_grid,
        e_grid,
        values: rows.into_iter().map(|r| r.0).collect(),
        precondition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_region_for_zero_delta() {
        let r = search_positive_schrodinger(
            &BaseSystem::golden_rotation(),
            &Potential::constant(0.0),
            0.0,
            0.0,
            &cosine_basis(2),
            &SearchOptions::default(),
        )
        .unwrap();
        assert!(!r.found);
        assert_eq!(r.outcome, SearchOutcome::EmptyRegion);
    }

    #[test]
    fn hyperbolic_energy_needs_no_perturbation() {
        let r = search_positive_schrodinger(
            &BaseSystem::golden_rotation(),
            &Potential::constant(0.0),
            5.0,
            0.5,
            &cosine_basis(2),
            &SearchOptions::default(),
        )
        .unwrap();
        assert!(r.found);
        assert_eq!(r.outcome, SearchOutcome::AlreadyPositive);
        assert_eq!(r.perturbation_norm, 0.0);
        // ln of the larger root of λ² − 5λ + 1
        let oracle = ((5.0 + 21f64.sqrt()) / 2.0).ln();
        assert!((r.lyapunov_at_result.unwrap().value - oracle).abs() < 1e-12);
    }

    #[test]
    fn zero_budget_fails() {
        let c = resonant_rotation_cocycle(&BaseSystem::golden_rotation()).unwrap();
        let opts = SearchOptions { budget: 0, ..SearchOptions::default() };
        let r = search_positive_general(&c, 0.5, &general_basis(1), &opts).unwrap();
        assert!(!r.found);
        assert_eq!(r.outcome, SearchOutcome::BudgetExhausted);
    }

    #[test]
    fn hyperbolic_constant_is_found_immediately() {
        let c = Cocycle::constant(BaseSystem::golden_rotation(), Mat2::real(2.0, 0.0, 0.0, 0.5)).unwrap();
        let r = search_positive_general(&c, 0.5, &general_basis(1), &SearchOptions::default()).unwrap();
        assert!(r.found && r.perturbation_norm == 0.0);
        assert!((r.lyapunov_at_result.unwrap().value - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn general_basis_dimension() {
        // constants: 2; each k ≥ 1: 4
        assert_eq!(general_basis(3).len(), 2 + 3 * 4);
    }

    #[test]
    fn quantita_rejects_failed_precondition() {
        let r = quantita_scan(
            &BaseSystem::fixed_point(),
            &Potential::constant(0.0),
            &Potential::constant(0.1),
            0.2,
            4,
            4,
            &LyapunovOptions::default(),
        );
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn quantita_trivially_hyperbolic() {
        let r = quantita_scan(
            &BaseSystem::fixed_point(),
            &Potential::constant(5.0),
            &Potential::constant(0.1),
            1e-3,
            8,
            8,
            &LyapunovOptions::default(),
        )
        .unwrap();
        assert_eq!(r.fraction, 1.0);
    }
}
