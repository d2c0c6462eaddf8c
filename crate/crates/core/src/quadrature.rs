//! Adaptive 7/15-point Gauss–Kronrod quadrature.
//!
//! Integrands may report a per-node noise level (for instance the standard
//! error of a Monte Carlo Lyapunov estimate). Noise is integrated with the
//! Kronrod weights and added to the reported error; panel refinement is driven
//! by the Gauss–Kronrod discrepancy alone, since subdividing cannot reduce
//! sampling noise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numeric::{self, CompensatedSum};

/// Kronrod abscissae on [-1, 1], positive half, descending; the last is 0.
#[allow(clippy::excessive_precision)]
pub const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

/// Kronrod weights matching [`XGK`].
#[allow(clippy::excessive_precision)]
pub const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the abscissae `XGK[1], XGK[3], XGK[5], XGK[7]`.
#[allow(clippy::excessive_precision)]
pub const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// The 15 Kronrod nodes on [-1, 1] in ascending order, with weights and the
/// 7-point Gauss weights (zero at Kronrod-only nodes).
pub fn kronrod_rule() -> [(f64, f64, f64); 15] {
    let mut out = [(0.0, 0.0, 0.0); 15];
    for j in 0..8 {
        let gauss = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        out[j] = (-XGK[j], WGK[j], gauss);
        out[14 - j] = (XGK[j], WGK[j], gauss);
    }
    out
}

/// An integrand value with an independent noise level (one standard error).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub noise: f64,
}

impl Sample {
    pub fn exact(value: f64) -> Self {
        Self { value, noise: 0.0 }
    }
}

impl From<f64> for Sample {
    fn from(value: f64) -> Self {
        Self::exact(value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
    pub initial_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-8, rel_tol: 0.0, max_panels: 200, initial_panels: 1 }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        Self { abs_tol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    /// Discretization error estimate plus integrated noise.
    pub error: f64,
    /// The integrated noise part of `error`.
    pub noise: f64,
    pub evaluations: usize,
    pub panels: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    noise: f64,
}

fn panel_nodes(a: f64, b: f64) -> [f64; 15] {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let rule = kronrod_rule();
    let mut nodes = [0.0; 15];
    for (node, (x, _, _)) in nodes.iter_mut().zip(rule.iter()) {
        *node = center + half * x;
    }
    nodes
}

/// Combines 15 samples into a panel estimate with the QUADPACK error rescaling.
fn panel_from_samples(a: f64, b: f64, samples: &[Sample]) -> Panel {
    let half = 0.5 * (b - a);
    let rule = kronrod_rule();
    let kronrod = numeric::sum(rule.iter().zip(samples).map(|(r, s)| r.1 * s.value));
    let gauss = numeric::sum(rule.iter().zip(samples).map(|(r, s)| r.2 * s.value));
    let mean = kronrod * 0.5;
    let asc = numeric::sum(rule.iter().zip(samples).map(|(r, s)| r.1 * (s.value - mean).abs()));
    let noise = numeric::sum(rule.iter().zip(samples).map(|(r, s)| r.1 * s.noise)) * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    let resasc = asc * half.abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    let resabs = numeric::sum(rule.iter().zip(samples).map(|(r, s)| r.1 * s.value.abs())) * half.abs();
    let roundoff = 50.0 * f64::EPSILON * resabs;
    if roundoff > error {
        error = roundoff;
    }
    Panel { a, b, value: kronrod * half, error, noise }
}

fn evaluate_panels<F, E>(f: &F, bounds: &[(f64, f64)]) -> Result<Vec<Panel>, E>
where
    F: Fn(f64) -> Result<Sample, E> + Sync,
    E: Send,
{
    let nodes: Vec<f64> = bounds.iter().flat_map(|&(a, b)| panel_nodes(a, b)).collect();
    let samples: Vec<Sample> = nodes.par_iter().map(|&x| f(x)).collect::<Result<_, E>>()?;
    Ok(bounds
        .iter()
        .zip(samples.chunks(15))
        .map(|(&(a, b), s)| panel_from_samples(a, b, s))
        .collect())
}

fn totals(panels: &[Panel]) -> (f64, f64, f64) {
    let mut value = CompensatedSum::new();
    let mut error = CompensatedSum::new();
    let mut noise = CompensatedSum::new();
    for p in panels {
        value.add(p.value);
        error.add(p.error);
        noise.add(p.noise);
    }
    (value.value(), error.value(), noise.value())
}

/// Adaptive integration of a fallible, possibly noisy integrand over `[a, b]`.
///
/// Node evaluations run in parallel; every reduction is performed in a fixed
/// order, so results do not depend on the thread count.
pub fn integrate<F, E>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult, E>
where
    F: Fn(f64) -> Result<Sample, E> + Sync,
    E: Send,
{
    integrate_with_breaks(f, &[a, b], opts)
}

/// [`integrate`] over `[points[0], points[last]]` with panel boundaries at
/// every listed point, for integrands with known kinks. Points must be
/// increasing.
pub fn integrate_with_breaks<F, E>(f: F, points: &[f64], opts: &QuadOptions) -> Result<QuadResult, E>
where
    F: Fn(f64) -> Result<Sample, E> + Sync,
    E: Send,
{
    let initial = opts.initial_panels.max(1);
    let mut bounds: Vec<(f64, f64)> = Vec::new();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let width = (b - a) / initial as f64;
        bounds.extend((0..initial).map(|k| {
            let lo = a + width * k as f64;
            let hi = if k + 1 == initial { b } else { a + width * (k + 1) as f64 };
            (lo, hi)
        }));
    }
    if bounds.is_empty() {
        return Ok(QuadResult { value: 0.0, error: 0.0, noise: 0.0, evaluations: 0, panels: 0, converged: true });
    }
    let mut panels = evaluate_panels(&f, &bounds)?;
    let mut evaluations = 15 * bounds.len();
    loop {
        let (value, error, noise) = totals(&panels);
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        let converged = error <= target;
        if converged || panels.len() >= opts.max_panels {
            return Ok(QuadResult {
                value,
                error: error + noise,
                noise,
                evaluations,
                panels: panels.len(),
                converged,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, p)| if p.error > best.1 { (i, p.error) } else { best });
        let p = panels[worst];
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // the panel cannot be split further in floating point
            return Ok(QuadResult { value, error: error + noise, noise, evaluations, panels: panels.len(), converged: false });
        }
        let halves = evaluate_panels(&f, &[(p.a, mid), (mid, p.b)])?;
        evaluations += 30;
        panels.splice(worst..=worst, halves);
    }
}

/// Adaptive integration of an infallible, noise-free integrand.
pub fn integrate_exact<F>(f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult
where
    F: Fn(f64) -> f64 + Sync,
{
    let res: Result<QuadResult, std::convert::Infallible> = integrate(|x| Ok(Sample::exact(f(x))), a, b, opts);
    match res {
        Ok(r) => r,
        Err(e) => match e {},
    }
}
