//! Real-arithmetic iteration for real fibers.
//!
//! Products are rescaled by exact powers of two only when their entries leave
//! `[2^-64, 2^64]`, so the accumulated logarithm is an integer multiple of
//! `ln 2` until a checkpoint asks for the Frobenius-normalized form. On circle
//! rotations the phase `e^{2πit}` is advanced by multiplication and
//! resynchronized from `t` every 512 steps.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64 as C64;

use crate::base::{BasePoint, BaseSystem, Potential};
use crate::cocycle::{Fiber, Renormalized};
use crate::linalg::Mat2;

const RESYNC: usize = 512;
const UPPER: f64 = 18446744073709551616.0; // 2^64
const LOWER: f64 = 1.0 / UPPER;

type M = [f64; 4];

fn mul(l: &M, r: &M) -> M {
    [
        l[0] * r[0] + l[1] * r[2],
        l[0] * r[1] + l[1] * r[3],
        l[2] * r[0] + l[3] * r[2],
        l[2] * r[1] + l[3] * r[3],
    ]
}

fn potential_degree(p: &Potential) -> usize {
    match p {
        Potential::TrigPolynomial { cos, sin, .. } => cos.len().max(sin.len()),
        _ => 0,
    }
}

fn fiber_degree(f: &Fiber) -> usize {
    match f {
        Fiber::Constant { .. } => 0,
        Fiber::Schrodinger { symbol } => potential_degree(symbol),
        Fiber::Exp { generator } => {
            potential_degree(&generator.b1).max(potential_degree(&generator.b2)).max(potential_degree(&generator.b3))
        }
        Fiber::Product { left, right } => fiber_degree(left).max(fiber_degree(right)),
    }
}

/// `powers[k] = e^{2πi(k+1)t}`.
fn eval(p: &Potential, base: &BaseSystem, y: &BasePoint, powers: &[C64]) -> f64 {
    match p {
        Potential::Constant(c) => c.re,
        Potential::TrigPolynomial { constant, cos, sin } if !powers.is_empty() => {
            let mut acc = constant.re;
            for (c, z) in cos.iter().zip(powers) {
                acc += c.re * z.re;
            }
            for (s, z) in sin.iter().zip(powers) {
                acc += s.re * z.im;
            }
            acc
        }
        _ => p.eval(base, y).re,
    }
}

/// `e^B` for real traceless `B = [[b1, b2], [b3, −b1]]`.
fn exp_real(b1: f64, b2: f64, b3: f64) -> M {
    let d2 = b1 * b1 + b2 * b3;
    let (c, s) = if d2.abs() < 1e-8 {
        (1.0 + d2 / 2.0 + d2 * d2 / 24.0, 1.0 + d2 / 6.0 + d2 * d2 / 120.0)
    } else if d2 > 0.0 {
        let d = d2.sqrt();
        (d.cosh(), d.sinh() / d)
    } else {
        let d = (-d2).sqrt();
        (d.cos(), d.sin() / d)
    };
    [c + s * b1, s * b2, s * b3, c - s * b1]
}

fn matrix(f: &Fiber, base: &BaseSystem, y: &BasePoint, powers: &[C64]) -> M {
    match f {
        Fiber::Constant { matrix } => {
            let [a, b, c, d] = matrix.entries();
            [a.re, b.re, c.re, d.re]
        }
        Fiber::Schrodinger { symbol } => [eval(symbol, base, y, powers), -1.0, 1.0, 0.0],
        Fiber::Exp { generator } => exp_real(
            eval(&generator.b1, base, y, powers),
            eval(&generator.b2, base, y, powers),
            eval(&generator.b3, base, y, powers),
        ),
        Fiber::Product { left, right } => mul(&matrix(left, base, y, powers), &matrix(right, base, y, powers)),
    }
}

fn normalized(m: &M, exponent: i64) -> Renormalized {
    let f = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2] + m[3] * m[3]).sqrt();
    Renormalized {
        matrix: Mat2::real(m[0] / f, m[1] / f, m[2] / f, m[3] / f),
        log_norm: exponent as f64 * LN_2 + f.ln(),
    }
}

fn fill_powers(powers: &mut [C64], z: C64) {
    let mut p = C64::new(1.0, 0.0);
    for slot in powers.iter_mut() {
        p *= z;
        *slot = p;
    }
}

pub(crate) fn iterate_real<W, V>(base: &BaseSystem, fiber: &Fiber, x: &BasePoint, n: usize, want: W, mut visit: V) -> Renormalized
where
    W: Fn(usize) -> bool,
    V: FnMut(usize, &Renormalized),
{
    let circle = match (base, x) {
        (BaseSystem::CircleRotation { alpha }, BasePoint::Circle(_)) => Some(C64::from_polar(1.0, 2.0 * PI * alpha)),
        _ => None,
    };
    let degree = if circle.is_some() { fiber_degree(fiber) } else { 0 };
    let mut powers = vec![C64::new(0.0, 0.0); degree];
    let mut z = C64::new(1.0, 0.0);
    let mut m: M = [1.0, 0.0, 0.0, 1.0];
    let mut exponent: i64 = 0;
    let mut y = *x;
    for k in 1..=n {
        if degree > 0 {
            if (k - 1) % RESYNC == 0 {
                if let BasePoint::Circle(t) = y {
                    z = C64::from_polar(1.0, 2.0 * PI * t);
                }
            }
            fill_powers(&mut powers, z);
        }
        m = mul(&matrix(fiber, base, &y, &powers), &m);
        let big = m[0].abs().max(m[1].abs()).max(m[2].abs()).max(m[3].abs());
        if !(LOWER..=UPPER).contains(&big) && big.is_finite() && big > 0.0 {
            let e = big.log2().floor() as i32;
            let scale = 2f64.powi(-e);
            m.iter_mut().for_each(|v| *v *= scale);
            exponent += e as i64;
        }
        y = base.step_unchecked(&y);
        if let Some(rot) = circle {
            z *= rot;
        }
        if want(k) {
            visit(k, &normalized(&m, exponent));
        }
    }
    normalized(&m, exponent)
}
