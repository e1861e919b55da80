//! Dormand–Prince 5(4) with adaptive step size.

use crate::error::{Error, Result};
use crate::scalar::Real;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// 5th-order weights (first-same-as-last: equal to the last row of `A`).
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// Difference between 5th- and embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub initial_step: Option<T>,
    pub min_step: T,
    pub max_steps: usize,
}

impl<T: Real> OdeOptions<T> {
    pub fn with_tolerance(tol: T) -> Self {
        Self { rtol: tol, atol: tol, initial_step: None, min_step: T::of(1e-14), max_steps: 200_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdeSample<T> {
    pub t: T,
    pub y: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Largest scaled local error estimate among accepted steps (≤ 1 by construction).
    pub max_error: f64,
}

fn axpy<T: Real>(y: &[T], h: T, ks: &[Vec<T>], row: &[f64]) -> Vec<T> {
    let mut out = y.to_vec();
    for (k, &a) in ks.iter().zip(row) {
        if a != 0.0 {
            let ha = h * T::of(a);
            for (o, &kv) in out.iter_mut().zip(k) {
                *o += ha * kv;
            }
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t1`, returning every accepted step.
pub fn dopri5<T: Real, F>(mut f: F, t0: T, t1: T, y0: &[T], opts: OdeOptions<T>) -> Result<(Vec<OdeSample<T>>, OdeStats)>
where
    F: FnMut(T, &[T]) -> Result<Vec<T>>,
{
    let n = y0.len();
    let direction = if t1 >= t0 { T::one() } else { -T::one() };
    let span = (t1 - t0).abs();
    let mut stats = OdeStats::default();
    let mut samples = vec![OdeSample { t: t0, y: y0.to_vec() }];
    if span == T::zero() {
        return Ok((samples, stats));
    }
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k0 = f(t, &y)?;
    stats.evaluations += 1;
    let scale = |y: &[T], z: &[T], i: usize| opts.atol + opts.rtol * y[i].abs().max(z[i].abs());
    let mut h = match opts.initial_step {
        Some(h) => h.abs(),
        None => {
            let d0 = (0..n).fold(T::zero(), |s, i| s.max((y[i] / scale(&y, &y, i)).abs()));
            let d1 = (0..n).fold(T::zero(), |s, i| s.max((k0[i] / scale(&y, &y, i)).abs()));
            let guess = if d0 < T::of(1e-5) || d1 < T::of(1e-5) { T::of(1e-6) } else { T::of(0.01) * d0 / d1 };
            guess.min(span)
        }
    };
    let safety = T::of(0.9);
    while (t1 - t) * direction > T::zero() {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::ToleranceNotMet { tolerance: opts.rtol.as_f64(), time: t.as_f64() });
        }
        let remaining = (t1 - t).abs();
        let last = h >= remaining;
        let step = if last { remaining } else { h } * direction;
        let mut ks: Vec<Vec<T>> = Vec::with_capacity(7);
        ks.push(k0.clone());
        for stage in 1..7 {
            let ys = axpy(&y, step, &ks, &A[stage][..stage]);
            ks.push(f(t + T::of(C[stage]) * step, &ys)?);
        }
        stats.evaluations += 6;
        let y_new = axpy(&y, step, &ks, &B5);
        let err_vec = axpy(&vec![T::zero(); n], step, &ks, &E);
        let err = (0..n)
            .fold(T::zero(), |s, i| {
                let r = err_vec[i] / scale(&y, &y_new, i);
                s + r * r
            })
            .sqrt()
            / T::of(n.max(1) as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::NonFinite("ode error estimate"));
        }
        let factor = if err == T::zero() { T::of(5.0) } else { (safety * err.powf(T::of(-0.2))).max(T::of(0.2)).min(T::of(5.0)) };
        if err <= T::one() {
            t = if last { t1 } else { t + step };
            y = y_new;
            k0 = ks.swap_remove(6);
            stats.accepted += 1;
            stats.max_error = stats.max_error.max(err.as_f64());
            samples.push(OdeSample { t, y: y.clone() });
            if !last {
                h = step.abs() * factor;
            }
        } else {
            stats.rejected += 1;
            h = step.abs() * factor.min(T::one());
            if h < opts.min_step {
                return Err(Error::ToleranceNotMet { tolerance: opts.rtol.as_f64(), time: t.as_f64() });
            }
        }
    }
    Ok((samples, stats))
}
