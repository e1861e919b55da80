//! Adaptive 21-point Gauss–Kronrod quadrature, finite and semi-infinite.

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];

/// Gauss weights of the odd-indexed Kronrod nodes `XGK[1], XGK[3], …, XGK[9]`.
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

/// Nodes and weights of the 21-point Kronrod rule mapped onto `[a, b]`.
pub fn kronrod_nodes<T: Real>(a: T, b: T) -> Vec<(T, T)> {
    let center = (a + b) * T::of(0.5);
    let half = (b - a) * T::of(0.5);
    let mut out = Vec::with_capacity(21);
    for k in 0..10 {
        let dx = half * T::of(XGK[k]);
        let w = half * T::of(WGK[k]);
        out.push((center - dx, w));
        out.push((center + dx, w));
    }
    out.push((center, half * T::of(WGK[10])));
    out
}

/// One 21-point Kronrod panel with the QUADPACK-style error estimate.
pub fn gauss_kronrod21<T: Real, F: FnMut(T) -> Result<T>>(f: &mut F, a: T, b: T) -> Result<(T, T)> {
    let center = (a + b) * T::of(0.5);
    let half = (b - a) * T::of(0.5);
    let f_center = f(center)?;
    let mut kronrod = f_center * T::of(WGK[10]);
    let mut gauss = T::zero();
    let mut values = [(T::zero(), T::zero()); 10];
    for k in 0..10 {
        let dx = half * T::of(XGK[k]);
        let (f1, f2) = (f(center - dx)?, f(center + dx)?);
        if !f1.is_finite() || !f2.is_finite() {
            return Err(Error::NonFinite("quadrature integrand"));
        }
        values[k] = (f1, f2);
        kronrod += (f1 + f2) * T::of(WGK[k]);
        if k % 2 == 1 {
            gauss += (f1 + f2) * T::of(WG[k / 2]);
        }
    }
    if !f_center.is_finite() {
        return Err(Error::NonFinite("quadrature integrand"));
    }
    let mean = kronrod * T::of(0.5);
    let mut asc = (f_center - mean).abs() * T::of(WGK[10]);
    for k in 0..10 {
        asc += ((values[k].0 - mean).abs() + (values[k].1 - mean).abs()) * T::of(WGK[k]);
    }
    let asc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if asc != T::zero() && err != T::zero() {
        let ratio = (T::of(200.0) * err / asc).powf(T::of(1.5));
        err = asc * ratio.min(T::one());
    }
    let floor = T::default_epsilon() * T::of(50.0) * (kronrod * half).abs();
    Ok((kronrod * half, err.max(floor)))
}

#[derive(Clone, Copy, Debug)]
pub struct AdaptiveOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_panels: usize,
}

impl<T: Real> Default for AdaptiveOptions<T> {
    fn default() -> Self {
        Self { abs_tol: T::of(1e-10), rel_tol: T::of(1e-10), max_panels: 400 }
    }
}

/// Globally adaptive bisection: the panel with the largest error estimate is split until the
/// summed estimate meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<T: Real, F: FnMut(T) -> Result<T>>(mut f: F, a: T, b: T, opts: AdaptiveOptions<T>) -> Result<QuadResult<T>> {
    let (v, e) = gauss_kronrod21(&mut f, a, b)?;
    let mut panels = vec![(a, b, v, e)];
    let mut evaluations = 21;
    loop {
        let value = panels.iter().fold(T::zero(), |s, p| s + p.2);
        let error = panels.iter().fold(T::zero(), |s, p| s + p.3);
        if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
            return Ok(QuadResult { value, error, evaluations });
        }
        if panels.len() >= opts.max_panels {
            return Err(Error::QuadratureNotConverged {
                estimate: error.as_f64(),
                tolerance: opts.abs_tol.max(opts.rel_tol * value.abs()).as_f64(),
            });
        }
        let worst = (0..panels.len())
            .max_by(|&i, &j| panels[i].3.partial_cmp(&panels[j].3).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(0);
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = (lo + hi) * T::of(0.5);
        let (v1, e1) = gauss_kronrod21(&mut f, lo, mid)?;
        let (v2, e2) = gauss_kronrod21(&mut f, mid, hi)?;
        evaluations += 42;
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
}

/// `∫_a^∞ f(p) dp` through the substitution `p = a/t`, `t ∈ (0, 1]`.
///
/// The Kronrod rule never samples `t = 0`, so integrands decaying at least like `p⁻²` give a
/// bounded mapped integrand.
pub fn integrate_to_infinity<T: Real, F: FnMut(T) -> Result<T>>(mut f: F, a: T, opts: AdaptiveOptions<T>) -> Result<QuadResult<T>> {
    if !(a > T::zero()) {
        return Err(Error::InvalidParameter { name: "lower_limit", reason: "semi-infinite mapping needs a > 0".into() });
    }
    integrate(|t: T| Ok(f(a / t)? * a / (t * t)), T::zero(), T::one(), opts)
}

/// Fixed composite rule: the 21-point Kronrod nodes on every panel of `breaks`.
pub fn composite_nodes<T: Real>(breaks: &[T]) -> Vec<(T, T)> {
    breaks.windows(2).flat_map(|w| kronrod_nodes(w[0], w[1])).collect()
}

/// Nodes for `∫_a^∞`, mapped by `p = a/t` and split into `panels` equal pieces in `t`.
pub fn tail_nodes<T: Real>(a: T, panels: usize) -> Vec<(T, T)> {
    let n = T::of(panels as f64);
    (0..panels)
        .flat_map(|k| kronrod_nodes(T::of(k as f64) / n, T::of(k as f64 + 1.0) / n))
        .map(|(t, w)| (a / t, w * a / (t * t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact_on_one_panel() {
        // Kronrod-21 integrates degree 31 exactly
        let mut f = |x: f64| Ok(x.powi(20) - 3.0 * x.powi(7) + 1.0);
        let (v, _) = gauss_kronrod21(&mut f, -1.0, 2.0).unwrap();
        let exact = (2f64.powi(21) + 1.0) / 21.0 - 3.0 * (2f64.powi(8) - 1.0) / 8.0 + 3.0;
        assert!((v - exact).abs() < 1e-9 * exact.abs());
    }

    #[test]
    fn adaptive_handles_a_peak() {
        let r = integrate(|x: f64| Ok(1.0 / (1e-4 + x * x)), -1.0, 1.0, AdaptiveOptions::default()).unwrap();
        let exact = 2.0 * (1.0 / 1e-2f64).atan() / 1e-2;
        assert!((r.value - exact).abs() < 1e-8 * exact);
        assert!(r.error < 1e-8 * exact);
    }

    #[test]
    fn semi_infinite_tail() {
        // ∫_2^∞ dp / p³ = 1/8
        let r = integrate_to_infinity(|p: f64| Ok(p.powi(-3)), 2.0, AdaptiveOptions::default()).unwrap();
        assert!((r.value - 0.125).abs() < 1e-13);
        let fixed: f64 = tail_nodes(2.0f64, 2).iter().map(|&(p, w)| w * p.powi(-3)).sum();
        assert!((fixed - 0.125).abs() < 1e-13);
    }

    #[test]
    fn composite_rule_sums_panels() {
        let s: f64 = composite_nodes(&[0.0f64, 1.0, 3.0]).iter().map(|&(x, w)| w * x.exp()).sum();
        assert!((s - (3f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn non_convergence_is_reported() {
        let opts = AdaptiveOptions { abs_tol: 1e-14, rel_tol: 0.0, max_panels: 3 };
        let r = integrate(|x: f64| Ok(x.sqrt().recip()), 0.0, 1.0, opts);
        assert!(matches!(r, Err(Error::QuadratureNotConverged { .. })));
    }

    #[test]
    fn f32_quadrature() {
        let r = integrate(|x: f32| Ok(x.cos()), 0.0, 1.0, AdaptiveOptions { abs_tol: 1e-5, rel_tol: 1e-5, max_panels: 50 }).unwrap();
        assert!((r.value - 1f32.sin()).abs() < 1e-5);
    }
}
