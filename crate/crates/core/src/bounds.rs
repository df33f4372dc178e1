//! Closed-form envelopes and concentration bounds, plus [`BoundReport`] for
//! pairing a bound with the quantity it must dominate.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

/// Slack allowed when checking `bound ≥ measured`.
pub const DOMINANCE_TOL: f64 = 1e-12;
/// Default universal constant in the Dudley bound.
pub const DUDLEY_DEFAULT_C: f64 = 24.0;
pub const DUDLEY_ABS_TOL: f64 = 1e-8;
/// Lower end of the entropy integral.
pub const DUDLEY_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("entropy integral diverges near 0: {0}")]
    Divergence(String),
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), BoundsError> {
    if cond {
        Ok(())
    } else {
        Err(BoundsError::Domain(msg()))
    }
}

fn check_gamma(gamma: f64) -> Result<(), BoundsError> {
    require((0.0..1.0).contains(&gamma), || format!("gamma must lie in [0, 1), got {gamma}"))
}

/// `b_t = γ^t e0 + (1−γ^t)/(1−γ)·δ`, `t = 0..=horizon`.
pub fn perturbed_envelope(gamma: f64, delta: f64, e0: f64, horizon: usize) -> Result<Vec<f64>, BoundsError> {
    check_gamma(gamma)?;
    require(delta >= 0.0 && e0 >= 0.0, || format!("delta and e0 must be nonnegative, got {delta}, {e0}"))?;
    Ok((0..=horizon)
        .map(|t| {
            let g = gamma.powi(t as i32);
            g * e0 + (1.0 - g) / (1.0 - gamma) * delta
        })
        .collect())
}

/// `b_t = γ^t e0 + Σ_{k<t} γ^{t−1−k} ε_k`, `t = 0..=eps.len()`.
pub fn inexact_envelope(gamma: f64, e0: f64, eps: &[f64]) -> Result<Vec<f64>, BoundsError> {
    check_gamma(gamma)?;
    require(e0 >= 0.0, || format!("e0 must be nonnegative, got {e0}"))?;
    if let Some(bad) = eps.iter().find(|e| !(**e >= 0.0)) {
        return Err(BoundsError::Domain(format!("negative or NaN ε: {bad}")));
    }
    let mut out = Vec::with_capacity(eps.len() + 1);
    let mut acc = 0.0;
    out.push(e0);
    for (t, e) in eps.iter().enumerate() {
        acc = gamma * acc + e;
        out.push(gamma.powi(t as i32 + 1) * e0 + acc);
    }
    Ok(out)
}

/// Sample-splitting recursion: the inexact envelope driven by per-block deviations.
pub fn splitting_envelope(gamma: f64, e0: f64, block_deviations: &[f64]) -> Result<Vec<f64>, BoundsError> {
    inexact_envelope(gamma, e0, block_deviations)
}

/// `Δ ≤ sup ‖∇Q̂ − ∇Q‖ / λ`.
pub fn delta_from_gradients(lambda: f64, sup_grad_dev: f64) -> Result<f64, BoundsError> {
    require(lambda > 0.0, || format!("lambda must be positive, got {lambda}"))?;
    require(sup_grad_dev >= 0.0, || format!("gradient deviation must be nonnegative, got {sup_grad_dev}"))?;
    Ok(sup_grad_dev / lambda)
}

/// Shift of a `λ`-strongly concave maximizer under a uniform gradient error `ε`: `ε/λ`.
pub fn argmax_shift_bound(lambda: f64, eps: f64) -> Result<f64, BoundsError> {
    require(lambda > 0.0 && eps >= 0.0, || format!("need lambda > 0 and eps ≥ 0, got {lambda}, {eps}"))?;
    Ok(eps / lambda)
}

/// Shift under a uniform function error `δ`: `√(4δ/λ)`.
pub fn function_gap_shift_bound(lambda: f64, delta_sup: f64) -> Result<f64, BoundsError> {
    require(lambda > 0.0 && delta_sup >= 0.0, || format!("need lambda > 0 and delta ≥ 0, got {lambda}, {delta_sup}"))?;
    Ok((4.0 * delta_sup / lambda).sqrt())
}

/// Distance of an `η`-approximate maximizer from the maximizer: `√(2η/λ)`.
pub fn approx_stationary_bound(lambda: f64, eta: f64) -> Result<f64, BoundsError> {
    require(lambda > 0.0 && eta >= 0.0, || format!("need lambda > 0 and eta ≥ 0, got {lambda}, {eta}"))?;
    Ok((2.0 * eta / lambda).sqrt())
}

/// `(1 + 2LR/ε)^p`.
pub fn covering_bound(p: usize, lipschitz: f64, radius: f64, eps: f64) -> Result<f64, BoundsError> {
    require(lipschitz > 0.0 && radius > 0.0 && eps > 0.0, || format!("need L, R, ε > 0, got {lipschitz}, {radius}, {eps}"))?;
    Ok((1.0 + 2.0 * lipschitz * radius / eps).powi(p as i32))
}

/// `(1 + 2/η)^d` points suffice for an `η`-net of the unit sphere in `R^d`.
pub fn sphere_net_bound(dim: usize, eta: f64) -> Result<f64, BoundsError> {
    covering_bound(dim, 1.0, 1.0, eta)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: usize) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `(C/√n) ∫_0^diam √(log N(ε)) dε`, integrated over decade shells down to
/// [`DUDLEY_FLOOR`]; a shell near the floor that still contributes more than
/// the tolerance means the integral does not converge.
pub fn dudley_bound(entropy: &dyn Fn(f64) -> f64, diam: f64, n: usize, constant: f64) -> Result<f64, BoundsError> {
    require(diam > 0.0 && n >= 1 && constant > 0.0, || format!("need diam > 0, n ≥ 1, C > 0, got {diam}, {n}, {constant}"))?;
    let integrand = |e: f64| entropy(e).max(0.0).sqrt();
    let mut shells = Vec::new();
    let mut hi = diam;
    while hi > 1.5 * DUDLEY_FLOOR {
        let lo = (hi / 10.0).max(DUDLEY_FLOOR);
        shells.push(integrate(&integrand, lo, hi, DUDLEY_ABS_TOL / 16.0));
        hi = lo;
    }
    let total: f64 = shells.iter().sum();
    let last = *shells.last().unwrap_or(&0.0);
    if !total.is_finite() || last > DUDLEY_ABS_TOL.max(1e-6 * total) {
        return Err(BoundsError::Divergence(format!("shell [{DUDLEY_FLOOR:e}, ·] still contributes {last:e}")));
    }
    Ok(constant / (n as f64).sqrt() * total)
}

/// `P(‖Σ Y_i‖ ≥ t) ≤ 2d · exp(−(t²/2) / (V + R t/3))`.
pub fn matrix_bernstein_tail(v: f64, r: f64, d: usize, t: f64) -> Result<f64, BoundsError> {
    require(v >= 0.0 && r > 0.0 && d >= 1 && t >= 0.0, || format!("need V ≥ 0, R > 0, d ≥ 1, t ≥ 0, got {v}, {r}, {d}, {t}"))?;
    Ok(2.0 * d as f64 * (-(t * t / 2.0) / (v + r * t / 3.0)).exp())
}

/// `√(2V log(2d/δ)) + (2R/3) log(2d/δ)`.
pub fn matrix_bernstein_hp(v: f64, r: f64, d: usize, delta_prob: f64) -> Result<f64, BoundsError> {
    require(v >= 0.0 && r > 0.0 && d >= 1, || format!("need V ≥ 0, R > 0, d ≥ 1, got {v}, {r}, {d}"))?;
    require(delta_prob > 0.0 && delta_prob < 1.0, || format!("δ must lie in (0, 1), got {delta_prob}"))?;
    let l = (2.0 * d as f64 / delta_prob).ln();
    Ok((2.0 * v * l).sqrt() + 2.0 * r / 3.0 * l)
}

/// `EZ + √(2vt/n) + bt/(3n)`.
pub fn bousquet_bound(ez: f64, v: f64, b: f64, n: usize, t: f64) -> Result<f64, BoundsError> {
    require(ez >= 0.0 && v >= 0.0 && b >= 0.0 && t >= 0.0 && n >= 1, || format!("nonnegative inputs and n ≥ 1 required, got {ez}, {v}, {b}, {n}, {t}"))?;
    let n = n as f64;
    Ok(ez + (2.0 * v * t / n).sqrt() + b * t / (3.0 * n))
}

/// Inverse of the linear lower modulus `ω(u) = c·u`.
pub fn ipm_to_orbit_rate(ipm_value: f64, slope: f64) -> Result<f64, BoundsError> {
    require(slope > 0.0, || format!("modulus slope must be positive, got {slope}"))?;
    Ok(ipm_value / slope)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    pub t: Vec<usize>,
    pub bound: Vec<f64>,
    pub measured: Vec<f64>,
    /// `bound ≥ measured − DOMINANCE_TOL` at every `t`.
    pub dominance: bool,
    /// `max_t (bound_t − measured_t)`.
    pub max_slack: f64,
    /// `min_t (bound_t − measured_t)`.
    pub min_slack: f64,
    pub substitutions: Vec<String>,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, inputs: BTreeMap<String, f64>, bound: Vec<f64>, measured: Vec<f64>) -> Result<Self, BoundsError> {
        require(bound.len() == measured.len(), || format!("{} bound values for {} measurements", bound.len(), measured.len()))?;
        let slack: Vec<f64> = bound.iter().zip(&measured).map(|(b, m)| b - m).collect();
        let dominance = slack.iter().all(|s| *s >= -DOMINANCE_TOL);
        let max_slack = slack.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_slack = slack.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self {
            name: name.into(),
            inputs,
            t: (0..bound.len()).collect(),
            bound,
            measured,
            dominance,
            max_slack,
            min_slack,
            substitutions: Vec::new(),
        })
    }

    pub fn with_substitution(mut self, note: impl Into<String>) -> Self {
        self.substitutions.push(note.into());
        self
    }
}

/// Builds an `inputs` map from `(name, value)` pairs.
pub fn inputs<const N: usize>(pairs: [(&str, f64); N]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perturbed_examples() {
        let b = perturbed_envelope(0.5, 0.0, 2.0, 5).unwrap();
        for (t, v) in b.iter().enumerate() {
            assert_eq!(*v, 2.0 * 0.5f64.powi(t as i32));
        }
        assert!((perturbed_envelope(0.5, 0.1, 0.0, 3).unwrap()[3] - 0.175).abs() < 1e-15);
        assert!((perturbed_envelope(0.5, 0.1, 0.0, 50).unwrap()[50] - 0.2).abs() < 1e-12);
        assert!(perturbed_envelope(1.0, 0.1, 0.0, 3).is_err());
    }

    #[test]
    fn inexact_examples() {
        let c = inexact_envelope(0.6, 1.5, &[0.2; 20]).unwrap();
        let p = perturbed_envelope(0.6, 0.2, 1.5, 20).unwrap();
        for (a, b) in c.iter().zip(&p) {
            assert!((a - b).abs() < 1e-14);
        }
        let mut eps = vec![0.0; 10];
        eps[0] = 1.0;
        let b = inexact_envelope(0.5, 0.3, &eps).unwrap();
        for t in 1..=10 {
            assert!((b[t] - (0.5f64.powi(t as i32) * 0.3 + 0.5f64.powi(t as i32 - 1))).abs() < 1e-15);
        }
        let z = inexact_envelope(0.5, 1.0, &[0.0; 5]).unwrap();
        assert_eq!(z[5], 0.5f64.powi(5));
        assert!(inexact_envelope(0.5, 1.0, &[0.1, -0.1]).is_err());
    }

    #[test]
    fn shift_bounds() {
        assert_eq!(delta_from_gradients(2.0, 0.0).unwrap(), 0.0);
        assert!(delta_from_gradients(0.0, 1.0).is_err());
        assert_eq!(function_gap_shift_bound(3.0, 0.0).unwrap(), 0.0);
        assert!((function_gap_shift_bound(4.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((approx_stationary_bound(2.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        // f = -(λ/2)(u-u*)², f̂ = f + εu has maximizer u* + ε/λ
        let (lambda, eps, ustar) = (2.5, 0.3, -1.0);
        let shifted = ustar + eps / lambda;
        assert!(((shifted - ustar) - argmax_shift_bound(lambda, eps).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn covering_and_concentration_arithmetic() {
        assert_eq!(covering_bound(2, 1.0, 1.0, 1.0).unwrap(), 9.0);
        assert_eq!(matrix_bernstein_tail(1.0, 1.0, 3, 0.0).unwrap(), 6.0);
        let b = bousquet_bound(0.1, 1.0, 1.0, 100, 2.0).unwrap();
        assert!((b - (0.1 + 0.2 + 2.0 / 300.0)).abs() < 1e-15);
        assert_eq!(bousquet_bound(0.25, 1.0, 1.0, 10, 0.0).unwrap(), 0.25);
        assert_eq!(ipm_to_orbit_rate(0.0, 2.0).unwrap(), 0.0);
        assert_eq!(ipm_to_orbit_rate(0.6, 2.0).unwrap() * 2.0, ipm_to_orbit_rate(1.2, 2.0).unwrap() * 1.0);
        assert!(ipm_to_orbit_rate(1.0, 0.0).is_err());
        // hp form inverts the tail at the same δ
        let (v, r, d, delta) = (2.0, 0.5, 4, 0.05);
        let t = matrix_bernstein_hp(v, r, d, delta).unwrap();
        assert!(matrix_bernstein_tail(v, r, d, t).unwrap() <= delta + 1e-15);
    }

    #[test]
    fn dudley_quadrature() {
        assert_eq!(dudley_bound(&|_| 0.0, 1.0, 10, 24.0).unwrap(), 0.0);
        let entropy = |e: f64| 2.0 * (1.0 + 2.0 / e).ln();
        let q = dudley_bound(&entropy, 1.0, 1, 1.0).unwrap();
        // midpoint rule after ε = s², which removes the endpoint singularity
        let n = 1_000_000;
        let h = 1.0 / n as f64;
        let oracle: f64 = (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5) * h;
                2.0 * s * entropy(s * s).sqrt() * h
            })
            .sum();
        assert!(((q - oracle) / oracle).abs() <= 1e-6, "{q} vs {oracle}");
        let a = dudley_bound(&entropy, 1.0, 100, 24.0).unwrap();
        let b = dudley_bound(&entropy, 1.0, 400, 24.0).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!(matches!(dudley_bound(&|e: f64| 1.0 / (e * e), 1.0, 1, 1.0), Err(BoundsError::Divergence(_))));
    }

    #[test]
    fn report_dominance() {
        let r = BoundReport::new("x", inputs([("gamma", 0.5)]), vec![1.0, 0.5], vec![0.9, 0.5 + 1e-13]).unwrap();
        assert!(r.dominance);
        assert!((r.max_slack - 0.1).abs() < 1e-15);
        let r = BoundReport::new("x", BTreeMap::new(), vec![1.0], vec![1.1]).unwrap();
        assert!(!r.dominance);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["name", "inputs", "t", "bound", "measured", "dominance", "max_slack", "substitutions"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    proptest! {
        #[test]
        fn envelopes_monotone(gamma in 0.0f64..0.95, dg in 0.0f64..0.04, delta in 0.0f64..1.0, dd in 0.0f64..1.0, e0 in 0.0f64..3.0, de in 0.0f64..1.0) {
            let base = perturbed_envelope(gamma, delta, e0, 20).unwrap();
            for other in [
                perturbed_envelope(gamma + dg, delta, e0, 20).unwrap(),
                perturbed_envelope(gamma, delta + dd, e0, 20).unwrap(),
                perturbed_envelope(gamma, delta, e0 + de, 20).unwrap(),
            ] {
                for (a, b) in base.iter().zip(&other) {
                    prop_assert!(*b >= *a - 1e-12);
                }
            }
        }

        #[test]
        fn calculators_monotone(x in 0.01f64..5.0, dx in 0.0f64..2.0, lambda in 0.1f64..5.0, n in 1usize..1000) {
            prop_assert!(delta_from_gradients(lambda, x + dx).unwrap() >= delta_from_gradients(lambda, x).unwrap());
            prop_assert!(delta_from_gradients(lambda + dx, x).unwrap() <= delta_from_gradients(lambda, x).unwrap());
            prop_assert!(function_gap_shift_bound(lambda, x + dx).unwrap() >= function_gap_shift_bound(lambda, x).unwrap());
            prop_assert!(covering_bound(3, x + dx, 1.0, 0.5).unwrap() >= covering_bound(3, x, 1.0, 0.5).unwrap());
            prop_assert!(covering_bound(3, 1.0, 1.0, x + dx).unwrap() <= covering_bound(3, 1.0, 1.0, x).unwrap());
            prop_assert!(matrix_bernstein_tail(x + dx, 1.0, 4, 2.0).unwrap() >= matrix_bernstein_tail(x, 1.0, 4, 2.0).unwrap());
            prop_assert!(matrix_bernstein_tail(1.0, 1.0, 4, x + dx).unwrap() <= matrix_bernstein_tail(1.0, 1.0, 4, x).unwrap());
            prop_assert!(matrix_bernstein_hp(x + dx, 1.0, 4, 0.05).unwrap() >= matrix_bernstein_hp(x, 1.0, 4, 0.05).unwrap());
            prop_assert!(bousquet_bound(0.1, x + dx, 1.0, n, 1.0).unwrap() >= bousquet_bound(0.1, x, 1.0, n, 1.0).unwrap());
            prop_assert!(bousquet_bound(0.1, 1.0, 1.0, n + 1, x).unwrap() <= bousquet_bound(0.1, 1.0, 1.0, n, x).unwrap());
            prop_assert!(ipm_to_orbit_rate(x + dx, lambda).unwrap() >= ipm_to_orbit_rate(x, lambda).unwrap());
        }
    }
}
