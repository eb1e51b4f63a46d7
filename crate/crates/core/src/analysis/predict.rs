//! Theoretical predictors for the left and right tails of exponential functionals.

use serde::{Deserialize, Serialize};

use crate::error::{domain, unsupported, Error, Result};
use crate::levy_model::{psi_prime_raw, Exponent, ProcessSpec, Side};

fn exponent_for_tails(spec: &ProcessSpec) -> Result<Exponent> {
    if spec.side() != Side::SpectrallyNegative {
        return Err(domain("left-tail predictors are stated for spectrally negative specs"));
    }
    if spec.has_bounded_variation() {
        return Err(unsupported(
            "bounded variation: I(V-up) is supported on [1/gamma_star, inf), so there is no \
             left-tail law to predict",
        ));
    }
    Exponent::new(spec.clone())
}

/// `log P(I(V↑) ≤ x) ≈ −(α−1)·φ_V(1/x)` for exponents regularly varying with index `α`.
pub fn predict_left_tail_log(spec: &ProcessSpec, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("x must be finite and > 0, got {x}")));
    }
    let ex = exponent_for_tails(spec)?;
    let (_, alpha) = ex
        .regular_variation()
        .ok_or_else(|| unsupported("the spec is outside the regularly varying catalog"))?;
    Ok(-(alpha - 1.0) * ex.phi_v(1.0 / x)?)
}

/// Matched-constant asymptote `−(α−1)/(Cx)^{1/(α−1)}` for `Ψ ~ Cλ^α`.
pub fn left_tail_asymptote_log(spec: &ProcessSpec, x: f64) -> Result<f64> {
    let ex = exponent_for_tails(spec)?;
    let (c, alpha) = ex
        .regular_variation()
        .ok_or_else(|| unsupported("the spec is outside the regularly varying catalog"))?;
    Ok(-(alpha - 1.0) / (c * x).powf(1.0 / (alpha - 1.0)))
}

/// Bounds on `log P(I(V↑) ≤ x)` for `cλ^α ≤ Ψ(λ) ≤ Cλ^α` at infinity, with the catalog's
/// leading coefficient used for both constants:
/// upper `−δ_u(α−1)/(Cx)^{1/(α−1)}` with `δ_u ∈ (0,1)`,
/// lower `−δ_l α^{α/(α−1)}/(cx)^{1/(α−1)}` with `δ_l > 1`.
/// Returns `(log_lower, log_upper)`.
pub fn left_tail_bounds(spec: &ProcessSpec, x: f64, delta_upper: f64, delta_lower: f64) -> Result<(f64, f64)> {
    if !(delta_upper > 0.0 && delta_upper < 1.0) || !(delta_lower > 1.0) {
        return Err(domain(format!(
            "need delta_upper in (0,1) and delta_lower > 1, got {delta_upper}, {delta_lower}"
        )));
    }
    if !(x > 0.0) {
        return Err(domain(format!("x must be > 0, got {x}")));
    }
    let ex = exponent_for_tails(spec)?;
    let (c, alpha) = ex
        .regular_variation()
        .ok_or_else(|| unsupported("no power-law constants for this spec"))?;
    let p = 1.0 / (alpha - 1.0);
    let upper = -delta_upper * (alpha - 1.0) / (c * x).powf(p);
    let lower = -delta_lower * alpha.powf(alpha * p) / (c * x).powf(p);
    Ok((lower, upper))
}

/// Log-bounds on `P(I(V↑) ≤ x)` built from `∫_{Ψ'(κ)}^{R} φ_V(r)/r dr` and `φ'_V`,
/// with the unknown multiplicative constants set to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentIntegralBounds {
    pub lower_log: f64,
    pub upper_log: f64,
    /// `∫_{Ψ'(κ)}^{δ/x} φ_V(r)/r dr`.
    pub integral_lower_end: f64,
    /// `∫_{Ψ'(κ)}^{1/(δx)} φ_V(r)/r dr`.
    pub integral_upper_end: f64,
}

fn phi_integral(ex: &Exponent, from: f64, to: f64) -> Result<f64> {
    // r = e^u turns ∫ φ(r)/r dr into ∫ φ(e^u) du, smooth on a log scale
    let (a, b) = (from.ln(), to.ln());
    let f = |u: f64| ex.phi_v(u.exp()).unwrap_or(f64::NAN);
    let rough = quadrature::double_exponential::integrate(f, a, b, 1e-6);
    let target = 1e-8f64.max(1e-10 * rough.integral.abs());
    let out = quadrature::double_exponential::integrate(f, a, b, target);
    if !out.integral.is_finite() || !(out.error_estimate <= target) {
        return Err(Error::Precision {
            achieved: out.error_estimate,
            target,
        });
    }
    Ok(out.integral)
}

fn phi_derivative(ex: &Exponent, r: f64) -> Result<f64> {
    let h = 1e-5 * r;
    Ok((ex.phi_v(r + h)? - ex.phi_v(r - h)?) / (2.0 * h))
}

/// The pair of log-bounds for unbounded-variation, non-oscillating specs and `δ > 1`.
pub fn prop111_exponent(spec: &ProcessSpec, x: f64, delta: f64) -> Result<ExponentIntegralBounds> {
    if !(delta > 1.0) || !(x > 0.0) {
        return Err(domain(format!("need delta > 1 and x > 0, got delta = {delta}, x = {x}")));
    }
    let ex = exponent_for_tails(spec)?;
    if ex.oscillates() {
        return Err(domain("the bounds need a non-oscillating process"));
    }
    let start = psi_prime_raw(spec, ex.kappa());
    let r_lo = delta / x;
    let r_hi = 1.0 / (delta * x);
    if !(r_hi > start) {
        return Err(domain(format!(
            "1/(delta x) = {r_hi} must exceed the slope at kappa, {start}; take x smaller"
        )));
    }
    let i_lo = phi_integral(&ex, start, r_lo)?;
    let i_hi = phi_integral(&ex, start, r_hi)?;
    let lower_log = (delta - 1.0).ln() + 0.5 * phi_derivative(&ex, r_lo)?.ln() - i_lo;
    let upper_log = -((delta - 1.0) * x).ln() + 0.5 * phi_derivative(&ex, r_hi)?.ln() - i_hi;
    Ok(ExponentIntegralBounds {
        lower_log,
        upper_log,
        integral_lower_end: i_lo,
        integral_upper_end: i_hi,
    })
}

/// `−log P(I(αN) ≤ x) ≈ (log x)²/(2α)` for a Poisson process `N`.
pub fn predict_poisson_tail(alpha: f64, x: f64) -> Result<f64> {
    if !(alpha > 0.0) || !(x > 0.0 && x < 1.0) {
        return Err(domain(format!("need alpha > 0 and x in (0,1), got {alpha}, {x}")));
    }
    Ok(x.ln().powi(2) / (2.0 * alpha))
}

/// Lower bounds for `P(I(Y) ≤ x)` with positive jumps of tail `π̄`:
/// `x·π̄(log(1/x))` and `e^{−c(log x)²}` (constants set to 1).
pub fn jump_tail_lower_bounds(pi_bar: impl Fn(f64) -> f64, x: f64, c: f64) -> Result<(f64, f64)> {
    if !(x > 0.0 && x < 1.0) || !(c > 0.0) {
        return Err(domain(format!("need x in (0,1) and c > 0, got x = {x}, c = {c}")));
    }
    Ok((x * pi_bar((1.0 / x).ln()), (-c * x.ln().powi(2)).exp()))
}

/// Dufresne's law for `V = B + t/2`: `P(I(V) ≤ x) = e^{−2/x}`.
pub fn dufresne_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-2.0 / x).exp()
    }
}

/// Exact `P(I(V↑) ≤ x)` for `V` a standard Brownian motion, where `V↑` is a 3-dimensional
/// Bessel process: `1 − Σ_k 2 e^{−j_k² x/8}/(j_k J₁(j_k))` over the zeros `j_k` of `J₀`.
/// Absolute error about 1e-15, so relative accuracy degrades once the value drops below 1e-12.
pub fn driftless_brownian_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for k in 1.. {
        let j = bessel_j0_zero(k);
        let decay = (-j * j * x / 8.0).exp();
        sum += 2.0 * decay / (j * libm::j1(j));
        if decay < 1e-18 {
            break;
        }
    }
    (1.0 - sum).clamp(0.0, 1.0)
}

/// `k`-th positive zero of `J₀`, Newton from McMahon's expansion.
pub(crate) fn bessel_j0_zero(k: u32) -> f64 {
    let b = (k as f64 - 0.25) * std::f64::consts::PI;
    let mut j = b + 1.0 / (8.0 * b) - 31.0 / (384.0 * b.powi(3));
    for _ in 0..8 {
        let step = libm::j0(j) / -libm::j1(j);
        j -= step;
        if step.abs() < 1e-15 * j {
            break;
        }
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn left_tail_examples() {
        let bm0 = ProcessSpec::brownian(1.0, 0.0).unwrap();
        assert!(close(predict_left_tail_log(&bm0, 0.1).unwrap(), -20.0, 1e-9));
        let bm1 = ProcessSpec::brownian_kappa(1.0).unwrap();
        for x in [0.1, 0.01, 0.001] {
            assert!(close(predict_left_tail_log(&bm1, x).unwrap(), -(2.0 / x - 1.0), 1e-9));
        }
        let st = ProcessSpec::stable(1.0, 1.5, 0.0).unwrap();
        assert!(close(predict_left_tail_log(&st, 0.01).unwrap(), -5000.0, 1e-9));
        let bv = ProcessSpec::bv_drift_cpp(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(predict_left_tail_log(&bv, 0.1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn bounds_example() {
        let bm0 = ProcessSpec::brownian(1.0, 0.0).unwrap();
        let (lo, up) = left_tail_bounds(&bm0, 0.2, 0.9, 1.1).unwrap();
        assert!(close(up, -9.0, 1e-12) && close(lo, -44.0, 1e-12));
        let pred = predict_left_tail_log(&bm0, 0.2).unwrap();
        assert!(lo < pred && pred < up);
    }

    #[test]
    fn exponent_integral_brownian_closed_form() {
        // κ = 1: φ(r) = 2r − 1 on r > 1/2, so ∫ φ/r = 2(R − 1/2) − ln(2R) and φ' = 2
        let bm1 = ProcessSpec::brownian_kappa(1.0).unwrap();
        let (x, d) = (0.1, 1.5);
        let b = prop111_exponent(&bm1, x, d).unwrap();
        let oracle = |r: f64| 2.0 * (r - 0.5) - (2.0 * r).ln();
        assert!(close(b.integral_lower_end, oracle(d / x), 1e-9));
        assert!(close(b.integral_upper_end, oracle(1.0 / (d * x)), 1e-9));
        let lower = (d - 1.0).ln() + 0.5 * 2f64.ln() - oracle(d / x);
        assert!(close(b.lower_log, lower, 1e-7));
        assert!(b.lower_log <= b.upper_log);
    }

    #[test]
    fn exponent_integral_matches_power_order() {
        let st = ProcessSpec::stable(1.0, 1.5, 0.1).unwrap();
        let x = 1e-4;
        let b = prop111_exponent(&st, x, 1.001).unwrap();
        let order = 0.5 * (1.0 / x).powi(2);
        assert!(close(b.integral_upper_end, order, 0.05));
        assert!(close(b.integral_lower_end, order, 0.05));
    }

    #[test]
    fn poisson_and_jump_bounds() {
        assert!(close(predict_poisson_tail(1.0, 0.05).unwrap(), 4.4870, 1e-4));
        assert!(predict_poisson_tail(1.0, 1.0 - 1e-9).unwrap() < 1e-15);
        let a = predict_poisson_tail(1.0, 0.01).unwrap();
        assert!(close(predict_poisson_tail(2.0, 0.01).unwrap(), a / 2.0, 1e-14));
        let (b9, b10) = jump_tail_lower_bounds(|u| (-u).exp(), 0.1, 1.0).unwrap();
        assert!(close(b9, 0.01, 1e-12) && close(b10, (-(0.1f64.ln().powi(2))).exp(), 1e-12));
    }

    #[test]
    fn driftless_brownian_law() {
        assert!((bessel_j0_zero(1) - 2.404_825_557_695_773).abs() < 1e-13);
        assert!((bessel_j0_zero(2) - 5.520_078_110_286_311).abs() < 1e-13);
        // E[I] = 1/Ψ(1) = 2, and ∫(1 − F) = Σ 16/(j³ J₁(j))
        let mean: f64 = (1..2000)
            .map(|k| {
                let j = bessel_j0_zero(k);
                16.0 / (j.powi(3) * libm::j1(j))
            })
            .sum();
        assert!((mean - 2.0).abs() < 1e-6, "{mean}");
        // right tail decays at rate j₁²/8
        let (a, b) = (6.0, 8.0);
        let rate = ((1.0 - driftless_brownian_cdf(a)) / (1.0 - driftless_brownian_cdf(b))).ln() / (b - a);
        assert!((rate - 2.404_825_557_695_773f64.powi(2) / 8.0).abs() < 1e-6);
        let mut last = 0.0;
        for i in 1..60 {
            let f = driftless_brownian_cdf(0.1 * i as f64);
            assert!(f >= last);
            last = f;
        }
        assert!((driftless_brownian_cdf(0.3) - 0.002_461).abs() < 5e-6);
    }
}
