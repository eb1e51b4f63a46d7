//! Scale function `W` of a spectrally negative process: catalog closed forms and
//! numerical inversion of its Laplace transform `1/Ψ`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{exponent_summary, psi_complex, ProcessKind, ProcessSpec, Side};
use crate::error::{domain, unsupported, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMethod {
    ClosedForm,
    NumericInversion,
}

/// Euler-summation inversion settings. `terms` is the number of transform
/// evaluations beyond the first (`2M`); the error estimate compares against
/// the same scheme run with `M − 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    pub terms: usize,
    pub target_rel: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            terms: 40,
            target_rel: 1e-6,
        }
    }
}

pub fn scale_w(spec: &ProcessSpec, x: f64, method: ScaleMethod) -> Result<f64> {
    scale_w_with(spec, x, method, InversionOptions::default())
}

pub fn scale_w_with(
    spec: &ProcessSpec,
    x: f64,
    method: ScaleMethod,
    options: InversionOptions,
) -> Result<f64> {
    if spec.side() != Side::SpectrallyNegative {
        return Err(domain("the scale function is defined for spectrally negative specs"));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("x must be finite and > 0, got {x}")));
    }
    match method {
        ScaleMethod::ClosedForm => closed_form(spec, x),
        ScaleMethod::NumericInversion => numeric(spec, x, options),
    }
}

/// Closed form when the catalog has one, numeric inversion otherwise.
pub(crate) fn scale_w_auto(spec: &ProcessSpec, x: f64) -> Result<f64> {
    match scale_w(spec, x, ScaleMethod::ClosedForm) {
        Err(Error::Unsupported(_)) => scale_w(spec, x, ScaleMethod::NumericInversion),
        other => other,
    }
}

fn closed_form(spec: &ProcessSpec, x: f64) -> Result<f64> {
    if let Some((q, gamma)) = spec.gaussian_params() {
        // Ψ(λ) = (q/2) λ (λ − r) with signed root r = 2γ/q.
        let r = 2.0 * gamma / q;
        return Ok(if r == 0.0 {
            2.0 * x / q
        } else {
            2.0 / (q * r) * (r * x).exp_m1()
        });
    }
    match spec.kind() {
        ProcessKind::StableSn { c, alpha, drift } if *drift == 0.0 => {
            Ok(x.powf(alpha - 1.0) / (c * libm::tgamma(*alpha)))
        }
        ProcessKind::BvDriftCpp {
            gamma_star,
            jump_rate,
            jump_mean,
        } => {
            // 1/Ψ = (1 + mλ) / (λ (a + bλ)) with a = γ* − r m, b = γ* m.
            let a = gamma_star - jump_rate * jump_mean;
            let b = gamma_star * jump_mean;
            Ok(if a == 0.0 {
                1.0 / gamma_star + x / b
            } else {
                1.0 / a + (1.0 / gamma_star - 1.0 / a) * (-a * x / b).exp()
            })
        }
        _ => Err(unsupported("no closed-form scale function for this spec")),
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Euler algorithm for `f(t)` given `F(s)`, with `m` the Euler parameter.
fn euler_invert(transform: impl Fn(Complex64) -> Complex64, t: f64, m: usize) -> f64 {
    let a = m as f64 * std::f64::consts::LN_10 / 3.0;
    let mut xi = vec![0.0; 2 * m + 1];
    xi[0] = 0.5;
    for v in xi.iter_mut().take(m + 1).skip(1) {
        *v = 1.0;
    }
    let two_m = 2f64.powi(-(m as i32));
    xi[2 * m] = two_m;
    for k in 1..m {
        xi[2 * m - k] = xi[2 * m - k + 1] + two_m * binomial(m, k);
    }
    let mut sum = 0.0;
    for (k, &w) in xi.iter().enumerate() {
        let beta = Complex64::new(a, std::f64::consts::PI * k as f64);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * w * transform(beta / t).re;
    }
    10f64.powf(m as f64 / 3.0) / t * sum
}

fn numeric(spec: &ProcessSpec, x: f64, options: InversionOptions) -> Result<f64> {
    let m = (options.terms / 2).max(6);
    // Damp the exponential growth e^{κx} so the inverted function stays bounded.
    let shift = exponent_summary(spec).map(|s| s.kappa).unwrap_or(0.0);
    let transform = |s: Complex64| 1.0 / psi_complex(spec, s + shift);
    let damp = (shift * x).exp();
    let fine = euler_invert(transform, x, m) * damp;
    let coarse = euler_invert(transform, x, m - 4) * damp;
    let achieved = ((fine - coarse) / fine).abs();
    if !fine.is_finite() || !(achieved <= options.target_rel) {
        return Err(Error::Precision {
            achieved,
            target: options.target_rel,
        });
    }
    Ok(fine)
}

/// `P(τ(V_x, y) < τ(V_x, ]−∞, 0])) = W(x)/W(y)` for `0 < x < y`.
pub fn first_passage_prob(spec: &ProcessSpec, x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0) || !(x < y) {
        return Err(domain(format!("need 0 < x < y, got x = {x}, y = {y}")));
    }
    Ok(scale_w_auto(spec, x)? / scale_w_auto(spec, y)?)
}
