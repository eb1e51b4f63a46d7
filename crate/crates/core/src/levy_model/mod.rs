//! Exact analytic layer: Laplace exponents, their roots and inverses, regularity
//! indices, scale functions and closed-form reference transforms.
//!
//! For spectrally negative specs `psi` is `Ψ_V`. For spectrally positive specs it is
//! the exponent of the negated process (`Ψ_{−Z}` for `dual_of`, `Ψ_{−Y}` for the
//! Poisson multiple), so that every quantity here is read on the spectrally negative side.

mod refs;
mod scale;
mod spec;

pub use refs::{brownian_laplace_ref, poisson_log_laplace_ref, SeriesValue};
pub use scale::{first_passage_prob, scale_w, scale_w_with, InversionOptions, ScaleMethod};
pub use spec::{ProcessKind, ProcessSpec, Side};

pub(crate) use spec::reject_unknown;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Default upper end of the bracket search for roots of the exponent.
pub const LAMBDA_MAX: f64 = 1e9;

/// Root-level facts about `Ψ_V`, computed once per spec.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSummary {
    pub kappa: f64,
    pub psi_prime_at_kappa: f64,
    pub psi_at_kappa_plus_1: f64,
    pub sigma: f64,
    pub beta: f64,
}

/// Exponent evaluated on its natural (possibly extended) real domain, no checks.
pub(crate) fn psi_raw(spec: &ProcessSpec, lambda: f64) -> f64 {
    match spec.kind() {
        ProcessKind::BrownianDrift { q, gamma } => 0.5 * q * lambda * lambda - gamma * lambda,
        ProcessKind::StableSn { c, alpha, drift } => c * lambda.powf(*alpha) + drift * lambda,
        ProcessKind::BvDriftCpp {
            gamma_star,
            jump_rate,
            jump_mean,
        } => gamma_star * lambda - jump_rate * lambda * jump_mean / (1.0 + lambda * jump_mean),
        ProcessKind::PoissonMultiple { alpha_jump, rate } => rate * (-alpha_jump * lambda).exp_m1(),
        ProcessKind::DualOf(inner) => psi_raw(inner, lambda),
    }
}

pub(crate) fn psi_prime_raw(spec: &ProcessSpec, lambda: f64) -> f64 {
    match spec.kind() {
        ProcessKind::BrownianDrift { q, gamma } => q * lambda - gamma,
        ProcessKind::StableSn { c, alpha, drift } => {
            if lambda == 0.0 {
                *drift
            } else {
                c * alpha * lambda.powf(alpha - 1.0) + drift
            }
        }
        ProcessKind::BvDriftCpp {
            gamma_star,
            jump_rate,
            jump_mean,
        } => {
            let d = 1.0 + lambda * jump_mean;
            gamma_star - jump_rate * jump_mean / (d * d)
        }
        ProcessKind::PoissonMultiple { alpha_jump, rate } => {
            -rate * alpha_jump * (-alpha_jump * lambda).exp()
        }
        ProcessKind::DualOf(inner) => psi_prime_raw(inner, lambda),
    }
}

/// Exponent at a complex argument with positive real part (principal branch).
pub(crate) fn psi_complex(spec: &ProcessSpec, s: Complex64) -> Complex64 {
    match spec.kind() {
        ProcessKind::BrownianDrift { q, gamma } => 0.5 * q * s * s - gamma * s,
        ProcessKind::StableSn { c, alpha, drift } => *c * s.powf(*alpha) + *drift * s,
        ProcessKind::BvDriftCpp {
            gamma_star,
            jump_rate,
            jump_mean,
        } => *gamma_star * s - *jump_rate * *jump_mean * s / (1.0 + *jump_mean * s),
        ProcessKind::PoissonMultiple { alpha_jump, rate } => *rate * ((-*alpha_jump * s).exp() - 1.0),
        ProcessKind::DualOf(inner) => psi_complex(inner, s),
    }
}

/// `Ψ(λ)` for `λ ≥ 0`.
pub fn psi(spec: &ProcessSpec, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(domain(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    Ok(psi_raw(spec, lambda))
}

fn regularity_indices(spec: &ProcessSpec) -> Result<(f64, f64)> {
    match spec.kind() {
        ProcessKind::BrownianDrift { .. } => Ok((2.0, 2.0)),
        ProcessKind::StableSn { alpha, .. } => Ok((*alpha, *alpha)),
        ProcessKind::BvDriftCpp { .. } => Ok((1.0, 1.0)),
        ProcessKind::DualOf(inner) => regularity_indices(inner),
        ProcessKind::PoissonMultiple { .. } => Err(Error::Unsupported(
            "regularity indices are defined for spectrally negative processes that are not \
             the opposite of a subordinator"
                .into(),
        )),
    }
}

/// Bisection on `[lo, hi]` for an increasing crossing of `f` through zero.
/// `f(lo) <= 0 < f(hi)` is assumed; stops at 1e-15 relative width.
pub(crate) fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi.abs() {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Doubles an upper bracket from 1 until `f(hi) > 0` or `lambda_max` is passed.
pub(crate) fn bracket_up(f: impl Fn(f64) -> f64, lambda_max: f64) -> Option<f64> {
    let mut hi = 1.0;
    while hi <= lambda_max {
        if f(hi) > 0.0 {
            return Some(hi);
        }
        hi *= 2.0;
    }
    None
}

pub fn exponent_summary(spec: &ProcessSpec) -> Result<ExponentSummary> {
    exponent_summary_with(spec, LAMBDA_MAX)
}

pub fn exponent_summary_with(spec: &ProcessSpec, lambda_max: f64) -> Result<ExponentSummary> {
    let slope0 = psi_prime_raw(spec, 0.0);
    let kappa = if slope0 >= 0.0 {
        0.0
    } else if let ProcessKind::BrownianDrift { q, gamma } = spec.kind() {
        2.0 * gamma / q
    } else {
        let f = |l: f64| psi_raw(spec, l);
        let hi = bracket_up(f, lambda_max).ok_or_else(|| Error::Convergence {
            what: "root of the Laplace exponent".into(),
            diagnostics: format!(
                "no sign change found below lambda_max = {lambda_max:e}; psi'(0) = {slope0}, \
                 psi(lambda_max) = {}",
                psi_raw(spec, lambda_max)
            ),
        })?;
        bisect(0.0, hi, f)
    };
    let (sigma, beta) = regularity_indices(spec)?;
    Ok(ExponentSummary {
        kappa,
        psi_prime_at_kappa: psi_prime_raw(spec, kappa).max(0.0),
        psi_at_kappa_plus_1: psi_raw(spec, kappa + 1.0),
        sigma,
        beta,
    })
}

/// `Ψ_{V♯}(λ) = Ψ_V(κ + λ)`.
pub fn psi_conditioned(spec: &ProcessSpec, lambda: f64) -> Result<f64> {
    Exponent::new(spec.clone())?.psi_conditioned(lambda)
}

/// `Φ(x)`: the λ ≥ 0 with `Ψ_V(κ + λ) = x`.
pub fn inverse_exponent(spec: &ProcessSpec, x: f64) -> Result<f64> {
    Exponent::new(spec.clone())?.inverse(x)
}

/// `φ_V(x) = inf{λ ≥ 0 : Ψ_V(λ + κ)/λ > x}`.
pub fn phi_v(spec: &ProcessSpec, x: f64) -> Result<f64> {
    Exponent::new(spec.clone())?.phi_v(x)
}

/// A spec together with its cached [`ExponentSummary`].
#[derive(Debug, Clone, PartialEq)]
pub struct Exponent {
    spec: ProcessSpec,
    summary: ExponentSummary,
}

impl Exponent {
    pub fn new(spec: ProcessSpec) -> Result<Self> {
        let summary = exponent_summary(&spec)?;
        Ok(Self { spec, summary })
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn summary(&self) -> &ExponentSummary {
        &self.summary
    }

    pub fn kappa(&self) -> f64 {
        self.summary.kappa
    }

    pub fn psi(&self, lambda: f64) -> Result<f64> {
        psi(&self.spec, lambda)
    }

    pub fn psi_conditioned(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(domain(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if lambda == 0.0 {
            return Ok(0.0);
        }
        Ok(psi_raw(&self.spec, self.summary.kappa + lambda))
    }

    /// True when `V` oscillates (`κ = 0` and `Ψ'(0) = 0`).
    pub fn oscillates(&self) -> bool {
        self.summary.kappa == 0.0 && psi_prime_raw(&self.spec, 0.0) == 0.0
    }

    pub fn inverse(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(domain(format!("x must be finite and >= 0, got {x}")));
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        let kappa = self.summary.kappa;
        let f = |l: f64| psi_raw(&self.spec, kappa + l) - x;
        let hi = bracket_up(f, LAMBDA_MAX).ok_or_else(|| Error::Convergence {
            what: "inverse exponent".into(),
            diagnostics: format!("psi_conditioned stays below x = {x} up to {LAMBDA_MAX:e}"),
        })?;
        Ok(bisect(0.0, hi, f))
    }

    /// `lim_{λ→∞} Ψ♯(λ)/λ` when it is finite (bounded variation), else `None`.
    fn ratio_limit(&self) -> Option<f64> {
        match self.spec.exponent_owner().kind() {
            ProcessKind::BvDriftCpp { gamma_star, .. } => Some(*gamma_star),
            _ => None,
        }
    }

    /// `φ_V(x)`; returns `+∞` when `x` is at or above the (finite) limit of the ratio.
    pub fn phi_v(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(domain(format!("x must be finite and > 0, got {x}")));
        }
        if x <= self.summary.psi_prime_at_kappa {
            return Ok(0.0);
        }
        if let Some(limit) = self.ratio_limit() {
            if x >= limit {
                return Ok(f64::INFINITY);
            }
        }
        let kappa = self.summary.kappa;
        let f = |l: f64| psi_raw(&self.spec, kappa + l) / l - x;
        let hi = bracket_up(f, LAMBDA_MAX).ok_or_else(|| Error::Convergence {
            what: "phi_v".into(),
            diagnostics: format!("ratio psi(kappa+l)/l stays below x = {x} up to {LAMBDA_MAX:e}"),
        })?;
        Ok(bisect(0.0, hi, f))
    }

    /// Constants `(C, α)` with `Ψ(λ) ~ Cλ^α` at infinity, for the regularly varying catalog.
    pub fn regular_variation(&self) -> Option<(f64, f64)> {
        match self.spec.exponent_owner().kind() {
            ProcessKind::BrownianDrift { q, .. } => Some((0.5 * q, 2.0)),
            ProcessKind::StableSn { c, alpha, .. } => Some((*c, *alpha)),
            _ => None,
        }
    }
}
