//! Closed-form reference transforms used as oracles for the samplers.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A truncated series value with a bound on the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    pub error_bound: f64,
}

/// `E[exp(−λ I(W_κ↑))]` for `W_κ(t) = B(t) − κt/2`:
/// `1 / (Γ(1+κ) Σ_j (2λ)^j / (j! Γ(1+j+κ)))`.
pub fn brownian_laplace_ref(kappa: f64, lambda: f64) -> Result<f64> {
    if !(kappa >= 0.0) || !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(domain(format!(
            "need kappa >= 0 and finite lambda >= 0, got kappa = {kappa}, lambda = {lambda}"
        )));
    }
    // Terms normalised by the j = 0 term so Γ never overflows.
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut j = 0.0;
    loop {
        j += 1.0;
        term *= 2.0 * lambda / (j * (j + kappa));
        sum += term;
        if term < 1e-16 * sum || !sum.is_finite() {
            break;
        }
    }
    Ok(1.0 / sum)
}

/// `−log E[exp(−λ I(αN))] = Σ_k log(1 + (λ/p) e^{−αk})` for a Poisson process of intensity `p`.
pub fn poisson_log_laplace_ref(alpha: f64, p: f64, lambda: f64) -> Result<SeriesValue> {
    if !(alpha > 0.0) || !(p > 0.0) || !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(domain(format!(
            "need alpha > 0, p > 0, lambda >= 0; got {alpha}, {p}, {lambda}"
        )));
    }
    let u = lambda / p;
    let mut value = 0.0;
    let mut k = 0u32;
    loop {
        let term = (u * (-alpha * k as f64).exp()).ln_1p();
        value += term;
        k += 1;
        if term < 1e-16 {
            break;
        }
    }
    // log(1 + z) <= z, then a geometric series for the remaining terms.
    let error_bound = u * (-alpha * k as f64).exp() / (1.0 - (-alpha).exp());
    Ok(SeriesValue { value, error_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_reference_values() {
        assert_eq!(brownian_laplace_ref(1.0, 0.0).unwrap(), 1.0);
        // Oracle: Σ 1/(j!(j+1)!) = I_1(2) summed directly with factorials.
        let mut oracle = 0.0;
        let mut fact = 1.0;
        for j in 0..30 {
            if j > 0 {
                fact *= j as f64;
            }
            oracle += 1.0 / (fact * fact * (j + 1) as f64);
        }
        assert!((oracle - 1.590637).abs() < 1e-6);
        let v = brownian_laplace_ref(1.0, 0.5).unwrap();
        assert!((v - 1.0 / oracle).abs() < 1e-14);
        assert!((v - 0.628679).abs() < 1e-6);
        // First moment: E[I] = 1/Ψ(κ+1) = 1 for κ = 1, so L(λ) ≈ 1 − λ.
        let h = 1e-6;
        let slope = (1.0 - brownian_laplace_ref(1.0, h).unwrap()) / h;
        assert!((slope - 1.0).abs() < 1e-5);
    }

    #[test]
    fn poisson_reference_values() {
        assert_eq!(poisson_log_laplace_ref(1.0, 1.0, 0.0).unwrap().value, 0.0);
        let mut oracle = 0.0;
        for k in 0..=10 {
            oracle += (1.0 + (-(k as f64)).exp()).ln();
        }
        let tail = (-11f64).exp() / (1.0 - (-1f64).exp());
        let s = poisson_log_laplace_ref(1.0, 1.0, 1.0).unwrap();
        assert!(s.value >= oracle && s.value <= oracle + tail);
        assert!((s.value - 1.21071).abs() < 1e-5);
        assert!(s.error_bound < 1e-15);
    }
}
