//! Empirical distribution tools: ECDF with DKW band, Laplace transforms, KS test, tail fits.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

fn require(n: usize, min: usize, what: &str) -> Result<()> {
    if n < min {
        return Err(Error::Data(format!("{what} needs at least {min} samples, got {n}")));
    }
    Ok(())
}

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = samples.iter().find(|v| v.is_nan()) {
        return Err(Error::Data(format!("sample contains {bad}")));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Empirical CDF of a sample, with the Dvoretzky–Kiefer–Wolfowitz band.
#[derive(Debug, Clone, PartialEq)]
pub struct EcdfBand {
    sorted: Vec<f64>,
}

impl EcdfBand {
    pub fn new(samples: &[f64]) -> Result<Self> {
        require(samples.len(), 1, "an empirical CDF")?;
        Ok(Self {
            sorted: sorted_finite(samples)?,
        })
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// `F̂(x) = #{X_i ≤ x}/n`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.n() as f64
    }

    /// `#{X_i > x}`.
    pub fn exceedances(&self, x: f64) -> usize {
        self.n() - self.sorted.partition_point(|&v| v <= x)
    }

    /// Half-width `√(ln(2/δ)/(2n))`: the band holds everywhere with probability `1 − δ`.
    pub fn epsilon(&self, delta: f64) -> f64 {
        dkw_epsilon(self.n(), delta)
    }

    pub fn lower(&self, x: f64, delta: f64) -> f64 {
        (self.cdf(x) - self.epsilon(delta)).max(0.0)
    }

    pub fn upper(&self, x: f64, delta: f64) -> f64 {
        (self.cdf(x) + self.epsilon(delta)).min(1.0)
    }

    /// Empirical quantile `inf{x : F̂(x) ≥ p}`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.n();
        let k = ((p * n as f64).ceil() as usize).clamp(1, n);
        self.sorted[k - 1]
    }
}

pub fn dkw_epsilon(n: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

pub fn empirical_cdf(samples: &[f64]) -> Result<EcdfBand> {
    require(samples.len(), 100, "empirical_cdf")?;
    EcdfBand::new(samples)
}

/// Sample mean and standard error of `e^{−λX}`.
pub fn empirical_laplace(samples: &[f64], lambda: f64) -> Result<(f64, f64)> {
    require(samples.len(), 100, "empirical_laplace")?;
    if !(lambda >= 0.0) {
        return Err(domain(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(mean_stderr(samples.iter().map(|&x| (-lambda * x).exp())))
}

/// Mean and standard error (`sd/√n`, unbiased variance) of a stream of values.
pub fn mean_stderr(values: impl Iterator<Item = f64>) -> (f64, f64) {
    // Welford, in input order, so the result does not depend on how the values were produced
    let (mut n, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
    for v in values {
        n += 1.0;
        let d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
    }
    if n < 2.0 {
        return (mean, 0.0);
    }
    (mean, (m2 / (n - 1.0) / n).sqrt())
}

/// Asymptotic Kolmogorov survival function `Q(t) = 2 Σ (−1)^{k−1} e^{−2k²t²}`.
pub fn kolmogorov_q(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 1.18 {
        // the theta-function form converges fast for small t
        let mut s = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            s += (-j * j * std::f64::consts::PI.powi(2) / (8.0 * t * t)).exp();
        }
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / t * s).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * t * t).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov statistic and its asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    require(a.len(), 1, "ks_two_sample (first sample)")?;
    require(b.len(), 1, "ks_two_sample (second sample)")?;
    let a = sorted_finite(a)?;
    let b = sorted_finite(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    Ok((d, kolmogorov_q(ne.sqrt() * d)))
}

/// Least-squares fit of `log P̂(X > x)` against `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub rate: f64,
    pub r_squared: f64,
    /// Standard error of the fitted rate from the regression residuals.
    pub rate_stderr: f64,
}

/// Exponential rate of the right tail: the negated slope of `log P̂(X > x)` on `x_grid`.
/// Every grid point needs at least 30 exceedances.
pub fn fit_exp_rate(samples: &[f64], x_grid: &[f64]) -> Result<ExpFit> {
    if x_grid.len() < 3 {
        return Err(Error::Data(format!("need at least 3 grid points, got {}", x_grid.len())));
    }
    let band = EcdfBand::new(samples)?;
    let n = band.n() as f64;
    let mut pts = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let k = band.exceedances(x);
        if k < 30 {
            return Err(Error::Data(format!(
                "grid point x = {x} has {k} exceedances (need >= 30)"
            )));
        }
        pts.push((x, (k as f64 / n).ln()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(domain("grid points must not all coincide"));
    }
    let slope = sxy / sxx;
    let sse: f64 = pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let rate_stderr = if m > 2.0 { (sse / (m - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(ExpFit {
        rate: -slope,
        r_squared,
        rate_stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path_sim::RngStream;

    fn exp_samples(rate: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut r = RngStream::new(seed, 0).rng();
        (0..n).map(|_| r.exp1() / rate).collect()
    }

    #[test]
    fn ecdf_basics() {
        let b = EcdfBand::new(&[3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(b.cdf(0.5), 0.0);
        assert_eq!(b.cdf(2.0), 0.75);
        assert_eq!(b.cdf(3.0), 1.0);
        assert_eq!(b.exceedances(1.0), 3);
        assert_eq!(b.quantile(0.5), 2.0);
        assert!((dkw_epsilon(10_000, 0.05) - (40f64.ln() / 20_000.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn laplace_at_zero() {
        let s = exp_samples(1.0, 200, 1);
        assert_eq!(empirical_laplace(&s, 0.0).unwrap(), (1.0, 0.0));
        assert!(empirical_laplace(&s[..50], 1.0).is_err());
    }

    #[test]
    fn ks_identity_and_shift() {
        let a = exp_samples(1.0, 5000, 2);
        let (d, p) = ks_two_sample(&a, &a).unwrap();
        assert_eq!((d, p), (0.0, 1.0));
        let b: Vec<f64> = a.iter().map(|v| v + 0.2).collect();
        assert!(ks_two_sample(&a, &b).unwrap().1 < 1e-6);
        // Q(1.3581) ≈ 0.05, the classical critical value
        assert!((kolmogorov_q(1.3581) - 0.05).abs() < 1e-4);
    }

    #[test]
    fn exp_rate_recovered() {
        let s = exp_samples(2.0, 100_000, 3);
        let grid: Vec<f64> = (0..10).map(|i| 0.2 + 0.25 * i as f64).collect();
        let fit = fit_exp_rate(&s, &grid).unwrap();
        assert!((fit.rate - 2.0).abs() < 0.1, "{fit:?}");
        assert!(fit.r_squared > 0.99);
        let far = [0.1, 0.2, 10.0];
        match fit_exp_rate(&s, &far) {
            Err(Error::Data(msg)) => assert!(msg.contains("x = 10")),
            other => panic!("{other:?}"),
        }
    }
}
