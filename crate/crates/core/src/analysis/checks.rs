//! Distribution-level checks of identities, orderings and support statements.

use std::io::Write;

use super::stats::{ks_two_sample, mean_stderr, EcdfBand};
use super::CheckReport;
use crate::error::{domain, Error, Result};

/// Smallest sample accepted by a check.
pub const MIN_CHECK_SAMPLES: usize = 10_000;

fn require(n: usize, what: &str) -> Result<()> {
    if n < MIN_CHECK_SAMPLES {
        return Err(Error::Data(format!(
            "{what} needs at least {MIN_CHECK_SAMPLES} samples, got {n}"
        )));
    }
    Ok(())
}

/// One side of an ordering check: an empirical sample or an exact CDF.
pub enum CdfSide<'a> {
    Samples(&'a [f64]),
    Exact(&'a dyn Fn(f64) -> f64),
}

impl CdfSide<'_> {
    fn prepare(&self, what: &str) -> Result<Option<EcdfBand>> {
        match self {
            CdfSide::Samples(s) => {
                require(s.len(), what)?;
                Ok(Some(EcdfBand::new(s)?))
            }
            CdfSide::Exact(_) => Ok(None),
        }
    }

    fn cdf(&self, band: &Option<EcdfBand>, x: f64) -> f64 {
        match (self, band) {
            (_, Some(b)) => b.cdf(x),
            (CdfSide::Exact(f), None) => f(x),
            (CdfSide::Samples(_), None) => unreachable!(),
        }
    }
}

/// The identity checks.
pub enum Identity<'a> {
    /// `A^y + e^{−y}Ĩ` against independent draws of `I(V↑)`.
    Affine { reconstructed: &'a [f64], direct: &'a [f64] },
    /// `S_T + I(V↑)` against independent draws of `I(V♯)`.
    Convolution { sum: &'a [f64], direct: &'a [f64] },
    /// `F_{I(V)} ≤ F_{I(V↑)}` up to the DKW half-widths, on `grid`.
    Sandwich {
        plain: CdfSide<'a>,
        conditioned: CdfSide<'a>,
        grid: &'a [f64],
        delta: f64,
    },
    /// `F_{I(Z)} ≤ F_{I(Z↑)}` up to the DKW half-widths, on `grid`.
    StochasticOrder {
        plain: &'a [f64],
        conditioned: &'a [f64],
        grid: &'a [f64],
        delta: f64,
    },
    /// `F̂(x+y) ≤ F̂(x) + F̂(y)` up to 3 binomial standard errors, for all pairs of `grid`.
    Subadditivity { samples: &'a [f64], grid: &'a [f64] },
    /// Second differences of `log F̂` on an even grid between two quantiles.
    LogConcavity {
        samples: &'a [f64],
        p_low: f64,
        p_high: f64,
        points: usize,
    },
    /// `m̂_k ≤ k!·m̂₁^k·(1 + 5·relative error of m̂_k)` for each order.
    Moments { samples: &'a [f64], orders: &'a [u32] },
    /// All samples at least `1/γ* − tolerance`, and `F̂(0.99/γ*) = 0`.
    Support {
        samples: &'a [f64],
        gamma_star: f64,
        tolerance: f64,
    },
}

pub fn check_identity(identity: &Identity<'_>) -> Result<CheckReport> {
    match identity {
        Identity::Affine { reconstructed, direct } => ks_check(
            "affine",
            reconstructed,
            direct,
            "I(V-up) = A^y + exp(-y)·I' in law, with I' an independent copy",
        ),
        Identity::Convolution { sum, direct } => ks_check(
            "convolution",
            sum,
            direct,
            "I(V-sharp) = S_T + I(V-up) in law, with independent terms",
        ),
        Identity::Sandwich {
            plain,
            conditioned,
            grid,
            delta,
        } => order_check(
            "sandwich",
            plain,
            conditioned,
            grid,
            *delta,
            "I(V) is stochastically larger than I(V-up) for V drifting to +infinity",
        ),
        Identity::StochasticOrder {
            plain,
            conditioned,
            grid,
            delta,
        } => order_check(
            "stochastic_order",
            &CdfSide::Samples(plain),
            &CdfSide::Samples(conditioned),
            grid,
            *delta,
            "I(Z) is stochastically larger than I(Z-up)",
        ),
        Identity::Subadditivity { samples, grid } => subadditivity(samples, grid),
        Identity::LogConcavity {
            samples,
            p_low,
            p_high,
            points,
        } => log_concavity(samples, *p_low, *p_high, *points),
        Identity::Moments { samples, orders } => moments(samples, orders),
        Identity::Support {
            samples,
            gamma_star,
            tolerance,
        } => support(samples, *gamma_star, *tolerance),
    }
}

fn ks_check(name: &str, a: &[f64], b: &[f64], provenance: &str) -> Result<CheckReport> {
    require(a.len(), name)?;
    require(b.len(), name)?;
    let (d, p) = ks_two_sample(a, b)?;
    let mut r = CheckReport::new(name, p, 0.01, p > 0.01, provenance);
    r.insert("ks_statistic", d);
    r.insert("n_left", a.len() as f64);
    r.insert("n_right", b.len() as f64);
    Ok(r)
}

fn order_check(
    name: &str,
    smaller_cdf: &CdfSide<'_>,
    larger_cdf: &CdfSide<'_>,
    grid: &[f64],
    delta: f64,
    provenance: &str,
) -> Result<CheckReport> {
    if grid.is_empty() {
        return Err(domain("empty grid"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain(format!("delta must lie in (0,1), got {delta}")));
    }
    let bs = smaller_cdf.prepare(name)?;
    let bl = larger_cdf.prepare(name)?;
    let eps = bs.as_ref().map_or(0.0, |b| b.epsilon(delta)) + bl.as_ref().map_or(0.0, |b| b.epsilon(delta));
    // statistic: the worst excess of F_plain over F_conditioned
    let (mut worst, mut at) = (f64::NEG_INFINITY, grid[0]);
    for &x in grid {
        let gap = smaller_cdf.cdf(&bs, x) - larger_cdf.cdf(&bl, x);
        if gap > worst {
            worst = gap;
            at = x;
        }
    }
    let mut r = CheckReport::new(name, worst, eps, worst <= eps, provenance);
    r.insert("worst_x", at);
    r.insert("delta", delta);
    Ok(r)
}

fn subadditivity(samples: &[f64], grid: &[f64]) -> Result<CheckReport> {
    require(samples.len(), "subadditivity")?;
    if grid.is_empty() {
        return Err(domain("empty grid"));
    }
    let band = EcdfBand::new(samples)?;
    let n = band.n() as f64;
    let var = |p: f64| p * (1.0 - p) / n;
    let (mut worst, mut at) = (f64::NEG_INFINITY, (grid[0], grid[0]));
    for &x in grid {
        for &y in grid {
            let (fx, fy, fxy) = (band.cdf(x), band.cdf(y), band.cdf(x + y));
            let se = (var(fx) + var(fy) + var(fxy)).sqrt().max(1.0 / n);
            let z = (fxy - fx - fy) / se;
            if z > worst {
                worst = z;
                at = (x, y);
            }
        }
    }
    let mut r = CheckReport::new(
        "subadditivity",
        worst,
        3.0,
        worst <= 3.0,
        "x -> P(S_T < x) is sub-additive",
    );
    r.insert("worst_x", at.0);
    r.insert("worst_y", at.1);
    Ok(r)
}

fn log_concavity(samples: &[f64], p_low: f64, p_high: f64, points: usize) -> Result<CheckReport> {
    require(samples.len(), "log_concavity")?;
    if !(0.0 < p_low && p_low < p_high && p_high < 1.0) || points < 3 {
        return Err(domain("need 0 < p_low < p_high < 1 and at least 3 points"));
    }
    let band = EcdfBand::new(samples)?;
    let n = band.n() as f64;
    let (a, b) = (band.quantile(p_low), band.quantile(p_high));
    if !(b > a) {
        return Err(Error::Data("quantile grid collapses to a point".into()));
    }
    let h = (b - a) / (points - 1) as f64;
    let logs: Vec<(f64, f64)> = (0..points)
        .map(|i| {
            let f = band.cdf(a + h * i as f64);
            // delta method: sd(log F̂) ≈ √((1−F)/(nF))
            (f.ln(), ((1.0 - f) / (n * f)).sqrt())
        })
        .collect();
    let mut worst = f64::NEG_INFINITY;
    for w in logs.windows(3) {
        let d2 = w[0].0 - 2.0 * w[1].0 + w[2].0;
        let se = (w[0].1.powi(2) + 4.0 * w[1].1.powi(2) + w[2].1.powi(2)).sqrt();
        worst = worst.max(d2 / se);
    }
    Ok(CheckReport::new(
        "log_concavity",
        worst,
        3.0,
        worst <= 3.0,
        "the law of I(V-up) is log-concave on (0, infinity)",
    )
    .advisory())
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn moments(samples: &[f64], orders: &[u32]) -> Result<CheckReport> {
    require(samples.len(), "moments")?;
    let (m1, _) = mean_stderr(samples.iter().copied());
    let mut worst = f64::NEG_INFINITY;
    let mut r = CheckReport::new("moments", 0.0, 1.0, true, "E[I(V-up)^k] <= k!·E[I(V-up)]^k");
    for &k in orders {
        let (mk, se) = mean_stderr(samples.iter().map(|x| x.powi(k as i32)));
        let bound = factorial(k) * m1.powi(k as i32) * (1.0 + 5.0 * se / mk);
        let ratio = mk / bound;
        r.insert(&format!("moment_{k}"), mk);
        r.insert(&format!("bound_{k}"), bound);
        worst = worst.max(ratio);
    }
    r.statistic = worst;
    r.pass = worst <= 1.0;
    Ok(r)
}

fn support(samples: &[f64], gamma_star: f64, tolerance: f64) -> Result<CheckReport> {
    require(samples.len(), "support")?;
    if !(gamma_star > 0.0) || !(tolerance >= 0.0) {
        return Err(domain("need gamma_star > 0 and tolerance >= 0"));
    }
    let band = EcdfBand::new(samples)?;
    let edge = 1.0 / gamma_star;
    let min = band.sorted()[0];
    let below = band.cdf(edge - 0.01 * edge);
    let threshold = edge - tolerance;
    let mut r = CheckReport::new(
        "support",
        min,
        threshold,
        min >= threshold && below == 0.0,
        "the support of I(V-up) is [1/gamma_star, infinity) for bounded variation",
    );
    r.insert("ecdf_below_edge", below);
    Ok(r)
}

/// `sup_grid |F̂ − F|` against the DKW half-width at confidence `1 − δ`.
pub fn dkw_band_check(
    name: &str,
    samples: &[f64],
    cdf: impl Fn(f64) -> f64,
    grid: &[f64],
    delta: f64,
    provenance: &str,
) -> Result<CheckReport> {
    require(samples.len(), name)?;
    let band = EcdfBand::new(samples)?;
    let eps = band.epsilon(delta);
    let worst = grid.iter().map(|&x| (band.cdf(x) - cdf(x)).abs()).fold(0.0, f64::max);
    let mut r = CheckReport::new(name, worst, eps, worst <= eps, provenance);
    r.insert("delta", delta);
    r.insert("n", samples.len() as f64);
    Ok(r)
}

/// `E[e^{λI}]` on the first `n_small` samples against all samples: passes when the
/// relative change is below `tolerance` and both are finite.
pub fn exp_moment_stability(samples: &[f64], lambda: f64, n_small: usize, tolerance: f64) -> Result<CheckReport> {
    require(n_small, "exp_moment_stability")?;
    if n_small > samples.len() {
        return Err(Error::Data(format!("{n_small} > {} samples", samples.len())));
    }
    let moment = |s: &[f64]| mean_stderr(s.iter().map(|&x| (lambda * x).exp())).0;
    let (small, full) = (moment(&samples[..n_small]), moment(samples));
    let rel = (small - full).abs() / full;
    let ok = small.is_finite() && full.is_finite() && rel < tolerance;
    let mut r = CheckReport::new(
        "exp_moment_stability",
        rel,
        tolerance,
        ok,
        "I(Z-up) has finite exponential moments",
    );
    r.insert("moment_small", small);
    r.insert("moment_full", full);
    r.insert("lambda", lambda);
    Ok(r)
}

/// Tail curve CSV: `x,ecdf,dkw_lo,dkw_hi,prediction`.
pub fn write_tail_csv(
    mut w: impl Write,
    band: &EcdfBand,
    grid: &[f64],
    delta: f64,
    prediction: impl Fn(f64) -> f64,
) -> std::io::Result<()> {
    writeln!(w, "x,ecdf,dkw_lo,dkw_hi,prediction")?;
    for &x in grid {
        writeln!(
            w,
            "{x},{},{},{},{}",
            band.cdf(x),
            band.lower(x, delta),
            band.upper(x, delta),
            prediction(x)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::dkw_epsilon;
    use crate::path_sim::RngStream;

    fn exp_samples(n: usize, seed: u64) -> Vec<f64> {
        let mut r = RngStream::new(seed, 0).rng();
        (0..n).map(|_| r.exp1()).collect()
    }

    #[test]
    fn sandwich_with_itself_passes() {
        let s = exp_samples(20_000, 1);
        let grid: Vec<f64> = (1..30).map(|i| 0.1 * i as f64).collect();
        let r = check_identity(&Identity::Sandwich {
            plain: CdfSide::Samples(&s),
            conditioned: CdfSide::Samples(&s),
            grid: &grid,
            delta: 0.01,
        })
        .unwrap();
        assert!(r.pass && r.statistic == 0.0);
        assert!((r.threshold - 2.0 * dkw_epsilon(20_000, 0.01)).abs() < 1e-15);
    }

    #[test]
    fn exact_side_detects_a_wrong_order() {
        let s = exp_samples(20_000, 2);
        let grid = [0.5, 1.0, 2.0];
        let exact = |x: f64| 1.0 - (-x).exp();
        let shifted: Vec<f64> = s.iter().map(|v| v + 0.3).collect();
        // shifted samples are stochastically larger, so they cannot sit on the conditioned side
        let r = check_identity(&Identity::Sandwich {
            plain: CdfSide::Exact(&exact),
            conditioned: CdfSide::Samples(&shifted),
            grid: &grid,
            delta: 0.01,
        })
        .unwrap();
        assert!(!r.pass);
        let band = dkw_band_check("exp", &s, exact, &grid, 0.01, "Exp(1)").unwrap();
        assert!(band.pass);
    }

    #[test]
    fn exponential_law_is_subadditive_and_log_concave() {
        let s = exp_samples(100_000, 3);
        let grid = [0.1, 0.3, 0.6, 1.0, 2.0];
        assert!(check_identity(&Identity::Subadditivity { samples: &s, grid: &grid })
            .unwrap()
            .pass);
        let lc = check_identity(&Identity::LogConcavity {
            samples: &s,
            p_low: 0.05,
            p_high: 0.95,
            points: 12,
        })
        .unwrap();
        assert!(lc.advisory && lc.pass);
        // a law concentrated on {1, 2}: F(1+1) = 1 > F(1) + F(1) = 0.2
        let atoms: Vec<f64> = (0..20_000).map(|i| if i % 10 == 0 { 1.0 } else { 2.0 }).collect();
        assert!(!check_identity(&Identity::Subadditivity { samples: &atoms, grid: &[1.0] })
            .unwrap()
            .pass);
    }

    #[test]
    fn moments_and_support() {
        let s = exp_samples(50_000, 4);
        // Exp(1) has E[X^k] = k!, exactly on the bound
        assert!(check_identity(&Identity::Moments { samples: &s, orders: &[2, 3, 4] }).unwrap().pass);
        let shifted: Vec<f64> = s.iter().map(|v| v + 1.0).collect();
        let r = check_identity(&Identity::Support {
            samples: &shifted,
            gamma_star: 1.0,
            tolerance: 0.02,
        })
        .unwrap();
        assert!(r.pass);
        assert!(!check_identity(&Identity::Support { samples: &s, gamma_star: 1.0, tolerance: 0.02 }).unwrap().pass);
        assert!(matches!(
            check_identity(&Identity::Moments { samples: &s[..100], orders: &[2] }),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn tail_csv_layout() {
        let s = exp_samples(1000, 5);
        let band = EcdfBand::new(&s).unwrap();
        let mut out = Vec::new();
        write_tail_csv(&mut out, &band, &[0.5, 1.0], 0.05, |x| 1.0 - (-x).exp()).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,ecdf,dkw_lo,dkw_hi,prediction");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').count(), 5);
    }
}
