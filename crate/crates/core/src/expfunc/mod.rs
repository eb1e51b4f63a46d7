//! Exponential functionals `I(·)` and the pieces `A^y`, `S_T` of their decompositions.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::{mean_stderr, real};
use crate::error::{domain, unsupported, Error, Result};
use crate::levy_model::{psi_raw, Exponent, ProcessKind, ProcessSpec, Side};
use crate::par::map_indexed;
use crate::path_sim::{
    conditioned_spec, run, w_at, RngStream, SimRng, StopRule, Stepper, VUpAlgo, VUpSampler, ZUpSampler, STEP_BUDGET,
};

/// Truncation level of the independent `I(V↑)` copy in [`sample_affine_pair`].
pub const AFFINE_TAIL_LEVEL: f64 = 10.0;

/// Entrance level of the staged `V↑` sampler when the process has unbounded variation.
pub const DEFAULT_ENTRANCE: f64 = 0.01;

#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum FunctionalVariant {
    /// `∫ e^{−V↑}` up to the last passage of `V↑` at the truncation level (first passage
    /// for the staged sampler, whose paths stop there).
    I_V_up,
    /// `∫ e^{−V}` for `V` drifting to `+∞`, truncated the same way.
    I_V,
    /// `∫ e^{−V♯}`, truncated the same way.
    I_V_sharp,
    /// `∫ e^{−Z}` for spectrally positive `Z` drifting to `+∞`.
    I_Z,
    /// `∫ e^{−Z↑}`, truncated the same way.
    I_Z_up,
    /// `∫ e^{−V↑}` up to the last passage of `V↑` at `y`.
    A_y { y: f64 },
    /// `∫ e^{−V♯}` up to the last passage of `V♯` at 0.
    S_T_sharp,
    /// `(1/p)·Σ_{k≤K} e^{−αk} e_k` for the Poisson multiple `αN`.
    Poisson_exact { k: u32 },
}

impl FunctionalVariant {
    /// `Poisson_exact` with `K = ⌈12 ln 10/α⌉ + 1`, so the mean bias is below `1e-12/(p(1−e^{−α}))`.
    pub fn poisson_default(alpha: f64) -> Self {
        FunctionalVariant::Poisson_exact {
            k: (12.0 * std::f64::consts::LN_10 / alpha).ceil() as u32 + 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FunctionalVariant::I_V_up => "I_V_up",
            FunctionalVariant::I_V => "I_V",
            FunctionalVariant::I_V_sharp => "I_V_sharp",
            FunctionalVariant::I_Z => "I_Z",
            FunctionalVariant::I_Z_up => "I_Z_up",
            FunctionalVariant::A_y { .. } => "A_y",
            FunctionalVariant::S_T_sharp => "S_T_sharp",
            FunctionalVariant::Poisson_exact { .. } => "Poisson_exact",
        }
    }
}

/// Monte Carlo estimate of a mean. `bias_bound` is a deterministic bound on the truncation
/// bias and adds to any confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    #[serde(with = "real")]
    pub bias_bound: f64,
    pub dt: f64,
}

/// Trapezoid rule for `∫ e^{−v(t)} dt` on a grid of step `dt`.
pub fn trapezoid_exp(values: &[f64], dt: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, .., last] => {
            let sum: f64 = values.iter().map(|v| (-v).exp()).sum();
            dt * (sum - 0.5 * ((-first).exp() + (-last).exp()))
        }
    }
}

/// `∫ e^{−path(t)} dt` over the sampled grid (the path's values, not shifted by its origin).
pub fn exp_integral(path: &crate::path_sim::PathSample) -> Result<f64> {
    if path.values.is_empty() {
        return Err(domain("empty path"));
    }
    Ok(trapezoid_exp(&path.values, path.dt))
}

/// `e^{−y}/Ψ(κ+1)`: the expected part of `I(V↑)` after the last passage at `y`.
pub fn truncation_bias_bound(spec: &ProcessSpec, y: f64) -> Result<f64> {
    if spec.side() != Side::SpectrallyNegative {
        return Err(domain("the truncation bound is stated for spectrally negative specs"));
    }
    if !(y >= 0.0) {
        return Err(domain(format!("y must be >= 0, got {y}")));
    }
    let ex = Exponent::new(spec.clone())?;
    Ok((-y).exp() / ex.summary().psi_at_kappa_plus_1)
}

/// Expected part of `I(V↑)` after the first passage above `y`:
/// `h(y) = ∫_0^∞ u↑(y, r) e^{−r} dr` with the potential density of `V↑` from `y`,
/// `u↑(y, r) = (e^{−κr} − W(y−r)/W(y))·W(r)`.
pub fn first_passage_remainder(spec: &ProcessSpec, y: f64) -> Result<f64> {
    if spec.side() != Side::SpectrallyNegative {
        return Err(domain("the truncation remainder is stated for spectrally negative specs"));
    }
    if !(y > 0.0) || !y.is_finite() {
        return Err(domain(format!("y must be finite and > 0, got {y}")));
    }
    let kappa = Exponent::new(spec.clone())?.kappa();
    let wy = w_at(spec, y)?;
    let below = |r: f64| {
        let inner = (-kappa * r).exp() - w_at(spec, y - r).unwrap_or(f64::NAN) / wy;
        inner.max(0.0) * w_at(spec, r).unwrap_or(f64::NAN) * (-r).exp()
    };
    let above = |r: f64| (-(kappa + 1.0) * r).exp() * w_at(spec, r).unwrap_or(f64::NAN);
    let mut total = 0.0;
    for (f, a, b) in [
        (&below as &dyn Fn(f64) -> f64, 0.0, y),
        (&above as &dyn Fn(f64) -> f64, y, y + 60.0),
    ] {
        let out = quadrature::double_exponential::integrate(f, a, b, 1e-9);
        if !out.integral.is_finite() || !(out.error_estimate <= 1e-6) {
            return Err(Error::Precision {
                achieved: out.error_estimate,
                target: 1e-6,
            });
        }
        total += out.integral;
    }
    Ok(total)
}

/// `e^{−y}·E[I]` when `E[I] = 1/(−Ψ(μ))` is finite (`Ψ(μ) < 0`), else `+∞`.
/// Values within round-off of 0 (from a bisected κ) count as 0.
fn mean_bound(psi_value: f64, y: f64) -> f64 {
    if psi_value < -1e-12 {
        (-y).exp() / -psi_value
    } else {
        f64::INFINITY
    }
}

/// Bias bound reported for `variant` truncated at `y`.
pub fn variant_bias_bound(spec: &ProcessSpec, variant: FunctionalVariant, y: f64) -> Result<f64> {
    Ok(match variant {
        FunctionalVariant::I_V_up => match default_algo(spec)? {
            VUpAlgo::LastPassageShift => truncation_bias_bound(spec, y)?,
            _ => first_passage_remainder(spec, y)?,
        },
        FunctionalVariant::I_V => mean_bound(psi_raw(spec, -1.0), y),
        FunctionalVariant::I_V_sharp => {
            let kappa = Exponent::new(spec.clone())?.kappa();
            mean_bound(psi_raw(spec, kappa - 1.0), y)
        }
        // E[e^{−Z_t}] = e^{tΨ(1)} for both spectrally positive families
        FunctionalVariant::I_Z => mean_bound(psi_raw(spec, 1.0), y),
        FunctionalVariant::I_Z_up => f64::INFINITY,
        FunctionalVariant::A_y { .. } | FunctionalVariant::S_T_sharp => 0.0,
        FunctionalVariant::Poisson_exact { k } => {
            let ProcessKind::PoissonMultiple { alpha_jump, rate } = spec.kind() else {
                return Err(domain("Poisson_exact needs a poisson_multiple spec"));
            };
            (-alpha_jump * (k as f64 + 1.0)).exp() / (rate * (1.0 - (-alpha_jump).exp()))
        }
    })
}

/// Options of a [`FunctionalSampler`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SamplerOptions {
    /// `V↑` algorithm; by default the last-passage shift when the process does not
    /// oscillate, otherwise the staged sampler from [`DEFAULT_ENTRANCE`] (0 for bounded variation).
    pub algo: Option<VUpAlgo>,
    /// Staged `V↑` only: stop a draw once its integral is known to exceed the cap.
    /// Censored draws return a value above the cap, which is all a CDF at `x ≤ cap` needs.
    pub cap: Option<f64>,
}

#[derive(Debug, Clone)]
enum Engine {
    VUp(VUpSampler),
    Plain { stepper: Stepper, level: f64 },
    ZUp(ZUpSampler),
    LastPassage(VUpSampler),
    Split(VUpSampler),
    Poisson { alpha: f64, rate: f64, k: u32 },
}

/// Reusable per-worker buffers.
#[derive(Debug, Default)]
pub struct Scratch {
    raw: Vec<f64>,
    path: Vec<f64>,
}

/// A prepared sampler of one functional.
#[derive(Debug, Clone)]
pub struct FunctionalSampler {
    spec: ProcessSpec,
    variant: FunctionalVariant,
    y: f64,
    dt: f64,
    engine: Engine,
    cap: Option<f64>,
}

pub(crate) fn default_algo(spec: &ProcessSpec) -> Result<VUpAlgo> {
    let ex = Exponent::new(spec.clone())?;
    if ex.summary().psi_prime_at_kappa > 0.0 && conditioned_spec(spec).is_ok() {
        Ok(VUpAlgo::LastPassageShift)
    } else {
        let x0 = if spec.has_bounded_variation() { 0.0 } else { DEFAULT_ENTRANCE };
        Ok(VUpAlgo::Staged { x0 })
    }
}

fn need_side(spec: &ProcessSpec, side: Side, variant: FunctionalVariant) -> Result<()> {
    if spec.side() != side {
        return Err(domain(format!("{} needs a {side:?} spec", variant.name())));
    }
    Ok(())
}

impl FunctionalSampler {
    pub fn new(spec: &ProcessSpec, variant: FunctionalVariant, y: f64, dt: f64) -> Result<Self> {
        Self::with_options(spec, variant, y, dt, SamplerOptions::default())
    }

    pub fn with_options(
        spec: &ProcessSpec,
        variant: FunctionalVariant,
        y: f64,
        dt: f64,
        options: SamplerOptions,
    ) -> Result<Self> {
        let truncated = !matches!(
            variant,
            FunctionalVariant::A_y { .. } | FunctionalVariant::Poisson_exact { .. } | FunctionalVariant::S_T_sharp
        );
        if truncated && (!(y > 0.0) || !y.is_finite()) {
            return Err(domain(format!("truncation level must be finite and > 0, got {y}")));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(domain(format!("dt must be finite and > 0, got {dt}")));
        }
        if options.cap.is_some() && variant != FunctionalVariant::I_V_up {
            return Err(unsupported("censoring is implemented for I_V_up only"));
        }
        let engine = match variant {
            FunctionalVariant::I_V_up => {
                need_side(spec, Side::SpectrallyNegative, variant)?;
                let algo = match options.algo {
                    Some(a) => a,
                    None => default_algo(spec)?,
                };
                let s = VUpSampler::new(spec, y, dt, algo)?;
                match algo {
                    VUpAlgo::LastPassageShift => Engine::LastPassage(s.with_tracked_level(y)?),
                    _ => Engine::VUp(s),
                }
            }
            FunctionalVariant::I_V => {
                need_side(spec, Side::SpectrallyNegative, variant)?;
                let ex = Exponent::new(spec.clone())?;
                if ex.kappa() > 0.0 || ex.summary().psi_prime_at_kappa <= 0.0 {
                    return Err(domain("I(V) is infinite unless V drifts to +infinity"));
                }
                Engine::Plain {
                    stepper: Stepper::new(spec, dt)?,
                    level: y,
                }
            }
            FunctionalVariant::I_V_sharp => {
                need_side(spec, Side::SpectrallyNegative, variant)?;
                let ex = Exponent::new(spec.clone())?;
                if ex.summary().psi_prime_at_kappa <= 0.0 {
                    return Err(domain("V-sharp oscillates, so I(V-sharp) is infinite"));
                }
                Engine::Plain {
                    stepper: Stepper::new(&conditioned_spec(spec)?, dt)?,
                    level: y,
                }
            }
            FunctionalVariant::I_Z => {
                need_side(spec, Side::SpectrallyPositive, variant)?;
                // Z drifts to +∞ iff E[e^{−Z_t}] decays somewhere, i.e. Ψ'(0+) < 0 for the
                // exponent of −Z
                let h = 1e-6;
                if !(psi_raw(spec, h) < 0.0) {
                    return Err(domain("I(Z) is infinite unless Z drifts to +infinity"));
                }
                Engine::Plain {
                    stepper: Stepper::new(spec, dt)?,
                    level: y,
                }
            }
            FunctionalVariant::I_Z_up => Engine::ZUp(ZUpSampler::new(spec, y, dt)?),
            FunctionalVariant::A_y { y: level } => {
                need_side(spec, Side::SpectrallyNegative, variant)?;
                if !(level > 0.0) || !level.is_finite() {
                    return Err(domain(format!("A_y needs y > 0, got {level}")));
                }
                let s = VUpSampler::new(spec, level, dt, VUpAlgo::LastPassageShift)?.with_tracked_level(level)?;
                Engine::LastPassage(s)
            }
            FunctionalVariant::S_T_sharp => {
                need_side(spec, Side::SpectrallyNegative, variant)?;
                Engine::Split(VUpSampler::new(spec, 1.0, dt, VUpAlgo::LastPassageShift)?)
            }
            FunctionalVariant::Poisson_exact { k } => {
                let ProcessKind::PoissonMultiple { alpha_jump, rate } = spec.kind() else {
                    return Err(domain("Poisson_exact needs a poisson_multiple spec"));
                };
                Engine::Poisson {
                    alpha: *alpha_jump,
                    rate: *rate,
                    k,
                }
            }
        };
        Ok(Self {
            spec: spec.clone(),
            variant,
            y,
            dt,
            engine,
            cap: options.cap,
        })
    }

    pub fn variant(&self) -> FunctionalVariant {
        self.variant
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn bias_bound(&self) -> Result<f64> {
        match (&self.engine, self.variant) {
            (Engine::VUp(_), FunctionalVariant::I_V_up) => first_passage_remainder(&self.spec, self.y),
            (Engine::LastPassage(_), FunctionalVariant::I_V_up) => truncation_bias_bound(&self.spec, self.y),
            _ => variant_bias_bound(&self.spec, self.variant, self.y),
        }
    }

    /// Probability bound on the event the path construction neglects (a return after
    /// the barrier or below the recorded minimum), when there is one.
    pub fn residual_bound(&self) -> Option<f64> {
        match &self.engine {
            Engine::VUp(s) | Engine::LastPassage(s) | Engine::Split(s) => s.residual_bound(),
            Engine::ZUp(s) => Some(s.residual_bound()),
            _ => None,
        }
    }

    /// The `V↑` sampler behind `I_V_up`, if any.
    pub fn v_up_sampler(&self) -> Option<&VUpSampler> {
        match &self.engine {
            Engine::VUp(s) => Some(s),
            Engine::LastPassage(s) if self.variant == FunctionalVariant::I_V_up => Some(s),
            _ => None,
        }
    }

    /// One draw from `rng`.
    pub fn sample(&self, rng: &mut SimRng, scratch: &mut Scratch) -> Result<f64> {
        let Scratch { raw, path } = scratch;
        match &self.engine {
            Engine::VUp(s) => {
                let draw = s.sample(rng, raw, path, self.cap)?;
                Ok(trapezoid_exp(&path[..=draw.hit], self.dt))
            }
            Engine::Plain { stepper, level } => {
                let mut st = stepper.clone();
                st.reset();
                raw.clear();
                raw.push(0.0);
                run(&mut st, rng, StopRule::LevelUp(*level), &mut [], raw, STEP_BUDGET)?;
                Ok(trapezoid_exp(raw, self.dt))
            }
            Engine::ZUp(s) => {
                let draw = s.sample(rng, raw, path)?;
                Ok(trapezoid_exp(&path[..=draw.hit], self.dt))
            }
            Engine::LastPassage(s) => {
                let draw = s.sample(rng, raw, path, None)?;
                let j = draw.last_extra.unwrap_or(0);
                Ok(trapezoid_exp(&path[..=j], self.dt))
            }
            Engine::Split(s) => {
                let draw = s.sample(rng, raw, path, None)?;
                let j = draw.split.unwrap_or(0);
                Ok(trapezoid_exp(&raw[..=j], self.dt))
            }
            Engine::Poisson { alpha, rate, k } => {
                let mut sum = 0.0;
                for i in 0..=*k {
                    sum += (-alpha * i as f64).exp() * rng.exp1();
                }
                Ok(sum / rate)
            }
        }
    }

    /// `n` draws, draw `i` from stream `(seed, i)`, in index order whatever `workers` is.
    /// On failure, reports the first failing index and how many draws succeeded.
    pub fn sample_many(&self, n: u64, seed: u64, workers: usize) -> Result<Vec<f64>> {
        let out = map_indexed(n, workers, Scratch::default, |scratch, i| {
            self.sample(&mut RngStream::new(seed, i).rng(), scratch)
        });
        collect_partial(out)
    }

    /// Mean, standard error and bias bound over `n` draws (see [`Self::sample_many`]).
    pub fn estimate(&self, n: u64, seed: u64, workers: usize) -> Result<MCEstimate> {
        if n < 2 {
            return Err(domain(format!("need n >= 2, got {n}")));
        }
        if self.cap.is_some() {
            return Err(domain("censored draws have no usable mean"));
        }
        let samples = self.sample_many(n, seed, workers)?;
        Ok(summarize(&samples, self.bias_bound()?, self.dt))
    }
}

pub(crate) fn collect_partial(results: Vec<Result<f64>>) -> Result<Vec<f64>> {
    let requested = results.len();
    let completed = results.iter().filter(|r| r.is_ok()).count();
    let mut out = Vec::with_capacity(requested);
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => out.push(v),
            Err(e) => {
                return Err(Error::Partial {
                    completed,
                    requested,
                    failed_index: i as u64,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(out)
}

/// Mean and standard error of `samples`, tagged with a bias bound and grid step.
pub fn summarize(samples: &[f64], bias_bound: f64, dt: f64) -> MCEstimate {
    let (mean, stderr) = mean_stderr(samples.iter().copied());
    MCEstimate {
        mean,
        stderr,
        n: samples.len() as u64,
        bias_bound,
        dt,
    }
}

/// One draw of `variant` truncated at `y` from `stream`.
pub fn sample_functional(
    spec: &ProcessSpec,
    variant: FunctionalVariant,
    y: f64,
    dt: f64,
    stream: RngStream,
) -> Result<f64> {
    FunctionalSampler::new(spec, variant, y, dt)?.sample(&mut stream.rng(), &mut Scratch::default())
}

/// Estimate over `n` streams `(seed, 0..n)`; identical for every `workers`.
pub fn estimate(
    spec: &ProcessSpec,
    variant: FunctionalVariant,
    y: f64,
    dt: f64,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<MCEstimate> {
    FunctionalSampler::new(spec, variant, y, dt)?.estimate(n, seed, workers)
}

/// One `A^y` draw from `stream` and one independent `I(V↑)` draw (truncated at
/// [`AFFINE_TAIL_LEVEL`]) from `stream.derive(1)`.
pub fn sample_affine_pair(spec: &ProcessSpec, y: f64, dt: f64, stream: RngStream) -> Result<(f64, f64)> {
    let a = sample_functional(spec, FunctionalVariant::A_y { y }, y, dt, stream)?;
    let tail = sample_functional(spec, FunctionalVariant::I_V_up, AFFINE_TAIL_LEVEL, dt, stream.derive(1))?;
    Ok((a, tail))
}

/// Mean of `I(V↑)` from the staged sampler started at `x0` and at `x0/2`, on the same
/// streams. `shift` is the empirical entrance bias estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntranceBias {
    pub x0: f64,
    pub at_x0: MCEstimate,
    pub at_half: MCEstimate,
    pub shift: f64,
}

pub fn entrance_bias_study(
    spec: &ProcessSpec,
    y: f64,
    dt: f64,
    x0: f64,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<EntranceBias> {
    let run_at = |x: f64| {
        let options = SamplerOptions {
            algo: Some(VUpAlgo::Staged { x0: x }),
            cap: None,
        };
        FunctionalSampler::with_options(spec, FunctionalVariant::I_V_up, y, dt, options)?.estimate(n, seed, workers)
    };
    let at_x0 = run_at(x0)?;
    let at_half = run_at(0.5 * x0)?;
    Ok(EntranceBias {
        x0,
        at_x0,
        at_half,
        shift: at_half.mean - at_x0.mean,
    })
}

/// Sample dump: `sample_index,value`.
pub fn write_samples_csv(mut w: impl Write, samples: &[f64]) -> std::io::Result<()> {
    writeln!(w, "sample_index,value")?;
    for (i, v) in samples.iter().enumerate() {
        writeln!(w, "{i},{v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::poisson_log_laplace_ref;
    use crate::path_sim::PathSample;

    #[test]
    fn trapezoid_examples() {
        assert_eq!(trapezoid_exp(&[0.0; 11], 0.1), 1.0);
        let dt = 1e-3;
        let ramp: Vec<f64> = (0..=10_000).map(|i| i as f64 * dt).collect();
        let exact = 1.0 - (-10f64).exp();
        // trapezoid error for e^{−t}: dt²/12·(f'(0) − f'(10))
        assert!((trapezoid_exp(&ramp, dt) - exact).abs() < dt * dt / 10.0);
        let higher: Vec<f64> = ramp.iter().map(|v| v + 0.5).collect();
        assert!(trapezoid_exp(&higher, dt) < trapezoid_exp(&ramp, dt));
        let p = PathSample {
            dt,
            values: Vec::new(),
            stop_reason: crate::path_sim::StopReason::HorizonReached,
            start_level: 0.0,
            origin: 0.0,
            meta: Default::default(),
        };
        assert!(exp_integral(&p).is_err());
    }

    #[test]
    fn truncation_bounds() {
        let k1 = ProcessSpec::brownian_kappa(1.0).unwrap();
        assert!((truncation_bias_bound(&k1, 10.0).unwrap() - (-10f64).exp()).abs() < 1e-15);
        let k2 = ProcessSpec::brownian_kappa(2.0).unwrap();
        assert!((truncation_bias_bound(&k2, 0.0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(truncation_bias_bound(&k1, 800.0).unwrap() == 0.0);
        let poisson = ProcessSpec::poisson_multiple(1.0, 1.0).unwrap();
        let v = FunctionalVariant::poisson_default(1.0);
        assert_eq!(v, FunctionalVariant::Poisson_exact { k: 29 });
        assert!(variant_bias_bound(&poisson, v, 1.0).unwrap() < 1e-12);
        // B + t/2 has Ψ(−1) = 0, so E[I(V)] = ∞ (Dufresne's 2/Exp(1))
        let up = ProcessSpec::brownian(1.0, -0.5).unwrap();
        assert!(variant_bias_bound(&up, FunctionalVariant::I_V, 3.0).unwrap().is_infinite());
        let fast = ProcessSpec::brownian(1.0, -2.0).unwrap();
        let b = variant_bias_bound(&fast, FunctionalVariant::I_V, 3.0).unwrap();
        assert!((b - (-3f64).exp() / 1.5).abs() < 1e-15);
        assert!(variant_bias_bound(&k1, FunctionalVariant::I_V_sharp, 3.0).unwrap().is_infinite());
    }

    #[test]
    fn first_passage_remainder_closed_forms() {
        // κ = 0, W(x) = 2x: h(y) = 2/3 − (8/3)e^{−y}
        let bm0 = ProcessSpec::brownian(1.0, 0.0).unwrap();
        let h = first_passage_remainder(&bm0, 6.0).unwrap();
        assert!((h - (2.0 / 3.0 - 8.0 / 3.0 * (-6f64).exp())).abs() < 1e-7, "{h}");
        // κ = 1, W(x) = 2(e^x − 1): h(y) = 2(y − 3/2 + 2e^{−y} − e^{−2y}/2)/(e^y − 1) + 2e^{−y} − e^{−2y}
        let k1 = ProcessSpec::brownian_kappa(1.0).unwrap();
        let y = 10.0f64;
        let oracle = 2.0 * (y - 1.5 + 2.0 * (-y).exp() - 0.5 * (-2.0 * y).exp()) / (y.exp() - 1.0)
            + 2.0 * (-y).exp()
            - (-2.0 * y).exp();
        let h = first_passage_remainder(&k1, y).unwrap();
        assert!((h / oracle - 1.0).abs() < 1e-6, "{h} vs {oracle}");
        // the first-passage remainder exceeds the last-passage one
        assert!(h > truncation_bias_bound(&k1, y).unwrap());
        let staged = FunctionalSampler::new(&bm0, FunctionalVariant::I_V_up, 6.0, 1e-2).unwrap();
        assert!(staged.v_up_sampler().is_some());
        assert!((staged.bias_bound().unwrap() - first_passage_remainder(&bm0, 6.0).unwrap()).abs() < 1e-12);
        let shift = FunctionalSampler::new(&k1, FunctionalVariant::I_V_up, 6.0, 1e-2).unwrap();
        assert!((shift.bias_bound().unwrap() - (-6f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_drift_estimate() {
        let drift = ProcessSpec::bv_drift_cpp(1.0, 0.0, 1.0).unwrap();
        let est = estimate(&drift, FunctionalVariant::I_V_up, 20.0, 1e-3, 2, 7, 1).unwrap();
        assert!((est.mean - (1.0 - (-20f64).exp())).abs() < 1e-6, "{est:?}");
        assert!(est.stderr < 1e-9);
    }

    #[test]
    fn estimates_do_not_depend_on_workers() {
        let k1 = ProcessSpec::brownian_kappa(1.0).unwrap();
        let a = estimate(&k1, FunctionalVariant::I_V_up, 3.0, 1e-2, 64, 5, 1).unwrap();
        let b = estimate(&k1, FunctionalVariant::I_V_up, 3.0, 1e-2, 64, 5, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn poisson_laplace_matches_the_series() {
        let spec = ProcessSpec::poisson_multiple(1.0, 1.0).unwrap();
        let s = FunctionalSampler::new(&spec, FunctionalVariant::Poisson_exact { k: 40 }, 1.0, 1.0).unwrap();
        let samples = s.sample_many(20_000, 3, 1).unwrap();
        let (m, se) = crate::analysis::empirical_laplace(&samples, 1.0).unwrap();
        let target = (-poisson_log_laplace_ref(1.0, 1.0, 1.0).unwrap().value).exp();
        // oracle: Π_k 1/(1 + e^{−k}) summed in double precision
        assert!((target - 0.297_986_4).abs() < 1e-7);
        assert!((m - target).abs() < 3.0 * se, "{m} vs {target} ± {se}");
    }

    #[test]
    fn truncation_is_monotone_on_a_stream() {
        let k1 = ProcessSpec::brownian_kappa(1.0).unwrap();
        let stream = RngStream::new(11, 3);
        let mut last = 0.0;
        for y in [2.0, 4.0, 6.0, 8.0] {
            let v = sample_functional(&k1, FunctionalVariant::I_V_up, y, 1e-2, stream).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn variant_preconditions() {
        let k1 = ProcessSpec::brownian_kappa(1.0).unwrap();
        assert!(FunctionalSampler::new(&k1, FunctionalVariant::I_V, 5.0, 1e-2).is_err());
        assert!(FunctionalSampler::new(&k1, FunctionalVariant::A_y { y: 0.0 }, 5.0, 1e-2).is_err());
        assert!(FunctionalSampler::new(&k1, FunctionalVariant::I_Z, 5.0, 1e-2).is_err());
        assert!(FunctionalSampler::new(&k1, FunctionalVariant::Poisson_exact { k: 3 }, 5.0, 1e-2).is_err());
        assert!(FunctionalSampler::new(&k1, FunctionalVariant::I_V_up, -1.0, 1e-2).is_err());
        let z = ProcessSpec::dual_of(ProcessSpec::brownian_kappa(1.0).unwrap()).unwrap();
        assert!(FunctionalSampler::new(&z, FunctionalVariant::I_Z, 5.0, 1e-2).is_ok());
    }

    #[test]
    fn affine_pair_parts_are_nonnegative() {
        let k1 = ProcessSpec::brownian_kappa(1.0).unwrap();
        for i in 0..5 {
            let (a, t) = sample_affine_pair(&k1, 3.0, 1e-2, RngStream::new(1, i)).unwrap();
            assert!(a >= 0.0 && t > 0.0);
        }
    }

    #[test]
    fn variant_json() {
        let v = FunctionalVariant::A_y { y: 3.0 };
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(text, r#"{"variant":"A_y","y":3.0}"#);
        assert_eq!(serde_json::from_str::<FunctionalVariant>(&text).unwrap(), v);
        let est = MCEstimate {
            mean: 1.0,
            stderr: 0.1,
            n: 10,
            bias_bound: f64::INFINITY,
            dt: 1e-3,
        };
        let text = serde_json::to_string(&est).unwrap();
        assert!(text.contains("\"bias_bound\":null"));
        assert_eq!(serde_json::from_str::<MCEstimate>(&text).unwrap(), est);
    }

    #[test]
    fn samples_csv() {
        let mut out = Vec::new();
        write_samples_csv(&mut out, &[1.5, 2.0]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "sample_index,value\n0,1.5\n1,2\n");
    }
}
