//! Samplers for `V↑`, the spectrally negative process conditioned to stay positive.

use serde::{Deserialize, Serialize};

use super::{check_dt, run, PathMeta, PathSample, RngStream, SimRng, StopReason, StopRule, Stepper, Tracked, STEP_BUDGET};
use crate::error::{domain, unsupported, Error, Result};
use crate::levy_model::{bisect, psi_raw, scale_w, Exponent, ProcessKind, ProcessSpec, ScaleMethod, Side};

/// How a `V↑` path is produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "algo")]
pub enum VUpAlgo {
    /// Run `V♯` from 0 to a high barrier and keep the part after its last visit to 0.
    LastPassageShift,
    /// Run `V` from `x0` until it exits `(0, ymax)`; keep the runs that exit at the top.
    Rejection { x0: f64, ymax: f64 },
    /// Rejection in stages between levels with `W(a)/W(b) = 1/2`, each stage retried
    /// on its own until it exits at the top.
    Staged { x0: f64 },
}

/// Indices describing one draw held in the caller's buffers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VUpDraw {
    /// Index in the raw `V♯` path of the last visit to 0 (shift algorithm only).
    pub split: Option<usize>,
    /// First index of the `V↑` path at or above the target level.
    pub hit: usize,
    /// Last visit of the `V↑` path to `(−∞, level]` for the extra tracked level.
    pub last_extra: Option<usize>,
    pub attempts: u64,
    /// Set when the staged sampler stopped early because the integral passed the cap.
    pub censored: bool,
}

/// The conditioned process `V♯`, with exponent `Ψ_V(κ + ·)`.
pub fn conditioned_spec(spec: &ProcessSpec) -> Result<ProcessSpec> {
    if spec.side() != Side::SpectrallyNegative {
        return Err(domain("the conditioned process is defined for spectrally negative specs"));
    }
    let kappa = Exponent::new(spec.clone())?.kappa();
    if kappa == 0.0 {
        return Ok(spec.clone());
    }
    if let Some((q, gamma)) = spec.gaussian_params() {
        // κ = 2γ/q, so γ − qκ = −γ exactly
        return ProcessSpec::brownian(q, -gamma);
    }
    match spec.kind() {
        ProcessKind::BvDriftCpp {
            gamma_star,
            jump_rate,
            jump_mean,
        } => {
            let d = 1.0 + kappa * jump_mean;
            ProcessSpec::bv_drift_cpp(*gamma_star, jump_rate / d, jump_mean / d)
        }
        _ => Err(unsupported(
            "the Esscher transform of a stable process with kappa > 0 leaves the catalog \
             (tempered stable); use the rejection or staged sampler",
        )),
    }
}

/// `R > 0` with `Ψ♯(−R) = 0`, so that a return of `V♯` from height `b` to `(−∞, 0]`
/// has probability at most `e^{−R b}`. `None` when `V♯` has no exponential moment
/// of negative order.
pub(crate) fn lundberg_rate(spec: &ProcessSpec) -> Option<f64> {
    let ex = Exponent::new(spec.clone()).ok()?;
    let kappa = ex.kappa();
    if ex.summary().psi_prime_at_kappa <= 0.0 {
        return None;
    }
    let limit = match spec.kind() {
        ProcessKind::BrownianDrift { .. } => f64::INFINITY,
        ProcessKind::StableSn { .. } if spec.gaussian_params().is_some() => f64::INFINITY,
        ProcessKind::BvDriftCpp { jump_mean, .. } => kappa + 1.0 / jump_mean,
        _ => return None,
    };
    let f = |l: f64| psi_raw(spec, kappa - l);
    let mut lo = 0.0;
    let mut hi = 1e-3;
    loop {
        if hi >= limit {
            hi = 0.5 * (lo + limit);
            if limit - lo < 1e-12 {
                return None;
            }
        }
        let v = f(hi);
        if v > 0.0 {
            break;
        }
        if !v.is_finite() {
            return None;
        }
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            return None;
        }
    }
    Some(bisect(lo, hi, f))
}

pub(crate) fn w_at(spec: &ProcessSpec, x: f64) -> Result<f64> {
    let x = x.max(f64::MIN_POSITIVE);
    match scale_w(spec, x, ScaleMethod::ClosedForm) {
        Err(Error::Unsupported(_)) => scale_w(spec, x, ScaleMethod::NumericInversion),
        other => other,
    }
}

/// A prepared `V↑` sampler for one spec, level and grid.
#[derive(Debug, Clone)]
pub struct VUpSampler {
    algo: VUpAlgo,
    y: f64,
    stepper: Stepper,
    barrier: f64,
    extra_level: Option<f64>,
    ladder: Vec<f64>,
    lundberg: Option<f64>,
    budget: u64,
    max_attempts: u64,
}

impl VUpSampler {
    pub fn new(spec: &ProcessSpec, y: f64, dt: f64, algo: VUpAlgo) -> Result<Self> {
        check_dt(dt)?;
        if spec.side() != Side::SpectrallyNegative {
            return Err(domain("V-up sampling needs a spectrally negative spec"));
        }
        if !(y > 0.0) || !y.is_finite() {
            return Err(domain(format!("level y must be finite and > 0, got {y}")));
        }
        let ex = Exponent::new(spec.clone())?;
        let sharp = conditioned_spec(spec);
        let mut sampler = Self {
            algo,
            y,
            stepper: Stepper::new(spec, dt)?,
            barrier: 15f64.max(y + 5.0),
            extra_level: None,
            ladder: Vec::new(),
            lundberg: None,
            budget: STEP_BUDGET,
            max_attempts: 10_000_000,
        };
        match algo {
            VUpAlgo::LastPassageShift => {
                let sharp = sharp?;
                if ex.summary().psi_prime_at_kappa <= 0.0 {
                    return Err(unsupported(
                        "the process oscillates, so there is no last passage at 0; use the \
                         staged or rejection sampler",
                    ));
                }
                sampler.stepper = Stepper::new(&sharp, dt)?;
                sampler.lundberg = lundberg_rate(&sharp);
            }
            VUpAlgo::Rejection { x0, ymax } => {
                check_entrance(spec, x0)?;
                if !(x0 < y && y <= ymax) || !ymax.is_finite() {
                    return Err(domain(format!(
                        "rejection needs 0 < x0 < y <= ymax, got x0 = {x0}, y = {y}, ymax = {ymax}"
                    )));
                }
                let acc = w_at(spec, x0)? / w_at(spec, ymax)?;
                if acc < 1e-4 {
                    return Err(Error::Refused(format!(
                        "acceptance probability W(x0)/W(ymax) = {acc:.3e} is below 1e-4; raise x0, \
                         lower ymax or use the staged sampler"
                    )));
                }
                sampler.ladder = vec![x0, ymax];
            }
            VUpAlgo::Staged { x0 } => {
                check_entrance(spec, x0)?;
                if !(x0 < y) {
                    return Err(domain(format!("staged sampling needs x0 < y, got x0 = {x0}, y = {y}")));
                }
                // Stages are conditioned on the same exit event under V and V♯, and V♯
                // accepts more often, so step V♯ whenever the catalog has it.
                let step_spec = sharp.unwrap_or_else(|_| spec.clone());
                sampler.stepper = Stepper::new(&step_spec, dt)?;
                let min_width = 5.0 * sampler.stepper.increment_scale();
                sampler.ladder = build_ladder(&step_spec, x0, y, min_width)?;
            }
        }
        Ok(sampler)
    }

    /// Also record the last visit of the `V↑` path to `(−∞, level]` (needs the shift
    /// algorithm, whose path continues well above `y`).
    pub fn with_tracked_level(mut self, level: f64) -> Result<Self> {
        if self.algo != VUpAlgo::LastPassageShift {
            return Err(unsupported(
                "last passages of V-up above 0 need the last-passage-shift sampler",
            ));
        }
        if !(level > 0.0) || level + 5.0 > self.barrier {
            return Err(domain(format!("tracked level must lie in (0, barrier - 5], got {level}")));
        }
        self.extra_level = Some(level);
        Ok(self)
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn algo(&self) -> VUpAlgo {
        self.algo
    }

    pub fn ladder(&self) -> &[f64] {
        &self.ladder
    }

    pub fn barrier(&self) -> f64 {
        self.barrier
    }

    pub fn dt(&self) -> f64 {
        self.stepper.dt()
    }

    /// Probability bound on a post-barrier return to 0 (shift algorithm), else 0.
    pub fn residual_bound(&self) -> Option<f64> {
        match self.algo {
            VUpAlgo::LastPassageShift => self.lundberg.map(|r| (-r * self.barrier).exp()),
            _ => Some(0.0),
        }
    }

    /// Draw one path. `raw` receives the underlying simulation, `path` the `V↑` values.
    /// With `cap`, the staged sampler stops after the first stage whose trapezoid
    /// integral of `e^{−path}` exceeds it.
    pub fn sample(
        &self,
        rng: &mut SimRng,
        raw: &mut Vec<f64>,
        path: &mut Vec<f64>,
        cap: Option<f64>,
    ) -> Result<VUpDraw> {
        match self.algo {
            VUpAlgo::LastPassageShift => self.sample_shift(rng, raw, path),
            VUpAlgo::Rejection { .. } | VUpAlgo::Staged { .. } => self.sample_staged(rng, path, cap),
        }
    }

    fn sample_shift(&self, rng: &mut SimRng, raw: &mut Vec<f64>, path: &mut Vec<f64>) -> Result<VUpDraw> {
        let mut stepper = self.stepper.clone();
        stepper.reset();
        raw.clear();
        raw.push(0.0);
        let mut tracked = vec![Tracked {
            level: 0.0,
            last: Some(0),
        }];
        if let Some(level) = self.extra_level {
            tracked.push(Tracked { level, last: Some(0) });
        }
        let mut barrier = self.barrier;
        let mut steps = 0;
        let split = loop {
            let info = run(
                &mut stepper,
                rng,
                StopRule::BarrierThenLastZero(barrier),
                &mut tracked,
                raw,
                self.budget - steps,
            )?;
            steps += info.steps;
            let j = tracked[0].last.unwrap();
            let n = raw.len();
            let window = ((0.1 * n as f64).ceil() as usize).max(1);
            if j + window < n && raw[n - window..].iter().all(|&v| v > 0.0) {
                break j;
            }
            // the final window is not clear of 0 yet: extend rather than accept a biased split
            barrier += 5.0;
        };
        path.clear();
        path.push(0.0);
        path.extend_from_slice(&raw[split + 1..]);
        let hit = path
            .iter()
            .position(|&v| v >= self.y)
            .expect("barrier lies above y");
        let last_extra = if self.extra_level.is_some() {
            tracked[1].last.map(|i| i.saturating_sub(split))
        } else {
            None
        };
        Ok(VUpDraw {
            split: Some(split),
            hit,
            last_extra,
            attempts: 1,
            censored: false,
        })
    }

    fn sample_staged(&self, rng: &mut SimRng, path: &mut Vec<f64>, cap: Option<f64>) -> Result<VUpDraw> {
        let dt = self.stepper.dt();
        let mut stepper = self.stepper.clone();
        path.clear();
        path.push(self.ladder[0]);
        let mut attempts = 0u64;
        let mut steps = 0u64;
        // Σ e^{-v} over the accepted stages, for the censoring test
        let first = (-self.ladder[0]).exp();
        let mut integral_sum = first;
        for &upper in &self.ladder[1..] {
            let stage_start = path.len();
            let mut stage_attempts = 0u64;
            loop {
                path.truncate(stage_start);
                stepper.reset();
                stage_attempts += 1;
                let info = run(
                    &mut stepper,
                    rng,
                    StopRule::Exit { lower: 0.0, upper },
                    &mut [],
                    path,
                    self.budget.saturating_sub(steps),
                )?;
                steps += info.steps;
                if let StopReason::LevelHit(_) = info.stop_reason {
                    break;
                }
                if stage_attempts >= self.max_attempts {
                    return Err(Error::Convergence {
                        what: "staged rejection".into(),
                        diagnostics: format!("{stage_attempts} rejected attempts below level {upper}"),
                    });
                }
            }
            attempts += stage_attempts;
            if let Some(cap) = cap {
                if upper < self.y {
                    integral_sum += path[stage_start..].iter().map(|v| (-v).exp()).sum::<f64>();
                    let last = (-path[path.len() - 1]).exp();
                    if dt * (integral_sum - 0.5 * (first + last)) > cap {
                        return Ok(VUpDraw {
                            split: None,
                            hit: path.len() - 1,
                            last_extra: None,
                            attempts,
                            censored: true,
                        });
                    }
                }
            }
        }
        let hit = path
            .iter()
            .position(|&v| v >= self.y)
            .expect("the last stage ends at or above y");
        Ok(VUpDraw {
            split: None,
            hit,
            last_extra: None,
            attempts,
            censored: false,
        })
    }
}

fn check_entrance(spec: &ProcessSpec, x0: f64) -> Result<()> {
    let zero_ok = spec.has_bounded_variation();
    if !(x0 >= 0.0) || !x0.is_finite() || (x0 == 0.0 && !zero_ok) {
        return Err(domain(format!(
            "entrance level must be > 0 (or 0 for bounded variation), got {x0}"
        )));
    }
    Ok(())
}

/// Levels `x0 = a_0 < a_1 < … < a_k = y` with `W(a_{i+1}) = 2W(a_i)` where the scale
/// function allows it, and stage widths of at least `min_width`.
fn build_ladder(spec: &ProcessSpec, x0: f64, y: f64, min_width: f64) -> Result<Vec<f64>> {
    let mut ladder = vec![x0];
    let w_y = w_at(spec, y)?;
    let mut a = x0;
    while a < y {
        let wa = w_at(spec, a)?;
        let mut b = if w_y <= 2.0 * wa {
            y
        } else {
            let (mut lo, mut hi) = (a, y);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if w_at(spec, mid)? > 2.0 * wa {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-12 * hi {
                    break;
                }
            }
            hi
        };
        b = b.max(a + min_width);
        if b > y - 0.5 * min_width {
            b = y;
        }
        ladder.push(b);
        a = b;
    }
    Ok(ladder)
}

/// A `V↑` path from 0 (or the entrance level) run until its first passage above the level
/// of `stop`, which must be `LevelUp(y)`.
pub fn simulate_v_up(
    spec: &ProcessSpec,
    stop: StopRule,
    dt: f64,
    stream: RngStream,
    algo: VUpAlgo,
) -> Result<PathSample> {
    let StopRule::LevelUp(y) = stop else {
        return Err(domain("V-up paths are run until a level: use StopRule::LevelUp"));
    };
    let sampler = VUpSampler::new(spec, y, dt, algo)?;
    let mut rng = stream.rng();
    let (mut raw, mut path) = (Vec::new(), Vec::new());
    let draw = sampler.sample(&mut rng, &mut raw, &mut path, None)?;
    path.truncate(draw.hit + 1);
    let start_level = path[0];
    let overshoot = path[draw.hit] - y;
    Ok(PathSample {
        dt,
        values: path,
        stop_reason: StopReason::LevelHit(y),
        start_level,
        origin: 0.0,
        meta: PathMeta {
            steps: raw.len().max(1) as u64 - 1,
            overshoot: Some(overshoot),
            residual_bound: sampler.residual_bound(),
            last_visits: Vec::new(),
            argmin: None,
            attempts: draw.attempts,
        },
    })
}
