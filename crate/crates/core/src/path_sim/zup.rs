//! `Z↑` by shifting a spectrally positive path at its overall minimum.

use super::{check_dt, run, PathMeta, PathSample, RngStream, SimRng, StopReason, StopRule, Stepper, STEP_BUDGET};
use crate::error::{domain, unsupported, Error, Result};
use crate::levy_model::{Exponent, ProcessKind, ProcessSpec, Side};

/// Indices describing one draw: `path` is `raw[argmin..] − raw[argmin]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZUpDraw {
    pub argmin: usize,
    /// `raw[argmin]`, the overall minimum of `Z` on the grid (≤ 0).
    pub min_value: f64,
    /// First index of the shifted path at or above the target level.
    pub hit: usize,
}

/// A prepared `Z↑` sampler.
#[derive(Debug, Clone)]
pub struct ZUpSampler {
    y: f64,
    stepper: Stepper,
    barrier: f64,
    kappa: f64,
    budget: u64,
}

impl ZUpSampler {
    pub fn new(spec: &ProcessSpec, y: f64, dt: f64) -> Result<Self> {
        check_dt(dt)?;
        if spec.side() != Side::SpectrallyPositive {
            return Err(domain("Z-up sampling needs a spectrally positive spec"));
        }
        if !(y > 0.0) || !y.is_finite() {
            return Err(domain(format!("level y must be finite and > 0, got {y}")));
        }
        if spec.has_bounded_variation() {
            return Err(unsupported(
                "Z-up started at 0 needs unbounded variation; this spec has bounded variation",
            ));
        }
        let ProcessKind::DualOf(inner) = spec.kind() else {
            return Err(unsupported("Z-up sampling is implemented for dual_of specs"));
        };
        let kappa = Exponent::new(inner.as_ref().clone())?.kappa();
        if kappa <= 0.0 {
            return Err(domain(
                "Z must drift to +infinity (the dual spectrally negative process needs kappa > 0)",
            ));
        }
        Ok(Self {
            y,
            stepper: Stepper::new(spec, dt)?,
            barrier: 15f64.max(y + 5.0),
            kappa,
            budget: STEP_BUDGET,
        })
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn dt(&self) -> f64 {
        self.stepper.dt()
    }

    /// Probability that `Z` returns below its recorded minimum after the stop:
    /// `P(sup V ≥ b) = e^{−κ b}` for the dual process.
    pub fn residual_bound(&self) -> f64 {
        (-self.kappa * self.barrier).exp()
    }

    pub fn sample(&self, rng: &mut SimRng, raw: &mut Vec<f64>, path: &mut Vec<f64>) -> Result<ZUpDraw> {
        let mut stepper = self.stepper.clone();
        stepper.reset();
        raw.clear();
        raw.push(0.0);
        let info = run(
            &mut stepper,
            rng,
            StopRule::AboveRunningMin(self.barrier),
            &mut [],
            raw,
            self.budget,
        )?;
        let mut steps = info.steps;
        let mut m = info.argmin;
        // keep going until the minimum sits before the final 10% of the grid
        loop {
            let n = raw.len();
            let window = ((0.1 * n as f64).ceil() as usize).max(1);
            if m + window < n {
                break;
            }
            let extra = (n as f64 * stepper.dt()).max(1.0);
            let more = run(&mut stepper, rng, StopRule::Horizon(extra), &mut [], raw, self.budget.saturating_sub(steps))?;
            steps += more.steps;
            m = argmin(raw);
        }
        let min_value = raw[m];
        path.clear();
        path.extend(raw[m..].iter().map(|v| v - min_value));
        let hit = path
            .iter()
            .position(|&v| v >= self.y)
            .ok_or_else(|| Error::HorizonTooShort(format!("Z-up path ends below level {}", self.y)))?;
        Ok(ZUpDraw {
            argmin: m,
            min_value,
            hit,
        })
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut m = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[m] {
            m = i;
        }
    }
    m
}

/// Shift a path at its grid minimum: returns `Z(m + ·) − Z(m)`. The minimum must lie
/// before the final 10% of the grid.
pub fn argmin_shift(path: &PathSample) -> Result<PathSample> {
    if path.values.is_empty() {
        return Err(domain("empty path"));
    }
    let n = path.values.len();
    let m = argmin(&path.values);
    let window = ((0.1 * n as f64).ceil() as usize).max(1);
    if n > 1 && m + window >= n {
        return Err(Error::HorizonTooShort(format!(
            "the minimum sits at index {m} of {n}, inside the final window"
        )));
    }
    let base = path.values[m];
    Ok(PathSample {
        dt: path.dt,
        values: path.values[m..].iter().map(|v| v - base).collect(),
        stop_reason: path.stop_reason,
        start_level: 0.0,
        origin: path.origin + base,
        meta: PathMeta {
            argmin: Some(m),
            ..PathMeta::default()
        },
    })
}

/// A `Z↑` path run until its first passage above the level of `stop` (`LevelUp(y)`).
pub fn simulate_z_up(spec: &ProcessSpec, stop: StopRule, dt: f64, stream: RngStream) -> Result<PathSample> {
    let StopRule::LevelUp(y) = stop else {
        return Err(domain("Z-up paths are run until a level: use StopRule::LevelUp"));
    };
    let sampler = ZUpSampler::new(spec, y, dt)?;
    let mut rng = stream.rng();
    let (mut raw, mut path) = (Vec::new(), Vec::new());
    let draw = sampler.sample(&mut rng, &mut raw, &mut path)?;
    path.truncate(draw.hit + 1);
    Ok(PathSample {
        dt,
        values: path,
        stop_reason: StopReason::LevelHit(y),
        start_level: 0.0,
        origin: draw.min_value,
        meta: PathMeta {
            steps: raw.len() as u64 - 1,
            overshoot: None,
            residual_bound: Some(sampler.residual_bound()),
            last_visits: Vec::new(),
            argmin: Some(draw.argmin),
            attempts: 1,
        },
    })
}
