//! Grid simulation of `V`, `V♯`, `V↑` and `Z`, `Z↑` from exact-in-law increments.

mod rng;
mod stepper;
mod vup;
mod zup;

pub use rng::{RngStream, SimRng};
pub use vup::{conditioned_spec, simulate_v_up, VUpAlgo, VUpDraw, VUpSampler};
pub use zup::{argmin_shift, simulate_z_up, ZUpDraw, ZUpSampler};

pub(crate) use stepper::Stepper;
pub(crate) use vup::w_at;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::CheckReport;
use crate::error::{domain, Error, Result};
use crate::levy_model::{psi_raw, ProcessSpec};

/// Default cap on the number of grid steps of one path.
pub const STEP_BUDGET: u64 = 100_000_000;

/// Default grid step.
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason", content = "level")]
pub enum StopReason {
    HorizonReached,
    LevelHit(f64),
    BarrierHit(f64),
    Rejected,
}

/// When the driver stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Run for `round(T/dt)` steps.
    Horizon(f64),
    /// Stop at the first grid index with value `>= y`.
    LevelUp(f64),
    /// Stop at the first grid index with value `>= b`, recording the last visit to `(−∞, 0]`.
    BarrierThenLastZero(f64),
    /// Stop once the path is `b` above its running minimum.
    AboveRunningMin(f64),
    /// Stop on a visit below `lower` (rejected) or at the first index `>= upper`.
    Exit { lower: f64, upper: f64 },
}

/// Bookkeeping produced alongside a path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathMeta {
    pub steps: u64,
    /// Grid overshoot above the stopping level.
    pub overshoot: Option<f64>,
    /// Probability bound for the event the construction neglects.
    pub residual_bound: Option<f64>,
    /// `(level, j)`: the last visit to `(−∞, level]` happened at index `j` or
    /// during the step `j → j+1` (intra-step minimum or Brownian-bridge test).
    pub last_visits: Vec<(f64, usize)>,
    /// Index of the grid minimum, when tracked.
    pub argmin: Option<usize>,
    /// Rejection-sampler attempts, summed over stages.
    pub attempts: u64,
}

/// A trajectory on a uniform grid. The stored values are the process minus `origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub dt: f64,
    pub values: Vec<f64>,
    pub stop_reason: StopReason,
    pub start_level: f64,
    pub origin: f64,
    pub meta: PathMeta,
}

impl PathSample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time of the last grid point.
    pub fn duration(&self) -> f64 {
        (self.values.len().saturating_sub(1)) as f64 * self.dt
    }

    /// `t,value` rows, one per grid point.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", i as f64 * self.dt, v)?;
        }
        Ok(())
    }
}

/// Per-visit bookkeeping for one tracked level.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Tracked {
    pub level: f64,
    pub last: Option<usize>,
}

pub(crate) struct RunInfo {
    pub stop_reason: StopReason,
    pub steps: u64,
    pub argmin: usize,
}

/// Whether the step `prev → v` (with intra-step low `low`) visits `(−∞, level]`.
#[inline]
pub(crate) fn visits(
    stepper: &Stepper,
    rng: &mut SimRng,
    prev: f64,
    v: f64,
    low: f64,
    level: f64,
) -> bool {
    if v <= level || prev + low < level {
        return true;
    }
    let a = prev - level;
    if a <= 0.0 {
        return false;
    }
    let p = stepper.bridge_cross_prob(a, v - level);
    p > 0.0 && rng.uniform() < p
}

/// Drive `stepper` from `out.last()` until `rule` fires, appending grid values.
pub(crate) fn run(
    stepper: &mut Stepper,
    rng: &mut SimRng,
    rule: StopRule,
    tracked: &mut [Tracked],
    out: &mut Vec<f64>,
    budget: u64,
) -> Result<RunInfo> {
    let start_index = out.len() - 1;
    let mut prev = out[start_index];
    let mut steps = 0u64;
    let mut min_v = prev;
    let mut argmin = start_index;
    let horizon_steps = match rule {
        StopRule::Horizon(t) => (t / stepper.dt()).round() as u64,
        _ => u64::MAX,
    };
    let done_at_start = match rule {
        StopRule::Horizon(_) => horizon_steps == 0,
        StopRule::LevelUp(y) | StopRule::BarrierThenLastZero(y) => prev >= y,
        StopRule::Exit { upper, .. } => prev >= upper,
        StopRule::AboveRunningMin(b) => b <= 0.0,
    };
    if done_at_start {
        return Ok(RunInfo {
            stop_reason: initial_reason(rule),
            steps,
            argmin,
        });
    }
    loop {
        if steps >= budget {
            return Err(Error::Budget { budget });
        }
        let s = stepper.step(rng);
        let v = prev + s.incr;
        out.push(v);
        steps += 1;
        let idx = out.len() - 1;
        for t in tracked.iter_mut() {
            if v <= t.level {
                t.last = Some(idx);
            } else if visits(stepper, rng, prev, v, s.low, t.level) {
                t.last = Some(idx - 1);
            }
        }
        let reason = match rule {
            StopRule::Horizon(_) => (steps >= horizon_steps).then_some(StopReason::HorizonReached),
            StopRule::LevelUp(y) => (v >= y).then_some(StopReason::LevelHit(y)),
            StopRule::BarrierThenLastZero(b) => (v >= b).then_some(StopReason::BarrierHit(b)),
            StopRule::AboveRunningMin(b) => {
                if v < min_v {
                    min_v = v;
                    argmin = idx;
                }
                (v - min_v >= b).then_some(StopReason::BarrierHit(b))
            }
            StopRule::Exit { lower, upper } => {
                if visits(stepper, rng, prev, v, s.low, lower) {
                    Some(StopReason::Rejected)
                } else {
                    (v >= upper).then_some(StopReason::LevelHit(upper))
                }
            }
        };
        if let Some(stop_reason) = reason {
            return Ok(RunInfo {
                stop_reason,
                steps,
                argmin,
            });
        }
        prev = v;
    }
}

fn initial_reason(rule: StopRule) -> StopReason {
    match rule {
        StopRule::Horizon(_) => StopReason::HorizonReached,
        StopRule::LevelUp(y) => StopReason::LevelHit(y),
        StopRule::Exit { upper, .. } => StopReason::LevelHit(upper),
        StopRule::BarrierThenLastZero(b) | StopRule::AboveRunningMin(b) => {
            StopReason::BarrierHit(b)
        }
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(domain(format!("dt must be finite and > 0, got {dt}")));
    }
    Ok(())
}

fn check_rule(rule: StopRule) -> Result<()> {
    let ok = match rule {
        StopRule::Horizon(t) => t >= 0.0 && t.is_finite(),
        StopRule::LevelUp(y) | StopRule::BarrierThenLastZero(y) | StopRule::AboveRunningMin(y) => {
            y.is_finite()
        }
        StopRule::Exit { lower, upper } => lower < upper && upper.is_finite(),
    };
    if ok {
        Ok(())
    } else {
        Err(domain(format!("invalid stop rule {rule:?}")))
    }
}

/// One increment `X_dt` of the spec (for spectrally positive specs, of the process itself).
pub fn sample_increment(spec: &ProcessSpec, dt: f64, stream: RngStream) -> Result<f64> {
    check_dt(dt)?;
    let mut st = Stepper::new(spec, dt)?;
    Ok(st.step(&mut stream.rng()).incr)
}

/// `E[e^{λX_dt}]` estimated from `n` increments against `e^{dt·Ψ(λ)}`; passes within 4
/// standard errors. For spectrally positive specs the exponent is that of the negated
/// process, so the increments are negated before the comparison.
pub fn validate_increment_law(
    spec: &ProcessSpec,
    dt: f64,
    lambda: f64,
    n: usize,
    stream: RngStream,
) -> Result<CheckReport> {
    check_dt(dt)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(domain(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if n < 10_000 {
        return Err(Error::Data(format!("need n >= 10000 increments, got {n}")));
    }
    let sign = match spec.side() {
        crate::levy_model::Side::SpectrallyNegative => 1.0,
        crate::levy_model::Side::SpectrallyPositive => -1.0,
    };
    let target = (dt * psi_raw(spec, lambda)).exp();
    let mut st = Stepper::new(spec, dt)?;
    let mut rng = stream.rng();
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..n {
        // independent increments: restart the jump clock each time
        st.reset();
        let e = (sign * lambda * st.step(&mut rng).incr).exp();
        sum += e;
        sum2 += e * e;
    }
    let mean = sum / n as f64;
    let var = (sum2 / n as f64 - mean * mean).max(0.0) * n as f64 / (n as f64 - 1.0);
    let stderr = (var / n as f64).sqrt();
    let statistic = if stderr > 0.0 {
        (mean - target).abs() / stderr
    } else if (mean - target).abs() <= 1e-12 * target {
        0.0
    } else {
        f64::INFINITY
    };
    let mut report = CheckReport::new(
        "increment_law",
        statistic,
        4.0,
        statistic <= 4.0,
        "Laplace exponent of the increments: E[exp(λX_dt)] = exp(dt·Ψ(λ))",
    );
    report.insert("empirical", mean);
    report.insert("target", target);
    report.insert("stderr", stderr);
    report.insert("dt", dt);
    report.insert("lambda", lambda);
    report.insert("n", n as f64);
    Ok(report)
}

/// Run the spec from `start_level` until `rule` fires.
pub fn simulate_until(
    spec: &ProcessSpec,
    start_level: f64,
    rule: StopRule,
    dt: f64,
    stream: RngStream,
) -> Result<PathSample> {
    simulate_until_with(spec, start_level, rule, dt, stream, STEP_BUDGET)
}

pub fn simulate_until_with(
    spec: &ProcessSpec,
    start_level: f64,
    rule: StopRule,
    dt: f64,
    stream: RngStream,
    budget: u64,
) -> Result<PathSample> {
    check_dt(dt)?;
    check_rule(rule)?;
    let mut st = Stepper::new(spec, dt)?;
    let mut rng = stream.rng();
    let mut values = vec![start_level];
    let mut tracked = match rule {
        StopRule::BarrierThenLastZero(_) => vec![Tracked {
            level: 0.0,
            last: (start_level <= 0.0).then_some(0),
        }],
        _ => Vec::new(),
    };
    let info = run(&mut st, &mut rng, rule, &mut tracked, &mut values, budget)?;
    let last = *values.last().unwrap();
    let overshoot = match info.stop_reason {
        StopReason::LevelHit(l) | StopReason::BarrierHit(l) if !matches!(rule, StopRule::AboveRunningMin(_)) => {
            Some(last - l)
        }
        _ => None,
    };
    Ok(PathSample {
        dt,
        values,
        stop_reason: info.stop_reason,
        start_level,
        origin: 0.0,
        meta: PathMeta {
            steps: info.steps,
            overshoot,
            residual_bound: None,
            last_visits: tracked
                .iter()
                .filter_map(|t| t.last.map(|j| (t.level, j)))
                .collect(),
            argmin: matches!(rule, StopRule::AboveRunningMin(_)).then_some(info.argmin),
            attempts: 0,
        },
    })
}

/// Where `last_passage_split` looks for the terminal excursion above the level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitOptions {
    /// Fraction of the final indices that must stay above `level + margin`.
    pub final_window: f64,
    pub margin: f64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self {
            final_window: 0.1,
            margin: 0.0,
        }
    }
}

/// Index `j` of the last visit to `(−∞, level]`: the last grid index with value
/// `<= level`, moved later when the path recorded an intra-step visit for this level.
pub(crate) fn last_visit_index(path: &PathSample, level: f64) -> Option<usize> {
    let grid = path.values.iter().rposition(|&v| v + path.origin <= level);
    let recorded = path
        .meta
        .last_visits
        .iter()
        .filter(|(l, _)| *l == level)
        .map(|&(_, j)| j)
        .max();
    grid.max(recorded)
}

/// Split a path at its last visit to `level`. `pre` is everything before index `j`,
/// `post` is the rest shifted down by `level` (its `origin` records the shift), so
/// `pre ++ (post + level)` is the input path.
pub fn last_passage_split(path: &PathSample, level: f64) -> Result<(PathSample, PathSample)> {
    last_passage_split_with(path, level, SplitOptions::default())
}

pub fn last_passage_split_with(
    path: &PathSample,
    level: f64,
    options: SplitOptions,
) -> Result<(PathSample, PathSample)> {
    let n = path.values.len();
    let j = last_visit_index(path, level)
        .ok_or_else(|| domain(format!("path never visits (-inf, {level}]")))?;
    let window = ((options.final_window * n as f64).ceil() as usize).max(1);
    let window_ok = j + window < n
        && path.values[n - window..]
            .iter()
            .all(|&v| v + path.origin > level + options.margin);
    if !window_ok {
        return Err(Error::HorizonTooShort(format!(
            "the last {window} of {n} grid points do not stay above {}; extend the simulation",
            level + options.margin
        )));
    }
    let shift = level - path.origin;
    let pre = PathSample {
        dt: path.dt,
        values: path.values[..j].to_vec(),
        stop_reason: path.stop_reason,
        start_level: path.start_level,
        origin: path.origin,
        meta: PathMeta::default(),
    };
    let post = PathSample {
        dt: path.dt,
        values: path.values[j..].iter().map(|v| v - shift).collect(),
        stop_reason: path.stop_reason,
        start_level: 0.0,
        origin: level,
        meta: PathMeta {
            last_visits: path
                .meta
                .last_visits
                .iter()
                .filter(|&&(_, i)| i >= j)
                .map(|&(l, i)| (l - level, i - j))
                .collect(),
            ..path.meta.clone()
        },
    };
    Ok((pre, post))
}

/// `S_T` for a compound Poisson subordinator (rate `jump_rate`, exponential jumps of mean
/// `jump_mean`) at an independent unit exponential time `T`. Exact: each next event is a
/// jump with probability `rate/(rate + 1)`, otherwise `T`.
pub fn compound_poisson_at_exp_time(jump_rate: f64, jump_mean: f64, stream: RngStream) -> Result<f64> {
    if !(jump_rate > 0.0) || !(jump_mean > 0.0) {
        return Err(domain(format!(
            "need jump_rate > 0 and jump_mean > 0, got {jump_rate}, {jump_mean}"
        )));
    }
    let mut rng = stream.rng();
    let p_jump = jump_rate / (jump_rate + 1.0);
    let mut s = 0.0;
    while rng.uniform() < p_jump {
        s += jump_mean * rng.exp1();
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize, start: f64, slope: f64, dt: f64) -> PathSample {
        PathSample {
            dt,
            values: (0..n).map(|i| start + slope * i as f64 * dt).collect(),
            stop_reason: StopReason::HorizonReached,
            start_level: start,
            origin: 0.0,
            meta: PathMeta::default(),
        }
    }

    #[test]
    fn split_of_a_ramp() {
        let p = ramp(3001, -1.0, 1.0, 1e-3);
        let (pre, post) = last_passage_split(&p, 0.0).unwrap();
        assert_eq!(pre.len() + post.len(), p.len());
        assert_eq!(pre.len(), 1000);
        assert!(post.values[0].abs() < 1e-12);
        let mut joined = pre.values.clone();
        joined.extend(post.values.iter().map(|v| v + post.origin));
        assert_eq!(joined, p.values);
    }

    #[test]
    fn split_refuses_short_horizons() {
        let mut p = ramp(100, -1.0, 1.0, 0.01);
        p.values[99] = -0.5;
        assert!(matches!(last_passage_split(&p, 0.0), Err(Error::HorizonTooShort(_))));
    }

    #[test]
    fn horizon_zero_is_a_single_point() {
        let spec = ProcessSpec::brownian(1.0, 0.0).unwrap();
        let p = simulate_until(&spec, 0.3, StopRule::Horizon(0.0), 1e-3, RngStream::new(1, 1)).unwrap();
        assert_eq!(p.values, vec![0.3]);
        let p = simulate_until(&spec, 0.0, StopRule::Horizon(1.0), 1e-3, RngStream::new(1, 1)).unwrap();
        assert_eq!(p.len(), 1001);
    }

    #[test]
    fn pure_drift_reaches_level_on_schedule() {
        let spec = ProcessSpec::bv_drift_cpp(1.0, 0.0, 1.0).unwrap();
        let p = simulate_until(&spec, 0.0, StopRule::LevelUp(3.0), 1e-3, RngStream::new(1, 1)).unwrap();
        let idx = p.len() - 1;
        assert!((2999..=3001).contains(&idx), "{idx}");
        assert_eq!(p.stop_reason, StopReason::LevelHit(3.0));
        assert!(p.meta.overshoot.unwrap() < 1.1e-3);
    }

    #[test]
    fn budget_is_enforced() {
        let spec = ProcessSpec::brownian(1.0, 1.0).unwrap();
        let r = simulate_until_with(&spec, 0.0, StopRule::LevelUp(100.0), 1e-3, RngStream::new(1, 1), 1000);
        assert_eq!(r.unwrap_err(), Error::Budget { budget: 1000 });
    }

    #[test]
    fn increment_law_examples() {
        let bm = ProcessSpec::brownian(1.0, 0.0).unwrap();
        let r = validate_increment_law(&bm, 1.0, 1.0, 100_000, RngStream::new(5, 0)).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.metadata["target"].as_f64().unwrap() - 0.5f64.exp()).abs() < 1e-12);
        let r = validate_increment_law(&bm, 1.0, 0.0, 10_000, RngStream::new(5, 0)).unwrap();
        assert!(r.pass && r.statistic == 0.0);
    }

    #[test]
    fn deterministic_replay() {
        let spec = ProcessSpec::brownian_kappa(1.0).unwrap();
        let a = simulate_until(&spec, 0.0, StopRule::Horizon(2.0), 1e-3, RngStream::new(9, 4)).unwrap();
        let b = simulate_until(&spec, 0.0, StopRule::Horizon(2.0), 1e-3, RngStream::new(9, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_dump() {
        let p = ramp(3, 0.0, 1.0, 0.5);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,value\n0,0\n0.5,0.5\n1,1\n");
    }

    #[test]
    fn compound_poisson_at_exp_time_law() {
        // P(S_T = 0) = 1/(1 + rate); E[S_T] = rate·mean·E[T]
        let draws: Vec<f64> = (0..40_000)
            .map(|i| compound_poisson_at_exp_time(1.0, 2.0, RngStream::new(9, i)).unwrap())
            .collect();
        let zeros = draws.iter().filter(|&&v| v == 0.0).count() as f64 / draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((zeros - 0.5).abs() < 0.01, "{zeros}");
        assert!((mean - 2.0).abs() < 0.06, "{mean}");
        assert!(compound_poisson_at_exp_time(0.0, 1.0, RngStream::new(1, 1)).is_err());
    }
}
