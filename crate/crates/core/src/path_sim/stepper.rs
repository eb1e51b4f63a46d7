//! Exact-in-law increment generators, one per catalog family.

use std::f64::consts::PI;

use super::rng::SimRng;
use crate::error::Result;
use crate::levy_model::{ProcessKind, ProcessSpec};

#[derive(Debug, Clone)]
enum Law {
    /// `mean + sd·N(0,1)`.
    Gauss { mean: f64, sd: f64 },
    /// `drift_dt − scale·Y` with `Y ~ S_α(1, 1, 0)` drawn by Chambers–Mallows–Stuck.
    Stable {
        inv_alpha: f64,
        alpha: f64,
        b: f64,
        s: f64,
        scale: f64,
        drift_dt: f64,
    },
    /// Drift `drift` per unit time plus jumps of size `jump_sign·jump_mean·Exp(1)`
    /// arriving at rate `rate`. Covers the bounded-variation family and the Poisson multiple.
    Jumps {
        drift: f64,
        rate: f64,
        jump_mean: f64,
        exponential_sizes: bool,
        jump_sign: f64,
    },
}

/// One grid step: the increment and the lowest point reached during the step,
/// both relative to the value at the start of the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Step {
    pub incr: f64,
    pub low: f64,
}

/// Stateful increment generator for a spec at a fixed grid step.
///
/// Jump families are event-driven: the time to the next jump is carried over
/// between steps, so the intra-step minimum is exact.
#[derive(Debug, Clone)]
pub(crate) struct Stepper {
    law: Law,
    sign: f64,
    dt: f64,
    /// Diffusion coefficient of the stepped process, `0` without a Gaussian part.
    q: f64,
    wait: f64,
}

impl Stepper {
    pub fn new(spec: &ProcessSpec, dt: f64) -> Result<Self> {
        let (inner, sign) = match spec.kind() {
            ProcessKind::DualOf(inner) => (inner.as_ref(), -1.0),
            _ => (spec, 1.0),
        };
        let mut q = 0.0;
        let law = if let Some((gq, gamma)) = inner.gaussian_params() {
            q = gq;
            Law::Gauss {
                mean: -sign * gamma * dt,
                sd: (gq * dt).sqrt(),
            }
        } else {
            match inner.kind() {
                ProcessKind::StableSn { c, alpha, drift } => {
                    let t = (PI * alpha / 2.0).tan();
                    let half_cos = (PI * alpha / 2.0).cos().abs();
                    Law::Stable {
                        inv_alpha: 1.0 / alpha,
                        alpha: *alpha,
                        b: t.atan() / alpha,
                        s: (1.0 + t * t).powf(0.5 / alpha),
                        scale: (c * dt * half_cos).powf(1.0 / alpha),
                        drift_dt: drift * dt,
                    }
                }
                ProcessKind::BvDriftCpp {
                    gamma_star,
                    jump_rate,
                    jump_mean,
                } => Law::Jumps {
                    drift: *gamma_star,
                    rate: *jump_rate,
                    jump_mean: *jump_mean,
                    exponential_sizes: true,
                    jump_sign: -1.0,
                },
                ProcessKind::PoissonMultiple { alpha_jump, rate } => Law::Jumps {
                    drift: 0.0,
                    rate: *rate,
                    jump_mean: *alpha_jump,
                    exponential_sizes: false,
                    jump_sign: 1.0,
                },
                ProcessKind::BrownianDrift { .. } | ProcessKind::DualOf(_) => unreachable!(),
            }
        };
        Ok(Self {
            law,
            sign,
            dt,
            q,
            wait: f64::NAN,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Typical size of one increment; used to size stage widths and margins.
    pub fn increment_scale(&self) -> f64 {
        match &self.law {
            Law::Gauss { mean, sd } => sd.max(mean.abs()),
            Law::Stable {
                scale, drift_dt, ..
            } => scale.max(drift_dt.abs()),
            Law::Jumps {
                drift,
                rate,
                jump_mean,
                ..
            } => (drift * self.dt).max(jump_mean * (rate * self.dt).min(1.0)),
        }
    }

    /// Forget the pending jump clock (used when a rejected attempt is restarted).
    pub fn reset(&mut self) {
        self.wait = f64::NAN;
    }

    #[inline]
    pub fn step(&mut self, rng: &mut SimRng) -> Step {
        match self.law {
            Law::Gauss { mean, sd } => {
                let incr = mean + sd * rng.std_normal();
                Step {
                    incr,
                    low: incr.min(0.0),
                }
            }
            Law::Stable {
                inv_alpha,
                alpha,
                b,
                s,
                scale,
                drift_dt,
            } => {
                let v = PI * (rng.uniform() - 0.5);
                let w = rng.exp1();
                let y = s * (alpha * (v + b)).sin() / v.cos().powf(inv_alpha)
                    * ((v - alpha * (v + b)).cos() / w).powf((1.0 - alpha) * inv_alpha);
                let incr = self.sign * (drift_dt - scale * y);
                Step {
                    incr,
                    low: incr.min(0.0),
                }
            }
            Law::Jumps {
                drift,
                rate,
                jump_mean,
                exponential_sizes,
                jump_sign,
            } => {
                if self.wait.is_nan() {
                    self.wait = if rate > 0.0 {
                        rng.exp1() / rate
                    } else {
                        f64::INFINITY
                    };
                }
                let mut left = self.dt;
                let mut x = 0.0f64;
                let mut lo = 0.0f64;
                let mut hi = 0.0f64;
                while self.wait <= left {
                    x += drift * self.wait;
                    left -= self.wait;
                    lo = lo.min(x);
                    hi = hi.max(x);
                    let size = if exponential_sizes {
                        jump_mean * rng.exp1()
                    } else {
                        jump_mean
                    };
                    x += jump_sign * size;
                    lo = lo.min(x);
                    hi = hi.max(x);
                    self.wait = rng.exp1() / rate;
                }
                self.wait -= left;
                x += drift * left;
                lo = lo.min(x);
                hi = hi.max(x);
                if self.sign > 0.0 {
                    Step { incr: x, low: lo }
                } else {
                    Step { incr: -x, low: -hi }
                }
            }
        }
    }

    /// Probability that a Brownian bridge between two points at heights `a > 0`
    /// and `b > 0` above a level dips below it within one step. Zero without a
    /// Gaussian part or when the probability is below `e^{-40}`.
    #[inline]
    pub fn bridge_cross_prob(&self, a: f64, b: f64) -> f64 {
        if self.q == 0.0 {
            return 0.0;
        }
        let z = 2.0 * a * b / (self.q * self.dt);
        if z < 40.0 {
            (-z).exp()
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path_sim::RngStream;

    #[test]
    fn pure_drift_is_deterministic() {
        let spec = ProcessSpec::bv_drift_cpp(2.0, 0.0, 1.0).unwrap();
        let mut st = Stepper::new(&spec, 0.01).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        for _ in 0..10 {
            let s = st.step(&mut rng);
            assert!((s.incr - 0.02).abs() < 1e-15);
            assert_eq!(s.low, 0.0);
        }
    }

    #[test]
    fn jump_step_reports_intra_step_minimum() {
        let spec = ProcessSpec::bv_drift_cpp(1.0, 50.0, 1.0).unwrap();
        let mut st = Stepper::new(&spec, 0.1).unwrap();
        let mut rng = RngStream::new(2, 0).rng();
        for _ in 0..1000 {
            let s = st.step(&mut rng);
            assert!(s.low <= s.incr.min(0.0));
            // the path cannot fall further than the jumps minus the drift allowance
            assert!(s.incr <= 0.1 + 1e-12);
        }
        let dual = ProcessSpec::dual_of(spec).unwrap();
        let mut st = Stepper::new(&dual, 0.1).unwrap();
        for _ in 0..1000 {
            let s = st.step(&mut rng);
            assert!(s.low <= s.incr.min(0.0));
            assert!(s.low >= -0.1 - 1e-12);
        }
    }

    #[test]
    fn poisson_steps_are_multiples_of_the_jump() {
        let spec = ProcessSpec::poisson_multiple(0.5, 3.0).unwrap();
        let mut st = Stepper::new(&spec, 0.2).unwrap();
        let mut rng = RngStream::new(3, 0).rng();
        let mut jumps = 0.0;
        let n = 20_000;
        for _ in 0..n {
            let s = st.step(&mut rng);
            let k = s.incr / 0.5;
            assert!((k - k.round()).abs() < 1e-12 && s.low == 0.0);
            jumps += k;
        }
        let mean = jumps / n as f64;
        assert!((mean - 0.6).abs() < 4.0 * (0.6f64 / n as f64).sqrt());
    }
}
