//! Parametric process catalog and its JSON form.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// Which half-line carries the jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    SpectrallyNegative,
    SpectrallyPositive,
}

/// Catalog families. Parameters follow the Lévy–Khintchine convention
/// `Ψ(λ) = qλ²/2 − γλ + ∫(e^{λx} − 1 − λx1_{|x|<1}) ν(dx)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessKind {
    /// `Ψ(λ) = qλ²/2 − γλ`.
    BrownianDrift { q: f64, gamma: f64 },
    /// `Ψ(λ) = cλ^α + drift·λ`, totally skewed to the left.
    StableSn { c: f64, alpha: f64, drift: f64 },
    /// `γ*·t` minus a compound Poisson process with exponential jumps of mean `jump_mean`.
    BvDriftCpp {
        gamma_star: f64,
        jump_rate: f64,
        jump_mean: f64,
    },
    /// `Y = α·N`, N a Poisson process with intensity `rate` (spectrally positive).
    PoissonMultiple { alpha_jump: f64, rate: f64 },
    /// `Z := −V` for a spectrally negative `V`.
    DualOf(Box<ProcessSpec>),
}

/// A validated process description. Construct through the named constructors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    kind: ProcessKind,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be a finite positive number, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {v}")))
    }
}

impl ProcessSpec {
    pub fn brownian(q: f64, gamma: f64) -> Result<Self> {
        positive("q", q)?;
        finite("gamma", gamma)?;
        Ok(Self {
            kind: ProcessKind::BrownianDrift { q, gamma },
        })
    }

    /// `W_κ(t) = B(t) − κt/2`, i.e. `q = 1`, `γ = κ/2`.
    pub fn brownian_kappa(kappa: f64) -> Result<Self> {
        Self::brownian(1.0, kappa / 2.0)
    }

    pub fn stable(c: f64, alpha: f64, drift: f64) -> Result<Self> {
        positive("c", c)?;
        finite("drift", drift)?;
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::Domain(format!("alpha must lie in (1, 2], got {alpha}")));
        }
        Ok(Self {
            kind: ProcessKind::StableSn { c, alpha, drift },
        })
    }

    /// Bounded-variation process; `gamma_star <= 0` would make it the opposite of a subordinator.
    pub fn bv_drift_cpp(gamma_star: f64, jump_rate: f64, jump_mean: f64) -> Result<Self> {
        if !(gamma_star.is_finite() && gamma_star > 0.0) {
            return Err(Error::Domain(format!(
                "gamma_star must be positive (otherwise the process is the opposite of a subordinator), got {gamma_star}"
            )));
        }
        if !(jump_rate.is_finite() && jump_rate >= 0.0) {
            return Err(Error::Domain(format!("jump_rate must be >= 0, got {jump_rate}")));
        }
        positive("jump_mean", jump_mean)?;
        Ok(Self {
            kind: ProcessKind::BvDriftCpp {
                gamma_star,
                jump_rate,
                jump_mean,
            },
        })
    }

    pub fn poisson_multiple(alpha_jump: f64, rate: f64) -> Result<Self> {
        positive("alpha_jump", alpha_jump)?;
        positive("rate", rate)?;
        Ok(Self {
            kind: ProcessKind::PoissonMultiple { alpha_jump, rate },
        })
    }

    pub fn dual_of(inner: ProcessSpec) -> Result<Self> {
        if inner.side() != Side::SpectrallyNegative {
            return Err(Error::Domain(
                "dual_of wraps only spectrally negative specs".into(),
            ));
        }
        Ok(Self {
            kind: ProcessKind::DualOf(Box::new(inner)),
        })
    }

    pub fn kind(&self) -> &ProcessKind {
        &self.kind
    }

    pub fn side(&self) -> Side {
        match self.kind {
            ProcessKind::BrownianDrift { .. }
            | ProcessKind::StableSn { .. }
            | ProcessKind::BvDriftCpp { .. } => Side::SpectrallyNegative,
            ProcessKind::PoissonMultiple { .. } | ProcessKind::DualOf(_) => {
                Side::SpectrallyPositive
            }
        }
    }

    /// `(q, γ)` when the process is a Brownian motion with drift (stable with α = 2 included).
    pub fn gaussian_params(&self) -> Option<(f64, f64)> {
        match self.kind {
            ProcessKind::BrownianDrift { q, gamma } => Some((q, gamma)),
            ProcessKind::StableSn { c, alpha: 2.0, drift } => Some((2.0 * c, -drift)),
            _ => None,
        }
    }

    /// The spectrally negative process whose exponent `psi` evaluates: the spec itself,
    /// or the inner spec of a dual.
    pub fn exponent_owner(&self) -> &ProcessSpec {
        match &self.kind {
            ProcessKind::DualOf(inner) => inner,
            _ => self,
        }
    }

    pub fn has_bounded_variation(&self) -> bool {
        match &self.kind {
            ProcessKind::BvDriftCpp { .. } | ProcessKind::PoissonMultiple { .. } => true,
            ProcessKind::DualOf(inner) => inner.has_bounded_variation(),
            _ => false,
        }
    }

    pub fn to_json(&self) -> Value {
        match &self.kind {
            ProcessKind::BrownianDrift { q, gamma } => {
                json!({"kind": "brownian_drift", "q": q, "gamma": gamma})
            }
            ProcessKind::StableSn { c, alpha, drift } => {
                json!({"kind": "stable_sn", "c": c, "alpha": alpha, "drift": drift})
            }
            ProcessKind::BvDriftCpp {
                gamma_star,
                jump_rate,
                jump_mean,
            } => json!({
                "kind": "bv_drift_cpp",
                "gamma_star": gamma_star,
                "jump_rate": jump_rate,
                "jump_mean": jump_mean
            }),
            ProcessKind::PoissonMultiple { alpha_jump, rate } => {
                json!({"kind": "poisson_multiple", "alpha_jump": alpha_jump, "rate": rate})
            }
            ProcessKind::DualOf(inner) => json!({"kind": "dual_of", "inner": inner.to_json()}),
        }
    }

    /// Strict parse: unknown keys are rejected and reported with their JSON path.
    pub fn from_json(value: &Value, path: &str) -> Result<Self> {
        let obj = value.as_object().ok_or_else(|| Error::Config {
            path: path.to_string(),
            message: "expected an object".into(),
        })?;
        let kind = obj
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Config {
                path: format!("{path}.kind"),
                message: "missing or non-string process kind".into(),
            })?;
        let allowed: &[&str] = match kind {
            "brownian_drift" => &["kind", "side", "q", "gamma"],
            "stable_sn" => &["kind", "side", "c", "alpha", "drift"],
            "bv_drift_cpp" => &["kind", "side", "gamma_star", "jump_rate", "jump_mean"],
            "poisson_multiple" => &["kind", "side", "alpha_jump", "rate"],
            "dual_of" => &["kind", "side", "inner"],
            other => {
                return Err(Error::Config {
                    path: format!("{path}.kind"),
                    message: format!("unknown process kind `{other}`"),
                })
            }
        };
        reject_unknown(obj, allowed, path)?;
        let num = |key: &str, default: Option<f64>| -> Result<f64> {
            match obj.get(key) {
                Some(v) => v.as_f64().ok_or_else(|| Error::Config {
                    path: format!("{path}.{key}"),
                    message: "expected a number".into(),
                }),
                None => default.ok_or_else(|| Error::Config {
                    path: format!("{path}.{key}"),
                    message: "missing required field".into(),
                }),
            }
        };
        let at = |r: Result<Self>| {
            r.map_err(|e| match e {
                Error::Domain(m) => Error::Config {
                    path: path.to_string(),
                    message: m,
                },
                other => other,
            })
        };
        let spec = match kind {
            "brownian_drift" => at(Self::brownian(num("q", None)?, num("gamma", Some(0.0))?))?,
            "stable_sn" => at(Self::stable(
                num("c", None)?,
                num("alpha", None)?,
                num("drift", Some(0.0))?,
            ))?,
            "bv_drift_cpp" => at(Self::bv_drift_cpp(
                num("gamma_star", None)?,
                num("jump_rate", None)?,
                num("jump_mean", None)?,
            ))?,
            "poisson_multiple" => {
                at(Self::poisson_multiple(num("alpha_jump", None)?, num("rate", None)?))?
            }
            _ => {
                let inner = obj.get("inner").ok_or_else(|| Error::Config {
                    path: format!("{path}.inner"),
                    message: "missing required field".into(),
                })?;
                let inner = Self::from_json(inner, &format!("{path}.inner"))?;
                at(Self::dual_of(inner))?
            }
        };
        if let Some(side) = obj.get("side") {
            let declared: Side = serde_json::from_value(side.clone()).map_err(|e| Error::Config {
                path: format!("{path}.side"),
                message: e.to_string(),
            })?;
            if declared != spec.side() {
                return Err(Error::Config {
                    path: format!("{path}.side"),
                    message: format!("declared side {declared:?} contradicts kind `{kind}`"),
                });
            }
        }
        Ok(spec)
    }
}

pub(crate) fn reject_unknown(obj: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<()> {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::Config {
                path: format!("{path}.{key}"),
                message: "unknown key".into(),
            });
        }
    }
    Ok(())
}

impl Serialize for ProcessSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ProcessSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        Self::from_json(&value, "$").map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_invariants() {
        assert!(ProcessSpec::brownian(0.0, 1.0).is_err());
        assert!(ProcessSpec::stable(1.0, 1.0, 0.0).is_err());
        assert!(ProcessSpec::stable(1.0, 2.5, 0.0).is_err());
        assert!(ProcessSpec::stable(1.0, 2.0, 0.0).is_ok());
        assert!(ProcessSpec::bv_drift_cpp(0.0, 1.0, 1.0).is_err());
        assert!(ProcessSpec::bv_drift_cpp(-1.0, 1.0, 1.0).is_err());
        let pos = ProcessSpec::poisson_multiple(1.0, 1.0).unwrap();
        assert!(ProcessSpec::dual_of(pos).is_err());
        let z = ProcessSpec::dual_of(ProcessSpec::brownian(1.0, 0.5).unwrap()).unwrap();
        assert_eq!(z.side(), Side::SpectrallyPositive);
    }

    #[test]
    fn json_roundtrip_and_strictness() {
        let z = ProcessSpec::dual_of(ProcessSpec::stable(1.0, 1.5, -0.3).unwrap()).unwrap();
        let back = ProcessSpec::from_json(&z.to_json(), "$").unwrap();
        assert_eq!(back, z);

        let bad = json!({"kind": "brownian_drift", "q": 1.0, "gamma": 0.5, "sigma": 2});
        match ProcessSpec::from_json(&bad, "$.process") {
            Err(Error::Config { path, .. }) => assert_eq!(path, "$.process.sigma"),
            other => panic!("expected config error, got {other:?}"),
        }
        let bv = json!({"kind": "bv_drift_cpp", "gamma_star": 0.0, "jump_rate": 1, "jump_mean": 1});
        let err = ProcessSpec::from_json(&bv, "$.process").unwrap_err();
        assert!(err.to_string().contains("opposite of a subordinator"));

        let side = json!({"kind": "stable_sn", "c": 1, "alpha": 1.5, "side": "spectrally_positive"});
        assert!(ProcessSpec::from_json(&side, "$").is_err());
    }
}
