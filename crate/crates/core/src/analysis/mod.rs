//! Statistics, tail predictors and identity checks that produce pass/fail reports.

mod checks;
mod predict;
mod stats;

pub use checks::{
    check_identity, dkw_band_check, exp_moment_stability, write_tail_csv, CdfSide, Identity, MIN_CHECK_SAMPLES,
};
pub use predict::{
    driftless_brownian_cdf, dufresne_cdf, jump_tail_lower_bounds, left_tail_asymptote_log, left_tail_bounds, predict_left_tail_log,
    predict_poisson_tail, prop111_exponent, ExponentIntegralBounds,
};
pub use stats::{
    dkw_epsilon, empirical_cdf, empirical_laplace, fit_exp_rate, kolmogorov_q, ks_two_sample, mean_stderr, EcdfBand,
    ExpFit,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

/// Outcome of one check. `pass` is decided by the check that built the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    #[serde(with = "real")]
    pub statistic: f64,
    #[serde(with = "real")]
    pub threshold: f64,
    pub pass: bool,
    /// The identity or law being checked.
    pub provenance: String,
    /// Advisory checks are reported but never fail a suite.
    #[serde(default)]
    pub advisory: bool,
    #[serde(default)]
    pub metadata: BTreeMap<String, Value>,
}

impl CheckReport {
    pub fn new(name: &str, statistic: f64, threshold: f64, pass: bool, provenance: &str) -> Self {
        Self {
            name: name.to_string(),
            statistic,
            threshold,
            pass,
            provenance: provenance.to_string(),
            advisory: false,
            metadata: BTreeMap::new(),
        }
    }

    pub fn advisory(mut self) -> Self {
        self.advisory = true;
        self
    }

    pub fn insert(&mut self, key: &str, value: f64) {
        self.metadata.insert(key.to_string(), real::to_value(value));
    }

    pub fn insert_value(&mut self, key: &str, value: Value) {
        self.metadata.insert(key.to_string(), value);
    }

    /// A metadata entry read back as a real (`null` is `+∞`).
    pub fn get(&self, key: &str) -> Option<f64> {
        self.metadata.get(key).and_then(|v| real::from_value(v).ok())
    }
}

/// JSON encoding of reals: finite values as numbers, `+∞` as `null`, `−∞` and NaN as the
/// strings `"-inf"` and `"nan"`.
pub mod real {
    use super::*;

    pub fn to_value(x: f64) -> Value {
        if x.is_finite() {
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        } else if x.is_nan() {
            Value::String("nan".into())
        } else if x > 0.0 {
            Value::Null
        } else {
            Value::String("-inf".into())
        }
    }

    pub fn from_value(v: &Value) -> std::result::Result<f64, String> {
        match v {
            Value::Null => Ok(f64::INFINITY),
            Value::Number(n) => n.as_f64().ok_or_else(|| format!("{n} is not a real")),
            Value::String(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
            Value::String(s) if s == "nan" => Ok(f64::NAN),
            other => Err(format!("expected a number or null, got {other}")),
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_value(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        let v = Value::deserialize(d)?;
        from_value(&v).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trip_with_infinities() {
        let mut r = CheckReport::new("x", f64::INFINITY, 0.01, false, "law");
        r.insert("a", 1.5);
        r.insert("b", f64::INFINITY);
        r.insert("c", f64::NEG_INFINITY);
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"statistic\":null"));
        let back: CheckReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.get("b"), Some(f64::INFINITY));
        assert_eq!(back.metadata["a"].as_f64(), Some(1.5));
    }
}
