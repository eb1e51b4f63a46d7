//! Strict JSON run configuration.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::expfunc::FunctionalVariant;
use crate::levy_model::{reject_unknown, ProcessSpec};

const KEYS: &[&str] = &[
    "process",
    "seed",
    "workers",
    "variant",
    "y",
    "dt",
    "n",
    "horizon",
    "x_grid",
    "lambda_grid",
    "out_dir",
];

/// Parsed configuration. Absent optional fields fall back to per-command defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub process: Option<ProcessSpec>,
    pub seed: u64,
    /// Worker threads; 0 means all cores. Never part of a report.
    pub workers: usize,
    pub variant: Option<FunctionalVariant>,
    pub y: Option<f64>,
    pub dt: Option<f64>,
    pub n: Option<u64>,
    pub horizon: Option<f64>,
    pub x_grid: Option<Vec<f64>>,
    pub lambda_grid: Option<Vec<f64>>,
    pub out_dir: Option<String>,
}

impl RunConfig {
    /// A configuration with only a seed.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            process: None,
            seed,
            workers: 1,
            variant: None,
            y: None,
            dt: None,
            n: None,
            horizon: None,
            x_grid: None,
            lambda_grid: None,
            out_dir: None,
        }
    }

    /// The fields that determine results: everything except workers and output paths.
    pub fn echo(&self) -> Value {
        let mut m = Map::new();
        if let Some(p) = &self.process {
            m.insert("process".into(), p.to_json());
        }
        m.insert("seed".into(), json!(self.seed));
        if let Some(v) = &self.variant {
            m.insert("variant".into(), serde_json::to_value(v).unwrap_or(Value::Null));
        }
        for (key, v) in [("y", self.y), ("dt", self.dt), ("horizon", self.horizon)] {
            if let Some(v) = v {
                m.insert(key.into(), json!(v));
            }
        }
        if let Some(n) = self.n {
            m.insert("n".into(), json!(n));
        }
        for (key, g) in [("x_grid", &self.x_grid), ("lambda_grid", &self.lambda_grid)] {
            if let Some(g) = g {
                m.insert(key.into(), json!(g));
            }
        }
        Value::Object(m)
    }
}

fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

fn positive(obj: &Map<String, Value>, key: &str) -> Result<Option<f64>> {
    let Some(v) = obj.get(key) else { return Ok(None) };
    let path = format!("$.{key}");
    let x = v.as_f64().ok_or_else(|| config_err(&path, "expected a number"))?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(config_err(&path, format!("must be finite and > 0, got {x}")));
    }
    Ok(Some(x))
}

fn unsigned(obj: &Map<String, Value>, key: &str) -> Result<Option<u64>> {
    let Some(v) = obj.get(key) else { return Ok(None) };
    v.as_u64()
        .map(Some)
        .ok_or_else(|| config_err(&format!("$.{key}"), "expected a non-negative integer"))
}

fn grid(obj: &Map<String, Value>, key: &str) -> Result<Option<Vec<f64>>> {
    let Some(v) = obj.get(key) else { return Ok(None) };
    let path = format!("$.{key}");
    let items = v.as_array().ok_or_else(|| config_err(&path, "expected an array of numbers"))?;
    if items.is_empty() {
        return Err(config_err(&path, "empty grid"));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, x)| match x.as_f64() {
            Some(x) if x > 0.0 && x.is_finite() => Ok(x),
            _ => Err(config_err(&format!("{path}[{i}]"), "expected a finite number > 0")),
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// `"I_V_up"` or `{"variant": "A_y", "y": 3}`.
pub fn parse_variant(v: &Value, path: &str) -> Result<FunctionalVariant> {
    let tagged = match v {
        Value::String(s) => json!({ "variant": s }),
        Value::Object(_) => v.clone(),
        _ => return Err(config_err(path, "expected a variant name or object")),
    };
    serde_json::from_value(tagged).map_err(|e| config_err(path, e.to_string()))
}

/// Parse and validate a configuration document. Unknown keys are rejected with their path.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        config_err("$", format!("line {} column {}: {e}", e.line(), e.column()))
    })?;
    let obj = doc.as_object().ok_or_else(|| config_err("$", "expected a JSON object"))?;
    reject_unknown(obj, KEYS, "$")?;
    let seed = obj
        .get("seed")
        .ok_or_else(|| config_err("$.seed", "missing required field (there is no clock-based default)"))?
        .as_u64()
        .ok_or_else(|| config_err("$.seed", "expected a non-negative integer"))?;
    let process = obj
        .get("process")
        .map(|p| ProcessSpec::from_json(p, "$.process"))
        .transpose()?;
    let variant = obj.get("variant").map(|v| parse_variant(v, "$.variant")).transpose()?;
    let workers = unsigned(obj, "workers")?.unwrap_or(1) as usize;
    let n = unsigned(obj, "n")?;
    if n == Some(0) {
        return Err(config_err("$.n", "must be > 0"));
    }
    let out_dir = match obj.get("out_dir") {
        None => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(config_err("$.out_dir", "expected a string")),
    };
    Ok(RunConfig {
        process,
        seed,
        workers,
        variant,
        y: positive(obj, "y")?,
        dt: positive(obj, "dt")?,
        n,
        horizon: positive(obj, "horizon")?,
        x_grid: grid(obj, "x_grid")?,
        lambda_grid: grid(obj, "lambda_grid")?,
        out_dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_config() {
        let c = parse_config(
            r#"{"process":{"kind":"brownian_drift","q":1,"gamma":0.5},"seed":42,"variant":"I_V_up",
                "y":10,"dt":0.001,"n":1000,"x_grid":[0.5,1]}"#,
        )
        .unwrap();
        assert_eq!(c.seed, 42);
        assert_eq!(c.process, Some(ProcessSpec::brownian(1.0, 0.5).unwrap()));
        assert_eq!(c.variant, Some(FunctionalVariant::I_V_up));
        assert_eq!(c.x_grid, Some(vec![0.5, 1.0]));
        let a = parse_config(r#"{"seed":1,"variant":{"variant":"A_y","y":3}}"#).unwrap();
        assert_eq!(a.variant, Some(FunctionalVariant::A_y { y: 3.0 }));
    }

    #[test]
    fn rejections() {
        let path_of = |text: &str| match parse_config(text) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("{other:?}"),
        };
        assert_eq!(path_of(r#"{"n":5}"#), "$.seed");
        assert_eq!(path_of(r#"{"seed":1,"bogus":2}"#), "$.bogus");
        assert_eq!(
            path_of(r#"{"seed":1,"process":{"kind":"bv_drift_cpp","gamma_star":0,"jump_rate":1,"jump_mean":1}}"#),
            "$.process"
        );
        assert_eq!(path_of(r#"{"seed":1,"process":{"kind":"brownian_drift","q":1,"extra":0}}"#), "$.process.extra");
        assert_eq!(path_of(r#"{"seed":1,"dt":-1}"#), "$.dt");
        assert_eq!(path_of(r#"{"seed":1,"x_grid":[1,0]}"#), "$.x_grid[1]");
        match parse_config("{\n\"seed\": 1,\n}") {
            Err(Error::Config { message, .. }) => assert!(message.starts_with("line 3"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn echo_leaves_out_workers() {
        let mut c = parse_config(r#"{"seed":7,"workers":4,"out_dir":"o","n":10}"#).unwrap();
        let e = c.echo();
        c.workers = 1;
        c.out_dir = None;
        assert_eq!(e, c.echo());
        assert_eq!(e, json!({"seed":7,"n":10}));
    }
}
