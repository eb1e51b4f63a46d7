//! Command-line front end: analytics, estimators and verification suites driven by a
//! JSON configuration.

mod config;
mod report;
mod suites;

pub use config::{parse_config, parse_variant, RunConfig};
pub use report::{overall, Report};
pub use suites::{run_suite, verify_suite, SuiteError, SuiteOutput, SUITES};

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{left_tail_asymptote_log, left_tail_bounds, predict_left_tail_log, predict_poisson_tail};
use crate::error::{Error, Result};
use crate::expfunc::{summarize, write_samples_csv, FunctionalSampler, FunctionalVariant};
use crate::levy_model::{exponent_summary, inverse_exponent, phi_v, psi, psi_conditioned, ProcessKind, ProcessSpec, Side};
use crate::path_sim::{simulate_until, simulate_v_up, simulate_z_up, w_at, RngStream, StopRule, DEFAULT_DT};

/// Exit status of a successful command, or of a suite whose checks all pass.
pub const EXIT_OK: i32 = 0;
/// A suite check failed or a computation failed.
pub const EXIT_FAIL: i32 = 1;
/// Bad usage or configuration.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "levy-expfunc", version, about = "Exponential functionals of one-sided Lévy processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed of every random stream (overrides the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory for reports, curves and sample dumps.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid step of simulated paths.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Number of Monte Carlo samples.
    #[arg(long, global = true)]
    n: Option<u64>,
    /// Truncation or stopping level.
    #[arg(long, global = true)]
    y: Option<f64>,
    /// Comma-separated λ grid.
    #[arg(long, global = true, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// Comma-separated x grid.
    #[arg(long, global = true, value_delimiter = ',')]
    x: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print Ψ, Ψ♯ on the λ grid, κ, and Φ, φ_V on the x grid.
    Exponent,
    /// Print the scale function W on the x grid.
    Scale,
    /// Write one path as CSV (`t,value`).
    Simulate {
        /// Simulate the process conditioned to stay positive, up to level y.
        #[arg(long)]
        conditioned: bool,
        /// Horizon of an unconditioned path when no level is given.
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Monte Carlo estimate of E[I] for the configured variant, as JSON.
    Estimate {
        /// Functional variant, e.g. I_V_up (overrides the configuration).
        #[arg(long)]
        variant: Option<String>,
    },
    /// Left-tail prediction curve as CSV.
    Predict,
    /// Run a verification suite and write its report.
    Verify {
        /// Suite name, or `all`.
        suite: String,
        /// Also record the wall time in the report (reruns then differ in that field).
        #[arg(long)]
        record_time: bool,
    },
}

/// Run with the process arguments, stdout and stderr; returns the exit code.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with_io(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// [`run_command`] with explicit output streams.
pub fn run_with_io<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Domain(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            let mut cfg = parse_config(&text)?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            cfg
        }
        None => RunConfig::with_seed(common.seed.ok_or_else(|| Error::Config {
            path: "$.seed".into(),
            message: "give --seed or a configuration with a seed".into(),
        })?),
    };
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    for (flag, v) in [("--dt", common.dt), ("--y", common.y)] {
        if let Some(v) = v {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config {
                    path: flag.into(),
                    message: format!("must be finite and > 0, got {v}"),
                });
            }
        }
    }
    cfg.dt = common.dt.or(cfg.dt);
    cfg.y = common.y.or(cfg.y);
    if common.n == Some(0) {
        return Err(Error::Config {
            path: "--n".into(),
            message: "must be > 0".into(),
        });
    }
    cfg.n = common.n.or(cfg.n);
    for (flag, grid) in [("--lambda", &common.lambda), ("--x", &common.x)] {
        if let Some(g) = grid {
            if g.is_empty() || g.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::Config {
                    path: flag.into(),
                    message: "expected finite values > 0".into(),
                });
            }
        }
    }
    cfg.lambda_grid = common.lambda.clone().or(cfg.lambda_grid);
    cfg.x_grid = common.x.clone().or(cfg.x_grid);
    if let Some(o) = &common.out {
        cfg.out_dir = Some(o.display().to_string());
    }
    Ok(cfg)
}

fn process(cfg: &RunConfig) -> Result<&ProcessSpec> {
    cfg.process.as_ref().ok_or_else(|| Error::Config {
        path: "$.process".into(),
        message: "this command needs a process".into(),
    })
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Data(format!("{}: {e}", path.display()))
}

fn write_file(dir: &Path, name: &str, content: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// Write `content` to `<out_dir>/<name>`, or to `out` when there is no output directory.
fn emit(cfg: &RunConfig, name: &str, content: &[u8], out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match &cfg.out_dir {
        Some(dir) => {
            let path = write_file(Path::new(dir), name, content)?;
            let _ = writeln!(err, "wrote {}", path.display());
        }
        None => out.write_all(content).map_err(|e| Error::Data(e.to_string()))?,
    }
    Ok(())
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Exponent => {
            let spec = process(&cfg)?;
            let mut text = String::from("quantity,argument,value\n");
            text += &format!("kappa,,{:?}\n", exponent_summary(spec)?.kappa);
            for &l in cfg.lambda_grid.as_deref().unwrap_or(&[1.0, 2.0]) {
                text += &format!("psi,{l},{:?}\n", psi(spec, l)?);
                text += &format!("psi_sharp,{l},{:?}\n", psi_conditioned(spec, l)?);
            }
            for &x in cfg.x_grid.as_deref().unwrap_or(&[1.0]) {
                text += &format!("Phi,{x},{:?}\n", inverse_exponent(spec, x)?);
                text += &format!("phi_V,{x},{:?}\n", phi_v(spec, x)?);
            }
            emit(&cfg, "exponent.csv", text.as_bytes(), out, err)?;
            Ok(EXIT_OK)
        }
        Command::Scale => {
            let spec = process(&cfg)?;
            let mut text = String::from("x,W\n");
            for &x in cfg.x_grid.as_deref().unwrap_or(&[1.0]) {
                text += &format!("{x},{:?}\n", w_at(spec, x)?);
            }
            emit(&cfg, "scale.csv", text.as_bytes(), out, err)?;
            Ok(EXIT_OK)
        }
        Command::Simulate { conditioned, horizon } => {
            let spec = process(&cfg)?;
            let dt = cfg.dt.unwrap_or(DEFAULT_DT);
            let stream = RngStream::new(cfg.seed, 0);
            let path = if conditioned {
                let level = StopRule::LevelUp(cfg.y.unwrap_or(5.0));
                match spec.side() {
                    Side::SpectrallyNegative => {
                        simulate_v_up(spec, level, dt, stream, crate::expfunc::default_algo(spec)?)?
                    }
                    Side::SpectrallyPositive => simulate_z_up(spec, level, dt, stream)?,
                }
            } else {
                let rule = match (cfg.y, horizon.or(cfg.horizon)) {
                    (Some(y), None) => StopRule::LevelUp(y),
                    (_, h) => StopRule::Horizon(h.unwrap_or(10.0)),
                };
                simulate_until(spec, 0.0, rule, dt, stream)?
            };
            let mut text = Vec::new();
            path.write_csv(&mut text).map_err(|e| Error::Data(e.to_string()))?;
            emit(&cfg, "path.csv", &text, out, err)?;
            Ok(EXIT_OK)
        }
        Command::Estimate { variant } => {
            if let Some(v) = variant {
                cfg.variant = Some(parse_variant(&serde_json::Value::String(v), "--variant")?);
            }
            let spec = process(&cfg)?;
            let variant = cfg.variant.unwrap_or(FunctionalVariant::I_V_up);
            let dt = cfg.dt.unwrap_or(DEFAULT_DT);
            let n = cfg.n.unwrap_or(10_000);
            if n < 2 {
                return Err(Error::Config {
                    path: "n".into(),
                    message: "an estimate needs n >= 2".into(),
                });
            }
            let sampler = FunctionalSampler::new(spec, variant, cfg.y.unwrap_or(10.0), dt)?;
            let samples = sampler.sample_many(n, cfg.seed, cfg.workers)?;
            let est = summarize(&samples, sampler.bias_bound()?, dt);
            let mut json = serde_json::to_string_pretty(&est).expect("estimates serialize");
            json.push('\n');
            emit(&cfg, "estimate.json", json.as_bytes(), out, err)?;
            if let Some(dir) = &cfg.out_dir {
                let mut csv = Vec::new();
                write_samples_csv(&mut csv, &samples).map_err(|e| Error::Data(e.to_string()))?;
                let path = write_file(Path::new(dir), "samples.csv", &csv)?;
                let _ = writeln!(err, "wrote {}", path.display());
            }
            Ok(EXIT_OK)
        }
        Command::Predict => {
            let spec = process(&cfg)?;
            let grid = cfg.x_grid.clone().unwrap_or_else(|| vec![1.0, 0.5, 0.2, 0.1]);
            let mut text = String::new();
            if let ProcessKind::PoissonMultiple { alpha_jump, .. } = spec.kind() {
                text += "x,log_p\n";
                for &x in &grid {
                    text += &format!("{x},{:?}\n", -predict_poisson_tail(*alpha_jump, x)?);
                }
            } else {
                text += "x,log_p,asymptote_log,lower_log,upper_log\n";
                for &x in &grid {
                    let (lo, up) = left_tail_bounds(spec, x, 0.9, 1.1)?;
                    text += &format!(
                        "{x},{:?},{:?},{lo:?},{up:?}\n",
                        predict_left_tail_log(spec, x)?,
                        left_tail_asymptote_log(spec, x)?
                    );
                }
            }
            emit(&cfg, "prediction.csv", text.as_bytes(), out, err)?;
            Ok(EXIT_OK)
        }
        Command::Verify { suite, record_time } => {
            let start = Instant::now();
            let result = run_suite(&suite, &cfg, true);
            let elapsed = start.elapsed().as_secs_f64();
            let _ = writeln!(err, "suite {suite}: {elapsed:.1} s");
            let (mut report, curves, failure) = match result {
                Ok(o) => (o.report, o.curves, None),
                Err(e) => (*e.partial, Vec::new(), Some(e.error)),
            };
            if record_time {
                report.wall_time_s = Some(elapsed);
            }
            emit(&cfg, &format!("{suite}.json"), report.to_json_pretty().as_bytes(), out, err)?;
            if let Some(dir) = &cfg.out_dir {
                for (name, text) in &curves {
                    let path = write_file(Path::new(dir), name, text.as_bytes())?;
                    let _ = writeln!(err, "wrote {}", path.display());
                }
            }
            for c in &report.checks {
                let status = match (c.pass, c.advisory) {
                    (true, _) => "pass",
                    (false, true) => "warn",
                    (false, false) => "FAIL",
                };
                let _ = writeln!(err, "  {status:4} {} (statistic {}, threshold {})", c.name, c.statistic, c.threshold);
            }
            match failure {
                Some(e) => Err(e),
                None if report.overall_pass => Ok(EXIT_OK),
                None => Ok(EXIT_FAIL),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let mut argv = vec!["levy-expfunc"];
        argv.extend_from_slice(args);
        let code = run_with_io(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn config_file(dir: &Path, body: &str) -> String {
        let p = dir.join("c.json");
        std::fs::write(&p, body).unwrap();
        p.display().to_string()
    }

    #[test]
    fn exponent_prints_psi() {
        let dir = tempfile::tempdir().unwrap();
        let c = config_file(dir.path(), r#"{"process":{"kind":"brownian_drift","q":1,"gamma":0.5},"seed":1}"#);
        let (code, out, _) = run(&["exponent", "--config", &c, "--lambda", "2"]);
        assert_eq!(code, 0);
        assert!(out.lines().any(|l| l == "psi,2,1.0"), "{out}");
        assert!(out.lines().any(|l| l == "kappa,,1.0"), "{out}");
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(&["verify", "unknown_suite", "--seed", "1"]).0, 2);
        assert_eq!(run(&["verify", "analytics"]).0, 2);
        assert_eq!(run(&["frobnicate"]).0, 2);
        assert_eq!(run(&["scale", "--seed", "1"]).0, 2);
        assert_eq!(run(&["exponent", "--seed", "1", "--dt", "-1"]).0, 2);
        let dir = tempfile::tempdir().unwrap();
        let c = config_file(dir.path(), r#"{"seed":1,"unknown":3}"#);
        let (code, _, err) = run(&["verify", "analytics", "--config", &c]);
        assert_eq!(code, 2);
        assert!(err.contains("$.unknown"), "{err}");
    }

    #[test]
    fn verify_writes_report() {
        let dir = tempfile::tempdir().unwrap();
        let out_dir = dir.path().join("out");
        let (code, _, _) = run(&["verify", "analytics", "--seed", "3", "--out", out_dir.to_str().unwrap()]);
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(out_dir.join("analytics.json")).unwrap();
        let report: Report = serde_json::from_str(&text).unwrap();
        assert!(report.overall_pass);
        assert_eq!(report.config, serde_json::json!({"seed": 3}));
    }

    #[test]
    fn estimate_and_simulate_write_files() {
        let dir = tempfile::tempdir().unwrap();
        let c = config_file(
            dir.path(),
            r#"{"process":{"kind":"brownian_drift","q":1,"gamma":0.5},"seed":2,"variant":"I_V_up","y":3,"dt":0.01,"n":50}"#,
        );
        let out_dir = dir.path().join("o");
        let o = out_dir.to_str().unwrap();
        assert_eq!(run(&["estimate", "--config", &c, "--out", o]).0, 0);
        let est: crate::expfunc::MCEstimate =
            serde_json::from_str(&std::fs::read_to_string(out_dir.join("estimate.json")).unwrap()).unwrap();
        assert_eq!(est.n, 50);
        let samples = std::fs::read_to_string(out_dir.join("samples.csv")).unwrap();
        assert_eq!(samples.lines().count(), 51);
        assert_eq!(run(&["simulate", "--config", &c, "--out", o, "--conditioned"]).0, 0);
        let path = std::fs::read_to_string(out_dir.join("path.csv")).unwrap();
        assert!(path.starts_with("t,value\n"));
        let (code, out, _) = run(&["predict", "--config", &c, "--x", "0.5,0.1"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 3);
        let (code, out, _) = run(&["scale", "--config", &c, "--x", "1"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("x,W\n1,"));
    }
}
