//! Named verification suites. Each suite draws its samples from streams keyed by the
//! configured seed and a fixed per-pool tag, so reports do not depend on the worker count.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use super::config::RunConfig;
use super::report::Report;
use crate::analysis::{
    check_identity, dkw_band_check, driftless_brownian_cdf, dufresne_cdf, empirical_cdf, empirical_laplace,
    exp_moment_stability, fit_exp_rate, left_tail_bounds, predict_left_tail_log, predict_poisson_tail,
    write_tail_csv, CdfSide, CheckReport, Identity,
};
use crate::error::{domain, Error, Result};
use crate::expfunc::{
    first_passage_remainder, sample_affine_pair, FunctionalSampler, FunctionalVariant, SamplerOptions,
};
use crate::levy_model::{
    brownian_laplace_ref, exponent_summary, inverse_exponent, poisson_log_laplace_ref, psi_conditioned, scale_w,
    ProcessKind, ProcessSpec, ScaleMethod,
};
use crate::par::map_indexed;
use crate::path_sim::{compound_poisson_at_exp_time, RngStream, DEFAULT_DT};

/// Suite names accepted by `verify`, besides `all`.
pub const SUITES: &[&str] = &[
    "analytics",
    "moments",
    "brownian_laplace",
    "affine",
    "convolution",
    "sandwich",
    "left_tail",
    "right_tail",
    "poisson",
    "zside",
    "bounded_variation",
    "subadditivity",
];

// Pool tags. Pools sharing a tag and sampler are prefixes of one another.
const V_UP: u64 = 1;
const DIRECT: u64 = 2;
const PAIRS: u64 = 3;
const SPLIT: u64 = 4;
const SHARP: u64 = 5;
const PLAIN: u64 = 6;
const Z_PLAIN: u64 = 7;
const Z_UP: u64 = 8;
const POISSON: u64 = 9;
const SUBORDINATOR: u64 = 10;

/// Confidence parameter of every DKW band in the suites.
const DELTA: f64 = 0.01;

/// Suite result together with the tail curves it produced, as `(file name, CSV text)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutput {
    pub report: Report,
    pub curves: Vec<(String, String)>,
}

/// A suite that stopped on an error, with the checks completed before it.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteError {
    pub partial: Box<Report>,
    pub error: Error,
}

impl fmt::Display for SuiteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "suite `{}` stopped after {} checks: {}",
            self.partial.suite,
            self.partial.checks.len(),
            self.error
        )
    }
}

impl std::error::Error for SuiteError {}

/// Run a suite and return its report.
pub fn verify_suite(name: &str, config: &RunConfig) -> std::result::Result<Report, SuiteError> {
    run_suite(name, config, true).map(|o| o.report)
}

/// Run a suite. With `reuse_pools`, sample pools are shared with earlier runs in this
/// process that used the same sampler and seed.
pub fn run_suite(name: &str, config: &RunConfig, reuse_pools: bool) -> std::result::Result<SuiteOutput, SuiteError> {
    let mut ctx = Ctx {
        cfg: config,
        reuse: reuse_pools,
        checks: Vec::new(),
        curves: Vec::new(),
        prefix: String::new(),
    };
    let result = if name == "all" {
        SUITES.iter().try_for_each(|s| {
            ctx.prefix = format!("{s}/");
            run_one(s, &mut ctx)
        })
    } else {
        run_one(name, &mut ctx)
    };
    let report = Report::new(name, config.echo(), ctx.checks);
    match result {
        Ok(()) => Ok(SuiteOutput {
            report,
            curves: ctx.curves,
        }),
        Err(error) => Err(SuiteError { partial: Box::new(report), error }),
    }
}

fn run_one(name: &str, ctx: &mut Ctx<'_>) -> Result<()> {
    match name {
        "analytics" => analytics(ctx),
        "moments" => moments(ctx),
        "brownian_laplace" => brownian_laplace(ctx),
        "affine" => affine(ctx),
        "convolution" => convolution(ctx),
        "sandwich" => sandwich(ctx),
        "left_tail" => left_tail(ctx),
        "right_tail" => right_tail(ctx),
        "poisson" => poisson(ctx),
        "zside" => zside(ctx),
        "bounded_variation" => bounded_variation(ctx),
        "subadditivity" => subadditivity(ctx),
        other => Err(Error::Config {
            path: "suite".into(),
            message: format!("unknown suite `{other}`; expected one of {} or all", SUITES.join(", ")),
        }),
    }
}

type Pool = Arc<Vec<f64>>;

fn pool_cache() -> &'static Mutex<HashMap<String, Pool>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Pool>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    reuse: bool,
    checks: Vec<CheckReport>,
    curves: Vec<(String, String)>,
    prefix: String,
}

impl Ctx<'_> {
    fn n(&self, default: u64) -> u64 {
        self.cfg.n.unwrap_or(default)
    }

    fn dt(&self, default: f64) -> f64 {
        self.cfg.dt.unwrap_or(default)
    }

    fn y(&self, default: f64) -> f64 {
        self.cfg.y.unwrap_or(default)
    }

    fn x_grid(&self, default: &[f64]) -> Vec<f64> {
        self.cfg.x_grid.clone().unwrap_or_else(|| default.to_vec())
    }

    fn lambda_grid(&self, default: &[f64]) -> Vec<f64> {
        self.cfg.lambda_grid.clone().unwrap_or_else(|| default.to_vec())
    }

    /// The configured process, or `default` when none is set.
    fn process_or(&self, default: ProcessSpec) -> ProcessSpec {
        self.cfg.process.clone().unwrap_or(default)
    }

    fn seed(&self, tag: u64) -> u64 {
        RngStream::new(self.cfg.seed, 0).derive(tag).seed
    }

    /// First `n` draws of the pool `key`, generated by `make(n, seed)` unless a long
    /// enough run of the same pool is cached.
    fn pool_with(&self, key: String, tag: u64, n: u64, make: impl FnOnce(u64, u64) -> Result<Vec<f64>>) -> Result<Pool> {
        let seed = self.seed(tag);
        let key = format!("{key}|{seed}");
        if self.reuse {
            let cache = pool_cache().lock().expect("pool cache");
            if let Some(p) = cache.get(&key).filter(|p| p.len() as u64 >= n) {
                return Ok(if p.len() as u64 == n {
                    p.clone()
                } else {
                    Arc::new(p[..n as usize].to_vec())
                });
            }
        }
        let pool = Arc::new(make(n, seed)?);
        if self.reuse {
            pool_cache().lock().expect("pool cache").insert(key, pool.clone());
        }
        Ok(pool)
    }

    fn pool(&self, tag: u64, sampler: &FunctionalSampler, n: u64) -> Result<Pool> {
        let workers = self.cfg.workers;
        self.pool_with(format!("{sampler:?}"), tag, n, |n, seed| sampler.sample_many(n, seed, workers))
    }

    fn push(&mut self, mut r: CheckReport) {
        r.name = format!("{}{}", self.prefix, r.name);
        self.checks.push(r);
    }

    fn curve(&mut self, name: &str, text: String) {
        self.curves.push((format!("{}{name}", self.prefix.replace('/', "_")), text));
    }
}

fn linspace(a: f64, b: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| a + (b - a) * i as f64 / (points - 1) as f64)
        .collect()
}

fn brownian_kappa_1() -> ProcessSpec {
    ProcessSpec::brownian_kappa(1.0).expect("catalog spec")
}

fn analytics(ctx: &mut Ctx<'_>) -> Result<()> {
    let specs = [
        ProcessSpec::brownian_kappa(0.0)?,
        ProcessSpec::brownian_kappa(1.0)?,
        ProcessSpec::brownian(1.0, -0.5)?,
        ProcessSpec::stable(1.0, 1.5, 0.0)?,
        ProcessSpec::stable(1.0, 1.5, -0.5)?,
        ProcessSpec::stable(1.0, 1.8, 0.3)?,
        ProcessSpec::bv_drift_cpp(1.0, 1.0, 1.0)?,
        ProcessSpec::bv_drift_cpp(2.0, 1.0, 0.5)?,
    ];
    // 4 points per decade on [1e-3, 1e6]
    let grid: Vec<f64> = (0..=36).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect();
    let mut worst = 0.0f64;
    for spec in &specs {
        for &x in &grid {
            let back = psi_conditioned(spec, inverse_exponent(spec, x)?)?;
            worst = worst.max((back - x).abs() / x);
        }
    }
    let mut r = CheckReport::new(
        "inverse_exponent_identity",
        worst,
        1e-9,
        worst <= 1e-9,
        "psi_sharp(Phi(x)) = x",
    );
    r.insert("specs", specs.len() as f64);
    r.insert("grid_points", grid.len() as f64);
    ctx.push(r);

    let mut worst = 0.0f64;
    for kappa in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0] {
        let got = exponent_summary(&ProcessSpec::brownian_kappa(kappa)?)?.kappa;
        worst = worst.max((got - kappa).abs());
    }
    ctx.push(CheckReport::new(
        "kappa_exact",
        worst,
        1e-12,
        worst <= 1e-12,
        "kappa is the largest root of psi; 2*gamma/q for Brownian motion",
    ));

    let mut worst = 0.0f64;
    for spec in [
        ProcessSpec::brownian_kappa(0.0)?,
        ProcessSpec::brownian_kappa(1.0)?,
        ProcessSpec::stable(1.0, 1.5, 0.0)?,
    ] {
        for x in [0.1, 0.5, 1.0, 2.0, 4.0] {
            let closed = scale_w(&spec, x, ScaleMethod::ClosedForm)?;
            let numeric = scale_w(&spec, x, ScaleMethod::NumericInversion)?;
            worst = worst.max((numeric - closed).abs() / closed);
        }
    }
    ctx.push(CheckReport::new(
        "scale_numeric_vs_closed",
        worst,
        1e-6,
        worst <= 1e-6,
        "the Laplace transform of W is 1/psi",
    ));
    Ok(())
}

/// The `I(V↑)` pool at truncation level `y`, shared by the moment, Laplace and sandwich suites.
fn v_up_pool(ctx: &Ctx<'_>, spec: &ProcessSpec, y: f64, dt: f64, n: u64) -> Result<(Pool, FunctionalSampler)> {
    let sampler = FunctionalSampler::new(spec, FunctionalVariant::I_V_up, y, dt)?;
    Ok((ctx.pool(V_UP, &sampler, n)?, sampler))
}

fn moments(ctx: &mut Ctx<'_>) -> Result<()> {
    let spec = ctx.process_or(brownian_kappa_1());
    let (y, dt, n) = (ctx.y(10.0), ctx.dt(DEFAULT_DT), ctx.n(200_000));
    let (pool, sampler) = v_up_pool(ctx, &spec, y, dt, n)?;
    let bias = sampler.bias_bound()?;
    let est = crate::expfunc::summarize(&pool, bias, dt);
    let target = 1.0 / exponent_summary(&spec)?.psi_at_kappa_plus_1;
    let tolerance = 3.0 * est.stderr + bias;
    let gap = (est.mean - target).abs();
    let mut r = CheckReport::new(
        "first_moment",
        gap,
        tolerance,
        gap <= tolerance && est.stderr < 0.01,
        "E[I(V-up)] = 1/psi(kappa + 1)",
    );
    r.insert("mean", est.mean);
    r.insert("stderr", est.stderr);
    r.insert("target", target);
    r.insert("bias_bound", bias);
    r.insert("max_stderr", 0.01);
    r.insert("n", n as f64);
    r.insert("dt", dt);
    if let Some(res) = sampler.residual_bound() {
        r.insert("residual_bound", res);
    }
    ctx.push(r);
    ctx.push(check_identity(&Identity::Moments {
        samples: &pool,
        orders: &[2, 3, 4],
    })?);
    ctx.push(check_identity(&Identity::LogConcavity {
        samples: &pool,
        p_low: 0.01,
        p_high: 0.99,
        points: 20,
    })?);
    Ok(())
}

fn brownian_laplace(ctx: &mut Ctx<'_>) -> Result<()> {
    let spec = ctx.process_or(brownian_kappa_1());
    let Some((q, gamma)) = spec.gaussian_params() else {
        return Err(Error::Config {
            path: "$.process".into(),
            message: "brownian_laplace needs a Brownian process".into(),
        });
    };
    // V(t) = W_κ(qt) with κ = 2γ/q, so I(V↑) = I(W_κ↑)/q
    let kappa = exponent_summary(&spec)?.kappa;
    let (y, dt, n) = (ctx.y(10.0), ctx.dt(DEFAULT_DT), ctx.n(200_000));
    let (pool, _) = v_up_pool(ctx, &spec, y, dt, n)?;
    for lambda in ctx.lambda_grid(&[0.5, 1.0, 2.0]) {
        let (m, se) = empirical_laplace(&pool, lambda)?;
        let target = brownian_laplace_ref(kappa, lambda / q)?;
        let gap = (m - target).abs();
        let mut r = CheckReport::new(
            &format!("laplace_lambda_{lambda}"),
            gap,
            3.0 * se,
            gap <= 3.0 * se,
            "E[exp(-lambda I(V-up))] for Brownian motion: modified Bessel series",
        );
        r.insert("empirical", m);
        r.insert("reference", target);
        r.insert("stderr", se);
        r.insert("gamma", gamma);
        ctx.push(r);
    }
    Ok(())
}

fn affine(ctx: &mut Ctx<'_>) -> Result<()> {
    let spec = ctx.process_or(brownian_kappa_1());
    let (y, dt, n) = (ctx.y(3.0), ctx.dt(DEFAULT_DT), ctx.n(20_000));
    let workers = ctx.cfg.workers;
    let key = format!("affine|{}|{y}|{dt}", spec.to_json());
    let reconstructed = ctx.pool_with(key, PAIRS, n, |n, seed| {
        let out = map_indexed(n, workers, || (), |_, i| {
            sample_affine_pair(&spec, y, dt, RngStream::new(seed, i)).map(|(a, tail)| a + (-y).exp() * tail)
        });
        crate::expfunc::collect_partial(out)
    })?;
    let direct_sampler = FunctionalSampler::new(&spec, FunctionalVariant::I_V_up, crate::expfunc::AFFINE_TAIL_LEVEL, dt)?;
    let direct = ctx.pool(DIRECT, &direct_sampler, n)?;
    let mut r = check_identity(&Identity::Affine {
        reconstructed: &reconstructed,
        direct: &direct,
    })?;
    r.insert("y", y);
    ctx.push(r);
    Ok(())
}

fn convolution(ctx: &mut Ctx<'_>) -> Result<()> {
    let spec = ctx.process_or(brownian_kappa_1());
    let (y, dt, n) = (ctx.y(10.0), ctx.dt(DEFAULT_DT), ctx.n(20_000));
    let split = ctx.pool(SPLIT, &FunctionalSampler::new(&spec, FunctionalVariant::S_T_sharp, y, dt)?, n)?;
    let (up, _) = v_up_pool(ctx, &spec, y, dt, n)?;
    let sharp = ctx.pool(SHARP, &FunctionalSampler::new(&spec, FunctionalVariant::I_V_sharp, y, dt)?, n)?;
    let sum: Vec<f64> = split.iter().zip(up.iter()).map(|(s, i)| s + i).collect();
    let mut r = check_identity(&Identity::Convolution {
        sum: &sum,
        direct: &sharp,
    })?;
    r.insert("y", y);
    ctx.push(r);
    Ok(())
}

fn sandwich(ctx: &mut Ctx<'_>) -> Result<()> {
    // V = B + t/2. Its V↑ has the law of V↑ for B − t/2 (κ = 1), and both samplers step
    // the same conditioned process, so the κ = 1 pool is reused.
    let plain_spec = ProcessSpec::brownian(1.0, -0.5)?;
    let (y, dt, n) = (ctx.y(10.0), ctx.dt(DEFAULT_DT), ctx.n(200_000));
    let (up, _) = v_up_pool(ctx, &brownian_kappa_1(), y, dt, n)?;
    let grid = ctx.x_grid(&linspace(0.2, 3.0, 15));
    let exact = |x: f64| dufresne_cdf(x);
    let mut r = check_identity(&Identity::Sandwich {
        plain: CdfSide::Exact(&exact),
        conditioned: CdfSide::Samples(&up),
        grid: &grid,
        delta: DELTA,
    })?;
    r.insert("delta", DELTA);
    ctx.push(r);

    let brute_n = ctx.n(20_000);
    let brute = ctx.pool(PLAIN, &FunctionalSampler::new(&plain_spec, FunctionalVariant::I_V, 15.0, dt)?, brute_n)?;
    ctx.push(dkw_band_check(
        "dufresne_brute_force",
        &brute,
        dufresne_cdf,
        &grid,
        DELTA,
        "I(B + t/2) = 2/Exp(1) in law",
    )?);
    Ok(())
}

fn left_tail(ctx: &mut Ctx<'_>) -> Result<()> {
    let spec = ProcessSpec::brownian(1.0, 0.0)?;
    let (y, dt, n) = (ctx.y(25.0), ctx.dt(1e-2), ctx.n(1_000_000));
    let mut grid = ctx.x_grid(&[1.0, 0.7, 0.5, 0.4, 0.3]);
    grid.sort_by(|a, b| b.total_cmp(a));
    let cap = grid[0];
    let options = SamplerOptions {
        algo: None,
        cap: Some(cap),
    };
    let sampler = FunctionalSampler::with_options(&spec, FunctionalVariant::I_V_up, y, dt, options)?;
    let pool = ctx.pool(V_UP, &sampler, n)?;
    let band = empirical_cdf(&pool)?;
    let metric = |x: f64| -> f64 { x * -band.cdf(x).ln() };
    let metrics: Vec<f64> = grid.iter().map(|&x| metric(x)).collect();
    let x_min = *grid.last().expect("non-empty grid");
    let at_min = *metrics.last().expect("non-empty grid");

    let mut r = CheckReport::new(
        "left_tail_window",
        at_min,
        2.6,
        (1.4..=2.6).contains(&at_min),
        "x·(-log P(I(V-up) <= x)) -> 2 as x -> 0 for Brownian motion",
    );
    r.insert("x", x_min);
    r.insert("window_low", 1.4);
    r.insert("window_high", 2.6);
    r.insert("limit", 2.0);
    let bias = first_passage_remainder(&spec, y)?;
    r.insert("truncation_remainder_mean", bias);
    ctx.push(r);

    let drop = metrics.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
    let mut r = CheckReport::new(
        "left_tail_trend",
        drop,
        0.0,
        drop <= 0.0 && metrics.iter().all(|m| m.is_finite()),
        "x·(-log P(I(V-up) <= x)) increases toward 2 as x decreases",
    );
    r.insert_value("x_grid", serde_json::json!(grid));
    r.insert_value(
        "metrics",
        serde_json::Value::Array(metrics.iter().map(|&m| crate::analysis::real::to_value(m)).collect()),
    );
    ctx.push(r);

    // the driftless Brownian law is known exactly; this reports how far truncation and
    // discretisation move the estimate
    let mut worst = 0.0f64;
    let mut exact_metrics = Vec::new();
    for &x in &grid {
        let exact = driftless_brownian_cdf(x);
        exact_metrics.push(x * -exact.ln());
        worst = worst.max((band.cdf(x) / exact - 1.0).abs());
    }
    let mut r = CheckReport::new(
        "left_tail_exact_law",
        worst,
        0.25,
        worst <= 0.25,
        "P(I(V-up) <= x) for Brownian motion from the Bessel-zero series",
    )
    .advisory();
    r.insert_value("exact_metrics", serde_json::json!(exact_metrics));
    ctx.push(r);

    let mut worst = f64::NEG_INFINITY;
    for &x in &grid {
        let (lo, up) = left_tail_bounds(&spec, x, 0.9, 1.1)?;
        let log_p = band.cdf(x).ln();
        worst = worst.max((lo - log_p).max(log_p - up));
    }
    ctx.push(
        CheckReport::new(
            "left_tail_bounds",
            worst,
            0.0,
            worst <= 0.0,
            "power-law bounds on log P(I(V-up) <= x), constants set to 1",
        )
        .advisory(),
    );

    let curve_grid = linspace(0.25, cap, 16);
    let mut text = Vec::new();
    write_tail_csv(&mut text, &band, &curve_grid, DELTA, |x| {
        predict_left_tail_log(&spec, x).map(f64::exp).unwrap_or(f64::NAN)
    })
    .map_err(|e| Error::Data(e.to_string()))?;
    ctx.curve("left_tail.csv", String::from_utf8(text).expect("utf-8"));
    Ok(())
}

fn right_tail(ctx: &mut Ctx<'_>) -> Result<()> {
    let spec = brownian_kappa_1();
    let (y, dt, n) = (ctx.y(10.0), ctx.dt(1e-2), ctx.n(1_000_000));
    let (pool, _) = v_up_pool(ctx, &spec, y, dt, n)?;
    let band = empirical_cdf(&pool)?;
    // the upper decade of the survival function, from 1e-2 down to 1e-3
    let grid = linspace(band.quantile(0.99), band.quantile(0.999), 10);
    let fit = fit_exp_rate(&pool, &grid)?;
    let psi_1 = exponent_summary(&spec)?.psi_at_kappa_plus_1;

    let mut r = CheckReport::new(
        "right_tail_linearity",
        fit.r_squared,
        0.98,
        fit.r_squared >= 0.98,
        "log P(I(V-up) > x) is asymptotically linear in x",
    );
    r.insert("x_low", grid[0]);
    r.insert("x_high", grid[grid.len() - 1]);
    ctx.push(r);

    let mut r = CheckReport::new(
        "right_tail_rate",
        fit.rate,
        2.7,
        (1.0..=2.7).contains(&fit.rate),
        "exp(-K1 x) <= P(I(V-up) > x) <= exp(-K2 x) with K2 < psi(kappa + 1)",
    );
    r.insert("rate_low", 1.0);
    r.insert("rate_stderr", fit.rate_stderr);
    r.insert("psi_kappa_plus_1", psi_1);
    // first Bessel-J1 zero squared over 8: the exact decay rate for this spec
    r.insert("bessel_rate", 1.835_246);
    ctx.push(r);

    let curve_grid = linspace(band.quantile(0.5), band.quantile(0.9999), 20);
    let mut text = Vec::new();
    write_tail_csv(&mut text, &band, &curve_grid, DELTA, |x| 1.0 - (-psi_1 * x).exp())
        .map_err(|e| Error::Data(e.to_string()))?;
    ctx.curve("right_tail.csv", String::from_utf8(text).expect("utf-8"));
    Ok(())
}

fn poisson(ctx: &mut Ctx<'_>) -> Result<()> {
    let spec = ProcessSpec::poisson_multiple(1.0, 1.0)?;
    let ProcessKind::PoissonMultiple { alpha_jump, rate } = *spec.kind() else {
        unreachable!()
    };
    let variant = FunctionalVariant::poisson_default(alpha_jump);
    let sampler = FunctionalSampler::new(&spec, variant, 1.0, 1.0)?;
    let n_laplace = ctx.n(100_000);
    let n_tail = ctx.n(1_000_000);
    let pool = ctx.pool(POISSON, &sampler, n_laplace.max(n_tail))?;

    for lambda in ctx.lambda_grid(&[0.5, 1.0, 2.0, 5.0]) {
        let (m, se) = empirical_laplace(&pool[..n_laplace as usize], lambda)?;
        let target = (-poisson_log_laplace_ref(alpha_jump, rate, lambda)?.value).exp();
        let gap = (m - target).abs();
        let mut r = CheckReport::new(
            &format!("poisson_laplace_lambda_{lambda}"),
            gap,
            3.0 * se,
            gap <= 3.0 * se,
            "E[exp(-lambda I(alpha N))] = prod_k 1/(1 + (lambda/p) exp(-alpha k))",
        );
        r.insert("empirical", m);
        r.insert("reference", target);
        ctx.push(r);
    }

    for (lambda, tol) in [(1e6, 0.02), (1e12, 0.005)] {
        let exact = poisson_log_laplace_ref(alpha_jump, rate, lambda)?.value;
        let asymptote = lambda.ln().powi(2) / (2.0 * alpha_jump);
        let dev = (exact / asymptote - 1.0).abs();
        let mut r = CheckReport::new(
            &format!("poisson_asymptote_lambda_{lambda:e}"),
            dev,
            tol,
            dev <= tol,
            "-log E[exp(-lambda I(alpha N))] ~ (log lambda)^2/(2 alpha)",
        );
        r.insert("exact", exact);
        r.insert("asymptote", asymptote);
        ctx.push(r);
    }

    let x = 0.05;
    let band = empirical_cdf(&pool[..n_tail as usize])?;
    let p = band.cdf(x);
    let ratio = -p.ln() / predict_poisson_tail(alpha_jump, x)?;
    let mut r = CheckReport::new(
        "poisson_left_tail",
        ratio,
        1.4,
        (0.6..=1.4).contains(&ratio),
        "-log P(I(alpha N) <= x) ~ (log x)^2/(2 alpha) as x -> 0",
    );
    r.insert("x", x);
    r.insert("ecdf", p);
    r.insert("window_low", 0.6);
    ctx.push(r);
    Ok(())
}

fn zside(ctx: &mut Ctx<'_>) -> Result<()> {
    // Z = B + t/2, the dual of B − t/2
    let spec = ProcessSpec::dual_of(brownian_kappa_1())?;
    let (y, dt, n) = (ctx.y(10.0), ctx.dt(DEFAULT_DT), ctx.n(50_000));
    let plain = ctx.pool(Z_PLAIN, &FunctionalSampler::new(&spec, FunctionalVariant::I_Z, y, dt)?, n)?;
    let up = ctx.pool(Z_UP, &FunctionalSampler::new(&spec, FunctionalVariant::I_Z_up, y, dt)?, n)?;
    let grid = ctx.x_grid(&linspace(0.2, 5.0, 25));
    let mut r = check_identity(&Identity::StochasticOrder {
        plain: &plain,
        conditioned: &up,
        grid: &grid,
        delta: DELTA,
    })?;
    r.insert("delta", DELTA);
    ctx.push(r);
    ctx.push(dkw_band_check(
        "z_dufresne",
        &plain,
        dufresne_cdf,
        &grid,
        DELTA,
        "I(B + t/2) = 2/Exp(1) in law",
    )?);
    let n_small = 10_000.min(up.len());
    ctx.push(exp_moment_stability(&up, 0.2, n_small, 0.05)?);
    Ok(())
}

fn bounded_variation(ctx: &mut Ctx<'_>) -> Result<()> {
    let (gamma_star, jump_rate, jump_mean) = (1.0, 1.0, 1.0);
    let spec = ProcessSpec::bv_drift_cpp(gamma_star, jump_rate, jump_mean)?;
    let (y, dt, n) = (ctx.y(10.0), ctx.dt(DEFAULT_DT), ctx.n(10_000));
    let (pool, _) = v_up_pool(ctx, &spec, y, dt, n)?;
    ctx.push(check_identity(&Identity::Support {
        samples: &pool,
        gamma_star,
        tolerance: 0.02,
    })?);
    Ok(())
}

fn subadditivity(ctx: &mut Ctx<'_>) -> Result<()> {
    let (jump_rate, jump_mean) = (1.0, 1.0);
    let n = ctx.n(100_000);
    let grid = ctx.x_grid(&[0.25, 0.5, 1.0, 2.0, 4.0]);
    if grid.len() < 2 {
        return Err(domain("subadditivity needs at least 2 grid points"));
    }
    let workers = ctx.cfg.workers;
    let key = format!("subordinator|{jump_rate}|{jump_mean}");
    let pool = ctx.pool_with(key, SUBORDINATOR, n, |n, seed| {
        let out = map_indexed(n, workers, || (), |_, i| {
            compound_poisson_at_exp_time(jump_rate, jump_mean, RngStream::new(seed, i))
        });
        crate::expfunc::collect_partial(out)
    })?;
    let mut r = check_identity(&Identity::Subadditivity {
        samples: &pool,
        grid: &grid,
    })?;
    r.insert("jump_rate", jump_rate);
    r.insert("jump_mean", jump_mean);
    ctx.push(r);
    Ok(())
}
