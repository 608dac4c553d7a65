use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::{sample_replication, true_theta, KdeRatio, Model, Scenario, ScenarioKind};
use crate::error::{LroError, Result};
use crate::estimators::{fit_lro, LroFit};
use crate::inference::{
    format_f64, interval, serialize_f64, split_ci, split_fits, Bandwidth, CiMethod,
    InferenceConfig,
};
use crate::rng;

/// Settings of a Monte Carlo study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub scenario: Scenario,
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub level: f64,
    pub methods: Vec<CiMethod>,
    /// Number of subsamples for the split estimator and interval.
    pub split_m: usize,
    /// Whether to include the kernel density ratio comparator.
    pub kde_ratio: bool,
    pub inference: InferenceConfig,
}

impl StudyConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            n_list: vec![500, 1000, 5000, 10_000],
            replications: 500,
            seed: 1,
            level: 0.95,
            methods: Vec::new(),
            split_m: 5,
            kde_ratio: false,
            inference: InferenceConfig::default(),
        }
    }

    /// Parses `key = value` lines; `#` starts a comment. `scenario` must come
    /// first among the scenario keys since it sets their defaults.
    ///
    /// Keys: `scenario`, `pi0`, `lambda_x`, `lambda_y`, `rate_x`, `rate_y`,
    /// `grid`, `n`, `replications`, `seed`, `level`, `methods`, `split_m`,
    /// `kde_ratio`, `derivative_c`, `bandwidth_factor`, `bandwidth`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: Option<StudyConfig> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| LroError::Parse {
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim().to_ascii_lowercase(), v.trim()))
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            if key == "scenario" || key == "kind" {
                let kind: ScenarioKind = value.parse()?;
                cfg = Some(StudyConfig::new(Scenario::from_kind(kind)));
                continue;
            }
            let c = cfg
                .as_mut()
                .ok_or_else(|| err("the scenario key must come first".into()))?;
            let num = |v: &str| v.parse::<f64>().map_err(|e| err(format!("{key}: {e}")));
            let list = |v: &str| -> Result<Vec<f64>> {
                v.split(',').map(|s| num(s.trim())).collect()
            };
            match key.as_str() {
                "pi0" => c.scenario.pi0 = num(value)?,
                "lambda_x" | "lambda_y" | "rate_x" | "rate_y" => {
                    let v = num(value)?;
                    match (&mut c.scenario.model, key.as_str()) {
                        (Model::DiscretePoisson { lambda_x, .. }, "lambda_x") => *lambda_x = v,
                        (Model::DiscretePoisson { lambda_y, .. }, "lambda_y") => *lambda_y = v,
                        (Model::ContinuousExponential { rate_x, .. }, "rate_x") => *rate_x = v,
                        (Model::ContinuousExponential { rate_y, .. }, "rate_y") => *rate_y = v,
                        _ => {
                            return Err(err(format!(
                                "{key} does not apply to the {} scenario",
                                c.scenario.kind()
                            )))
                        }
                    }
                }
                "grid" | "points" => c.scenario.eval_grid = list(value)?,
                "n" => {
                    c.n_list = value
                        .split(',')
                        .map(|s| s.trim().parse::<usize>().map_err(|e| err(format!("n: {e}"))))
                        .collect::<Result<_>>()?
                }
                "replications" | "reps" => {
                    c.replications = value.parse().map_err(|e| err(format!("{key}: {e}")))?
                }
                "seed" => c.seed = value.parse().map_err(|e| err(format!("seed: {e}")))?,
                "level" => c.level = num(value)?,
                "methods" => {
                    c.methods = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?
                }
                "split_m" => c.split_m = value.parse().map_err(|e| err(format!("split_m: {e}")))?,
                "kde_ratio" => {
                    c.kde_ratio = value.parse().map_err(|e| err(format!("kde_ratio: {e}")))?
                }
                "derivative_c" => c.inference.derivative_c = num(value)?,
                "bandwidth_factor" => c.inference.bandwidth = Bandwidth::Silverman(num(value)?),
                "bandwidth" => c.inference.bandwidth = Bandwidth::Fixed(num(value)?),
                _ => return Err(err(format!("unknown key {key}"))),
            }
        }
        let cfg = cfg.ok_or_else(|| LroError::Config("no scenario given".into()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.replications == 0 {
            return Err(LroError::Config("replications must be positive".into()));
        }
        if self.n_list.is_empty() || self.n_list.iter().any(|&n| n < 2) {
            return Err(LroError::Config("sample sizes must be at least 2".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(LroError::Config(format!("level {} is not in (0, 1)", self.level)));
        }
        if self.methods.contains(&CiMethod::Split) && self.split_m < 2 {
            return Err(LroError::Config("split_m must be at least 2".into()));
        }
        Ok(())
    }

    fn split_label(&self) -> String {
        format!("split-m{}", self.split_m)
    }
}

/// One entry of the long-format report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub n: usize,
    /// `None` for per-sample-size summaries.
    pub z: Option<f64>,
    pub method: String,
    pub metric: String,
    #[serde(serialize_with = "serialize_f64")]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub replications: usize,
    pub level: f64,
    pub n_list: Vec<usize>,
    pub eval_grid: Vec<f64>,
    pub methods: Vec<CiMethod>,
    pub split_m: usize,
    pub cells: Vec<Cell>,
}

impl MonteCarloReport {
    pub fn get(&self, n: usize, z: Option<f64>, method: &str, metric: &str) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.n == n && c.z == z && c.method == method && c.metric == metric)
            .map(|c| c.value)
    }

    /// Long format: `scenario,n,z,method,metric,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("scenario,n,z,method,metric,value\n");
        for c in &self.cells {
            let z = c.z.map(format_f64).unwrap_or_default();
            let v = if c.value.is_nan() {
                "nan".to_string()
            } else {
                format_f64(c.value)
            };
            let _ = writeln!(s, "{},{},{},{},{},{}", self.scenario, c.n, z, c.method, c.metric, v);
        }
        s
    }
}

/// Per-replication results at every grid point.
struct Replication {
    fit_failed: bool,
    f_star_is_f_n: bool,
    mle: Vec<f64>,
    kde: Vec<Option<f64>>,
    split: Vec<Option<f64>>,
    intervals: Vec<Vec<Option<(f64, f64)>>>,
}

const SPLIT_SEED_STREAM: u64 = 2;

fn f_star_equals_f_n(fit: &LroFit) -> bool {
    fit.pooled()
        .z()
        .iter()
        .all(|&z| (fit.f_star().cdf(z) - fit.f_n().cdf(z)).abs() <= 1e-12)
}

fn replicate(cfg: &StudyConfig, n: usize, r: u64) -> Replication {
    let grid = &cfg.scenario.eval_grid;
    let nz = grid.len();
    let mut out = Replication {
        fit_failed: true,
        f_star_is_f_n: false,
        mle: vec![f64::NAN; nz],
        kde: vec![None; nz],
        split: vec![None; nz],
        intervals: vec![vec![None; nz]; cfg.methods.len()],
    };
    let Ok(ts) = sample_replication(&cfg.scenario, n, cfg.seed, r) else {
        return out;
    };
    let Ok(fit) = fit_lro(&ts) else {
        return out;
    };
    out.fit_failed = false;
    out.f_star_is_f_n = f_star_equals_f_n(&fit);
    for (k, &z) in grid.iter().enumerate() {
        out.mle[k] = fit.theta(z);
    }
    if cfg.kde_ratio {
        if let Ok(kr) = KdeRatio::new(&ts, cfg.inference.bandwidth) {
            for (k, &z) in grid.iter().enumerate() {
                out.kde[k] = kr.eval(z).ok();
            }
        }
    }
    let wants_split = cfg.methods.contains(&CiMethod::Split);
    let splits = if wants_split {
        let seed = rng::child_seed(cfg.seed, r, ((n as u64) << 16) | SPLIT_SEED_STREAM);
        split_fits(&ts, cfg.split_m, seed).ok()
    } else {
        None
    };
    for (k, &z) in grid.iter().enumerate() {
        let se = splits.as_ref().map(|s| s.estimate(z));
        out.split[k] = se.as_ref().map(|s| s.mean);
        for (mi, &method) in cfg.methods.iter().enumerate() {
            let ci = match method {
                CiMethod::Split => se.as_ref().and_then(|s| split_ci(s, cfg.level).ok()),
                _ => interval(&fit, z, cfg.level, method, &cfg.inference).ok(),
            };
            out.intervals[mi][k] = ci.map(|c| (c.lower, c.upper));
        }
    }
    out
}

#[derive(Default)]
struct PointSummary {
    count: usize,
    infinite: usize,
    bias: f64,
    sd: f64,
    mse: f64,
    median_abs_error: f64,
}

fn summarize_points(values: impl Iterator<Item = f64>, truth: f64) -> PointSummary {
    let mut finite = Vec::new();
    let mut infinite = 0;
    for v in values {
        if v.is_finite() {
            finite.push(v);
        } else if v.is_infinite() {
            infinite += 1;
        }
    }
    let c = finite.len();
    if c == 0 {
        return PointSummary {
            infinite,
            bias: f64::NAN,
            sd: f64::NAN,
            mse: f64::NAN,
            median_abs_error: f64::NAN,
            ..Default::default()
        };
    }
    let mean = finite.iter().sum::<f64>() / c as f64;
    let sd = if c > 1 {
        (finite.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (c - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    let mse = finite.iter().map(|v| (v - truth) * (v - truth)).sum::<f64>() / c as f64;
    let mut abs: Vec<f64> = finite.iter().map(|v| (v - truth).abs()).collect();
    abs.sort_by(f64::total_cmp);
    let median_abs_error = if c % 2 == 1 {
        abs[c / 2]
    } else {
        0.5 * (abs[c / 2 - 1] + abs[c / 2])
    };
    PointSummary {
        count: c,
        infinite,
        bias: mean - truth,
        sd,
        mse,
        median_abs_error,
    }
}

fn aggregate(cfg: &StudyConfig, n: usize, reps: &[Replication], cells: &mut Vec<Cell>) {
    let total = reps.len();
    let mut push = |z: Option<f64>, method: &str, metric: &str, value: f64| {
        cells.push(Cell {
            n,
            z,
            method: method.to_string(),
            metric: metric.to_string(),
            value,
        })
    };
    let fit_failures = reps.iter().filter(|r| r.fit_failed).count();
    let ok = total - fit_failures;
    push(None, "mle", "failures", fit_failures as f64);
    push(
        None,
        "mle",
        "frac_f_star_equals_f_n",
        if ok > 0 {
            reps.iter().filter(|r| r.f_star_is_f_n).count() as f64 / ok as f64
        } else {
            f64::NAN
        },
    );

    let split_label = cfg.split_label();
    for (k, &z) in cfg.scenario.eval_grid.iter().enumerate() {
        let truth = true_theta(&cfg.scenario, z).unwrap_or(f64::NAN);
        let zc = Some(z);
        push(zc, "truth", "theta0", truth);

        let mle = summarize_points(reps.iter().filter(|r| !r.fit_failed).map(|r| r.mle[k]), truth);
        push(zc, "mle", "count", mle.count as f64);
        push(zc, "mle", "infinite", mle.infinite as f64);
        push(zc, "mle", "bias", mle.bias);
        push(zc, "mle", "sd", mle.sd);
        push(zc, "mle", "mse", mle.mse);
        push(zc, "mle", "median_abs_error", mle.median_abs_error);
        if let Some((rate, asd)) = cfg.scenario.asymptotic_sd(z) {
            push(zc, "mle", "asymptotic_sd", asd);
            push(zc, "mle", "sd_ratio", mle.sd * (n as f64).powf(rate) / asd);
        }

        let mut comparator = |label: &str, values: Vec<Option<f64>>| {
            let failures = values.iter().filter(|v| v.is_none()).count();
            let s = summarize_points(values.into_iter().flatten(), truth);
            push(zc, label, "count", s.count as f64);
            push(zc, label, "failures", failures as f64);
            push(zc, label, "bias", s.bias);
            push(zc, label, "sd", s.sd);
            push(zc, label, "mse", s.mse);
            push(zc, label, "mse_ratio", s.mse / mle.mse);
        };
        if cfg.kde_ratio {
            comparator("kde-ratio", reps.iter().map(|r| r.kde[k]).collect());
        }
        if cfg.methods.contains(&CiMethod::Split) {
            comparator(&split_label, reps.iter().map(|r| r.split[k]).collect());
        }

        for (mi, method) in cfg.methods.iter().enumerate() {
            let cis: Vec<(f64, f64)> = reps.iter().filter_map(|r| r.intervals[mi][k]).collect();
            let failures = total - cis.len();
            let covered = cis.iter().filter(|(l, u)| *l <= truth && truth <= *u).count();
            let widths: Vec<f64> = cis.iter().map(|(l, u)| u - l).filter(|w| w.is_finite()).collect();
            let name = method.as_str();
            push(zc, name, "count", cis.len() as f64);
            push(zc, name, "failures", failures as f64);
            push(
                zc,
                name,
                "coverage",
                if cis.is_empty() {
                    f64::NAN
                } else {
                    covered as f64 / cis.len() as f64
                },
            );
            push(
                zc,
                name,
                "mean_width",
                if widths.is_empty() {
                    f64::NAN
                } else {
                    widths.iter().sum::<f64>() / widths.len() as f64
                },
            );
            push(
                zc,
                name,
                "infinite_upper",
                cis.iter().filter(|(_, u)| u.is_infinite()).count() as f64,
            );
        }
    }
}

/// Runs the study. Replications run in parallel; every replication draws
/// from its own random stream, so the report does not depend on scheduling.
pub fn run_study(cfg: &StudyConfig) -> Result<MonteCarloReport> {
    run_study_with(cfg, |_, _| {})
}

/// [`run_study`] calling `progress(done, total)` after each sample size.
pub fn run_study_with<P: Fn(usize, usize)>(cfg: &StudyConfig, progress: P) -> Result<MonteCarloReport> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for (i, &n) in cfg.n_list.iter().enumerate() {
        let reps: Vec<Replication> = (0..cfg.replications as u64)
            .into_par_iter()
            .map(|r| replicate(cfg, n, r))
            .collect();
        aggregate(cfg, n, &reps, &mut cells);
        progress(i + 1, cfg.n_list.len());
    }
    Ok(MonteCarloReport {
        scenario: cfg.scenario.kind(),
        seed: cfg.seed,
        replications: cfg.replications,
        level: cfg.level,
        n_list: cfg.n_list.clone(),
        eval_grid: cfg.scenario.eval_grid.clone(),
        methods: cfg.methods.clone(),
        split_m: cfg.split_m,
        cells,
    })
}
