//! Quantiles of Chernoff's distribution and of the pivotal limit of the
//! likelihood ratio statistic, with the Monte Carlo oracles that produce them.
//!
//! The shipped table lives in `data/quantiles.txt` and is regenerated by
//! `lro quantile-table`.

use std::fmt::Write as _;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{LroError, Result};
use crate::isotonic::pava_values;
use crate::rng;

pub const TABLE_VERSION: u32 = 1;

/// Probability levels tabulated for Chernoff's distribution.
pub const CHERNOFF_LEVELS: &[f64] = &[
    0.005, 0.01, 0.025, 0.05, 0.1, 0.25, 0.5, 0.75, 0.8, 0.9, 0.95, 0.975, 0.99, 0.995,
];

/// Confidence levels tabulated for the likelihood ratio limit.
pub const LRT_LEVELS: &[f64] = &[0.5, 0.75, 0.8, 0.9, 0.95, 0.975, 0.99];

const LEVEL_TOL: f64 = 1e-9;

/// Parameters of the Chernoff oracle: paths of `W(u) - u^2` on `[-T, T]`,
/// simulated on a coarse grid and refined by Brownian-bridge sampling on the
/// intervals that can hold the maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffOracle {
    pub replications: usize,
    pub half_width: f64,
    pub coarse_step: f64,
    pub fine_step: f64,
    /// Intervals whose endpoint values are within this margin of the coarse
    /// maximum are refined.
    pub refine_margin: f64,
}

impl Default for ChernoffOracle {
    fn default() -> Self {
        Self {
            replications: 1_000_000,
            half_width: 2.5,
            coarse_step: 0.01,
            fine_step: 1e-4,
            refine_margin: 0.4,
        }
    }
}

/// Parameters of the likelihood ratio oracle: slopes of the greatest convex
/// minorant of `W(t) + t^2` on `[-T, T]` with and without the constraint that
/// the slope at 0 is 0, on a grid of the given step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrtOracle {
    pub replications: usize,
    pub half_width: f64,
    pub step: f64,
}

impl Default for LrtOracle {
    fn default() -> Self {
        Self {
            replications: 200_000,
            half_width: 3.0,
            step: 1e-3,
        }
    }
}

const CHERNOFF_STREAM: u64 = 0x43;
const LRT_STREAM: u64 = 0x4c;

/// One draw of the location of the maximum of `W(u) - u^2`.
pub fn chernoff_draw<R: Rng>(rng: &mut R, p: &ChernoffOracle) -> f64 {
    let m = (p.half_width / p.coarse_step).round() as usize;
    let h = p.coarse_step;
    let sh = h.sqrt();
    // Brownian motion at u_i = (i - m) h, i = 0..=2m, pinned at u = 0.
    let mut w = vec![0.0f64; 2 * m + 1];
    for i in (m + 1)..=(2 * m) {
        let z: f64 = rng.sample(StandardNormal);
        w[i] = w[i - 1] + sh * z;
    }
    for i in (0..m).rev() {
        let z: f64 = rng.sample(StandardNormal);
        w[i] = w[i + 1] + sh * z;
    }
    let u = |i: usize| (i as f64 - m as f64) * h;
    let x: Vec<f64> = w.iter().enumerate().map(|(i, &wi)| wi - u(i) * u(i)).collect();
    let (mut best_i, mut best) = (m, x[m]);
    for (i, &xi) in x.iter().enumerate() {
        if xi > best {
            best = xi;
            best_i = i;
        }
    }
    let coarse_best = best;
    let mut arg = u(best_i);

    let substeps = (h / p.fine_step).round().max(1.0) as usize;
    let hf = h / substeps as f64;
    for i in 0..(2 * m) {
        if x[i].max(x[i + 1]) < coarse_best - p.refine_margin {
            continue;
        }
        let (mut wc, wb) = (w[i], w[i + 1]);
        for s in 1..substeps {
            let remaining = h - (s - 1) as f64 * hf;
            let mean = wc + (wb - wc) * hf / remaining;
            let sd = (hf * (remaining - hf) / remaining).sqrt();
            let z: f64 = rng.sample(StandardNormal);
            wc = mean + sd * z;
            let t = u(i) + s as f64 * hf;
            let v = wc - t * t;
            if v > best {
                best = v;
                arg = t;
            }
        }
    }
    arg
}

/// One draw of `integral (g^2 - g0^2)`, where `g` is the slope of the
/// greatest convex minorant of `W(t) + t^2` and `g0` the same under the
/// constraint that the slope is `<= 0` left of 0 and `>= 0` right of it.
pub fn lrt_draw<R: Rng>(rng: &mut R, p: &LrtOracle) -> f64 {
    let m = (p.half_width / p.step).round() as usize;
    let dt = p.step;
    let sd = dt.sqrt();
    // Slopes on cells [t_{k-1}, t_k], k = 1..=2m, t_k = (k - m) dt.
    let mut incr = vec![0.0f64; 2 * m];
    for (k, v) in incr.iter_mut().enumerate() {
        let t0 = (k as f64 - m as f64) * dt;
        let t1 = t0 + dt;
        let z: f64 = rng.sample(StandardNormal);
        *v = (sd * z + (t1 * t1 - t0 * t0)) / dt;
    }
    let weights = vec![dt; 2 * m];
    let free = pava_values(&incr, &weights);
    let left = pava_values(&incr[..m], &weights[..m]);
    let right = pava_values(&incr[m..], &weights[m..]);
    let free_sq: f64 = free.iter().map(|g| g * g).sum();
    let con_sq: f64 = left.iter().map(|g| g.min(0.0).powi(2)).sum::<f64>()
        + right.iter().map(|g| g.max(0.0).powi(2)).sum::<f64>();
    (free_sq - con_sq) * dt
}

fn simulate<F>(replications: usize, seed: u64, stream: u64, draw: F) -> Vec<f64>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    let mut out: Vec<f64> = (0..replications as u64)
        .into_par_iter()
        .map(|r| draw(&mut rng::stream(seed, r, stream)))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Type-7 sample quantile of sorted data.
pub fn sample_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Monte Carlo summary of an oracle run.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub quantiles: Vec<(f64, f64)>,
    /// Standard errors of the quantiles, from the binomial bound on the
    /// empirical distribution function inverted through the sample.
    pub standard_errors: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

fn summarize(sorted: &[f64], levels: &[f64]) -> OracleRun {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let sd = (sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let quantiles: Vec<(f64, f64)> = levels.iter().map(|&p| (p, sample_quantile(sorted, p))).collect();
    let standard_errors = levels
        .iter()
        .map(|&p| {
            let half = (p * (1.0 - p) / n).sqrt();
            let lo = sample_quantile(sorted, (p - half).max(0.0));
            let hi = sample_quantile(sorted, (p + half).min(1.0));
            (hi - lo) / 2.0
        })
        .collect();
    OracleRun {
        quantiles,
        standard_errors,
        mean,
        sd,
    }
}

/// Quantiles of Chernoff's distribution at `levels`.
pub fn chernoff_quantiles(levels: &[f64], oracle: &ChernoffOracle, seed: u64) -> OracleRun {
    let draws = simulate(oracle.replications, seed, CHERNOFF_STREAM, |r| chernoff_draw(r, oracle));
    summarize(&draws, levels)
}

/// Quantiles of the pivotal likelihood ratio limit at `levels`.
pub fn lrt_quantiles(levels: &[f64], oracle: &LrtOracle, seed: u64) -> OracleRun {
    let draws = simulate(oracle.replications, seed, LRT_STREAM, |r| lrt_draw(r, oracle));
    summarize(&draws, levels)
}

/// Tabulated quantiles with the oracle settings that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    pub seed: u64,
    pub chernoff_oracle: ChernoffOracle,
    pub lrt_oracle: LrtOracle,
    /// `(p, q_p)` for Chernoff's distribution.
    pub chernoff_q: Vec<(f64, f64)>,
    pub chernoff_se: Vec<f64>,
    pub chernoff_sd: f64,
    /// `(level, d_level)` for the likelihood ratio limit.
    pub lrt_d: Vec<(f64, f64)>,
    pub lrt_se: Vec<f64>,
}

static EMBEDDED: OnceLock<QuantileTable> = OnceLock::new();

impl QuantileTable {
    pub fn generate(seed: u64, chernoff: ChernoffOracle, lrt: LrtOracle) -> Self {
        let c = chernoff_quantiles(CHERNOFF_LEVELS, &chernoff, seed);
        let l = lrt_quantiles(LRT_LEVELS, &lrt, seed);
        Self {
            seed,
            chernoff_oracle: chernoff,
            lrt_oracle: lrt,
            chernoff_q: c.quantiles,
            chernoff_se: c.standard_errors,
            chernoff_sd: c.sd,
            lrt_d: l.quantiles,
            lrt_se: l.standard_errors,
        }
    }

    /// The table shipped with the crate.
    pub fn embedded() -> &'static QuantileTable {
        EMBEDDED.get_or_init(|| {
            Self::parse(include_str!("../../data/quantiles.txt")).expect("embedded quantile table")
        })
    }

    /// `p`-quantile of Chernoff's distribution.
    pub fn chernoff(&self, p: f64) -> Result<f64> {
        lookup(&self.chernoff_q, p).ok_or(LroError::MissingQuantile(p, "chernoff"))
    }

    /// Level-`level` critical value of the likelihood ratio statistic.
    pub fn lrt(&self, level: f64) -> Result<f64> {
        lookup(&self.lrt_d, level).ok_or(LroError::MissingQuantile(level, "lrt"))
    }

    /// True when either oracle ran with fewer replications than the defaults.
    pub fn is_reduced(&self) -> bool {
        self.chernoff_oracle.replications < ChernoffOracle::default().replications
            || self.lrt_oracle.replications < LrtOracle::default().replications
    }

    pub fn to_text(&self) -> String {
        let c = &self.chernoff_oracle;
        let l = &self.lrt_oracle;
        let se975 = self
            .chernoff_q
            .iter()
            .zip(&self.chernoff_se)
            .find(|((p, _), _)| (*p - 0.975).abs() < LEVEL_TOL)
            .map(|(_, se)| *se)
            .unwrap_or(f64::NAN);
        let mut s = String::new();
        s.push_str("# Quantiles of Chernoff's distribution (argmax of W(u) - u^2) and of the\n");
        s.push_str("# pivotal limit of the likelihood ratio statistic for a monotone function.\n");
        s.push_str("# Generated by `lro quantile-table`; do not edit by hand.\n");
        if self.is_reduced() {
            let _ = writeln!(
                s,
                "# WARNING: reduced replication count; expect quantile errors near {:.4} (q0.975 se)",
                se975
            );
        }
        let _ = writeln!(s, "version = {TABLE_VERSION}");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(
            s,
            "precision = {}",
            if self.is_reduced() { "reduced" } else { "full" }
        );
        let _ = writeln!(s, "chernoff.replications = {}", c.replications);
        let _ = writeln!(s, "chernoff.half_width = {}", c.half_width);
        let _ = writeln!(s, "chernoff.coarse_step = {}", c.coarse_step);
        let _ = writeln!(s, "chernoff.fine_step = {}", c.fine_step);
        let _ = writeln!(s, "chernoff.refine_margin = {}", c.refine_margin);
        let _ = writeln!(s, "chernoff.sd = {:.6}", self.chernoff_sd);
        for ((p, q), se) in self.chernoff_q.iter().zip(&self.chernoff_se) {
            let _ = writeln!(s, "chernoff.q.{p} = {q:.6}");
            let _ = writeln!(s, "chernoff.se.{p} = {se:.6}");
        }
        let _ = writeln!(s, "lrt.replications = {}", l.replications);
        let _ = writeln!(s, "lrt.half_width = {}", l.half_width);
        let _ = writeln!(s, "lrt.step = {}", l.step);
        for ((p, d), se) in self.lrt_d.iter().zip(&self.lrt_se) {
            let _ = writeln!(s, "lrt.d.{p} = {d:.6}");
            let _ = writeln!(s, "lrt.se.{p} = {se:.6}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut t = QuantileTable {
            seed: 0,
            chernoff_oracle: ChernoffOracle::default(),
            lrt_oracle: LrtOracle::default(),
            chernoff_q: Vec::new(),
            chernoff_se: Vec::new(),
            chernoff_sd: f64::NAN,
            lrt_d: Vec::new(),
            lrt_se: Vec::new(),
        };
        let mut version = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| LroError::Parse {
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let num = || -> Result<f64> {
                value.parse::<f64>().map_err(|e| err(format!("{key}: {e}")))
            };
            let int = || -> Result<u64> {
                value.parse::<u64>().map_err(|e| err(format!("{key}: {e}")))
            };
            match key {
                "version" => version = Some(int()?),
                "seed" => t.seed = int()?,
                "precision" => {}
                "chernoff.replications" => t.chernoff_oracle.replications = int()? as usize,
                "chernoff.half_width" => t.chernoff_oracle.half_width = num()?,
                "chernoff.coarse_step" => t.chernoff_oracle.coarse_step = num()?,
                "chernoff.fine_step" => t.chernoff_oracle.fine_step = num()?,
                "chernoff.refine_margin" => t.chernoff_oracle.refine_margin = num()?,
                "chernoff.sd" => t.chernoff_sd = num()?,
                "lrt.replications" => t.lrt_oracle.replications = int()? as usize,
                "lrt.half_width" => t.lrt_oracle.half_width = num()?,
                "lrt.step" => t.lrt_oracle.step = num()?,
                _ => {
                    let level = |prefix: &str| -> Option<Result<f64>> {
                        key.strip_prefix(prefix).map(|p| {
                            p.parse::<f64>().map_err(|e| err(format!("bad level in {key}: {e}")))
                        })
                    };
                    if let Some(p) = level("chernoff.q.") {
                        t.chernoff_q.push((p?, num()?));
                    } else if let Some(p) = level("chernoff.se.") {
                        p?;
                        t.chernoff_se.push(num()?);
                    } else if let Some(p) = level("lrt.d.") {
                        t.lrt_d.push((p?, num()?));
                    } else if let Some(p) = level("lrt.se.") {
                        p?;
                        t.lrt_se.push(num()?);
                    } else {
                        return Err(err(format!("unknown key {key}")));
                    }
                }
            }
        }
        match version {
            Some(v) if v == TABLE_VERSION as u64 => {}
            Some(v) => return Err(LroError::Config(format!("unsupported quantile table version {v}"))),
            None => return Err(LroError::Config("quantile table has no version".into())),
        }
        for (name, entries) in [("chernoff", &t.chernoff_q), ("lrt", &t.lrt_d)] {
            if entries.windows(2).any(|w| !(w[0].0 < w[1].0 && w[0].1 <= w[1].1)) {
                return Err(LroError::Config(format!(
                    "{name} quantiles must increase with level"
                )));
            }
        }
        Ok(t)
    }
}

fn lookup(entries: &[(f64, f64)], p: f64) -> Option<f64> {
    entries
        .iter()
        .find(|(level, _)| (level - p).abs() < LEVEL_TOL)
        .map(|&(_, q)| q)
}
