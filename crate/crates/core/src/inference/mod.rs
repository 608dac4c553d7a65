//! Pointwise confidence intervals for the density ratio `theta(z)`.
//!
//! * [`discrete_wald_ci`]: normal interval on the log scale at an atom of `G`.
//! * [`theta_wald_ci`]: cube-root Wald interval with Chernoff quantiles.
//! * [`mu_wald_transformed_ci`]: Wald interval for `mu(z)`, mapped through
//!   the odds transform.
//! * [`lrt_ci`]: inversion of the likelihood ratio test for `theta(z)`.
//! * [`split_ci`]: Student-t interval from sample-splitting estimates.

mod kde;
pub mod quantiles;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{LroError, Result};
use crate::estimators::{fit_lro, inverse_odds, odds, LroFit, TwoSample};
use crate::isotonic::pava_values;
use crate::rng;

pub use kde::{Bandwidth, Kde};
pub use quantiles::QuantileTable;

/// Serializes non-finite floats as the strings `"inf"`, `"-inf"` and `"nan"`.
pub fn serialize_f64<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

fn serialize_f64_map<S: Serializer>(
    m: &BTreeMap<String, f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    struct F(f64);
    impl Serialize for F {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            serialize_f64(&self.0, s)
        }
    }
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(k, &F(*v))?;
    }
    map.end()
}

/// Formats a float for text output, writing `inf` for `+inf`.
pub fn format_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiMethod {
    DiscreteWald,
    ThetaWald,
    MuWaldTransformed,
    Lrt,
    Split,
}

impl CiMethod {
    pub const ALL: [CiMethod; 5] = [
        CiMethod::DiscreteWald,
        CiMethod::ThetaWald,
        CiMethod::MuWaldTransformed,
        CiMethod::Lrt,
        CiMethod::Split,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CiMethod::DiscreteWald => "discrete-wald",
            CiMethod::ThetaWald => "theta-wald",
            CiMethod::MuWaldTransformed => "mu-wald-transformed",
            CiMethod::Lrt => "lrt",
            CiMethod::Split => "split",
        }
    }
}

impl fmt::Display for CiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CiMethod {
    type Err = LroError;

    fn from_str(s: &str) -> Result<Self> {
        CiMethod::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                LroError::InvalidInput(format!(
                    "unknown interval method {s:?}; expected one of discrete-wald, theta-wald, \
                     mu-wald-transformed, lrt, split"
                ))
            })
    }
}

/// A confidence interval for `theta(z)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalEstimate {
    pub z: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub estimate: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub lower: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub upper: f64,
    pub level: f64,
    pub method: CiMethod,
    /// Plug-in quantities used to build the interval.
    #[serde(serialize_with = "serialize_f64_map")]
    pub nuisances: BTreeMap<String, f64>,
}

impl IntervalEstimate {
    fn new(z: f64, estimate: f64, lower: f64, upper: f64, level: f64, method: CiMethod) -> Self {
        Self {
            z,
            estimate,
            lower: lower.max(0.0),
            upper: upper.max(lower.max(0.0)),
            level,
            method,
            nuisances: BTreeMap::new(),
        }
    }

    fn with(mut self, name: &str, value: f64) -> Self {
        self.nuisances.insert(name.to_string(), value);
        self
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.lower <= theta && theta <= self.upper
    }
}

/// Tuning constants for the nuisance estimators and the test inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceConfig {
    /// Half-window of the difference quotients is `c n^(-1/5)` times the data range.
    pub derivative_c: f64,
    pub bandwidth: Bandwidth,
    pub lrt_tol: f64,
    pub lrt_max_iter: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            derivative_c: 0.5,
            bandwidth: Bandwidth::default(),
            lrt_tol: 1e-6,
            lrt_max_iter: 100,
        }
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(LroError::InvalidInput(format!("confidence level {level} is not in (0, 1)")))
    }
}

fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

/// Upper `p` quantile of Student's t with `df` degrees of freedom.
pub fn student_t_quantile(p: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("valid t distribution").inverse_cdf(p)
}

/// Asymptotic variance of `sqrt(n) (theta* - theta)` at an atom, with masses
/// `df`, `dg` and sampling fraction `pi`.
pub fn discrete_variance(theta: f64, df: f64, dg: f64, pi: f64) -> f64 {
    theta * (pi * df + (1.0 - pi) * dg - df * dg) / (pi * (1.0 - pi) * dg * dg)
}

/// Wald interval at an atom of `G`, built for `log theta` and exponentiated.
pub fn discrete_wald_ci(fit: &LroFit, z: f64, level: f64) -> Result<IntervalEstimate> {
    check_level(level)?;
    let df = fit.f_star().mass_at(z);
    let dg = fit.g_star().mass_at(z);
    if dg <= 0.0 {
        return Err(LroError::UndefinedVariance(z));
    }
    let theta = fit.theta(z);
    let n = fit.n() as f64;
    let v = discrete_variance(theta, df, dg, fit.pi_n());
    let q = normal_quantile(0.5 + level / 2.0);
    let (lower, upper) = if theta > 0.0 {
        let se = (v / n).sqrt() / theta;
        (theta * (-q * se).exp(), theta * (q * se).exp())
    } else {
        (0.0, 0.0)
    };
    Ok(IntervalEstimate::new(z, theta, lower, upper, level, CiMethod::DiscreteWald)
        .with("variance", v)
        .with("mass_f", df)
        .with("mass_g", dg))
}

/// `theta(z) -+ (4 tau / n)^(1/3) q_(1 - alpha/2)`, clamped at 0.
pub fn theta_wald_ci(fit: &LroFit, z: f64, level: f64, tau: f64) -> Result<IntervalEstimate> {
    check_level(level)?;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(LroError::InvalidInput(format!("tau must be finite and non-negative, got {tau}")));
    }
    let q = QuantileTable::embedded().chernoff(0.5 + level / 2.0)?;
    let theta = fit.theta(z);
    let half = (4.0 * tau / fit.n() as f64).cbrt() * q;
    Ok(IntervalEstimate::new(z, theta, theta - half, theta + half, level, CiMethod::ThetaWald)
        .with("tau_n", tau)
        .with("chernoff_q", q))
}

/// Plug-in estimate of the scale `tau = kappa theta'` in the cube-root limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauEstimate {
    pub tau: f64,
    pub kappa: f64,
    pub theta_prime: f64,
    pub f_hat: f64,
    pub g_hat: f64,
    /// Half-width of the difference-quotient window.
    pub window: f64,
}

/// `kappa = theta (pi f + (1 - pi) g) / (pi (1 - pi) g^2)`.
pub fn kappa(theta: f64, f: f64, g: f64, pi: f64) -> f64 {
    theta * (pi * f + (1.0 - pi) * g) / (pi * (1.0 - pi) * g * g)
}

fn check_interior(fit: &LroFit, z: f64) -> Result<()> {
    let zs = fit.pooled().z();
    let (lo, hi) = (zs[0], zs[zs.len() - 1]);
    if z > lo && z < hi {
        Ok(())
    } else {
        Err(LroError::UnsupportedPoint {
            z,
            reason: format!("not inside the pooled data range ({lo}, {hi})"),
        })
    }
}

/// Symmetric window `[z - b, z + b]`, `b = c n^(-1/5) range`, clipped to
/// `[min z, max y]`.
fn derivative_window(fit: &LroFit, z: f64, c: f64) -> Result<(f64, f64, f64)> {
    let zs = fit.pooled().z();
    let range = zs[zs.len() - 1] - zs[0];
    let b = c * (fit.n() as f64).powf(-0.2) * range;
    let lo = (z - b).max(zs[0]);
    let hi = (z + b).min(fit.pooled().y_max());
    if !(hi > lo) {
        return Err(LroError::UndefinedNuisance {
            z,
            reason: "empty difference-quotient window".into(),
        });
    }
    Ok((lo, hi, b))
}

fn weighted_kde(fit: &LroFit, weights: impl Iterator<Item = u64>, bw: Bandwidth) -> Option<Kde> {
    Kde::new(fit.pooled().z().to_vec(), weights.map(|c| c as f64).collect(), bw)
}

pub fn estimate_tau(fit: &LroFit, z: f64, cfg: &InferenceConfig) -> Result<TauEstimate> {
    check_interior(fit, z)?;
    let p = fit.pooled();
    let undefined = |reason: &str| LroError::UndefinedNuisance {
        z,
        reason: reason.to_string(),
    };
    let f_kde = weighted_kde(fit, p.d_count().iter().copied(), cfg.bandwidth)
        .ok_or_else(|| undefined("no bandwidth for the x density"))?;
    let g_kde = weighted_kde(fit, (0..p.len()).map(|k| p.y_count(k)), cfg.bandwidth)
        .ok_or_else(|| undefined("no bandwidth for the y density"))?;
    let (f_hat, g_hat) = (f_kde.density(z), g_kde.density(z));
    if !(g_hat > 0.0) {
        return Err(undefined("estimated y density is zero"));
    }
    let theta = fit.theta(z);
    if !theta.is_finite() {
        return Err(undefined("theta estimate is infinite"));
    }
    let (lo, hi, window) = derivative_window(fit, z, cfg.derivative_c)?;
    let theta_prime = ((fit.theta(hi) - fit.theta(lo)) / (hi - lo)).max(0.0);
    let kappa = kappa(theta, f_hat, g_hat, fit.pi_n());
    Ok(TauEstimate {
        tau: kappa * theta_prime,
        kappa,
        theta_prime,
        f_hat,
        g_hat,
        window,
    })
}

/// [`theta_wald_ci`] with `tau` from [`estimate_tau`].
pub fn theta_wald_ci_plugin(
    fit: &LroFit,
    z: f64,
    level: f64,
    cfg: &InferenceConfig,
) -> Result<IntervalEstimate> {
    let t = estimate_tau(fit, z, cfg)?;
    Ok(theta_wald_ci(fit, z, level, t.tau)?
        .with("kappa_n", t.kappa)
        .with("theta_prime_n", t.theta_prime)
        .with("f_hat", t.f_hat)
        .with("g_hat", t.g_hat))
}

/// Maps an interval for `mu(z)` to one for `theta(z)` via `odds(u) / odds(pi)`.
pub fn mu_to_theta_interval(lower_mu: f64, upper_mu: f64, pi: f64) -> (f64, f64) {
    let s = odds(pi);
    (
        odds(lower_mu.clamp(0.0, 1.0)) / s,
        odds(upper_mu.clamp(0.0, 1.0)) / s,
    )
}

/// Wald interval for `mu(z) = P(D = 1 | Z = z)` with half-width
/// `(4 mu' mu (1 - mu) / (h n))^(1/3) q`, mapped to the `theta` scale.
pub fn mu_wald_transformed_ci(
    fit: &LroFit,
    z: f64,
    level: f64,
    cfg: &InferenceConfig,
) -> Result<IntervalEstimate> {
    check_level(level)?;
    check_interior(fit, z)?;
    let q = QuantileTable::embedded().chernoff(0.5 + level / 2.0)?;
    let h_kde = weighted_kde(fit, fit.pooled().total_count().iter().copied(), cfg.bandwidth)
        .ok_or_else(|| LroError::UndefinedNuisance {
            z,
            reason: "no bandwidth for the pooled density".into(),
        })?;
    let h = h_kde.density(z);
    if !(h > 0.0) {
        return Err(LroError::UndefinedNuisance {
            z,
            reason: "estimated pooled density is zero".into(),
        });
    }
    let (lo, hi, _) = derivative_window(fit, z, cfg.derivative_c)?;
    let mu = fit.mu(z);
    let mu_prime = ((fit.mu(hi) - fit.mu(lo)) / (hi - lo)).max(0.0);
    let half = (4.0 * mu_prime * mu * (1.0 - mu) / (h * fit.n() as f64)).cbrt() * q;
    let (lower, upper) = mu_to_theta_interval(mu - half, mu + half, fit.pi_n());
    Ok(
        IntervalEstimate::new(z, fit.theta(z), lower, upper, level, CiMethod::MuWaldTransformed)
            .with("mu_n", mu)
            .with("mu_prime_n", mu_prime)
            .with("h_n", h)
            .with("mu_lower", (mu - half).clamp(0.0, 1.0))
            .with("mu_upper", (mu + half).clamp(0.0, 1.0))
            .with("chernoff_q", q),
    )
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Binomial log-likelihood of `successes` out of `trials` at probability `r`.
fn block_loglik(successes: f64, trials: f64, r: f64) -> f64 {
    xlogy(successes, r) + xlogy(trials - successes, 1.0 - r)
}

/// Count sums `(level, successes, trials)` over the blocks of an isotonic fit
/// of `d / total`.
fn count_blocks(d: &[u64], total: &[u64]) -> Vec<(f64, f64, f64)> {
    let t: Vec<f64> = d.iter().zip(total).map(|(&a, &b)| a as f64 / b as f64).collect();
    let w: Vec<f64> = total.iter().map(|&b| b as f64).collect();
    let fitted = pava_values(&t, &w);
    let mut blocks: Vec<(f64, f64, f64)> = Vec::new();
    for (k, &r) in fitted.iter().enumerate() {
        match blocks.last_mut() {
            Some(b) if b.0 == r => {
                b.1 += d[k] as f64;
                b.2 += total[k] as f64;
            }
            _ => blocks.push((r, d[k] as f64, total[k] as f64)),
        }
    }
    blocks
}

/// Profile likelihood ratio for `mu(z_j) = b` on the pooled knots.
///
/// The constrained fit caps the isotonic fit of knots `0..=j` at `b` and
/// floors the fit of the knots above `j` at `b`; both one-sided fits are
/// computed once and stored as block count sums.
#[derive(Debug, Clone)]
pub struct LrtProfile {
    left: Vec<(f64, f64, f64)>,
    right: Vec<(f64, f64, f64)>,
    loglik: f64,
    pi: f64,
}

impl LrtProfile {
    /// Knot index `j` is the one carrying `theta*(z)`. The test needs knots on
    /// both sides of it, and `z` at or below the largest `y`.
    pub fn new(fit: &LroFit, z: f64) -> Result<Self> {
        let p = fit.pooled();
        let unsupported = |reason: &str| LroError::UnsupportedPoint {
            z,
            reason: reason.to_string(),
        };
        let j = p
            .knot_at_or_above(z)
            .ok_or_else(|| unsupported("above the largest observation"))?;
        if !(z > p.z()[0]) {
            return Err(unsupported("at or below the smallest observation"));
        }
        if j + 1 >= p.len() || z > p.y_max() {
            return Err(unsupported("at or above the largest y observation"));
        }
        let (d, total) = (p.d_count(), p.total_count());
        let loglik = count_blocks(d, total)
            .iter()
            .map(|&(r, s, w)| block_loglik(s, w, r))
            .sum();
        Ok(Self {
            left: count_blocks(&d[..=j], &total[..=j]),
            right: count_blocks(&d[j + 1..], &total[j + 1..]),
            loglik,
            pi: fit.pi_n(),
        })
    }

    /// `2 [l(mu*) - l(mu_b)]` for the fit constrained by `b`.
    pub fn statistic_at_bound(&self, b: f64) -> f64 {
        let mut l = 0.0;
        for &(r, s, w) in &self.left {
            l += block_loglik(s, w, r.min(b));
        }
        for &(r, s, w) in &self.right {
            l += block_loglik(s, w, r.max(b));
        }
        if l == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        (2.0 * (self.loglik - l)).max(0.0)
    }

    /// The statistic for the hypothesis `theta(z) = theta`.
    pub fn statistic(&self, theta: f64) -> f64 {
        self.statistic_at_bound(inverse_odds(theta * odds(self.pi)))
    }
}

/// Confidence set `{theta : 2 [l(mu*) - l(mu_theta)] <= d_level}`, found by
/// bisection on each side of the estimate.
pub fn lrt_ci(fit: &LroFit, z: f64, level: f64, cfg: &InferenceConfig) -> Result<IntervalEstimate> {
    check_level(level)?;
    let d = QuantileTable::embedded().lrt(level)?;
    let prof = LrtProfile::new(fit, z)?;
    let theta = fit.theta(z);
    let inside = |t: f64| prof.statistic(t) <= d;

    let bisect = |mut good: f64, mut bad: f64| {
        for _ in 0..cfg.lrt_max_iter {
            if (bad - good).abs() <= cfg.lrt_tol {
                break;
            }
            let mid = 0.5 * (good + bad);
            if inside(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };

    let lower = if inside(0.0) { 0.0 } else { bisect(theta, 0.0) };
    let upper = if !theta.is_finite() || prof.statistic_at_bound(1.0) <= d {
        f64::INFINITY
    } else {
        let mut hi = (2.0 * theta).max(1.0);
        let mut tries = 0;
        while inside(hi) {
            hi *= 2.0;
            tries += 1;
            if tries > 1000 || !hi.is_finite() {
                return Err(LroError::UndefinedNuisance {
                    z,
                    reason: "could not bracket the upper endpoint".into(),
                });
            }
        }
        bisect(theta, hi)
    };
    Ok(IntervalEstimate::new(z, theta, lower, upper, level, CiMethod::Lrt).with("lrt_d", d))
}

/// Dispatches to the interval method; `Split` needs the raw data and is
/// handled by [`split_fits`] and [`split_ci`].
pub fn interval(
    fit: &LroFit,
    z: f64,
    level: f64,
    method: CiMethod,
    cfg: &InferenceConfig,
) -> Result<IntervalEstimate> {
    match method {
        CiMethod::DiscreteWald => discrete_wald_ci(fit, z, level),
        CiMethod::ThetaWald => theta_wald_ci_plugin(fit, z, level, cfg),
        CiMethod::MuWaldTransformed => mu_wald_transformed_ci(fit, z, level, cfg),
        CiMethod::Lrt => lrt_ci(fit, z, level, cfg),
        CiMethod::Split => Err(LroError::InvalidInput(
            "split intervals are computed from the raw sample".into(),
        )),
    }
}

/// Estimates from `m` disjoint random subsamples of the pooled data.
#[derive(Debug, Clone)]
pub struct SplitFits {
    n: usize,
    fits: Vec<LroFit>,
}

const SPLIT_STREAM: u64 = 0x53;
const SPLIT_RETRIES: u64 = 20;

/// Randomly partitions the pooled `(Z, D)` pairs into `m` groups whose sizes
/// differ by at most one and fits each group. A partition with a degenerate
/// group is redrawn, up to 20 times.
pub fn split_fits(ts: &TwoSample, m: usize, seed: u64) -> Result<SplitFits> {
    if m < 2 {
        return Err(LroError::InvalidInput(format!("need at least 2 splits, got {m}")));
    }
    let n = ts.n();
    if n < 2 * m {
        return Err(LroError::InvalidInput(format!(
            "{n} observations are too few for {m} splits"
        )));
    }
    let pairs: Vec<(f64, bool)> = ts
        .x()
        .iter()
        .map(|&v| (v, true))
        .chain(ts.y().iter().map(|&v| (v, false)))
        .collect();
    let mut last_err = None;
    for attempt in 0..SPLIT_RETRIES {
        let mut rng = rng::stream(seed, attempt, SPLIT_STREAM);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut fits = Vec::with_capacity(m);
        let mut start = 0;
        for g in 0..m {
            let size = n / m + usize::from(g < n % m);
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for &i in &order[start..start + size] {
                let (v, is_x) = pairs[i];
                if is_x {
                    x.push(v);
                } else {
                    y.push(v);
                }
            }
            start += size;
            match TwoSample::new(x, y).and_then(|s| fit_lro(&s)) {
                Ok(f) => fits.push(f),
                Err(e) => {
                    last_err = Some(e);
                    break;
                }
            }
        }
        if fits.len() == m {
            return Ok(SplitFits { n, fits });
        }
    }
    Err(LroError::InvalidInput(format!(
        "no valid partition into {m} splits after {SPLIT_RETRIES} attempts: {}",
        last_err.map(|e| e.to_string()).unwrap_or_default()
    )))
}

impl SplitFits {
    pub fn m(&self) -> usize {
        self.fits.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fits(&self) -> &[LroFit] {
        &self.fits
    }

    pub fn estimate(&self, z: f64) -> SplitEstimate {
        SplitEstimate::from_values(z, self.n, self.fits.iter().map(|f| f.theta(z)).collect())
    }
}

/// Pooled sample-splitting estimate at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitEstimate {
    pub z: f64,
    pub n: usize,
    pub m: usize,
    pub values: Vec<f64>,
    /// Arithmetic mean of the per-split values.
    #[serde(serialize_with = "serialize_f64")]
    pub mean: f64,
    /// Sample standard deviation of the per-split values.
    #[serde(serialize_with = "serialize_f64")]
    pub sd: f64,
    /// `n^(1/3) sd`, the scale entering [`split_ci`].
    #[serde(serialize_with = "serialize_f64")]
    pub sigma_nm: f64,
}

impl SplitEstimate {
    pub fn from_values(z: f64, n: usize, values: Vec<f64>) -> Self {
        let m = values.len();
        let mean = values.iter().sum::<f64>() / m as f64;
        let sd = if values.iter().all(|v| v.is_finite()) && m > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64).sqrt()
        } else {
            f64::NAN
        };
        Self {
            z,
            n,
            m,
            values,
            mean,
            sd,
            sigma_nm: (n as f64).cbrt() * sd,
        }
    }
}

/// `mean -+ sigma_nm t_(1 - alpha/2, m - 1) / (sqrt(m) n^(1/3))`, clamped at 0.
/// A split with an infinite estimate gives `[0, inf]`.
pub fn split_ci(se: &SplitEstimate, level: f64) -> Result<IntervalEstimate> {
    check_level(level)?;
    if se.m < 2 {
        return Err(LroError::InvalidInput(format!("need at least 2 splits, got {}", se.m)));
    }
    let t = student_t_quantile(0.5 + level / 2.0, (se.m - 1) as f64);
    let est = if se.mean.is_finite() {
        let half = se.sigma_nm * t / ((se.m as f64).sqrt() * (se.n as f64).cbrt());
        IntervalEstimate::new(se.z, se.mean, se.mean - half, se.mean + half, level, CiMethod::Split)
    } else {
        IntervalEstimate::new(se.z, f64::INFINITY, 0.0, f64::INFINITY, level, CiMethod::Split)
    };
    Ok(est.with("sigma_nm", se.sigma_nm).with("t_quantile", t).with("m", se.m as f64))
}

/// [`split_fits`] followed by [`split_ci`] at one point.
pub fn split_fit(ts: &TwoSample, z: f64, m: usize, seed: u64) -> Result<SplitEstimate> {
    Ok(split_fits(ts, m, seed)?.estimate(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_lro;

    fn fit(x: &[f64], y: &[f64]) -> LroFit {
        fit_lro(&TwoSample::new(x.to_vec(), y.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for m in CiMethod::ALL {
            assert_eq!(m.as_str().parse::<CiMethod>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{m}\""));
        }
        assert!("wald".parse::<CiMethod>().is_err());
    }

    #[test]
    fn symmetric_discrete_variance() {
        for p in [0.1, 0.25, 0.6] {
            let v = discrete_variance(1.0, p, p, 0.5);
            assert!((v - 4.0 * (1.0 - p) / p).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_kappa_reduces_to_four_over_g() {
        for g in [0.2, 1.0, 3.5] {
            assert!((kappa(1.0, g, g, 0.5) - 4.0 / g).abs() < 1e-12);
        }
    }

    #[test]
    fn discrete_wald_width_shrinks_with_n() {
        let x = [0.0, 1.0, 1.0, 2.0, 2.0, 2.0];
        let y = [0.0, 0.0, 1.0, 1.0, 2.0, 3.0];
        let rep = |k: usize, v: &[f64]| -> Vec<f64> { v.iter().cycle().take(v.len() * k).copied().collect() };
        let w1 = discrete_wald_ci(&fit(&x, &y), 1.0, 0.95).unwrap();
        let w100 = discrete_wald_ci(&fit(&rep(100, &x), &rep(100, &y)), 1.0, 0.95).unwrap();
        assert!(w1.contains(w1.estimate));
        assert!((w100.estimate - w1.estimate).abs() < 1e-12);
        assert!((w100.width() / w1.width()) < 0.11);
        assert!(matches!(
            discrete_wald_ci(&fit(&x, &y), 0.5, 0.95),
            Err(LroError::UndefinedVariance(_))
        ));
    }

    #[test]
    fn theta_wald_formula() {
        let f = fit(&[0.0, 1.0, 2.0, 3.0], &[0.5, 1.5, 2.5, 3.5]);
        let q = QuantileTable::embedded().chernoff(0.975).unwrap();
        let ci = theta_wald_ci(&f, 1.5, 0.95, 0.0).unwrap();
        assert_eq!((ci.lower, ci.upper), (ci.estimate, ci.estimate));
        let ci = theta_wald_ci(&f, 1.5, 0.95, 1.0).unwrap();
        let expected = 2.0 * (4.0 / 8.0f64).cbrt() * q;
        assert!((ci.upper - (ci.estimate + expected / 2.0)).abs() < 1e-12);
        assert!(ci.lower >= 0.0);
        assert!(theta_wald_ci(&f, 1.5, 0.123, 1.0).is_err());
    }

    #[test]
    fn mu_to_theta_is_monotone() {
        let (l, u) = mu_to_theta_interval(0.2, 0.6, 0.5);
        assert!((l - 0.25).abs() < 1e-12 && (u - 1.5).abs() < 1e-12);
        let (l, u) = mu_to_theta_interval(-0.1, 1.2, 0.4);
        assert_eq!(l, 0.0);
        assert_eq!(u, f64::INFINITY);
    }

    #[test]
    fn lrt_statistic_vanishes_at_estimate() {
        let f = fit(
            &[0.0, 1.0, 2.0, 2.0, 3.0, 4.0, 4.0, 5.0],
            &[0.0, 0.0, 1.0, 1.0, 2.0, 3.0, 4.0, 5.0],
        );
        let prof = LrtProfile::new(&f, 2.0).unwrap();
        let mu = f.mu(2.0);
        assert!(prof.statistic_at_bound(mu) < 1e-12);
        let mut prev = 0.0;
        for i in 1..50 {
            let s = prof.statistic_at_bound(mu + (1.0 - mu) * i as f64 / 50.0);
            assert!(s >= prev - 1e-12);
            prev = s;
        }
        prev = 0.0;
        for i in 1..50 {
            let s = prof.statistic_at_bound(mu * (1.0 - i as f64 / 50.0));
            assert!(s >= prev - 1e-12);
            prev = s;
        }
        let ci = lrt_ci(&f, 2.0, 0.95, &InferenceConfig::default()).unwrap();
        assert!(ci.contains(ci.estimate));
        assert!(LrtProfile::new(&f, 0.0).is_err());
        assert!(LrtProfile::new(&f, 5.0).is_err());
    }

    #[test]
    fn lrt_statistic_matches_bounded_fit() {
        use crate::isotonic::{pava, pava_bounded, WeightedSeries};
        let f = fit(
            &[0.0, 1.0, 2.0, 2.0, 3.0, 4.0, 4.0, 5.0, 7.0],
            &[0.0, 0.0, 1.0, 2.0, 2.0, 3.0, 3.5, 4.0, 5.0, 6.0],
        );
        let p = f.pooled();
        let t: Vec<f64> = p.d_count().iter().zip(p.total_count()).map(|(&d, &n)| d as f64 / n as f64).collect();
        let w: Vec<f64> = p.total_count().iter().map(|&n| n as f64).collect();
        let series = WeightedSeries::new(t, w).unwrap();
        let full = series.binomial_log_likelihood(pava(&series).fitted());
        for z in [1.0, 2.0, 3.5, 4.0] {
            let prof = LrtProfile::new(&f, z).unwrap();
            let j = p.knot_at_or_above(z).unwrap();
            for b in [0.05, 0.2, 0.4, 0.6, 0.9] {
                let constrained = pava_bounded(&series, j + 1, b).unwrap();
                let expected = 2.0 * (full - series.binomial_log_likelihood(constrained.fitted()));
                let got = prof.statistic_at_bound(b);
                assert!((got - expected).abs() < 1e-9, "z={z} b={b}: {got} vs {expected}");
            }
        }
    }

    #[test]
    fn split_estimate_statistics() {
        let se = SplitEstimate::from_values(1.0, 1000, vec![2.0; 5]);
        assert_eq!(se.sigma_nm, 0.0);
        let ci = split_ci(&se, 0.95).unwrap();
        assert_eq!((ci.lower, ci.upper), (2.0, 2.0));

        let se = SplitEstimate::from_values(1.0, 1000, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(se.mean, 3.0);
        assert!((se.sd - 2.5f64.sqrt()).abs() < 1e-12);
        let w = split_ci(&se, 0.95).unwrap().width();
        let t = student_t_quantile(0.975, 4.0);
        assert!((t - 2.776_445_105_2).abs() < 1e-8);
        assert!((w - 2.0 * se.sd * t / 5f64.sqrt()).abs() < 1e-12);
        let doubled = SplitEstimate {
            n: 2000,
            ..se.clone()
        };
        let w2 = split_ci(&doubled, 0.95).unwrap().width();
        assert!((w2 / w - 2f64.powf(-1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn split_fits_validate_and_are_deterministic() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 / 4.0).collect();
        let y: Vec<f64> = (0..40).map(|i| i as f64 / 5.0).collect();
        let ts = TwoSample::new(x, y).unwrap();
        assert!(split_fits(&ts, 1, 0).is_err());
        let a = split_fit(&ts, 3.0, 4, 9).unwrap();
        let b = split_fit(&ts, 3.0, 4, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.m, 4);
        let sizes: Vec<usize> = split_fits(&ts, 3, 1)
            .unwrap()
            .fits()
            .iter()
            .map(|f| f.n())
            .collect();
        assert_eq!(sizes.iter().sum::<usize>(), 80);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn infinite_values_serialize_as_strings() {
        let ci = IntervalEstimate::new(1.0, 2.0, 0.5, f64::INFINITY, 0.95, CiMethod::Lrt);
        let s = serde_json::to_string(&ci).unwrap();
        assert!(s.contains("\"upper\":\"inf\""), "{s}");
    }
}
