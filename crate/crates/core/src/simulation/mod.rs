//! Simulation scenarios and Monte Carlo studies.
//!
//! Three designs are provided: Poisson samples (fully discrete), exponential
//! samples (fully continuous) and a mixed design on `[0, 1]` with atoms at
//! 0, 0.5 and 1 on top of a continuous part.

mod study;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp, Poisson};
use serde::Serialize;

use crate::error::{LroError, Result};
use crate::estimators::TwoSample;
use crate::inference::{discrete_variance, kappa, Bandwidth, Kde, QuantileTable};
use crate::rng;

pub use study::{run_study, run_study_with, Cell, MonteCarloReport, StudyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    DiscretePoisson,
    ContinuousExponential,
    Mixed,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::DiscretePoisson => "discrete-poisson",
            ScenarioKind::ContinuousExponential => "continuous-exponential",
            ScenarioKind::Mixed => "mixed",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = LroError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "discrete-poisson" | "poisson" | "discrete" => Ok(ScenarioKind::DiscretePoisson),
            "continuous-exponential" | "exponential" | "continuous" => {
                Ok(ScenarioKind::ContinuousExponential)
            }
            "mixed" => Ok(ScenarioKind::Mixed),
            other => Err(LroError::Config(format!("unknown scenario kind {other:?}"))),
        }
    }
}

/// Atom locations of the mixed design.
pub const MIXED_ATOMS: [f64; 3] = [0.0, 0.5, 1.0];
/// Atom masses of `X` in the mixed design.
pub const MIXED_X_MASSES: [f64; 3] = [1.0 / 18.0, 1.0 / 9.0, 3.0 / 18.0];
/// Atom masses of `Y` in the mixed design.
pub const MIXED_Y_MASSES: [f64; 3] = [1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0];
/// Weight of the continuous part in both mixed distributions.
pub const MIXED_CONTINUOUS_WEIGHT: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Model {
    /// `X ~ Poisson(lambda_x)`, `Y ~ Poisson(lambda_y)`.
    DiscretePoisson { lambda_x: f64, lambda_y: f64 },
    /// `X ~ Exp(rate_x)`, `Y ~ Exp(rate_y)`, `rate_x < rate_y`.
    ContinuousExponential { rate_x: f64, rate_y: f64 },
    /// `Y`: atoms of mass 1/9 plus `U[0, 1]`; `X`: atoms of mass 1/18, 1/9,
    /// 3/18 plus density `0.5 + x`.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub model: Model,
    /// Probability that an observation comes from the `x` sample.
    pub pi0: f64,
    pub eval_grid: Vec<f64>,
}

fn grid(lo: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| ((lo + step * i as f64) * 1e9).round() / 1e9).collect()
}

impl Scenario {
    pub fn discrete_poisson() -> Self {
        Self {
            model: Model::DiscretePoisson {
                lambda_x: 6.0,
                lambda_y: 4.0,
            },
            pi0: 0.4,
            eval_grid: grid(0.0, 1.0, 11),
        }
    }

    pub fn continuous_exponential() -> Self {
        Self {
            model: Model::ContinuousExponential {
                rate_x: 1.0,
                rate_y: 2.0,
            },
            pi0: 0.4,
            eval_grid: grid(0.0, 0.1, 21),
        }
    }

    pub fn mixed() -> Self {
        Self {
            model: Model::Mixed,
            pi0: 0.4,
            eval_grid: grid(0.0, 0.05, 21),
        }
    }

    pub fn from_kind(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::DiscretePoisson => Self::discrete_poisson(),
            ScenarioKind::ContinuousExponential => Self::continuous_exponential(),
            ScenarioKind::Mixed => Self::mixed(),
        }
    }

    pub fn kind(&self) -> ScenarioKind {
        match self.model {
            Model::DiscretePoisson { .. } => ScenarioKind::DiscretePoisson,
            Model::ContinuousExponential { .. } => ScenarioKind::ContinuousExponential,
            Model::Mixed => ScenarioKind::Mixed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pi0 > 0.0 && self.pi0 < 1.0) {
            return Err(LroError::Config(format!("pi0 must be in (0, 1), got {}", self.pi0)));
        }
        match self.model {
            Model::DiscretePoisson { lambda_x, lambda_y } => {
                if !(lambda_x > 0.0 && lambda_y > 0.0) {
                    return Err(LroError::Config("Poisson rates must be positive".into()));
                }
            }
            Model::ContinuousExponential { rate_x, rate_y } => {
                if !(rate_x > 0.0 && rate_y > 0.0) {
                    return Err(LroError::Config("exponential rates must be positive".into()));
                }
            }
            Model::Mixed => {}
        }
        if self.eval_grid.iter().any(|z| !z.is_finite()) {
            return Err(LroError::Config("evaluation points must be finite".into()));
        }
        Ok(())
    }

    /// Whether `z` is an atom of `G0`, where the ratio is a mass ratio.
    pub fn is_atom(&self, z: f64) -> bool {
        match self.model {
            Model::DiscretePoisson { .. } => true,
            Model::ContinuousExponential { .. } => false,
            Model::Mixed => MIXED_ATOMS.contains(&z),
        }
    }

    /// Boundary points of the support, where the estimator is not consistent.
    pub fn is_boundary(&self, z: f64) -> bool {
        match self.model {
            Model::DiscretePoisson { .. } | Model::ContinuousExponential { .. } => z == 0.0,
            Model::Mixed => z == 0.0 || z == 1.0,
        }
    }

    /// `(Delta F0(z), Delta G0(z))` at an atom.
    pub fn masses(&self, z: f64) -> Option<(f64, f64)> {
        match self.model {
            Model::DiscretePoisson { lambda_x, lambda_y } => {
                poisson_pmf(lambda_x, z).zip(poisson_pmf(lambda_y, z))
            }
            Model::ContinuousExponential { .. } => None,
            Model::Mixed => MIXED_ATOMS
                .iter()
                .position(|&a| a == z)
                .map(|i| (MIXED_X_MASSES[i], MIXED_Y_MASSES[i])),
        }
    }

    /// Lebesgue densities `(f0(z), g0(z))` of the continuous parts.
    pub fn densities(&self, z: f64) -> Option<(f64, f64)> {
        match self.model {
            Model::DiscretePoisson { .. } => None,
            Model::ContinuousExponential { rate_x, rate_y } => (z >= 0.0)
                .then(|| (rate_x * (-rate_x * z).exp(), rate_y * (-rate_y * z).exp())),
            Model::Mixed => (0.0..=1.0)
                .contains(&z)
                .then_some((MIXED_CONTINUOUS_WEIGHT * (0.5 + z), MIXED_CONTINUOUS_WEIGHT)),
        }
    }

    /// `theta0'(z)` at continuity points.
    fn theta_prime(&self, z: f64) -> Option<f64> {
        match self.model {
            Model::DiscretePoisson { .. } => None,
            Model::ContinuousExponential { rate_x, rate_y } => {
                Some((rate_y - rate_x) * rate_x / rate_y * ((rate_y - rate_x) * z).exp())
            }
            Model::Mixed => Some(1.0),
        }
    }

    /// Asymptotic standard deviation of `n^r (theta* - theta0)(z)` and the
    /// rate exponent `r`: the normal limit at atoms (`r = 1/2`) and the
    /// Chernoff limit `(4 kappa0 theta0')^(1/3) W` elsewhere (`r = 1/3`).
    pub fn asymptotic_sd(&self, z: f64) -> Option<(f64, f64)> {
        let theta = true_theta(self, z).ok()?;
        if self.is_atom(z) {
            let (df, dg) = self.masses(z)?;
            Some((0.5, discrete_variance(theta, df, dg, self.pi0).sqrt()))
        } else {
            let (f, g) = self.densities(z)?;
            let tau = kappa(theta, f, g, self.pi0) * self.theta_prime(z)?;
            let sd_w = QuantileTable::embedded().chernoff_sd;
            Some((1.0 / 3.0, (4.0 * tau).cbrt() * sd_w))
        }
    }
}

fn poisson_pmf(lambda: f64, z: f64) -> Option<f64> {
    if z < 0.0 || z.fract() != 0.0 {
        return None;
    }
    let k = z as u64;
    let log_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    Some((z * lambda.ln() - lambda - log_fact).exp())
}

/// The true ratio `theta0(z)`: a mass ratio at atoms and a density ratio
/// elsewhere.
pub fn true_theta(s: &Scenario, z: f64) -> Result<f64> {
    match s.model {
        Model::DiscretePoisson { lambda_x, lambda_y } => {
            if z < 0.0 || z.fract() != 0.0 {
                return Err(LroError::InvalidInput(format!(
                    "{z} is not in the support of a Poisson distribution"
                )));
            }
            Ok((lambda_x / lambda_y).powf(z) * (lambda_y - lambda_x).exp())
        }
        Model::ContinuousExponential { rate_x, rate_y } => {
            if z < 0.0 {
                return Err(LroError::Domain {
                    x: z,
                    lo: 0.0,
                    hi: f64::INFINITY,
                });
            }
            Ok(rate_x / rate_y * ((rate_y - rate_x) * z).exp())
        }
        Model::Mixed => {
            if !(0.0..=1.0).contains(&z) {
                return Err(LroError::Domain { x: z, lo: 0.0, hi: 1.0 });
            }
            match s.masses(z) {
                Some((df, dg)) => Ok(df / dg),
                None => Ok(0.5 + z),
            }
        }
    }
}

fn draw_mixed_y(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (a, m) in MIXED_ATOMS.iter().zip(MIXED_Y_MASSES) {
        acc += m;
        if u < acc {
            return *a;
        }
    }
    rng.random()
}

fn draw_mixed_x(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (a, m) in MIXED_ATOMS.iter().zip(MIXED_X_MASSES) {
        acc += m;
        if u < acc {
            return *a;
        }
    }
    // Inverse of the distribution function 0.5 x + x^2 / 2 on [0, 1].
    let v: f64 = rng.random();
    -0.5 + (0.25 + 2.0 * v).sqrt()
}

const SAMPLE_STREAM: u64 = 1;
const MAX_RESAMPLES: u64 = 100;

fn sample_stream(seed: u64, replication: u64, n: usize, attempt: u64, purpose: u64) -> ChaCha8Rng {
    rng::stream(seed, replication, ((n as u64) << 16) | (attempt << 4) | purpose)
}

/// Draws one data set of total size `n` for replication `replication`:
/// `n1 ~ Binomial(n, pi0)`, then `n1` draws from `F0` and `n - n1` from `G0`.
/// Degenerate draws are redrawn.
pub fn sample_replication(s: &Scenario, n: usize, seed: u64, replication: u64) -> Result<TwoSample> {
    if n < 2 {
        return Err(LroError::InvalidInput(format!("need n >= 2, got {n}")));
    }
    s.validate()?;
    for attempt in 0..MAX_RESAMPLES {
        let mut rng = sample_stream(seed, replication, n, attempt, SAMPLE_STREAM);
        let n1 = Binomial::new(n as u64, s.pi0)
            .map_err(|e| LroError::Config(e.to_string()))?
            .sample(&mut rng) as usize;
        if n1 == 0 || n1 == n {
            continue;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = match s.model {
            Model::DiscretePoisson { lambda_x, lambda_y } => {
                let px = Poisson::new(lambda_x).map_err(|e| LroError::Config(e.to_string()))?;
                let py = Poisson::new(lambda_y).map_err(|e| LroError::Config(e.to_string()))?;
                (
                    (0..n1).map(|_| px.sample(&mut rng)).collect(),
                    (0..n - n1).map(|_| py.sample(&mut rng)).collect(),
                )
            }
            Model::ContinuousExponential { rate_x, rate_y } => {
                let ex = Exp::new(rate_x).map_err(|e| LroError::Config(e.to_string()))?;
                let ey = Exp::new(rate_y).map_err(|e| LroError::Config(e.to_string()))?;
                (
                    (0..n1).map(|_| ex.sample(&mut rng)).collect(),
                    (0..n - n1).map(|_| ey.sample(&mut rng)).collect(),
                )
            }
            Model::Mixed => (
                (0..n1).map(|_| draw_mixed_x(&mut rng)).collect(),
                (0..n - n1).map(|_| draw_mixed_y(&mut rng)).collect(),
            ),
        };
        match TwoSample::new(x, y) {
            Ok(ts) => return Ok(ts),
            Err(LroError::DegenerateOrder { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(LroError::InvalidInput(format!(
        "no non-degenerate sample of size {n} after {MAX_RESAMPLES} draws"
    )))
}

/// One data set of total size `n`, deterministic given `seed`.
pub fn sample_scenario(s: &Scenario, n: usize, seed: u64) -> Result<TwoSample> {
    sample_replication(s, n, seed, 0)
}

/// The unconstrained comparator `f_hat / g_hat` from Gaussian kernel density
/// estimates of each sample.
#[derive(Debug, Clone)]
pub struct KdeRatio {
    f: Kde,
    g: Kde,
}

impl KdeRatio {
    pub fn new(ts: &TwoSample, bandwidth: Bandwidth) -> Result<Self> {
        let none = |which: &str| LroError::UndefinedNuisance {
            z: f64::NAN,
            reason: format!("no kernel bandwidth for the {which} sample"),
        };
        Ok(Self {
            f: Kde::from_sample(ts.x(), bandwidth).ok_or_else(|| none("x"))?,
            g: Kde::from_sample(ts.y(), bandwidth).ok_or_else(|| none("y"))?,
        })
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        let g = self.g.density(z);
        if !(g > 0.0) {
            return Err(LroError::UndefinedNuisance {
                z,
                reason: "estimated y density is zero".into(),
            });
        }
        Ok(self.f.density(z) / g)
    }
}

/// `f_hat(z) / g_hat(z)` with the default bandwidth.
pub fn kde_ratio_estimator(ts: &TwoSample, z: f64) -> Result<f64> {
    KdeRatio::new(ts, Bandwidth::default())?.eval(z)
}
