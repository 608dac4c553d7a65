use serde::Serialize;

use super::sample::{PooledSample, TwoSample};
use super::step::{MonotoneStepFn, StepDistribution};
use crate::error::Result;
use crate::geometry::{gcm, lcm, left_derivatives_sorted, PiecewiseLinearFn, PointSet};
use crate::isotonic::{pava, IsotonicFit, WeightedSeries};

/// Odds transform `u / (1 - u)`; `+inf` at 1.
pub fn odds(u: f64) -> f64 {
    if u >= 1.0 {
        f64::INFINITY
    } else {
        u / (1.0 - u)
    }
}

/// Inverse odds transform `v / (1 + v)`; 1 at `+inf`.
pub fn inverse_odds(v: f64) -> f64 {
    if v.is_infinite() {
        1.0
    } else {
        v / (1.0 + v)
    }
}

/// Cumulative empirical quantities at each distinct `y`.
#[derive(Debug, Clone)]
struct YKnots {
    /// Pooled index of each distinct y.
    pooled_index: Vec<usize>,
    y: Vec<f64>,
    /// `H_n(y_k)`.
    h: Vec<f64>,
    /// `F_n(y_k)` as counts of x observations `<= y_k`.
    x_cum: Vec<u64>,
    /// `G_n(y_k)` as counts.
    y_cum: Vec<u64>,
}

impl YKnots {
    fn new(pooled: &PooledSample) -> Self {
        let n = pooled.n() as f64;
        let mut out = YKnots {
            pooled_index: Vec::new(),
            y: Vec::new(),
            h: Vec::new(),
            x_cum: Vec::new(),
            y_cum: Vec::new(),
        };
        let (mut cx, mut cy) = (0u64, 0u64);
        for k in 0..pooled.len() {
            cx += pooled.d_count()[k];
            cy += pooled.y_count(k);
            if pooled.y_count(k) > 0 {
                out.pooled_index.push(k);
                out.y.push(pooled.z()[k]);
                out.h.push((cx + cy) as f64 / n);
                out.x_cum.push(cx);
                out.y_cum.push(cy);
            }
        }
        out
    }

    fn f_n(&self, n1: usize) -> impl Iterator<Item = f64> + '_ {
        self.x_cum.iter().map(move |&c| c as f64 / n1 as f64)
    }

    fn g_n(&self, n2: usize) -> impl Iterator<Item = f64> + '_ {
        self.y_cum.iter().map(move |&c| c as f64 / n2 as f64)
    }
}

fn with_origin(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>) -> Result<PointSet> {
    let mut pts = vec![(0.0, 0.0)];
    pts.extend(xs.zip(ys));
    PointSet::new(pts)
}

/// The empirical ordinal dominance curve `{(G_n(y_k), F_n(y_k))}` with the
/// origin prepended, and its greatest convex minorant.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalOdc {
    pub points: Vec<(f64, f64)>,
    pub gcm_vertices: Vec<(f64, f64)>,
}

/// Maximum likelihood fit under the likelihood ratio order.
#[derive(Debug, Clone)]
pub struct LroFit {
    f_star: StepDistribution,
    g_star: StepDistribution,
    theta_star: MonotoneStepFn,
    pi_n: f64,
    mu_star: IsotonicFit,
    pooled: PooledSample,
    odc: EmpiricalOdc,
    f_n: StepDistribution,
    g_n: StepDistribution,
}

impl LroFit {
    /// `F*`, with knots at every pooled value.
    pub fn f_star(&self) -> &StepDistribution {
        &self.f_star
    }

    /// `G*`, with knots at the distinct `y` values.
    pub fn g_star(&self) -> &StepDistribution {
        &self.g_star
    }

    pub fn theta_star(&self) -> &MonotoneStepFn {
        &self.theta_star
    }

    pub fn theta(&self, z: f64) -> f64 {
        self.theta_star.eval(z)
    }

    pub fn pi_n(&self) -> f64 {
        self.pi_n
    }

    /// Isotonic fit of the `x`-origin indicator on the pooled knots.
    pub fn mu_star(&self) -> &IsotonicFit {
        &self.mu_star
    }

    /// `mu*(z)` under the same left-open step convention as `theta*`.
    pub fn mu(&self, z: f64) -> f64 {
        let r = self.mu_star.fitted();
        match self.pooled.knot_at_or_above(z) {
            Some(k) => r[k],
            None => r[r.len() - 1],
        }
    }

    pub fn pooled(&self) -> &PooledSample {
        &self.pooled
    }

    pub fn n(&self) -> usize {
        self.pooled.n()
    }

    pub fn odc(&self) -> &EmpiricalOdc {
        &self.odc
    }

    pub fn f_n(&self) -> &StepDistribution {
        &self.f_n
    }

    pub fn g_n(&self) -> &StepDistribution {
        &self.g_n
    }
}

/// Nonparametric maximum likelihood estimator of `(F, G, theta)` under the
/// likelihood ratio order.
///
/// `G*` is the least concave majorant of `{(H_n(y_k), G_n(y_k))}` and `F*` at
/// the `y` knots the greatest convex minorant of `{(H_n(y_k), F_n(y_k))}`.
/// Between `y` knots the `F*` mass is shared among the `x` values in
/// proportion to their empirical mass; an interval with no `x` puts its mass
/// on its right `y` endpoint. `theta*` comes from the isotonic regression of
/// the origin indicator on the pooled values.
pub fn fit_lro(ts: &TwoSample) -> Result<LroFit> {
    let pooled = PooledSample::new(ts);
    let (n1, n2) = (pooled.n1(), pooled.n2());
    let yk = YKnots::new(&pooled);
    let m2 = yk.y.len();

    let f_diag = with_origin(yk.h.iter().copied(), yk.f_n(n1))?;
    let g_diag = with_origin(yk.h.iter().copied(), yk.g_n(n2))?;
    let a = hull_values(&gcm(&f_diag), &f_diag)?;
    let b = hull_values(&lcm(&g_diag), &g_diag)?;

    let g_star = StepDistribution::new(yk.y.clone(), b[1..].to_vec())?;

    // F* at every pooled knot. Interval j is (y_{j-1}, y_j]; j = m2 is above y_{m2}.
    let mut f_cdf = Vec::with_capacity(pooled.len());
    let mut j = 0usize;
    let mut cx = 0u64;
    for k in 0..pooled.len() {
        cx += pooled.d_count()[k];
        if j < m2 && k > yk.pooled_index[j] {
            j += 1;
        }
        let (lo_val, lo_cnt) = if j == 0 { (0.0, 0) } else { (a[j], yk.x_cum[j - 1]) };
        let (hi_val, hi_cnt) = if j < m2 {
            (a[j + 1], yk.x_cum[j])
        } else {
            (1.0, n1 as u64)
        };
        let value = if j < m2 && k == yk.pooled_index[j] {
            hi_val
        } else if hi_cnt == lo_cnt {
            lo_val
        } else {
            lo_val + (hi_val - lo_val) * ((cx - lo_cnt) as f64 / (hi_cnt - lo_cnt) as f64)
        };
        f_cdf.push(value);
    }
    let f_star = StepDistribution::new(pooled.z().to_vec(), f_cdf)?;

    let mu_star = pava(&mu_series(&pooled)?);
    let pi_n = pooled.pi_n();
    let theta_star = theta_from_mu(&pooled, &mu_star, pi_n)?;

    let odc_diag = with_origin(yk.g_n(n2), yk.f_n(n1))?;
    let odc = EmpiricalOdc {
        points: odc_diag.points().to_vec(),
        gcm_vertices: gcm(&odc_diag).vertices().to_vec(),
    };

    Ok(LroFit {
        f_star,
        g_star,
        theta_star,
        pi_n,
        mu_star,
        odc,
        f_n: super::ecdf(ts.x())?,
        g_n: super::ecdf(ts.y())?,
        pooled,
    })
}

fn hull_values(hull: &PiecewiseLinearFn, diagram: &PointSet) -> Result<Vec<f64>> {
    diagram.points().iter().map(|&(x, _)| hull.eval(x)).collect()
}

/// Origin-indicator frequencies on the pooled knots, weighted by knot counts.
fn mu_series(pooled: &PooledSample) -> Result<WeightedSeries> {
    let t = pooled
        .d_count()
        .iter()
        .zip(pooled.total_count())
        .map(|(&d, &c)| d as f64 / c as f64)
        .collect();
    let w = pooled.total_count().iter().map(|&c| c as f64).collect();
    WeightedSeries::new(t, w)
}

fn theta_from_mu(pooled: &PooledSample, mu: &IsotonicFit, pi_n: f64) -> Result<MonotoneStepFn> {
    let scale = odds(pi_n);
    let levels: Vec<f64> = mu.fitted().iter().map(|&m| odds(m) / scale).collect();
    MonotoneStepFn::from_knot_levels(pooled.z(), &levels)
}

/// Plug-in estimator `d_- GCM(F_n o G_n^-) o G_n` evaluated at the distinct
/// `y` values, with the same left-open convention as [`fit_lro`].
pub fn theta_via_odc(ts: &TwoSample) -> Result<MonotoneStepFn> {
    let pooled = PooledSample::new(ts);
    let yk = YKnots::new(&pooled);
    let diag = with_origin(yk.g_n(pooled.n2()), yk.f_n(pooled.n1()))?;
    let hull = gcm(&diag);
    let g_at_y: Vec<f64> = yk.g_n(pooled.n2()).collect();
    let slopes = left_derivatives_sorted(&hull, &g_at_y)?;
    MonotoneStepFn::from_knot_levels(&yk.y, &slopes)
}

/// Nonparametric log-likelihood `sum log dF(X_i) + sum log dG(Y_j)`; `-inf`
/// when an observation sits on a point without mass.
pub fn log_likelihood(ts: &TwoSample, f: &StepDistribution, g: &StepDistribution) -> f64 {
    fn part(sample: &[f64], d: &StepDistribution) -> f64 {
        let mut s = sample.to_vec();
        s.sort_by(f64::total_cmp);
        let mut total = 0.0;
        let mut i = 0;
        while i < s.len() {
            let v = s[i];
            let mut c = 0;
            while i < s.len() && s[i] == v {
                c += 1;
                i += 1;
            }
            let m = d.mass_at(v);
            if m <= 0.0 {
                return f64::NEG_INFINITY;
            }
            total += c as f64 * m.ln();
        }
        total
    }
    part(ts.x(), f) + part(ts.y(), g)
}
