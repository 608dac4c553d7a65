//! Gaussian kernel density estimates on weighted points.

use serde::{Deserialize, Serialize};

/// Bandwidth choice for [`Kde`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    /// `0.9 min(sd, IQR / 1.34) n^(-1/5)`, multiplied by the given factor.
    Silverman(f64),
    Fixed(f64),
}

impl Default for Bandwidth {
    fn default() -> Self {
        Bandwidth::Silverman(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct Kde {
    points: Vec<f64>,
    weights: Vec<f64>,
    total: f64,
    bandwidth: f64,
}

const CUTOFF: f64 = 8.0;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

impl Kde {
    /// `points` must be sorted. Returns `None` when the bandwidth is not
    /// positive (e.g. all mass on one point).
    pub fn new(points: Vec<f64>, weights: Vec<f64>, bandwidth: Bandwidth) -> Option<Self> {
        debug_assert!(points.windows(2).all(|w| w[0] <= w[1]));
        let total: f64 = weights.iter().sum();
        if points.is_empty() || total <= 0.0 {
            return None;
        }
        let h = match bandwidth {
            Bandwidth::Fixed(h) => h,
            Bandwidth::Silverman(c) => c * silverman(&points, &weights, total)?,
        };
        (h > 0.0 && h.is_finite()).then_some(Self {
            points,
            weights,
            total,
            bandwidth: h,
        })
    }

    pub fn from_sample(sample: &[f64], bandwidth: Bandwidth) -> Option<Self> {
        let mut s = sample.to_vec();
        s.sort_by(f64::total_cmp);
        let w = vec![1.0; s.len()];
        Self::new(s, w, bandwidth)
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn density(&self, z: f64) -> f64 {
        let h = self.bandwidth;
        let lo = self.points.partition_point(|&p| p < z - CUTOFF * h);
        let hi = self.points.partition_point(|&p| p <= z + CUTOFF * h);
        let s: f64 = (lo..hi)
            .map(|i| {
                let u = (z - self.points[i]) / h;
                self.weights[i] * (-0.5 * u * u).exp()
            })
            .sum();
        s * INV_SQRT_2PI / (h * self.total)
    }
}

fn silverman(points: &[f64], weights: &[f64], total: f64) -> Option<f64> {
    let mean = points.iter().zip(weights).map(|(p, w)| p * w).sum::<f64>() / total;
    let var = points
        .iter()
        .zip(weights)
        .map(|(p, w)| w * (p - mean) * (p - mean))
        .sum::<f64>()
        / total;
    let sd = var.sqrt();
    let iqr = (weighted_quantile(points, weights, total, 0.75)
        - weighted_quantile(points, weights, total, 0.25))
        / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => return None,
    };
    Some(0.9 * spread * total.powf(-0.2))
}

fn weighted_quantile(points: &[f64], weights: &[f64], total: f64, p: f64) -> f64 {
    let target = p * total;
    let mut acc = 0.0;
    for (x, w) in points.iter().zip(weights) {
        acc += w;
        if acc >= target {
            return *x;
        }
    }
    points[points.len() - 1]
}
