use serde::Serialize;

use super::step::StepDistribution;
use crate::error::{LroError, Result};

/// Two independent samples: `x` from F and `y` from G.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl TwoSample {
    /// Validates both samples. Rejects empty or non-finite input, and data in
    /// which no `x` lies strictly below some `y`.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() || y.is_empty() {
            return Err(LroError::InvalidInput(format!(
                "no observations (x: {}, y: {})",
                x.len(),
                y.len()
            )));
        }
        if let Some(v) = x.iter().chain(&y).find(|v| !v.is_finite()) {
            return Err(LroError::InvalidInput(format!("non-finite observation {v}")));
        }
        let x_min = x.iter().copied().fold(f64::INFINITY, f64::min);
        let y_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if y_max <= x_min {
            return Err(LroError::DegenerateOrder { x_min, y_max });
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.len() + self.y.len()
    }

    /// Fraction of observations coming from the `x` sample.
    pub fn pi_n(&self) -> f64 {
        self.x.len() as f64 / self.n() as f64
    }
}

/// Distinct pooled values with origin counts: the `(Z, D)` view of the data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PooledSample {
    z: Vec<f64>,
    d_count: Vec<u64>,
    total_count: Vec<u64>,
    n1: usize,
    n2: usize,
}

impl PooledSample {
    pub fn new(ts: &TwoSample) -> Self {
        let mut x = ts.x().to_vec();
        let mut y = ts.y().to_vec();
        x.sort_by(f64::total_cmp);
        y.sort_by(f64::total_cmp);

        let mut z = Vec::new();
        let mut d_count = Vec::new();
        let mut total_count = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < x.len() || j < y.len() {
            let v = match (x.get(i), y.get(j)) {
                (Some(&a), Some(&b)) => a.min(b),
                (Some(&a), None) => a,
                (None, Some(&b)) => b,
                (None, None) => unreachable!(),
            };
            let (mut dx, mut dy) = (0u64, 0u64);
            while i < x.len() && x[i] == v {
                dx += 1;
                i += 1;
            }
            while j < y.len() && y[j] == v {
                dy += 1;
                j += 1;
            }
            z.push(v);
            d_count.push(dx);
            total_count.push(dx + dy);
        }
        Self {
            z,
            d_count,
            total_count,
            n1: x.len(),
            n2: y.len(),
        }
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Per-knot count of observations from the `x` sample.
    pub fn d_count(&self) -> &[u64] {
        &self.d_count
    }

    pub fn total_count(&self) -> &[u64] {
        &self.total_count
    }

    pub fn y_count(&self, k: usize) -> u64 {
        self.total_count[k] - self.d_count[k]
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn pi_n(&self) -> f64 {
        self.n1 as f64 / self.n() as f64
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Index of the smallest knot `>= z`, or `None` above the last knot.
    pub fn knot_at_or_above(&self, z: f64) -> Option<usize> {
        let k = self.z.partition_point(|&v| v < z);
        (k < self.z.len()).then_some(k)
    }

    /// Largest distinct `y` value.
    pub fn y_max(&self) -> f64 {
        let k = (0..self.len()).rev().find(|&k| self.y_count(k) > 0).unwrap();
        self.z[k]
    }
}

/// Empirical distribution function.
pub fn ecdf(sample: &[f64]) -> Result<StepDistribution> {
    if sample.is_empty() {
        return Err(LroError::InvalidInput("no observations".into()));
    }
    if let Some(v) = sample.iter().find(|v| !v.is_finite()) {
        return Err(LroError::InvalidInput(format!("non-finite observation {v}")));
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut knots = Vec::new();
    let mut values = Vec::new();
    for (i, &v) in s.iter().enumerate() {
        if s.get(i + 1) != Some(&v) {
            knots.push(v);
            values.push((i + 1) as f64 / n);
        }
    }
    StepDistribution::new(knots, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn worked_example() -> TwoSample {
        TwoSample::new(vec![-1.0, 2.0, 3.0, 3.0], vec![0.0, 0.0, 1.0, 3.0, 3.0, 6.0]).unwrap()
    }

    #[test]
    fn ecdf_of_worked_example_y() {
        let g = ecdf(&[0.0, 0.0, 1.0, 3.0, 3.0, 6.0]).unwrap();
        assert_eq!(g.knots(), &[0.0, 1.0, 3.0, 6.0]);
        let expected = [1.0 / 3.0, 0.5, 5.0 / 6.0, 1.0];
        for (v, e) in g.cdf_values().iter().zip(expected) {
            assert!((v - e).abs() < 1e-15);
        }
    }

    #[test]
    fn ecdf_single_value_and_empty() {
        let g = ecdf(&[2.5]).unwrap();
        assert_eq!(g.knots(), &[2.5]);
        assert_eq!(g.cdf_values(), &[1.0]);
        assert!(ecdf(&[]).is_err());
        assert!(ecdf(&[f64::NAN]).is_err());
    }

    #[test]
    fn merged_ecdf_identity() {
        let ts = worked_example();
        let pi = ts.pi_n();
        let f = ecdf(ts.x()).unwrap();
        let g = ecdf(ts.y()).unwrap();
        let pooled: Vec<f64> = ts.x().iter().chain(ts.y()).copied().collect();
        let h = ecdf(&pooled).unwrap();
        for (&z, &hv) in h.knots().iter().zip(h.cdf_values()) {
            let mix = pi * f.cdf(z) + (1.0 - pi) * g.cdf(z);
            assert!((mix - hv).abs() < 1e-15);
        }
    }

    #[test]
    fn pooled_worked_example() {
        let p = PooledSample::new(&worked_example());
        assert_eq!(p.z(), &[-1.0, 0.0, 1.0, 2.0, 3.0, 6.0]);
        assert_eq!(p.d_count(), &[1, 0, 0, 1, 2, 0]);
        assert_eq!(p.total_count(), &[1, 2, 1, 1, 4, 1]);
        assert_eq!((p.n1(), p.n2()), (4, 6));
        assert!((p.pi_n() - 0.4).abs() < 1e-15);
        assert_eq!(p.y_max(), 6.0);
    }

    #[test]
    fn pooled_disjoint_values() {
        let ts = TwoSample::new(vec![1.5, 2.5, 2.5], vec![1.0, 1.0, 2.0]).unwrap();
        let p = PooledSample::new(&ts);
        for k in 0..p.len() {
            assert!(p.d_count()[k] == 0 || p.y_count(k) == 0);
        }
        assert_eq!(p.total_count(), &[2, 1, 1, 2]);
    }

    #[test]
    fn pooled_is_order_invariant() {
        let ts = worked_example();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let base = PooledSample::new(&ts);
        for _ in 0..20 {
            let mut x = ts.x().to_vec();
            let mut y = ts.y().to_vec();
            x.shuffle(&mut rng);
            y.shuffle(&mut rng);
            assert_eq!(PooledSample::new(&TwoSample::new(x, y).unwrap()), base);
        }
    }

    #[test]
    fn degenerate_order_rejected() {
        let err = TwoSample::new(vec![3.0, 4.0], vec![1.0, 3.0]).unwrap_err();
        assert!(matches!(err, LroError::DegenerateOrder { .. }));
        assert!(TwoSample::new(vec![1.0], vec![1.0]).is_err());
        assert!(TwoSample::new(vec![], vec![1.0]).is_err());
        assert!(TwoSample::new(vec![0.0], vec![f64::NAN]).is_err());
        assert!(TwoSample::new(vec![2.0, 0.5], vec![1.0]).is_ok());
    }
}
