use serde::Serialize;

use crate::error::{LroError, Result};

/// Right-continuous step distribution function with jumps at `knots`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDistribution {
    knots: Vec<f64>,
    cdf: Vec<f64>,
}

const CDF_TOL: f64 = 1e-9;

impl StepDistribution {
    /// Values within rounding of `[0, 1]` are clamped and the final value is
    /// set to exactly 1.
    pub fn new(knots: Vec<f64>, mut cdf: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != cdf.len() {
            return Err(LroError::InvalidInput(format!(
                "{} knots with {} cdf values",
                knots.len(),
                cdf.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) || knots.iter().any(|k| !k.is_finite()) {
            return Err(LroError::InvalidInput("knots must be finite and strictly increasing".into()));
        }
        let mut prev = 0.0;
        for v in cdf.iter_mut() {
            if !(*v >= prev - CDF_TOL && *v <= 1.0 + CDF_TOL) {
                return Err(LroError::InvalidInput(format!(
                    "cdf values must be non-decreasing in [0, 1], got {v} after {prev}"
                )));
            }
            *v = v.clamp(prev, 1.0);
            prev = *v;
        }
        let last = cdf.len() - 1;
        if (cdf[last] - 1.0).abs() > CDF_TOL {
            return Err(LroError::InvalidInput(format!(
                "final cdf value must be 1, got {}",
                cdf[last]
            )));
        }
        cdf[last] = 1.0;
        Ok(Self { knots, cdf })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    pub fn masses(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cdf
            .iter()
            .map(|&v| {
                let m = v - prev;
                prev = v;
                m
            })
            .collect()
    }

    /// `F(z)`.
    pub fn cdf(&self, z: f64) -> f64 {
        match self.knots.partition_point(|&k| k <= z) {
            0 => 0.0,
            i => self.cdf[i - 1],
        }
    }

    /// `F(z) - F(z-)`.
    pub fn mass_at(&self, z: f64) -> f64 {
        match self.knots.binary_search_by(|k| k.total_cmp(&z)) {
            Ok(0) => self.cdf[0],
            Ok(i) => self.cdf[i] - self.cdf[i - 1],
            Err(_) => 0.0,
        }
    }
}

/// Non-negative, non-decreasing step function, constant on left-open
/// intervals: `levels[0]` on `(-inf, b_0]`, `levels[i]` on `(b_{i-1}, b_i]`,
/// and the last level beyond the last breakpoint. Levels may be `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneStepFn {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl MonotoneStepFn {
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != breakpoints.len() + 1 {
            return Err(LroError::InvalidInput(format!(
                "{} levels for {} breakpoints",
                levels.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(LroError::InvalidInput("breakpoints must be strictly increasing".into()));
        }
        if levels.iter().any(|l| l.is_nan() || *l < 0.0) || levels.windows(2).any(|w| w[0] > w[1]) {
            return Err(LroError::InvalidInput(
                "levels must be non-negative and non-decreasing".into(),
            ));
        }
        Ok(Self { breakpoints, levels })
    }

    /// Builds the function from a level at each knot (applied on the interval
    /// ending at that knot), merging runs of equal levels.
    pub fn from_knot_levels(knots: &[f64], knot_levels: &[f64]) -> Result<Self> {
        if knots.is_empty() || knots.len() != knot_levels.len() {
            return Err(LroError::InvalidInput("knots and levels must be non-empty and aligned".into()));
        }
        let mut breakpoints = Vec::new();
        let mut levels = vec![knot_levels[0]];
        for i in 1..knots.len() {
            if knot_levels[i] != knot_levels[i - 1] {
                breakpoints.push(knots[i - 1]);
                levels.push(knot_levels[i]);
            }
        }
        Self::new(breakpoints, levels)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.levels[self.breakpoints.partition_point(|&b| b < z)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_distribution_lookups() {
        let f = StepDistribution::new(vec![0.0, 1.0, 3.0], vec![0.25, 0.25, 1.0]).unwrap();
        assert_eq!(f.cdf(-0.1), 0.0);
        assert_eq!(f.cdf(0.0), 0.25);
        assert_eq!(f.cdf(2.9), 0.25);
        assert_eq!(f.cdf(10.0), 1.0);
        assert_eq!(f.mass_at(1.0), 0.0);
        assert_eq!(f.mass_at(3.0), 0.75);
        assert_eq!(f.mass_at(2.0), 0.0);
        assert_eq!(f.masses(), vec![0.25, 0.0, 0.75]);
    }

    #[test]
    fn step_distribution_validation() {
        assert!(StepDistribution::new(vec![0.0, 1.0], vec![0.5, 0.9]).is_err());
        assert!(StepDistribution::new(vec![1.0, 0.0], vec![0.5, 1.0]).is_err());
        assert!(StepDistribution::new(vec![0.0, 1.0], vec![0.6, 0.5]).is_err());
        let f = StepDistribution::new(vec![0.0, 1.0], vec![0.5, 1.0 - 1e-14]).unwrap();
        assert_eq!(f.cdf_values()[1], 1.0);
    }

    #[test]
    fn monotone_step_left_open_convention() {
        let t = MonotoneStepFn::from_knot_levels(&[-1.0, 0.0, 1.0, 2.0], &[0.5, 0.5, 0.5, 1.5])
            .unwrap();
        assert_eq!(t.breakpoints(), &[1.0]);
        assert_eq!(t.levels(), &[0.5, 1.5]);
        assert_eq!(t.eval(-50.0), 0.5);
        assert_eq!(t.eval(1.0), 0.5);
        assert_eq!(t.eval(1.0 + 1e-12), 1.5);
        assert_eq!(t.eval(99.0), 1.5);
    }

    #[test]
    fn monotone_step_allows_infinite_top_level() {
        let t = MonotoneStepFn::new(vec![2.0], vec![1.0, f64::INFINITY]).unwrap();
        assert_eq!(t.eval(3.0), f64::INFINITY);
        assert!(MonotoneStepFn::new(vec![2.0], vec![1.0, 0.5]).is_err());
        assert!(MonotoneStepFn::new(vec![], vec![-1.0]).is_err());
    }
}
