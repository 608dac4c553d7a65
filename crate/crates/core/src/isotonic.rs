//! Weighted isotonic regression on a total order (pool adjacent violators).

use serde::Serialize;

use crate::error::{LroError, Result};

/// Responses and positive weights ordered by an implicit increasing predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSeries {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSeries {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(LroError::InvalidInput("empty series".into()));
        }
        if values.len() != weights.len() {
            return Err(LroError::InvalidInput(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(LroError::InvalidInput(format!("non-finite value {v}")));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(LroError::InvalidInput(format!(
                "weights must be positive and finite, got {w}"
            )));
        }
        Ok(Self { values, weights })
    }

    /// Same as [`WeightedSeries::new`] with unit weights.
    pub fn unweighted(values: Vec<f64>) -> Result<Self> {
        let weights = vec![1.0; values.len()];
        Self::new(values, weights)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Weighted least-squares criterion `sum w (t - rho)^2`.
    pub fn criterion(&self, fitted: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .zip(fitted)
            .map(|((t, w), r)| w * (t - r) * (t - r))
            .sum()
    }

    /// Binomial log-likelihood `sum w [t ln rho + (1 - t) ln(1 - rho)]`, with
    /// `0 ln 0 = 0`. Returns `-inf` when a fitted value of 0 or 1 contradicts
    /// the data.
    pub fn binomial_log_likelihood(&self, fitted: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .zip(fitted)
            .map(|((&t, &w), &r)| w * (xlogy(t, r) + xlogy(1.0 - t, 1.0 - r)))
            .sum()
    }
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// A maximal run of equal fitted values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Block {
    /// First index of the block.
    pub start: usize,
    /// One past the last index.
    pub end: usize,
    pub level: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotonicFit {
    fitted: Vec<f64>,
    blocks: Vec<Block>,
}

impl IsotonicFit {
    fn from_fitted(fitted: Vec<f64>, weights: &[f64]) -> Self {
        let mut blocks: Vec<Block> = Vec::new();
        for (i, (&r, &w)) in fitted.iter().zip(weights).enumerate() {
            match blocks.last_mut() {
                Some(b) if b.level == r => {
                    b.end = i + 1;
                    b.weight += w;
                }
                _ => blocks.push(Block {
                    start: i,
                    end: i + 1,
                    level: r,
                    weight: w,
                }),
            }
        }
        Self { fitted, blocks }
    }

    pub fn fitted(&self) -> &[f64] {
        &self.fitted
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.fitted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fitted.is_empty()
    }
}

/// Non-decreasing weighted least-squares fit. For responses in `[0, 1]` this is
/// also the binomial maximum likelihood fit under monotonicity.
pub fn pava(series: &WeightedSeries) -> IsotonicFit {
    let fitted = pava_values(series.values(), series.weights());
    IsotonicFit::from_fitted(fitted, series.weights())
}

/// Block-stack PAVA on raw slices. Adjacent blocks with equal means are
/// merged, so block levels are strictly increasing.
pub(crate) fn pava_values(values: &[f64], weights: &[f64]) -> Vec<f64> {
    // (sum w*t, sum w, length)
    let mut stack: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&t, &w) in values.iter().zip(weights) {
        let mut cur = (w * t, w, 1usize);
        while let Some(&(swt, sw, len)) = stack.last() {
            if swt / sw >= cur.0 / cur.1 {
                cur = (cur.0 + swt, cur.1 + sw, cur.2 + len);
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(cur);
    }
    let mut fitted = Vec::with_capacity(values.len());
    for (swt, sw, len) in stack {
        let level = swt / sw;
        fitted.extend(std::iter::repeat_n(level, len));
    }
    fitted
}

/// Monotone fit subject to `rho_k <= bound` for the first `split` entries and
/// `rho_k >= bound` for the rest.
///
/// Each side is fitted separately and clamped, which is the exact constrained
/// projection.
pub fn pava_bounded(series: &WeightedSeries, split: usize, bound: f64) -> Result<IsotonicFit> {
    check_split(series, split)?;
    check_bound(bound)?;
    let (t, w) = (series.values(), series.weights());
    let mut fitted = pava_values(&t[..split], &w[..split]);
    fitted.iter_mut().for_each(|r| *r = r.min(bound));
    let right = pava_values(&t[split..], &w[split..]);
    fitted.extend(right.into_iter().map(|r| r.max(bound)));
    Ok(IsotonicFit::from_fitted(fitted, w))
}

fn check_split(series: &WeightedSeries, split: usize) -> Result<()> {
    if split > series.len() {
        return Err(LroError::InvalidInput(format!(
            "split index {split} out of range for a series of length {}",
            series.len()
        )));
    }
    Ok(())
}

fn check_bound(bound: f64) -> Result<()> {
    if !bound.is_finite() {
        return Err(LroError::InvalidInput(format!("non-finite bound {bound}")));
    }
    Ok(())
}
