//! Greatest convex minorants, least concave majorants and left derivatives of
//! finite point diagrams.

use serde::{Deserialize, Serialize};

use crate::error::{LroError, Result};

/// A finite planar diagram with strictly increasing abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<(f64, f64)>,
}

impl PointSet {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(LroError::InvalidInput(format!(
                "a diagram needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(&(x, y)) = points.iter().find(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(LroError::InvalidInput(format!(
                "non-finite diagram point ({x}, {y})"
            )));
        }
        if let Some(w) = points.windows(2).find(|w| w[0].0 >= w[1].0) {
            return Err(LroError::InvalidInput(format!(
                "diagram abscissae must be strictly increasing ({} then {})",
                w[0].0, w[1].0
            )));
        }
        Ok(Self { points })
    }

    pub fn from_xy(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(LroError::InvalidInput(format!(
                "coordinate lengths differ ({} vs {})",
                xs.len(),
                ys.len()
            )));
        }
        Self::new(xs.iter().copied().zip(ys.iter().copied()).collect())
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn negated(&self) -> Self {
        Self {
            points: self.points.iter().map(|&(x, y)| (x, -y)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Convex,
    Concave,
}

/// Continuous piecewise-linear function on `[x_first, x_last]` given by its
/// vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearFn {
    vertices: Vec<(f64, f64)>,
    shape: Shape,
}

impl PiecewiseLinearFn {
    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.vertices[0].0, self.vertices[self.vertices.len() - 1].0)
    }

    /// Slopes of consecutive segments.
    pub fn slopes(&self) -> Vec<f64> {
        self.vertices
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    /// Value at `x` by linear interpolation between vertices.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&x) {
            return Err(LroError::Domain { x, lo, hi });
        }
        let i = self.segment_ending_at_or_after(x);
        if i == 0 {
            return Ok(self.vertices[0].1);
        }
        let (x0, y0) = self.vertices[i - 1];
        let (x1, y1) = self.vertices[i];
        if x == x1 {
            return Ok(y1);
        }
        Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }

    /// Index of the first vertex whose abscissa is `>= x`.
    fn segment_ending_at_or_after(&self, x: f64) -> usize {
        self.vertices.partition_point(|&(vx, _)| vx < x)
    }

    fn negated(self) -> Self {
        Self {
            vertices: self.vertices.into_iter().map(|(x, y)| (x, -y)).collect(),
            shape: match self.shape {
                Shape::Convex => Shape::Concave,
                Shape::Concave => Shape::Convex,
            },
        }
    }
}

/// Greatest convex minorant of `diagram` over `[x_first, x_last]`.
///
/// Monotone-chain scan; collinear points are dropped so the vertex list is
/// minimal.
pub fn gcm(diagram: &PointSet) -> PiecewiseLinearFn {
    let pts = diagram.points();
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // keep b only if slope(a, b) < slope(b, p)
            let lhs = (b.1 - a.1) * (p.0 - b.0);
            let rhs = (p.1 - b.1) * (b.0 - a.0);
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    PiecewiseLinearFn {
        vertices: hull,
        shape: Shape::Convex,
    }
}

/// Least concave majorant, computed as `-gcm(-diagram)`.
pub fn lcm(diagram: &PointSet) -> PiecewiseLinearFn {
    gcm(&diagram.negated()).negated()
}

/// Slope of the segment immediately to the left of `x`; at a vertex this is
/// the incoming segment.
pub fn left_derivative(f: &PiecewiseLinearFn, x: f64) -> Result<f64> {
    let (lo, hi) = f.domain();
    if !(x > lo && x <= hi) {
        return Err(LroError::Domain { x, lo, hi });
    }
    let i = f.segment_ending_at_or_after(x);
    let (x0, y0) = f.vertices[i - 1];
    let (x1, y1) = f.vertices[i];
    Ok((y1 - y0) / (x1 - x0))
}

/// Evaluates the left derivative at each `x` in sorted order, in one pass.
pub fn left_derivatives_sorted(f: &PiecewiseLinearFn, xs: &[f64]) -> Result<Vec<f64>> {
    let slopes = f.slopes();
    let (lo, hi) = f.domain();
    let mut seg = 1;
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        if !(x > lo && x <= hi) {
            return Err(LroError::Domain { x, lo, hi });
        }
        while f.vertices[seg].0 < x {
            seg += 1;
        }
        out.push(slopes[seg - 1]);
    }
    Ok(out)
}
