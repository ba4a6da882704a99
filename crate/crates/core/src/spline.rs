//! Natural cubic spline on strictly increasing knots.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("spline needs at least 2 knots, got {0}")]
    TooFewKnots(usize),
    #[error("knot and value counts differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("knots must be strictly increasing and finite")]
    BadKnots,
}

/// Piecewise cubic with continuous second derivative and zero curvature at
/// both end knots.
#[derive(Debug, Clone)]
pub struct NaturalCubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self, SplineError> {
        let n = xs.len();
        if n < 2 {
            return Err(SplineError::TooFewKnots(n));
        }
        if ys.len() != n {
            return Err(SplineError::LengthMismatch(n, ys.len()));
        }
        if xs.iter().any(|x| !x.is_finite()) || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SplineError::BadKnots);
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior curvatures, Thomas algorithm.
            let k = n - 2;
            let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                diag[i] = 2.0 * (h[i] + h[i + 1]);
                upper[i] = h[i + 1];
                rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h[i + 1] - (ys[i + 1] - ys[i]) / h[i]);
            }
            for i in 1..k {
                let w = h[i] / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(Self { xs: xs.to_vec(), ys: ys.to_vec(), m })
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    /// Evaluates the spline; outside the knot range the end cubics are continued.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    /// Curvatures at the knots; the first and last are zero by construction.
    pub fn knot_curvatures(&self) -> &[f64] {
        &self.m
    }
}
