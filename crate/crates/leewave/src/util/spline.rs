//! Natural cubic splines with analytic derivatives and integrals.

use crate::error::{LeewaveError, Result};

/// Natural cubic spline through nodes with strictly increasing abscissae.
///
/// Evaluation outside the node range extrapolates the boundary cubic, which
/// for natural end conditions is close to linear continuation.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivative of the spline at each node (zero at both ends).
    m: Vec<f64>,
}

impl CubicSpline {
    /// Builds the spline; requires at least two nodes and strictly increasing x.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 {
            return Err(LeewaveError::InvalidInput(
                "spline needs at least two nodes".into(),
            ));
        }
        if y.len() != n {
            return Err(LeewaveError::InvalidInput(format!(
                "spline node count mismatch: {} abscissae, {} values",
                n,
                y.len()
            )));
        }
        if !x.windows(2).all(|w| w[1] > w[0]) {
            return Err(LeewaveError::InvalidInput(
                "spline abscissae must be strictly increasing".into(),
            ));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(LeewaveError::InvalidInput(
                "spline data must be finite".into(),
            ));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior second derivatives, natural ends.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut sup = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = (h0 + h1) / 3.0;
                sup[i] = h1 / 6.0;
                rhs[i] = (y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0;
            }
            // Thomas algorithm; subdiagonal entry i equals sup[i-1] by symmetry.
            for i in 1..k {
                let w = sup[i - 1] / diag[i - 1];
                diag[i] -= w * sup[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - sup[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(CubicSpline { x, y, m })
    }

    /// Node abscissae.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Node values.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Index of the segment containing (or nearest to) the query point.
    fn segment(&self, xq: f64) -> usize {
        let n = self.x.len();
        match self
            .x
            .binary_search_by(|v| v.partial_cmp(&xq).expect("finite"))
        {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Spline value.
    pub fn eval(&self, xq: f64) -> f64 {
        let i = self.segment(xq);
        let h = self.x[i + 1] - self.x[i];
        let t = xq - self.x[i];
        let s = self.x[i + 1] - xq;
        self.m[i] * s * s * s / (6.0 * h)
            + self.m[i + 1] * t * t * t / (6.0 * h)
            + (self.y[i] / h - self.m[i] * h / 6.0) * s
            + (self.y[i + 1] / h - self.m[i + 1] * h / 6.0) * t
    }

    /// First derivative.
    pub fn deriv(&self, xq: f64) -> f64 {
        let i = self.segment(xq);
        let h = self.x[i + 1] - self.x[i];
        let t = xq - self.x[i];
        let s = self.x[i + 1] - xq;
        -self.m[i] * s * s / (2.0 * h) + self.m[i + 1] * t * t / (2.0 * h)
            - (self.y[i] / h - self.m[i] * h / 6.0)
            + (self.y[i + 1] / h - self.m[i + 1] * h / 6.0)
    }

    /// Second derivative (piecewise linear, continuous).
    pub fn deriv2(&self, xq: f64) -> f64 {
        let i = self.segment(xq);
        let h = self.x[i + 1] - self.x[i];
        let t = xq - self.x[i];
        let s = self.x[i + 1] - xq;
        self.m[i] * s / h + self.m[i + 1] * t / h
    }

    /// Antiderivative over the segment `i` from its left node to `xq`.
    fn segment_integral(&self, i: usize, xq: f64) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let t = xq - self.x[i];
        let s = self.x[i + 1] - xq;
        self.m[i] * (h * h * h * h - s * s * s * s) / (24.0 * h)
            + self.m[i + 1] * t * t * t * t / (24.0 * h)
            + (self.y[i] / h - self.m[i] * h / 6.0) * (h * h - s * s) / 2.0
            + (self.y[i + 1] / h - self.m[i + 1] * h / 6.0) * t * t / 2.0
    }

    /// Exact integral of the spline over [a, b] (signed when a > b).
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        if a > b {
            return -self.integrate(b, a);
        }
        let ia = self.segment(a);
        let ib = self.segment(b);
        if ia == ib {
            return self.segment_integral(ia, b) - self.segment_integral(ia, a);
        }
        let mut total = self.segment_integral(ia, self.x[ia + 1]) - self.segment_integral(ia, a);
        for i in ia + 1..ib {
            total += self.segment_integral(i, self.x[i + 1]);
        }
        total += self.segment_integral(ib, b);
        total
    }
}
