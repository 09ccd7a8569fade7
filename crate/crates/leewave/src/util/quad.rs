//! Quadrature rules: trapezoid, Simpson, Gauss-Legendre, adaptive Simpson.

use crate::error::{LeewaveError, Result};

/// Composite trapezoid on a (possibly non-uniform) grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "trapezoid grid mismatch");
    let mut acc = 0.0;
    for i in 1..x.len() {
        acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    }
    acc
}

/// Cumulative trapezoid: returns the running integral at every node.
pub fn cumtrapz(x: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), y.len(), "cumtrapz grid mismatch");
    let mut out = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..x.len() {
        acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
        out.push(acc);
    }
    out
}

/// Composite Simpson on a uniform grid; falls back to a trapezoid step on the
/// final interval when the number of intervals is odd.
pub fn simpson_uniform(y: &[f64], dx: f64) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * dx * (y[0] + y[1]);
    }
    let pairs = (n - 1) / 2;
    let mut acc = 0.0;
    for k in 0..pairs {
        let i = 2 * k;
        acc += dx / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
    }
    if (n - 1) % 2 == 1 {
        acc += 0.5 * dx * (y[n - 2] + y[n - 1]);
    }
    acc
}

/// Inserts `factor - 1` equally spaced points into every interval of `x`.
pub fn refine_grid(x: &[f64], factor: usize) -> Vec<f64> {
    assert!(factor >= 1, "refinement factor must be at least 1");
    if x.len() < 2 || factor == 1 {
        return x.to_vec();
    }
    let mut out = Vec::with_capacity((x.len() - 1) * factor + 1);
    for i in 0..x.len() - 1 {
        for k in 0..factor {
            out.push(x[i] + (x[i + 1] - x[i]) * k as f64 / factor as f64);
        }
    }
    out.push(*x.last().unwrap());
    out
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    /// Nodes in increasing order.
    pub nodes: Vec<f64>,
    /// Weights matching `nodes`.
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the n-point rule via Newton iteration on the Legendre polynomial.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for k in 0..m {
            // Standard starting guess for the k-th positive root.
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Evaluate P_n and its derivative by upward recurrence.
                let mut p0 = 1.0;
                let mut p1 = x;
                for j in 2..=n {
                    let pj = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = pj;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[k] = -x;
            nodes[n - 1 - k] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[k] = w;
            weights[n - 1 - k] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to the interval [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| (c + h * t, h * w))
            .collect()
    }

    /// Integrates `f` over [a, b] with this rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).iter().map(|&(x, w)| w * f(x)).sum()
    }
}

/// Adaptive Simpson integration to absolute tolerance `tol`.
///
/// Returns the integral estimate; fails if the recursion cannot reach the
/// requested tolerance within the depth limit.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol || (b - a).abs() < 1e-14 {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(LeewaveError::Numerical(format!(
                "adaptive Simpson depth exhausted on [{a}, {b}]"
            )));
        }
        let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
        let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
        Ok(l + r)
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Adaptive Simpson over a panel decomposition, each panel to `tol / panels`.
pub fn adaptive_simpson_panels<F: Fn(f64) -> f64>(
    f: &F,
    breakpoints: &[f64],
    tol: f64,
) -> Result<f64> {
    assert!(breakpoints.len() >= 2, "need at least one panel");
    let per = tol / (breakpoints.len() - 1) as f64;
    let mut acc = 0.0;
    for w in breakpoints.windows(2) {
        acc += adaptive_simpson(f, w[0], w[1], per)?;
    }
    Ok(acc)
}
