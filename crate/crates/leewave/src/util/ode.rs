//! Wrappers around the DOP853 adaptive Runge-Kutta integrator.
//!
//! Endpoint integration reads the exactly clamped final accepted step, so
//! results carry the integrator's full discrete accuracy. Grid sampling
//! chains endpoint integrations node to node rather than using interpolated
//! dense output, whose order-7 interpolant is noticeably less accurate than
//! the order-8 steps.

use crate::error::{LeewaveError, Result};
use ode_solvers::dop853::Dop853;
use ode_solvers::{OutputType, SVector, System};

/// Adapter exposing a closure as an ODE system.
struct ClosureSystem<F, const N: usize>
where
    F: Fn(f64, &SVector<f64, N>, &mut SVector<f64, N>),
{
    rhs: F,
}

impl<F, const N: usize> System<f64, SVector<f64, N>> for ClosureSystem<F, N>
where
    F: Fn(f64, &SVector<f64, N>, &mut SVector<f64, N>),
{
    fn system(&self, x: f64, y: &SVector<f64, N>, dy: &mut SVector<f64, N>) {
        (self.rhs)(x, y, dy)
    }
}

const N_MAX_STEPS: u32 = 20_000_000;
/// Effectively disables the stiffness heuristic (oscillatory systems trip it).
const N_STIFF: u32 = u32::MAX;

/// Integrates from `x0` to `x1` (either direction) and returns the state at `x1`.
pub fn integrate_endpoint<F, const N: usize>(
    rhs: F,
    x0: f64,
    x1: f64,
    y0: SVector<f64, N>,
    rtol: f64,
    atol: f64,
) -> Result<SVector<f64, N>>
where
    F: Fn(f64, &SVector<f64, N>, &mut SVector<f64, N>),
{
    if x0 == x1 {
        return Ok(y0);
    }
    let system = ClosureSystem { rhs };
    // Sparse output records every accepted step; the final step is clamped
    // exactly to x1 by the controller.
    let mut solver = Dop853::from_param(
        system,
        x0,
        x1,
        (x1 - x0).abs(),
        y0,
        rtol,
        atol,
        0.9,   // safety factor
        0.0,   // step-control beta (plain I control)
        0.333, // fac_min
        6.0,   // fac_max
        (x1 - x0).abs(),
        0.0, // initial step chosen automatically
        N_MAX_STEPS,
        N_STIFF,
        OutputType::Sparse,
    );
    solver
        .integrate()
        .map_err(|e| LeewaveError::Numerical(format!("ODE integration failed: {e}")))?;
    solver.y_out().last().copied().ok_or_else(|| {
        LeewaveError::Numerical("integrator returned no accepted steps".into())
    })
}

/// Integrates through the strictly monotone abscissae `xs` (increasing or
/// decreasing), starting from `y0` at `xs[0]`, and returns the state at every
/// node. Each internode span is integrated to the full tolerance, so node
/// values are free of dense-interpolation error.
pub fn integrate_grid<F, const N: usize>(
    rhs: F,
    xs: &[f64],
    y0: SVector<f64, N>,
    rtol: f64,
    atol: f64,
) -> Result<Vec<SVector<f64, N>>>
where
    F: Fn(f64, &SVector<f64, N>, &mut SVector<f64, N>),
{
    assert!(!xs.is_empty(), "grid must be nonempty");
    let mut out = Vec::with_capacity(xs.len());
    out.push(y0);
    let mut y = y0;
    for k in 1..xs.len() {
        y = integrate_endpoint(&rhs, xs[k - 1], xs[k], y, rtol, atol)?;
        out.push(y);
    }
    Ok(out)
}

/// Builds a uniform grid of `n` points spanning `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let h = (b - a) / (n - 1) as f64;
    let mut xs: Vec<f64> = (0..n).map(|k| a + h * k as f64).collect();
    xs[n - 1] = b;
    xs
}
