//! Bracketing root refinement (Brent's method).

use crate::error::{LeewaveError, Result};

/// Finds a root of `f` in the bracket [a, b] with f(a), f(b) of opposite sign.
///
/// Brent's method: inverse quadratic interpolation and secant steps guarded
/// by bisection. Converges to absolute abscissa tolerance `xtol` (plus a
/// machine-epsilon floor proportional to the iterate).
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    brent_with(&mut f, a, b, fa, fb, xtol)
}

/// Brent's method when the bracket endpoint values are already known.
pub fn brent_with<F: FnMut(f64) -> f64>(
    f: &mut F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    xtol: f64,
) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(LeewaveError::Numerical(format!(
            "root bracket [{a}, {b}] does not change sign"
        )));
    }
    // c is the previous iterate; (b, fb) holds the best estimate.
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.abs() > fc.abs() {
            // Ensure b is the best approximation, a the previous one.
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() < tol || fa.abs() <= fb.abs() {
            d = m;
            e = m;
        } else {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                // Secant step.
                (2.0 * m * s, 1.0 - s)
            } else {
                // Inverse quadratic interpolation.
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol {
            d
        } else if m > 0.0 {
            tol
        } else {
            -tol
        };
        fb = f(b);
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Err(LeewaveError::Numerical(
        "root refinement exceeded the iteration limit".into(),
    ))
}
