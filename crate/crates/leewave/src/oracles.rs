//! Closed-form reference solutions used to validate the numerical pipeline.
//!
//! The Morse well admits exact regular solutions, spectral density, and bound
//! states in terms of the confluent hypergeometric function M, and the
//! constant-coefficient problem admits exact kernels (the Poisson kernel and
//! its oscillatory analogue under the outgoing radiation condition). These
//! are computed here by independent means (power series, asymptotic series,
//! adaptive quadrature of explicit integrands) so the transform pipeline can
//! be tested against them end to end.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{LeewaveError, Result};
use crate::util::quad::{adaptive_simpson_panels, GaussLegendre};
use crate::util::roots::brent_with;
use crate::util::special::{e1, gamma, recip_gamma};

/// Exponential well `q(z) = Q (e^{-2a(z-z0)} - 2 e^{-a(z-z0)})`.
///
/// The well floor sits at `z = z0` with depth `Q`; the potential vanishes
/// rapidly above the well and grows like `Q e^{2 a z0}` toward `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorseParams {
    /// Well depth `Q > 0`.
    pub depth: f64,
    /// Decay rate `a > 0`.
    pub decay: f64,
    /// Center `z0 > 0` of the well floor.
    pub center: f64,
}

impl MorseParams {
    pub fn new(depth: f64, decay: f64, center: f64) -> Result<Self> {
        if !(depth > 0.0 && depth.is_finite()) {
            return Err(LeewaveError::InvalidInput(format!(
                "Morse depth must be positive and finite, got {depth}"
            )));
        }
        if !(decay > 0.0 && decay.is_finite()) {
            return Err(LeewaveError::InvalidInput(format!(
                "Morse decay must be positive and finite, got {decay}"
            )));
        }
        if !(center > 0.0 && center.is_finite()) {
            return Err(LeewaveError::InvalidInput(format!(
                "Morse center must be positive and finite, got {center}"
            )));
        }
        Ok(Self {
            depth,
            decay,
            center,
        })
    }

    /// The canonical test well with depth 1, decay 1, center 1.
    pub fn canonical() -> Self {
        Self {
            depth: 1.0,
            decay: 1.0,
            center: 1.0,
        }
    }

    /// Potential value at height `z`.
    pub fn q(&self, z: f64) -> f64 {
        let e = (-self.decay * (z - self.center)).exp();
        self.depth * (e * e - 2.0 * e)
    }

    /// The substitution variable `s(z) = (2 sqrt(Q) / a) e^{-a(z-z0)}`.
    pub fn s(&self, z: f64) -> f64 {
        2.0 * self.depth.sqrt() / self.decay * (-self.decay * (z - self.center)).exp()
    }
}

/// Power-series / asymptotic crossover for the confluent hypergeometric M.
pub const KUMMER_S_SWITCH: f64 = 30.0;

fn near_nonpositive_integer(z: Complex64) -> bool {
    let r = z.re.round();
    z.im.abs() < 1e-9 && r <= 0.5 && (z.re - r).abs() < 1e-9
}

/// Confluent hypergeometric function `M(alpha, beta, s)` for real `s >= 0`.
///
/// Uses the Taylor series for `s <= 30` and the large-`s` asymptotic
/// expansion beyond, truncated at its smallest term. The asymptotic branch is
/// reliable while `|alpha|` and `|beta - alpha|` stay well below `s` (about
/// `s / 3`); all callers in this crate satisfy that comfortably.
pub fn kummer_m(alpha: Complex64, beta: Complex64, s: f64) -> Result<Complex64> {
    if near_nonpositive_integer(beta) {
        return Err(LeewaveError::Numerical(format!(
            "Kummer M has a pole at nonpositive integer beta = {beta}"
        )));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(LeewaveError::InvalidInput(format!(
            "Kummer M argument must be finite and nonnegative, got {s}"
        )));
    }
    if s <= KUMMER_S_SWITCH {
        kummer_taylor(alpha, beta, s)
    } else {
        Ok(kummer_asymptotic(alpha, beta, s))
    }
}

fn kummer_taylor(alpha: Complex64, beta: Complex64, s: f64) -> Result<Complex64> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 0..400 {
        let kf = k as f64;
        term *= (alpha + kf) * s / ((beta + kf) * (kf + 1.0));
        sum += term;
        if k > 3 && term.norm() <= 1e-17 * sum.norm().max(1e-300) {
            return Ok(sum);
        }
    }
    Err(LeewaveError::Numerical(format!(
        "Kummer M series failed to converge for alpha={alpha}, beta={beta}, s={s}"
    )))
}

/// Sums `1 + sum_k (p)_k (q)_k / (k! x^k)` by optimal truncation.
fn poch_series(p: Complex64, q: Complex64, x: f64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut prev = f64::INFINITY;
    for k in 0..60 {
        let kf = k as f64;
        let next = term * (p + kf) * (q + kf) / ((kf + 1.0) * x);
        let mag = next.norm();
        if mag >= prev || mag <= 1e-18 * sum.norm().max(1e-300) {
            break;
        }
        term = next;
        sum += term;
        prev = mag;
    }
    sum
}

fn kummer_asymptotic(alpha: Complex64, beta: Complex64, s: f64) -> Complex64 {
    let ln_s = s.ln();
    let s_pow = |p: Complex64| (p * ln_s).exp();
    let dominant = s.exp() * s_pow(alpha - beta) * recip_gamma(alpha)
        * poch_series(beta - alpha, Complex64::new(1.0, 0.0) - alpha, s);
    let recessive = (PI * alpha).cos() * s_pow(-alpha) * recip_gamma(beta - alpha)
        * poch_series(alpha, alpha - beta + 1.0, -s);
    gamma(beta) * (dominant + recessive)
}

/// Derivative `dM/ds` via the contiguous relation `M' = (alpha/beta) M(alpha+1, beta+1, s)`.
pub fn kummer_m_deriv(alpha: Complex64, beta: Complex64, s: f64) -> Result<Complex64> {
    Ok(alpha / beta * kummer_m(alpha + 1.0, beta + 1.0, s)?)
}

/// One basis solution `phi(z) = (s/2)^{p/a} e^{-s/2} M(alpha, beta, s(z))` of
/// the Morse equation together with its `z` derivative.
fn morse_basis(
    params: &MorseParams,
    p: Complex64,
    alpha: Complex64,
    beta: Complex64,
    z: f64,
) -> Result<(Complex64, Complex64)> {
    let a = params.decay;
    let s = params.s(z);
    let half = s / 2.0;
    let prefactor = (p / a * half.ln()).exp() * (-half).exp();
    let m = kummer_m(alpha, beta, s)?;
    let m_up = kummer_m(alpha + 1.0, beta + 1.0, s)?;
    // With ds/dz = -a s the z derivative collapses to a bracket of M values.
    let bracket = -p * m + (a * half) * m - a * s * (alpha / beta) * m_up;
    Ok((prefactor * m, prefactor * bracket))
}

fn solve_2x2(a11: f64, a12: f64, a21: f64, a22: f64, b1: f64, b2: f64) -> Result<(f64, f64)> {
    let det = a11 * a22 - a12 * a21;
    let scale = a11.abs().max(a12.abs()).max(a21.abs()).max(a22.abs());
    if det.abs() <= 1e-14 * scale * scale {
        return Err(LeewaveError::Numerical(
            "degenerate 2x2 system in Morse basis matching".into(),
        ));
    }
    Ok(((b1 * a22 - b2 * a12) / det, (a11 * b2 - a21 * b1) / det))
}

/// Exact regular solution of `-v'' + q v = lambda v`, `v(0) = 0`, `v'(0) = 1`
/// for the Morse well, returned as `(v, v')` at each requested height.
pub fn morse_regular_solution(
    params: &MorseParams,
    lambda: f64,
    zs: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let a = params.decay;
    let nu = params.depth.sqrt() / a;
    if lambda > 0.0 {
        let rt = lambda.sqrt();
        let p = Complex64::new(0.0, -rt);
        let alpha = Complex64::new(0.5 - nu, -rt / a);
        let beta = Complex64::new(1.0, -2.0 * rt / a);
        let (phi0, dphi0) = morse_basis(params, p, alpha, beta, 0.0)?;
        // v = 2 Re(c phi) with the companion solution the complex conjugate.
        let (x, y) = solve_2x2(
            2.0 * phi0.re,
            -2.0 * phi0.im,
            2.0 * dphi0.re,
            -2.0 * dphi0.im,
            0.0,
            1.0,
        )?;
        let c = Complex64::new(x, y);
        zs.iter()
            .map(|&z| {
                let (phi, dphi) = morse_basis(params, p, alpha, beta, z)?;
                Ok((2.0 * (c * phi).re, 2.0 * (c * dphi).re))
            })
            .collect()
    } else if lambda < 0.0 {
        let kappa = (-lambda).sqrt();
        let beta2 = Complex64::new(-2.0 * kappa / a + 1.0, 0.0);
        if near_nonpositive_integer(beta2) {
            return Err(LeewaveError::Numerical(format!(
                "Morse basis degenerates at 2 sqrt(-lambda)/a = {}; shift lambda slightly",
                2.0 * kappa / a
            )));
        }
        let p1 = Complex64::new(kappa, 0.0);
        let alpha1 = Complex64::new(kappa / a + 0.5 - nu, 0.0);
        let beta1 = Complex64::new(2.0 * kappa / a + 1.0, 0.0);
        let p2 = Complex64::new(-kappa, 0.0);
        let alpha2 = Complex64::new(-kappa / a + 0.5 - nu, 0.0);
        let (phi1_0, dphi1_0) = morse_basis(params, p1, alpha1, beta1, 0.0)?;
        let (phi2_0, dphi2_0) = morse_basis(params, p2, alpha2, beta2, 0.0)?;
        let (c1, c2) = solve_2x2(phi1_0.re, phi2_0.re, dphi1_0.re, dphi2_0.re, 0.0, 1.0)?;
        zs.iter()
            .map(|&z| {
                let (phi1, dphi1) = morse_basis(params, p1, alpha1, beta1, z)?;
                let (phi2, dphi2) = morse_basis(params, p2, alpha2, beta2, z)?;
                Ok((
                    c1 * phi1.re + c2 * phi2.re,
                    c1 * dphi1.re + c2 * dphi2.re,
                ))
            })
            .collect()
    } else {
        Err(LeewaveError::InvalidInput(
            "Morse basis pair degenerates at lambda = 0".into(),
        ))
    }
}

/// Exact spectral density of the half-line Morse problem at `lambda > 0`.
pub fn morse_sigma(params: &MorseParams, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(LeewaveError::InvalidInput(format!(
            "spectral density requires lambda > 0, got {lambda}"
        )));
    }
    let a = params.decay;
    let nu = params.depth.sqrt() / a;
    let rt = lambda.sqrt();
    let s0 = params.s(0.0);
    let alpha = Complex64::new(0.5 - nu, rt / a);
    let beta = Complex64::new(1.0, 2.0 * rt / a);
    let m = kummer_m(alpha, beta, s0)?;
    Ok(rt / PI * s0.exp() / m.norm_sqr())
}

/// Exact bound-state energies of the half-line Morse problem, ascending.
///
/// With `kappa = sqrt(-lambda)`, eigenvalues are the roots of
/// `M(kappa/a + 1/2 - sqrt(Q)/a, 2 kappa/a + 1, s(0)) = 0` on `0 < kappa <= sqrt(Q)`.
pub fn morse_eigenvalues(params: &MorseParams) -> Result<Vec<f64>> {
    let a = params.decay;
    let nu = params.depth.sqrt() / a;
    let s0 = params.s(0.0);
    let condition = |kappa: f64| -> Result<f64> {
        let alpha = Complex64::new(kappa / a + 0.5 - nu, 0.0);
        let beta = Complex64::new(2.0 * kappa / a + 1.0, 0.0);
        Ok(kummer_m(alpha, beta, s0)?.re)
    };
    let kappa_max = params.depth.sqrt();
    let kappa_min = 1e-6 * kappa_max.max(a);
    let step = a / 10.0;
    let mut kappas = Vec::new();
    let mut hi = kappa_max;
    let mut f_hi = condition(hi)?;
    while hi > kappa_min {
        let lo = (hi - step).max(kappa_min);
        let f_lo = condition(lo)?;
        if f_lo == 0.0 || f_lo * f_hi < 0.0 {
            let mut err = None;
            let mut eval = |k: f64| match condition(k) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    f64::NAN
                }
            };
            let root = brent_with(&mut eval, lo, hi, f_lo, f_hi, 1e-12 * kappa_max.max(1.0))?;
            if let Some(e) = err {
                return Err(e);
            }
            kappas.push(root);
        }
        hi = lo;
        f_hi = f_lo;
    }
    // Scanning downward in kappa yields ascending lambda = -kappa^2.
    Ok(kappas.into_iter().map(|k| -k * k).collect())
}

/// The half-plane Poisson kernel, which is the exact boundary kernel when the
/// refraction function vanishes identically.
pub fn poisson_kernel(x: f64, zeta: f64) -> f64 {
    zeta / (PI * (x * x + zeta * zeta))
}

/// Exact outgoing boundary kernel for constant refraction function `f0 > 0`.
///
/// Sum of an evanescent piece (Laplace-type integral over `mu`, reduced to
/// the Poisson kernel plus a subtracted correction and an exponential-integral
/// tail) and, downstream only, a radiated piece (finite oscillatory integral).
pub fn lyra_kernel(x: f64, zeta: f64, f0: f64) -> Result<f64> {
    if x == 0.0 {
        return Err(LeewaveError::InvalidInput(
            "kernel is singular on the vertical axis x = 0".into(),
        ));
    }
    if !(zeta >= 0.0) {
        return Err(LeewaveError::InvalidInput(format!(
            "kernel requires zeta >= 0, got {zeta}"
        )));
    }
    if !(f0 > 0.0) {
        return Err(LeewaveError::InvalidInput(format!(
            "constant refraction value must be positive, got {f0}"
        )));
    }
    if zeta == 0.0 {
        return Ok(0.0);
    }
    let ax = x.abs();
    let evanescent = {
        // (1/pi) int_0^inf e^{-mu |x|} sin(sqrt(mu^2 + f0) zeta) d mu, with the
        // free part summed in closed form and the remainder truncated at mu1
        // where the integrand's deviation from its leading 1/mu tail is
        // negligible after the exponential weight.
        let mu1 = (40.0 / ax).max(2.0 * f0.sqrt());
        let integrand = |mu: f64| {
            (-mu * ax).exp() * (((mu * mu + f0).sqrt() * zeta).sin() - (mu * zeta).sin())
        };
        let panel = (2.0 / zeta.max(0.25)).min(1.0).min(mu1 / 8.0);
        let n_panels = (mu1 / panel).ceil() as usize;
        let mut breaks: Vec<f64> = (0..=n_panels)
            .map(|k| mu1 * k as f64 / n_panels as f64)
            .collect();
        breaks[n_panels] = mu1;
        let correction = adaptive_simpson_panels(&integrand, &breaks, 1e-13)?;
        let tail = f0 * zeta / 2.0 * e1(Complex64::new(mu1 * ax, -mu1 * zeta)).re;
        poisson_kernel(x, zeta) + (correction + tail) / PI
    };
    if x < 0.0 {
        return Ok(evanescent);
    }
    let radiated = {
        // -2 sqrt(f0)/pi int_0^{pi/2} sin(t) sin(sqrt(f0) x cos t) sin(sqrt(f0) zeta sin t) dt
        let rt = f0.sqrt();
        let gl = GaussLegendre::new(512);
        let val = gl.integrate(0.0, PI / 2.0, |t| {
            t.sin() * (rt * x * t.cos()).sin() * (rt * zeta * t.sin()).sin()
        });
        -2.0 * rt / PI * val
    };
    Ok(evanescent + radiated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::ode::{integrate_grid, linspace};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use ode_solvers::SVector;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn kummer_taylor_reference_values() {
        let m = kummer_m(re(1.0), re(2.0), 0.5).unwrap();
        assert_relative_eq!(m.re, 1.2974425414002562937, max_relative = 1e-14);
        let m = kummer_m(re(1.0), re(2.0), 5.0).unwrap();
        assert_relative_eq!(m.re, 29.482631820515320684, max_relative = 1e-14);
        // Canonical Morse parameters at the wall.
        let s0 = 2.0 * std::f64::consts::E;
        assert_relative_eq!(s0, 5.4365636569180904707, max_relative = 1e-15);
        let m = kummer_m(Complex64::new(-0.5, 0.8), Complex64::new(1.0, 1.6), s0).unwrap();
        assert_relative_eq!(m.re, 4.5250175691448585119, max_relative = 1e-13);
        assert_relative_eq!(m.im, 13.092941376368333901, max_relative = 1e-13);
        let m = kummer_m(Complex64::new(-0.5, 1.0), Complex64::new(1.0, 2.0), s0).unwrap();
        assert_relative_eq!(m.re, 7.5117183930952740495, max_relative = 1e-13);
        assert_relative_eq!(m.im, 12.586578528684201599, max_relative = 1e-13);
    }

    #[test]
    fn kummer_asymptotic_reference_values() {
        let m = kummer_m(re(1.0), re(2.0), 50.0).unwrap();
        assert_relative_eq!(m.re, 1.0369411057174144928e20, max_relative = 1e-12);
        let m = kummer_m(re(0.6), re(1.8), 45.0).unwrap();
        assert_relative_eq!(m.re, 229270961893024089.7, max_relative = 1e-12);
        let m = kummer_m(re(-2.3), re(1.7), 80.0).unwrap();
        assert_relative_eq!(m.re, -1.0112286784202867272e27, max_relative = 1e-12);
        let m = kummer_m(Complex64::new(0.5, 3.0), Complex64::new(1.0, 6.0), 40.0).unwrap();
        assert_relative_eq!(m.re, 944837425221431.58439, max_relative = 1e-11);
        assert_relative_eq!(m.im, 431928846325224.25364, max_relative = 1e-11);
        // Deep-well argument used by the bound-state scan.
        let m = kummer_m(re(-9.1), re(1.8), 147.78112197861300454).unwrap();
        assert_relative_eq!(m.re, 3.1818897234908822689e45, max_relative = 1e-11);
    }

    #[test]
    fn kummer_satisfies_its_differential_equation() {
        // s M'' + (beta - s) M' - alpha M = 0, with both derivatives taken
        // through the contiguous relation.
        let cases = [
            (re(0.7), re(1.9), 3.0),
            (re(-4.2), re(2.5), 17.0),
            (re(0.6), re(1.8), 45.0),
            (re(-6.5), re(3.0), 120.0),
            (Complex64::new(0.5, 2.0), Complex64::new(1.0, 4.0), 5.4),
            (Complex64::new(0.5, 1.5), Complex64::new(1.0, 3.0), 60.0),
        ];
        for (alpha, beta, s) in cases {
            let m = kummer_m(alpha, beta, s).unwrap();
            let m1 = kummer_m_deriv(alpha, beta, s).unwrap();
            let m2 = alpha * (alpha + 1.0) / (beta * (beta + 1.0))
                * kummer_m(alpha + 2.0, beta + 2.0, s).unwrap();
            let residual = s * m2 + (beta - s) * m1 - alpha * m;
            let scale = m.norm().max(m1.norm()).max(m2.norm());
            assert!(
                residual.norm() <= 1e-11 * scale,
                "residual {} too large at alpha={alpha} beta={beta} s={s}",
                residual.norm() / scale
            );
        }
    }

    #[test]
    fn kummer_deriv_matches_finite_differences() {
        let alpha = Complex64::new(-0.2, 0.9);
        let beta = Complex64::new(1.0, 1.8);
        let s = 4.0;
        let h = 1e-6;
        let fd = (kummer_m(alpha, beta, s + h).unwrap() - kummer_m(alpha, beta, s - h).unwrap())
            / (2.0 * h);
        let an = kummer_m_deriv(alpha, beta, s).unwrap();
        assert_relative_eq!(an.re, fd.re, max_relative = 1e-8);
        assert_relative_eq!(an.im, fd.im, max_relative = 1e-8);
    }

    #[test]
    fn kummer_rejects_polar_beta() {
        assert!(kummer_m(re(1.0), re(0.0), 2.0).is_err());
        assert!(kummer_m(re(1.0), re(-3.0), 2.0).is_err());
    }

    #[test]
    fn morse_regular_solution_reference_values() {
        let p = MorseParams::canonical();
        let zs = [1.0, 2.5];
        let sol = morse_regular_solution(&p, 0.64, &zs).unwrap();
        assert_relative_eq!(sol[0].0, 0.83714332275195154113, max_relative = 1e-11);
        assert_relative_eq!(sol[0].1, 0.39064849152663795829, max_relative = 1e-11);
        assert_relative_eq!(sol[1].0, 0.10354755647830988973, max_relative = 1e-10);
        assert_relative_eq!(sol[1].1, -1.0038258203908964052, max_relative = 1e-11);
        let sol = morse_regular_solution(&p, 3.0, &zs).unwrap();
        assert_relative_eq!(sol[0].0, 0.52215325445416277026, max_relative = 1e-11);
        assert_relative_eq!(sol[0].1, -0.3814498348715300096, max_relative = 1e-11);
        assert_relative_eq!(sol[1].0, -0.58038844634822824494, max_relative = 1e-11);
        assert_relative_eq!(sol[1].1, 0.099163760268939532675, max_relative = 1e-10);
        let sol = morse_regular_solution(&p, -0.18, &zs).unwrap();
        assert_relative_eq!(sol[0].0, 0.96613811720989880542, max_relative = 1e-11);
        assert_relative_eq!(sol[0].1, 0.75131149313908326265, max_relative = 1e-11);
        assert_relative_eq!(sol[1].0, 1.2401438460202316141, max_relative = 1e-11);
        assert_relative_eq!(sol[1].1, -0.22243267320526551225, max_relative = 1e-10);
    }

    #[test]
    fn morse_solution_matches_direct_integration() {
        // The Kummer-based solution and a direct high-accuracy integration of
        // the differential equation must agree; the two paths share nothing.
        let p = MorseParams::new(3.0, 1.3, 0.8).unwrap();
        for lambda in [7.5_f64, 0.9, -0.33] {
            let rhs = |z: f64, y: &SVector<f64, 2>, dy: &mut SVector<f64, 2>| {
                dy[0] = y[1];
                dy[1] = (p.q(z) - lambda) * y[0];
            };
            let zs = linspace(0.0, 4.0, 9);
            let numeric =
                integrate_grid(rhs, &zs, SVector::<f64, 2>::new(0.0, 1.0), 1e-12, 1e-13).unwrap();
            let exact = morse_regular_solution(&p, lambda, &zs).unwrap();
            for (num, ex) in numeric.iter().zip(&exact) {
                assert_abs_diff_eq!(num[0], ex.0, epsilon = 1e-9);
                assert_abs_diff_eq!(num[1], ex.1, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn morse_sigma_reference_values() {
        let p = MorseParams::canonical();
        let cases = [
            (0.01, 0.080000398002654582579),
            (0.1, 0.20035947397245279497),
            (0.64, 0.30474227421171155693),
            (1.0, 0.34024258319147682089),
            (10.0, 0.93974133107567385031),
            (100.0, 3.1528864589804962525),
        ];
        for (lambda, want) in cases {
            assert_relative_eq!(morse_sigma(&p, lambda).unwrap(), want, max_relative = 1e-12);
        }
        assert!(morse_sigma(&p, 0.0).is_err());
        assert!(morse_sigma(&p, -1.0).is_err());
    }

    #[test]
    fn morse_sigma_approaches_free_density() {
        // sigma -> sqrt(lambda)/pi at high energy.
        let p = MorseParams::canonical();
        let lambda: f64 = 1.0e6;
        let free = lambda.sqrt() / PI;
        assert_relative_eq!(
            morse_sigma(&p, lambda).unwrap(),
            free,
            max_relative = 1e-2
        );
    }

    #[test]
    fn morse_canonical_eigenvalue() {
        let p = MorseParams::canonical();
        let eigs = morse_eigenvalues(&p).unwrap();
        assert_eq!(eigs.len(), 1);
        assert_relative_eq!(eigs[0], -0.17997198938957245136, max_relative = 1e-10);
    }

    #[test]
    fn morse_deep_well_eigenvalues() {
        // Here the wall sits far up the well's inner slope, so the spectrum
        // is exponentially close to kappa_j = sqrt(Q) - (j - 1/2) a.
        let p = MorseParams::new(100.0, 1.0, 2.0).unwrap();
        let eigs = morse_eigenvalues(&p).unwrap();
        assert_eq!(eigs.len(), 10);
        for (j, lam) in eigs.iter().enumerate() {
            let kappa = 9.5 - j as f64;
            assert_relative_eq!(*lam, -kappa * kappa, max_relative = 1e-10);
        }
    }

    #[test]
    fn morse_eigenvalues_respect_scaling() {
        // z -> z/c maps (Q, a, z0) to (c^2 Q, c a, z0/c) and multiplies every
        // eigenvalue by c^2.
        let base = MorseParams::canonical();
        let c = 2.0;
        let scaled = MorseParams::new(c * c, c, 1.0 / c).unwrap();
        let e0 = morse_eigenvalues(&base).unwrap();
        let e1 = morse_eigenvalues(&scaled).unwrap();
        assert_eq!(e0.len(), e1.len());
        for (a, b) in e0.iter().zip(&e1) {
            assert_relative_eq!(c * c * a, *b, max_relative = 1e-9);
        }
    }

    #[test]
    fn eigenfunction_decays_and_vanishes_at_wall() {
        let p = MorseParams::canonical();
        let lam = morse_eigenvalues(&p).unwrap()[0];
        let sol = morse_regular_solution(&p, lam, &[0.0, 6.0, 10.0]).unwrap();
        assert_abs_diff_eq!(sol[0].0, 0.0, epsilon = 1e-14);
        // Exponential decay between z = 6 and z = 10 at rate kappa, up to the
        // slowly varying prefactor (relative size s(z) ~ 1e-2 at z = 6).
        let kappa = (-lam).sqrt();
        let ratio = sol[2].0 / sol[1].0;
        assert_relative_eq!(ratio.ln(), -4.0 * kappa, max_relative = 1e-2);
    }

    #[test]
    fn poisson_kernel_basic_properties() {
        assert_relative_eq!(
            poisson_kernel(1.0, 1.0),
            1.0 / (2.0 * PI),
            max_relative = 1e-15
        );
        // Even in x, and its integral over [-L, L] matches the arctangent
        // antiderivative.
        assert_eq!(poisson_kernel(2.0, 3.0), poisson_kernel(-2.0, 3.0));
        let f = |x: f64| poisson_kernel(x, 2.0);
        let total = crate::util::quad::adaptive_simpson(&f, -100.0, 100.0, 1e-12).unwrap();
        assert_relative_eq!(total, 2.0 / PI * (50.0_f64).atan(), max_relative = 1e-10);
    }

    #[test]
    fn lyra_kernel_reference_values() {
        let cases = [
            (1.0, 1.0, 0.076524089253198436007),
            (-3.0, 2.0, 0.083898399874598804778),
            (6.0, 4.0, 0.20477283510098554051),
            (0.5, 0.25, 0.28635407706984279301),
            (-30.0, 2.0, 0.0096380254878458411108),
            (25.0, 3.0, 0.012461843443458369946),
        ];
        for (x, zeta, want) in cases {
            let got = lyra_kernel(x, zeta, 1.0).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-9);
        }
    }

    #[test]
    fn lyra_kernel_vanishes_on_boundary_and_rejects_axis() {
        assert_eq!(lyra_kernel(2.0, 0.0, 1.0).unwrap(), 0.0);
        assert!(lyra_kernel(0.0, 1.0, 1.0).is_err());
        assert!(lyra_kernel(1.0, -0.5, 1.0).is_err());
    }

    #[test]
    fn lyra_kernel_windward_side_is_evanescent() {
        // Upstream the kernel decays algebraically; downstream the radiated
        // wave keeps an oscillation whose envelope decays much more slowly,
        // so compare window maxima rather than pointwise values (which can
        // land on oscillation zeros).
        let up: Vec<f64> = [10.0, 20.0, 40.0]
            .iter()
            .map(|&x| lyra_kernel(-x, 2.0, 1.0).unwrap().abs())
            .collect();
        assert!(up[0] > up[1] && up[1] > up[2]);
        // Leading upstream behaviour is sin(sqrt(f0) zeta) / (pi |x|).
        assert_relative_eq!(up[0] / up[2], 4.0, max_relative = 0.2);
        let down_max = (0..21)
            .map(|k| 30.0 + k as f64)
            .map(|x| lyra_kernel(x, 2.0, 1.0).unwrap().abs())
            .fold(0.0_f64, f64::max);
        assert!(
            down_max > 1.5 * up[2],
            "downstream envelope {down_max} should dominate upstream tail {}",
            up[2]
        );
    }

    #[test]
    fn e1_reference_value_at_kernel_tail_argument() {
        let v = e1(Complex64::new(30.0, -10.0));
        assert_relative_eq!(v.re, -1.8144780738385869182e-15, max_relative = 1e-10);
        assert_relative_eq!(v.im, -2.2299884151733476893e-15, max_relative = 1e-10);
    }
}
