//! Complex gamma function (Lanczos) and the exponential integral E1.

use num_complex::Complex64;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Lanczos coefficients, g = 7, 9 terms.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Complex gamma function.
///
/// Lanczos approximation on the right half plane, reflection formula on the
/// left. Relative accuracy is about 1e-13 for moderate arguments.
pub fn gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Reflection: gamma(z) gamma(1-z) = pi / sin(pi z).
        let pi = std::f64::consts::PI;
        let s = (Complex64::new(pi, 0.0) * z).sin();
        Complex64::new(pi, 0.0) / (s * gamma(Complex64::new(1.0, 0.0) - z))
    } else {
        let zm = z - 1.0;
        let mut acc = Complex64::new(LANCZOS[0], 0.0);
        for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (zm + i as f64);
        }
        let t = zm + 7.5;
        let sqrt_two_pi = (2.0 * std::f64::consts::PI).sqrt();
        sqrt_two_pi * t.powc(zm + 0.5) * (-t).exp() * acc
    }
}

/// Reciprocal gamma function, finite at the poles of gamma.
///
/// For Re z < 0.5 the reflection product sin(pi z) gamma(1-z) / pi is used,
/// which passes smoothly through zero at non-positive integers.
pub fn recip_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let pi = std::f64::consts::PI;
        (Complex64::new(pi, 0.0) * z).sin() * gamma(Complex64::new(1.0, 0.0) - z) / pi
    } else {
        1.0 / gamma(z)
    }
}

/// Exponential integral E1 for complex arguments off the negative real axis.
///
/// Power series for small |z|, modified-Lentz continued fraction otherwise.
pub fn e1(z: Complex64) -> Complex64 {
    assert!(
        z.norm() > 0.0 && !(z.im == 0.0 && z.re < 0.0),
        "E1 requires a nonzero argument off the negative real axis"
    );
    if z.norm() <= 4.0 {
        // E1(z) = -gamma - ln z - sum_{k>=1} (-z)^k / (k k!).
        let mut sum = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for k in 1..200 {
            term *= -z / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.norm() < 1e-18 * (1.0 + sum.norm()) {
                break;
            }
        }
        -EULER_GAMMA - z.ln() - sum
    } else {
        // E1(z) = e^{-z} / (z + 1 - 1^2/(z + 3 - 2^2/(z + 5 - ...))).
        let tiny = Complex64::new(1e-290, 0.0);
        let mut b = z + 1.0;
        let mut c = Complex64::new(1e290, 0.0);
        let mut d = 1.0 / b;
        let mut h = d;
        for j in 1..400 {
            let a = -((j * j) as f64);
            b += 2.0;
            d = b + a * d;
            if d.norm() < 1e-290 {
                d = tiny;
            }
            c = b + a / c;
            if c.norm() < 1e-290 {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = c * d;
            h *= delta;
            if (delta - 1.0).norm() < 1e-16 {
                break;
            }
        }
        (-z).exp() * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_close(got: Complex64, want: Complex64, rel: f64) {
        assert_relative_eq!(got.re, want.re, max_relative = rel, epsilon = 1e-300);
        let scale = want.norm();
        assert!(
            (got - want).norm() <= rel * scale,
            "complex mismatch: got {got}, want {want}"
        );
    }

    #[test]
    fn gamma_matches_reference_values() {
        // Reference values from 60-digit arbitrary-precision evaluation.
        assert_close(
            gamma(c(0.5, 3.0)),
            c(0.02144567055243064606, 0.0068653648372616779142),
            1e-12,
        );
        assert_close(
            gamma(c(5.0, -2.0)),
            c(-15.586497870240713384, -1.0575920372152245518),
            1e-12,
        );
        assert_close(
            gamma(c(-3.3, 0.4)),
            c(0.092924234298254626466, 0.17778339387684017629),
            1e-11,
        );
        assert_close(gamma(c(0.1, 0.0)), c(9.5135076986687318363, 0.0), 1e-13);
        // Integer factorials.
        assert_close(gamma(c(6.0, 0.0)), c(120.0, 0.0), 1e-13);
    }

    #[test]
    fn recip_gamma_vanishes_at_poles() {
        for k in 0..5 {
            let v = recip_gamma(c(-(k as f64), 0.0));
            assert!(v.norm() < 1e-14, "1/gamma({k}) = {v}");
        }
        // Near-pole smoothness: 1/gamma(-9.1) from the reflection product.
        let v = recip_gamma(c(-9.1, 0.0));
        let direct = 1.0 / gamma(c(-9.1, 0.0));
        assert_close(v, direct, 1e-11);
    }

    #[test]
    fn e1_matches_reference_values() {
        // Reference values from 60-digit arbitrary-precision evaluation.
        assert_close(
            e1(c(2.0, 3.0)),
            c(-0.024826207944199362925, 0.020316674911044622667),
            1e-12,
        );
        assert_close(
            e1(c(0.5, -0.2)),
            c(0.49276871233198506755, 0.22342522586908421701),
            1e-12,
        );
        assert_close(
            e1(c(30.0, 10.0)),
            c(-1.8144780738385869182e-15, 2.2299884151733476893e-15),
            1e-11,
        );
        assert_close(
            e1(c(0.0, 5.0)),
            c(0.19002974965664387862, -0.020865081850222481957),
            1e-11,
        );
        assert_close(e1(c(4.0, 0.0)), c(0.0037793524098489064789, 0.0), 1e-12);
    }

    #[test]
    fn e1_branches_agree_at_the_seam() {
        // Points with |z| near 4 are valid for both branches.
        for &(re, im) in &[(3.9, 1.0), (0.5, 3.98), (2.9, -2.8)] {
            let z = c(re, im);
            let series = {
                let mut sum = Complex64::new(0.0, 0.0);
                let mut term = Complex64::new(1.0, 0.0);
                for k in 1..300 {
                    term *= -z / k as f64;
                    sum += term / k as f64;
                }
                -EULER_GAMMA - z.ln() - sum
            };
            assert_close(e1(z), series, 1e-11);
        }
    }
}
