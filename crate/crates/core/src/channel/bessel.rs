//! Zero-order Bessel function of the first kind.
//!
//! Power series below |x| = 12, Hankel asymptotic expansion above. Both
//! branches are accurate to ~1e-10 absolute over the range used for port
//! correlation.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

const SERIES_LIMIT: f64 = 12.0;

pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("J0 requires finite input, got {x}")));
    }
    let ax = x.abs();
    Ok(if ax < SERIES_LIMIT { series(ax) } else { asymptotic(ax) })
}

/// `sum_k (-1)^k (x/2)^{2k} / (k!)^2`
fn series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= -q / (k * k) as f64;
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && (k as f64) > x {
            break;
        }
    }
    sum
}

/// `sqrt(2/(pi x)) (P cos(chi) - Q sin(chi))`, `chi = x - pi/4`.
fn asymptotic(x: f64) -> f64 {
    // a_k = prod_{i=1..k} (-(2i-1)^2) / (k! 8^k); alternating-sign P and Q
    // collect the even and odd terms. Summation stops at the smallest term.
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        a *= -(odd * odd) / (k as f64 * 8.0 * x);
        if a.abs() > last {
            break;
        }
        last = a.abs();
        // a carries x^-k; even k feed P with sign (-1)^(k/2), odd feed Q.
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    // P = 1 - 9/(128 x^2) + ..., Q = -1/(8x) + ...
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Trapezoid rule on J0(x) = (1/pi) int_0^pi cos(x sin t) dt. The integrand
    /// is smooth and periodic, so the rule converges spectrally.
    fn integral_reference(x: f64) -> f64 {
        let n = 400;
        let h = PI / n as f64;
        let mut s = 0.5 * (1.0 + (x * PI.sin()).cos());
        for i in 1..n {
            s += (x * (i as f64 * h).sin()).cos();
        }
        s * h / PI
    }

    #[test]
    fn known_values() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
        assert!(bessel_j0(2.404826).unwrap().abs() < 1e-5);
        let v = bessel_j0(4.0 * PI).unwrap();
        assert!((v - 0.1575).abs() < 1e-3, "{v}");
        // J0(0.6614...) for adjacent ports at 2 wavelengths over 20 ports
        let v = bessel_j0(2.0 * PI * 2.0 / 19.0).unwrap();
        assert!((v - 0.894).abs() < 1e-3, "{v}");
    }

    #[test]
    fn matches_integral_representation() {
        let mut worst: f64 = 0.0;
        let mut x = -50.0;
        while x <= 50.0 {
            let err = (bessel_j0(x).unwrap() - integral_reference(x)).abs();
            worst = worst.max(err);
            x += 0.0137;
        }
        assert!(worst <= 1e-7, "max abs error {worst}");
    }

    #[test]
    fn continuous_across_branch_switch() {
        let below = series(SERIES_LIMIT);
        let above = asymptotic(SERIES_LIMIT);
        assert!((below - above).abs() < 1e-10, "{below} vs {above}");
    }

    #[test]
    fn even_and_bounded() {
        for i in 0..2000 {
            let x = i as f64 * 0.05;
            let (p, n) = (bessel_j0(x).unwrap(), bessel_j0(-x).unwrap());
            assert_eq!(p, n);
            assert!(p.abs() <= 1.0);
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(bessel_j0(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(bessel_j0(f64::INFINITY), Err(Error::Domain(_))));
    }
}
