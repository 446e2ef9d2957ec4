//! Sines and cosines of rational multiples of pi with exact argument reduction.

#[allow(unused_imports)]
use num_traits::Float;

/// `sin(k * pi / m)`, reduced to `[0, pi/2]` first so that symmetric
/// arguments give bit-identical values; `0`, `1/2` and `1` are exact.
pub fn sin_frac(k: i64, m: i64) -> f64 {
    assert!(m > 0);
    let mut r = k.rem_euclid(2 * m);
    let mut sign = 1.0;
    if r >= m {
        r -= m;
        sign = -1.0;
    }
    if 2 * r > m {
        r = m - r;
    }
    if r == 0 {
        return 0.0;
    }
    if 2 * r == m {
        return sign;
    }
    if 6 * r == m {
        return sign * 0.5;
    }
    sign * (r as f64 * core::f64::consts::PI / m as f64).sin()
}

/// `cos(k * pi / m)`.
pub fn cos_frac(k: i64, m: i64) -> f64 {
    sin_frac(m - 2 * k, 2 * m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn exact_special_values() {
        assert_eq!(sin_frac(4, 4), 0.0);
        assert_eq!(sin_frac(2, 4), 1.0);
        assert_eq!(sin_frac(6, 4), -1.0);
        assert_eq!(cos_frac(1, 2), 0.0);
        assert_eq!(cos_frac(0, 5), 1.0);
        assert_eq!(sin_frac(1, 6), 0.5);
        assert_eq!(cos_frac(1, 3), 0.5);
        assert_eq!(sin_frac(7, 6), -0.5);
        assert_eq!(sin_frac(1, 5), sin_frac(4, 5));
    }

    #[test]
    fn agrees_with_direct_evaluation() {
        for m in 1..40i64 {
            for k in -90..90i64 {
                let x = k as f64 * PI / m as f64;
                assert!((sin_frac(k, m) - x.sin()).abs() < 1e-13);
                assert!((cos_frac(k, m) - x.cos()).abs() < 1e-13);
            }
        }
    }
}
