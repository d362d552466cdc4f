//! Antiderivative of sin(t^2).
//!
//! `sin_sq_antiderivative(t)` evaluates S(t) = int_0^t sin(s^2) ds, the
//! Fresnel-type primitive whose derivative sin(t^2) is bounded but not
//! uniformly continuous. Small arguments use the Maclaurin series; large
//! arguments use the asymptotic tail obtained by repeated integration by
//! parts of int_t^inf exp(i s^2) ds.

use crate::C64;

/// S(inf) = sqrt(pi/8).
pub const LIMIT_AT_INFINITY: f64 = 0.626_657_068_657_750_1;

const SERIES_CUTOFF: f64 = 4.0;

/// int_0^t sin(s^2) ds, odd in t.
pub fn sin_sq_antiderivative(t: f64) -> f64 {
    if t < 0.0 {
        return -sin_sq_antiderivative(-t);
    }
    if t <= SERIES_CUTOFF {
        series(t)
    } else {
        LIMIT_AT_INFINITY - tail(t)
    }
}

/// sum_{k>=0} (-1)^k t^{4k+3} / ((4k+3) (2k+1)!)
fn series(t: f64) -> f64 {
    let t4 = (t * t) * (t * t);
    let mut power = t * t * t;
    let mut odd_factorial = 1.0; // (2k+1)!
    let mut sum = 0.0;
    let mut k: usize = 0;
    loop {
        let term = power / ((4 * k + 3) as f64 * odd_factorial);
        sum += if k.is_multiple_of(2) { term } else { -term };
        if term.abs() < 1e-18 * (1.0 + sum.abs()) && k > 2 {
            return sum;
        }
        k += 1;
        power *= t4;
        odd_factorial *= (2 * k) as f64 * (2 * k + 1) as f64;
        if k > 200 {
            return sum;
        }
    }
}

/// Im int_t^inf exp(i s^2) ds for t above the series cutoff.
///
/// Integration by parts gives
///   int_t^inf e^{is^2} ds = (i/2) e^{it^2} [ 1/t + (1/(2i)) 1/t^3
///                            + (1*3/(2i)^2) 1/t^5 + ... ]
/// an asymptotic series; terms are accumulated until they stop shrinking.
fn tail(t: f64) -> f64 {
    let phase = C64::new(0.0, t * t).exp();
    let rot = C64::new(0.0, -0.5) / (t * t); // 1/(2i t^2)
    let mut term = C64::new(1.0 / t, 0.0);
    let mut sum = C64::new(0.0, 0.0);
    let mut j = 0u32;
    loop {
        sum += term;
        let next = term * rot * (2 * j + 1) as f64;
        if next.norm() >= term.norm() || next.norm() < 1e-18 {
            break;
        }
        term = next;
        j += 1;
    }
    (C64::new(0.0, 0.5) * phase * sum).im
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar_fn::quad::adaptive_simpson;

    #[test]
    fn matches_direct_quadrature() {
        for &t in &[0.3, 1.0, 2.5, 3.9, 4.1, 6.0, 10.0, 31.6, 100.0] {
            let oracle = adaptive_simpson(&|s: f64| (s * s).sin(), 0.0, t, 1e-12);
            let got = sin_sq_antiderivative(t);
            assert!(
                (got - oracle).abs() < 5e-8,
                "t={t}: got {got}, oracle {oracle}"
            );
        }
    }

    #[test]
    fn is_odd() {
        for &t in &[0.7, 3.0, 12.0] {
            assert_eq!(sin_sq_antiderivative(-t), -sin_sq_antiderivative(t));
        }
    }

    #[test]
    fn continuous_at_cutoff() {
        let below = sin_sq_antiderivative(SERIES_CUTOFF - 1e-9);
        let above = sin_sq_antiderivative(SERIES_CUTOFF + 1e-9);
        assert!((below - above).abs() < 1e-6);
    }
}
