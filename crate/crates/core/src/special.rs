//! Scalar special functions used by the coupling and continuum modules.
//!
//! Only the pieces actually needed are implemented: the Bessel function
//! `J0` (drive dressing factors) and the trigamma function (closed-form
//! tails of dipolar lattice sums). Both are plain `f64` routines with no
//! external dependencies so they stay easy to audit.

use std::f64::consts::{FRAC_PI_4, PI};

/// Argument magnitude at which `bessel_j0` switches from the power series
/// to the Hankel asymptotic expansion.
const J0_SERIES_CUTOFF: f64 = 12.0;

/// Bessel function of the first kind, order zero.
///
/// Power series below `J0_SERIES_CUTOFF`, Hankel asymptotic expansion with
/// optimal truncation beyond it. Absolute accuracy is better than 1e-12 on
/// the series branch and better than 1e-10 at and beyond the crossover.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < J0_SERIES_CUTOFF {
        j0_series(ax)
    } else {
        j0_hankel(ax)
    }
}

fn j0_series(ax: f64) -> f64 {
    let q = 0.25 * ax * ax;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut k = 0_u32;
    while term.abs() > 1e-20 * sum.abs().max(1.0) && k < 200 {
        k += 1;
        term *= -q / ((k * k) as f64);
        sum += term;
    }
    sum
}

fn j0_hankel(ax: f64) -> f64 {
    // J0(x) = sqrt(2/(pi x)) [P(x) cos(x - pi/4) - Q(x) sin(x - pi/4)]
    // with P = sum_k (-1)^k t_{2k}, Q = sum_k (-1)^k t_{2k+1} and
    // t_m = t_{m-1} * -(2m-1)^2 / (8 m x). The series is asymptotic;
    // stop at the smallest term.
    let mut p = 0.0_f64;
    let mut q = 0.0_f64;
    let mut t = 1.0_f64;
    let mut m = 0_u32;
    let mut sign = 1.0_f64;
    loop {
        if m % 2 == 0 {
            p += sign * t;
        } else {
            q += sign * t;
            sign = -sign;
        }
        let m_next = m + 1;
        let odd = (2 * m_next - 1) as f64;
        let t_next = t * -(odd * odd) / (8.0 * m_next as f64 * ax);
        if t_next.abs() >= t.abs() || t_next.abs() < 1e-18 {
            break;
        }
        t = t_next;
        m = m_next;
    }
    let chi = ax - FRAC_PI_4;
    (2.0 / (PI * ax)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Trigamma function `psi_1(x) = d^2/dx^2 ln Gamma(x)` for `x > 0`.
///
/// Upward recurrence onto `x >= 10` followed by the Bernoulli asymptotic
/// series; relative accuracy is at the 1e-15 level across `x > 0`.
pub fn trigamma(x: f64) -> f64 {
    assert!(x > 0.0, "trigamma requires x > 0, got {x}");
    let mut shift = 0.0_f64;
    let mut y = x;
    while y < 10.0 {
        shift += 1.0 / (y * y);
        y += 1.0;
    }
    // psi_1(y) ~ 1/y + 1/(2y^2) + sum_k B_{2k} / y^{2k+1}
    const BERNOULLI: [f64; 7] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
    ];
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let mut tail = 0.0;
    let mut pw = inv2 * inv;
    for b in BERNOULLI {
        tail += b * pw;
        pw *= inv2;
    }
    shift + inv + 0.5 * inv2 + tail
}

/// Tetragamma function psi_2(x) = d^2/dx^2 ln Gamma(x) for x > 0,
/// by upward recurrence into the Bernoulli asymptotic regime.
///
/// Supplies exact residue-class sums sum_{d = r mod m} 1/d^3
/// = -psi_2(r/m) / (2 m^3).
pub fn tetragamma(x: f64) -> f64 {
    assert!(x > 0.0, "tetragamma requires x > 0, got {x}");
    let mut shift = 0.0_f64;
    let mut y = x;
    while y < 12.0 {
        shift -= 2.0 / (y * y * y);
        y += 1.0;
    }
    // psi_2(y) ~ -1/y^2 - 1/y^3 - sum_k (2k+1) B_{2k} / y^{2k+2}
    const BERNOULLI: [f64; 7] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
    ];
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let mut tail = 0.0;
    let mut pw = inv2 * inv2;
    for (k, b) in BERNOULLI.iter().enumerate() {
        tail += (2 * k + 3) as f64 * b * pw;
        pw *= inv2;
    }
    shift - inv2 - inv2 * inv - tail
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Trapezoid rule on the integral form (1/2pi) int_0^{2pi} cos(x sin t) dt.
    /// For a periodic analytic integrand the n-point trapezoid sum equals
    /// J0(x) up to terms of order J_n(x), which is far below 1e-15 for
    /// n = 512 and |x| <= 50, so this is an independent machine-precision
    /// reference.
    fn j0_quadrature(x: f64) -> f64 {
        let n = 512;
        let mut acc = 0.0;
        for k in 0..n {
            let theta = 2.0 * PI * k as f64 / n as f64;
            acc += (x * theta.sin()).cos();
        }
        acc / n as f64
    }

    #[test]
    fn j0_matches_quadrature_on_series_branch() {
        let mut worst = 0.0_f64;
        for i in 0..=1000 {
            let x = i as f64 * 0.01;
            let err = (bessel_j0(x) - j0_quadrature(x)).abs();
            worst = worst.max(err);
        }
        assert!(worst < 1e-12, "max |J0 - quadrature| = {worst:e} on [0, 10]");
    }

    #[test]
    fn j0_matches_quadrature_at_and_beyond_crossover() {
        let mut worst = 0.0_f64;
        for i in 0..=2900 {
            let x = 11.0 + i as f64 * 0.01;
            let err = (bessel_j0(x) - j0_quadrature(x)).abs();
            worst = worst.max(err);
        }
        assert!(worst < 1e-10, "max |J0 - quadrature| = {worst:e} on [11, 40]");
    }

    #[test]
    fn j0_reference_values() {
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_j0(1.0) - 0.7651976865579666).abs() < 1e-13);
        assert!((bessel_j0(5.0) - -0.17759677131433830).abs() < 1e-13);
        // First zero of J0.
        assert!(bessel_j0(2.404825557695773).abs() < 1e-12);
    }

    #[test]
    fn j0_is_even() {
        for x in [0.3, 1.7, 4.2, 9.9, 15.0] {
            assert_eq!(bessel_j0(x), bessel_j0(-x));
        }
    }

    #[test]
    fn trigamma_closed_forms() {
        let pi2 = PI * PI;
        let catalan = 0.915_965_594_177_219_0_f64;
        assert!((trigamma(1.0) - pi2 / 6.0).abs() < 1e-13);
        assert!((trigamma(0.5) - pi2 / 2.0).abs() < 1e-13);
        assert!((trigamma(0.25) - (pi2 + 8.0 * catalan)).abs() < 1e-12);
        assert!((trigamma(0.75) - (pi2 - 8.0 * catalan)).abs() < 1e-12);
    }

    #[test]
    fn trigamma_recurrence() {
        for x in [0.125, 0.375, 1.5, 2.25, 7.0] {
            let lhs = trigamma(x);
            let rhs = trigamma(x + 1.0) + 1.0 / (x * x);
            assert!((lhs - rhs).abs() < 1e-13 * lhs.abs());
        }
    }

    #[test]
    fn trigamma_matches_direct_tail_sum() {
        // psi_1(a) = sum_{m>=0} 1/(m+a)^2; check against a partial sum with
        // an integral bound on the remainder.
        for a in [0.25, 0.4, 0.75, 1.0] {
            let m_max = 200_000;
            let mut partial = 0.0;
            for m in 0..m_max {
                let d = m as f64 + a;
                partial += 1.0 / (d * d);
            }
            let lo = 1.0 / (m_max as f64 + a);
            let hi = 1.0 / (m_max as f64 + a - 1.0);
            let val = trigamma(a);
            assert!(val > partial + lo && val < partial + hi, "a = {a}");
        }
    }

    #[test]
    fn tetragamma_closed_forms() {
        let zeta3 = 1.202_056_903_159_594_3_f64;
        let pi3 = PI * PI * PI;
        assert!((tetragamma(1.0) + 2.0 * zeta3).abs() < 1e-13);
        assert!((tetragamma(0.5) + 14.0 * zeta3).abs() < 1e-12);
        assert!((tetragamma(0.25) + 56.0 * zeta3 + 2.0 * pi3).abs() < 1e-11);
        assert!((tetragamma(0.75) + 56.0 * zeta3 - 2.0 * pi3).abs() < 1e-12);
    }

    #[test]
    fn tetragamma_recurrence() {
        for x in [0.125, 0.375, 1.5, 2.25, 7.0] {
            let lhs = tetragamma(x);
            let rhs = tetragamma(x + 1.0) - 2.0 / (x * x * x);
            assert!((lhs - rhs).abs() < 1e-13 * lhs.abs());
        }
    }

    #[test]
    fn tetragamma_residue_class_sums() {
        // sum over d = r (mod 4) of 1/d^3 equals -psi_2(r/4)/128. Summed
        // smallest-terms-first so rounding stays below the truncation tail,
        // which is positive and bounded by the integral 1/(8 d_max^2).
        for r in [1_u64, 2, 3, 4] {
            let mut partial = 0.0;
            let mut d = r + 4 * ((1_000_000 - r) / 4);
            loop {
                let df = d as f64;
                partial += 1.0 / (df * df * df);
                if d == r {
                    break;
                }
                d -= 4;
            }
            let exact = -tetragamma(r as f64 / 4.0) / 128.0;
            let tail = exact - partial;
            assert!(
                tail > 0.0 && tail < 2.0 / 8e12,
                "r = {r}: exact {exact}, partial {partial}"
            );
        }
    }
}
