//! Special functions: Bessel function of the first kind, order one.
//!
//! `j1` is the only special function the aperture-averaging closed form needs.
//! Two regimes:
//!
//! - `|x| <= 12`: the ascending power series
//!   `J1(x) = (x/2) * sum_m (-1)^m (x^2/4)^m / (m! (m+1)!)`.
//!   Worst-case cancellation at the regime edge strips ~4 digits, leaving
//!   absolute error around 1e-12, well inside every tolerance used here.
//! - `|x| > 12`: the Hankel asymptotic expansion
//!   `J1(x) = sqrt(2/(pi x)) * Re[ e^{i(x - 3pi/4)} * sum_k a_k i^k / x^k ]`,
//!   truncated at the smallest term (the series is divergent but the first
//!   ~10 terms shrink fast for x > 12).

/// Bessel function of the first kind, order one, for real argument.
pub fn j1(x: f64) -> f64 {
    let ax = x.abs();
    let val = if ax <= 12.0 { j1_series(ax) } else { j1_asymptotic(ax) };
    if x < 0.0 {
        -val // J1 is odd
    } else {
        val
    }
}

/// `J1(x)/x`, finite at the origin (limit 1/2). Used by the aperture filter
/// term where the argument can be exactly zero.
pub fn j1_over_x(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-8 {
        // leading series correction is -(x/4)^2/2 ~ 1e-17: below f64 resolution
        0.5
    } else {
        j1(ax) / ax // even function: sign of x cancels
    }
}

// ---------------------------------------------------------------------------

fn j1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for m in 1..200u32 {
        term *= -q / (m as f64 * (m as f64 + 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn j1_asymptotic(x: f64) -> f64 {
    // sum_k a_k i^k / x^k with a_k = prod_{j=1..k} (mu - (2j-1)^2)/(8j), mu = 4
    let mu = 4.0;
    let (mut sr, mut si) = (1.0f64, 0.0f64); // running sum
    let (mut tr, mut ti) = (1.0f64, 0.0f64); // current term
    let mut prev_mag = f64::INFINITY;
    for k in 1..=14u32 {
        let f = (mu - (2.0 * k as f64 - 1.0).powi(2)) / (8.0 * k as f64 * x);
        // term *= i * f
        let (nr, ni) = (-ti * f, tr * f);
        tr = nr;
        ti = ni;
        let mag = tr.hypot(ti);
        if mag > prev_mag {
            break; // asymptotic tail started growing: stop at the smallest term
        }
        prev_mag = mag;
        sr += tr;
        si += ti;
    }
    let chi = x - 3.0 * std::f64::consts::FRAC_PI_4;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (chi.cos() * sr - chi.sin() * si)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(x: f64, expected: f64, tol: f64) {
        let got = j1(x);
        assert!(
            (got - expected).abs() <= tol,
            "J1({x}) = {got:.17}, reference {expected:.17}, tol {tol:e}"
        );
    }

    #[test]
    fn matches_high_precision_reference_table() {
        // Reference values computed with 30-digit arithmetic.
        assert_close(0.1, 0.049937526036241998, 1e-15);
        assert_close(0.5, 0.24226845767487389, 1e-15);
        assert_close(1.0, 0.44005058574493352, 1e-15);
        assert_close(2.0, 0.57672480775687339, 1e-15);
        assert_close(5.0, -0.32757913759146522, 1e-14);
        assert_close(8.0, 0.23463634685391462, 1e-13);
        assert_close(10.0, 0.043472746168861437, 1e-12);
        assert_close(15.0, 0.20510403861352276, 1e-13);
        assert_close(20.0, 0.066833124175850046, 1e-13);
    }

    #[test]
    fn first_zero_is_hit() {
        let z = 3.8317059702075123;
        assert!(
            j1(z).abs() < 1e-13,
            "J1 at its first positive zero should vanish, got {:e}",
            j1(z)
        );
    }

    #[test]
    fn odd_symmetry() {
        for &x in &[0.3, 1.7, 5.5, 13.2, 19.0] {
            assert_eq!(j1(-x), -j1(x), "J1 must be odd at x = {x}");
        }
    }

    #[test]
    fn origin_and_ratio_limit() {
        assert_eq!(j1(0.0), 0.0, "J1(0) = 0 exactly");
        assert_eq!(j1_over_x(0.0), 0.5, "J1(x)/x -> 1/2 as x -> 0");
        let x = 1e-4;
        assert!(
            (j1_over_x(x) - 0.5).abs() < 1e-8,
            "small-argument ratio should be ~1/2, got {}",
            j1_over_x(x)
        );
    }

    #[test]
    fn regimes_agree_at_the_switch_point() {
        // Both branches evaluated just inside their own domain must agree
        // through the reference value at x = 12.
        let series = j1_series(12.0);
        let asym = j1_asymptotic(12.0);
        assert!(
            (series - asym).abs() < 1e-11,
            "series gives {series:.15}, asymptotic gives {asym:.15} at the 12.0 switch"
        );
    }

    #[test]
    fn ratio_is_even() {
        for &x in &[0.5, 2.0, 7.0] {
            assert_eq!(j1_over_x(-x), j1_over_x(x), "J1(x)/x must be even at x = {x}");
        }
    }
}
