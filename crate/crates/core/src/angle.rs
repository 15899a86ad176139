//! Phase arithmetic on the circle.

use std::f64::consts::{PI, TAU};

/// Reduces an angle to `[0, 2π)`.
#[inline]
pub fn wrap_two_pi(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Reduces an angle to `(-π, π]`.
#[inline]
pub fn wrap_pi(x: f64) -> f64 {
    let r = wrap_two_pi(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Shortest distance between two angles, in `[0, π]`.
#[inline]
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_pi(a - b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraps_into_range() {
        for &x in &[-1e-18, -TAU, TAU, 3.0 * TAU + 0.5, -0.3, 7.0, -1e300, 1e300] {
            let w = wrap_two_pi(x);
            assert!((0.0..TAU).contains(&w), "{x} -> {w}");
            let p = wrap_pi(x);
            assert!(p > -PI && p <= PI, "{x} -> {p}");
        }
        assert_eq!(wrap_two_pi(-1e-18), 0.0);
        assert!((wrap_two_pi(-0.3) - (TAU - 0.3)).abs() < 1e-15);
        assert_eq!(wrap_pi(PI), PI);
        assert_eq!(wrap_pi(-PI), PI);
    }

    #[test]
    fn distance_is_symmetric_and_short() {
        assert!((circular_distance(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!((circular_distance(TAU - 0.1, 0.1) - 0.2).abs() < 1e-12);
        assert_eq!(circular_distance(1.0, 1.0), 0.0);
    }
}
