//! Canonical angle chart [-pi, pi) and wrap-aware differences.

use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// Reduce an angle to the canonical chart [-pi, pi).
///
/// Well defined for arguments of magnitude up to ~1e15; the result is always
/// strictly inside the half-open interval, including for inputs that round
/// onto the seam.
pub fn reduce(phi: f64) -> f64 {
    let mut r = (phi + PI).rem_euclid(TWO_PI) - PI;
    if r >= PI {
        r -= TWO_PI;
    }
    if r < -PI {
        r = -PI;
    }
    r
}

/// Signed shortest angular difference a - b, in [-pi, pi).
pub fn wrap_diff(a: f64, b: f64) -> f64 {
    reduce(a - b)
}

/// Absolute angular distance between two angles on the circle.
pub fn dist(a: f64, b: f64) -> f64 {
    wrap_diff(a, b).abs()
}
