//! Action-angle coordinates of the q2 oscillator (harmonic case).
//!
//! The angle convention puts theta = 0 at the rightmost turning point and
//! makes momentum reflection act as theta -> -theta:
//!
//! ```text
//! q2 - c = sqrt(2 I / omega) cos(theta),  p2 = -sqrt(2 I omega) sin(theta)
//! ```
//!
//! so theta advances at rate omega along the flow.

use crate::error::{Error, Result};
use crate::flow::spec::SystemSpec;

/// Harmonic frequency of the q2 potential, or an error for the general
/// (quadrature-transform) case which is not supported here.
pub fn v2_omega(spec: &SystemSpec) -> Result<f64> {
    spec.v2.harmonic_omega().ok_or_else(|| {
        Error::UnsupportedPotential(
            "action-angle chart requires a harmonic q2 potential".into(),
        )
    })
}

/// (theta, I) of a point in the (q2, p2) plane. Errors at I = 0 where the
/// angle is undefined.
pub fn action_angle(spec: &SystemSpec, q2: f64, p2: f64) -> Result<(f64, f64)> {
    let omega = v2_omega(spec)?;
    let c = spec.v2.center();
    let i = p2 * p2 / (2.0 * omega) + 0.5 * omega * (q2 - c) * (q2 - c);
    if i == 0.0 {
        return Err(Error::InvalidArgument(
            "angle undefined at the elliptic fixed point I = 0".into(),
        ));
    }
    let theta = (-p2).atan2(omega * (q2 - c));
    Ok((theta, i))
}

/// Inverse chart: the (q2, p2) point with the given angle and action.
pub fn from_action_angle(spec: &SystemSpec, theta: f64, i: f64) -> Result<(f64, f64)> {
    let omega = v2_omega(spec)?;
    if !(i >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "action must be >= 0, got {i}"
        )));
    }
    let c = spec.v2.center();
    let q2 = c + (2.0 * i / omega).sqrt() * theta.cos();
    let p2 = -(2.0 * i * omega).sqrt() * theta.sin();
    Ok((q2, p2))
}
