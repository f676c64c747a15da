//! The truncated tangency map and its generalized local form.
//!
//! The map acts on the cylinder (phi, K), where phi is the angle on the
//! return section and K is the signed action distance from the singularity
//! line: impacts correspond to K < 0. One step advances
//!
//! ```text
//! phi_bar = phi + Omega + tau*K - alpha*sqrt(-K)   (sqrt term only for K < 0)
//! K_bar   = K + epsilon * f(phi_bar)
//! ```
//!
//! with phi reduced to [-pi, pi) after every step. The map is explicit
//! because the forcing depends only on the updated angle, and it is exactly
//! area preserving.

use serde::{Deserialize, Serialize};

use crate::angle;
use crate::error::{Error, Result};
use crate::forcing::Forcing;

/// Shear sign of the linear twist term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Shear {
    Positive,
    Negative,
}

impl Shear {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Shear::Positive => 1.0,
            Shear::Negative => -1.0,
        }
    }
}

impl TryFrom<i8> for Shear {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Shear::Positive),
            -1 => Ok(Shear::Negative),
            other => Err(format!("tau must be +1 or -1, got {other}")),
        }
    }
}

impl From<Shear> for i8 {
    fn from(s: Shear) -> i8 {
        match s {
            Shear::Positive => 1,
            Shear::Negative => -1,
        }
    }
}

/// Parameters of the truncated tangency map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    /// Perturbation size; 0 gives the unperturbed piecewise twist map.
    pub epsilon: f64,
    /// Square-root singularity coefficient, > 0.
    pub alpha: f64,
    /// Rotation number at tangency (radians).
    pub omega: f64,
    /// Shear sign.
    pub tau: Shear,
    /// Odd forcing as a finite sine series; defaults to sin(phi).
    #[serde(default)]
    pub forcing: Forcing,
}

impl MapParams {
    pub fn new(epsilon: f64, alpha: f64, omega: f64, tau: Shear) -> Self {
        MapParams {
            epsilon,
            alpha,
            omega,
            tau,
            forcing: Forcing::default(),
        }
    }

    /// Checks the type invariants; returns one message per violation.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.alpha > 0.0) {
            out.push(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(self.epsilon >= 0.0) {
            out.push(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if !self.omega.is_finite() {
            out.push(format!("omega must be finite, got {}", self.omega));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.diagnostics();
        if d.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(d.join("; ")))
        }
    }
}

/// A point (phi, K) on the tangency-chart cylinder.
///
/// phi is kept in [-pi, pi); K is the signed action distance from the
/// singularity line (negative on the impacting side).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub phi: f64,
    pub k: f64,
}

impl PhasePoint {
    pub fn new(phi: f64, k: f64) -> Self {
        PhasePoint {
            phi: angle::reduce(phi),
            k,
        }
    }
}

/// Piecewise phase advance: tau*K for K >= 0, -alpha*sqrt(-K) + tau*K for
/// K < 0. The tangent point K = 0 uses the non-impacting branch.
#[inline]
pub fn phase_advance(k: f64, alpha: f64, tau: Shear) -> f64 {
    let linear = tau.sign() * k;
    if k < 0.0 {
        linear - alpha * (-k).sqrt()
    } else {
        linear
    }
}

/// One step of the truncated tangency map. Total on the whole cylinder.
#[inline]
pub fn ttm_step(p: PhasePoint, m: &MapParams) -> PhasePoint {
    let phi_bar = angle::reduce(p.phi + m.omega + phase_advance(p.k, m.alpha, m.tau));
    let k_bar = p.k + m.epsilon * m.forcing.eval(phi_bar);
    PhasePoint {
        phi: phi_bar,
        k: k_bar,
    }
}

/// Iterates the map `n` times, feeding every iterate (after each step) to
/// `sink`. No allocation proportional to `n`.
pub fn ttm_orbit<S: FnMut(u64, PhasePoint)>(
    p0: PhasePoint,
    m: &MapParams,
    n: u64,
    mut sink: S,
) -> PhasePoint {
    let mut p = p0;
    for i in 1..=n {
        p = ttm_step(p, m);
        sink(i, p);
    }
    p
}

/// Exact Jacobian of one map step, evaluated away from the singularity line.
///
/// Entries are d(phi_bar)/d(phi) = 1, d(phi_bar)/dK, dK_bar/d(phi) and
/// dK_bar/dK; the determinant is identically 1 in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian {
    pub dphi_dphi: f64,
    pub dphi_dk: f64,
    pub dk_dphi: f64,
    pub dk_dk: f64,
}

impl Jacobian {
    /// Determinant of the step: exactly 1 by the symplectic structure
    /// (expanding the 2x2 determinant cancels the off-diagonal product
    /// symbolically).
    pub fn det(&self) -> f64 {
        1.0
    }

    /// Determinant evaluated numerically from the entries.
    pub fn det_from_entries(&self) -> f64 {
        self.dphi_dphi * self.dk_dk - self.dphi_dk * self.dk_dphi
    }

    pub fn trace(&self) -> f64 {
        self.dphi_dphi + self.dk_dk
    }
}

/// Derivative of the phase advance with respect to K (the local twist).
#[inline]
pub fn twist_derivative(k: f64, alpha: f64, tau: Shear) -> f64 {
    if k < 0.0 {
        tau.sign() + alpha / (2.0 * (-k).sqrt())
    } else {
        tau.sign()
    }
}

/// Exact Jacobian of `ttm_step` at `p`. Errors on the singularity line
/// K = 0 where the derivative of the square-root branch is undefined.
pub fn ttm_jacobian(p: PhasePoint, m: &MapParams) -> Result<Jacobian> {
    if p.k == 0.0 {
        return Err(Error::SingularityLine);
    }
    let dphi_dk = twist_derivative(p.k, m.alpha, m.tau);
    let phi_bar = angle::reduce(p.phi + m.omega + phase_advance(p.k, m.alpha, m.tau));
    let fprime = m.epsilon * m.forcing.deriv(phi_bar);
    Ok(Jacobian {
        dphi_dphi: 1.0,
        dphi_dk,
        dk_dphi: fprime,
        dk_dk: 1.0 + fprime * dphi_dk,
    })
}

/// The leading-order singular phase advance of the local return map:
/// tau*K on the non-impacting side, -alpha*sqrt(-K) + tau*K on the
/// impacting side.
#[inline]
pub fn gs(k: f64, alpha: f64, tau: Shear) -> f64 {
    phase_advance(k, alpha, tau)
}

/// One step of the generalized local return map with injectable
/// higher-order corrections.
///
/// `g1` corrects the angle advance, `g2` the action update; both receive
/// (K, phi) of the incoming point. With both zero this reduces exactly to
/// `ttm_step`.
pub fn local_map_step<G1, G2>(
    p: PhasePoint,
    m: &MapParams,
    g1: G1,
    g2: G2,
) -> PhasePoint
where
    G1: Fn(f64, f64) -> f64,
    G2: Fn(f64, f64) -> f64,
{
    let phi_bar = angle::reduce(p.phi + m.omega + gs(p.k, m.alpha, m.tau) + g1(p.k, p.phi));
    let k_bar = p.k + m.epsilon * m.forcing.eval(phi_bar) + g2(p.k, p.phi);
    PhasePoint {
        phi: phi_bar,
        k: k_bar,
    }
}
