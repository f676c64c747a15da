//! One-dimensional potentials and coupling terms of the wall systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A one-dimensional potential with value and derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Potential {
    /// omega^2 (q - center)^2 / 2
    Harmonic { omega: f64, center: f64 },
    /// sum_k coeffs[k] (q - center)^k
    Poly { coeffs: Vec<f64>, center: f64 },
}

impl Potential {
    pub fn v(&self, q: f64) -> f64 {
        match self {
            Potential::Harmonic { omega, center } => {
                let x = q - center;
                0.5 * omega * omega * x * x
            }
            Potential::Poly { coeffs, center } => {
                let x = q - center;
                // Horner evaluation
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
        }
    }

    pub fn dv(&self, q: f64) -> f64 {
        match self {
            Potential::Harmonic { omega, center } => omega * omega * (q - center),
            Potential::Poly { coeffs, center } => {
                let x = q - center;
                let mut acc = 0.0;
                for k in (1..coeffs.len()).rev() {
                    acc = acc * x + k as f64 * coeffs[k];
                }
                acc
            }
        }
    }

    /// V(b) - V(a) in product form, avoiding the catastrophic cancellation
    /// of direct subtraction when a is near b. The period quadratures rely
    /// on this near turning points.
    pub fn delta_v(&self, a: f64, b: f64) -> f64 {
        match self {
            Potential::Harmonic { omega, center } => {
                0.5 * omega * omega * (b - a) * (a + b - 2.0 * center)
            }
            Potential::Poly { coeffs, center } => {
                let x = a - center;
                let y = b - center;
                // y^k - x^k = (y - x) sum_{j<k} y^j x^(k-1-j)
                let mut total = 0.0;
                for (k, &c) in coeffs.iter().enumerate().skip(1) {
                    let mut s = 0.0;
                    let mut yj = 1.0;
                    for j in 0..k {
                        s += yj * x.powi((k - 1 - j) as i32);
                        yj *= y;
                    }
                    total += c * s;
                }
                (b - a) * total
            }
        }
    }

    /// Harmonic frequency if this is a harmonic potential.
    pub fn harmonic_omega(&self) -> Option<f64> {
        match self {
            Potential::Harmonic { omega, .. } => Some(*omega),
            _ => None,
        }
    }

    pub fn center(&self) -> f64 {
        match self {
            Potential::Harmonic { center, .. } => *center,
            Potential::Poly { center, .. } => *center,
        }
    }

    /// Turning points of the level set V(q) = e1 around `center`.
    ///
    /// Scans outward from the center for the first sign change on each
    /// side, bisects, then polishes with Newton to machine precision.
    /// Verifies the level set is a single closed curve (V < e1 strictly
    /// between the turning points) and errors on multi-component sets.
    pub fn turning_points(&self, e1: f64) -> Result<(f64, f64)> {
        if let Potential::Harmonic { omega, center } = self {
            if e1 <= 0.0 {
                return Err(Error::Bracketing(format!(
                    "no harmonic level set at E1 = {e1}"
                )));
            }
            let a = (2.0 * e1).sqrt() / omega;
            return Ok((center - a, center + a));
        }
        let c = self.center();
        if self.v(c) >= e1 {
            return Err(Error::Bracketing(format!(
                "V(center) = {} is not below E1 = {e1}",
                self.v(c)
            )));
        }
        let qmax = self.scan_root(c, e1, 1.0)?;
        let qmin = self.scan_root(c, e1, -1.0)?;
        // single-component check on an interior sample grid
        let n = 256;
        for i in 1..n {
            let q = qmin + (qmax - qmin) * i as f64 / n as f64;
            if self.v(q) >= e1 {
                return Err(Error::ComponentAmbiguity {
                    e1,
                    detail: format!("V({q}) = {} >= E1 inside the level set", self.v(q)),
                });
            }
        }
        Ok((qmin, qmax))
    }

    fn scan_root(&self, from: f64, e1: f64, direction: f64) -> Result<f64> {
        let g = |q: f64| self.v(q) - e1;
        let mut step = 0.1 * (1.0 + from.abs());
        let mut inside = from; // g(inside) < 0
        let mut outside = from;
        let mut found = false;
        for _ in 0..200 {
            outside = inside + direction * step;
            if g(outside) >= 0.0 {
                found = true;
                break;
            }
            inside = outside;
            step *= 1.4;
        }
        if !found {
            return Err(Error::Bracketing(format!(
                "no turning point found scanning from {from} in direction {direction}"
            )));
        }
        for _ in 0..100 {
            let mid = 0.5 * (inside + outside);
            if g(mid) < 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
            if (outside - inside).abs() < 1e-9 * (1.0 + mid.abs()) {
                break;
            }
        }
        let lo = inside.min(outside);
        let hi = inside.max(outside);
        // Newton polish so the residual V(q) - e1 reaches machine precision;
        // the period quadratures rely on this.
        let mut q = 0.5 * (lo + hi);
        for _ in 0..60 {
            let f = g(q);
            let d = self.dv(q);
            if d == 0.0 {
                break;
            }
            let dq = f / d;
            q -= dq;
            if dq.abs() < 1e-16 * (1.0 + q.abs()) {
                break;
            }
        }
        let slack = 1e-6 * (1.0 + q.abs());
        if q < lo - slack || q > hi + slack {
            q = 0.5 * (lo + hi);
        }
        Ok(q)
    }
}

/// Coupling potential of (q1, q2) with partial derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Coupling {
    /// (q1 - q1_center) * (q2 - q2_center)
    Bilinear { q1_center: f64, q2_center: f64 },
    /// g(q1) alone; no action transfer at leading order.
    Q1Only { coeffs: Vec<f64> },
    /// No coupling at all.
    None,
}

impl Coupling {
    pub fn v(&self, q1: f64, q2: f64) -> f64 {
        match self {
            Coupling::Bilinear {
                q1_center,
                q2_center,
            } => (q1 - q1_center) * (q2 - q2_center),
            Coupling::Q1Only { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * q1 + c)
            }
            Coupling::None => 0.0,
        }
    }

    pub fn dq1(&self, _q1: f64, q2: f64) -> f64 {
        match self {
            Coupling::Bilinear { q2_center, .. } => q2 - q2_center,
            Coupling::Q1Only { coeffs } => {
                let mut acc = 0.0;
                for k in (1..coeffs.len()).rev() {
                    acc = acc * _q1 + k as f64 * coeffs[k];
                }
                acc
            }
            Coupling::None => 0.0,
        }
    }

    pub fn dq2(&self, q1: f64, _q2: f64) -> f64 {
        match self {
            Coupling::Bilinear { q1_center, .. } => q1 - q1_center,
            Coupling::Q1Only { .. } | Coupling::None => 0.0,
        }
    }
}
