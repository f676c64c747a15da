//! Wall-system specification: separable Hamiltonian, coupling, wall
//! geometry and energy, plus the named presets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{Coupling, Potential};

/// A concrete wall system
/// H = p1^2/2 + V1(q1) + p2^2/2 + V2(q2) + eps_r Vc(q1,q2), motion
/// restricted to the side q1 >= q1_wall_offset + eps_w q2 with elastic
/// reflection at the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub v1: Potential,
    pub v2: Potential,
    pub coupling: Coupling,
    /// Smooth coupling size.
    pub eps_r: f64,
    /// Wall tilt; the wall is q1 = q1_wall_offset + eps_w * q2.
    pub eps_w: f64,
    /// Base wall position (the whole wall when eps_w = 0).
    pub q1_wall_offset: f64,
    /// Total energy of the iso-energy section.
    pub energy: f64,
}

impl SystemSpec {
    /// Named presets.
    ///
    /// - `duffing-center`: double well above its barrier in q1 coupled to a
    ///   unit harmonic center, wall tilted through q1 = 0.
    /// - `quartic-example`: convex quartic q1 potential, harmonic q2 with
    ///   frequency sqrt(3), straight wall at q1 = -0.8.
    pub fn preset(name: &str) -> Result<SystemSpec> {
        match name {
            "duffing-center" => {
                let lambda = 5.0f64.sqrt() - 1.0;
                Ok(SystemSpec {
                    v1: Potential::Poly {
                        coeffs: vec![0.0, 0.0, -0.5 * lambda, 0.0, 0.25],
                        center: 2.5,
                    },
                    v2: Potential::Harmonic {
                        omega: 1.0,
                        center: 0.0,
                    },
                    coupling: Coupling::Bilinear {
                        q1_center: 2.5,
                        q2_center: 0.0,
                    },
                    eps_r: 0.02,
                    eps_w: 0.01,
                    q1_wall_offset: 0.0,
                    energy: 10.0,
                })
            }
            "quartic-example" => Ok(SystemSpec {
                v1: Potential::Poly {
                    coeffs: vec![0.0, 0.0, 2.0, 1.0, 0.25],
                    center: 0.0,
                },
                v2: Potential::Harmonic {
                    omega: 3.0f64.sqrt(),
                    center: 0.0,
                },
                coupling: Coupling::Bilinear {
                    q1_center: 0.0,
                    q2_center: 0.0,
                },
                eps_r: 0.0,
                eps_w: 0.0,
                q1_wall_offset: -0.8,
                energy: 2.0,
            }),
            other => Err(Error::InvalidArgument(format!(
                "unknown preset '{other}'; available: duffing-center, quartic-example"
            ))),
        }
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["duffing-center", "quartic-example"]
    }

    /// Tangency energy of the q1 motion: V1 at the unperturbed wall foot.
    pub fn wall_foot_energy(&self) -> f64 {
        self.v1.v(self.q1_wall_offset)
    }

    /// Semantic diagnostics; empty when valid.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.energy > self.wall_foot_energy()) {
            out.push(format!(
                "energy E = {} must exceed V1 at the wall foot ({}) for a tangent torus to exist",
                self.energy,
                self.wall_foot_energy()
            ));
        }
        if !(self.eps_r >= 0.0) {
            out.push(format!("eps_r must be >= 0, got {}", self.eps_r));
        }
        if out.is_empty() {
            // the tangent level set itself must be a single closed curve
            if let Err(e) = self.v1.turning_points(self.wall_foot_energy()) {
                out.push(format!(
                    "q1 level set at the tangency energy E1 = {}: {e}",
                    self.wall_foot_energy()
                ));
            }
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

    /// Signed wall clearance g(q) = q1 - offset - eps_w q2; motion is
    /// allowed for g >= 0.
    #[inline]
    pub fn wall_clearance(&self, q1: f64, q2: f64) -> f64 {
        q1 - self.q1_wall_offset - self.eps_w * q2
    }

    /// Unit inward normal of the wall in the (q1, q2) plane.
    pub fn wall_normal(&self) -> (f64, f64) {
        let norm = (1.0 + self.eps_w * self.eps_w).sqrt();
        (1.0 / norm, -self.eps_w / norm)
    }

    pub fn hamiltonian_coords(&self, q1: f64, p1: f64, q2: f64, p2: f64) -> f64 {
        0.5 * (p1 * p1 + p2 * p2)
            + self.v1.v(q1)
            + self.v2.v(q2)
            + self.eps_r * self.coupling.v(q1, q2)
    }

    pub fn hamiltonian(&self, s: &FlowState) -> f64 {
        self.hamiltonian_coords(s.q1, s.p1, s.q2, s.p2)
    }

    /// Right-hand side of Hamilton's equations for [q1, p1, q2, p2].
    #[inline]
    pub fn rhs(&self, y: &[f64; 4]) -> [f64; 4] {
        [
            y[1],
            -self.v1.dv(y[0]) - self.eps_r * self.coupling.dq1(y[0], y[2]),
            y[3],
            -self.v2.dv(y[2]) - self.eps_r * self.coupling.dq2(y[0], y[2]),
        ]
    }

    /// dp1/dt at a state; the return section requires this negative.
    #[inline]
    pub fn p1_dot(&self, q1: f64, q2: f64) -> f64 {
        -self.v1.dv(q1) - self.eps_r * self.coupling.dq1(q1, q2)
    }
}

/// Phase-space point of the wall system with its time stamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub q1: f64,
    pub p1: f64,
    pub q2: f64,
    pub p2: f64,
    pub t: f64,
}

impl FlowState {
    pub fn new(q1: f64, p1: f64, q2: f64, p2: f64) -> Self {
        FlowState {
            q1,
            p1,
            q2,
            p2,
            t: 0.0,
        }
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.q1, self.p1, self.q2, self.p2]
    }

    pub fn from_coords(y: [f64; 4], t: f64) -> Self {
        FlowState {
            q1: y[0],
            p1: y[1],
            q2: y[2],
            p2: y[3],
            t,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duffing_preset_geometry() {
        let s = SystemSpec::preset("duffing-center").unwrap();
        // tangency energy at the wall foot q1 = 0 (x = -2.5)
        let e1 = s.wall_foot_energy();
        assert!((e1 - 5.902_912_570_313_157).abs() < 1e-9, "E1_tan = {e1}");
        assert!(s.energy > e1);
        s.validate().unwrap();
    }

    #[test]
    fn quartic_preset_geometry() {
        let s = SystemSpec::preset("quartic-example").unwrap();
        assert!((s.wall_foot_energy() - 0.8704).abs() < 1e-12);
        assert!((s.v1.dv(-0.8) + 1.792).abs() < 1e-12);
        s.validate().unwrap();
    }

    #[test]
    fn unknown_preset_rejected() {
        assert!(SystemSpec::preset("nope").is_err());
    }

    #[test]
    fn energy_below_wall_rejected() {
        let mut s = SystemSpec::preset("quartic-example").unwrap();
        s.energy = 0.5; // below V1(-0.8) = 0.8704
        assert!(!s.diagnostics().is_empty());
    }

    #[test]
    fn wall_normal_reduces_to_p1_flip() {
        let s = SystemSpec::preset("quartic-example").unwrap();
        assert_eq!(s.wall_normal(), (1.0, 0.0));
    }

    #[test]
    fn serde_roundtrip() {
        let s = SystemSpec::preset("duffing-center").unwrap();
        let txt = serde_json::to_string(&s).unwrap();
        let back: SystemSpec = serde_json::from_str(&txt).unwrap();
        assert_eq!(s, back);
    }
}
