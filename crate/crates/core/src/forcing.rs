//! Odd 2*pi-periodic forcing given as a finite sine series.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// One sine mode `amplitude * sin(mode * phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineMode {
    pub mode: u32,
    pub amplitude: f64,
}

/// Finite sine series `f(phi) = sum_m a_m sin(m phi)`.
///
/// The representation guarantees f(-phi) = -f(phi) by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Forcing {
    modes: Vec<SineMode>,
}

impl Default for Forcing {
    /// The single first mode sin(phi) with unit amplitude.
    fn default() -> Self {
        Forcing {
            modes: vec![SineMode {
                mode: 1,
                amplitude: 1.0,
            }],
        }
    }
}

impl Forcing {
    pub fn new(modes: Vec<SineMode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidArgument(
                "forcing needs at least one sine mode".into(),
            ));
        }
        if modes.iter().any(|m| m.mode == 0) {
            return Err(Error::InvalidArgument(
                "forcing mode numbers must be >= 1".into(),
            ));
        }
        Ok(Forcing { modes })
    }

    /// Single mode `amplitude * sin(phi)`.
    pub fn sine(amplitude: f64) -> Self {
        Forcing {
            modes: vec![SineMode { mode: 1, amplitude }],
        }
    }

    pub fn modes(&self) -> &[SineMode] {
        &self.modes
    }

    pub fn eval(&self, phi: f64) -> f64 {
        // Single-mode fast path: this sits in the hot loop of 1e8-step orbits.
        if let [m] = self.modes.as_slice() {
            return m.amplitude * (m.mode as f64 * phi).sin();
        }
        self.modes
            .iter()
            .map(|m| m.amplitude * (m.mode as f64 * phi).sin())
            .sum()
    }

    /// Derivative f'(phi) = sum_m a_m m cos(m phi).
    pub fn deriv(&self, phi: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| m.amplitude * m.mode as f64 * (m.mode as f64 * phi).cos())
            .sum()
    }

    /// Zeros of f on (-pi, pi], found by sampling and bracketed bisection.
    ///
    /// For the default single mode these are exactly {0, pi}. Zeros are
    /// refined until the angular bracket is below 1e-13.
    pub fn zeros(&self) -> Vec<f64> {
        if let [m] = self.modes.as_slice() {
            if m.amplitude != 0.0 {
                // sin(k phi) vanishes at j*pi/k; report those in (-pi, pi].
                let k = m.mode as i64;
                let mut zs: Vec<f64> = (-k + 1..=k)
                    .map(|j| j as f64 * PI / k as f64)
                    .collect();
                zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                return zs;
            }
        }
        // 0 and pi are zeros of every sine series; the rest come in +-
        // pairs, so only (0, pi) needs scanning.
        let mut zeros = vec![0.0, PI];
        let n = 4096usize;
        let mut interior = Vec::new();
        let sample = |i: usize| PI * i as f64 / n as f64;
        let mut prev_phi = sample(1);
        let mut prev = self.eval(prev_phi);
        // zeros hiding between the structural ones and the first sample
        let d0 = self.deriv(0.0);
        if d0 != 0.0 && d0 * prev < 0.0 {
            interior.push(self.bisect_zero(1e-15, prev_phi));
        }
        for i in 2..n {
            let phi = sample(i);
            let val = self.eval(phi);
            if val == 0.0 {
                interior.push(phi);
            } else if prev * val < 0.0 {
                interior.push(self.bisect_zero(prev_phi, phi));
            }
            prev_phi = phi;
            prev = val;
        }
        let dpi = self.deriv(PI);
        if dpi != 0.0 && prev * dpi > 0.0 {
            // f approaches pi from the same side its slope leaves it: a
            // crossing sits in the last subinterval
            interior.push(self.bisect_zero(prev_phi, PI - 1e-15));
        }
        for z in interior {
            if z > 1e-9 && z < PI - 1e-9 {
                zeros.push(z);
                zeros.push(-z);
            }
        }
        zeros.sort_by(|a, b| a.partial_cmp(b).unwrap());
        zeros.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
        zeros
    }

    fn bisect_zero(&self, mut lo: f64, mut hi: f64) -> f64 {
        let mut flo = self.eval(lo);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            let fm = self.eval(mid);
            if fm == 0.0 {
                return mid;
            }
            if flo * fm < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        0.5 * (lo + hi)
    }
}
