//! Embedded Dormand-Prince 5(4) stepper with fourth-order dense output.
//!
//! The pair is FSAL: the last stage of an accepted step is the first stage
//! of the next. Dense output follows the classic continuous extension built
//! from the stages plus one Hermite correction term.

use crate::error::{Error, Result};

// Butcher tableau
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// embedded 4th-order weights
const E1: f64 = 5179.0 / 57600.0;
const E3: f64 = 7571.0 / 16695.0;
const E4: f64 = 393.0 / 640.0;
const E5: f64 = -92097.0 / 339200.0;
const E6: f64 = 187.0 / 2100.0;
const E7: f64 = 1.0 / 40.0;
// dense-output correction weights
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with its interpolant.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Interpolated state at t in [t0, t0+h].
    pub fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let th1 = 1.0 - theta;
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = self.cont[0][i]
                + theta
                    * (self.cont[1][i]
                        + th1
                            * (self.cont[2][i]
                                + theta * (self.cont[3][i] + th1 * self.cont[4][i])));
        }
        y
    }
}

pub struct Dopri5<const N: usize, F>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    pub rhs: F,
    pub rtol: f64,
    pub atol: f64,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

impl<const N: usize, F> Dopri5<N, F>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    pub fn new(rhs: F, tol: f64) -> Self {
        Dopri5 {
            rhs,
            rtol: tol,
            atol: tol,
        }
    }

    /// Starting step size from the standard curvature heuristic.
    pub fn initial_step(&self, y: &[f64; N], span: f64) -> f64 {
        let f0 = (self.rhs)(y);
        let sc: Vec<f64> = (0..N)
            .map(|i| self.atol + self.rtol * y[i].abs())
            .collect();
        let d0 = (0..N).map(|i| (y[i] / sc[i]).powi(2)).sum::<f64>().sqrt();
        let d1 = (0..N).map(|i| (f0[i] / sc[i]).powi(2)).sum::<f64>().sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let y1 = axpy(y, h0, &[(1.0, &f0)]);
        let f1 = (self.rhs)(&y1);
        let d2 = (0..N)
            .map(|i| ((f1[i] - f0[i]) / sc[i]).powi(2))
            .sum::<f64>()
            .sqrt()
            / h0;
        let d_max = d1.max(d2);
        let h1 = if d_max <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d_max).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span.abs()).copysign(span)
    }

    /// One adaptive step from (t, y): retries until the error estimate
    /// passes, then returns the dense step, the suggested next step size
    /// and the FSAL stage for reuse.
    pub fn step(
        &self,
        t: f64,
        y: &[f64; N],
        h_try: f64,
        k1_reuse: Option<[f64; N]>,
    ) -> Result<(DenseStep<N>, f64, [f64; N])> {
        let mut h = h_try;
        let k1 = k1_reuse.unwrap_or_else(|| (self.rhs)(y));
        loop {
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow {
                    t,
                    q1: y[0],
                    q2: if N > 2 { y[2] } else { f64::NAN },
                });
            }
            let k2 = (self.rhs)(&axpy(y, h, &[(A21, &k1)]));
            let k3 = (self.rhs)(&axpy(y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = (self.rhs)(&axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = (self.rhs)(&axpy(
                y,
                h,
                &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
            ));
            let k6 = (self.rhs)(&axpy(
                y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ));
            let y1 = axpy(
                y,
                h,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            );
            let k7 = (self.rhs)(&y1);
            // embedded error estimate
            let y_hat = axpy(
                y,
                h,
                &[
                    (E1, &k1),
                    (E3, &k3),
                    (E4, &k4),
                    (E5, &k5),
                    (E6, &k6),
                    (E7, &k7),
                ],
            );
            let mut err_sq = 0.0;
            for i in 0..N {
                let sc = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
                let e = (y1[i] - y_hat[i]) / sc;
                err_sq += e * e;
            }
            let err = (err_sq / N as f64).sqrt();
            if err <= 1.0 {
                let mut cont = [[0.0; N]; 5];
                for i in 0..N {
                    let ydiff = y1[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    cont[0][i] = y[i];
                    cont[1][i] = ydiff;
                    cont[2][i] = bspl;
                    cont[3][i] = ydiff - h * k7[i] - bspl;
                    cont[4][i] = h * (D1 * k1[i]
                        + D3 * k3[i]
                        + D4 * k4[i]
                        + D5 * k5[i]
                        + D6 * k6[i]
                        + D7 * k7[i]);
                }
                let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
                let h_next = h * fac;
                return Ok((
                    DenseStep {
                        t0: t,
                        h,
                        y0: *y,
                        y1,
                        cont,
                    },
                    h_next,
                    k7,
                ));
            }
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0).min(0.9);
        }
    }
}

/// One classic fourth-order Runge-Kutta step; used for the tiny Newton
/// corrections around located events where |h| is at root-polish scale.
pub fn rk4_step<const N: usize>(rhs: &impl Fn(&[f64; N]) -> [f64; N], y: &[f64; N], h: f64) -> [f64; N] {
    let k1 = rhs(y);
    let k2 = rhs(&axpy(y, 0.5 * h, &[(1.0, &k1)]));
    let k3 = rhs(&axpy(y, 0.5 * h, &[(1.0, &k2)]));
    let k4 = rhs(&axpy(y, h, &[(1.0, &k3)]));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}
