//! Quadrature-defined quantities of the unperturbed wall system and the
//! perturbed singularity curve.
//!
//! The unperturbed return map rotates the oscillator angle by
//! Theta(I; E) = omega2(I) * (T1(E - H2(I)) - dt_travel(E - H2(I))); at the
//! tangency action the travel correction vanishes and Theta equals the
//! rotation number Omega. Near tangency the rotation picks up the
//! square-root phase advance with physical coefficient
//! (2 omega2)^{3/2}/|V1'(q1w)| and linear coefficient given by the twist of
//! the smooth return map.
//!
//! The leading-order action transfer f(theta) is the same-angle gap between
//! the singularity curve and its forward image, divided by the perturbation
//! size. It is assembled from half-trajectory integrals of {I, Vc} along
//! unperturbed tangent trajectories plus the wall-tangency boundary term;
//! by the time-reversal symmetry of the curve it is odd by construction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::angle;
use crate::error::{Error, Result};
use crate::flow::action_angle::{action_angle, v2_omega};
use crate::flow::dopri5::Dopri5;
use crate::flow::engine::{return_map, section_point, SectionCrossing};
use crate::flow::spec::SystemSpec;
use crate::interp::{MonotoneCubicPeriodic, PeriodicSpline};
use crate::map::{MapParams, PhasePoint, Shear};
use crate::potential::Potential;
use crate::quad::integrate_adaptive;

/// Period of the q1 oscillation on the level set V1(q) = e1:
/// T1 = 2 int dq / sqrt(2 (e1 - V1)) between the turning points.
///
/// The substitution q = mid + halfwidth*sin(s) removes the inverse
/// square-root endpoint singularities; the turning points are polished to
/// machine precision beforehand.
pub fn quad_t1(e1: f64, v1: &Potential) -> Result<f64> {
    let (qmin, qmax) = v1.turning_points(e1)?;
    let mid = 0.5 * (qmin + qmax);
    let hw = 0.5 * (qmax - qmin);
    // e1 - V(q) through the nearer turning point in product form; the
    // residuals are at machine precision after polishing.
    let r_min = e1 - v1.v(qmin);
    let r_max = e1 - v1.v(qmax);
    let f = |s: f64| {
        let q = mid + hw * s.sin();
        let d = if s >= 0.0 {
            r_max + v1.delta_v(q, qmax)
        } else {
            r_min + v1.delta_v(q, qmin)
        };
        if d <= 0.0 {
            0.0
        } else {
            hw * s.cos() / (2.0 * d).sqrt()
        }
    };
    let half = integrate_adaptive(&f, -0.5 * PI, 0.5 * PI, 1e-12, 1e-14)?;
    Ok(2.0 * half)
}

/// Extra time an impacting level set would have spent left of the wall:
/// dt = 2 int_{qmin}^{q1w} dq / sqrt(2 (e1 - V1)); exactly 0 at and below
/// the tangency energy.
pub fn quad_dt_travel(e1: f64, v1: &Potential, q1w: f64) -> Result<f64> {
    if e1 <= v1.v(q1w) {
        return Ok(0.0);
    }
    let (qmin, _) = v1.turning_points(e1)?;
    let w = q1w - qmin;
    if w <= 0.0 {
        return Ok(0.0);
    }
    let r_min = e1 - v1.v(qmin);
    // q = qmin + w sin^2(u): singular left endpoint regularized, right
    // endpoint regular.
    let f = |u: f64| {
        let (su, cu) = u.sin_cos();
        let q = qmin + w * su * su;
        let d = r_min + v1.delta_v(q, qmin);
        if d <= 0.0 {
            0.0
        } else {
            2.0 * w * su * cu / (2.0 * d).sqrt()
        }
    };
    let val = integrate_adaptive(&f, 0.0, 0.5 * PI, 1e-12, 1e-14)?;
    Ok(2.0 * val)
}

/// Action-energy chart of the q2 oscillator: closed form when harmonic,
/// quadrature behind the same interface otherwise.
pub struct OscillatorChart<'a> {
    v: &'a Potential,
}

impl<'a> OscillatorChart<'a> {
    pub fn new(v: &'a Potential) -> Self {
        OscillatorChart { v }
    }

    /// Action of the level set V2 = e2: (1/pi) int sqrt(2 (e2 - V2)) dq.
    pub fn action_of_energy(&self, e2: f64) -> Result<f64> {
        if let Some(omega) = self.v.harmonic_omega() {
            return Ok(e2 / omega);
        }
        let (qmin, qmax) = self.v.turning_points(e2)?;
        let mid = 0.5 * (qmin + qmax);
        let hw = 0.5 * (qmax - qmin);
        let r_min = e2 - self.v.v(qmin);
        let r_max = e2 - self.v.v(qmax);
        let f = |s: f64| {
            let q = mid + hw * s.sin();
            let d = if s >= 0.0 {
                r_max + self.v.delta_v(q, qmax)
            } else {
                r_min + self.v.delta_v(q, qmin)
            };
            if d <= 0.0 {
                0.0
            } else {
                hw * s.cos() * (2.0 * d).sqrt()
            }
        };
        let val = integrate_adaptive(&f, -0.5 * PI, 0.5 * PI, 1e-12, 1e-14)?;
        Ok(val / PI)
    }

    /// Energy from action by monotone bracketed inversion.
    pub fn energy_of_action(&self, i: f64) -> Result<f64> {
        if let Some(omega) = self.v.harmonic_omega() {
            return Ok(omega * i);
        }
        if !(i > 0.0) {
            return Err(Error::InvalidArgument(format!("action must be > 0, got {i}")));
        }
        let mut hi = 1.0;
        for _ in 0..200 {
            if self.action_of_energy(hi)? > i {
                break;
            }
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if self.action_of_energy(mid)? < i {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) < 1e-14 * hi.max(1.0) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Oscillation frequency at the given action.
    pub fn frequency(&self, i: f64) -> Result<f64> {
        if let Some(omega) = self.v.harmonic_omega() {
            return Ok(omega);
        }
        let e2 = self.energy_of_action(i)?;
        Ok(2.0 * PI / quad_t1(e2, self.v)?)
    }
}

/// Rotation of the q2 angle over one return of the unperturbed wall
/// system: Theta(I; E) = omega2(I) (T1(E1) - dt_travel(E1)), E1 = E - H2(I).
pub fn rotation_theta(i: f64, spec: &SystemSpec) -> Result<f64> {
    let chart = OscillatorChart::new(&spec.v2);
    let e1 = spec.energy - chart.energy_of_action(i)?;
    let t1 = quad_t1(e1, &spec.v1)?;
    let dt = quad_dt_travel(e1, &spec.v1, spec.q1_wall_offset)?;
    Ok(chart.frequency(i)? * (t1 - dt))
}

/// Twist estimate with its Richardson error bound.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TwistEstimate {
    pub value: f64,
    pub error: f64,
}

/// Twist of the smooth (no wall) return map:
/// tau(I) = d/dI [omega2(I) T1(E - H2(I))], by central differences with one
/// Richardson extrapolation.
pub fn twist_tau(i: f64, spec: &SystemSpec) -> Result<TwistEstimate> {
    let chart = OscillatorChart::new(&spec.v2);
    let s = |i: f64| -> Result<f64> {
        let e1 = spec.energy - chart.energy_of_action(i)?;
        Ok(chart.frequency(i)? * quad_t1(e1, &spec.v1)?)
    };
    let h = 1e-5 * i.abs().max(1.0);
    let d = |h: f64| -> Result<f64> { Ok((s(i + h)? - s(i - h)?) / (2.0 * h)) };
    let d1 = d(h)?;
    let d2 = d(0.5 * h)?;
    // quadrature noise floor: the period values carry ~1e-12 relative error
    let noise = 1e-12 * s(i)?.abs() / h;
    Ok(TwistEstimate {
        value: (4.0 * d2 - d1) / 3.0,
        error: (d2 - d1).abs() / 3.0 + noise,
    })
}

/// All tangency-chart constants of the unperturbed system at its energy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnperturbedProfile {
    pub energy: f64,
    /// Tangency energy of the q1 motion, V1 at the wall foot.
    pub e1_tan: f64,
    /// Tangency action of the q2 motion.
    pub i_tan: f64,
    /// Return time of the tangent level set.
    pub t1_tan: f64,
    /// q2 frequency at the tangency action.
    pub omega2_tan: f64,
    /// Rotation number at tangency.
    pub omega: f64,
    /// Twist of the smooth return map at the tangency action.
    pub twist_tan: f64,
    pub twist_error: f64,
    /// Physical square-root coefficient (2 omega2)^{3/2} / |V1'(q1w)|.
    pub alpha_phys: f64,
}

impl UnperturbedProfile {
    pub fn compute(spec: &SystemSpec) -> Result<UnperturbedProfile> {
        spec.validate()?;
        let chart = OscillatorChart::new(&spec.v2);
        let e1_tan = spec.wall_foot_energy();
        let i_tan = chart.action_of_energy(spec.energy - e1_tan)?;
        let t1_tan = quad_t1(e1_tan, &spec.v1)?;
        let omega2_tan = chart.frequency(i_tan)?;
        let omega = omega2_tan * t1_tan;
        let twist = twist_tau(i_tan, spec)?;
        let slope = spec.v1.dv(spec.q1_wall_offset).abs();
        if slope == 0.0 {
            return Err(Error::InvalidArgument(
                "wall at a critical point of V1: square-root coefficient undefined".into(),
            ));
        }
        let alpha_phys = (2.0 * omega2_tan).powf(1.5) / slope;
        Ok(UnperturbedProfile {
            energy: spec.energy,
            e1_tan,
            i_tan,
            t1_tan,
            omega2_tan,
            omega,
            twist_tan: twist.value,
            twist_error: twist.error,
            alpha_phys,
        })
    }

    /// Shear sign from the twist; errors when the twist is numerically
    /// indistinguishable from zero (degenerate, e.g. both potentials
    /// harmonic).
    pub fn shear(&self) -> Result<Shear> {
        if self.twist_tan.abs() <= 10.0 * self.twist_error.max(1e-14) {
            return Err(Error::InvalidArgument(format!(
                "twist {} +- {} too close to zero to fix the shear sign",
                self.twist_tan, self.twist_error
            )));
        }
        Ok(if self.twist_tan > 0.0 {
            Shear::Positive
        } else {
            Shear::Negative
        })
    }

    /// Map-side square-root coefficient after rescaling K by |twist|.
    pub fn alpha_rescaled(&self) -> Result<f64> {
        self.shear()?;
        Ok(self.alpha_phys / self.twist_tan.abs().sqrt())
    }

    /// Map-side perturbation size for a physical coupling size.
    pub fn eps_rescaled(&self, eps_phys: f64) -> f64 {
        eps_phys * self.twist_tan.abs()
    }

    /// Map K from physical K = I - I_tan.
    pub fn k_rescaled(&self, k_phys: f64) -> f64 {
        k_phys * self.twist_tan.abs()
    }

    /// Truncated-map parameters matched to this system at coupling size
    /// `eps_phys`, with the forcing set to one sine mode of the given
    /// amplitude (the leading-order action transfer is a pure sine for
    /// bilinear coupling).
    pub fn map_params(&self, eps_phys: f64, forcing_amplitude: f64) -> Result<MapParams> {
        Ok(MapParams {
            epsilon: self.eps_rescaled(eps_phys),
            alpha: self.alpha_rescaled()?,
            omega: self.omega,
            tau: self.shear()?,
            forcing: crate::forcing::Forcing::sine(forcing_amplitude),
        })
    }
}

/// Leading-order singular phase advance in physical units: twist*K on the
/// non-impacting side, -alpha_phys*sqrt(-K) + twist*K on the impacting
/// side.
pub fn gs_eval(k: f64, profile: &UnperturbedProfile) -> f64 {
    let linear = profile.twist_tan * k;
    if k < 0.0 {
        linear - profile.alpha_phys * (-k).sqrt()
    } else {
        linear
    }
}

/// Half-trajectory contribution to the singularity-curve shape at leading
/// order: the action correction of the wall-tangency condition minus the
/// transfer integral of {I, Vc} from the section to the wall touch.
fn curve_shape_half(spec0: &SystemSpec, profile: &UnperturbedProfile, theta: f64) -> Result<f64> {
    let omega = v2_omega(spec0)?;
    let s0 = section_point(spec0, theta, profile.i_tan)?;
    // augmented state [q1, p1, q2, p2, integral of {I, Vc}]
    let rhs = |y: &[f64; 5]| {
        let f4 = spec0.rhs(&[y[0], y[1], y[2], y[3]]);
        let bracket = -(y[3] / omega) * spec0.coupling.dq2(y[0], y[2]);
        [f4[0], f4[1], f4[2], f4[3], bracket]
    };
    let solver = Dopri5::new(rhs, 1e-12);
    let t_half = 0.5 * profile.t1_tan;
    let mut y = [s0.q1, s0.p1, s0.q2, s0.p2, 0.0];
    let mut t = 0.0;
    let mut h = solver.initial_step(&y, t_half);
    let mut k1 = None;
    while t_half - t > 1e-15 * t_half {
        h = h.min(t_half - t);
        let (step, h_next, k7) = solver.step(t, &y, h, k1)?;
        t = step.t1();
        y = step.y1;
        k1 = Some(k7);
        h = h_next;
    }
    // diagnostics: the unperturbed tangent trajectory touches the wall foot
    // with zero normal momentum at half period
    debug_assert!(
        (y[0] - spec0.q1_wall_offset).abs() < 1e-6 && y[1].abs() < 1e-6,
        "tangent trajectory missed the wall: q1 = {}, p1 = {}",
        y[0],
        y[1]
    );
    let wall_term = -spec0.coupling.v(spec0.q1_wall_offset, y[2]) / omega;
    Ok(wall_term - y[4])
}

/// Leading-order action transfer f(theta): the same-angle gap between the
/// forward image of the singularity curve and the curve itself, per unit
/// coupling size.
///
/// Computed from two unperturbed tangent half-trajectories (departing at
/// -theta and theta); odd in theta by construction, vanishing identically
/// when the coupling does not depend on q2.
pub fn melnikov_f(theta: f64, profile: &UnperturbedProfile, spec: &SystemSpec) -> Result<f64> {
    let mut spec0 = spec.clone();
    spec0.eps_r = 0.0;
    spec0.eps_w = 0.0;
    Ok(curve_shape_half(&spec0, profile, -theta)? - curve_shape_half(&spec0, profile, theta)?)
}

/// The extracted singularity curve, its forward image resampled onto the
/// same angle grid, and the leading-order transfer on that grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularityCurve {
    /// Uniform angle grid on [-pi, pi).
    pub theta: Vec<f64>,
    /// Actions of the singularity curve on the grid.
    pub i_tan_eps: Vec<f64>,
    /// Actions of the forward image of the curve, as a graph on the grid.
    pub i_tan_image: Vec<f64>,
    /// Leading-order transfer f(theta) on the grid (zeros when V2 is not
    /// harmonic).
    pub melnikov: Vec<f64>,
    /// Unperturbed tangency action, the epsilon -> 0 limit of the curve.
    pub i_tan_unperturbed: f64,
    /// Bisection tolerance used in the extraction.
    pub tol: f64,
}

/// Extraction settings; `flow_tol` is the integrator tolerance for the
/// classification returns.
#[derive(Debug, Clone, Copy)]
pub struct ExtractionSettings {
    pub n_theta: usize,
    pub tol: f64,
    pub flow_tol: f64,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        ExtractionSettings {
            n_theta: 256,
            tol: 1e-9,
            flow_tol: 1e-11,
        }
    }
}

/// Locates the singularity curve by bisecting, at each grid angle, the
/// action between an impacting and a non-impacting initial condition on
/// the section; classification comes from the event log of the return
/// map. The image curve is obtained by mapping the tangent points forward
/// one return and resampling the resulting graph onto the grid.
pub fn extract_singularity_curve(
    spec: &SystemSpec,
    settings: &ExtractionSettings,
) -> Result<SingularityCurve> {
    spec.validate()?;
    if settings.n_theta < 8 {
        return Err(Error::InvalidArgument(
            "extraction needs at least 8 grid angles".into(),
        ));
    }
    if !(settings.tol > 0.0) {
        return Err(Error::InvalidArgument("extraction tol must be > 0".into()));
    }
    let mut spec0 = spec.clone();
    spec0.eps_r = 0.0;
    spec0.eps_w = 0.0;
    let profile = UnperturbedProfile::compute(&spec0)?;
    let chart = OscillatorChart::new(&spec.v2);
    let t_max = 10.0 * profile.t1_tan + 10.0;
    // action caps: keep E1 = E - H2(I) comfortably inside the valid range
    let i_hi_max = chart.action_of_energy(spec.energy - 0.05 * profile.e1_tan)?;
    let i_lo_min = 1e-3 * profile.i_tan;

    let classify = |theta: f64, i: f64| -> Result<bool> {
        let s = section_point(spec, theta, i)?;
        let c = return_map(&s, spec, settings.flow_tol, t_max)?;
        Ok(c.impact_flag)
    };

    let n = settings.n_theta;
    let theta_grid: Vec<f64> = (0..n).map(|k| -PI + 2.0 * PI * k as f64 / n as f64).collect();

    struct PointResult {
        i_star: f64,
        image_theta: f64,
        image_i: f64,
    }
    let points: Vec<Result<PointResult>> = theta_grid
        .par_iter()
        .map(|&theta| -> Result<PointResult> {
            // expand a bracket [lo impacting, hi non-impacting]
            let mut delta = (1e-4 * profile.i_tan).max(4.0 * settings.tol);
            let (mut lo, mut hi);
            loop {
                lo = (profile.i_tan - delta).max(i_lo_min);
                hi = (profile.i_tan + delta).min(i_hi_max);
                let lo_drains = classify(theta, lo)?;
                let hi_drains = classify(theta, hi)?;
                match (lo_drains, hi_drains) {
                    (true, false) => break,
                    _ if lo <= i_lo_min && hi >= i_hi_max => {
                        return Err(Error::ClassificationFailure {
                            class: if lo_drains { "impacting" } else { "non-impacting" },
                        });
                    }
                    _ => delta *= 3.0,
                }
            }
            while hi - lo > settings.tol {
                let mid = 0.5 * (lo + hi);
                if classify(theta, mid)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let i_star = 0.5 * (lo + hi);
            // forward image of the tangent point, taken from the
            // non-impacting side (tangent trajectories follow the smooth
            // flow)
            let s = section_point(spec, theta, hi)?;
            let c = return_map(&s, spec, settings.flow_tol, t_max)?;
            let (th_bar, i_bar) = action_angle(spec, c.state.q2, c.state.p2)?;
            Ok(PointResult {
                i_star,
                image_theta: th_bar,
                image_i: i_bar,
            })
        })
        .collect();

    let mut i_tan_eps = Vec::with_capacity(n);
    let mut image_param: Vec<(f64, f64)> = Vec::with_capacity(n);
    for p in points {
        let p = p?;
        i_tan_eps.push(p.i_star);
        image_param.push((angle::reduce(p.image_theta), p.image_i));
    }
    image_param.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    if image_param.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidArgument(
            "image of the singularity curve is not a graph at this perturbation".into(),
        ));
    }
    let spline = PeriodicSpline::new(
        image_param.iter().map(|p| p.0).collect(),
        image_param.iter().map(|p| p.1).collect(),
        2.0 * PI,
    )?;
    let i_tan_image: Vec<f64> = theta_grid.iter().map(|&t| spline.eval(t)).collect();

    let melnikov: Vec<f64> = if spec.v2.harmonic_omega().is_some() {
        theta_grid
            .par_iter()
            .map(|&t| melnikov_f(t, &profile, spec))
            .collect::<Result<Vec<f64>>>()?
    } else {
        vec![0.0; n]
    };

    Ok(SingularityCurve {
        theta: theta_grid,
        i_tan_eps,
        i_tan_image,
        melnikov,
        i_tan_unperturbed: profile.i_tan,
        tol: settings.tol,
    })
}

impl SingularityCurve {
    /// Largest violation of the reflection symmetry between the curve's
    /// image and the mirrored curve.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.theta.len();
        let mut worst = 0.0f64;
        for k in 0..n {
            // theta[k] = -pi + 2 pi k/n mirrors onto index (n - k) mod n
            let mirror = (n - k) % n;
            worst = worst.max((self.i_tan_image[k] - self.i_tan_eps[mirror]).abs());
        }
        worst
    }

    /// Interpolators for chart lookups.
    pub fn interpolator(&self) -> Result<ChartInterp> {
        let curve =
            MonotoneCubicPeriodic::new(self.theta.clone(), self.i_tan_eps.clone(), 2.0 * PI)?;
        Ok(ChartInterp { curve })
    }

    /// CSV body with columns theta, I_tan_eps, I_tan_image, f.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,I_tan_eps,I_tan_image,f\n");
        for k in 0..self.theta.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.theta[k], self.i_tan_eps[k], self.i_tan_image[k], self.melnikov[k]
            ));
        }
        out
    }
}

/// Monotone-cubic lookup of the singularity curve for the tangency chart.
pub struct ChartInterp {
    curve: MonotoneCubicPeriodic,
}

impl ChartInterp {
    pub fn i_tan_at(&self, theta: f64) -> f64 {
        self.curve.eval(theta)
    }
}

/// Chart from a section crossing to tangency coordinates: phi is the
/// oscillator angle, K the signed action distance from the singularity
/// curve (negative on the impacting side).
pub fn to_tangency_chart(
    crossing: &SectionCrossing,
    interp: &ChartInterp,
    spec: &SystemSpec,
) -> Result<PhasePoint> {
    let (theta, i) = action_angle(spec, crossing.state.q2, crossing.state.p2)?;
    Ok(PhasePoint::new(theta, i - interp.i_tan_at(theta)))
}

/// Inverse chart: (theta, I) of a tangency-chart point.
pub fn from_tangency_chart(p: &PhasePoint, interp: &ChartInterp) -> (f64, f64) {
    (p.phi, p.k + interp.i_tan_at(p.phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Coupling;

    fn quartic_v1() -> Potential {
        Potential::Poly {
            coeffs: vec![0.0, 0.0, 2.0, 1.0, 0.25],
            center: 0.0,
        }
    }

    #[test]
    fn harmonic_period_is_2pi() {
        let v = Potential::Harmonic {
            omega: 1.0,
            center: 0.0,
        };
        for &e1 in &[0.1, 1.0, 17.3] {
            assert!((quad_t1(e1, &v).unwrap() - 2.0 * PI).abs() < 1e-10);
        }
    }

    #[test]
    fn quartic_period_matches_trapezoid_oracle() {
        // high-resolution trapezoid rule after the same substitution
        let v = Potential::Poly {
            coeffs: vec![0.0, 0.0, 0.5, 0.0, 0.25],
            center: 0.0,
        };
        let e1 = 1.0;
        let (qmin, qmax) = v.turning_points(e1).unwrap();
        let mid = 0.5 * (qmin + qmax);
        let hw = 0.5 * (qmax - qmin);
        let n = 1 << 21;
        // endpoint values by the analytic limit sqrt(hw/|V'(q_turn)|)
        let f_left = (hw / v.dv(qmin).abs()).sqrt();
        let f_right = (hw / v.dv(qmax).abs()).sqrt();
        let mut acc = 0.5 * (f_left + f_right);
        for i in 1..n {
            let s = -0.5 * PI + PI * i as f64 / n as f64;
            let q = mid + hw * s.sin();
            let d = e1 - v.v(q);
            acc += if d <= 0.0 { 0.0 } else { hw * s.cos() / (2.0 * d).sqrt() };
        }
        let oracle = 2.0 * acc * PI / n as f64;
        let got = quad_t1(e1, &v).unwrap();
        assert!((got - oracle).abs() < 1e-9, "quad {got} vs oracle {oracle}");
    }

    #[test]
    fn duffing_period_stable_under_refinement() {
        let lambda = 5.0f64.sqrt() - 1.0;
        let v = Potential::Poly {
            coeffs: vec![0.0, 0.0, -0.5 * lambda, 0.0, 0.25],
            center: 2.5,
        };
        let e1 = v.v(0.0);
        let t1 = quad_t1(e1, &v).unwrap();
        assert!(t1.is_finite() && t1 > 0.0);
        // reproducible to the quadrature tolerance
        let again = quad_t1(e1, &v).unwrap();
        assert_eq!(t1.to_bits(), again.to_bits());
    }

    #[test]
    fn travel_time_harmonic_closed_form() {
        let v = Potential::Harmonic {
            omega: 1.0,
            center: 0.0,
        };
        // E1 = 0.5, wall at -0.5: 2 (arcsin(-0.5) + pi/2) = 2 pi / 3
        let dt = quad_dt_travel(0.5, &v, -0.5).unwrap();
        assert!((dt - 2.0 * PI / 3.0).abs() < 1e-10, "dt = {dt}");
        // tangent and sub-tangent energies give exactly zero
        assert_eq!(quad_dt_travel(0.125, &v, -0.5).unwrap(), 0.0);
        assert_eq!(quad_dt_travel(0.1, &v, -0.5).unwrap(), 0.0);
    }

    #[test]
    fn travel_time_monotone_in_energy() {
        let v1 = quartic_v1();
        let q1w = -0.8;
        let e_tan = v1.v(q1w);
        let mut prev = 0.0;
        for k in 1..=10 {
            let e1 = e_tan * (1.0 + 0.1 * k as f64);
            let dt = quad_dt_travel(e1, &v1, q1w).unwrap();
            assert!(dt > prev);
            prev = dt;
        }
    }

    #[test]
    fn oscillator_chart_inverts() {
        // general quartic oscillator: H2(H2^-1(e2)) = e2 on a grid
        let v2 = Potential::Poly {
            coeffs: vec![0.0, 0.0, 1.0, 0.0, 0.3],
            center: 0.0,
        };
        let chart = OscillatorChart::new(&v2);
        for &e2 in &[0.3, 1.0, 2.5] {
            let i = chart.action_of_energy(e2).unwrap();
            let back = chart.energy_of_action(i).unwrap();
            assert!((back - e2).abs() < 1e-10, "{back} vs {e2}");
        }
        // harmonic closed form
        let vh = Potential::Harmonic {
            omega: 2.0,
            center: 0.0,
        };
        let ch = OscillatorChart::new(&vh);
        assert_eq!(ch.action_of_energy(3.0).unwrap(), 1.5);
        assert_eq!(ch.energy_of_action(1.5).unwrap(), 3.0);
    }

    #[test]
    fn rotation_continuous_across_tangency() {
        let spec = SystemSpec::preset("quartic-example").unwrap();
        let profile = {
            let mut s0 = spec.clone();
            s0.eps_r = 0.0;
            s0.eps_w = 0.0;
            UnperturbedProfile::compute(&s0).unwrap()
        };
        let above = rotation_theta(profile.i_tan * (1.0 + 1e-10), &spec).unwrap();
        let below = rotation_theta(profile.i_tan * (1.0 - 1e-10), &spec).unwrap();
        assert!((above - profile.omega).abs() < 1e-4);
        assert!((below - profile.omega).abs() < 1e-4);
        // derivative blows up on the impacting side like the square root
        let below2 = rotation_theta(profile.i_tan * (1.0 - 1e-6), &spec).unwrap();
        let drop2 = profile.omega - below2;
        let drop1 = profile.omega - below;
        assert!(drop2 > 50.0 * drop1, "sqrt-type deficit: {drop1} vs {drop2}");
    }

    #[test]
    fn quartic_profile_frozen_constants() {
        let spec = SystemSpec::preset("quartic-example").unwrap();
        let profile = UnperturbedProfile::compute(&spec).unwrap();
        assert!((profile.e1_tan - 0.8704).abs() < 1e-12);
        // alpha_phys = (2 sqrt(3))^(3/2) / 1.792
        let expect = (2.0 * 3.0f64.sqrt()).powf(1.5) / 1.792;
        assert!((profile.alpha_phys - expect).abs() < 1e-12);
        assert!((profile.omega - 3.0f64.sqrt() * quad_t1(0.8704, &spec.v1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn twist_chain_rule_for_harmonic_v2() {
        // harmonic V2: tau(I) = -omega2^2 T1'(E - omega2 I)
        let spec = SystemSpec::preset("quartic-example").unwrap();
        let omega2 = 3.0f64.sqrt();
        let i = 0.55;
        let tw = twist_tau(i, &spec).unwrap();
        let e1 = spec.energy - omega2 * i;
        let h = 1e-6;
        let t1p = (quad_t1(e1 + h, &spec.v1).unwrap() - quad_t1(e1 - h, &spec.v1).unwrap())
            / (2.0 * h);
        let oracle = -omega2 * omega2 * t1p;
        assert!(
            (tw.value - oracle).abs() < 1e-5 + 10.0 * tw.error,
            "twist {} vs chain rule {oracle}",
            tw.value
        );
    }

    #[test]
    fn degenerate_twist_flagged() {
        let spec = SystemSpec {
            v1: Potential::Harmonic {
                omega: 1.0,
                center: 0.0,
            },
            v2: Potential::Harmonic {
                omega: 0.7,
                center: 0.0,
            },
            coupling: Coupling::None,
            eps_r: 0.0,
            eps_w: 0.0,
            q1_wall_offset: -1.0,
            energy: 2.0,
        };
        let profile = UnperturbedProfile::compute(&spec).unwrap();
        assert!(profile.twist_tan.abs() < 1e-6);
        assert!(profile.shear().is_err());
    }

    #[test]
    fn gs_values() {
        let spec = SystemSpec::preset("quartic-example").unwrap();
        let profile = UnperturbedProfile::compute(&spec).unwrap();
        assert_eq!(gs_eval(0.0, &profile), 0.0);
        let k = -1e-4;
        let expect = profile.twist_tan * k - profile.alpha_phys * 1e-2;
        assert!((gs_eval(k, &profile) - expect).abs() < 1e-15);
        assert_eq!(gs_eval(0.3, &profile), 0.3 * profile.twist_tan);
    }

    #[test]
    fn melnikov_matches_closed_form_for_harmonic_wall_system() {
        // V1 = q^2/2 with wall at -1, V2 harmonic with omega != 1,
        // bilinear coupling: the transfer is exactly
        // -2 A sqrt(2 I/omega) sin(pi omega) sin(theta) / (omega (omega^2-1))
        let omega = 0.7;
        let spec = SystemSpec {
            v1: Potential::Harmonic {
                omega: 1.0,
                center: 0.0,
            },
            v2: Potential::Harmonic {
                omega,
                center: 0.0,
            },
            coupling: Coupling::Bilinear {
                q1_center: 0.0,
                q2_center: 0.0,
            },
            eps_r: 0.0,
            eps_w: 0.0,
            q1_wall_offset: -1.0,
            energy: 2.0,
        };
        let profile = UnperturbedProfile::compute(&spec).unwrap();
        let a = 1.0; // |q1w|
        let amp = -2.0 * a * (2.0 * profile.i_tan / omega).sqrt() * (PI * omega).sin()
            / (omega * (omega * omega - 1.0));
        for k in 0..16 {
            let theta = -PI + 2.0 * PI * k as f64 / 16.0;
            let f = melnikov_f(theta, &profile, &spec).unwrap();
            assert!(
                (f - amp * theta.sin()).abs() < 1e-6 * amp.abs().max(1.0),
                "theta {theta}: {f} vs {}",
                amp * theta.sin()
            );
        }
    }

    #[test]
    fn melnikov_odd_and_zero_for_q1_only_coupling() {
        let mut spec = SystemSpec::preset("duffing-center").unwrap();
        let profile = {
            let mut s0 = spec.clone();
            s0.eps_r = 0.0;
            s0.eps_w = 0.0;
            UnperturbedProfile::compute(&s0).unwrap()
        };
        for k in 0..64 {
            let theta = -PI + 2.0 * PI * k as f64 / 64.0;
            let f = melnikov_f(theta, &profile, &spec).unwrap();
            let f_neg = melnikov_f(-theta, &profile, &spec).unwrap();
            assert!((f + f_neg).abs() < 1e-7);
        }
        spec.coupling = Coupling::Q1Only {
            coeffs: vec![0.0, 1.0, 0.3],
        };
        for k in 0..8 {
            let theta = -PI + 2.0 * PI * k as f64 / 8.0;
            assert!(melnikov_f(theta, &profile, &spec).unwrap().abs() < 1e-12);
        }
    }
}
