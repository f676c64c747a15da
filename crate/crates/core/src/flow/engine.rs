//! Wall-system integration: smooth flow between events, elastic impacts at
//! the (possibly tilted) wall, and the Poincaré return map to the section
//! p1 = 0, dp1/dt < 0.
//!
//! Events are found on the dense output of each accepted step (sign scan
//! plus a dip check for shallow wall grazes), refined by bisection on the
//! interpolant, then polished by Newton steps on the exactly integrated
//! state, so located times are good to ~1e-12 and the state at the event
//! carries integrator accuracy rather than interpolant accuracy.

use crate::error::{Error, Result};
use crate::flow::action_angle::{from_action_angle, v2_omega};
use crate::flow::dopri5::{rk4_step, DenseStep, Dopri5};
use crate::flow::spec::{FlowState, SystemSpec};

/// Below this |normal momentum| a wall crossing counts as a tangency: the
/// trajectory is continued smoothly, with a logged flag and no reflection.
pub const GRAZING_MOMENTUM: f64 = 1e-9;

/// Allowed wall penetration of reported states.
pub const PENETRATION_TOL: f64 = 1e-10;

const ARM_CLEARANCE: f64 = 1e-7;
const SCAN_SAMPLES: usize = 12;

/// One located wall event.
#[derive(Debug, Clone, Copy)]
pub struct ImpactEvent {
    pub t: f64,
    /// State on the wall just before the reflection.
    pub state_before: FlowState,
    /// State after the event (reflected unless grazing).
    pub state: FlowState,
    /// Normal momentum just before the event (negative into the wall).
    pub normal_momentum: f64,
    pub grazing: bool,
}

/// A located crossing of the return section.
#[derive(Debug, Clone)]
pub struct SectionCrossing {
    pub state: FlowState,
    /// Whether the preceding segment reflected off the wall.
    pub impact_flag: bool,
    /// Whether the preceding segment grazed the wall tangentially.
    pub grazing_flag: bool,
    /// Elapsed time since the starting state.
    pub return_time: f64,
}

struct RunOpts {
    t_end: f64,
    tol: f64,
    wall: bool,
    stop_at_section: bool,
}

struct RunOutcome {
    state: FlowState,
    impacts: Vec<ImpactEvent>,
    section: Option<FlowState>,
}

fn bisect_dense<const N: usize>(
    step: &DenseStep<N>,
    f: &impl Fn(&[f64; N]) -> f64,
    mut t_lo: f64,
    mut t_hi: f64,
) -> f64 {
    // f(t_lo) > 0 >= f(t_hi)
    for _ in 0..80 {
        let tm = 0.5 * (t_lo + t_hi);
        if f(&step.eval(tm)) > 0.0 {
            t_lo = tm;
        } else {
            t_hi = tm;
        }
        if (t_hi - t_lo).abs() <= 1e-15 * t_hi.abs().max(1.0) {
            break;
        }
    }
    t_hi
}

/// Earliest downward zero crossing of f along the dense step.
///
/// When a slope function is supplied, local minima of f are located from
/// the slope's sign changes and checked for shallow dips through zero;
/// this catches grazes whose dip is narrower than the sample spacing and
/// minima that sit right at a step boundary.
fn scan_down_crossing<const N: usize>(
    step: &DenseStep<N>,
    f: &impl Fn(&[f64; N]) -> f64,
    slope: Option<&dyn Fn(&[f64; N]) -> f64>,
) -> Option<f64> {
    let mut ts = [0.0f64; SCAN_SAMPLES + 1];
    let mut vs = [0.0f64; SCAN_SAMPLES + 1];
    for i in 0..=SCAN_SAMPLES {
        ts[i] = step.t0 + step.h * i as f64 / SCAN_SAMPLES as f64;
        vs[i] = f(&step.eval(ts[i]));
    }
    let mut best: Option<f64> = None;
    for i in 0..SCAN_SAMPLES {
        if vs[i] > 0.0 && vs[i + 1] <= 0.0 {
            best = Some(bisect_dense(step, f, ts[i], ts[i + 1]));
            break;
        }
    }
    if let Some(g) = slope {
        for i in 0..SCAN_SAMPLES {
            if best.is_some_and(|b| ts[i] >= b) {
                break;
            }
            let s_lo = g(&step.eval(ts[i]));
            let s_hi = g(&step.eval(ts[i + 1]));
            if s_lo < 0.0 && s_hi >= 0.0 && vs[i] > 0.0 {
                // local minimum of f inside: bisect the slope to find it
                let (mut a, mut b) = (ts[i], ts[i + 1]);
                for _ in 0..80 {
                    let tm = 0.5 * (a + b);
                    if g(&step.eval(tm)) < 0.0 {
                        a = tm;
                    } else {
                        b = tm;
                    }
                    if (b - a).abs() <= 1e-15 * b.abs().max(1.0) {
                        break;
                    }
                }
                let tm = 0.5 * (a + b);
                if f(&step.eval(tm)) < 0.0 {
                    let tc = bisect_dense(step, f, ts[i], tm);
                    best = Some(best.map_or(tc, |b| b.min(tc)));
                    break;
                }
            }
        }
    }
    best
}

/// Re-integrates cleanly from the step start to t_target (no events fire
/// inside by construction), so the returned state has stepper accuracy.
fn advance_exact<F: Fn(&[f64; 4]) -> [f64; 4]>(
    solver: &Dopri5<4, F>,
    y0: &[f64; 4],
    t0: f64,
    t_target: f64,
) -> Result<[f64; 4]> {
    let mut y = *y0;
    let mut t = t0;
    let mut h = t_target - t0;
    if h == 0.0 {
        return Ok(y);
    }
    let mut k1 = None;
    while (t_target - t).abs() > 1e-15 * t_target.abs().max(1.0) {
        h = h.abs().min((t_target - t).abs()).copysign(t_target - t);
        let (step, h_next, k7) = solver.step(t, &y, h, k1)?;
        t = step.t1();
        y = step.y1;
        k1 = Some(k7);
        h = h_next;
    }
    Ok(y)
}

/// Newton polish of an event function on the true flow; the correction
/// steps are tiny, so single fourth-order steps carry no visible error.
fn polish_event<F, V, D>(
    rhs: &F,
    mut y: [f64; 4],
    mut t: f64,
    value: V,
    slope: D,
    tol: f64,
) -> ([f64; 4], f64)
where
    F: Fn(&[f64; 4]) -> [f64; 4],
    V: Fn(&[f64; 4]) -> f64,
    D: Fn(&[f64; 4]) -> f64,
{
    for _ in 0..8 {
        let v = value(&y);
        if v.abs() <= tol {
            break;
        }
        let d = slope(&y);
        if d == 0.0 {
            break;
        }
        let dt = -v / d;
        y = rk4_step(rhs, &y, dt);
        t += dt;
    }
    (y, t)
}

fn run(spec: &SystemSpec, s0: &FlowState, opts: RunOpts) -> Result<RunOutcome> {
    let rhs = |y: &[f64; 4]| spec.rhs(y);
    let solver = Dopri5::new(rhs, opts.tol);
    let mut y = s0.coords();
    let mut t = s0.t;
    let t_end = opts.t_end;
    let dir = if t_end >= t { 1.0 } else { -1.0 };
    if opts.wall || opts.stop_at_section {
        if dir < 0.0 {
            return Err(Error::InvalidArgument(
                "event detection requires forward integration".into(),
            ));
        }
        let g0 = spec.wall_clearance(y[0], y[2]);
        if opts.wall && g0 < -PENETRATION_TOL {
            return Err(Error::InvalidArgument(format!(
                "initial state penetrates the wall: clearance {g0}"
            )));
        }
    }
    let wall_fn = |y: &[f64; 4]| spec.wall_clearance(y[0], y[2]);
    let wall_slope = |y: &[f64; 4]| y[1] - spec.eps_w * y[3];
    let sect_fn = |y: &[f64; 4]| y[1];
    let sect_slope = |y: &[f64; 4]| spec.p1_dot(y[0], y[2]);
    let arm_at = |y: &[f64; 4]| ARM_CLEARANCE * (1.0 + y[0].abs());

    let mut impacts = Vec::new();
    let mut wall_armed = opts.wall && wall_fn(&y) > arm_at(&y);
    let mut h = solver.initial_step(&y, t_end - t);
    let mut k1: Option<[f64; 4]> = None;

    while (t_end - t) * dir > 1e-14 * t_end.abs().max(1.0) {
        if !wall_armed && opts.wall && wall_fn(&y) > arm_at(&y) {
            wall_armed = true;
        }
        h = h.abs().min((t_end - t).abs()).copysign(dir);
        let (step, h_next, k7) = solver.step(t, &y, h, k1)?;

        let wall_t = if wall_armed {
            scan_down_crossing(&step, &wall_fn, Some(&wall_slope))
        } else {
            None
        };
        let sect_t = if opts.stop_at_section {
            scan_down_crossing(&step, &sect_fn, None)
        } else {
            None
        };

        let first_wall = match (wall_t, sect_t) {
            (Some(tw), Some(ts)) => Some(tw < ts),
            (Some(_), None) => Some(true),
            (None, Some(_)) => Some(false),
            (None, None) => None,
        };

        match first_wall {
            Some(true) => {
                let tc = wall_t.unwrap();
                let yc = advance_exact(&solver, &step.y0, step.t0, tc)?;
                let (mut yc, tc) = polish_event(
                    &rhs,
                    yc,
                    tc,
                    wall_fn,
                    wall_slope,
                    1e-13 * (1.0 + yc[0].abs()),
                );
                // land exactly on the wall so the reflection conserves energy
                yc[0] = spec.q1_wall_offset + spec.eps_w * yc[2];
                let (n1, n2) = spec.wall_normal();
                let pn = yc[1] * n1 + yc[3] * n2;
                let before = FlowState::from_coords(yc, tc);
                if pn.abs() < GRAZING_MOMENTUM {
                    impacts.push(ImpactEvent {
                        t: tc,
                        state_before: before,
                        state: before,
                        normal_momentum: pn,
                        grazing: true,
                    });
                } else {
                    yc[1] -= 2.0 * pn * n1;
                    yc[3] -= 2.0 * pn * n2;
                    impacts.push(ImpactEvent {
                        t: tc,
                        state_before: before,
                        state: FlowState::from_coords(yc, tc),
                        normal_momentum: pn,
                        grazing: false,
                    });
                }
                y = yc;
                t = tc;
                k1 = None;
                wall_armed = false;
                h = h_next.abs().copysign(dir);
            }
            Some(false) => {
                let tc = sect_t.unwrap();
                let yc = advance_exact(&solver, &step.y0, step.t0, tc)?;
                let (yc, tc) = polish_event(&rhs, yc, tc, sect_fn, sect_slope, 1e-13);
                if sect_slope(&yc) >= 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "section crossing at t = {tc} has dp1/dt >= 0"
                    )));
                }
                return Ok(RunOutcome {
                    state: FlowState::from_coords(yc, tc),
                    impacts,
                    section: Some(FlowState::from_coords(yc, tc)),
                });
            }
            None => {
                y = step.y1;
                t = step.t1();
                k1 = Some(k7);
                h = h_next;
            }
        }
    }
    Ok(RunOutcome {
        state: FlowState::from_coords(y, t),
        impacts,
        section: None,
    })
}

/// Advances the auxiliary smooth flow (no wall) to the absolute time
/// `t_end`; backward integration is allowed.
pub fn integrate_smooth(
    s: &FlowState,
    spec: &SystemSpec,
    t_end: f64,
    tol: f64,
) -> Result<FlowState> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {tol}")));
    }
    let out = run(
        spec,
        s,
        RunOpts {
            t_end,
            tol,
            wall: false,
            stop_at_section: false,
        },
    )?;
    Ok(out.state)
}

/// Advances the wall flow to `t_end`, reflecting elastically at every
/// transversal wall crossing and logging each event. Grazing crossings
/// (|normal momentum| below [`GRAZING_MOMENTUM`]) are continued without
/// reflection and flagged.
pub fn integrate_impact(
    s: &FlowState,
    spec: &SystemSpec,
    t_end: f64,
    tol: f64,
) -> Result<(FlowState, Vec<ImpactEvent>)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {tol}")));
    }
    let out = run(
        spec,
        s,
        RunOpts {
            t_end,
            tol,
            wall: true,
            stop_at_section: false,
        },
    )?;
    Ok((out.state, out.impacts))
}

/// Integrates the wall flow from a section point until the next transversal
/// crossing of p1 = 0 with dp1/dt < 0.
///
/// At most one (non-grazing) impact may occur in between; more signal an
/// integrator or tolerance bug and are reported as an error. `t_max` bounds
/// the search in absolute time units past the starting time.
pub fn return_map(
    s0: &FlowState,
    spec: &SystemSpec,
    tol: f64,
    t_max: f64,
) -> Result<SectionCrossing> {
    let out = run(
        spec,
        s0,
        RunOpts {
            t_end: s0.t + t_max,
            tol,
            wall: true,
            stop_at_section: true,
        },
    )?;
    let section = out.section.ok_or(Error::MaxTimeExceeded { t_max })?;
    let reflections = out.impacts.iter().filter(|e| !e.grazing).count() as u32;
    if reflections > 1 {
        return Err(Error::MultipleImpacts { count: reflections });
    }
    Ok(SectionCrossing {
        state: section,
        impact_flag: reflections == 1,
        grazing_flag: out.impacts.iter().any(|e| e.grazing),
        return_time: section.t - s0.t,
    })
}

/// Builds the section state with the given q2 angle and action: p1 = 0 and
/// q1 on the outer branch (dp1/dt < 0), fixed by energy conservation.
pub fn section_point(spec: &SystemSpec, theta: f64, i_action: f64) -> Result<FlowState> {
    let (q2, p2) = from_action_angle(spec, theta, i_action)?;
    let omega = v2_omega(spec)?;
    let e2 = omega * i_action;
    let target = spec.energy - e2;
    let (_, qmax) = spec.v1.turning_points(target).map_err(|e| {
        Error::InvalidArgument(format!(
            "no q1 turning point at E1 = {target} (I = {i_action}): {e}"
        ))
    })?;
    let f = |q: f64| spec.v1.v(q) + spec.eps_r * spec.coupling.v(q, q2) - target;
    let df = |q: f64| spec.v1.dv(q) + spec.eps_r * spec.coupling.dq1(q, q2);
    // bracket around the unperturbed turning point, then safeguarded Newton
    let scale = 1.0 + qmax.abs();
    let mut lo = qmax;
    let mut hi = qmax;
    let mut d = 1e-3 * scale;
    for _ in 0..60 {
        lo = qmax - d;
        hi = qmax + d;
        if f(lo) < 0.0 && f(hi) > 0.0 {
            break;
        }
        d *= 2.0;
    }
    if !(f(lo) < 0.0 && f(hi) > 0.0) {
        return Err(Error::Bracketing(format!(
            "cannot bracket the section q1 near {qmax} for theta = {theta}, I = {i_action}"
        )));
    }
    let mut q1 = qmax;
    for _ in 0..200 {
        let v = f(q1);
        if v > 0.0 {
            hi = q1;
        } else if v < 0.0 {
            lo = q1;
        } else {
            break;
        }
        let dv = df(q1);
        let newton = if dv != 0.0 { q1 - v / dv } else { f64::NAN };
        q1 = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo).abs() < 1e-15 * scale {
            break;
        }
    }
    if spec.p1_dot(q1, q2) >= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "constructed section point at q1 = {q1} has dp1/dt >= 0"
        )));
    }
    Ok(FlowState::new(q1, 0.0, q2, p2))
}
