//! Fixed points of the truncated tangency map: closed-form branches,
//! stability classification and bifurcation scans.
//!
//! Fixed points sit at zeros phi* of the forcing (so the action is fixed)
//! with the rotation condition Omega + tau*K - alpha*sqrt(-K) = 2*pi*j.
//! Solving for K gives one positive branch per integer j and up to two
//! negative branches from the quadratic in sqrt(-K). For negative shear the
//! two negative branches meet in a saddle-node at K = -alpha^2/4, the
//! non-twist circle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::angle;
use crate::error::{Error, Result};
use crate::map::{self, MapParams, PhasePoint, Shear};

const TWO_PI: f64 = 2.0 * PI;

/// Which solution family a fixed point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// K* > 0, the non-impacting branch.
    Pos,
    /// Smaller-|K| negative root of the quadratic in sqrt(-K).
    NegMinus,
    /// Larger-|K| negative root; exists only for negative shear.
    NegPlus,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Pos => "POS",
            Branch::NegMinus => "NEG_MINUS",
            Branch::NegPlus => "NEG_PLUS",
        }
    }
}

/// Linear stability class from the trace of the one-step Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Center,
    Saddle,
    /// Saddle with negative multipliers (trace < -2, past period doubling).
    SaddleNegMultipliers,
    Parabolic,
}

impl Stability {
    pub fn label(self) -> &'static str {
        match self {
            Stability::Center => "CENTER",
            Stability::Saddle => "SADDLE",
            Stability::SaddleNegMultipliers => "SADDLE_NEG_MULTIPLIERS",
            Stability::Parabolic => "PARABOLIC",
        }
    }
}

/// One fixed point with its branch data and classification.
///
/// `trace` and `stability` are absent for points flagged `on_singularity`,
/// where the Jacobian (and hence the classification) is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointRecord {
    pub phi_star: f64,
    pub k_star: f64,
    pub branch: Branch,
    pub j: i64,
    pub trace: Option<f64>,
    pub stability: Option<Stability>,
    pub on_singularity: bool,
}

/// Tolerance below which |trace| - 2 counts as parabolic.
pub const PARABOLIC_TOL: f64 = 1e-12;

/// Positive branch K* = (2*pi*j - Omega)/tau.
///
/// Returns the valid positive value, or K* = 0 flagged at the exact branch
/// root Omega = 2*pi*j; `None` otherwise. The second tuple entry is the
/// on-singularity flag.
pub fn branch_positive(j: i64, omega: f64, tau: Shear) -> Option<(f64, bool)> {
    let omega_c = TWO_PI * j as f64;
    if omega == omega_c {
        return Some((0.0, true));
    }
    let k = (omega_c - omega) / tau.sign();
    (k > 0.0).then_some((k, false))
}

/// Valid negative-K fixed points for branch index j.
///
/// For positive shear only the minus root exists and only past the branch
/// root (Omega > 2*pi*j). For negative shear the minus root lives on
/// [2*pi*j, Omega_sn] and the plus root for all Omega <= Omega_sn, the two
/// coinciding at K = -alpha^2/4 when Omega = Omega_sn = 2*pi*j + alpha^2/4.
/// Only strictly negative K* values are returned; the K* = 0 endpoint is
/// owned by `branch_positive`.
pub fn branch_negative(j: i64, omega: f64, tau: Shear, alpha: f64) -> Vec<(f64, Branch)> {
    debug_assert!(alpha > 0.0);
    let delta = omega - TWO_PI * j as f64;
    let mut out = Vec::new();
    match tau {
        Shear::Positive => {
            // sqrt(-K) = (alpha/2)(-1 + sqrt(1 + 4 delta / alpha^2))
            if delta > 0.0 {
                let s = 0.5 * alpha * ((1.0 + 4.0 * delta / (alpha * alpha)).sqrt() - 1.0);
                out.push((-s * s, Branch::NegMinus));
            }
        }
        Shear::Negative => {
            let disc = 1.0 - 4.0 * delta / (alpha * alpha);
            if disc >= 0.0 {
                let root = disc.sqrt();
                if delta > 0.0 {
                    let s = 0.5 * alpha * (1.0 - root);
                    out.push((-s * s, Branch::NegMinus));
                }
                let s = 0.5 * alpha * (1.0 + root);
                out.push((-s * s, Branch::NegPlus));
            }
        }
    }
    out
}

/// Saddle-node frequency for negative shear: Omega_sn = 2*pi*j + alpha^2/4.
pub fn omega_saddle_node(j: i64, alpha: f64) -> f64 {
    TWO_PI * j as f64 + 0.25 * alpha * alpha
}

/// Analytic period-doubling threshold of the NEG_MINUS branch emanating
/// from 2*pi*j, for a forcing zero with f'(phi*) < 0. The shear sign picks
/// the upper (+1) or lower (-1) variant.
pub fn period_doubling_omega(j: i64, phi_star: f64, m: &MapParams) -> Result<f64> {
    let fp = m.forcing.deriv(phi_star);
    if fp >= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "period doubling requires f'(phi*) < 0, got f'({phi_star}) = {fp}"
        )));
    }
    let a = m.epsilon * fp.abs();
    let s = m.tau.sign();
    let delta = (m.alpha * m.alpha / 8.0) * a * (1.0 - s * a / 8.0)
        / ((1.0 - s * a / 4.0) * (1.0 - s * a / 4.0));
    Ok(TWO_PI * j as f64 + delta)
}

/// Fills trace and stability of a record from the closed-form trace
/// 2 + eps*f'(phi*)*(tau + alpha/(2 sqrt(-K*)) [K*<0]).
///
/// Errors for K* = 0, where stability is undefined; such records stay
/// flagged instead.
pub fn classify(mut rec: FixedPointRecord, m: &MapParams) -> Result<FixedPointRecord> {
    if rec.k_star == 0.0 {
        return Err(Error::SingularityLine);
    }
    let twist = map::twist_derivative(rec.k_star, m.alpha, m.tau);
    let trace = 2.0 + m.epsilon * m.forcing.deriv(rec.phi_star) * twist;
    rec.trace = Some(trace);
    rec.stability = Some(if (trace.abs() - 2.0).abs() < PARABOLIC_TOL {
        Stability::Parabolic
    } else if trace > 2.0 {
        Stability::Saddle
    } else if trace < -2.0 {
        Stability::SaddleNegMultipliers
    } else {
        Stability::Center
    });
    Ok(rec)
}

/// All fixed points with branch index j within `j_window` of
/// floor(Omega/2pi), classified where off the singularity line.
pub fn enumerate_fixed_points(
    omega: f64,
    m: &MapParams,
    j_window: i64,
) -> Vec<FixedPointRecord> {
    debug_assert!(j_window >= 1);
    let j0 = (omega / TWO_PI).floor() as i64;
    let zeros = m.forcing.zeros();
    let mut records = Vec::new();
    for j in (j0 - j_window)..=(j0 + j_window) {
        for &phi_star in &zeros {
            if let Some((k, on_sing)) = branch_positive(j, omega, m.tau) {
                records.push(make_record(phi_star, k, Branch::Pos, j, on_sing, m));
            }
            for (k, branch) in branch_negative(j, omega, m.tau, m.alpha) {
                records.push(make_record(phi_star, k, branch, j, false, m));
            }
        }
    }
    records
}

fn make_record(
    phi_star: f64,
    k_star: f64,
    branch: Branch,
    j: i64,
    on_singularity: bool,
    m: &MapParams,
) -> FixedPointRecord {
    let rec = FixedPointRecord {
        phi_star,
        k_star,
        branch,
        j,
        trace: None,
        stability: None,
        on_singularity,
    };
    if on_singularity {
        rec
    } else {
        classify(rec, m).expect("k_star != 0 off the singularity line")
    }
}

/// Residual of the fixed-point conditions under one map step: the angular
/// distance of the returned phi plus |K_bar - K*|.
pub fn map_residual(rec: &FixedPointRecord, m: &MapParams) -> f64 {
    let p = map::ttm_step(PhasePoint::new(rec.phi_star, rec.k_star), m);
    angle::dist(p.phi, rec.phi_star) + (p.k - rec.k_star).abs()
}

/// Bifurcation thresholds present in a scanned Omega range.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Thresholds {
    pub omega_c: Vec<f64>,
    pub omega_sn: Vec<f64>,
    pub omega_pd_plus: Vec<f64>,
    pub omega_pd_minus: Vec<f64>,
}

/// Fixed-point records over a grid of Omega values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BifurcationScan {
    pub omega_grid: Vec<f64>,
    pub records: Vec<Vec<FixedPointRecord>>,
    pub thresholds: Thresholds,
}

/// Scans fixed points over [omega_min, omega_max] with the given step.
///
/// The window of branch indices is widened so every branch whose K value is
/// visible near the scanned range is included (the negative-shear plus
/// branch reaches back alpha^2/4 past its root).
pub fn bifurcation_scan(
    omega_min: f64,
    omega_max: f64,
    step: f64,
    m: &MapParams,
) -> Result<BifurcationScan> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scan step must be > 0, got {step}"
        )));
    }
    let mut omega_grid = Vec::new();
    let mut w = omega_min;
    while w <= omega_max + 1e-12 * step {
        omega_grid.push(w);
        w += step;
    }
    let j_window = 1 + ((omega_max - omega_min + m.alpha * m.alpha / 4.0) / TWO_PI).ceil() as i64;
    let records: Vec<Vec<FixedPointRecord>> = omega_grid
        .par_iter()
        .map(|&omega| enumerate_fixed_points(omega, m, j_window))
        .collect();

    let j0_min = (omega_min / TWO_PI).floor() as i64 - j_window;
    let j0_max = (omega_max / TWO_PI).floor() as i64 + j_window;
    let in_range = |x: f64| x >= omega_min && x <= omega_max;
    let mut thresholds = Thresholds::default();
    let pd_zeros: Vec<f64> = m
        .forcing
        .zeros()
        .into_iter()
        .filter(|&z| m.forcing.deriv(z) < 0.0)
        .collect();
    for j in j0_min..=j0_max {
        let oc = TWO_PI * j as f64;
        if in_range(oc) {
            thresholds.omega_c.push(oc);
        }
        if m.tau == Shear::Negative && in_range(omega_saddle_node(j, m.alpha)) {
            thresholds.omega_sn.push(omega_saddle_node(j, m.alpha));
        }
        for &z in &pd_zeros {
            if let Ok(opd) = period_doubling_omega(j, z, m) {
                if in_range(opd) {
                    match m.tau {
                        Shear::Positive => thresholds.omega_pd_plus.push(opd),
                        Shear::Negative => thresholds.omega_pd_minus.push(opd),
                    }
                }
            }
        }
    }
    Ok(BifurcationScan {
        omega_grid,
        records,
        thresholds,
    })
}

impl BifurcationScan {
    /// CSV body with columns omega, j, branch, phi_star, K_star, trace,
    /// stability. Trace and stability are empty for on-singularity records.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,j,branch,phi_star,K_star,trace,stability\n");
        for (omega, recs) in self.omega_grid.iter().zip(&self.records) {
            for r in recs {
                let trace = r.trace.map(|t| t.to_string()).unwrap_or_default();
                let stab = r.stability.map(|s| s.label().to_string()).unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    omega,
                    r.j,
                    r.branch.label(),
                    r.phi_star,
                    r.k_star,
                    trace,
                    stab
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::ttm_jacobian;

    fn params(epsilon: f64, alpha: f64, omega: f64, tau: Shear) -> MapParams {
        MapParams::new(epsilon, alpha, omega, tau)
    }

    #[test]
    fn positive_branch_values() {
        // j=1, Omega=pi, tau=1 -> K* = pi
        let (k, sing) = branch_positive(1, PI, Shear::Positive).unwrap();
        assert!((k - PI).abs() < 1e-15 && !sing);
        // j=0, Omega=0 -> K*=0 on singularity for both shears
        for tau in [Shear::Positive, Shear::Negative] {
            let (k, sing) = branch_positive(0, 0.0, tau).unwrap();
            assert_eq!(k, 0.0);
            assert!(sing);
        }
        // j=1, Omega=2pi+0.005, tau=-1 -> K* = 0.005
        let (k, _) = branch_positive(1, TWO_PI + 0.005, Shear::Negative).unwrap();
        assert!((k - 0.005).abs() < 1e-12);
        // invalid side
        assert!(branch_positive(1, TWO_PI + 0.005, Shear::Positive).is_none());
    }

    #[test]
    fn negative_branch_positive_shear() {
        // j=0, Omega=0.5, alpha=1, tau=1: sqrt(-K*) = (-1+sqrt(3))/2
        let v = branch_negative(0, 0.5, Shear::Positive, 1.0);
        assert_eq!(v.len(), 1);
        let (k, b) = v[0];
        assert_eq!(b, Branch::NegMinus);
        let s = 0.5 * (3.0f64.sqrt() - 1.0);
        assert!((k + s * s).abs() < 1e-15);
        assert!((k + 0.133_974_596_215_561_4).abs() < 1e-12);
        // the map fixes it
        let m = params(0.3, 1.0, 0.5, Shear::Positive);
        let rec = FixedPointRecord {
            phi_star: 0.0,
            k_star: k,
            branch: b,
            j: 0,
            trace: None,
            stability: None,
            on_singularity: false,
        };
        assert!(map_residual(&rec, &m) < 1e-12);
    }

    #[test]
    fn saddle_node_coincidence() {
        // j=0, Omega = alpha^2/4, tau=-1: both roots at -alpha^2/4
        let alpha = 1.3;
        let v = branch_negative(0, alpha * alpha / 4.0, Shear::Negative, alpha);
        assert_eq!(v.len(), 2);
        let knt = -alpha * alpha / 4.0;
        for (k, _) in &v {
            assert!((k - knt).abs() < 1e-12);
        }
        // both classify parabolic there
        let m = params(0.3, alpha, alpha * alpha / 4.0, Shear::Negative);
        for (k, b) in v {
            let rec = make_record(PI, k, b, 0, false, &m);
            assert_eq!(rec.stability, Some(Stability::Parabolic));
        }
    }

    #[test]
    fn negative_shear_resonance_branches() {
        // Omega = 2pi - 0.005 with j = 1 (delta = -0.005), tau=-1, alpha=1:
        // only NEG_PLUS survives, K = -(1/4)(1 + sqrt(1 + 0.02))^2, the
        // resonance near K = -1.
        let v = branch_negative(1, TWO_PI - 0.005, Shear::Negative, 1.0);
        assert_eq!(v.len(), 1);
        let (k, b) = v[0];
        assert_eq!(b, Branch::NegPlus);
        let expect = -0.25 * (1.0 + (1.0f64 + 0.02).sqrt()).powi(2);
        assert!((k - expect).abs() < 1e-12);
        assert!((k + 1.01).abs() < 1e-2);

        // just above the resonance (delta = +0.005) the minus root appears
        // near -delta^2/alpha^2 alongside the distant plus root
        let v = branch_negative(1, TWO_PI + 0.005, Shear::Negative, 1.0);
        assert_eq!(v.len(), 2);
        let km = v.iter().find(|(_, b)| *b == Branch::NegMinus).unwrap().0;
        assert!((km + 0.005f64.powi(2)).abs() < 1e-6);
    }

    #[test]
    fn classify_examples() {
        // f=sin, phi*=pi (f'=-1), tau=1, K*>0, eps=0.3 -> trace 1.7 center
        let m = params(0.3, 1.0, 1.0, Shear::Positive);
        let rec = make_record(PI, 0.5, Branch::Pos, 0, false, &m);
        assert!((rec.trace.unwrap() - 1.7).abs() < 1e-12);
        assert_eq!(rec.stability, Some(Stability::Center));
        // phi*=0 (f'=+1), tau=1, K*>0 -> saddle
        let rec = make_record(0.0, 0.5, Branch::Pos, 0, false, &m);
        assert!(rec.trace.unwrap() > 2.0);
        assert_eq!(rec.stability, Some(Stability::Saddle));
        // NEG_MINUS with f'<0 just past the branch root -> trace < -2
        let m = params(0.3, 1.0, 1e-4, Shear::Positive);
        let (k, b) = branch_negative(0, 1e-4, Shear::Positive, 1.0)[0];
        let rec = make_record(PI, k, b, 0, false, &m);
        assert!(rec.trace.unwrap() < -2.0);
        assert_eq!(rec.stability, Some(Stability::SaddleNegMultipliers));
    }

    #[test]
    fn classify_rejects_singularity() {
        let m = params(0.3, 1.0, 0.0, Shear::Positive);
        let rec = FixedPointRecord {
            phi_star: 0.0,
            k_star: 0.0,
            branch: Branch::Pos,
            j: 0,
            trace: None,
            stability: None,
            on_singularity: true,
        };
        assert!(matches!(classify(rec, &m), Err(Error::SingularityLine)));
    }

    #[test]
    fn period_doubling_formula_and_bisection_agree() {
        // Bisection on trace(NEG_MINUS(Omega)) = -2 must match the closed
        // form to 1e-9 (both shears).
        for tau in [Shear::Positive, Shear::Negative] {
            let m = params(0.3, 1.0, 0.0, tau);
            let opd = period_doubling_omega(0, PI, &m).unwrap();
            let trace_at = |omega: f64| {
                let (k, _) = branch_negative(0, omega, tau, 1.0)
                    .into_iter()
                    .find(|(_, b)| *b == Branch::NegMinus)
                    .unwrap();
                let mm = params(0.3, 1.0, omega, tau);
                let rec = FixedPointRecord {
                    phi_star: PI,
                    k_star: k,
                    branch: Branch::NegMinus,
                    j: 0,
                    trace: None,
                    stability: None,
                    on_singularity: false,
                };
                classify(rec, &mm).unwrap().trace.unwrap() + 2.0
            };
            let (mut lo, mut hi) = (1e-9, 0.2);
            assert!(trace_at(lo) < 0.0 && trace_at(hi) > 0.0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if trace_at(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let found = 0.5 * (lo + hi);
            assert!(
                (found - opd).abs() < 1e-9,
                "tau {:?}: bisected {found} vs formula {opd}",
                tau
            );
        }
        // frozen value from the bisection oracle, tau = +1:
        // delta = s*alpha + s^2 with s = alpha*eps|f'| / (2(4 - eps|f'|))
        let s = 0.3 / (2.0 * (4.0 - 0.3));
        let delta_oracle = s + s * s;
        let m = params(0.3, 1.0, 0.0, Shear::Positive);
        let opd = period_doubling_omega(0, PI, &m).unwrap();
        assert!((opd - delta_oracle).abs() < 1e-14);
        // = 231/5476, frozen from the trace-condition oracle
        assert!((delta_oracle - 0.042_184_075_967_859_7).abs() < 1e-14);
    }

    #[test]
    fn period_doubling_rejects_wrong_slope() {
        let m = params(0.3, 1.0, 0.0, Shear::Positive);
        assert!(period_doubling_omega(0, 0.0, &m).is_err());
    }

    #[test]
    fn enumerate_positive_shear_counts() {
        // tau=1: exactly one K* per (j, phi*) off the branch roots.
        let m = params(0.3, 1.0, PI, Shear::Positive);
        let recs = enumerate_fixed_points(PI, &m, 2);
        let zeros = m.forcing.zeros();
        for j in -2..=2 {
            for &z in &zeros {
                let count = recs
                    .iter()
                    .filter(|r| r.j == j && (r.phi_star - z).abs() < 1e-12)
                    .count();
                assert_eq!(count, 1, "j={j}, phi*={z}");
            }
        }
        for r in &recs {
            assert!(map_residual(r, &m) < 1e-12);
        }
    }

    #[test]
    fn enumerate_strong_resonance_four_small_points() {
        // tau=-1, alpha=1, Omega=2pi+0.005: 4 fixed points with |K| < 0.01.
        let m = params(0.01, 1.0, TWO_PI + 0.005, Shear::Negative);
        let recs = enumerate_fixed_points(TWO_PI + 0.005, &m, 2);
        let small: Vec<_> = recs.iter().filter(|r| r.k_star.abs() < 0.01).collect();
        assert_eq!(small.len(), 4);
        for r in &recs {
            assert!(map_residual(r, &m) < 1e-12, "residual {}", map_residual(r, &m));
        }
    }

    #[test]
    fn analytic_trace_matches_jacobian() {
        let m = params(0.3, 1.4, 0.9, Shear::Negative);
        for r in enumerate_fixed_points(0.9, &m, 2) {
            if r.on_singularity {
                continue;
            }
            let j = ttm_jacobian(PhasePoint::new(r.phi_star, r.k_star), &m).unwrap();
            assert!((j.trace() - r.trace.unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn scan_monotone_branches_positive_shear() {
        let m = params(0.3, 1.0, 0.0, Shear::Positive);
        let scan = bifurcation_scan(0.1, TWO_PI - 0.1, 0.05, &m).unwrap();
        // along each (j, branch, phi*), K decreases in Omega
        let mut last: std::collections::HashMap<(i64, &str, u64), f64> = Default::default();
        for recs in &scan.records {
            for r in recs {
                let key = (r.j, r.branch.label(), r.phi_star.to_bits());
                if let Some(prev) = last.insert(key, r.k_star) {
                    assert!(
                        r.k_star <= prev + 1e-12,
                        "branch not monotone: {prev} -> {}",
                        r.k_star
                    );
                }
            }
        }
    }

    #[test]
    fn scan_empty_range() {
        let m = params(0.3, 1.0, 0.0, Shear::Positive);
        let scan = bifurcation_scan(1.0, 0.5, 0.1, &m).unwrap();
        assert!(scan.omega_grid.is_empty());
        assert!(scan.records.is_empty());
    }

    #[test]
    fn branch_continuity_under_refinement() {
        // max jump along a branch shrinks with the grid step
        let m = params(0.3, 1.0, 0.0, Shear::Negative);
        let jump = |step: f64| {
            let scan = bifurcation_scan(0.01, 0.24, step, &m).unwrap();
            let mut max_jump = 0.0f64;
            let mut prev: Option<f64> = None;
            for recs in &scan.records {
                let k = recs
                    .iter()
                    .find(|r| r.j == 0 && r.branch == Branch::NegMinus && r.phi_star == 0.0)
                    .map(|r| r.k_star);
                if let (Some(p), Some(k)) = (prev, k) {
                    max_jump = max_jump.max((k - p).abs());
                }
                prev = k;
            }
            max_jump
        };
        assert!(jump(0.001) < 0.5 * jump(0.01));
    }
}
