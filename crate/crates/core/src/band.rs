//! Long-orbit statistics of the tangency band.
//!
//! Tangent initial conditions (K0 = 0) are iterated for many steps; the
//! band's upper and lower maximal widths are the extreme K values reached
//! by the ensemble. Per-trajectory widths are measured through narrow
//! angular windows: a window keeps the running max and min of K over the
//! iterates whose angle falls inside it, and the trajectory width at
//! iterate n is the largest per-window spread so far. The normalized
//! distance of a trajectory from the band boundary uses the same windows
//! against precomputed per-window band extrema.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::angle;
use crate::error::{Error, Result};
use crate::map::{ttm_orbit, ttm_step, MapParams, PhasePoint};

/// Running per-window extrema of K over the iterates whose angle lands in
/// the window. Membership uses the canonical chart [-pi, pi) with
/// wraparound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowStats {
    centers: Vec<f64>,
    half_width: f64,
    max_k: Vec<f64>,
    min_k: Vec<f64>,
    hits: Vec<u64>,
}

impl WindowStats {
    pub fn new(centers: Vec<f64>, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "window half-width must be > 0, got {half_width}"
            )));
        }
        let n = centers.len();
        Ok(WindowStats {
            centers: centers.into_iter().map(angle::reduce).collect(),
            half_width,
            max_k: vec![f64::NEG_INFINITY; n],
            min_k: vec![f64::INFINITY; n],
            hits: vec![0; n],
        })
    }

    /// Windows at uniformly random phases from a seeded generator.
    pub fn random(n_windows: usize, half_width: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = (0..n_windows)
            .map(|_| rng.gen_range(-PI..PI))
            .collect();
        Self::new(centers, half_width)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn hits(&self) -> &[u64] {
        &self.hits
    }

    /// Feed one iterate into every window containing its angle.
    #[inline]
    pub fn observe(&mut self, p: PhasePoint) {
        for i in 0..self.centers.len() {
            if angle::dist(p.phi, self.centers[i]) < self.half_width {
                self.hits[i] += 1;
                if p.k > self.max_k[i] {
                    self.max_k[i] = p.k;
                }
                if p.k < self.min_k[i] {
                    self.min_k[i] = p.k;
                }
            }
        }
    }

    /// Per-window (min, max) running extrema; None for windows with no hits.
    pub fn extrema(&self, i: usize) -> Option<(f64, f64)> {
        (self.hits[i] > 0).then(|| (self.min_k[i], self.max_k[i]))
    }

    /// Largest per-window spread over windows with at least one hit.
    pub fn width(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.centers.len() {
            if let Some((lo, hi)) = self.extrema(i) {
                let w = hi - lo;
                best = Some(best.map_or(w, |b: f64| b.max(w)));
            }
        }
        best
    }

    /// Merge another tracker with identical windows (associative, used for
    /// ensemble reductions).
    pub fn merge(&mut self, other: &WindowStats) {
        debug_assert_eq!(self.centers.len(), other.centers.len());
        for i in 0..self.centers.len() {
            self.hits[i] += other.hits[i];
            self.max_k[i] = self.max_k[i].max(other.max_k[i]);
            self.min_k[i] = self.min_k[i].min(other.min_k[i]);
        }
    }
}

/// Tangent initial conditions: K0 = 0, angles evenly spaced on [-pi, pi).
pub fn tangent_initial_conditions(n_ic: usize) -> Vec<PhasePoint> {
    (0..n_ic)
        .map(|i| PhasePoint::new(-PI + 2.0 * PI * i as f64 / n_ic as f64, 0.0))
        .collect()
}

/// Upper and lower maximal band widths (W+, W-): the extreme K values over
/// `n_ic` tangent initial conditions iterated `n_iter` times each. The
/// initial K0 = 0 is included, so both widths are nonnegative.
pub fn band_widths(m: &MapParams, n_ic: usize, n_iter: u64) -> (f64, f64) {
    let ics = tangent_initial_conditions(n_ic);
    let (max_k, min_k) = ics
        .par_iter()
        .map(|&p0| {
            let mut max_k = 0.0f64;
            let mut min_k = 0.0f64;
            ttm_orbit(p0, m, n_iter, |_, p| {
                if p.k > max_k {
                    max_k = p.k;
                }
                if p.k < min_k {
                    min_k = p.k;
                }
            });
            (max_k, min_k)
        })
        .reduce(|| (0.0f64, 0.0f64), |a, b| (a.0.max(b.0), a.1.min(b.1)));
    (max_k, -min_k)
}

/// Power-law fit W = prefactor * epsilon^exponent by least squares on
/// log-log data.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub max_residual: f64,
}

/// Least-squares fit of log W against log epsilon.
///
/// Requires at least 4 samples spanning at least 1.5 decades with all
/// widths positive.
pub fn fit_scaling(samples: &[(f64, f64)]) -> Result<ScalingFit> {
    if samples.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "scaling fit needs >= 4 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|&(e, w)| !(e > 0.0) || !(w > 0.0)) {
        return Err(Error::InvalidArgument(
            "scaling fit requires positive epsilon and W".into(),
        ));
    }
    let (emin, emax) = samples
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(e, _)| {
            (lo.min(e), hi.max(e))
        });
    if emax / emin < 10f64.powf(1.5) - 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "epsilon grid spans {:.3} decades, need >= 1.5",
            (emax / emin).log10()
        )));
    }
    let n = samples.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(e, w) in samples {
        let (x, y) = (e.ln(), w.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy * sxx - sx * sxy) / denom;
    let max_residual = samples
        .iter()
        .map(|&(e, w)| (w.ln() - slope * e.ln() - intercept).abs())
        .fold(0.0f64, f64::max);
    Ok(ScalingFit {
        exponent: slope,
        prefactor: intercept.exp(),
        max_residual,
    })
}

/// Full fit plus a trimmed refit that drops the largest-epsilon samples
/// while the residual indicates departure from a clean power law
/// (resonance overlap at finite epsilon). The trimmed fit is present only
/// when trimming happened and a valid fit remains.
pub fn fit_scaling_trimmed(
    samples: &[(f64, f64)],
    residual_threshold: f64,
) -> Result<(ScalingFit, Option<ScalingFit>)> {
    let full = fit_scaling(samples)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut trimmed = None;
    let mut end = sorted.len();
    let mut current = full;
    while current.max_residual > residual_threshold && end > 4 {
        end -= 1;
        match fit_scaling(&sorted[..end]) {
            Ok(fit) => {
                current = fit;
                trimmed = Some(fit);
            }
            Err(_) => break,
        }
    }
    Ok((full, trimmed))
}

/// Checkpoint schedule on a logarithmic grid (powers of 10^(1/4)), ending
/// exactly at n.
pub fn log_checkpoints(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let v = 10f64.powf(k as f64 / 4.0).round() as u64;
        if v >= n {
            break;
        }
        if out.last() != Some(&v) {
            out.push(v);
        }
        k += 1;
    }
    if out.last() != Some(&n) && n > 0 {
        out.push(n);
    }
    out
}

/// Trajectory width at a checkpoint: the largest per-window spread, or
/// None when no window has been hit yet.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WidthSample {
    pub n: u64,
    pub width: Option<f64>,
}

/// Iterates one orbit, feeding the windows, and records the trajectory
/// width at each checkpoint. Checkpoints must be sorted and <= n.
pub fn trajectory_width(
    p0: PhasePoint,
    m: &MapParams,
    n: u64,
    windows: &mut WindowStats,
    checkpoints: &[u64],
) -> Vec<WidthSample> {
    debug_assert!(checkpoints.windows(2).all(|w| w[0] <= w[1]));
    debug_assert!(checkpoints.last().map_or(true, |&c| c <= n));
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().copied().peekable();
    let mut p = p0;
    for i in 1..=n {
        p = ttm_step(p, m);
        windows.observe(p);
        while next.peek() == Some(&i) {
            next.next();
            out.push(WidthSample {
                n: i,
                width: windows.width(),
            });
        }
    }
    while let Some(c) = next.next() {
        // checkpoints at 0 or n=0 edge: report current state
        out.push(WidthSample {
            n: c,
            width: windows.width(),
        });
    }
    out
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DistanceSample {
    pub n: u64,
    pub distance: Option<f64>,
}

/// Normalized distance of the orbit's running extrema from the band
/// boundary, per checkpoint.
///
/// `band` holds the per-window (K_min, K_max) extrema of the band from a
/// long ensemble run over the same windows. The distance at iterate n is
/// the larger of the two normalized gaps: min over hit windows of
/// (K_max - running max)/(K_max - K_min) and min over hit windows of
/// (running min - K_min)/(K_max - K_min). A connecting orbit drives it
/// to 0; an orbit pinned to the band midline sits near 1/2.
pub fn boundary_distance(
    p0: PhasePoint,
    m: &MapParams,
    n: u64,
    windows: &mut WindowStats,
    band: &[(f64, f64)],
    checkpoints: &[u64],
) -> Result<Vec<DistanceSample>> {
    if band.len() != windows.len() {
        return Err(Error::InvalidArgument(format!(
            "band has {} windows, tracker has {}",
            band.len(),
            windows.len()
        )));
    }
    for (i, &(lo, hi)) in band.iter().enumerate() {
        if hi == lo {
            return Err(Error::UndefinedWindow { index: i });
        }
    }
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().copied().peekable();
    let mut p = p0;
    for i in 1..=n {
        p = ttm_step(p, m);
        windows.observe(p);
        while next.peek() == Some(&i) {
            next.next();
            out.push(DistanceSample {
                n: i,
                distance: distance_from(windows, band),
            });
        }
    }
    while let Some(c) = next.next() {
        out.push(DistanceSample {
            n: c,
            distance: distance_from(windows, band),
        });
    }
    Ok(out)
}

fn distance_from(windows: &WindowStats, band: &[(f64, f64)]) -> Option<f64> {
    let mut top: Option<f64> = None;
    let mut bottom: Option<f64> = None;
    for i in 0..windows.len() {
        if let Some((lo, hi)) = windows.extrema(i) {
            let (blo, bhi) = band[i];
            let span = bhi - blo;
            let t = (bhi - hi) / span;
            let b = (lo - blo) / span;
            top = Some(top.map_or(t, |x: f64| x.min(t)));
            bottom = Some(bottom.map_or(b, |x: f64| x.min(b)));
        }
    }
    match (top, bottom) {
        (Some(t), Some(b)) => Some(t.max(b)),
        _ => None,
    }
}

/// Growth of trajectory widths toward the band width, with the log-log
/// slope of the normalized curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectionReport {
    pub checkpoints: Vec<u64>,
    /// max over initial conditions of W(n) at each checkpoint.
    pub max_width: Vec<f64>,
    /// per-initial-condition width curves, indexed [ic][checkpoint].
    pub widths: Vec<Vec<f64>>,
    /// (1/(alpha^2 eps)) * max_width / band width.
    pub normalized: Vec<f64>,
    /// min over initial conditions of the boundary distance d(n).
    pub min_distance: Vec<f64>,
    /// log10-log10 slope of the normalized width over the fitted range.
    pub slope: f64,
    /// Band width estimated from the ensemble at the final iterate.
    pub band_width: f64,
    pub seed: u64,
    pub n_windows: usize,
}

/// Ensemble width-growth experiment with windows of half-width eps/2 at
/// seeded random phases.
///
/// Iterates `n_ic` tangent initial conditions for `n_total` steps,
/// recording per-window running extrema at logarithmic checkpoints. The
/// band width is the largest ensemble per-window spread at the end; the
/// normalized growth curve is (1/(alpha^2 eps)) max_ic W(n)/W_band, and
/// the slope is fitted on checkpoints in [n_fit_min, n_total].
pub fn connection_metrics(
    m: &MapParams,
    n_ic: usize,
    n_total: u64,
    seed: u64,
    n_windows: usize,
    n_fit_min: u64,
) -> Result<ConnectionReport> {
    if n_ic == 0 || n_total == 0 {
        return Err(Error::InvalidArgument(
            "connection metrics need n_ic >= 1 and n_total >= 1".into(),
        ));
    }
    let half_width = 0.5 * m.epsilon;
    let windows = if m.epsilon > 0.0 {
        WindowStats::random(n_windows, half_width, seed)?
    } else {
        // degenerate unperturbed case: any window width works, K stays 0
        WindowStats::random(n_windows, 1e-3, seed)?
    };
    let checkpoints = log_checkpoints(n_total);
    let ics = tangent_initial_conditions(n_ic);

    // Per IC: snapshot per-window extrema at every checkpoint.
    struct IcRun {
        snapshots: Vec<(Vec<f64>, Vec<f64>, Vec<u64>)>, // (min_k, max_k, hits)
        final_windows: WindowStats,
    }
    let runs: Vec<IcRun> = ics
        .par_iter()
        .map(|&p0| {
            let mut w = windows.clone();
            let mut snapshots = Vec::with_capacity(checkpoints.len());
            let mut next = checkpoints.iter().copied().peekable();
            let mut p = p0;
            for i in 1..=n_total {
                p = ttm_step(p, m);
                w.observe(p);
                while next.peek() == Some(&i) {
                    next.next();
                    snapshots.push((w.min_k.clone(), w.max_k.clone(), w.hits.clone()));
                }
            }
            IcRun {
                snapshots,
                final_windows: w,
            }
        })
        .collect();

    // Ensemble band extrema at the final iterate.
    let mut ensemble = windows.clone();
    for r in &runs {
        ensemble.merge(&r.final_windows);
    }
    let band_width = ensemble.width().unwrap_or(0.0);
    let band: Vec<(f64, f64)> = (0..ensemble.len())
        .map(|i| ensemble.extrema(i).unwrap_or((0.0, 0.0)))
        .collect();

    let width_of = |mins: &[f64], maxs: &[f64], hits: &[u64]| -> f64 {
        let mut best = 0.0f64;
        for i in 0..hits.len() {
            if hits[i] > 0 {
                best = best.max(maxs[i] - mins[i]);
            }
        }
        best
    };
    let dist_of = |mins: &[f64], maxs: &[f64], hits: &[u64]| -> Option<f64> {
        let mut top: Option<f64> = None;
        let mut bottom: Option<f64> = None;
        for i in 0..hits.len() {
            if hits[i] > 0 {
                let (blo, bhi) = band[i];
                let span = bhi - blo;
                if span <= 0.0 {
                    continue;
                }
                let t = (bhi - maxs[i]) / span;
                let b = (mins[i] - blo) / span;
                top = Some(top.map_or(t, |x: f64| x.min(t)));
                bottom = Some(bottom.map_or(b, |x: f64| x.min(b)));
            }
        }
        match (top, bottom) {
            (Some(t), Some(b)) => Some(t.max(b)),
            _ => None,
        }
    };

    let mut widths = vec![vec![0.0f64; checkpoints.len()]; n_ic];
    let mut max_width = vec![0.0f64; checkpoints.len()];
    let mut min_distance = vec![f64::INFINITY; checkpoints.len()];
    for (ic, r) in runs.iter().enumerate() {
        for (ci, (mins, maxs, hits)) in r.snapshots.iter().enumerate() {
            let w = width_of(mins, maxs, hits);
            widths[ic][ci] = w;
            max_width[ci] = max_width[ci].max(w);
            if let Some(d) = dist_of(mins, maxs, hits) {
                min_distance[ci] = min_distance[ci].min(d);
            }
        }
    }
    for d in &mut min_distance {
        if !d.is_finite() {
            *d = f64::NAN;
        }
    }

    let norm_factor = if m.epsilon > 0.0 && band_width > 0.0 {
        1.0 / (m.alpha * m.alpha * m.epsilon * band_width)
    } else {
        0.0
    };
    let normalized: Vec<f64> = max_width.iter().map(|w| w * norm_factor).collect();

    // log-log slope over checkpoints in [n_fit_min, n_total]
    let pts: Vec<(f64, f64)> = checkpoints
        .iter()
        .zip(&normalized)
        .filter(|&(&n, &v)| n >= n_fit_min && v > 0.0)
        .map(|(&n, &v)| ((n as f64).log10(), v.log10()))
        .collect();
    let slope = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(x, y) in &pts {
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    } else {
        f64::NAN
    };

    Ok(ConnectionReport {
        checkpoints,
        max_width,
        widths,
        normalized,
        min_distance,
        slope,
        band_width,
        seed,
        n_windows,
    })
}

impl ConnectionReport {
    /// CSV body: N, per-IC widths, normalized width, min distance.
    pub fn to_csv(&self) -> String {
        let n_ic = self.widths.len();
        let mut header = String::from("N");
        for i in 0..n_ic {
            header.push_str(&format!(",W_ic{i}"));
        }
        header.push_str(",normalized_width,min_distance\n");
        let mut out = header;
        for (ci, &n) in self.checkpoints.iter().enumerate() {
            out.push_str(&n.to_string());
            for ic in 0..n_ic {
                out.push_str(&format!(",{}", self.widths[ic][ci]));
            }
            let d = self.min_distance[ci];
            out.push_str(&format!(
                ",{},{}\n",
                self.normalized[ci],
                if d.is_nan() { String::new() } else { d.to_string() }
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::Shear;

    fn params(epsilon: f64, alpha: f64, omega: f64, tau: Shear) -> MapParams {
        MapParams::new(epsilon, alpha, omega, tau)
    }

    #[test]
    fn unperturbed_widths_vanish() {
        let m = params(0.0, 1.0, 1.618, Shear::Positive);
        let (wp, wm) = band_widths(&m, 10, 1000);
        assert_eq!((wp, wm), (0.0, 0.0));
    }

    #[test]
    fn widths_positive_when_perturbed() {
        let m = params(0.01, 1.0, 1.3, Shear::Positive);
        let (wp, wm) = band_widths(&m, 16, 200);
        assert!(wp > 0.0 && wm > 0.0);
    }

    #[test]
    fn widths_deterministic() {
        let m = params(0.01, 1.0, (5.0f64.sqrt() + 1.0) / 2.0, Shear::Positive);
        let a = band_widths(&m, 20, 5000);
        let b = band_widths(&m, 20, 5000);
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1.to_bits(), b.1.to_bits());
    }

    #[test]
    fn ensemble_dominates_members() {
        let m = params(0.02, 1.0, 1.3, Shear::Positive);
        let (wp, wm) = band_widths(&m, 8, 2000);
        for p0 in tangent_initial_conditions(8) {
            let mut max_k = 0.0f64;
            let mut min_k = 0.0f64;
            ttm_orbit(p0, &m, 2000, |_, p| {
                max_k = max_k.max(p.k);
                min_k = min_k.min(p.k);
            });
            assert!(wp >= max_k && wm >= -min_k);
        }
    }

    #[test]
    fn fit_exact_power_law() {
        let samples: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let e = 10f64.powf(-3.5 + i as f64 * 2.0 / 7.0);
                (e, 3.0 * e)
            })
            .collect();
        let fit = fit_scaling(&samples).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-12);
        assert!((fit.prefactor - 3.0).abs() < 1e-12);
        assert!(fit.max_residual < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_scaling(&[(0.1, 1.0), (0.2, 2.0)]).is_err());
        assert!(fit_scaling(&[(0.1, 1.0), (0.2, 2.0), (0.3, 0.0), (0.4, 1.0)]).is_err());
        // narrow grid span
        assert!(fit_scaling(&[(0.1, 1.0), (0.12, 1.2), (0.14, 1.4), (0.16, 1.6)]).is_err());
    }

    #[test]
    fn trimmed_fit_drops_overlap_points() {
        let mut samples: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let e = 10f64.powf(-3.5 + i as f64 * 2.0 / 7.0);
                (e, 2.0 * e)
            })
            .collect();
        // corrupt the largest epsilon upward by 4x
        samples.last_mut().unwrap().1 *= 4.0;
        let (full, trimmed) = fit_scaling_trimmed(&samples, 0.25).unwrap();
        assert!(full.max_residual > 0.25);
        let t = trimmed.expect("should trim");
        assert!((t.exponent - 1.0).abs() < 1e-9);
    }

    #[test]
    fn window_running_extrema_monotone() {
        let m = params(0.05, 1.0, 1.3, Shear::Positive);
        let mut w = WindowStats::new(vec![0.0, 1.5, -2.0], 0.5).unwrap();
        let mut p = PhasePoint::new(0.3, 0.0);
        let mut prev_max = vec![f64::NEG_INFINITY; 3];
        let mut prev_min = vec![f64::INFINITY; 3];
        for _ in 0..2000 {
            p = ttm_step(p, &m);
            w.observe(p);
            for i in 0..3 {
                if let Some((lo, hi)) = w.extrema(i) {
                    assert!(hi >= prev_max[i] || prev_max[i] == f64::NEG_INFINITY);
                    assert!(lo <= prev_min[i] || prev_min[i] == f64::INFINITY);
                    assert!(hi >= lo);
                    prev_max[i] = hi;
                    prev_min[i] = lo;
                }
            }
        }
    }

    #[test]
    fn trajectory_width_zero_when_unperturbed() {
        let m = params(0.0, 1.0, 1.618, Shear::Positive);
        let mut w = WindowStats::new(vec![0.0, 2.0], 0.3).unwrap();
        let samples = trajectory_width(PhasePoint::new(0.1, 0.0), &m, 1000, &mut w, &[10, 100, 1000]);
        for s in samples {
            assert!(s.width.unwrap_or(0.0) == 0.0);
        }
    }

    #[test]
    fn trajectory_width_nondecreasing() {
        let m = params(0.02, 1.0, 1.3, Shear::Positive);
        let mut w = WindowStats::new(vec![0.0, 1.0, -1.0, 2.5], 0.2).unwrap();
        let cps = log_checkpoints(20000);
        let samples = trajectory_width(PhasePoint::new(0.0, 0.0), &m, 20000, &mut w, &cps);
        let mut prev = 0.0;
        for s in samples {
            if let Some(w) = s.width {
                assert!(w >= prev - 1e-15);
                prev = w;
            }
        }
    }

    #[test]
    fn no_hit_windows_flagged() {
        let m = params(0.0, 1.0, 0.0, Shear::Positive);
        // orbit pinned at phi=0, windows elsewhere: no hits
        let mut w = WindowStats::new(vec![2.0], 0.1).unwrap();
        let samples = trajectory_width(PhasePoint::new(0.0, 0.0), &m, 100, &mut w, &[100]);
        assert!(samples[0].width.is_none());
    }

    #[test]
    fn boundary_distance_midline_near_half() {
        // Orbit confined near K = 0 against a symmetric band [-1, 1]:
        // distance ~ 1/2.
        let m = params(1e-6, 1.0, 1.618, Shear::Positive);
        let mut w = WindowStats::new(vec![0.0, 1.0, -1.0], 0.4).unwrap();
        let band = vec![(-1.0, 1.0); 3];
        let d = boundary_distance(PhasePoint::new(0.0, 0.0), &m, 5000, &mut w, &band, &[5000])
            .unwrap();
        let v = d[0].distance.unwrap();
        assert!((v - 0.5).abs() < 0.01, "distance {v}");
    }

    #[test]
    fn boundary_distance_zero_after_touching() {
        let m = params(0.0, 1.0, 1.0, Shear::Positive);
        let mut w = WindowStats::new(vec![0.0], 3.2).unwrap();
        // feed extremes by hand: an orbit that visited both band edges
        w.observe(PhasePoint::new(0.0, 1.0));
        w.observe(PhasePoint::new(0.1, -1.0));
        let band = vec![(-1.0, 1.0)];
        let d = boundary_distance(PhasePoint::new(0.0, 1.0), &m, 0, &mut w, &band, &[0]).unwrap();
        assert_eq!(d[0].distance.unwrap(), 0.0);
    }

    #[test]
    fn boundary_distance_rejects_degenerate_band() {
        let m = params(0.0, 1.0, 1.0, Shear::Positive);
        let mut w = WindowStats::new(vec![0.0], 0.1).unwrap();
        let band = vec![(0.5, 0.5)];
        let e = boundary_distance(PhasePoint::new(0.0, 0.0), &m, 10, &mut w, &band, &[10]);
        assert!(matches!(e, Err(Error::UndefinedWindow { index: 0 })));
    }

    #[test]
    fn connection_flat_zero_when_unperturbed() {
        let m = params(0.0, 1.0, 1.618, Shear::Positive);
        let rep = connection_metrics(&m, 4, 1000, 7, 5, 10).unwrap();
        assert!(rep.normalized.iter().all(|&v| v == 0.0));
        assert_eq!(rep.band_width, 0.0);
    }

    #[test]
    fn connection_deterministic_given_seed() {
        let m = params(0.01, 1.0, 1.618, Shear::Positive);
        let a = connection_metrics(&m, 4, 20000, 42, 5, 100).unwrap();
        let b = connection_metrics(&m, 4, 20000, 42, 5, 100).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        let c = connection_metrics(&m, 4, 20000, 43, 5, 100).unwrap();
        assert_ne!(a.to_csv(), c.to_csv());
    }

    #[test]
    fn checkpoint_schedule_shape() {
        let cps = log_checkpoints(100000);
        assert_eq!(*cps.first().unwrap(), 1);
        assert_eq!(*cps.last().unwrap(), 100000);
        assert!(cps.windows(2).all(|w| w[0] < w[1]));
    }
}
