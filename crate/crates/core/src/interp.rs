//! Periodic interpolation on the circle: a cubic spline for smooth
//! resampling and a monotone (shape-preserving) cubic for chart lookups.

use crate::error::{Error, Result};

fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    d
}

/// Cyclic tridiagonal solve by the Sherman-Morrison correction.
fn solve_cyclic(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    debug_assert!(n >= 3);
    let alpha = lower[0]; // wraps to column n-1 in row 0
    let beta = upper[n - 1]; // wraps to column 0 in row n-1
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - alpha * beta / gamma;
    let x = solve_tridiagonal(lower, &bb, upper, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(lower, &bb, upper, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

fn check_knots(x: &[f64], y: &[f64], period: f64) -> Result<()> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "periodic interpolation needs >= 3 knots, got {} x / {} y",
            x.len(),
            y.len()
        )));
    }
    if !(period > 0.0) {
        return Err(Error::InvalidArgument(format!("period must be > 0, got {period}")));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("knots must be strictly ascending".into()));
    }
    if x[x.len() - 1] - x[0] >= period {
        return Err(Error::InvalidArgument(
            "knots must span less than one period".into(),
        ));
    }
    Ok(())
}

/// Interval widths including the wrap interval x[0]+period - x[n-1].
fn spacings(x: &[f64], period: f64) -> Vec<f64> {
    let n = x.len();
    let mut h = Vec::with_capacity(n);
    for i in 0..n - 1 {
        h.push(x[i + 1] - x[i]);
    }
    h.push(x[0] + period - x[n - 1]);
    h
}

fn locate(x: &[f64], period: f64, q: f64) -> (usize, f64) {
    let n = x.len();
    let mut t = (q - x[0]).rem_euclid(period) + x[0];
    if t < x[0] {
        t += period;
    }
    // binary search for the containing interval
    let i = match x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
        Ok(i) => i,
        Err(0) => n - 1, // can't happen after reduction, defensive
        Err(i) => i - 1,
    };
    (i, t - x[i])
}

/// Periodic cubic spline over possibly non-uniform knots.
#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>, // second derivatives at knots
    h: Vec<f64>,
    period: f64,
}

impl PeriodicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>, period: f64) -> Result<Self> {
        check_knots(&x, &y, period)?;
        let n = x.len();
        let h = spacings(&x, period);
        let hm = |i: usize| h[(i + n - 1) % n];
        let yn = |i: usize| y[i % n];
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            lower[i] = hm(i) / 6.0;
            diag[i] = (hm(i) + h[i]) / 3.0;
            upper[i] = h[i] / 6.0;
            rhs[i] = (yn(i + 1) - y[i]) / h[i] - (y[i] - yn(i + n - 1)) / hm(i);
        }
        let m = solve_cyclic(&lower, &diag, &upper, &rhs);
        Ok(PeriodicSpline { x, y, m, h, period })
    }

    pub fn eval(&self, q: f64) -> f64 {
        let n = self.x.len();
        let (i, s) = locate(&self.x, self.period, q);
        let j = (i + 1) % n;
        let h = self.h[i];
        let a = (self.y[j] - self.y[i]) / h - h * (2.0 * self.m[i] + self.m[j]) / 6.0;
        self.y[i] + s * (a + s * (self.m[i] / 2.0 + s * (self.m[j] - self.m[i]) / (6.0 * h)))
    }
}

/// Shape-preserving periodic cubic (Fritsch-Carlson slopes): no overshoot
/// between knots, monotone on monotone data.
#[derive(Debug, Clone)]
pub struct MonotoneCubicPeriodic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>, // first derivatives at knots
    h: Vec<f64>,
    period: f64,
}

impl MonotoneCubicPeriodic {
    pub fn new(x: Vec<f64>, y: Vec<f64>, period: f64) -> Result<Self> {
        check_knots(&x, &y, period)?;
        let n = x.len();
        let h = spacings(&x, period);
        let delta: Vec<f64> = (0..n).map(|i| (y[(i + 1) % n] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 0..n {
            let dm = delta[(i + n - 1) % n];
            let dp = delta[i];
            if dm * dp <= 0.0 {
                d[i] = 0.0;
            } else {
                let hm = h[(i + n - 1) % n];
                let hp = h[i];
                let w1 = 2.0 * hp + hm;
                let w2 = hp + 2.0 * hm;
                d[i] = (w1 + w2) / (w1 / dm + w2 / dp);
            }
        }
        Ok(MonotoneCubicPeriodic { x, y, d, h, period })
    }

    pub fn eval(&self, q: f64) -> f64 {
        let n = self.x.len();
        let (i, s) = locate(&self.x, self.period, q);
        let j = (i + 1) % n;
        let h = self.h[i];
        let t = s / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[j] + h11 * h * self.d[j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample(n: usize, f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let x: Vec<f64> = (0..n).map(|i| -PI + 2.0 * PI * i as f64 / n as f64).collect();
        let y: Vec<f64> = x.iter().map(|&t| f(t)).collect();
        (x, y)
    }

    #[test]
    fn spline_reproduces_smooth_periodic() {
        let f = |t: f64| (t).sin() + 0.3 * (2.0 * t + 0.4).cos();
        let (x, y) = sample(256, f);
        let s = PeriodicSpline::new(x, y, 2.0 * PI).unwrap();
        let mut max_err = 0.0f64;
        for k in 0..2000 {
            let t = -PI + 2.0 * PI * (k as f64 + 0.5) / 2000.0;
            max_err = max_err.max((s.eval(t) - f(t)).abs());
        }
        assert!(max_err < 2e-8, "max spline error {max_err}");
    }

    #[test]
    fn spline_fourth_order_convergence() {
        let f = |t: f64| (3.0 * t).sin();
        let err = |n: usize| {
            let (x, y) = sample(n, f);
            let s = PeriodicSpline::new(x, y, 2.0 * PI).unwrap();
            (0..777)
                .map(|k| {
                    let t = -PI + 2.0 * PI * (k as f64 + 0.3) / 777.0;
                    (s.eval(t) - f(t)).abs()
                })
                .fold(0.0f64, f64::max)
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e2 < e1 / 10.0, "e(64)={e1}, e(128)={e2}");
    }

    #[test]
    fn spline_handles_nonuniform_knots() {
        let f = |t: f64| (t).cos();
        let h = 2.0 * PI / 200.0;
        let x: Vec<f64> = (0..200)
            .map(|i| -PI + h * (i as f64 + 0.3 * (7.0 * h * i as f64).sin()))
            .collect();
        let y: Vec<f64> = x.iter().map(|&t| f(t)).collect();
        let s = PeriodicSpline::new(x, y, 2.0 * PI).unwrap();
        for k in 0..500 {
            let t = -PI + 2.0 * PI * k as f64 / 500.0;
            assert!((s.eval(t) - f(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn spline_periodic_wraparound() {
        let f = |t: f64| (t).sin();
        let (x, y) = sample(64, f);
        let s = PeriodicSpline::new(x, y, 2.0 * PI).unwrap();
        assert!((s.eval(PI + 0.1) - s.eval(-PI + 0.1)).abs() < 1e-13);
        assert!((s.eval(5.0 * PI) - s.eval(-PI)).abs() < 1e-13);
    }

    #[test]
    fn monotone_cubic_no_overshoot() {
        // step-like periodic data: interpolant must stay within data range
        let x: Vec<f64> = (0..16).map(|i| -PI + 2.0 * PI * i as f64 / 16.0).collect();
        let y: Vec<f64> = x.iter().map(|&t| if t < 0.0 { 0.0 } else { 1.0 }).collect();
        let c = MonotoneCubicPeriodic::new(x, y, 2.0 * PI).unwrap();
        for k in 0..1000 {
            let t = -PI + 2.0 * PI * k as f64 / 1000.0;
            let v = c.eval(t);
            assert!((-1e-12..=1.0 + 1e-12).contains(&v), "overshoot {v} at {t}");
        }
    }

    #[test]
    fn monotone_cubic_interpolates_knots() {
        let f = |t: f64| 0.2 * (t).sin() + 1.0;
        let (x, y) = sample(40, f);
        let c = MonotoneCubicPeriodic::new(x.clone(), y.clone(), 2.0 * PI).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((c.eval(*xi) - yi).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(PeriodicSpline::new(vec![0.0, 1.0], vec![0.0, 1.0], 2.0 * PI).is_err());
        assert!(PeriodicSpline::new(vec![0.0, 1.0, 0.5], vec![0.0; 3], 2.0 * PI).is_err());
        assert!(MonotoneCubicPeriodic::new(vec![0.0, 1.0, 8.0], vec![0.0; 3], 2.0 * PI).is_err());
    }
}
