//! Post-processing of scans: resonance peaks, circle fits in the `(α, β)`
//! plane and threshold power laws.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sweep::SweepRecord;

/// Minimum samples for [`locate_resonance`].
pub const MIN_RESONANCE_SAMPLES: usize = 20;
/// Minimum points for a circle fit over sweep records.
pub const MIN_CIRCLE_POINTS: usize = 12;
/// Minimum points for [`threshold_fit`].
pub const MIN_THRESHOLD_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub s_peak: f64,
    pub beta_peak: f64,
    /// Full width at half maximum, when both half-maximum crossings lie
    /// inside the scan.
    pub width: Option<f64>,
}

/// Finds the largest interior maximum of `beta(s)`.
///
/// The peak is refined by a parabola through the three samples around the
/// discrete maximum. The parabola is fitted to `1/β` when all three values
/// are positive, which is exact for a Lorentzian line and equivalent to a
/// plain quadratic fit to second order otherwise.
pub fn locate_resonance(s: &[f64], beta: &[f64]) -> Result<Resonance> {
    if s.len() != beta.len() {
        return Err(Error::Fit("s and beta differ in length".into()));
    }
    if s.len() < MIN_RESONANCE_SAMPLES {
        return Err(Error::Fit(format!(
            "need at least {MIN_RESONANCE_SAMPLES} samples, got {}",
            s.len()
        )));
    }
    if s.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Fit("s must be strictly increasing".into()));
    }
    let (imax, _) = beta
        .iter()
        .enumerate()
        .filter(|(_, b)| b.is_finite())
        .fold((usize::MAX, f64::NEG_INFINITY), |acc, (i, &b)| if b > acc.1 { (i, b) } else { acc });
    if imax == usize::MAX || imax == 0 || imax == s.len() - 1 {
        return Err(Error::NoInteriorPeak);
    }
    let (x, b) = (&s[imax - 1..=imax + 1], &beta[imax - 1..=imax + 1]);
    let (s_peak, beta_peak) = if b.iter().all(|&v| v > 0.0) {
        let inv = [1.0 / b[0], 1.0 / b[1], 1.0 / b[2]];
        let (xv, yv) = parabola_vertex(x, &inv);
        (xv, 1.0 / yv)
    } else {
        parabola_vertex(x, b)
    };
    let half = 0.5 * beta_peak;
    let left = (0..imax)
        .rev()
        .find(|&i| beta[i] < half)
        .map(|i| crossing(s[i], beta[i], s[i + 1], beta[i + 1], half));
    let right = (imax + 1..s.len())
        .find(|&i| beta[i] < half)
        .map(|i| crossing(s[i - 1], beta[i - 1], s[i], beta[i], half));
    Ok(Resonance {
        s_peak,
        beta_peak,
        width: left.zip(right).map(|(l, r)| r - l),
    })
}

fn crossing(x0: f64, y0: f64, x1: f64, y1: f64, level: f64) -> f64 {
    x0 + (level - y0) * (x1 - x0) / (y1 - y0)
}

/// Vertex of the parabola through three points.
fn parabola_vertex(x: &[f64], y: &[f64]) -> (f64, f64) {
    // Newton divided differences
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let c = (d2 - d1) / (x[2] - x[0]);
    if c == 0.0 {
        return (x[1], y[1]);
    }
    let b = d1 - c * (x[0] + x[1]);
    let xv = -b / (2.0 * c);
    let yv = y[0] + d1 * (xv - x[0]) + c * (xv - x[0]) * (xv - x[1]);
    (xv, yv)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub alpha_c: f64,
    pub beta_c: f64,
    pub radius: f64,
    /// RMS distance of the points from the circle, relative to the radius.
    /// Zero for a point-like cloud.
    pub rms_relative: f64,
}

/// Algebraic least-squares circle through `(α, β)` points.
///
/// A cloud whose spread is at rounding level is returned as a circle of
/// that spread around its centroid, which is how a fully universal scan
/// (every `s` giving the same `ã`) shows up. Collinear points are a
/// degenerate fit.
pub fn circle_fit(points: &[(f64, f64)]) -> Result<Circle> {
    if points.len() < 3 {
        return Err(Error::Fit("a circle needs at least 3 points".into()));
    }
    if points.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::Fit("non-finite point in circle fit".into()));
    }
    let n = points.len() as f64;
    let (ma, mb) = points
        .iter()
        .fold((0.0, 0.0), |(sa, sb), &(a, b)| (sa + a / n, sb + b / n));
    let scale = points
        .iter()
        .map(|&(a, b)| a.abs().max(b.abs()))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let spread = points
        .iter()
        .map(|&(a, b)| (a - ma).hypot(b - mb))
        .fold(0.0f64, f64::max);
    if spread <= 1e-12 * scale {
        return Ok(Circle {
            alpha_c: ma,
            beta_c: mb,
            radius: spread,
            rms_relative: 0.0,
        });
    }
    // centred and scaled coordinates keep the normal equations well posed
    let u: Vec<(f64, f64)> = points
        .iter()
        .map(|&(a, b)| ((a - ma) / spread, (b - mb) / spread))
        .collect();
    let a = DMatrix::from_fn(u.len(), 3, |i, j| match j {
        0 => u[i].0,
        1 => u[i].1,
        _ => 1.0,
    });
    let rhs = DVector::from_iterator(u.len(), u.iter().map(|&(x, y)| -(x * x + y * y)));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-10 * smax {
        return Err(Error::DegenerateFit);
    }
    let c = svd.solve(&rhs, 0.0).map_err(|e| Error::Fit(e.to_string()))?;
    let (xc, yc) = (-0.5 * c[0], -0.5 * c[1]);
    let r2 = xc * xc + yc * yc - c[2];
    if !(r2 > 0.0) || !r2.is_finite() {
        return Err(Error::DegenerateFit);
    }
    let r = r2.sqrt();
    let rms = (u
        .iter()
        .map(|&(x, y)| ((x - xc).hypot(y - yc) - r).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(Circle {
        alpha_c: ma + spread * xc,
        beta_c: mb + spread * yc,
        radius: spread * r,
        rms_relative: rms / r,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub slope: f64,
    pub slope_stderr: f64,
    /// `ln K` at `ln E = 0`.
    pub intercept: f64,
}

/// Least-squares slope of `ln k` against `ln e`.
pub fn threshold_fit(e: &[f64], k: &[f64]) -> Result<PowerLaw> {
    if e.len() != k.len() {
        return Err(Error::Fit("energy and rate differ in length".into()));
    }
    if e.len() < MIN_THRESHOLD_POINTS {
        return Err(Error::InsufficientSpan(format!(
            "need at least {MIN_THRESHOLD_POINTS} points, got {}",
            e.len()
        )));
    }
    if e.iter().chain(k).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit("energies and rates must be positive".into()));
    }
    let (lo, hi) = e
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi / lo < 10.0 * (1.0 - 1e-9) {
        return Err(Error::InsufficientSpan(format!(
            "energies span {:.3} decades, need one",
            (hi / lo).log10()
        )));
    }
    let x: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = k.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    Ok(PowerLaw {
        slope,
        slope_stderr: (sse / (n - 2.0) / sxx).sqrt(),
        intercept,
    })
}

/// Rows that carry a usable result: no error and no pole.
fn usable(records: &[SweepRecord]) -> impl Iterator<Item = &SweepRecord> {
    records
        .iter()
        .filter(|r| r.error.is_empty() && !r.pole && r.alpha.is_finite() && r.beta.is_finite())
}

/// [`locate_resonance`] over sweep rows ordered by `s`.
pub fn resonance_from_records(records: &[SweepRecord]) -> Result<Resonance> {
    let rows: Vec<&SweepRecord> = usable(records).collect();
    let s: Vec<f64> = rows.iter().map(|r| r.s).collect();
    let b: Vec<f64> = rows.iter().map(|r| r.beta).collect();
    locate_resonance(&s, &b)
}

/// [`circle_fit`] over sweep rows, excluding failed and pole rows.
pub fn circle_from_records(records: &[SweepRecord]) -> Result<Circle> {
    let pts: Vec<(f64, f64)> = usable(records).map(|r| (r.alpha, r.beta)).collect();
    if pts.len() < MIN_CIRCLE_POINTS {
        return Err(Error::Fit(format!(
            "need at least {MIN_CIRCLE_POINTS} usable points, got {}",
            pts.len()
        )));
    }
    circle_fit(&pts)
}

/// [`threshold_fit`] of `K_re` against `E = q²` over sweep rows. Every row
/// must lie below the first excited trap threshold.
pub fn threshold_from_records(records: &[SweepRecord]) -> Result<PowerLaw> {
    let rows: Vec<&SweepRecord> = usable(records).collect();
    if let Some(r) = rows.iter().find(|r| r.energy >= 2.0 / (r.a_h * r.a_h)) {
        return Err(Error::InsufficientSpan(format!(
            "E = {} is above the first excited threshold",
            r.energy
        )));
    }
    let e: Vec<f64> = rows.iter().map(|r| r.energy).collect();
    let k: Vec<f64> = rows.iter().map(|r| r.k_re).collect();
    threshold_fit(&e, &k)
}
