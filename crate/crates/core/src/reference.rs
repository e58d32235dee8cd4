//! Single-channel free-space (3D) reference solver.
//!
//! Used to check the boundary convention against known limits and to
//! calibrate the p-wave mean scattering length `ā₁`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryCondition, BoundaryForm};
use crate::couplings::{ChannelBasis, Potential, Terms};
use crate::error::{Error, Result};
use crate::propagator::{self, RadialGrid, StepRule};
use crate::special::{gamma, riccati_bessel};
use crate::units::ModelParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOptions {
    pub r_min: f64,
    /// Matching radius; `None` picks `max(300, 3/k)`.
    pub r_max: Option<f64>,
    pub points_per_wavelength: f64,
    pub h_max: f64,
    /// Halve `r_min` (at most this many times) until `ã` moves by less than
    /// `r_min_tol` relative.
    pub r_min_halvings: u32,
    pub r_min_tol: f64,
    pub boundary: BoundaryForm,
    /// Added to the short-range phase before the boundary is built. Zero in
    /// normal use; the validation suite uses it as a negative control.
    #[serde(default)]
    pub phase_offset: f64,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            r_min: 0.2,
            r_max: None,
            points_per_wavelength: 96.0,
            h_max: 0.05,
            r_min_halvings: 1,
            r_min_tol: 1e-3,
            boundary: BoundaryForm::Bessel,
            phase_offset: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceResult {
    pub s_matrix: Complex64,
    /// `ã_ℓ(k) = (1/ik)(1 − S)/(1 + S)` in units of `ā`.
    pub a_tilde: Complex64,
    pub r_min: f64,
    pub r_max: f64,
    /// Relative change of `ã` in the last `r_min` halving (0 if none ran).
    pub r_min_change: f64,
}

/// Complex scattering length of partial wave `ℓ` for the bare van der Waals
/// potential at wavenumber `k`.
pub fn solve_3d_reference(l: u32, s: f64, y: f64, k: f64) -> Result<ReferenceResult> {
    solve_3d_reference_with(l, s, y, k, &ReferenceOptions::default())
}

pub fn solve_3d_reference_with(l: u32, s: f64, y: f64, k: f64, opts: &ReferenceOptions) -> Result<ReferenceResult> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    let mut best = solve_once(l, s, y, k, opts.r_min, opts)?;
    let mut r_min = opts.r_min;
    for _ in 0..opts.r_min_halvings {
        r_min *= 0.5;
        let next = solve_once(l, s, y, k, r_min, opts)?;
        let change = (next.a_tilde - best.a_tilde).norm() / next.a_tilde.norm().max(1e-300);
        best = ReferenceResult {
            r_min_change: change,
            ..next
        };
        if change < opts.r_min_tol {
            break;
        }
    }
    Ok(best)
}

fn solve_once(l: u32, s: f64, y: f64, k: f64, r_min: f64, opts: &ReferenceOptions) -> Result<ReferenceResult> {
    let r_max = opts.r_max.unwrap_or_else(|| (300.0f64).max(3.0 / k));
    let basis = ChannelBasis::single(l as i32, l);
    let pot = Potential::new(
        basis.clone(),
        &ModelParams::default(),
        Terms {
            vdw: true,
            dipole: false,
            trap: false,
        },
    );
    let e = k * k;
    let phi = crate::boundary::phase_from_s(s) + opts.phase_offset;
    let bc = BoundaryCondition::from_phase(r_min, phi, y, opts.boundary)?;
    let rule = StepRule {
        points_per_wavelength: opts.points_per_wavelength,
        h_max: opts.h_max,
        rel_max: 0.01,
    };
    let grid = RadialGrid::adaptive(&pot, e, r_min, r_max, rule);
    let out = propagator::propagate(propagator::init_state(&basis, &bc)?, &grid, &pot, e)?;
    let yv = out.y[(0, 0)];
    let (j, n, dj, dn) = riccati_bessel(l, k * r_max);
    // u = ĵ − t n̂ with t = tan δ
    let t = (yv * j - k * dj) / (yv * n - k * dn);
    let i = Complex64::i();
    let s_matrix = (1.0 + i * t) / (1.0 - i * t);
    Ok(ReferenceResult {
        s_matrix,
        a_tilde: -t / k,
        r_min,
        r_max,
        r_min_change: 0.0,
    })
}

/// Closed-form p-wave mean scattering length
/// `ā₁ = ā Γ(1/4)⁶ / (144 π² Γ(3/4)²)`.
pub fn abar1_analytic() -> f64 {
    let pi = std::f64::consts::PI;
    gamma(0.25).powi(6) / (144.0 * pi * pi * gamma(0.75).powi(2))
}

/// Result of extrapolating `β₁(k)/k²` to `k → 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Abar1Calibration {
    pub abar1: f64,
    /// RMS residual of the fit relative to `ā₁`.
    pub fit_residual: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub points: usize,
    /// Closed-form value, stored for comparison.
    pub analytic: f64,
}

impl Abar1Calibration {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Fits `β₁(k)/k² = c₀ + c₁k + c₂k²` over log-spaced `k ∈ [k_min, k_max]`
/// for the universal (`y = 1`) p-wave and returns `ā₁ = c₀`.
pub fn calibrate_abar1(k_min: f64, k_max: f64, points: usize) -> Result<Abar1Calibration> {
    if points < 4 || !(k_min > 0.0 && k_max > k_min) {
        return Err(Error::Fit("need at least 4 points over a positive k range".into()));
    }
    let mut ks = Vec::with_capacity(points);
    let mut vals = Vec::with_capacity(points);
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        let k = k_min * (k_max / k_min).powf(t);
        // y = 1 makes the result independent of s
        let res = solve_3d_reference(1, 0.0, 1.0, k)?;
        ks.push(k);
        vals.push(-res.a_tilde.im / (k * k));
    }
    let coef = polyfit(&ks, &vals, 2)?;
    let rms = (ks
        .iter()
        .zip(&vals)
        .map(|(&k, &v)| (v - (coef[0] + coef[1] * k + coef[2] * k * k)).powi(2))
        .sum::<f64>()
        / points as f64)
        .sqrt();
    Ok(Abar1Calibration {
        abar1: coef[0],
        fit_residual: rms / coef[0].abs(),
        k_min,
        k_max,
        points,
        analytic: abar1_analytic(),
    })
}

/// Least-squares polynomial coefficients, lowest order first.
pub(crate) fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Result<Vec<f64>> {
    let n = degree + 1;
    let a = nalgebra::DMatrix::from_fn(x.len(), n, |i, j| x[i].powi(j as i32));
    let b = nalgebra::DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let c = svd.solve(&b, 1e-14).map_err(|e| Error::Fit(e.to_string()))?;
    Ok(c.iter().copied().collect())
}
