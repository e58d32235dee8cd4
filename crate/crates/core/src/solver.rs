//! One parameter point: boundary, propagation, matching, outer tail and
//! observables.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{self, BoundaryCondition};
use crate::couplings::{ChannelBasis, Potential, Terms};
use crate::error::{Error, Result};
use crate::matching::{self, AsymptoticChannels, SMatrixResult, TailPotential};
use crate::observables::{self, Rates};
use crate::propagator::{self, CMatrix, LogDerivState, RadialGrid, StepRule};
use crate::units::{self, ModelParams, NumericsParams, RateConvention, Resolved};

/// Relative change allowed when the θ-quadrature order is doubled.
pub const QUADRATURE_TOL: f64 = 1e-8;

/// What sits at `r_min`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ShortRange {
    /// Quantum-defect boundary built from `(s, y)`.
    #[default]
    Qdt,
    /// Regular free solution `u ∝ r^{ℓ+1}`, for tests with interactions off.
    Regular,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub terms: Terms,
    pub short_range: ShortRange,
    /// Carry open channels through the dipole/vdW tail beyond the sphere.
    pub outer_region: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            terms: Terms::default(),
            short_range: ShortRange::Qdt,
            outer_region: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    /// Matching residual within tolerance and no pole.
    pub converged: bool,
    /// `S₀₀ = −1`; `ã` is infinite.
    pub pole: bool,
    /// `(I − iK)` nearly singular.
    pub near_pole: bool,
    /// Non-vdW terms exceed 1e-3 of the vdW term at `r_min` for `ℓ ≤ 3`.
    pub shallow_boundary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub params: ModelParams,
    pub numerics: Resolved,
    /// Wave vector that normalizes `ã`.
    pub k_ref: f64,
    pub a_tilde: Complex64,
    pub alpha: f64,
    pub beta: f64,
    pub s00: Complex64,
    pub rates: Rates,
    /// `1 − Σ_j |S_{j0}|²`.
    pub loss: f64,
    /// `|S_{j0}|²` for every open channel `j`.
    pub populations: Vec<f64>,
    pub residual: f64,
    pub condition: f64,
    pub k_asymmetry: f64,
    pub y_asymmetry: f64,
    pub l_max: u32,
    pub channels_open: usize,
    pub channels_closed: usize,
    pub steps: usize,
    pub flags: Flags,
}

/// Solves one point with the full model.
pub fn solve_point(params: &ModelParams, numerics: &NumericsParams) -> Result<PointResult> {
    solve_point_with(params, numerics, &SolveOptions::default())
}

pub fn solve_point_with(params: &ModelParams, numerics: &NumericsParams, opts: &SolveOptions) -> Result<PointResult> {
    let violations = units::validate(params, numerics);
    if !violations.is_empty() {
        return Err(Error::InvalidParams(violations));
    }
    let res = numerics.resolve(params);
    let basis = ChannelBasis::for_params(params, res.l_max);
    let energy = params.scales().e_total;

    let inner = propagate_inner(params, &res, &basis, energy, opts)?;

    let mut channels = AsymptoticChannels::for_basis(&basis, res.n_z, params.a_h, energy)?;
    channels.prune_closed(res.r_max, res.closed_leak_tol);
    let vectors = matching::asymptotic_channel_vectors(res.r_max, &basis, &channels, res.theta_order, QUADRATURE_TOL)?;
    let matched = matching::extract_smatrix(&inner.y, &vectors)?;

    let sres = if opts.outer_region {
        outer_region(params, &res, &channels, matched, opts.terms)?
    } else {
        matched
    };

    let k_ref = match res.rate_convention {
        RateConvention::ThreeDEquivalent => std::f64::consts::PI / params.a_h,
        RateConvention::InPlane => params.q,
    };
    let s00 = sres.s[(0, 0)];
    let a_tilde = observables::complex_scattering_length(s00, k_ref);
    let pole = !a_tilde.re.is_finite();
    let rates = observables::rates(a_tilde, k_ref, params.statistics.g());
    let populations = sres.s.column(0).iter().map(|z| z.norm_sqr()).collect();
    let shallow = boundary::depth_ratio(res.r_min, 3, params.a_d, params.a_h, energy) > 1e-3;

    Ok(PointResult {
        params: params.clone(),
        k_ref,
        alpha: a_tilde.re,
        beta: -a_tilde.im,
        a_tilde,
        s00,
        rates,
        loss: sres.loss(),
        populations,
        residual: sres.residual,
        condition: sres.condition,
        k_asymmetry: sres.asymmetry,
        y_asymmetry: inner.asymmetry(),
        l_max: res.l_max,
        channels_open: channels.n_open(),
        channels_closed: channels.n_closed(),
        steps: inner.steps,
        flags: Flags {
            converged: sres.residual <= res.match_tol && !pole,
            pole,
            near_pole: sres.near_pole,
            shallow_boundary: shallow,
        },
        numerics: res,
    })
}

/// `ã` under refined numerics, relative to the baseline solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub base: Complex64,
    pub l_max_doubled: f64,
    pub points_doubled: f64,
    pub r_max_raised: f64,
}

impl ConvergenceReport {
    pub fn max_change(&self) -> f64 {
        self.l_max_doubled.max(self.points_doubled).max(self.r_max_raised)
    }
}

/// Re-solves with each numerical control refined in turn and reports the
/// relative change of `ã` against the baseline.
pub fn convergence_check(params: &ModelParams, numerics: &NumericsParams) -> Result<ConvergenceReport> {
    let base = solve_point(params, numerics)?;
    let res = &base.numerics;
    let change = |n: NumericsParams| -> Result<f64> {
        let r = solve_point(params, &n)?;
        Ok((r.a_tilde - base.a_tilde).norm() / base.a_tilde.norm())
    };
    let l_max_doubled = change(NumericsParams {
        l_max: Some(2 * res.l_max),
        ..numerics.clone()
    })?;
    let points_doubled = change(NumericsParams {
        points_per_wavelength: 2.0 * res.points_per_wavelength,
        ..numerics.clone()
    })?;
    // the outer tail keeps its own end point so only the matching sphere moves
    let r_max = 1.25 * res.r_max;
    let r_max_raised = change(NumericsParams {
        r_max: Some(r_max),
        rho_max: Some(res.rho_max.max(r_max)),
        l_max: numerics.l_max.or(Some(res.l_max)).map(|l| {
            let m = params.m.unsigned_abs();
            l.max(m + 2 * (1.5 * r_max / params.a_h).ceil() as u32 + 8)
        }),
        ..numerics.clone()
    })?;
    Ok(ConvergenceReport {
        base: base.a_tilde,
        l_max_doubled,
        points_doubled,
        r_max_raised,
    })
}

fn propagate_inner(
    params: &ModelParams,
    res: &Resolved,
    basis: &ChannelBasis,
    energy: f64,
    opts: &SolveOptions,
) -> Result<LogDerivState> {
    let pot = Potential::new(basis.clone(), params, opts.terms);
    let state = match opts.short_range {
        ShortRange::Qdt => {
            let bc = BoundaryCondition::with_form(res.r_min, params.s, params.y, res.boundary_form)?;
            propagator::init_state(basis, &bc)?
        }
        ShortRange::Regular => {
            let z: Vec<Complex64> = basis
                .ells
                .iter()
                .map(|&l| Complex64::new((l + 1) as f64 / res.r_min, 0.0))
                .collect();
            LogDerivState::new(res.r_min, CMatrix::from_diagonal(&nalgebra::DVector::from_vec(z)))
        }
    };
    let grid = RadialGrid::adaptive(
        &pot,
        energy,
        res.r_min,
        res.r_max,
        StepRule::new(res.points_per_wavelength, res.h_max),
    );
    propagator::propagate(state, &grid, &pot, energy)
}

fn outer_region(
    params: &ModelParams,
    res: &Resolved,
    channels: &AsymptoticChannels,
    matched: SMatrixResult,
    terms: Terms,
) -> Result<SMatrixResult> {
    if res.rho_max <= res.r_max || !(terms.dipole || terms.vdw) {
        return Ok(matched);
    }
    let m = params.m.unsigned_abs();
    let open: Vec<_> = channels.open().collect();
    let tails: Vec<TailPotential> = open
        .iter()
        .map(|c| TailPotential::new(c.n_z, params, terms))
        .collect();
    let transfers: Vec<_> = open
        .iter()
        .zip(&tails)
        .map(|(c, t)| matching::outer_transfer(m, c.wavenumber, t, res.r_max, res.rho_max))
        .collect();
    let k = matching::propagate_k_outward(&matched.k, &transfers)?;
    let mut out = matching::smatrix_from_k(k, matched.residual, matched.condition)?;
    // S' = E S E with the Born phase of the tail beyond ρ_max
    let phases: Vec<Complex64> = open
        .iter()
        .zip(&tails)
        .map(|(c, t)| Complex64::from_polar(1.0, t.tail_phase(c.wavenumber, res.rho_max)))
        .collect();
    let n = phases.len();
    for i in 0..n {
        for j in 0..n {
            out.s[(i, j)] *= phases[i] * phases[j];
        }
    }
    Ok(out)
}
