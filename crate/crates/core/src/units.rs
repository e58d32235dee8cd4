//! Dimensionless parameter model.
//!
//! Lengths are measured in the mean scattering length `ā` and energies in
//! `E_a = ħ²/(2μā²)`. In these units the radial equation reads
//! `u'' = [W(r) − E] u` with
//!
//! * van der Waals: `−(R6/ā)⁴ / r⁶`
//! * dipole: `2 a_d (1 − 3cos²θ) / r³`
//! * trap: `r² cos²θ / a_h⁴`
//! * centrifugal: `ℓ(ℓ+1) / r²`

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryForm;
use crate::special;

/// Exchange symmetry of the colliding pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistics {
    IdenticalFermions,
    IdenticalBosons,
    Distinguishable,
}

impl Statistics {
    /// Statistical factor `g` in the rate formulas.
    pub fn g(self) -> f64 {
        match self {
            Statistics::Distinguishable => 1.0,
            _ => 2.0,
        }
    }

    pub fn default_m(self) -> i32 {
        match self {
            Statistics::IdenticalFermions => 1,
            _ => 0,
        }
    }

    /// Whether a cylindrical channel `(n_z, m)` survives (anti)symmetrization.
    pub fn allows(self, m: i32, n_z: u32) -> bool {
        let even = (m.unsigned_abs() + n_z) % 2 == 0;
        match self {
            Statistics::IdenticalFermions => !even,
            Statistics::IdenticalBosons => even,
            Statistics::Distinguishable => true,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Statistics::IdenticalFermions => "identical-fermions",
            Statistics::IdenticalBosons => "identical-bosons",
            Statistics::Distinguishable => "distinguishable",
        }
    }
}

impl std::str::FromStr for Statistics {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identical-fermions" | "fermions" => Ok(Statistics::IdenticalFermions),
            "identical-bosons" | "bosons" => Ok(Statistics::IdenticalBosons),
            "distinguishable" => Ok(Statistics::Distinguishable),
            other => Err(format!("unknown statistics `{other}`")),
        }
    }
}

/// The physics inputs of a single scattering calculation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Short-range phase parameter, `s = a/ā`.
    pub s: f64,
    /// Short-range reaction amplitude in `[0, 1]`.
    pub y: f64,
    /// Dipolar length `μd²/ħ²` in units of `ā`.
    pub a_d: f64,
    /// Trap length `√(ħ/μΩ)` in units of `ā`.
    pub a_h: f64,
    /// Incident in-plane wave vector in units of `1/ā`.
    pub q: f64,
    /// Azimuthal quantum number.
    pub m: i32,
    pub statistics: Statistics,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            s: 0.0,
            y: 0.7,
            a_d: 0.0,
            a_h: 1.7,
            q: 0.05,
            m: 1,
            statistics: Statistics::IdenticalFermions,
        }
    }
}

impl ModelParams {
    pub fn scales(&self) -> DerivedScales {
        derive_scales(self)
    }

    /// Parity of the spherical partial waves coupled to the entrance channel
    /// `(n_z = 0, m)`: `0` for even `ℓ`, `1` for odd `ℓ`.
    pub fn ell_parity(&self) -> u32 {
        self.m.unsigned_abs() % 2
    }

    /// Re-express the length inputs in a unit where `ā = abar` and back.
    pub fn to_physical(&self, abar: f64) -> PhysicalLengths {
        PhysicalLengths {
            abar,
            a_d: self.a_d * abar,
            a_h: self.a_h * abar,
            q: self.q / abar,
        }
    }

    pub fn with_physical(&self, lengths: &PhysicalLengths) -> ModelParams {
        ModelParams {
            a_d: lengths.a_d / lengths.abar,
            a_h: lengths.a_h / lengths.abar,
            q: lengths.q * lengths.abar,
            ..self.clone()
        }
    }
}

/// Length inputs in an arbitrary consistent unit system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalLengths {
    pub abar: f64,
    pub a_d: f64,
    pub a_h: f64,
    pub q: f64,
}

/// `R6/ā = Γ(1/4)²/(2π)`.
pub fn r6_over_abar() -> f64 {
    let g = special::gamma(0.25);
    g * g / (2.0 * PI)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    pub r6: f64,
    /// `ħΩ` in `E_a`.
    pub hbar_omega: f64,
    pub a_h: f64,
    /// Total energy `ε_0 + q²` in `E_a`.
    pub e_total: f64,
}

impl DerivedScales {
    /// Trap threshold `ε_n = (2n + 1)(ā/a_h)²`.
    pub fn threshold(&self, n: u32) -> f64 {
        (2 * n + 1) as f64 / (self.a_h * self.a_h)
    }

    pub fn thresholds(&self, count: u32) -> Vec<f64> {
        (0..count).map(|n| self.threshold(n)).collect()
    }

    /// `(R6/ā)⁴`, the coefficient of the van der Waals term.
    pub fn c6(&self) -> f64 {
        self.r6.powi(4)
    }
}

pub fn derive_scales(params: &ModelParams) -> DerivedScales {
    let a_h = params.a_h;
    let hbar_omega = 2.0 / (a_h * a_h);
    DerivedScales {
        r6: r6_over_abar(),
        hbar_omega,
        a_h,
        e_total: 0.5 * hbar_omega + params.q * params.q,
    }
}

/// Which wave vector normalizes the complex scattering length of the
/// quasi-2D entrance channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RateConvention {
    /// `k = π/a_h`: the rate formulas then return `a_h` times the 2D rate
    /// constants, i.e. rates per equivalent 3D density `ρ_2D/a_h`.
    #[default]
    ThreeDEquivalent,
    /// `k = q`, the bare in-plane wave vector.
    InPlane,
}

impl std::str::FromStr for RateConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "three-d-equivalent" | "3d" => Ok(RateConvention::ThreeDEquivalent),
            "in-plane" | "q" => Ok(RateConvention::InPlane),
            other => Err(format!("unknown rate convention `{other}`")),
        }
    }
}

/// Numerical controls. `None` fields are resolved from the physics inputs by
/// [`NumericsParams::resolve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsParams {
    pub r_min: f64,
    /// Radius of the matching sphere.
    pub r_max: Option<f64>,
    /// End of the outer single-channel dipole-tail propagation.
    pub rho_max: Option<f64>,
    pub l_max: Option<u32>,
    /// Number of parity-allowed asymptotic z-channels.
    pub n_z: u32,
    pub points_per_wavelength: f64,
    /// Cap on the radial step.
    pub h_max: f64,
    pub theta_order: Option<usize>,
    /// Relative residual above which matching is flagged as not converged.
    pub match_tol: f64,
    /// Closed z-channels whose polar-cap leakage on the matching sphere
    /// exceeds this are left out of the match.
    pub closed_leak_tol: f64,
    pub rate_convention: RateConvention,
    pub boundary_form: BoundaryForm,
}

impl Default for NumericsParams {
    fn default() -> Self {
        Self {
            r_min: 0.2,
            r_max: None,
            rho_max: None,
            l_max: None,
            n_z: 8,
            points_per_wavelength: 48.0,
            h_max: 0.05,
            theta_order: None,
            match_tol: 1e-4,
            closed_leak_tol: 1e-3,
            rate_convention: RateConvention::ThreeDEquivalent,
            boundary_form: BoundaryForm::Bessel,
        }
    }
}

/// Fully resolved numerical controls for one parameter point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub r_min: f64,
    pub r_max: f64,
    pub rho_max: f64,
    pub l_max: u32,
    pub n_z: u32,
    pub points_per_wavelength: f64,
    pub h_max: f64,
    pub theta_order: usize,
    pub match_tol: f64,
    pub closed_leak_tol: f64,
    pub rate_convention: RateConvention,
    pub boundary_form: BoundaryForm,
}

impl NumericsParams {
    pub fn resolve(&self, params: &ModelParams) -> Resolved {
        let r_max = self
            .r_max
            .unwrap_or_else(|| (8.0 * params.a_h).max(10.0));
        let rho_max = self
            .rho_max
            .unwrap_or_else(|| (2.0 * r_max).max(50.0 / params.q));
        let m = params.m.unsigned_abs();
        let l_max = self
            .l_max
            .unwrap_or_else(|| m + 2 * (1.5 * r_max / params.a_h).ceil() as u32 + 8)
            .max(m + 1);
        let theta_order = self
            .theta_order
            .unwrap_or(2 * l_max as usize + 40)
            .max(2 * l_max as usize + 40);
        Resolved {
            r_min: self.r_min,
            r_max,
            rho_max: rho_max.max(r_max),
            l_max,
            n_z: self.n_z,
            points_per_wavelength: self.points_per_wavelength,
            h_max: self.h_max,
            theta_order,
            match_tol: self.match_tol,
            closed_leak_tol: self.closed_leak_tol,
            rate_convention: self.rate_convention,
            boundary_form: self.boundary_form,
        }
    }
}

/// A single failed constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub constraint: String,
    pub value: String,
}

impl Violation {
    fn new(field: &str, constraint: &str, value: impl fmt::Display) -> Self {
        Self {
            field: field.into(),
            constraint: constraint.into(),
            value: value.to_string(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} (got {})", self.field, self.constraint, self.value)
    }
}

/// Check every invariant of the inputs. Energies above excited trap
/// thresholds are allowed.
pub fn validate(params: &ModelParams, numerics: &NumericsParams) -> Vec<Violation> {
    let mut out = Vec::new();
    let finite = [
        ("s", params.s),
        ("y", params.y),
        ("a_d", params.a_d),
        ("a_h", params.a_h),
        ("q", params.q),
    ];
    for (name, v) in finite {
        if !v.is_finite() {
            out.push(Violation::new(name, "must be finite", v));
        }
    }
    if !(0.0..=1.0).contains(&params.y) {
        out.push(Violation::new("y", "y out of [0,1]", params.y));
    }
    if params.a_h.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        out.push(Violation::new("a_h", "a_h must be > 0", params.a_h));
    }
    if params.a_d.partial_cmp(&0.0) == Some(std::cmp::Ordering::Less) {
        out.push(Violation::new("a_d", "a_d must be >= 0", params.a_d));
    }
    if params.q.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        out.push(Violation::new("q", "q must be > 0", params.q));
    }
    if !params.statistics.allows(params.m, 0) {
        let constraint = match params.statistics {
            Statistics::IdenticalFermions => "exchange symmetry forbids (m+n_z) even",
            _ => "exchange symmetry forbids (m+n_z) odd",
        };
        out.push(Violation::new(
            "m",
            constraint,
            format!("m = {}, n_z = 0", params.m),
        ));
    }

    if !(numerics.r_min > 0.0) {
        out.push(Violation::new("r_min", "r_min must be > 0", numerics.r_min));
    }
    if let Some(r_max) = numerics.r_max {
        if !(r_max > numerics.r_min) {
            out.push(Violation::new("r_max", "r_min < r_max required", r_max));
        }
    }
    if let Some(rho_max) = numerics.rho_max {
        if !rho_max.is_finite() || rho_max <= 0.0 {
            out.push(Violation::new("rho_max", "rho_max must be > 0", rho_max));
        }
    }
    if let Some(l_max) = numerics.l_max {
        if (l_max as i64) < params.m.unsigned_abs() as i64 {
            out.push(Violation::new("l_max", "l_max >= |m| required", l_max));
        }
    }
    if numerics.n_z == 0 {
        out.push(Violation::new("n_z", "must be positive", numerics.n_z));
    }
    if !(numerics.points_per_wavelength > 0.0) {
        out.push(Violation::new(
            "points_per_wavelength",
            "must be positive",
            numerics.points_per_wavelength,
        ));
    }
    if !(numerics.h_max > 0.0) {
        out.push(Violation::new("h_max", "must be positive", numerics.h_max));
    }
    if numerics.theta_order == Some(0) {
        out.push(Violation::new("theta_order", "must be positive", 0));
    }
    if !(numerics.match_tol > 0.0) {
        out.push(Violation::new("match_tol", "must be positive", numerics.match_tol));
    }
    out
}
