//! Quantum-defect short-range boundary condition.
//!
//! Deep inside the van der Waals region the wave function is written as an
//! incoming WKB wave plus a reflected wave of relative amplitude
//! `(1 − y)/(1 + y)`. The phase is measured from `r = ∞` along the
//! zero-energy `−R6⁴/r⁶` wavenumber, `A(r) = R6²/(2r²) − φ`, which makes the
//! standing wave (`y = 0`) carry the scattering length `a = s ā` with
//! `s = √2 cos(φ − π/8) / sin(φ + π/8)`.

use std::f64::consts::{FRAC_PI_8, PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special;
use crate::units;

pub fn s_from_phase(phi: f64) -> f64 {
    SQRT_2 * (phi - FRAC_PI_8).cos() / (phi + FRAC_PI_8).sin()
}

/// Principal-branch inverse of [`s_from_phase`]; `s → ±∞` maps to `−π/8`
/// (mod π).
pub fn phase_from_s(s: f64) -> f64 {
    if s.is_infinite() {
        return -FRAC_PI_8;
    }
    let (sn, cs) = FRAC_PI_8.sin_cos();
    (SQRT_2 * cs - s * sn).atan2(s * cs - SQRT_2 * sn)
}

/// Local zero-energy van der Waals wavenumber `k(r) = R6²/r³`.
pub fn vdw_wavenumber(r: f64) -> f64 {
    let r6 = units::r6_over_abar();
    r6 * r6 / (r * r * r)
}

/// Reflected-to-incident amplitude ratio.
pub fn reflection(y: f64) -> f64 {
    (1.0 - y) / (1.0 + y)
}

/// Fraction of the incoming flux absorbed at short range.
pub fn absorbed_fraction(y: f64) -> f64 {
    1.0 - reflection(y).powi(2)
}

/// How the incoming and reflected short-range waves are written at `r_min`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryForm {
    /// Exact zero-energy `−R6⁴/r⁶ + ℓ(ℓ+1)/r²` waves `√r H_ν(R6²/2r²)`,
    /// `ν = (2ℓ+1)/4`, phased so that they reduce to the WKB waves for
    /// `r → 0`. Results are then independent of `r_min` for the bare vdW
    /// potential.
    #[default]
    Bessel,
    /// The leading-order WKB waves `e^{±iA}/√k`, shared by all channels.
    Wkb,
}

impl std::str::FromStr for BoundaryForm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "bessel" => Ok(BoundaryForm::Bessel),
            "wkb" => Ok(BoundaryForm::Wkb),
            other => Err(format!("unknown boundary form `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub r_min: f64,
    pub y: f64,
    pub phi: f64,
    pub form: BoundaryForm,
    /// WKB log-derivative at `r_min`, common to all channels.
    pub z: Complex64,
}

impl BoundaryCondition {
    pub fn new(r_min: f64, s: f64, y: f64) -> Result<Self> {
        Self::with_form(r_min, s, y, BoundaryForm::Wkb)
    }

    pub fn with_form(r_min: f64, s: f64, y: f64, form: BoundaryForm) -> Result<Self> {
        Self::from_phase(r_min, phase_from_s(s), y, form)
    }

    pub fn from_phase(r_min: f64, phi: f64, y: f64, form: BoundaryForm) -> Result<Self> {
        Ok(Self {
            r_min,
            y,
            phi,
            form,
            z: boundary_logderiv_phase(r_min, phi, y)?,
        })
    }

    /// Log-derivative for each partial wave in `ells`.
    pub fn channel_values(&self, ells: &[u32]) -> Result<Vec<Complex64>> {
        match self.form {
            BoundaryForm::Wkb => Ok(vec![self.z; ells.len()]),
            BoundaryForm::Bessel => ells
                .iter()
                .map(|&l| bessel_logderiv(self.r_min, l, self.phi, self.y))
                .collect(),
        }
    }
}

/// Log-derivative at `r` of `E₊ − R E₋`, where `E±` are the exact
/// zero-energy waves of partial wave `ℓ` normalized to `e^{±iA}/√k` as
/// `r → 0`.
pub fn bessel_logderiv(r: f64, l: u32, phi: f64, y: f64) -> Result<Complex64> {
    let r6 = units::r6_over_abar();
    let x = r6 * r6 / (2.0 * r * r);
    let nu = (2 * l + 1) as f64 / 4.0;
    let (j, yv, dj, dy) = special::bessel_jy(nu, x);
    let gamma = 0.5 * nu * PI + 0.25 * PI;
    let cp = Complex64::from_polar(1.0, gamma - phi);
    let cm = cp.conj();
    let rr = reflection(y);
    let h1 = Complex64::new(j, yv);
    let h2 = Complex64::new(j, -yv);
    let dh1 = Complex64::new(dj, dy);
    let dh2 = Complex64::new(dj, -dy);
    let b = cp * h1 - rr * cm * h2;
    let db = cp * dh1 - rr * cm * dh2;
    // normalize to avoid cancellation in the pole test
    let scale = (h1.norm() * (1.0 + rr)).max(1e-300);
    if b.norm() < 1e-12 * scale {
        return Err(Error::BoundaryPole { r_min: r });
    }
    let mut z = 0.5 / r + (db / b) * (-2.0 * x / r);
    if y == 0.0 {
        z.im = 0.0;
    }
    Ok(z)
}

/// Log-derivative `ψ'/ψ` of the boundary wave at `r_min`.
pub fn boundary_logderiv(r_min: f64, s: f64, y: f64) -> Result<Complex64> {
    boundary_logderiv_phase(r_min, phase_from_s(s), y)
}

pub fn boundary_logderiv_phase(r_min: f64, phi: f64, y: f64) -> Result<Complex64> {
    let r6 = units::r6_over_abar();
    let k = vdw_wavenumber(r_min);
    let a = r6 * r6 / (2.0 * r_min * r_min) - phi;
    // (e^{iA} + R e^{−iA}) / (e^{iA} − R e^{−iA}) = (1 + R e^{−2iA}) / (1 − R e^{−2iA})
    let w = reflection(y) * Complex64::from_polar(1.0, -2.0 * a);
    let den = Complex64::new(1.0, 0.0) - w;
    if den.norm() < 1e-12 {
        return Err(Error::BoundaryPole { r_min });
    }
    let ratio = (Complex64::new(1.0, 0.0) + w) / den;
    let mut z = Complex64::new(1.5 / r_min, 0.0) - Complex64::i() * k * ratio;
    if y == 0.0 {
        z.im = 0.0;
    }
    Ok(z)
}

/// Largest ratio of any non-vdW diagonal term to the vdW term at `r` for
/// `ℓ ≤ l_check`; the boundary is trustworthy when this is ≤ 1e-3.
pub fn depth_ratio(r: f64, l_check: u32, a_d: f64, a_h: f64, energy: f64) -> f64 {
    let vdw = units::r6_over_abar().powi(4) / r.powi(6);
    let cent = (l_check * (l_check + 1)) as f64 / (r * r);
    let dip = 4.0 * a_d / r.powi(3);
    let trap = r * r / a_h.powi(4);
    [cent, dip, trap, energy.abs()]
        .into_iter()
        .fold(0.0, f64::max)
        / vdw
}

/// Bessel mixing angle of the zero-energy partial wave `ℓ` that shares the
/// short-range WKB phase `φ`.
pub fn mixing_angle(l: u32, phi: f64) -> f64 {
    phi + FRAC_PI_8 - l as f64 * PI / 4.0
}

/// Zero-energy van der Waals solution `√r [cosθ J_ν(x) + sinθ Y_ν(x)]` with
/// `ν = (2ℓ+1)/4`, `x = R6²/(2r²)` and the mixing angle of
/// [`mixing_angle`], together with its radial derivative.
pub fn zero_energy_reference(r: f64, l: u32, phi: f64) -> (f64, f64) {
    let r6 = units::r6_over_abar();
    let x = r6 * r6 / (2.0 * r * r);
    let nu = (2 * l + 1) as f64 / 4.0;
    let (j, y, dj, dy) = special::bessel_jy(nu, x);
    let (st, ct) = mixing_angle(l, phi).sin_cos();
    let b = ct * j + st * y;
    let db = ct * dj + st * dy;
    let sr = r.sqrt();
    let dxdr = -2.0 * x / r;
    (sr * b, b / (2.0 * sr) + sr * db * dxdr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn phase_examples() {
        assert!(s_from_phase(5.0 * FRAC_PI_8).abs() < 1e-15);
        assert_relative_eq!(s_from_phase(FRAC_PI_8), 2.0, epsilon = 1e-14);
        assert_relative_eq!(s_from_phase(0.0), 1.0 + 1.0 / FRAC_PI_8.tan(), epsilon = 1e-14);
        assert_relative_eq!(s_from_phase(0.0), 3.41421356, epsilon = 1e-8);
        assert_relative_eq!(s_from_phase(phase_from_s(-3.7)), -3.7, epsilon = 1e-12);
        assert_relative_eq!(phase_from_s(0.0), 5.0 * FRAC_PI_8, epsilon = 1e-15);
        assert_relative_eq!(phase_from_s(f64::INFINITY), -FRAC_PI_8);
        // the pole of s(φ)
        assert!(s_from_phase(-FRAC_PI_8).abs() > 1e15);
    }

    #[test]
    fn universal_boundary() {
        let z = boundary_logderiv(0.2, 0.3, 1.0).unwrap();
        let k = vdw_wavenumber(0.2);
        assert_relative_eq!(z.re, 7.5, epsilon = 1e-12);
        assert_relative_eq!(z.im, -k, epsilon = 1e-12);
        assert_relative_eq!(k, 547.11, epsilon = 0.01);
        // independent of s when y = 1
        let z2 = boundary_logderiv(0.2, -5.0, 1.0).unwrap();
        assert_relative_eq!(z.im, z2.im, epsilon = 1e-12);
    }

    #[test]
    fn reflecting_boundary_is_real() {
        for &s in &[-4.0, -0.5, 0.0, 1.3, 7.0] {
            let z = boundary_logderiv(0.2, s, 0.0).unwrap();
            assert_eq!(z.im, 0.0);
        }
    }

    #[test]
    fn partial_reflection_numbers() {
        assert_relative_eq!(reflection(0.7), 0.3 / 1.7, epsilon = 1e-15);
        assert_relative_eq!(reflection(0.7), 0.17647, epsilon = 1e-5);
        assert_relative_eq!(reflection(0.7).powi(2), 0.031142, epsilon = 1e-6);
    }

    #[test]
    fn flux_fraction_monotone() {
        let mut prev = -1.0;
        for i in 0..=100 {
            let y = i as f64 / 100.0;
            let f = absorbed_fraction(y);
            let r = (1.0 - y) / (1.0 + y);
            assert_eq!(f, 1.0 - r * r);
            assert!(f > prev);
            prev = f;
        }
    }

    proptest! {
        #[test]
        fn absorbing_imaginary_part(s in -20.0f64..20.0, y in 0.01f64..1.0, r in 0.05f64..0.4) {
            let z = boundary_logderiv(r, s, y).unwrap();
            prop_assert!(z.im <= 0.0);
        }

        #[test]
        fn phase_round_trip(s in -50.0f64..50.0) {
            let back = s_from_phase(phase_from_s(s));
            prop_assert!((back - s).abs() <= 1e-10 * s.abs().max(1.0));
        }
    }

    #[test]
    fn boundary_flux_matches_formula() {
        // Flux ∝ Im(ψ*ψ') = |ψ|² Im Z. For ψ = (e^{iA} − R e^{−iA})/√k the
        // net inward flux is k(1 − R²)/k = 1 − R² per unit incident flux.
        let r = 0.2;
        let k = vdw_wavenumber(r);
        for &y in &[0.1, 0.5, 0.9] {
            for &s in &[-1.0, 0.4, 2.5] {
                let phi = phase_from_s(s);
                let r6 = units::r6_over_abar();
                let a = r6 * r6 / (2.0 * r * r) - phi;
                let rr = reflection(y);
                let psi = (Complex64::from_polar(1.0, a) - rr * Complex64::from_polar(1.0, -a)) / k.sqrt();
                let z = boundary_logderiv(r, s, y).unwrap();
                let flux = psi.norm_sqr() * z.im;
                assert_relative_eq!(-flux, 1.0 - rr * rr, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn reference_scattering_length() {
        // u(r) → c (r − a) at large r
        for &s in &[-2.0, 0.5, 3.41421356237] {
            let phi = phase_from_s(s);
            let r = 4000.0;
            let (u, du) = zero_energy_reference(r, 0, phi);
            let a = r - u / du;
            assert_relative_eq!(a, s, max_relative = 1e-6);
        }
    }

    #[test]
    fn reference_wronskian_constant() {
        let r6 = units::r6_over_abar();
        for &r in &[0.3, 1.0, 5.0, 50.0] {
            let x = r6 * r6 / (2.0 * r * r);
            let (j, y, dj, dy) = special::bessel_jy(0.25, x);
            let dxdr = -2.0 * x / r;
            // W[√r J(x), √r Y(x)] = r (J Y' − Y J') dx/dr = −4/π
            let w = r * (j * dy - y * dj) * dxdr;
            assert_relative_eq!(w, -4.0 / PI, max_relative = 1e-10);
        }
    }

    #[test]
    fn reference_p_wave_threshold_state_at_s2() {
        // pure J_{3/4} decays like 1/r: a p-wave state exactly at threshold
        let phi = phase_from_s(2.0);
        assert!(mixing_angle(1, phi).sin().abs() < 1e-14);
        let (u1, _) = zero_energy_reference(100.0, 1, phi);
        let (u2, _) = zero_energy_reference(200.0, 1, phi);
        assert_relative_eq!(u1 / u2, 2.0, max_relative = 1e-4);
    }

    #[test]
    fn depth_check() {
        assert!(depth_ratio(0.2, 2, 0.0, 1.7, 0.35) <= 1e-3);
        assert!(depth_ratio(1.0, 3, 0.0, 1.7, 0.35) > 1e-3);
    }

    #[test]
    fn bessel_form_standing_wave_is_reference_solution() {
        for &l in &[0u32, 1, 3] {
            for &s in &[-2.0, 0.5, 2.0] {
                let phi = phase_from_s(s);
                let (u, du) = zero_energy_reference(0.2, l, phi);
                let z = bessel_logderiv(0.2, l, phi, 0.0).unwrap();
                assert_relative_eq!(z.re, du / u, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn bessel_form_approaches_wkb_deep_inside() {
        // leading correction is O(r²) relative to k
        let phi = phase_from_s(0.7);
        let r = 0.03;
        let zw = boundary_logderiv_phase(r, phi, 0.4).unwrap();
        let zb = bessel_logderiv(r, 0, phi, 0.4).unwrap();
        assert!((zw - zb).norm() / zw.norm() < 1e-3);
    }

    #[test]
    fn bessel_form_flux() {
        // |ψ|² Im Z is r-independent and equals −(1 − R²) in WKB normalization
        let phi = phase_from_s(-1.2);
        let y = 0.35;
        let rr = reflection(y);
        let flux = |r: f64, l: u32| {
            let r6 = units::r6_over_abar();
            let x = r6 * r6 / (2.0 * r * r);
            let nu = (2 * l + 1) as f64 / 4.0;
            let (j, yv, _, _) = special::bessel_jy(nu, x);
            let g = 0.5 * nu * PI + 0.25 * PI;
            let cp = Complex64::from_polar(1.0, g - phi);
            let psi = (cp * Complex64::new(j, yv) - rr * cp.conj() * Complex64::new(j, -yv))
                * (PI * r / 4.0).sqrt();
            psi.norm_sqr() * bessel_logderiv(r, l, phi, y).unwrap().im
        };
        for &l in &[0u32, 2] {
            for &r in &[0.1, 0.2, 0.6] {
                assert_relative_eq!(-flux(r, l), 1.0 - rr * rr, max_relative = 1e-9);
            }
        }
    }
}
