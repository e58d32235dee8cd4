//! Complex scattering lengths and the rate constants built from them.
//!
//! Rates are in units of `ħā/μ`. With wave vector `k` the formulas are
//! `f = 1/(1 + k²|ã|² + 2kβ)`, `K_el = 4πg k|ã|² f` and `K_re = 4πg β f`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `ã = (1/ik)(1 − S)/(1 + S)`; infinite at `S = −1`.
pub fn complex_scattering_length(s00: Complex64, k: f64) -> Complex64 {
    let den = Complex64::i() * k * (1.0 + s00);
    if den.norm() == 0.0 {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    (1.0 - s00) / den
}

/// Inverse of [`complex_scattering_length`].
pub fn smatrix_element(a: Complex64, k: f64) -> Complex64 {
    let ika = Complex64::i() * k * a;
    (1.0 - ika) / (1.0 + ika)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub k_el: f64,
    pub k_re: f64,
    pub f: f64,
}

pub fn rates(a: Complex64, k: f64, g: f64) -> Rates {
    if !a.re.is_finite() || !a.im.is_finite() {
        // k²|ã|² dominates f, so f → 0, K_el → 4πg/k and K_re → 0
        return Rates {
            k_el: 4.0 * PI * g / k,
            k_re: 0.0,
            f: 0.0,
        };
    }
    let beta = -a.im;
    let f = 1.0 / (1.0 + k * k * a.norm_sqr() + 2.0 * k * beta);
    Rates {
        k_el: 4.0 * PI * g * k * a.norm_sqr() * f,
        k_re: 4.0 * PI * g * beta * f,
        f,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dimension {
    Three,
    Two,
    One,
}

impl Dimension {
    pub fn from_count(n: u32) -> Result<Self> {
        match n {
            3 => Ok(Dimension::Three),
            2 => Ok(Dimension::Two),
            1 => Ok(Dimension::One),
            _ => Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {n}"))),
        }
    }
}

/// Universal rate `K = 4π g_j L_j` (units `ħā/μ`) with its factors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniversalRate {
    pub g_j: f64,
    pub l_j: f64,
    pub rate: f64,
}

/// Universal reactive rate for even (`j = 0`) or odd (`j = 1`) waves in
/// `N` dimensions at wave vector `kappa` (in `1/ā`). The odd case needs the
/// calibrated p-wave length `ā₁`.
pub fn universal_rates(kappa: f64, dim: Dimension, j: u32, abar1: Option<f64>) -> Result<UniversalRate> {
    let sqrt_pi = PI.sqrt();
    let (g_j, l_j) = match (j, dim) {
        (0, Dimension::Three) => (1.0 / PI, 1.0),
        (0, Dimension::Two) => (2.0 / PI, sqrt_pi),
        (0, Dimension::One) => (2.0, 2.0),
        (1, d) => {
            let a1 = abar1.ok_or(Error::Uncalibrated)?;
            let k2 = kappa * kappa * a1;
            match d {
                Dimension::Three => (1.0 / PI, k2),
                Dimension::Two => (4.0 / PI, 1.5 * sqrt_pi * k2),
                Dimension::One => (6.0, 6.0 * k2),
            }
        }
        _ => return Err(Error::Domain(format!("parity j must be 0 or 1, got {j}"))),
    };
    Ok(UniversalRate {
        g_j,
        l_j,
        rate: 4.0 * PI * g_j * l_j,
    })
}

/// `β` that reproduces the universal rate through `K_re = 4πgβ` at `f = 1`,
/// i.e. `β_univ = g_j L_j / g`.
pub fn universal_beta(kappa: f64, dim: Dimension, j: u32, g: f64, abar1: Option<f64>) -> Result<f64> {
    let u = universal_rates(kappa, dim, j, abar1)?;
    Ok(u.g_j * u.l_j / g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn scattering_length_examples() {
        assert_eq!(complex_scattering_length(Complex64::new(1.0, 0.0), 0.3), Complex64::new(0.0, 0.0));
        let a = complex_scattering_length(Complex64::new(0.0, 0.0), 1.0);
        assert_relative_eq!(a.re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(a.im, -1.0, epsilon = 1e-15);
        let delta = 0.37f64;
        let q = 0.05;
        let a = complex_scattering_length(Complex64::from_polar(1.0, 2.0 * delta), q);
        assert_relative_eq!(a.re, -delta.tan() / q, max_relative = 1e-12);
        assert!(a.im.abs() < 1e-12);
        assert!(complex_scattering_length(Complex64::new(-1.0, 0.0), q).re.is_infinite());
    }

    #[test]
    fn rates_example() {
        let r = rates(Complex64::new(1.0, -1.0), 0.05, 2.0);
        assert_relative_eq!(r.f, 1.0 / 1.105, epsilon = 1e-15);
        assert_relative_eq!(r.f, 0.90498, epsilon = 1e-5);
        assert_relative_eq!(r.k_el, 4.0 * PI * 0.2 / 1.105, max_relative = 1e-14);
        assert_relative_eq!(r.k_re, 4.0 * PI * 2.0 / 1.105, max_relative = 1e-14);
        assert_relative_eq!(r.k_el, 2.2745, epsilon = 2e-4);
        assert_relative_eq!(r.k_re, 22.745, epsilon = 2e-3);
    }

    #[test]
    fn f_tends_to_one() {
        let a = Complex64::new(3.0, -0.4);
        assert!(1.0 - rates(a, 1e-7, 2.0).f < 1e-6);
        assert_eq!(rates(Complex64::new(2.0, 0.0), 0.1, 1.0).k_re, 0.0);
    }

    #[test]
    fn table_constants() {
        let u = universal_rates(0.05, Dimension::Two, 0, None).unwrap();
        assert_relative_eq!(u.g_j, 2.0 / PI);
        assert_relative_eq!(u.l_j, PI.sqrt());
        let u = universal_rates(0.05, Dimension::Two, 1, Some(1.0)).unwrap();
        assert_relative_eq!(u.l_j, 1.5 * PI.sqrt() * 0.0025, max_relative = 1e-15);
        assert!(matches!(
            universal_rates(0.05, Dimension::Two, 1, None),
            Err(Error::Uncalibrated)
        ));
        let b = universal_beta(0.05, Dimension::Two, 1, 2.0, Some(1.0643)).unwrap();
        assert_relative_eq!(b, 3.0 / PI.sqrt() * 0.0025 * 1.0643, max_relative = 1e-14);
    }

    #[test]
    fn loss_identity() {
        // 1 − |S|² = 4kβf
        let a = Complex64::new(-0.8, -0.35);
        let k = 0.4;
        let s = smatrix_element(a, k);
        let r = rates(a, k, 1.0);
        assert_relative_eq!(1.0 - s.norm_sqr(), 4.0 * k * 0.35 * r.f, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn rate_invariants(alpha in -50.0f64..50.0, beta in 0.0f64..20.0, k in 1e-4f64..2.0) {
            let r = rates(Complex64::new(alpha, -beta), k, 2.0);
            prop_assert!(r.f > 0.0 && r.f <= 1.0);
            prop_assert!(r.k_re >= 0.0);
            prop_assert!(r.k_el >= 0.0);
        }

        #[test]
        fn scattering_length_round_trip(alpha in -20.0f64..20.0, beta in 0.0f64..5.0, k in 1e-3f64..1.0) {
            let a = Complex64::new(alpha, -beta);
            let back = complex_scattering_length(smatrix_element(a, k), k);
            prop_assert!((back - a).norm() <= 1e-9 * a.norm().max(1.0));
        }
    }
}
