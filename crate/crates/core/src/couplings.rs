//! Channel-coupling potential in the spherical partial-wave basis.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{self, ladder};
use crate::units::{self, ModelParams};

/// Partial waves `ℓ ∈ {ℓ_0, ℓ_0 + 2, …} ≤ ℓ_max` of one parity at fixed `m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelBasis {
    pub m: i32,
    /// `0` for even `ℓ`, `1` for odd `ℓ`.
    pub parity: u32,
    pub ells: Vec<u32>,
}

impl ChannelBasis {
    pub fn new(m: i32, parity: u32, l_max: u32) -> Self {
        let am = m.unsigned_abs();
        let l0 = if am % 2 == parity % 2 { am } else { am + 1 };
        let ells = (l0..=l_max).step_by(2).collect();
        Self {
            m,
            parity: parity % 2,
            ells,
        }
    }

    /// The single partial wave `ℓ` at projection `m`, as used by the
    /// free-space reference solver.
    pub fn single(m: i32, l: u32) -> Self {
        Self {
            m,
            parity: l % 2,
            ells: vec![l],
        }
    }

    pub fn for_params(params: &ModelParams, l_max: u32) -> Self {
        Self::new(params.m, params.ell_parity(), l_max)
    }

    pub fn len(&self) -> usize {
        self.ells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ells.is_empty()
    }

    pub fn abs_m(&self) -> u32 {
        self.m.unsigned_abs()
    }

    pub fn l_max(&self) -> u32 {
        self.ells.last().copied().unwrap_or(0)
    }
}

fn check_m(l_row: u32, l_col: u32, m: i32) -> Result<u32> {
    let am = m.unsigned_abs();
    if am > l_row.min(l_col) {
        return Err(Error::Domain(format!(
            "|m| = {am} exceeds min(l', l) = {}",
            l_row.min(l_col)
        )));
    }
    Ok(am)
}

/// `⟨ℓ'm| cos²θ |ℓm⟩`, built from the exact `cosθ` ladder.
pub fn cos2_element(l_row: u32, l_col: u32, m: i32) -> Result<f64> {
    let am = check_m(l_row, l_col, m)?;
    let v = match l_row as i64 - l_col as i64 {
        0 => {
            let l = l_col;
            ladder(l + 1, am).powi(2) + ladder(l, am).powi(2)
        }
        2 => ladder(l_col + 1, am) * ladder(l_col + 2, am),
        -2 => ladder(l_row + 1, am) * ladder(l_row + 2, am),
        _ => 0.0,
    };
    Ok(v)
}

/// `⟨ℓ'm| P₂(cosθ) |ℓm⟩ = (3⟨cos²θ⟩ − δ)/2`.
pub fn p2_element(l_row: u32, l_col: u32, m: i32) -> Result<f64> {
    let c = cos2_element(l_row, l_col, m)?;
    let delta = if l_row == l_col { 1.0 } else { 0.0 };
    Ok(0.5 * (3.0 * c - delta))
}

/// Which pieces of the interaction are active.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Terms {
    pub vdw: bool,
    pub dipole: bool,
    pub trap: bool,
}

impl Default for Terms {
    fn default() -> Self {
        Self {
            vdw: true,
            dipole: true,
            trap: true,
        }
    }
}

/// Precomputed angular matrices; evaluates `W(r)` for any radius.
#[derive(Clone, Debug)]
pub struct Potential {
    pub basis: ChannelBasis,
    centrifugal: Vec<f64>,
    p2: DMatrix<f64>,
    cos2: DMatrix<f64>,
    c6: f64,
    a_d: f64,
    inv_ah4: f64,
}

impl Potential {
    pub fn new(basis: ChannelBasis, params: &ModelParams, terms: Terms) -> Self {
        let n = basis.len();
        let mut p2 = DMatrix::zeros(n, n);
        let mut cos2 = DMatrix::zeros(n, n);
        for (i, &li) in basis.ells.iter().enumerate() {
            for (j, &lj) in basis.ells.iter().enumerate() {
                if li.abs_diff(lj) <= 2 {
                    p2[(i, j)] = p2_element(li, lj, basis.m).expect("basis respects |m| <= l");
                    cos2[(i, j)] = cos2_element(li, lj, basis.m).expect("basis respects |m| <= l");
                }
            }
        }
        let centrifugal = basis.ells.iter().map(|&l| (l * (l + 1)) as f64).collect();
        Self {
            basis,
            centrifugal,
            p2,
            cos2,
            c6: if terms.vdw {
                units::r6_over_abar().powi(4)
            } else {
                0.0
            },
            a_d: if terms.dipole { params.a_d } else { 0.0 },
            inv_ah4: if terms.trap {
                params.a_h.powi(-4)
            } else {
                0.0
            },
        }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// `W(r)` in `E_a`, written into `out`.
    pub fn fill(&self, r: f64, out: &mut DMatrix<f64>) {
        let r2 = r * r;
        let dip = -4.0 * self.a_d / (r2 * r);
        let trap = r2 * self.inv_ah4;
        let diag_common = -self.c6 / (r2 * r2 * r2);
        out.copy_from(&self.p2);
        *out *= dip;
        out.zip_apply(&self.cos2, |w, c| *w += trap * c);
        for (i, &cent) in self.centrifugal.iter().enumerate() {
            out[(i, i)] += cent / r2 + diag_common;
        }
    }

    pub fn matrix(&self, r: f64) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.len(), self.len());
        self.fill(r, &mut w);
        w
    }

    /// Largest `|W_ii(r) − e|`, used for the local step size.
    pub fn max_local_wavenumber_sq(&self, r: f64, e: f64) -> f64 {
        let r2 = r * r;
        let dip = -4.0 * self.a_d / (r2 * r);
        let trap = r2 * self.inv_ah4;
        let vdw = -self.c6 / (r2 * r2 * r2);
        (0..self.len())
            .map(|i| {
                (self.centrifugal[i] / r2 + vdw + dip * self.p2[(i, i)] + trap * self.cos2[(i, i)] - e)
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Value and derivative of the normalized oscillator eigenfunction `φ_n(z)`.
pub fn oscillator_fn(n: u32, z: f64, a_h: f64) -> (f64, f64) {
    special::oscillator_functions(n, z, a_h)[n as usize]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{gauss_legendre, legendre_normalized};
    use crate::units::Statistics;
    use approx::assert_relative_eq;

    /// Angular matrix element by direct Gauss–Legendre quadrature of the
    /// normalized associated Legendre functions.
    fn quadrature(l_row: u32, l_col: u32, m: u32, f: impl Fn(f64) -> f64) -> f64 {
        let (x, w) = gauss_legendre(64);
        let lm = l_row.max(l_col);
        x.iter()
            .zip(&w)
            .map(|(&x, &w)| {
                let t = legendre_normalized(m, lm, x);
                w * t[(l_row - m) as usize] * t[(l_col - m) as usize] * f(x)
            })
            .sum()
    }

    fn fact(n: i64) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Wigner 3-j symbol from the Racah formula.
    fn three_j(j1: i64, j2: i64, j3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
        if m1 + m2 + m3 != 0 || j3 < (j1 - j2).abs() || j3 > j1 + j2 {
            return 0.0;
        }
        let tri = fact(j1 + j2 - j3) * fact(j1 - j2 + j3) * fact(-j1 + j2 + j3) / fact(j1 + j2 + j3 + 1);
        let pre = (tri
            * fact(j1 + m1)
            * fact(j1 - m1)
            * fact(j2 + m2)
            * fact(j2 - m2)
            * fact(j3 + m3)
            * fact(j3 - m3))
            .sqrt();
        let mut sum = 0.0;
        for k in 0..=(j1 + j2 + j3) {
            let d = [
                k,
                j3 - j2 + k + m1,
                j3 - j1 + k - m2,
                j1 + j2 - j3 - k,
                j1 - k - m1,
                j2 - k + m2,
            ];
            if d.iter().any(|&v| v < 0) {
                continue;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign / d.iter().map(|&v| fact(v)).product::<f64>();
        }
        let phase = if (j1 - j2 - m3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        phase * pre * sum
    }

    /// `⟨ℓ'm|P₂|ℓm⟩ = (−1)^m √((2ℓ+1)(2ℓ'+1)) (ℓ' 2 ℓ; 0 0 0)(ℓ' 2 ℓ; −m 0 m)`.
    fn p2_three_j(lr: i64, lc: i64, m: i64) -> f64 {
        let phase = if m % 2 == 0 { 1.0 } else { -1.0 };
        phase
            * (((2 * lc + 1) * (2 * lr + 1)) as f64).sqrt()
            * three_j(lr, 2, lc, 0, 0, 0)
            * three_j(lr, 2, lc, -m, 0, m)
    }

    #[test]
    fn three_j_route_agrees() {
        for m in 0..4i64 {
            for lc in m..10 {
                for lr in m..10 {
                    let v = p2_element(lr as u32, lc as u32, m as i32).unwrap();
                    assert!((v - p2_three_j(lr, lc, m)).abs() < 1e-12, "({lr},{lc},{m})");
                }
            }
        }
    }

    fn p2(x: f64) -> f64 {
        0.5 * (3.0 * x * x - 1.0)
    }

    #[test]
    fn p2_examples() {
        assert!(p2_element(0, 0, 0).unwrap().abs() < 1e-15);
        assert_relative_eq!(p2_element(1, 1, 0).unwrap(), 0.4, epsilon = 1e-14);
        assert_relative_eq!(p2_element(1, 1, 1).unwrap(), -0.2, epsilon = 1e-14);
        let q = quadrature(3, 1, 1, p2);
        assert_relative_eq!(p2_element(3, 1, 1).unwrap(), q, epsilon = 1e-12);
        assert_relative_eq!(p2_element(3, 1, 1).unwrap(), p2_three_j(3, 1, 1), epsilon = 1e-13);
    }

    #[test]
    fn cos2_examples() {
        assert_relative_eq!(cos2_element(0, 0, 0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(cos2_element(1, 1, 1).unwrap(), 0.2, epsilon = 1e-15);
        assert_relative_eq!(cos2_element(1, 1, 0).unwrap(), 0.6, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_closed_form() {
        for l in 0..12u32 {
            for m in 0..=l as i32 {
                let (lf, mf) = (l as f64, m as f64);
                let want = (lf * (lf + 1.0) - 3.0 * mf * mf) / ((2.0 * lf - 1.0) * (2.0 * lf + 3.0));
                assert_relative_eq!(p2_element(l, l, m).unwrap(), want, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn all_elements_match_quadrature() {
        for m in 0..4u32 {
            for lc in m..16 {
                for lr in m..16 {
                    let q = quadrature(lr, lc, m, p2);
                    let v = p2_element(lr, lc, m as i32).unwrap();
                    assert!((q - v).abs() < 1e-10, "P2 ({lr},{lc},{m}): {v} vs {q}");
                    let q = quadrature(lr, lc, m, |x| x * x);
                    let v = cos2_element(lr, lc, m as i32).unwrap();
                    assert!((q - v).abs() < 1e-10, "cos2 ({lr},{lc},{m}): {v} vs {q}");
                }
            }
        }
    }

    #[test]
    fn domain_error() {
        assert!(matches!(p2_element(1, 1, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn basis_construction() {
        let b = ChannelBasis::new(1, 1, 9);
        assert_eq!(b.ells, vec![1, 3, 5, 7, 9]);
        let b = ChannelBasis::new(1, 0, 8);
        assert_eq!(b.ells, vec![2, 4, 6, 8]);
        let b = ChannelBasis::new(0, 0, 4);
        assert_eq!(b.ells, vec![0, 2, 4]);
    }

    fn params(a_d: f64, a_h: f64) -> ModelParams {
        ModelParams {
            a_d,
            a_h,
            statistics: Statistics::IdenticalFermions,
            ..ModelParams::default()
        }
    }

    #[test]
    fn single_channel_vdw_only() {
        let p = params(0.0, 1e9);
        let pot = Potential::new(ChannelBasis::new(1, 1, 1), &p, Terms::default());
        let w = pot.matrix(1.0);
        let r6 = crate::units::r6_over_abar();
        assert_relative_eq!(w[(0, 0)], 2.0 - r6.powi(4), epsilon = 1e-12);
        assert_relative_eq!(w[(0, 0)], -17.158, epsilon = 1e-3);
    }

    #[test]
    fn dipole_and_trap_diagonals() {
        let terms = Terms {
            vdw: false,
            dipole: true,
            trap: false,
        };
        let r = 2.5;
        let pot = Potential::new(ChannelBasis::new(1, 1, 1), &params(0.7, 1.7), terms);
        let w = pot.matrix(r);
        assert_relative_eq!(w[(0, 0)] - 2.0 / (r * r), 0.8 * 0.7 / r.powi(3), epsilon = 1e-14);

        let terms = Terms {
            vdw: false,
            dipole: false,
            trap: true,
        };
        let pot = Potential::new(ChannelBasis::new(1, 1, 1), &params(0.7, 1.7), terms);
        let w = pot.matrix(r);
        assert_relative_eq!(w[(0, 0)] - 2.0 / (r * r), r * r / (5.0 * 1.7f64.powi(4)), epsilon = 1e-14);
    }

    #[test]
    fn symmetric_banded() {
        let pot = Potential::new(ChannelBasis::new(1, 1, 41), &params(2.0, 1.7), Terms::default());
        for &r in &[0.3, 1.0, 7.7, 20.0] {
            let w = pot.matrix(r);
            for i in 0..w.nrows() {
                for j in 0..w.ncols() {
                    assert_eq!(w[(i, j)], w[(j, i)]);
                    if i.abs_diff(j) > 1 {
                        assert_eq!(w[(i, j)], 0.0);
                    }
                }
            }
        }
        let free = Potential::new(
            ChannelBasis::new(1, 1, 21),
            &params(0.0, 1.7),
            Terms {
                vdw: true,
                dipole: false,
                trap: false,
            },
        );
        let w = free.matrix(3.0);
        assert!(w.is_square());
        for i in 0..w.nrows() {
            for j in 0..w.ncols() {
                if i != j {
                    assert_eq!(w[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn oscillator_ground_state() {
        let a_h = 1.7;
        let (v, _) = oscillator_fn(0, 0.0, a_h);
        assert_relative_eq!(v, (std::f64::consts::PI * a_h * a_h).powf(-0.25), epsilon = 1e-15);
        assert_eq!(oscillator_fn(1, 0.0, a_h).0, 0.0);
    }
}
