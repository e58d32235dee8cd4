//! Matching the spherical log-derivative to trap channels.
//!
//! Outside the interaction region the solutions factorize as
//! `φ_n(z)·B_m(q_n ρ)·e^{imϕ}` with `B ∈ {J, Y}` for open and `K` for closed
//! z-channels. Their partial-wave projections on the sphere `r = R` give an
//! overdetermined linear system for the reactance matrix `K`, solved in the
//! least-squares sense. Open channels are then carried further out through
//! the residual dipole and van der Waals tails.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::couplings::{ChannelBasis, Terms};
use crate::error::{Error, Result};
use crate::propagator::CMatrix;
use crate::special::{self, gauss_legendre, legendre_normalized};
use crate::units::{self, ModelParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapChannel {
    pub n_z: u32,
    pub threshold: f64,
    pub open: bool,
    /// `q_n = √(E − ε_n)` when open, `κ_n = √(ε_n − E)` when closed.
    pub wavenumber: f64,
}

/// Parity-allowed z-channels `n_z = n_0, n_0 + 2, …` at fixed `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticChannels {
    pub m: i32,
    pub a_h: f64,
    pub energy: f64,
    pub channels: Vec<TrapChannel>,
}

impl AsymptoticChannels {
    pub fn new(m: i32, first_n: u32, count: u32, a_h: f64, energy: f64) -> Result<Self> {
        let mut channels = Vec::with_capacity(count as usize);
        for i in 0..count {
            let n_z = first_n + 2 * i;
            let threshold = (2 * n_z + 1) as f64 / (a_h * a_h);
            let d = energy - threshold;
            channels.push(TrapChannel {
                n_z,
                threshold,
                open: d > 0.0,
                wavenumber: d.abs().sqrt(),
            });
        }
        if !channels.iter().any(|c| c.open) {
            return Err(Error::NoOpenChannel { energy });
        }
        // open channels first, each group ordered by n_z
        channels.sort_by_key(|c| (!c.open, c.n_z));
        Ok(Self {
            m,
            a_h,
            energy,
            channels,
        })
    }

    /// Channels compatible with the spherical basis parity:
    /// `n_z ≡ ℓ + m (mod 2)`.
    pub fn for_basis(basis: &ChannelBasis, count: u32, a_h: f64, energy: f64) -> Result<Self> {
        let first = (basis.parity + basis.abs_m()) % 2;
        Self::new(basis.m, first, count, a_h, energy)
    }

    pub fn n_open(&self) -> usize {
        self.channels.iter().filter(|c| c.open).count()
    }

    pub fn n_closed(&self) -> usize {
        self.channels.len() - self.n_open()
    }

    pub fn open(&self) -> impl Iterator<Item = &TrapChannel> {
        self.channels.iter().filter(|c| c.open)
    }

    pub fn closed(&self) -> impl Iterator<Item = &TrapChannel> {
        self.channels.iter().filter(|c| !c.open)
    }

    /// Drops closed channels whose function `φ_n(z) K_m(κρ)/K_m(κR)` is not
    /// small in the polar caps `|z| > R/√2` of the matching sphere, where
    /// the `K_m` singularity on the z axis makes it an invalid exterior
    /// solution. Returns the number of channels removed.
    pub fn prune_closed(&mut self, radius: f64, tol: f64) -> usize {
        let m = self.m.unsigned_abs() as f64;
        let a_h = self.a_h;
        let (xs, _) = gauss_legendre(400);
        let before = self.channels.len();
        self.channels.retain(|c| {
            if c.open {
                return true;
            }
            let k_r = special::bessel_k(m, c.wavenumber * radius).0;
            let peak = special::oscillator_functions(c.n_z, 0.0, a_h)
                .iter()
                .map(|p| p.0.abs())
                .fold(0.0, f64::max)
                .max((a_h).powf(-0.5) * 0.3);
            let leak = xs
                .iter()
                .filter(|x| x.abs() > std::f64::consts::FRAC_1_SQRT_2)
                .map(|&x| {
                    let phi = special::oscillator_functions(c.n_z, radius * x, a_h)[c.n_z as usize].0;
                    let rho = radius * (1.0 - x * x).sqrt();
                    (phi * special::bessel_k(m, c.wavenumber * rho).0 / k_r).abs()
                })
                .fold(0.0, f64::max);
            leak <= tol * peak
        });
        before - self.channels.len()
    }
}

/// Projections of the channel functions on the sphere, `ℓ` rows by channel
/// columns, with their radial derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelVectors {
    pub radius: f64,
    pub fj: DMatrix<f64>,
    pub fy: DMatrix<f64>,
    pub fk: DMatrix<f64>,
    pub dfj: DMatrix<f64>,
    pub dfy: DMatrix<f64>,
    pub dfk: DMatrix<f64>,
    pub order: usize,
}

impl ChannelVectors {
    fn max_change(&self, other: &Self) -> f64 {
        let pairs = [
            (&self.fj, &other.fj),
            (&self.fy, &other.fy),
            (&self.fk, &other.fk),
            (&self.dfj, &other.dfj),
            (&self.dfy, &other.dfy),
            (&self.dfk, &other.dfk),
        ];
        pairs
            .iter()
            .filter(|(a, _)| !a.is_empty())
            .map(|(a, b)| {
                let scale = a.amax().max(1e-300);
                (*a - *b).amax() / scale
            })
            .fold(0.0, f64::max)
    }
}

/// Radial factor and derivative of a channel at `ρ`.
fn radial(ch: &TrapChannel, m: u32, rho: f64, closed_scale: f64) -> (f64, f64, f64, f64) {
    let nu = m as f64;
    if ch.open {
        let q = ch.wavenumber;
        let (j, y, dj, dy) = special::bessel_jy(nu, q * rho);
        (j, y, q * dj, q * dy)
    } else {
        let k = ch.wavenumber;
        let (kv, dk) = special::bessel_k(nu, k * rho);
        (kv / closed_scale, 0.0, k * dk / closed_scale, 0.0)
    }
}

/// Projects every channel on the sphere `r = R` with a Gauss–Legendre rule
/// of the given order, without a convergence check.
pub fn channel_vectors_at_order(
    radius: f64,
    basis: &ChannelBasis,
    channels: &AsymptoticChannels,
    order: usize,
) -> ChannelVectors {
    let m = basis.abs_m();
    let nsph = basis.len();
    let no = channels.n_open();
    let nc = channels.n_closed();
    let n_max = channels.channels.iter().map(|c| c.n_z).max().unwrap_or(0);
    let a_h = channels.a_h;
    let (xs, ws) = gauss_legendre(order);
    let closed_scale: Vec<f64> = channels
        .closed()
        .map(|c| special::bessel_k(m as f64, c.wavenumber * radius).0)
        .collect();

    let mut g = [
        DMatrix::<f64>::zeros(nsph, no),
        DMatrix::zeros(nsph, no),
        DMatrix::zeros(nsph, nc),
    ];
    let mut dg = g.clone();

    for (&x, &w) in xs.iter().zip(&ws) {
        let s = (1.0 - x * x).sqrt();
        let z = radius * x;
        let rho = radius * s;
        let theta = legendre_normalized(m, basis.l_max(), x);
        let osc = special::oscillator_functions(n_max, z, a_h);
        let mut open_i = 0;
        let mut closed_i = 0;
        for ch in &channels.channels {
            let (phi, dphi) = osc[ch.n_z as usize];
            let scale = if ch.open { 1.0 } else { closed_scale[closed_i] };
            let (b1, b2, db1, db2) = radial(ch, m, rho, scale);
            // value and ∂/∂R at fixed direction
            let v1 = phi * b1;
            let d1 = dphi * x * b1 + phi * db1 * s;
            let v2 = phi * b2;
            let d2 = dphi * x * b2 + phi * db2 * s;
            for (row, &l) in basis.ells.iter().enumerate() {
                let t = w * theta[(l - m) as usize];
                if ch.open {
                    g[0][(row, open_i)] += t * v1;
                    dg[0][(row, open_i)] += t * d1;
                    g[1][(row, open_i)] += t * v2;
                    dg[1][(row, open_i)] += t * d2;
                } else {
                    g[2][(row, closed_i)] += t * v1;
                    dg[2][(row, closed_i)] += t * d1;
                }
            }
            if ch.open {
                open_i += 1;
            } else {
                closed_i += 1;
            }
        }
    }
    // F = R g, F' = g + R g'
    let [gj, gy, gk] = g;
    let [dgj, dgy, dgk] = dg;
    ChannelVectors {
        radius,
        dfj: &gj + &dgj * radius,
        dfy: &gy + &dgy * radius,
        dfk: &gk + &dgk * radius,
        fj: gj * radius,
        fy: gy * radius,
        fk: gk * radius,
        order,
    }
}

/// Channel projections with a node-doubling check: fails if doubling the
/// quadrature order changes any entry by more than `tol` relative to the
/// largest entry of its matrix.
pub fn asymptotic_channel_vectors(
    radius: f64,
    basis: &ChannelBasis,
    channels: &AsymptoticChannels,
    order: usize,
    tol: f64,
) -> Result<ChannelVectors> {
    let order = order.max(2 * basis.l_max() as usize + 40);
    let a = channel_vectors_at_order(radius, basis, channels, order);
    let b = channel_vectors_at_order(radius, basis, channels, 2 * order);
    let change = a.max_change(&b);
    if change > tol {
        return Err(Error::Quadrature { change });
    }
    Ok(b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SMatrixResult {
    /// Open-channel S-matrix, ordered as the open channels.
    pub s: CMatrix,
    pub k: CMatrix,
    /// `‖A X − B‖` of the least-squares match relative to
    /// `‖P F^J‖ + ‖Q F^J'‖`, the size of the entrance wave on the sphere.
    pub residual: f64,
    pub condition: f64,
    /// `‖K − Kᵀ‖ / ‖K‖`.
    pub asymmetry: f64,
    /// `(I − iK)` is close to singular.
    pub near_pole: bool,
}

impl SMatrixResult {
    /// `1 − Σ_j |S_{j0}|²` for entrance column `0`.
    pub fn loss(&self) -> f64 {
        1.0 - self.s.column(0).iter().map(|z| z.norm_sqr()).sum::<f64>()
    }
}

fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

/// How the matching equations are written.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MatchForm {
    /// `(F^J − 𝓡 F^J') = (F^Y − 𝓡 F^Y')K + (F^K − 𝓡 F^K')D` with the
    /// R-matrix `𝓡 = Y^{-1}`; rows stay bounded for strongly closed waves.
    #[default]
    RMatrix,
    /// `(Y F^J − F^J') = (Y F^Y − F^Y')K + (Y F^K − F^K')D`.
    LogDerivative,
}

/// Solves the matching equations for `K` in the least-squares sense.
pub fn extract_smatrix(y: &CMatrix, v: &ChannelVectors) -> Result<SMatrixResult> {
    extract_smatrix_with(y, v, MatchForm::RMatrix)
}

pub fn extract_smatrix_with(y: &CMatrix, v: &ChannelVectors, form: MatchForm) -> Result<SMatrixResult> {
    let nsph = y.nrows();
    let no = v.fj.ncols();
    let nc = v.fk.ncols();
    if nsph < no + nc {
        return Err(Error::Domain(format!(
            "{nsph} partial waves cannot match {} channels",
            no + nc
        )));
    }
    let (p, q) = match form {
        MatchForm::LogDerivative => (y.clone(), CMatrix::identity(nsph, nsph)),
        MatchForm::RMatrix => {
            let r = y
                .clone()
                .try_inverse()
                .ok_or(Error::Singular { stage: "R-matrix inversion" })?;
            (CMatrix::identity(nsph, nsph), r)
        }
    };
    // row = P F − Q F'
    let lhs = |f: &DMatrix<f64>, df: &DMatrix<f64>| &p * to_complex(f) - &q * to_complex(df);
    let b = lhs(&v.fj, &v.dfj);
    // scale of the entrance wave itself, so that K ≈ 0 does not inflate the
    // relative residual
    let wave_scale = (&p * to_complex(&v.fj)).norm() + (&q * to_complex(&v.dfj)).norm();
    let mut a = CMatrix::zeros(nsph, no + nc);
    a.columns_mut(0, no).copy_from(&lhs(&v.fy, &v.dfy));
    if nc > 0 {
        a.columns_mut(no, nc).copy_from(&lhs(&v.fk, &v.dfk));
    }
    // column equilibration
    let scales: Vec<f64> = (0..a.ncols())
        .map(|j| a.column(j).norm().max(1e-300))
        .collect();
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let mut x = svd
        .solve(&b, 1e-15 * smax)
        .map_err(|_| Error::Singular { stage: "channel matching" })?;
    let resid = (&a * &x - &b).norm() / wave_scale.max(1e-300);
    for (j, s) in scales.iter().enumerate() {
        x.row_mut(j).scale_mut(1.0 / s);
    }
    let k = x.rows(0, no).into_owned();
    smatrix_from_k(k, resid, condition)
}

/// `S = (I + iK)(I − iK)^{-1}`.
pub fn smatrix_from_k(k: CMatrix, residual: f64, condition: f64) -> Result<SMatrixResult> {
    let n = k.nrows();
    let i = Complex64::i();
    let id = CMatrix::identity(n, n);
    let minus = &id - &k * i;
    let plus = &id + &k * i;
    let svd = minus.clone().svd(false, false);
    let near_pole = svd.singular_values.min() < 1e-8 * svd.singular_values.max().max(1.0);
    let s = minus
        .lu()
        .solve(&plus)
        .ok_or(Error::Singular { stage: "S-matrix" })?;
    let knorm = k.norm();
    let asymmetry = if knorm > 0.0 {
        (&k - k.transpose()).norm() / knorm
    } else {
        0.0
    };
    Ok(SMatrixResult {
        s,
        k,
        residual,
        condition,
        asymmetry,
        near_pole,
    })
}

/// Diagonal effective potential `V_n(ρ) = ⟨φ_n|W_int(ρ, z)|φ_n⟩` of the
/// dipole and van der Waals tails in z-channel `n`.
pub struct TailPotential {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    a_d: f64,
    c6: f64,
}

impl TailPotential {
    pub fn new(n_z: u32, params: &ModelParams, terms: Terms) -> Self {
        let half = params.a_h * ((2 * n_z + 1) as f64).sqrt() + 9.0 * params.a_h;
        let (xs, ws) = gauss_legendre(120 + 4 * n_z as usize);
        let mut nodes = Vec::with_capacity(xs.len());
        let mut weights = Vec::with_capacity(xs.len());
        for (&x, &w) in xs.iter().zip(&ws) {
            let z = half * x;
            let phi = special::oscillator_functions(n_z, z, params.a_h)[n_z as usize].0;
            nodes.push(z);
            weights.push(w * half * phi * phi);
        }
        Self {
            nodes,
            weights,
            a_d: if terms.dipole { params.a_d } else { 0.0 },
            c6: if terms.vdw {
                units::r6_over_abar().powi(4)
            } else {
                0.0
            },
        }
    }

    pub fn at(&self, rho: f64) -> f64 {
        let r2 = rho * rho;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| {
                let d2 = r2 + z * z;
                let d = d2.sqrt();
                w * (2.0 * self.a_d * (r2 - 2.0 * z * z) / (d2 * d2 * d) - self.c6 / (d2 * d2 * d2))
            })
            .sum()
    }

    /// Born phase of the part of the tail beyond `ρ_max`, using the
    /// asymptotic form `2a_d/ρ³`.
    pub fn tail_phase(&self, q: f64, rho_max: f64) -> f64 {
        -self.a_d / (2.0 * q * rho_max * rho_max)
    }
}

/// 2×2 transfer matrix of the variation-of-parameters coefficients
/// `u = aF + bG` across `[r0, r1]` for `F, G = √ρ J_m, √ρ Y_m (qρ)`.
pub fn outer_transfer(m: u32, q: f64, tail: &TailPotential, r0: f64, r1: f64) -> [[f64; 2]; 2] {
    let nu = m as f64;
    let w = 2.0 / std::f64::consts::PI;
    let rhs = |rho: f64, c: [f64; 4]| -> [f64; 4] {
        let (j, y, _, _) = special::bessel_jy(nu, q * rho);
        let sr = rho.sqrt();
        let (f, g) = (sr * j, sr * y);
        let v = tail.at(rho) / w;
        // c = [a1, b1, a2, b2] for the two independent starts
        let u1 = c[0] * f + c[1] * g;
        let u2 = c[2] * f + c[3] * g;
        [-g * v * u1, f * v * u1, -g * v * u2, f * v * u2]
    };
    let mut c = [1.0, 0.0, 0.0, 1.0];
    let lambda = 2.0 * std::f64::consts::PI / q;
    let mut rho = r0;
    while rho < r1 {
        let h = (0.04 * rho).min(lambda / 40.0).min(r1 - rho);
        let k1 = rhs(rho, c);
        let k2 = rhs(rho + 0.5 * h, add(c, k1, 0.5 * h));
        let k3 = rhs(rho + 0.5 * h, add(c, k2, 0.5 * h));
        let k4 = rhs(rho + h, add(c, k3, h));
        for i in 0..4 {
            c[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        rho += h;
    }
    // columns: response to (a, b) = (1, 0) and (0, 1)
    [[c[0], c[2]], [c[1], c[3]]]
}

fn add(c: [f64; 4], k: [f64; 4], h: f64) -> [f64; 4] {
    [c[0] + h * k[0], c[1] + h * k[1], c[2] + h * k[2], c[3] + h * k[3]]
}

/// Carries the open-channel `K` from `r0` to `r1` through the diagonal tail
/// potentials: `K' = (B_g K − B_f)(A_f − A_g K)^{-1}`.
pub fn propagate_k_outward(k: &CMatrix, transfers: &[[[f64; 2]; 2]]) -> Result<CMatrix> {
    let n = k.nrows();
    let diag = |f: &dyn Fn(&[[f64; 2]; 2]) -> f64| {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            transfers.iter().map(|t| Complex64::new(f(t), 0.0)),
        ))
    };
    let af = diag(&|t| t[0][0]);
    let ag = diag(&|t| t[0][1]);
    let bf = diag(&|t| t[1][0]);
    let bg = diag(&|t| t[1][1]);
    // a = A_f − A_g K, b = B_f − B_g K, K' = −b a^{-1}
    let a = &af - &ag * k;
    let b = &bg * k - &bf;
    // K' = b a^{-1}  ⇔  a^T K'^T = b^T
    let kt = a
        .transpose()
        .lu()
        .solve(&b.transpose())
        .ok_or(Error::Singular { stage: "outer propagation" })?;
    Ok(kt.transpose())
}
