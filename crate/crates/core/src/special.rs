//! Special functions used by the matching and reference solvers.
//!
//! Bessel functions of real order come from `puruspe` (Steed/Temme
//! algorithms, near machine precision); everything else is local.

use std::f64::consts::PI;

pub use puruspe::gamma;

/// `(J_ν(x), Y_ν(x), J_ν'(x), Y_ν'(x))` for `ν ≥ 0`, `x > 0`.
pub fn bessel_jy(nu: f64, x: f64) -> (f64, f64, f64, f64) {
    puruspe::besseljy(nu, x)
}

/// `(K_ν(x), K_ν'(x))` for `ν ≥ 0`, `x > 0`.
pub fn bessel_k(nu: f64, x: f64) -> (f64, f64) {
    let (_, k, _, dk) = puruspe::besselik(nu, x);
    (k, dk)
}

/// Riccati–Bessel functions `ĵ_ℓ(x) = x j_ℓ(x)`, `n̂_ℓ(x) = x y_ℓ(x)` and
/// their derivatives, `(ĵ, n̂, ĵ', n̂')`.
pub fn riccati_bessel(l: u32, x: f64) -> (f64, f64, f64, f64) {
    let (j, y, dj, dy) = bessel_jy(l as f64 + 0.5, x);
    let c = (0.5 * PI * x).sqrt();
    let dc = 0.25 * PI / c;
    (c * j, c * y, dc * j + c * dj, dc * y + c * dy)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            if n == 0 {
                break;
            }
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Normalized associated Legendre functions `Θ_ℓm(x)` for `ℓ = m..=l_max`,
/// with `∫_{-1}^{1} Θ_ℓm² dx = 1`, so that `Y_ℓm = Θ_ℓm(cosθ) e^{imφ}/√(2π)`.
/// Entry `k` of the result is `ℓ = m + k`.
pub fn legendre_normalized(m: u32, l_max: u32, x: f64) -> Vec<f64> {
    if l_max < m {
        return Vec::new();
    }
    let sin = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = std::f64::consts::FRAC_1_SQRT_2;
    for k in 1..=m {
        let k = k as f64;
        pmm *= -((2.0 * k + 1.0) / (2.0 * k)).sqrt() * sin;
    }
    let mut out = Vec::with_capacity((l_max - m + 1) as usize);
    out.push(pmm);
    if l_max == m {
        return out;
    }
    let mut prev = pmm;
    let mut cur = x * pmm / ladder(m + 1, m);
    out.push(cur);
    for l in (m + 2)..=l_max {
        let next = (x * cur - ladder(l - 1, m) * prev) / ladder(l, m);
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// `⟨ℓ m| cosθ |ℓ−1 m⟩ = √((ℓ² − m²)/((2ℓ+1)(2ℓ−1)))`.
pub fn ladder(l: u32, m: u32) -> f64 {
    if l <= m {
        return 0.0;
    }
    let (l, m) = (l as f64, m as f64);
    ((l * l - m * m) / ((2.0 * l + 1.0) * (2.0 * l - 1.0))).sqrt()
}

/// Normalized harmonic-oscillator eigenfunctions `φ_n(z)` of length `a_h`
/// and their derivatives for `n = 0..=n_max`.
///
/// The three-term recursion runs on an unscaled seed with the Gaussian
/// factor and any accumulated rescaling applied in log space at the end.
pub fn oscillator_functions(n_max: u32, z: f64, a_h: f64) -> Vec<(f64, f64)> {
    let xi = z / a_h;
    let n = n_max as usize;
    let mut psi = vec![0.0; n + 2];
    let mut log_scale = vec![0.0f64; n + 2];
    psi[0] = PI.powf(-0.25);
    let mut acc = 0.0f64;
    psi[1] = 2f64.sqrt() * xi * psi[0];
    for k in 1..=n {
        let kf = k as f64;
        let mut next = (2.0 / (kf + 1.0)).sqrt() * xi * psi[k] - (kf / (kf + 1.0)).sqrt() * psi[k - 1];
        if next.abs() > 1e200 {
            next *= 1e-200;
            psi[k] *= 1e-200;
            acc += 200.0 * std::f64::consts::LN_10;
        }
        log_scale[k] = acc;
        psi[k + 1] = next;
        log_scale[k + 1] = acc;
    }
    // log_scale[k] is the scale in force when psi[k] was last written.
    let gauss = -0.5 * xi * xi;
    let value = |k: usize| -> f64 {
        if psi[k] == 0.0 {
            0.0
        } else {
            psi[k].signum() * (psi[k].abs().ln() + log_scale[k] + gauss).exp()
        }
    };
    let vals: Vec<f64> = (0..=n + 1).map(value).collect();
    let norm = a_h.sqrt();
    (0..=n)
        .map(|k| {
            let d = if k == 0 {
                -xi * vals[0]
            } else {
                -xi * vals[k] + (2.0 * k as f64).sqrt() * vals[k - 1]
            };
            (vals[k] / norm, d / (norm * a_h))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let s: f64 = w.iter().sum();
        assert_relative_eq!(s, 2.0, epsilon = 1e-14);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert_relative_eq!(i, 2.0 / 23.0, epsilon = 1e-14);
    }

    #[test]
    fn legendre_orthonormal() {
        let (x, w) = gauss_legendre(80);
        for m in 0..4u32 {
            let table: Vec<Vec<f64>> = x.iter().map(|&x| legendre_normalized(m, 20, x)).collect();
            for a in 0..(21 - m as usize) {
                for b in 0..(21 - m as usize) {
                    let s: f64 = table.iter().zip(&w).map(|(t, w)| w * t[a] * t[b]).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((s - want).abs() < 1e-12, "m={m} a={a} b={b} {s}");
                }
            }
        }
    }

    #[test]
    fn legendre_low_orders() {
        // Θ_10 = √(3/2) x, Θ_11 = −√(3/4) sinθ
        let x = 0.3f64;
        let t0 = legendre_normalized(0, 1, x);
        assert_relative_eq!(t0[1], 1.5f64.sqrt() * x, epsilon = 1e-15);
        let t1 = legendre_normalized(1, 1, x);
        assert_relative_eq!(t1[0], -(0.75f64).sqrt() * (1.0 - x * x).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn oscillator_values() {
        let a_h = 1.7;
        let f = oscillator_functions(3, 0.0, a_h);
        assert_relative_eq!(f[0].0, (PI * a_h * a_h).powf(-0.25), epsilon = 1e-15);
        assert_eq!(f[1].0, 0.0);
        assert_eq!(f[0].1, 0.0);
    }

    #[test]
    fn oscillator_normalized_high_n() {
        let a_h = 2.3;
        let (x, w) = gauss_legendre(400);
        let half = 14.0 * a_h;
        let table: Vec<Vec<(f64, f64)>> = x
            .iter()
            .map(|&t| oscillator_functions(20, half * t, a_h))
            .collect();
        for n in 0..=20 {
            let s: f64 = table.iter().zip(&w).map(|(t, w)| w * half * t[n].0 * t[n].0).sum();
            assert!((s - 1.0).abs() < 1e-10, "n={n} norm={s}");
        }
    }

    #[test]
    fn oscillator_derivative_matches_difference() {
        let a_h = 1.3;
        for &z in &[-2.0, 0.4, 3.1] {
            let h = 1e-5;
            let p = oscillator_functions(6, z + h, a_h);
            let m = oscillator_functions(6, z - h, a_h);
            let c = oscillator_functions(6, z, a_h);
            for n in 0..=6 {
                let fd = (p[n].0 - m[n].0) / (2.0 * h);
                assert!((fd - c[n].1).abs() < 1e-8, "n={n} z={z}");
            }
        }
    }

    #[test]
    fn oscillator_far_tail_is_finite() {
        let f = oscillator_functions(40, 60.0, 1.0);
        assert!(f.iter().all(|(v, d)| v.is_finite() && d.is_finite()));
        let f = oscillator_functions(40, 8.0, 1.0);
        assert!(f[40].0.abs() > 0.0 && f[40].0.is_finite());
    }

    #[test]
    fn riccati_bessel_closed_forms() {
        let x = 0.7f64;
        let (j0, n0, dj0, dn0) = riccati_bessel(0, x);
        assert_relative_eq!(j0, x.sin(), epsilon = 1e-14);
        assert_relative_eq!(n0, -x.cos(), epsilon = 1e-14);
        assert_relative_eq!(dj0, x.cos(), epsilon = 1e-14);
        assert_relative_eq!(dn0, x.sin(), epsilon = 1e-14);
        let (j1, n1, _, _) = riccati_bessel(1, x);
        assert_relative_eq!(j1, x.sin() / x - x.cos(), epsilon = 1e-14);
        assert_relative_eq!(n1, -x.cos() / x - x.sin(), epsilon = 1e-14);
    }

    #[test]
    fn bessel_wronskians() {
        for &x in &[1e-3, 0.5, 3.0, 40.0, 900.0] {
            for &nu in &[0.25, 0.75, 1.0, 2.25] {
                let (j, y, dj, dy) = bessel_jy(nu, x);
                let w = j * dy - y * dj;
                assert_relative_eq!(w, 2.0 / (PI * x), max_relative = 1e-10);
            }
        }
    }
}
