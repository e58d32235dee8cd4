//! Johnson log-derivative propagation of `u'' = [W(r) − E]u`.
//!
//! Each Simpson panel `[a, a + 2h]` treats the potential as three impulses
//! (weights `h/3`, `4h/3`, `h/3`) separated by free flights of length `h`.
//! The midpoint impulse uses Johnson's corrected matrix
//! `U = (I − h²W/6)^{-1} W`, which lifts the local error to `O(h⁵)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryCondition;
use crate::couplings::{ChannelBasis, Potential};
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Propagated log-derivative `Y = U'U^{-1}` at radius `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogDerivState {
    pub r: f64,
    pub y: CMatrix,
    pub steps: usize,
    /// Largest per-panel value of `(h·k_loc)⁴/180`, the Simpson error scale.
    pub max_step_error: f64,
}

impl LogDerivState {
    pub fn new(r: f64, y: CMatrix) -> Self {
        Self {
            r,
            y,
            steps: 0,
            max_step_error: 0.0,
        }
    }

    /// `‖Y − Yᵀ‖∞ / ‖Y‖∞`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.y.nrows();
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..n {
            let mut row_d = 0.0;
            let mut row_y = 0.0;
            for j in 0..n {
                row_d += (self.y[(i, j)] - self.y[(j, i)]).norm();
                row_y += self.y[(i, j)].norm();
            }
            num = num.max(row_d);
            den = den.max(row_y);
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

/// Panel boundaries `r_0 < r_1 < … < r_M`; each panel is split into two
/// equal Simpson half-steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
}

/// Step-size controls for [`RadialGrid::adaptive`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRule {
    pub points_per_wavelength: f64,
    pub h_max: f64,
    /// Extra allowance `h ≤ rel_max·r` on top of `h_max`, for long free tails.
    pub rel_max: f64,
}

impl StepRule {
    pub fn new(points_per_wavelength: f64, h_max: f64) -> Self {
        Self {
            points_per_wavelength,
            h_max,
            rel_max: 0.0,
        }
    }

    fn half_step(&self, k2: f64, r: f64) -> f64 {
        let cap = self.h_max.max(self.rel_max * r);
        if k2 <= 0.0 {
            return cap;
        }
        let lambda = 2.0 * std::f64::consts::PI / k2.sqrt();
        (lambda / self.points_per_wavelength).min(cap)
    }
}

impl RadialGrid {
    pub fn uniform(r_start: f64, r_end: f64, panels: usize) -> Self {
        let panels = panels.max(1);
        let h = (r_end - r_start) / panels as f64;
        let mut nodes: Vec<f64> = (0..panels).map(|i| r_start + i as f64 * h).collect();
        nodes.push(r_end);
        Self { nodes }
    }

    /// Local half-step `h(r) = min(λ_local/P, h_max)` with
    /// `λ_local = 2π/√max_i|W_ii(r) − E|`.
    pub fn adaptive(potential: &Potential, energy: f64, r_start: f64, r_end: f64, rule: StepRule) -> Self {
        let mut nodes = vec![r_start];
        let mut r = r_start;
        while r < r_end {
            let h0 = rule.half_step(potential.max_local_wavenumber_sq(r, energy), r);
            let h1 = rule.half_step(potential.max_local_wavenumber_sq(r + 2.0 * h0, energy), r + 2.0 * h0);
            let h = h0.min(h1);
            r += 2.0 * h;
            if r_end - r < 0.5 * h {
                r = r_end;
            }
            nodes.push(r.min(r_end));
        }
        if nodes.len() == 1 {
            nodes.push(r_end);
        }
        Self { nodes }
    }

    /// Splits every panel into `factor` equal panels.
    pub fn refined(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        let mut nodes = Vec::with_capacity((self.nodes.len() - 1) * factor + 1);
        for w in self.nodes.windows(2) {
            for k in 0..factor {
                nodes.push(w[0] + (w[1] - w[0]) * k as f64 / factor as f64);
            }
        }
        nodes.push(*self.nodes.last().expect("grid has nodes"));
        Self { nodes }
    }

    pub fn panels(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        *self.nodes.last().expect("grid has nodes")
    }
}

/// `Y(r_min) = diag(Z_ℓ)`.
pub fn init_state(basis: &ChannelBasis, boundary: &BoundaryCondition) -> Result<LogDerivState> {
    let z = boundary.channel_values(&basis.ells)?;
    Ok(LogDerivState::new(
        boundary.r_min,
        CMatrix::from_diagonal(&nalgebra::DVector::from_vec(z)),
    ))
}

/// Maximum number of times one panel may be halved after a singular
/// inversion.
const MAX_SPLIT_DEPTH: u32 = 8;

/// Propagates `state` across every panel of `grid`.
pub fn propagate(mut state: LogDerivState, grid: &RadialGrid, potential: &Potential, energy: f64) -> Result<LogDerivState> {
    let n = potential.len();
    if state.y.nrows() != n {
        return Err(Error::Domain(format!(
            "state has {} channels, potential has {n}",
            state.y.nrows()
        )));
    }
    let mut ws = Workspace::new(n);
    for w in grid.nodes.windows(2) {
        panel(&mut state, w[0], w[1], potential, energy, &mut ws, 0)?;
    }
    state.r = grid.end();
    Ok(state)
}

struct Workspace {
    w: DMatrix<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            w: DMatrix::zeros(n, n),
        }
    }

    fn shifted(&mut self, potential: &Potential, r: f64, energy: f64) -> &DMatrix<f64> {
        potential.fill(r, &mut self.w);
        for i in 0..self.w.nrows() {
            self.w[(i, i)] -= energy;
        }
        &self.w
    }
}

fn add_real(y: &mut CMatrix, w: &DMatrix<f64>, c: f64) {
    y.zip_apply(w, |a, b| a.re += c * b);
}

/// Free flight of length `h`: `Y ← (I + hY)^{-1} Y`.
fn free_flight(y: &CMatrix, h: f64) -> Option<CMatrix> {
    let n = y.nrows();
    let mut a = y * Complex64::new(h, 0.0);
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    let lu = a.lu();
    if !pivots_ok(lu.u().diagonal().iter().map(|d| d.norm())) {
        return None;
    }
    lu.solve(y)
}

fn pivots_ok(diag: impl Iterator<Item = f64>) -> bool {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for d in diag {
        lo = lo.min(d);
        hi = hi.max(d);
    }
    hi.is_finite() && lo > 1e-13 * hi.max(1.0)
}

fn panel(
    state: &mut LogDerivState,
    a: f64,
    b: f64,
    potential: &Potential,
    energy: f64,
    ws: &mut Workspace,
    depth: u32,
) -> Result<()> {
    let h = 0.5 * (b - a);
    let saved = state.y.clone();
    match try_panel(&mut state.y, a, h, potential, energy, ws) {
        Some(kmax2) => {
            state.steps += 1;
            let err = (h * h * kmax2).powi(2) / 180.0;
            state.max_step_error = state.max_step_error.max(err);
            Ok(())
        }
        None => {
            state.y = saved;
            if depth >= MAX_SPLIT_DEPTH {
                return Err(Error::Singular { stage: "log-derivative propagation" });
            }
            let mid = 0.5 * (a + b);
            panel(state, a, mid, potential, energy, ws, depth + 1)?;
            panel(state, mid, b, potential, energy, ws, depth + 1)
        }
    }
}

/// One Simpson panel; returns the largest `|W_ii − E|` met, or `None` on a
/// singular inversion.
fn try_panel(y: &mut CMatrix, a: f64, h: f64, potential: &Potential, energy: f64, ws: &mut Workspace) -> Option<f64> {
    let mut kmax2 = 0.0f64;
    let mut track = |w: &DMatrix<f64>| {
        for i in 0..w.nrows() {
            kmax2 = kmax2.max(w[(i, i)].abs());
        }
    };

    let w = ws.shifted(potential, a, energy);
    track(w);
    add_real(y, w, h / 3.0);
    *y = free_flight(y, h)?;

    let w = ws.shifted(potential, a + h, energy).clone();
    track(&w);
    let mut m = &w * (-h * h / 6.0);
    for i in 0..m.nrows() {
        m[(i, i)] += 1.0;
    }
    let u = m.lu().solve(&w)?;
    add_real(y, &u, 4.0 * h / 3.0);
    *y = free_flight(y, h)?;

    let w = ws.shifted(potential, a + 2.0 * h, energy);
    track(w);
    add_real(y, w, h / 3.0);
    if y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Some(kmax2)
    } else {
        None
    }
}
