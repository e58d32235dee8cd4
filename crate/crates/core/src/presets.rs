//! Ready-made sweeps run by `qdt2d figure <name>`.
//!
//! The resonance family (`beta-vs-s-tight`, `beta-vs-s-loose`) has fully
//! fixed parameters. The other presets choose the values listed on each
//! function for anything not otherwise pinned down.

use crate::error::{Error, Result};
use crate::sweep::{Axis, AxisParam, Spacing, SweepSettings, SweepSpec};
use crate::units::{ModelParams, NumericsParams};

pub const PRESET_NAMES: [&str; 7] = [
    "beta-vs-s-tight",
    "beta-vs-s-loose",
    "alpha-vs-s",
    "circles",
    "rates-vs-ad",
    "crossover",
    "rates-vs-energy",
];

/// Dipolar lengths of the resonance family.
pub const RESONANCE_A_D: [f64; 4] = [0.0, 0.32, 0.73, 2.02];
/// Reaction amplitudes for scans whose `y` values are not fixed.
pub const ASSUMED_Y_FAMILY: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 1.0];
/// Dipolar length assumed for the "nonzero induced dipole" scans.
pub const ASSUMED_A_D: f64 = 0.73;

pub fn figure_preset(name: &str) -> Result<SweepSpec> {
    match name {
        "beta-vs-s-tight" => Ok(resonance_family(name, 1.7)),
        "beta-vs-s-loose" => Ok(resonance_family(name, 5.2)),
        "alpha-vs-s" => Ok(alpha_vs_s()),
        "circles" => Ok(circles()),
        "rates-vs-ad" => Ok(rates_vs_ad()),
        "crossover" => Ok(crossover()),
        "rates-vs-energy" => Ok(rates_vs_energy()),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

fn spec(name: &str, model: ModelParams, axes: Vec<Axis>) -> SweepSpec {
    SweepSpec {
        model,
        numerics: NumericsParams::default(),
        sweep: SweepSettings {
            name: Some(name.to_string()),
            axes,
            ..SweepSettings::default()
        },
    }
}

fn s_axis() -> Axis {
    Axis::range(AxisParam::S, -6.0, 6.0, 241, Spacing::Linear)
}

/// `y = 0.7`, `qā = 0.05`, `a_d/ā ∈ {0, 0.32, 0.73, 2.02}`, `s ∈ [−6, 6]`.
fn resonance_family(name: &str, a_h: f64) -> SweepSpec {
    spec(
        name,
        ModelParams {
            y: 0.7,
            a_h,
            q: 0.05,
            ..ModelParams::default()
        },
        vec![Axis::list(AxisParam::Ad, RESONANCE_A_D.to_vec()), s_axis()],
    )
}

/// Real and imaginary parts against `s` for several `y`. Assumed:
/// `a_d/ā = 0.73`, `a_h/ā = 1.7`.
fn alpha_vs_s() -> SweepSpec {
    spec(
        "alpha-vs-s",
        ModelParams {
            a_d: ASSUMED_A_D,
            a_h: 1.7,
            q: 0.05,
            ..ModelParams::default()
        },
        vec![Axis::list(AxisParam::Y, ASSUMED_Y_FAMILY.to_vec()), s_axis()],
    )
}

/// Parametric `(α, β)` over a full phase period for several `y`. Assumed:
/// `a_d/ā = 0.2`, `a_h/ā = 1.7`. The `s` axis is uniform in phase between
/// `s = −60` and `s = 60`.
fn circles() -> SweepSpec {
    spec(
        "circles",
        ModelParams {
            a_d: 0.2,
            a_h: 1.7,
            q: 0.05,
            ..ModelParams::default()
        },
        vec![
            Axis::list(AxisParam::Y, vec![0.2, 0.5, 0.8, 1.0]),
            Axis::range(AxisParam::S, -60.0, 60.0, 96, Spacing::Phase),
        ],
    )
}

/// Rates against `a_d/a_h` for several `s`. Assumed: `y = 0.5`,
/// `a_h/ā = 5.2`, `a_d/a_h ∈ [0, 2]`.
fn rates_vs_ad() -> SweepSpec {
    spec(
        "rates-vs-ad",
        ModelParams {
            y: 0.5,
            a_h: 5.2,
            q: 0.05,
            ..ModelParams::default()
        },
        vec![
            Axis::list(AxisParam::S, vec![-2.0, 0.0, 1.0, 2.0, 4.0]),
            Axis::range(AxisParam::AdOverAh, 0.0, 2.0, 81, Spacing::Linear),
        ],
    )
}

/// Rates against `a_d/a_h` for a very weak (`ā/a_h = 0.02`) and a
/// moderate (`ā/a_h = 0.2`) trap. Assumed: universal short range (`y = 1`)
/// and `a_d/a_h` log-spaced over `[0.01, 1]`.
fn crossover() -> SweepSpec {
    spec(
        "crossover",
        ModelParams {
            y: 1.0,
            q: 0.05,
            ..ModelParams::default()
        },
        vec![
            Axis::list(AxisParam::Ah, vec![1.0 / 0.02, 1.0 / 0.2]),
            Axis::range(AxisParam::AdOverAh, 0.01, 1.0, 41, Spacing::Log),
        ],
    )
}

/// Reactive rates against kinetic energy `E = q²` over `[1e-4, 1e-3] E_a`,
/// well below the first excited trap threshold. Assumed: `y = 1`,
/// `a_h/ā = 1.7`, `a_d/ā ∈ {0.73, 2.02}`.
fn rates_vs_energy() -> SweepSpec {
    spec(
        "rates-vs-energy",
        ModelParams {
            y: 1.0,
            a_h: 1.7,
            ..ModelParams::default()
        },
        vec![
            Axis::list(AxisParam::Ad, vec![0.73, 2.02]),
            Axis::range(AxisParam::Q, 1e-2, 1e-3f64.sqrt(), 17, Spacing::Log),
        ],
    )
}
