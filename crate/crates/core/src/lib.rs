//! Coupled-channel scattering of polar molecules in quasi-two-dimensional
//! harmonic traps with quantum-defect short-range boundary conditions.
//!
//! Units throughout: lengths in `ā`, energies in `E_a = ħ²/(2μā²)`.

pub mod analysis;
pub mod boundary;
pub mod config;
pub mod couplings;
pub mod error;
pub mod matching;
pub mod observables;
pub mod presets;
pub mod propagator;
pub mod reference;
pub mod solver;
pub mod special;
pub mod sweep;
pub mod units;
pub mod validation;

pub use analysis::{Circle, PowerLaw, Resonance};
pub use couplings::{ChannelBasis, Potential, Terms};
pub use error::{Error, Result};
pub use units::{DerivedScales, ModelParams, NumericsParams, RateConvention, Statistics};
pub use matching::SMatrixResult;
pub use observables::Rates;
pub use presets::figure_preset;
pub use reference::Abar1Calibration;
pub use solver::{solve_point, PointResult};
pub use sweep::{run_sweep, Axis, AxisParam, Spacing, SweepRecord, SweepSpec};
