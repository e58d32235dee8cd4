use thiserror::Error;

use crate::units::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {}", format_violations(.0))]
    InvalidParams(Vec<Violation>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("boundary log-derivative is singular at r_min = {r_min}")]
    BoundaryPole { r_min: f64 },

    #[error("singular matrix during {stage}")]
    Singular { stage: &'static str },

    #[error("angular quadrature not converged (change {change:.3e})")]
    Quadrature { change: f64 },

    #[error("no open asymptotic channel at E = {energy}")]
    NoOpenChannel { energy: f64 },

    #[error("abar_1 is not calibrated; run `calibrate-abar1` or call calibrate_abar1()")]
    Uncalibrated,

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("no interior maximum; the scan is monotone near its ends")]
    NoInteriorPeak,

    #[error("degenerate circle fit (points are collinear)")]
    DegenerateFit,

    #[error("insufficient data span: {0}")]
    InsufficientSpan(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown figure preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
