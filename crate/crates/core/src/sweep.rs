//! Parameter sweeps over up to two axes with order-preserving parallel
//! evaluation and CSV/JSON output.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{self, PointResult};
use crate::units::{self, ModelParams, NumericsParams};

/// Maximum number of sweep axes.
pub const MAX_AXES: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxisParam {
    #[serde(rename = "s")]
    S,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "a_d")]
    Ad,
    #[serde(rename = "a_h")]
    Ah,
    #[serde(rename = "q")]
    Q,
    /// `a_d/a_h`; applied after any `a_h` axis.
    #[serde(rename = "a_d_over_a_h")]
    AdOverAh,
}

impl AxisParam {
    pub fn name(self) -> &'static str {
        match self {
            AxisParam::S => "s",
            AxisParam::Y => "y",
            AxisParam::Ad => "a_d",
            AxisParam::Ah => "a_h",
            AxisParam::Q => "q",
            AxisParam::AdOverAh => "a_d_over_a_h",
        }
    }
}

impl std::str::FromStr for AxisParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "s" => AxisParam::S,
            "y" => AxisParam::Y,
            "a_d" => AxisParam::Ad,
            "a_h" => AxisParam::Ah,
            "q" => AxisParam::Q,
            "a_d_over_a_h" => AxisParam::AdOverAh,
            other => return Err(format!("unknown axis parameter `{other}`")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
    /// Uniform in the short-range phase: `s = 1 + cot θ` with `θ` evenly
    /// spaced between the angles of `min` and `max`. Only for `s`.
    Phase,
}

impl std::str::FromStr for Spacing {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            "phase" => Ok(Spacing::Phase),
            other => Err(format!("unknown spacing `{other}`")),
        }
    }
}

/// One sweep axis: either a range or an explicit list of values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: AxisParam,
    #[serde(default)]
    pub min: f64,
    #[serde(default)]
    pub max: f64,
    #[serde(default)]
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Axis {
    pub fn range(param: AxisParam, min: f64, max: f64, count: usize, spacing: Spacing) -> Self {
        Self {
            param,
            min,
            max,
            count,
            spacing,
            values: None,
        }
    }

    pub fn list(param: AxisParam, values: Vec<f64>) -> Self {
        Self {
            param,
            min: 0.0,
            max: 0.0,
            count: values.len(),
            spacing: Spacing::Linear,
            values: Some(values),
        }
    }

    pub fn len(&self) -> usize {
        self.values.as_ref().map_or(self.count, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self) -> std::result::Result<(), String> {
        let name = self.param.name();
        if let Some(v) = &self.values {
            if v.len() < 2 {
                return Err(format!("axis {name}: need at least 2 values"));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(format!("axis {name}: values must be finite"));
            }
            return Ok(());
        }
        if self.count < 2 {
            return Err(format!("axis {name}: count must be >= 2, got {}", self.count));
        }
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(format!("axis {name}: range must be finite"));
        }
        match self.spacing {
            Spacing::Log if !(self.min > 0.0 && self.max > 0.0) => {
                Err(format!("axis {name}: log spacing needs positive endpoints"))
            }
            Spacing::Phase if self.param != AxisParam::S => {
                Err(format!("axis {name}: phase spacing applies to s only"))
            }
            _ => Ok(()),
        }
    }

    /// Grid values in order.
    pub fn values(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        let n = self.count;
        let t = |i: usize| i as f64 / (n - 1) as f64;
        let mut out: Vec<f64> = match self.spacing {
            Spacing::Linear => (0..n).map(|i| self.min + (self.max - self.min) * t(i)).collect(),
            Spacing::Log => {
                let (a, b) = (self.min.ln(), self.max.ln());
                (0..n).map(|i| (a + (b - a) * t(i)).exp()).collect()
            }
            Spacing::Phase => {
                let angle = |s: f64| 1f64.atan2(s - 1.0);
                let (a, b) = (angle(self.min), angle(self.max));
                (0..n)
                    .map(|i| {
                        let th = a + (b - a) * t(i);
                        1.0 + th.cos() / th.sin()
                    })
                    .collect()
            }
        };
        out[0] = self.min;
        out[n - 1] = self.max;
        out
    }
}

/// The `[sweep]` section of a configuration file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub name: Option<String>,
    pub axes: Vec<Axis>,
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// Everything needed to run a sweep. Serializes to the `[model]`,
/// `[numerics]` and `[sweep]` sections of a configuration file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub model: ModelParams,
    pub numerics: NumericsParams,
    pub sweep: SweepSettings,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sweep.axes.len() > MAX_AXES {
            return Err(Error::Config(format!(
                "at most {MAX_AXES} axes, got {}",
                self.sweep.axes.len()
            )));
        }
        for (i, a) in self.sweep.axes.iter().enumerate() {
            a.check().map_err(Error::Config)?;
            if self.sweep.axes[..i].iter().any(|b| b.param == a.param) {
                return Err(Error::Config(format!("axis {} repeated", a.param.name())));
            }
        }
        if self.sweep.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        let v = units::validate(&self.model, &self.numerics);
        if !v.is_empty() {
            return Err(Error::InvalidParams(v));
        }
        Ok(())
    }

    /// Parameter points in grid order (first axis slowest).
    pub fn grid(&self) -> Vec<ModelParams> {
        let axes: Vec<(AxisParam, Vec<f64>)> = self
            .sweep
            .axes
            .iter()
            .map(|a| (a.param, a.values()))
            .collect();
        let total: usize = axes.iter().map(|(_, v)| v.len()).product();
        (0..total)
            .map(|mut idx| {
                let mut picks = vec![0.0; axes.len()];
                for (k, (_, v)) in axes.iter().enumerate().rev() {
                    picks[k] = v[idx % v.len()];
                    idx /= v.len();
                }
                let mut p = self.model.clone();
                let mut ratio = None;
                for ((param, _), &x) in axes.iter().zip(&picks) {
                    match param {
                        AxisParam::S => p.s = x,
                        AxisParam::Y => p.y = x,
                        AxisParam::Ad => p.a_d = x,
                        AxisParam::Ah => p.a_h = x,
                        AxisParam::Q => p.q = x,
                        AxisParam::AdOverAh => ratio = Some(x),
                    }
                }
                if let Some(r) = ratio {
                    p.a_d = r * p.a_h;
                }
                p
            })
            .collect()
    }
}

/// One row of sweep output. Failed points keep their inputs, carry NaN
/// results and the error text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub index: usize,
    pub s: f64,
    pub y: f64,
    pub a_d: f64,
    pub a_h: f64,
    pub q: f64,
    pub m: i32,
    /// Kinetic energy `q²` in `E_a`.
    pub energy: f64,
    pub k_ref: f64,
    pub alpha: f64,
    pub beta: f64,
    pub re_s00: f64,
    pub im_s00: f64,
    pub f: f64,
    pub k_el: f64,
    pub k_re: f64,
    pub loss: f64,
    pub residual: f64,
    pub l_max: u32,
    pub channels_open: usize,
    pub converged: bool,
    pub pole: bool,
    pub near_pole: bool,
    pub shallow_boundary: bool,
    pub error: String,
}

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 25] = [
    "index",
    "s",
    "y",
    "a_d",
    "a_h",
    "q",
    "m",
    "energy",
    "k_ref",
    "alpha",
    "beta",
    "re_s00",
    "im_s00",
    "f",
    "k_el",
    "k_re",
    "loss",
    "residual",
    "l_max",
    "channels_open",
    "converged",
    "pole",
    "near_pole",
    "shallow_boundary",
    "error",
];

impl SweepRecord {
    pub fn from_result(index: usize, params: &ModelParams, res: Result<PointResult>) -> Self {
        let mut rec = SweepRecord {
            index,
            s: params.s,
            y: params.y,
            a_d: params.a_d,
            a_h: params.a_h,
            q: params.q,
            m: params.m,
            energy: params.q * params.q,
            k_ref: f64::NAN,
            alpha: f64::NAN,
            beta: f64::NAN,
            re_s00: f64::NAN,
            im_s00: f64::NAN,
            f: f64::NAN,
            k_el: f64::NAN,
            k_re: f64::NAN,
            loss: f64::NAN,
            residual: f64::NAN,
            l_max: 0,
            channels_open: 0,
            converged: false,
            pole: false,
            near_pole: false,
            shallow_boundary: false,
            error: String::new(),
        };
        match res {
            Ok(r) => {
                rec.k_ref = r.k_ref;
                rec.alpha = r.alpha;
                rec.beta = r.beta;
                rec.re_s00 = r.s00.re;
                rec.im_s00 = r.s00.im;
                rec.f = r.rates.f;
                rec.k_el = r.rates.k_el;
                rec.k_re = r.rates.k_re;
                rec.loss = r.loss;
                rec.residual = r.residual;
                rec.l_max = r.l_max;
                rec.channels_open = r.channels_open;
                rec.converged = r.flags.converged;
                rec.pole = r.flags.pole;
                rec.near_pole = r.flags.near_pole;
                rec.shallow_boundary = r.flags.shallow_boundary;
            }
            Err(e) => rec.error = e.to_string(),
        }
        rec
    }

    fn csv_fields(&self) -> Vec<String> {
        let x = |v: f64| format!("{v:.16e}");
        vec![
            self.index.to_string(),
            x(self.s),
            x(self.y),
            x(self.a_d),
            x(self.a_h),
            x(self.q),
            self.m.to_string(),
            x(self.energy),
            x(self.k_ref),
            x(self.alpha),
            x(self.beta),
            x(self.re_s00),
            x(self.im_s00),
            x(self.f),
            x(self.k_el),
            x(self.k_re),
            x(self.loss),
            x(self.residual),
            self.l_max.to_string(),
            self.channels_open.to_string(),
            self.converged.to_string(),
            self.pole.to_string(),
            self.near_pole.to_string(),
            self.shallow_boundary.to_string(),
            self.error.clone(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub records: Vec<SweepRecord>,
    pub elapsed_seconds: f64,
    pub workers: usize,
}

/// Default worker count: the number of available cores.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Evaluates every grid point. The output order is the grid order whatever
/// the number of workers, and each point is computed independently, so the
/// table is identical for any worker count.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let workers = spec.sweep.workers.unwrap_or_else(default_workers);
    let grid = spec.grid();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    let start = Instant::now();
    let records = pool.install(|| {
        grid.par_iter()
            .enumerate()
            .map(|(i, p)| SweepRecord::from_result(i, p, solver::solve_point(p, &spec.numerics)))
            .collect()
    });
    Ok(SweepTable {
        records,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        workers,
    })
}

/// Writes records as CSV with a header row; floats carry 17 significant
/// digits.
pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for r in records {
        w.write_record(r.csv_fields()).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(records: &[SweepRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(std::io::Error::other(e)))
}

/// JSON mirror of a sweep with run metadata.
#[derive(Clone, Debug, Serialize)]
pub struct SweepJson<'a> {
    pub version: &'static str,
    pub spec: &'a SweepSpec,
    pub abar1: Option<f64>,
    pub elapsed_seconds: f64,
    pub workers: usize,
    pub records: &'a [SweepRecord],
}

pub fn write_json<W: Write>(spec: &SweepSpec, table: &SweepTable, abar1: Option<f64>, out: W) -> Result<()> {
    let doc = SweepJson {
        version: env!("CARGO_PKG_VERSION"),
        spec,
        abar1,
        elapsed_seconds: table.elapsed_seconds,
        workers: table.workers,
        records: &table.records,
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}
