//! `qdt2d` command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdt2d_core::boundary::BoundaryForm;
use qdt2d_core::sweep::{self, Axis, AxisParam, Spacing, SweepSpec};
use qdt2d_core::validation::{self, ValidationOptions};
use qdt2d_core::{config, figure_preset, reference, solver, Abar1Calibration, Error, RateConvention, Statistics};

/// Environment variable that overrides the worker count.
const WORKERS_ENV: &str = "QDT2D_WORKERS";
const DEFAULT_ABAR1_FILE: &str = "qdt2d-abar1.json";

#[derive(Parser)]
#[command(name = "qdt2d", version, about = "Reactive scattering of polar molecules in quasi-2D traps")]
struct Cli {
    /// Where the calibrated p-wave mean scattering length is kept.
    #[arg(long, global = true, default_value = DEFAULT_ABAR1_FILE)]
    abar1_file: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one parameter point and print JSON.
    Solve {
        /// Configuration file; only [model] and [numerics] are used.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the sweep described by a configuration file and write CSV.
    Sweep {
        spec: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a named figure preset and write CSV.
    Figure {
        #[arg(value_name = "NAME")]
        preset: String,
        /// Print the preset as a configuration file instead of running it.
        #[arg(long)]
        dump_spec: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the self-check suite and calibrate the p-wave length.
    Validate {
        /// Shift of the short-range phase in the a = s check (negative control).
        #[arg(long, hide = true, default_value_t = 0.0)]
        phase_offset: f64,
    },
    /// Extrapolate the p-wave mean scattering length and store it.
    #[command(name = "calibrate-abar1")]
    CalibrateAbar1 {
        #[arg(long, default_value_t = 1e-3)]
        k_min: f64,
        #[arg(long, default_value_t = 1e-2)]
        k_max: f64,
        #[arg(long, default_value_t = 8)]
        points: usize,
    },
}

/// One flag per configuration key, named after the key.
#[derive(Args, Default)]
struct Overrides {
    // [model]
    #[arg(long = "s", allow_hyphen_values = true)]
    s: Option<f64>,
    #[arg(long = "y")]
    y: Option<f64>,
    #[arg(long = "a_d", visible_alias = "a-d")]
    a_d: Option<f64>,
    #[arg(long = "a_h", visible_alias = "a-h")]
    a_h: Option<f64>,
    #[arg(long = "q")]
    q: Option<f64>,
    #[arg(long = "m", allow_hyphen_values = true)]
    m: Option<i32>,
    #[arg(long = "statistics")]
    statistics: Option<Statistics>,
    // [numerics]
    #[arg(long = "r_min", visible_alias = "r-min")]
    r_min: Option<f64>,
    #[arg(long = "r_max", visible_alias = "r-max")]
    r_max: Option<f64>,
    #[arg(long = "rho_max", visible_alias = "rho-max")]
    rho_max: Option<f64>,
    #[arg(long = "l_max", visible_alias = "l-max")]
    l_max: Option<u32>,
    #[arg(long = "n_z", visible_alias = "n-z")]
    n_z: Option<u32>,
    #[arg(long = "points_per_wavelength", visible_alias = "points-per-wavelength")]
    points_per_wavelength: Option<f64>,
    #[arg(long = "h_max", visible_alias = "h-max")]
    h_max: Option<f64>,
    #[arg(long = "theta_order", visible_alias = "theta-order")]
    theta_order: Option<usize>,
    #[arg(long = "match_tol", visible_alias = "match-tol")]
    match_tol: Option<f64>,
    #[arg(long = "closed_leak_tol", visible_alias = "closed-leak-tol")]
    closed_leak_tol: Option<f64>,
    #[arg(long = "rate_convention", visible_alias = "rate-convention")]
    rate_convention: Option<RateConvention>,
    #[arg(long = "boundary_form", visible_alias = "boundary-form")]
    boundary_form: Option<BoundaryForm>,
    // [sweep]
    #[arg(long = "name")]
    name: Option<String>,
    /// `param:min:max:count[:spacing]` or `param=v1,v2,...`; repeat for a
    /// second axis. Replaces the axes of the file.
    #[arg(long = "axes", visible_alias = "axis", allow_hyphen_values = true)]
    axes: Vec<String>,
    #[arg(long = "csv")]
    csv: Option<PathBuf>,
    #[arg(long = "json")]
    json: Option<PathBuf>,
    #[arg(long = "workers")]
    workers: Option<usize>,
}

impl Overrides {
    fn apply(&self, spec: &mut SweepSpec) -> Result<(), Error> {
        let m = &mut spec.model;
        set(&mut m.s, self.s);
        set(&mut m.y, self.y);
        set(&mut m.a_d, self.a_d);
        set(&mut m.a_h, self.a_h);
        set(&mut m.q, self.q);
        set(&mut m.m, self.m);
        set(&mut m.statistics, self.statistics);
        let n = &mut spec.numerics;
        set(&mut n.r_min, self.r_min);
        set_opt(&mut n.r_max, self.r_max);
        set_opt(&mut n.rho_max, self.rho_max);
        set_opt(&mut n.l_max, self.l_max);
        set(&mut n.n_z, self.n_z);
        set(&mut n.points_per_wavelength, self.points_per_wavelength);
        set(&mut n.h_max, self.h_max);
        set_opt(&mut n.theta_order, self.theta_order);
        set(&mut n.match_tol, self.match_tol);
        set(&mut n.closed_leak_tol, self.closed_leak_tol);
        set(&mut n.rate_convention, self.rate_convention);
        set(&mut n.boundary_form, self.boundary_form);
        let sw = &mut spec.sweep;
        set_opt(&mut sw.name, self.name.clone());
        if !self.axes.is_empty() {
            sw.axes = self.axes.iter().map(|a| parse_axis(a)).collect::<Result<_, _>>()?;
        }
        set_opt(&mut sw.csv, self.csv.clone());
        set_opt(&mut sw.json, self.json.clone());
        if let Some(w) = env_workers()? {
            sw.workers = Some(w);
        }
        set_opt(&mut sw.workers, self.workers);
        Ok(())
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

fn env_workers() -> Result<Option<usize>, Error> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn parse_axis(text: &str) -> Result<Axis, Error> {
    let bad = |why: &str| Error::Config(format!("axis `{text}`: {why}"));
    if let Some((param, list)) = text.split_once('=') {
        let param: AxisParam = param.parse().map_err(|e: String| bad(&e))?;
        let values = list
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(&e.to_string()))?;
        return Ok(Axis::list(param, values));
    }
    let parts: Vec<&str> = text.split(':').collect();
    if !(4..=5).contains(&parts.len()) {
        return Err(bad("expected param:min:max:count[:spacing]"));
    }
    let param: AxisParam = parts[0].parse().map_err(|e: String| bad(&e))?;
    let num = |s: &str| s.parse::<f64>().map_err(|e| bad(&e.to_string()));
    let count = parts[3].parse::<usize>().map_err(|e| bad(&e.to_string()))?;
    let spacing: Spacing = match parts.get(4) {
        Some(s) => s.parse().map_err(|e: String| bad(&e))?,
        None => Spacing::Linear,
    };
    Ok(Axis::range(param, num(parts[1])?, num(parts[2])?, count, spacing))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 3,
        Error::Config(_) | Error::InvalidParams(_) | Error::UnknownPreset(_) | Error::Domain(_) | Error::Json(_) => 2,
        _ => 1,
    }
}

fn with_path(path: &Path) -> impl Fn(io::Error) -> Error + '_ {
    move |e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn load_spec(path: &Path) -> Result<SweepSpec, Error> {
    let text = std::fs::read_to_string(path).map_err(with_path(path))?;
    config::parse_config(&text)
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path).map_err(with_path(path))?))
}

fn run_and_write(spec: &SweepSpec, abar1_file: &Path) -> Result<(), Error> {
    spec.validate()?;
    // open outputs first so a bad path fails before any work is done
    let csv_out = spec.sweep.csv.as_deref().map(create).transpose()?;
    let json_out = spec.sweep.json.as_deref().map(create).transpose()?;
    let table = sweep::run_sweep(spec)?;
    match csv_out {
        Some(w) => sweep::write_csv(&table.records, w)?,
        None => sweep::write_csv(&table.records, io::stdout().lock())?,
    }
    if let Some(mut w) = json_out {
        let abar1 = Abar1Calibration::load(abar1_file).ok().map(|c| c.abar1);
        sweep::write_json(spec, &table, abar1, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Error> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Solve { config, overrides } => {
            let mut spec = match config {
                Some(p) => load_spec(&p)?,
                None => SweepSpec::default(),
            };
            overrides.apply(&mut spec)?;
            let res = solver::solve_point(&spec.model, &spec.numerics)?;
            print_json(&res)?;
            Ok(0)
        }
        Command::Sweep { spec, overrides } => {
            let mut spec = load_spec(&spec)?;
            overrides.apply(&mut spec)?;
            run_and_write(&spec, &cli.abar1_file)?;
            Ok(0)
        }
        Command::Figure {
            preset,
            dump_spec,
            overrides,
        } => {
            let mut spec = figure_preset(&preset)?;
            overrides.apply(&mut spec)?;
            if dump_spec {
                print!("{}", config::to_toml(&spec)?);
                return Ok(0);
            }
            run_and_write(&spec, &cli.abar1_file)?;
            Ok(0)
        }
        Command::Validate { phase_offset } => {
            let report = validation::validate_suite(&ValidationOptions {
                phase_offset,
                abar1_path: Some(cli.abar1_file.clone()),
            });
            let mut out = io::stdout().lock();
            for c in &report.checks {
                writeln!(
                    out,
                    "{} {}: measured {:.3e}, tolerance {:.1e} ({})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.tolerance,
                    c.detail
                )?;
            }
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::CalibrateAbar1 { k_min, k_max, points } => {
            let cal = reference::calibrate_abar1(k_min, k_max, points)?;
            cal.save(&cli.abar1_file)?;
            print_json(&cal)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
