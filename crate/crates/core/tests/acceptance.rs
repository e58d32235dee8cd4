//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any fails.

use std::time::Instant;

use qdt2d_core::analysis::{self, Resonance};
use qdt2d_core::observables::{self, Dimension};
use qdt2d_core::reference;
use qdt2d_core::solver::{self, ShortRange, SolveOptions};
use qdt2d_core::sweep::{self, Axis, AxisParam, Spacing, SweepRecord, SweepSettings, SweepSpec};
use qdt2d_core::validation;
use qdt2d_core::{figure_preset, ModelParams, NumericsParams, Terms};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn run(spec: &SweepSpec) -> Vec<SweepRecord> {
    sweep::run_sweep(spec).expect("sweep").records
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for s in [-2.0, -0.5, 0.5, 3.0] {
        let r = reference::solve_3d_reference(0, s, 0.0, 1e-3).unwrap();
        let err = (r.a_tilde.re - s).abs() / s.abs();
        worst = worst.max(err);
        parts.push(format!("{s}: {:.6}", r.a_tilde.re));
    }
    outcome(worst < 1e-3, format!("max rel err {worst:.2e} [{}]", parts.join(", ")))
}

fn criterion_2() -> Outcome {
    let r = reference::solve_3d_reference(0, 0.7, 1.0, 1e-3).unwrap();
    let (alpha, beta) = (r.a_tilde.re, -r.a_tilde.im);
    let ok = (alpha - 1.0).abs() < 5e-3 && (beta - 1.0).abs() < 5e-3;
    outcome(ok, format!("alpha = {alpha:.6}, beta = {beta:.6}"))
}

fn criterion_3() -> Outcome {
    let r = validation::p_wave_peak().unwrap();
    outcome((r.s_peak - 2.0).abs() <= 0.05, format!("s_peak = {:.4}", r.s_peak))
}

fn criterion_4() -> Outcome {
    let null = SolveOptions {
        terms: Terms {
            vdw: false,
            dipole: false,
            trap: true,
        },
        short_range: ShortRange::Regular,
        outer_region: true,
    };
    let mut worst_s = 0.0f64;
    for a_h in [1.7, 5.2] {
        let p = ModelParams {
            a_h,
            ..ModelParams::default()
        };
        let r = solver::solve_point_with(&p, &NumericsParams::default(), &null).unwrap();
        worst_s = worst_s.max((r.s00 - 1.0).norm());
    }
    let spec = SweepSpec {
        model: ModelParams {
            y: 0.0,
            ..ModelParams::default()
        },
        sweep: SweepSettings {
            axes: vec![
                Axis::list(AxisParam::Ah, vec![1.7, 5.2]),
                Axis::list(AxisParam::Ad, vec![0.0, 0.73, 2.0]),
            ],
            ..SweepSettings::default()
        },
        ..SweepSpec::default()
    };
    let mut worst_loss = 0.0f64;
    let mut rows = 0;
    for s in (0..13).map(|i| -6.0 + i as f64) {
        let mut sp = spec.clone();
        sp.model.s = s;
        for r in run(&sp) {
            worst_loss = worst_loss.max(r.loss.abs());
            rows += 1;
        }
    }
    outcome(
        worst_s < 1e-6 && worst_loss < 1e-6,
        format!("|S00 - 1| = {worst_s:.2e}; max |loss| over {rows} y=0 points = {worst_loss:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let cal = reference::calibrate_abar1(1e-3, 1e-2, 8).unwrap();
    let p = ModelParams {
        y: 1.0,
        a_d: 0.0,
        a_h: 5.2,
        q: 0.05,
        ..ModelParams::default()
    };
    let r = solver::solve_point(&p, &NumericsParams::default()).unwrap();
    let target = observables::universal_beta(p.q, Dimension::Two, 1, p.statistics.g(), Some(cal.abar1)).unwrap();
    // m = +1 and m = -1 both react; the tabulated odd-wave rate covers the pair
    let beta = 2.0 * r.beta;
    let rel = (beta - target).abs() / target;
    outcome(
        rel < 0.1,
        format!(
            "abar1 = {:.5}; 2 beta = {beta:.5e} vs {target:.5e} (rel {rel:.2e})",
            cal.abar1
        ),
    )
}

struct Family {
    /// `(a_h, a_d, resonance)` for every curve.
    peaks: Vec<(f64, f64, Resonance)>,
    seconds: f64,
}

fn resonance_family() -> Family {
    let start = Instant::now();
    let mut peaks = Vec::new();
    for name in ["beta-vs-s-tight", "beta-vs-s-loose"] {
        let spec = figure_preset(name).unwrap();
        let records = run(&spec);
        let per_curve = spec.sweep.axes[1].len();
        for curve in records.chunks(per_curve) {
            let res = analysis::resonance_from_records(curve).unwrap();
            peaks.push((curve[0].a_h, curve[0].a_d, res));
        }
    }
    Family {
        peaks,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn peak(f: &Family, a_h: f64, a_d: f64) -> Resonance {
    f.peaks
        .iter()
        .find(|(h, d, _)| *h == a_h && *d == a_d)
        .map(|p| p.2)
        .unwrap()
}

fn criterion_6(f: &Family) -> Outcome {
    let s0 = peak(f, 1.7, 0.0);
    let s32 = peak(f, 1.7, 0.32);
    let s73 = peak(f, 1.7, 0.73);
    let s202 = peak(f, 1.7, 2.02);
    let loose = peak(f, 5.2, 0.0);
    let shift = s0.s_peak > s32.s_peak && s32.s_peak > s73.s_peak;
    let damped = s202.beta_peak < s0.beta_peak;
    let squeeze = loose.beta_peak > s0.beta_peak;
    outcome(
        shift && damped && squeeze && f.seconds < 1800.0,
        format!(
            "s_peak {:.3} > {:.3} > {:.3}: {shift}; beta_max(2.02) {:.3e} < {:.3e}: {damped}; \
             loose {:.3e} > tight {:.3e}: {squeeze}; {:.0} s",
            s0.s_peak,
            s32.s_peak,
            s73.s_peak,
            s202.beta_peak,
            s0.beta_peak,
            loose.beta_peak,
            s0.beta_peak,
            f.seconds
        ),
    )
}

fn circle_scan(y: f64) -> SweepSpec {
    SweepSpec {
        model: ModelParams {
            y,
            a_d: 0.2,
            ..ModelParams::default()
        },
        sweep: SweepSettings {
            axes: vec![Axis::range(AxisParam::S, -60.0, 60.0, 48, Spacing::Phase)],
            ..SweepSettings::default()
        },
        ..SweepSpec::default()
    }
}

fn criterion_7() -> Outcome {
    let c5 = analysis::circle_from_records(&run(&circle_scan(0.5))).unwrap();
    let c8 = analysis::circle_from_records(&run(&circle_scan(0.8))).unwrap();
    let c1 = analysis::circle_from_records(&run(&circle_scan(1.0))).unwrap();
    let ok = c5.rms_relative < 0.03 && c8.rms_relative < 0.03 && c8.radius < c5.radius && c1.radius < 0.01;
    outcome(
        ok,
        format!(
            "y=0.5: r {:.3e} rms {:.1e}; y=0.8: r {:.3e} rms {:.1e}; y=1: r {:.1e}",
            c5.radius, c5.rms_relative, c8.radius, c8.rms_relative, c1.radius
        ),
    )
}

fn energy_scan(a_d: f64) -> SweepSpec {
    SweepSpec {
        model: ModelParams {
            y: 1.0,
            a_d,
            a_h: 1.7,
            ..ModelParams::default()
        },
        sweep: SweepSettings {
            axes: vec![Axis::range(AxisParam::Q, 1e-2, 1e-3f64.sqrt(), 9, Spacing::Log)],
            ..SweepSettings::default()
        },
        ..SweepSpec::default()
    }
}

fn criterion_8() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for a_d in [0.73, 2.02] {
        let fit = analysis::threshold_from_records(&run(&energy_scan(a_d))).unwrap();
        ok &= (fit.slope - 1.0).abs() <= 0.05;
        parts.push(format!("a_d {a_d}: slope {:.4} +- {:.1e}", fit.slope, fit.slope_stderr));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_9(f: &Family) -> Outcome {
    let mut points: Vec<ModelParams> = f
        .peaks
        .iter()
        .map(|(a_h, a_d, r)| ModelParams {
            a_h: *a_h,
            a_d: *a_d,
            s: r.s_peak,
            y: 0.7,
            ..ModelParams::default()
        })
        .collect();
    points.push(ModelParams {
        y: 1.0,
        a_h: 5.2,
        ..ModelParams::default()
    });
    for y in [0.5, 0.8] {
        for s in [-3.0, 2.0] {
            points.push(ModelParams {
                y,
                s,
                a_d: 0.2,
                ..ModelParams::default()
            });
        }
    }
    for a_d in [0.73, 2.02] {
        for q in [1e-2, 1e-3f64.sqrt()] {
            points.push(ModelParams {
                y: 1.0,
                a_d,
                q,
                ..ModelParams::default()
            });
        }
    }
    let mut worst = (0.0f64, String::new());
    for p in &points {
        let c = solver::convergence_check(p, &NumericsParams::default()).unwrap();
        if c.max_change() > worst.0 {
            worst = (
                c.max_change(),
                format!(
                    "a_h {} a_d {} s {:.3} y {} q {:.4}: l {:.1e}, P {:.1e}, R {:.1e}",
                    p.a_h, p.a_d, p.s, p.y, p.q, c.l_max_doubled, c.points_doubled, c.r_max_raised
                ),
            );
        }
    }
    let mut spec = figure_preset("beta-vs-s-tight").unwrap();
    spec.sweep.axes = vec![
        Axis::list(AxisParam::Ad, vec![0.0, 0.73]),
        Axis::range(AxisParam::S, -6.0, 6.0, 25, Spacing::Linear),
    ];
    let mut csv = Vec::new();
    for w in [1, 4] {
        spec.sweep.workers = Some(w);
        csv.push(sweep::csv_string(&run(&spec)).unwrap());
    }
    let identical = csv[0] == csv[1];
    outcome(
        worst.0 < 5e-3 && identical,
        format!(
            "{} points, worst change {:.2e} ({}); CSV identical for 1 and 4 workers: {identical}",
            points.len(),
            worst.0,
            worst.1
        ),
    )
}

fn main() {
    let mut all = true;
    let mut report = |n: u32, title: &str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = f();
        all &= o.passed;
        println!(
            "criterion {n} {}: {title}: {} ({:.1} s)",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    };
    report(1, "free-space scattering length equals s", &|| {
        let t = Instant::now();
        let mut o = criterion_1();
        let secs = t.elapsed().as_secs_f64();
        o.passed &= secs < 5.0;
        o
    });
    report(2, "universal s-wave limit", &criterion_2);
    report(3, "p-wave resonance position", &criterion_3);
    report(4, "null scattering and flux conservation", &criterion_4);
    report(5, "universal quasi-2D odd-wave rate", &|| {
        let t = Instant::now();
        let mut o = criterion_5();
        o.passed &= t.elapsed().as_secs_f64() < 60.0;
        o
    });
    let family = resonance_family();
    report(6, "resonance shift, damping and squeezing", &|| criterion_6(&family));
    report(7, "circles in the complex scattering-length plane", &criterion_7);
    report(8, "threshold law", &criterion_8);
    report(9, "numerical robustness and determinism", &|| criterion_9(&family));
    if !all {
        eprintln!("acceptance: at least one criterion failed");
        std::process::exit(1);
    }
}
