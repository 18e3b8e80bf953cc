//! Subcommand implementations. Every command is a pure function of the
//! configuration; files are written one at a time from the calling thread.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use fano_core::fit::{default_inits, eval_model, fit_least_squares, FitKind, FitResult};
use fano_core::lineshape::{find_dips, separation_vs_g, SeparationCurve, SeparationSweep};
use fano_core::spectrum::{intensity_table, sweep_tunneling, IntensityRow};
use fano_core::steady::solve_steady_state;
use fano_core::{SolveOptions, Spectrum, Topology};

use crate::config::RunConfig;
use crate::output::{fmt_float, fmt_opt, partial_path, read_csv, write_atomic, write_csv};
use crate::svg::{render_svg, PlotStyle, Series};

pub const SPECTRUM_HEADER: [&str; 2] = ["omega_over_Om", "T_b"];
pub const FIG5_HEADER: [&str; 4] = ["g_over_Om", "separation_over_Om", "x1_bar_scaled", "x2_bar_scaled"];
pub const FIG7_HEADER: [&str; 4] = ["g_over_Om", "n_a", "n_b", "ratio"];
pub const FIT_HEADER: [&str; 3] = ["model", "param_name", "value"];

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Steady,
    Spectrum,
    Fig3,
    Fig4,
    Fig5,
    Fig7,
    Fit { input: PathBuf },
}

#[derive(Debug, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// Human-readable summary lines.
    pub messages: Vec<String>,
}

struct Failures(Vec<String>);

impl Failures {
    fn push(&mut self, what: String) {
        self.0.push(what);
    }

    fn finish(self, report: RunReport) -> Result<RunReport> {
        if self.0.is_empty() {
            Ok(report)
        } else {
            Err(anyhow!("{}", self.0.join("; ")))
        }
    }
}

pub fn run_command(cmd: &Command, cfg: &RunConfig) -> Result<RunReport> {
    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating output directory {}", cfg.output_dir.display()))?;
    match cmd {
        Command::Steady => steady(cfg),
        Command::Spectrum => spectra(cfg, "spectrum", cfg.topology, &cfg.panel_g()),
        Command::Fig3 => spectra(cfg, "fig3", Topology::FixedEnds, &cfg.panel_g()),
        Command::Fig4 => spectra(cfg, "fig4", Topology::DoubleMovable, &cfg.panel_g()),
        Command::Fig5 => fig5(cfg),
        Command::Fig7 => fig7(cfg),
        Command::Fit { input } => fit_file(cfg, input),
    }
}

fn g_tag(g: f64) -> String {
    format!("g{g:.3}")
}

fn emit_csv(path: PathBuf, header: &[&str], rows: &[Vec<String>], complete: bool, report: &mut RunReport) -> Result<()> {
    let path = if complete { path } else { partial_path(&path) };
    write_csv(&path, header, rows)?;
    report.files.push(path);
    Ok(())
}

fn emit_svg(cfg: &RunConfig, name: &str, series: &[Series], style: &PlotStyle, report: &mut RunReport) -> Result<()> {
    if !cfg.emit_svg {
        return Ok(());
    }
    let svg = render_svg(series, style)?;
    let path = cfg.output_dir.join(name);
    write_atomic(&path, svg.as_bytes())?;
    report.files.push(path);
    Ok(())
}

fn steady(cfg: &RunConfig) -> Result<RunReport> {
    let mut report = RunReport::default();
    let mut failures = Failures(Vec::new());
    let p = &cfg.params;
    let om = p.omega_m();
    let mut text = String::new();
    for g in cfg.g_list.clone().unwrap_or_else(|| vec![0.0]) {
        let q = p.with_tunneling(g * om);
        match solve_steady_state(&q, cfg.topology, &SolveOptions::default()) {
            Ok(s) => {
                let lines = [
                    ("g_over_Om", fmt_float(g)),
                    ("topology", cfg.topology.name().to_string()),
                    ("a_bar_re", fmt_float(s.a_bar.re)),
                    ("a_bar_im", fmt_float(s.a_bar.im)),
                    ("b_bar_re", fmt_float(s.b_bar.re)),
                    ("b_bar_im", fmt_float(s.b_bar.im)),
                    ("n_a", fmt_float(s.photons_a())),
                    ("n_b", fmt_float(s.photons_b())),
                    ("x1_bar_m", fmt_float(s.x1_bar)),
                    ("x2_bar_m", fmt_float(s.x2_bar)),
                    ("delta_bar1_over_Om", fmt_float(s.delta_bar1 / om)),
                    ("delta_bar2_over_Om", fmt_float(s.delta_bar2 / om)),
                    ("iterations", s.iterations.to_string()),
                    ("residual", fmt_float(s.residual)),
                ];
                if !text.is_empty() {
                    text.push('\n');
                }
                for (k, v) in lines {
                    writeln!(text, "{k} = {v}")?;
                }
                report
                    .messages
                    .push(format!("g/Om={g:.3} n_a={:.6e} n_b={:.6e} x1={:.6e} m", s.photons_a(), s.photons_b(), s.x1_bar));
            }
            Err(e) => failures.push(format!("g/Om={g}: {e}")),
        }
    }
    let path = cfg.output_dir.join("steady.txt");
    let path = if failures.0.is_empty() { path } else { partial_path(&path) };
    write_atomic(&path, text.as_bytes())?;
    report.files.push(path);
    failures.finish(report)
}

fn spectrum_rows(spec: &Spectrum) -> Vec<Vec<String>> {
    spec.points
        .iter()
        .map(|pt| vec![fmt_float(pt.omega_over_om), fmt_float(pt.t_b)])
        .collect()
}

fn spectra(cfg: &RunConfig, stem: &str, topology: Topology, gs: &[f64]) -> Result<RunReport> {
    let mut report = RunReport::default();
    let mut failures = Failures(Vec::new());
    let results = sweep_tunneling(&cfg.params, topology, &cfg.grid, gs, cfg.method)?;
    let mut series = Vec::new();
    for (&g, res) in gs.iter().zip(results) {
        let path = cfg.output_dir.join(format!("{stem}_{}.csv", g_tag(g)));
        match res {
            Ok(spec) => {
                let complete = spec.is_complete();
                emit_csv(path, &SPECTRUM_HEADER, &spectrum_rows(&spec), complete, &mut report)?;
                if !complete {
                    failures.push(format!(
                        "g/Om={g}: {} grid point(s) failed, first: {}",
                        spec.gaps.len(),
                        spec.gaps[0].error
                    ));
                }
                let dips = find_dips(&spec, cfg.prominence);
                report.messages.push(format!(
                    "{} g/Om={g:.3} dips={} at {:?}",
                    topology.name(),
                    dips.len(),
                    dips.iter().map(|d| (d.position_over_om * 1e6).round() / 1e6).collect::<Vec<_>>()
                ));
                series.push(Series {
                    label: format!("g/Om = {g:.2}"),
                    points: spec.points.iter().map(|pt| (pt.omega_over_om, pt.t_b)).collect(),
                });
            }
            Err(e) => failures.push(format!("g/Om={g}: {e}")),
        }
    }
    if !series.is_empty() {
        let title = match topology {
            Topology::FixedEnds => "Backward reflection, fixed end mirrors",
            Topology::DoubleMovable => "Backward reflection, two movable mirrors",
        };
        emit_svg(cfg, &format!("{stem}.svg"), &series, &PlotStyle::new(title, "Omega/Omega_m", "T_b"), &mut report)?;
    }
    failures.finish(report)
}

fn fit_rows(fits: &[(FitKind, Result<FitResult, String>)]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (kind, fit) in fits {
        let name = kind.name().to_string();
        if let Ok(f) = fit {
            for (param, v) in kind.param_names().iter().zip(f.model.params()) {
                rows.push(vec![name.clone(), param.to_string(), fmt_float(v)]);
            }
            rows.push(vec![name.clone(), "chi2_per_dof".into(), fmt_float(f.chi2_per_dof)]);
            rows.push(vec![name.clone(), "converged".into(), u8::from(f.converged).to_string()]);
            rows.push(vec![name.clone(), "n_iterations".into(), f.n_iterations.to_string()]);
        }
    }
    rows
}

/// Both model fits of `data`; failures are kept as messages.
pub fn fit_both(data: &[(f64, f64)]) -> Vec<(FitKind, Result<FitResult, String>)> {
    [FitKind::Moffat, FitKind::GeneralizedLogistic]
        .into_iter()
        .map(|k| {
            let fit = if data.is_empty() {
                Err("no data".to_string())
            } else {
                fit_least_squares(k, data, &default_inits(k, data)).map_err(|e| e.to_string())
            };
            (k, fit)
        })
        .collect()
}

fn report_fits(
    cfg: &RunConfig,
    stem: &str,
    data: &[(f64, f64)],
    x_label: &str,
    report: &mut RunReport,
    failures: &mut Failures,
) -> Result<()> {
    let fits = fit_both(data);
    for (k, f) in &fits {
        match f {
            Ok(f) => {
                report.messages.push(format!(
                    "{} chi2/dof={:.6e} converged={} iterations={}",
                    k.name(),
                    f.chi2_per_dof,
                    f.converged,
                    f.n_iterations
                ));
                for w in &f.warnings {
                    report.messages.push(format!("{} warning: {w}", k.name()));
                }
            }
            Err(e) => failures.push(format!("{} fit: {e}", k.name())),
        }
    }
    let complete = fits.iter().all(|(_, f)| f.is_ok());
    emit_csv(cfg.output_dir.join(format!("{stem}_fit.csv")), &FIT_HEADER, &fit_rows(&fits), complete, report)?;

    if cfg.emit_svg && !data.is_empty() {
        let mut series = vec![Series {
            label: "data".into(),
            points: data.to_vec(),
        }];
        let (lo, hi) = data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), d| (a.min(d.0), b.max(d.0)));
        for (k, f) in &fits {
            if let Ok(f) = f {
                let pts = (0..=200)
                    .map(|i| {
                        let x = lo + (hi - lo) * i as f64 / 200.0;
                        (x, eval_model(&f.model, x))
                    })
                    .collect();
                series.push(Series {
                    label: format!("{} fit", k.name()),
                    points: pts,
                });
            }
        }
        emit_svg(
            cfg,
            &format!("{stem}_fit.svg"),
            &series,
            &PlotStyle::new("Least-squares fits", x_label, "y"),
            report,
        )?;
    }
    Ok(())
}

pub fn separation_curve(cfg: &RunConfig) -> Result<SeparationCurve> {
    let sep = &cfg.separation;
    Ok(separation_vs_g(
        &cfg.params,
        &SeparationSweep {
            grid: sep.grid,
            g_min_over_om: sep.g_min,
            g_max_over_om: sep.g_max,
            n_g: sep.g_points,
            scale: cfg.scale_xbar,
            prominence: cfg.prominence,
        },
    )?)
}

fn fig5(cfg: &RunConfig) -> Result<RunReport> {
    let mut report = RunReport::default();
    let mut failures = Failures(Vec::new());
    let curve = separation_curve(cfg)?;
    let rows: Vec<Vec<String>> = curve
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_float(r.g_over_om),
                fmt_opt(r.separation_over_om),
                fmt_opt(r.x1_bar_scaled),
                fmt_opt(r.x2_bar_scaled),
            ]
        })
        .collect();
    let unsolved: Vec<f64> = curve.rows.iter().filter(|r| r.x1_bar_scaled.is_none()).map(|r| r.g_over_om).collect();
    if !unsolved.is_empty() {
        failures.push(format!("steady state failed at g/Om = {unsolved:?}"));
    }
    emit_csv(cfg.output_dir.join("fig5.csv"), &FIG5_HEADER, &rows, unsolved.is_empty(), &mut report)?;
    let missing = curve.rows.iter().filter(|r| r.separation_over_om.is_none()).count();
    if missing > 0 {
        report
            .messages
            .push(format!("{missing} of {} tunneling rates show fewer than two dips", curve.rows.len()));
    }
    let measured = curve.measured();
    if cfg.emit_svg {
        let series = vec![
            Series {
                label: "separation".into(),
                points: measured.clone(),
            },
            Series {
                label: format!("x1_bar x {:e}", curve.scale),
                points: curve
                    .rows
                    .iter()
                    .filter_map(|r| r.x1_bar_scaled.map(|x| (r.g_over_om, x)))
                    .collect(),
            },
        ];
        emit_svg(cfg, "fig5.svg", &series, &PlotStyle::new("Fano dip separation", "g/Omega_m", "Omega/Omega_m"), &mut report)?;
    }
    report_fits(cfg, "fig5", &measured, "g/Omega_m", &mut report, &mut failures)?;
    failures.finish(report)
}

fn fig7(cfg: &RunConfig) -> Result<RunReport> {
    let mut report = RunReport::default();
    let mut failures = Failures(Vec::new());
    let gs = cfg.sweep_g();
    let rows: Vec<IntensityRow> = intensity_table(&cfg.params, cfg.topology, &gs)?
        .into_iter()
        .zip(&gs)
        .filter_map(|(r, g)| r.map_err(|e| failures.push(format!("g/Om={g}: {e}"))).ok())
        .collect();
    let text: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![fmt_float(r.g_over_om), fmt_float(r.n_a), fmt_float(r.n_b), fmt_float(r.ratio)])
        .collect();
    emit_csv(cfg.output_dir.join("fig7.csv"), &FIG7_HEADER, &text, failures.0.is_empty(), &mut report)?;
    if !rows.is_empty() {
        let series = vec![
            Series {
                label: "cavity A".into(),
                points: rows.iter().map(|r| (r.g_over_om, r.n_a)).collect(),
            },
            Series {
                label: "cavity B".into(),
                points: rows.iter().map(|r| (r.g_over_om, r.n_b)).collect(),
            },
        ];
        emit_svg(cfg, "fig7.svg", &series, &PlotStyle::new("Intracavity photon number", "g/Omega_m", "photons"), &mut report)?;
    }
    failures.finish(report)
}

/// First two columns of a CSV with a header row; rows with blank cells are skipped.
pub fn read_xy(path: &Path) -> Result<Vec<(f64, f64)>> {
    let (header, rows) = read_csv(path)?;
    if header.len() < 2 {
        bail!("{}: need at least two columns", path.display());
    }
    Ok(rows
        .into_iter()
        .filter(|r| r.len() >= 2 && r[0].is_finite() && r[1].is_finite())
        .map(|r| (r[0], r[1]))
        .collect())
}

fn fit_file(cfg: &RunConfig, input: &Path) -> Result<RunReport> {
    let mut report = RunReport::default();
    let mut failures = Failures(Vec::new());
    let data = read_xy(input)?;
    if data.is_empty() {
        bail!("{}: no numeric rows", input.display());
    }
    report_fits(cfg, "fit", &data, "x", &mut report, &mut failures)?;
    failures.finish(report)
}
