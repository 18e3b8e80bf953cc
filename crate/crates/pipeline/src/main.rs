use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fano_pipeline::{parse_config, run_command, Command};
use fano_core::Method;

#[derive(Parser)]
#[command(name = "fano", version, about = "Double-cavity optomechanical Fano spectra")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Flat key/value config file; missing keys take the preset values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    svg: bool,
    #[arg(long, global = true, value_enum, default_value_t = MethodArg::Matrix)]
    method: MethodArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Matrix,
    Closed,
}

#[derive(Subcommand)]
enum Cmd {
    /// Steady-state fields and displacements.
    Steady,
    /// Reflection spectrum per tunneling rate for the configured topology.
    Spectrum,
    /// Reflection spectra with fixed end mirrors.
    Fig3,
    /// Reflection spectra with two movable mirrors.
    Fig4,
    /// Dip separation against tunneling rate, with both fits.
    Fig5,
    /// Photon numbers against tunneling rate.
    Fig7,
    /// Fit the first two columns of a CSV file.
    Fit { input: PathBuf },
}

fn run(cli: Cli) -> Result<()> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text).with_context(|| match &cli.config {
        Some(p) => p.display().to_string(),
        None => "default config".into(),
    })?;
    cfg.output_dir = cli.out;
    cfg.emit_svg = cli.svg;
    cfg.method = match cli.method {
        MethodArg::Matrix => Method::MatrixSolve,
        MethodArg::Closed => Method::ClosedForm,
    };
    let cmd = match cli.cmd {
        Cmd::Steady => Command::Steady,
        Cmd::Spectrum => Command::Spectrum,
        Cmd::Fig3 => Command::Fig3,
        Cmd::Fig4 => Command::Fig4,
        Cmd::Fig5 => Command::Fig5,
        Cmd::Fig7 => Command::Fig7,
        Cmd::Fit { input } => Command::Fit { input },
    };
    let report = run_command(&cmd, &cfg)?;
    for m in &report.messages {
        println!("{m}");
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
