//! Argument parsing and exit codes.

use std::ffi::OsString;
use std::io::Write;
use std::net::IpAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, SegmentJob};
use crate::config::load_config;
use crate::service::{self, ServiceOptions};

/// Every scan succeeded.
pub const EXIT_OK: i32 = 0;
/// At least one input failed.
pub const EXIT_FAILURE: i32 = 1;
/// Bad arguments or an unreadable config.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "choroidseg",
    version,
    about = "RPE and choroid segmentation for EDI-OCT B-scans"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment scans (files or directories of .png/.pgm) into result JSON and thickness CSV.
    Segment(SegmentArgs),
    /// Compare a result with expert labels.
    Eval(EvalArgs),
    /// Stack results into a thickness map (CSV, PNG and range sidecar).
    ThicknessMap(ThicknessMapArgs),
    /// Serve the correction API and UI.
    Serve(ServeArgs),
    /// Write a synthetic scan with its ground-truth labels.
    Phantom(PhantomArgs),
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Pipeline config (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Also render boundary overlays.
    #[arg(long)]
    pub overlay: bool,
    /// Axial resolution in micrometres per pixel row.
    #[arg(long)]
    pub resolution_um: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub result: PathBuf,
    pub labels: PathBuf,
    /// Print the reports as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ThicknessMapArgs {
    /// Result JSONs in scan order.
    #[arg(required = true)]
    pub results: Vec<PathBuf>,
    /// Output path stem; `.csv`, `.png` and `.range.txt` are appended.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "CHOROIDSEG_BIND", default_value = "127.0.0.1")]
    pub bind: IpAddr,
    #[arg(long, env = "CHOROIDSEG_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Upload size limit in MiB.
    #[arg(long, default_value_t = 32)]
    pub max_upload_mib: usize,
    /// Directory holding the correction UI bundle.
    #[arg(long, env = "CHOROIDSEG_UI_DIR", default_value = "ui/dist")]
    pub ui_dir: PathBuf,
    /// Write every result revision to this directory as `<session>.json`.
    #[arg(long)]
    pub results_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of vessel disks (default 30).
    #[arg(long)]
    pub vessels: Option<usize>,
    /// Label every n-th column.
    #[arg(long, default_value_t = 16)]
    pub label_step: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    match cli.command {
        Command::Segment(args) => run_segment(args, out, err),
        Command::Eval(args) => run_eval(args, out, err),
        Command::ThicknessMap(args) => {
            match commands::thickness_map_files(&args.results, &args.out) {
                Ok(files) => {
                    let _ = writeln!(
                        out,
                        "{}\n{}\n{}",
                        files.csv.display(),
                        files.raster.display(),
                        files.range.display()
                    );
                    EXIT_OK
                }
                Err(e) => fail(err, e),
            }
        }
        Command::Serve(args) => run_serve(args, err),
        Command::Phantom(args) => {
            if let Err(e) = std::fs::create_dir_all(&args.out) {
                return fail(err, e.into());
            }
            match commands::write_phantom(
                args.seed,
                args.vessels,
                args.label_step.max(1),
                &args.out,
            ) {
                Ok((scan, labels)) => {
                    let _ = writeln!(out, "{}\n{}", scan.display(), labels.display());
                    EXIT_OK
                }
                Err(e) => fail(err, e),
            }
        }
    }
}

fn fail(err: &mut impl Write, e: anyhow::Error) -> i32 {
    let _ = writeln!(err, "error: {e:#}");
    EXIT_FAILURE
}

fn usage(err: &mut impl Write, msg: impl std::fmt::Display) -> i32 {
    let _ = writeln!(err, "error: {msg}");
    EXIT_USAGE
}

fn run_segment(args: SegmentArgs, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let config = match load_config(args.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return usage(err, e),
    };
    if let Some(r) = args.resolution_um {
        if !(r > 0.0 && r.is_finite()) {
            return usage(err, format!("--resolution-um must be positive, got {r}"));
        }
    }
    let scans = match commands::collect_inputs(&args.inputs) {
        Ok(s) if s.is_empty() => return usage(err, "no .png or .pgm scans among the inputs"),
        Ok(s) => s,
        Err(e) => return usage(err, format!("cannot list inputs: {e}")),
    };
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        return usage(err, format!("cannot create {}: {e}", args.out.display()));
    }
    let job = SegmentJob {
        config: &config,
        out_dir: &args.out,
        overlay: args.overlay,
        resolution_um: args.resolution_um,
    };
    let report = commands::segment_batch(&scans, &job);
    for (scan, files) in &report.written {
        let _ = writeln!(out, "{} -> {}", scan.display(), files.json.display());
    }
    for (scan, reason) in &report.failed {
        let _ = writeln!(err, "error: {}: {reason}", scan.display());
    }
    if report.failed.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

fn run_eval(args: EvalArgs, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let reports = match commands::evaluate_files(&args.result, &args.labels) {
        Ok(r) => r,
        Err(e) => return fail(err, e),
    };
    let written = if args.json {
        serde_json::to_string_pretty(&reports)
            .map_err(std::io::Error::other)
            .and_then(|s| writeln!(out, "{s}"))
    } else {
        commands::write_eval_text(&reports, out)
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => fail(err, e.into()),
    }
}

fn run_serve(args: ServeArgs, err: &mut impl Write) -> i32 {
    let config = match load_config(args.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return usage(err, e),
    };
    let options = ServiceOptions {
        config,
        max_upload_bytes: args.max_upload_mib.saturating_mul(1 << 20),
        ui_dir: Some(args.ui_dir),
        results_dir: args.results_dir,
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => return fail(err, e.into()),
    };
    match runtime.block_on(service::serve((args.bind, args.port).into(), options)) {
        Ok(()) => EXIT_OK,
        Err(e) => fail(err, e),
    }
}
