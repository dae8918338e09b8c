//! `sustain`: fit, compare and extrapolate stress versus time-to-failure
//! data, and extract failure times from raw sustained-load records.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 numerical failure.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sustain_core::ModelKind;

#[derive(Debug, Parser)]
#[command(
    name = "sustain",
    version,
    about = "Sustained-load time-to-failure analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one model family and report parameters, band and safe loads.
    Fit(FitArgs),
    /// Fit several families and rank them by load-level SSE.
    Compare(CompareArgs),
    /// Evaluate a fitted or given curve at service lives.
    Extrapolate(ExtrapolateArgs),
    /// Failure time from a raw sustained-load record.
    Detect(DetectArgs),
    /// Loading-rate sensitivity of peak capacity.
    Rate(RateArgs),
    /// Built-in and file data sets.
    #[command(subcommand)]
    Dataset(DatasetCommand),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Input {
    /// Built-in data set (product_a, product_b, product_c).
    #[arg(long)]
    builtin: Option<String>,
    /// Time-to-failure CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Output {
    /// Report file. Without it the report goes to the report directory, or
    /// to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "SUSTAIN_REPORT_DIR", hide_env_values = true)]
    report_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct Assignment {
    name: String,
    value: f64,
}

fn parse_assignment(s: &str) -> Result<Assignment, String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|e| format!("bad value in `{s}`: {e}"))?;
    Ok(Assignment {
        name: name.trim().to_string(),
        value,
    })
}

#[derive(Debug, Args)]
struct ModelOptions {
    /// Hold a parameter, e.g. `--fix kappa_inf=0.4`. Repeatable.
    #[arg(long = "fix", value_parser = parse_assignment)]
    fix: Vec<Assignment>,
    /// Free a parameter that is fixed by default (`kappa_0`). Repeatable.
    #[arg(long)]
    release: Vec<String>,
    /// Lower bound for a free kappa_inf.
    #[arg(long)]
    kappa_inf_floor: Option<f64>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    model: ModelKind,
    #[command(flatten)]
    options: ModelOptions,
    /// Confidence level of the band.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Service lives for the safe-load table. Repeatable.
    #[arg(long = "service-life-years", default_values_t = [50.0])]
    service_life_years: Vec<f64>,
    /// CSV of `t_h,y_fit,y_lower,y_upper` for plotting.
    #[arg(long)]
    curve_out: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    input: Input,
    /// Comma-separated families, or `all`.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    models: Vec<String>,
    #[arg(long = "service-life-years", default_value_t = 50.0)]
    service_life_years: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
#[group(id = "data", multiple = false)]
struct OptionalInput {
    #[arg(long, conflicts_with = "params")]
    builtin: Option<String>,
    #[arg(long, conflicts_with = "params")]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExtrapolateArgs {
    #[command(flatten)]
    input: OptionalInput,
    #[arg(long)]
    model: ModelKind,
    /// Curve parameters instead of a fit, e.g. `a=-0.05,b=1.0`.
    #[arg(long, value_delimiter = ',', value_parser = parse_assignment, required_unless_present_any = ["builtin", "csv"])]
    params: Vec<Assignment>,
    #[command(flatten)]
    options: ModelOptions,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Repeatable.
    #[arg(long = "service-life-years", required = true)]
    service_life_years: Vec<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Pressure,
    Intersection,
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// Raw record with `time_s`, `displacement_mm` and `load_kN` or
    /// `pressure_bar` columns.
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// Sustained level in the units of the signal channel.
    #[arg(long)]
    target: f64,
    /// Time of full load application, s. Defaults to the first sample at
    /// the target.
    #[arg(long)]
    full_load_time: Option<f64>,
    /// Initial rupture-time estimate for the intersection method, s.
    /// Defaults to the pressure-drop time when available.
    #[arg(long)]
    hint: Option<f64>,
    /// Control band below the target, as a fraction.
    #[arg(long)]
    hysteresis: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct RateArgs {
    /// CSV with `rate_mm_s,peak_kN` columns.
    #[arg(long)]
    csv: PathBuf,
    /// Bar diameter, mm, for bond strength.
    #[arg(long, requires = "embedment")]
    diameter: Option<f64>,
    /// Embedment depth, mm.
    #[arg(long, requires = "diameter")]
    embedment: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Subcommand)]
enum DatasetCommand {
    /// Names of the built-in data sets.
    List,
    /// Summary of a data set as a report.
    Show {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
    },
    /// Write a data set as CSV.
    Export {
        #[command(flatten)]
        input: Input,
        /// Destination; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let arguments: Vec<String> = std::env::args().skip(1).collect();
    match commands::run(cli.command, arguments) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
