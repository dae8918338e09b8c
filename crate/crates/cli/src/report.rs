//! JSON report schema and output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use sustain_core::{Asymptote, BandPoint, End, FitResult, ModelKind, ModelParams, ResidualDomain};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub arguments: Vec<String>,
    /// The only field that differs between runs on identical input.
    pub timestamp: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<Fingerprint>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<FitSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bands: Vec<Band>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub safe_load: Vec<SafeLoad>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ranking: Vec<RankRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameters: Option<DirectParameters>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<Detection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<RateSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSummary>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ReportError>,
}

impl Report {
    pub fn new(command: &'static str, arguments: Vec<String>) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            arguments,
            timestamp: timestamp(),
            input: None,
            fits: Vec::new(),
            bands: Vec::new(),
            safe_load: Vec::new(),
            ranking: Vec::new(),
            parameters: None,
            detection: None,
            rate: None,
            dataset: None,
            warnings: Vec::new(),
            notes: Vec::new(),
            error: None,
        }
    }

    /// Adds warnings, skipping exact repeats.
    pub fn warn<I: IntoIterator<Item = String>>(&mut self, warnings: I) {
        for w in warnings {
            if !self.warnings.contains(&w) {
                self.warnings.push(w);
            }
        }
    }

    pub fn fail(&mut self, err: &sustain_core::Error) {
        self.error = Some(ReportError {
            kind: error_kind(err),
            message: err.to_string(),
        });
    }
}

fn timestamp() -> String {
    use time::format_description::well_known::Rfc3339;
    time::OffsetDateTime::now_utc()
        .format(&Rfc3339)
        .unwrap_or_default()
}

#[derive(Debug, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Fingerprint {
    Builtin { name: String, sha256: String },
    File { path: PathBuf, sha256: String },
}

impl Fingerprint {
    pub fn builtin(name: &str, canonical_csv: &str) -> Self {
        Fingerprint::Builtin {
            name: name.to_string(),
            sha256: sha256_hex(canonical_csv.as_bytes()),
        }
    }

    pub fn file(path: &Path, bytes: &[u8]) -> Self {
        Fingerprint::File {
            path: path.to_path_buf(),
            sha256: sha256_hex(bytes),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct Param {
    pub name: &'static str,
    pub value: f64,
    pub fixed: bool,
}

pub fn params_list(params: &ModelParams, fixed_mask: Option<&[bool]>) -> Vec<Param> {
    let kind = params.kind();
    kind.param_names()
        .iter()
        .zip(params.to_vec())
        .enumerate()
        .map(|(i, (&name, value))| Param {
            name,
            value,
            fixed: fixed_mask.is_some_and(|m| m[i]),
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct FitSummary {
    pub model: ModelKind,
    pub parameters: Vec<Param>,
    pub residual_domain: ResidualDomain,
    pub sse: f64,
    pub load_sse: f64,
    pub rmse: f64,
    pub r_squared: f64,
    pub n_points: usize,
    pub dof: i64,
    pub free_params: Vec<String>,
    pub covariance: Option<Vec<Vec<f64>>>,
    pub covariance_rank: usize,
    pub converged: bool,
    pub iterations: usize,
    pub starts: usize,
    pub starts_converged: usize,
    pub short_time_asymptote: Asymptote,
    pub long_time_asymptote: Asymptote,
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        FitSummary {
            model: f.kind,
            parameters: params_list(&f.params, Some(&f.fixed_mask)),
            residual_domain: f.residual_domain,
            sse: f.sse,
            load_sse: f.load_sse,
            rmse: f.rmse,
            r_squared: f.r_squared,
            n_points: f.n_points,
            dof: f.dof,
            free_params: f.free_params.clone(),
            covariance: f.covariance.clone(),
            covariance_rank: f.covariance_rank,
            converged: f.converged,
            iterations: f.iterations,
            starts: f.starts,
            starts_converged: f.starts_converged,
            short_time_asymptote: f.params.asymptote(End::ShortTime),
            long_time_asymptote: f.params.asymptote(End::LongTime),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Band {
    pub model: ModelKind,
    pub level: f64,
    pub points: Vec<BandPoint>,
}

#[derive(Debug, Serialize)]
pub struct SafeLoad {
    pub model: ModelKind,
    pub service_life_years: f64,
    pub service_life_h: f64,
    pub load_level: Option<f64>,
    /// Lower confidence limit of the mean curve at the service life.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_confidence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct RankRow {
    pub rank: usize,
    pub model: ModelKind,
    pub load_sse: Option<f64>,
    pub free_params: Option<usize>,
    pub safe_load: Option<f64>,
    pub long_time_asymptote: Option<Asymptote>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct DirectParameters {
    pub model: ModelKind,
    pub parameters: Vec<Param>,
}

#[derive(Debug, Serialize)]
pub struct Detection {
    pub method: &'static str,
    pub failure_time_s: f64,
    pub failure_time_h: f64,
    pub full_load_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hint_s: Option<f64>,
    /// Pressure-drop result, when the record carries a signal channel and the
    /// intersection method was requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pressure_drop_s: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct RateSummary {
    pub exponent: f64,
    pub percent_per_decade: f64,
    pub points: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bond_strength: Vec<BondRow>,
}

#[derive(Debug, Serialize)]
pub struct BondRow {
    pub rate_mm_s: f64,
    pub peak_kn: f64,
    pub bond_strength_mpa: f64,
}

#[derive(Debug, Serialize)]
pub struct DatasetSummary {
    pub id: String,
    pub points: usize,
    pub failed: usize,
    pub censored: usize,
    pub short_term_capacity_kn: f64,
    pub capacity_cov: Option<f64>,
    pub load_range: (f64, f64),
    pub time_range_h: (f64, f64),
}

#[derive(Debug, Serialize)]
pub struct ReportError {
    pub kind: &'static str,
    pub message: String,
}

fn error_kind(err: &sustain_core::Error) -> &'static str {
    use sustain_core::Error as E;
    match err {
        E::Io(_) => "io",
        E::Parse { .. } => "parse",
        E::EmptyDataset => "empty_dataset",
        E::UnknownDataset(_) => "unknown_dataset",
        E::InvalidParams { .. } => "invalid_params",
        E::DivergesAtOrigin(_) => "diverges_at_origin",
        E::NonFinite { .. } => "non_finite",
        E::OutOfRange { .. } => "out_of_range",
        E::NoBracket { .. } => "no_bracket",
        E::InsufficientPoints { .. } => "insufficient_points",
        E::InvalidConfig(_) => "invalid_config",
        E::NoConvergence { .. } => "no_convergence",
        E::NotConverged => "not_converged",
        E::NonPositiveDof(_) => "non_positive_dof",
        E::SingularCovariance => "singular_covariance",
        E::NoFailure => "no_failure",
        E::MissingChannel(_) => "missing_channel",
        E::ParallelLines => "parallel_lines",
        E::SparseWindow { .. } => "sparse_window",
        E::DetectionDiverged(_) => "detection_diverged",
        E::InvalidSeries(_) => "invalid_series",
        E::InvalidInput(_) => "invalid_input",
    }
}

/// Where a report goes: an explicit file, a file in the report directory,
/// or standard output.
pub fn emit(
    report: &Report,
    out: Option<&Path>,
    dir: Option<&Path>,
    stem: &str,
) -> std::io::Result<()> {
    let json = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    let target = match (out, dir) {
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(d)) => {
            fs::create_dir_all(d)?;
            Some(d.join(format!("{stem}.json")))
        }
        (None, None) => None,
    };
    match target {
        Some(path) => {
            fs::write(&path, json)?;
            println!("report written to {}", path.display());
        }
        None => std::io::stdout().write_all(json.as_bytes())?,
    }
    Ok(())
}
