use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use sustain_core::dataset::parse_rates;
use sustain_core::dataset::parse_time_series;
use sustain_core::{
    bond_strength, builtin_dataset, compare_models, confidence_band, detect_failure_intersection,
    detect_failure_pressure, eval_model, fit, rate_sensitivity, safe_load, seconds_to_hours,
    AnchorGeometry, BuiltinDataset, DetectionConfig, DetectionMethod, Error, FitConfig, FitResult,
    ModelKind, ModelParams, TtfDataset, FIFTY_YEARS_H, HOURS_PER_YEAR,
};

use crate::report::{
    emit, params_list, Band, BondRow, DatasetSummary, Detection, DirectParameters, Fingerprint,
    RankRow, RateSummary, Report, SafeLoad,
};
use crate::{
    Assignment, Command, CompareArgs, DatasetCommand, DetectArgs, ExtrapolateArgs, FitArgs, Input,
    Method, ModelOptions, Output, RateArgs,
};

/// Number of log-uniform samples in plotted curves.
const CURVE_SAMPLES: usize = 200;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io { path: PathBuf, source: io::Error },
    Core(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::Core(e) => exit_code(e),
        }
    }
}

/// 1 for bad input, 2 for numerical failure.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_)
        | Error::Parse { .. }
        | Error::EmptyDataset
        | Error::UnknownDataset(_)
        | Error::InvalidParams { .. }
        | Error::InvalidConfig(_)
        | Error::InvalidInput(_)
        | Error::MissingChannel(_)
        | Error::InvalidSeries(_) => 1,
        _ => 2,
    }
}

pub fn run(command: Command, arguments: Vec<String>) -> Result<u8, CliError> {
    match command {
        Command::Fit(a) => cmd_fit(a, arguments),
        Command::Compare(a) => cmd_compare(a, arguments),
        Command::Extrapolate(a) => cmd_extrapolate(a, arguments),
        Command::Detect(a) => cmd_detect(a, arguments),
        Command::Rate(a) => cmd_rate(a, arguments),
        Command::Dataset(c) => cmd_dataset(c, arguments),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_text(path: &Path) -> Result<(String, Vec<u8>), CliError> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Usage(format!("{} is not UTF-8 text", path.display())))?;
    Ok((text, bytes))
}

fn load_input(
    builtin: Option<&str>,
    csv: Option<&Path>,
) -> Result<(TtfDataset, Fingerprint), CliError> {
    match (builtin, csv) {
        (Some(name), _) => {
            let ds = builtin_dataset(name)?;
            let fp = Fingerprint::builtin(name, &ds.to_csv_string());
            Ok((ds, fp))
        }
        (None, Some(path)) => {
            let (text, bytes) = read_text(path)?;
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("dataset");
            let ds = TtfDataset::from_csv_str(&text, stem)?;
            Ok((ds, Fingerprint::file(path, &bytes)))
        }
        (None, None) => Err(CliError::Usage("give --builtin or --csv".into())),
    }
}

fn fit_config(kind: ModelKind, options: &ModelOptions) -> Result<FitConfig, CliError> {
    let mut config = FitConfig::new(kind);
    for name in &options.release {
        if kind.param_index(name).is_none() {
            return Err(CliError::Usage(format!("{kind} has no parameter `{name}`")));
        }
        config = config.release(name);
    }
    for Assignment { name, value } in &options.fix {
        config = config.fix(name, *value);
    }
    if let Some(floor) = options.kappa_inf_floor {
        config = config.with_kappa_inf_floor(Some(floor));
    }
    config.validate()?;
    Ok(config)
}

fn check_level(level: f64) -> Result<(), CliError> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "--level {level} must lie in (0, 1)"
        )))
    }
}

fn check_lives(years: &[f64]) -> Result<(), CliError> {
    match years.iter().find(|y| !(**y > 0.0 && y.is_finite())) {
        Some(y) => Err(CliError::Usage(format!(
            "service life {y} years must be positive"
        ))),
        None => Ok(()),
    }
}

fn finish(report: &Report, output: &Output, stem: &str) -> Result<(), CliError> {
    emit(
        report,
        output.out.as_deref(),
        output.report_dir.as_deref(),
        stem,
    )
    .map_err(|source| CliError::Io {
        path: output
            .out
            .clone()
            .or_else(|| output.report_dir.clone())
            .unwrap_or_else(|| PathBuf::from("<stdout>")),
        source,
    })
}

/// `CURVE_SAMPLES` times spread log-uniformly over `[lo, hi]`.
fn log_grid(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..CURVE_SAMPLES)
        .map(|i| (a + (b - a) * i as f64 / (CURVE_SAMPLES - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[CURVE_SAMPLES - 1] = hi;
    grid
}

fn safe_load_rows(fit: &FitResult, years: &[f64], level: f64) -> Vec<SafeLoad> {
    years
        .iter()
        .map(|&y| {
            let hours = y * HOURS_PER_YEAR;
            let (load_level, error) = match safe_load(fit, hours) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let lower_confidence = confidence_band(fit, &[hours], level)
                .ok()
                .map(|b| b[0].lower);
            SafeLoad {
                model: fit.kind,
                service_life_years: y,
                service_life_h: hours,
                load_level,
                lower_confidence,
                error,
            }
        })
        .collect()
}

fn write_curve(
    path: &Path,
    fit: &FitResult,
    times: &[f64],
    band: Option<&Band>,
) -> Result<(), CliError> {
    let mut out = String::from("t_h,y_fit,y_lower,y_upper\n");
    for (i, &t) in times.iter().enumerate() {
        let y = fit.params.eval_unchecked(t);
        match band {
            Some(b) => {
                let p = &b.points[i];
                out.push_str(&format!("{t:?},{y:?},{:?},{:?}\n", p.lower, p.upper));
            }
            None => out.push_str(&format!("{t:?},{y:?},,\n")),
        }
    }
    fs::write(path, out).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_fit(args: FitArgs, arguments: Vec<String>) -> Result<u8, CliError> {
    check_level(args.level)?;
    check_lives(&args.service_life_years)?;
    let (ds, fingerprint) = load_input(args.input.builtin.as_deref(), args.input.csv.as_deref())?;
    let config = fit_config(args.model, &args.options)?;
    let mut report = Report::new("fit", arguments);
    report.input = Some(fingerprint);
    let stem = format!("fit-{}-{}", ds.id(), args.model);

    let result = match fit(&ds, &config) {
        Ok(r) => r,
        Err(e) => {
            report.warn(ds.warnings());
            report.fail(&e);
            finish(&report, &args.output, &stem)?;
            eprintln!("error: {e}");
            return Ok(exit_code(&e));
        }
    };
    report.warn(result.warnings.iter().cloned());
    report.fits.push((&result).into());

    let t_min = ds
        .failed()
        .map(|p| p.failure_time)
        .fold(f64::INFINITY, f64::min);
    let times = log_grid(t_min / 10.0, FIFTY_YEARS_H.max(t_min));
    let band = match confidence_band(&result, &times, args.level) {
        Ok(points) => Some(Band {
            model: result.kind,
            level: args.level,
            points,
        }),
        Err(e) => {
            report.warn([format!("{} confidence band unavailable: {e}", result.kind)]);
            None
        }
    };
    if let Some(path) = &args.curve_out {
        write_curve(path, &result, &times, band.as_ref())?;
    }
    report.safe_load = safe_load_rows(&result, &args.service_life_years, args.level);
    report.bands.extend(band);

    finish(&report, &args.output, &stem)?;
    Ok(if result.converged { 0 } else { 2 })
}

fn parse_kinds(names: &[String]) -> Result<Vec<ModelKind>, CliError> {
    let mut kinds = Vec::new();
    for name in names {
        let add: Vec<ModelKind> = if name.trim() == "all" {
            ModelKind::ALL.to_vec()
        } else {
            vec![name
                .trim()
                .parse()
                .map_err(|e: Error| CliError::Usage(e.to_string()))?]
        };
        for k in add {
            if !kinds.contains(&k) {
                kinds.push(k);
            }
        }
    }
    if kinds.is_empty() {
        return Err(CliError::Usage("no models requested".into()));
    }
    Ok(kinds)
}

fn cmd_compare(args: CompareArgs, arguments: Vec<String>) -> Result<u8, CliError> {
    check_lives(&[args.service_life_years])?;
    let kinds = parse_kinds(&args.models)?;
    let (ds, fingerprint) = load_input(args.input.builtin.as_deref(), args.input.csv.as_deref())?;
    let life_h = args.service_life_years * HOURS_PER_YEAR;
    let comparison = compare_models(&ds, &kinds, &[], life_h)?;

    let mut report = Report::new("compare", arguments);
    report.input = Some(fingerprint);
    report.warn(ds.warnings());
    for row in &comparison.rows {
        report.ranking.push(RankRow {
            rank: row.rank,
            model: row.kind,
            load_sse: row.fit.as_ref().map(|f| f.load_sse),
            free_params: row.fit.as_ref().map(FitResult::free_count),
            safe_load: row.safe_load,
            long_time_asymptote: row.long_time_asymptote,
            error: row.error.clone(),
        });
        match &row.fit {
            Some(f) => {
                report.warn(f.warnings.iter().cloned());
                report.fits.push(f.into());
                report.safe_load.push(SafeLoad {
                    model: f.kind,
                    service_life_years: args.service_life_years,
                    service_life_h: life_h,
                    load_level: row.safe_load,
                    lower_confidence: None,
                    error: row.error.clone(),
                });
            }
            None => report.warn([format!(
                "{} fit failed: {}",
                row.kind,
                row.error.as_deref().unwrap_or("unknown error")
            )]),
        }
    }
    let code = if report.fits.is_empty() { 2 } else { 0 };
    finish(&report, &args.output, &format!("compare-{}", ds.id()))?;
    Ok(code)
}

fn direct_params(kind: ModelKind, given: &[Assignment]) -> Result<ModelParams, CliError> {
    for a in given {
        if kind.param_index(&a.name).is_none() {
            return Err(CliError::Usage(format!(
                "{kind} has no parameter `{}`",
                a.name
            )));
        }
    }
    let values = kind
        .param_names()
        .iter()
        .map(|name| {
            given
                .iter()
                .rev()
                .find(|a| a.name == *name)
                .map(|a| a.value)
                .ok_or_else(|| CliError::Usage(format!("--params is missing `{name}` for {kind}")))
        })
        .collect::<Result<Vec<f64>, CliError>>()?;
    let params = ModelParams::from_slice(kind, &values)?;
    params.validate()?;
    Ok(params)
}

fn cmd_extrapolate(args: ExtrapolateArgs, arguments: Vec<String>) -> Result<u8, CliError> {
    check_level(args.level)?;
    check_lives(&args.service_life_years)?;
    let mut report = Report::new("extrapolate", arguments);

    if !args.params.is_empty() {
        let params = direct_params(args.model, &args.params)?;
        let mut code = 0;
        for &years in &args.service_life_years {
            let hours = years * HOURS_PER_YEAR;
            let (load_level, error) = match eval_model(&params, hours) {
                Ok(v) => (Some(v), None),
                Err(e) => {
                    code = 2;
                    (None, Some(e.to_string()))
                }
            };
            report.safe_load.push(SafeLoad {
                model: args.model,
                service_life_years: years,
                service_life_h: hours,
                load_level,
                lower_confidence: None,
                error,
            });
        }
        report.warn(params.non_physical());
        report.parameters = Some(DirectParameters {
            model: args.model,
            parameters: params_list(&params, None),
        });
        finish(
            &report,
            &args.output,
            &format!("extrapolate-{}", args.model),
        )?;
        return Ok(code);
    }

    let (ds, fingerprint) = load_input(args.input.builtin.as_deref(), args.input.csv.as_deref())?;
    let config = fit_config(args.model, &args.options)?;
    report.input = Some(fingerprint);
    let stem = format!("extrapolate-{}-{}", ds.id(), args.model);
    match fit(&ds, &config) {
        Ok(result) => {
            report.warn(result.warnings.iter().cloned());
            report.fits.push((&result).into());
            report.safe_load = safe_load_rows(&result, &args.service_life_years, args.level);
            let code = if report.safe_load.iter().all(|r| r.error.is_none()) {
                0
            } else {
                2
            };
            finish(&report, &args.output, &stem)?;
            Ok(code)
        }
        Err(e) => {
            report.warn(ds.warnings());
            report.fail(&e);
            finish(&report, &args.output, &stem)?;
            eprintln!("error: {e}");
            Ok(exit_code(&e))
        }
    }
}

fn cmd_detect(args: DetectArgs, arguments: Vec<String>) -> Result<u8, CliError> {
    let method = match args.method {
        Method::Pressure => DetectionMethod::PressureDrop,
        Method::Intersection => DetectionMethod::Intersection,
    };
    let mut config = DetectionConfig::with_method(method);
    if let Some(h) = args.hysteresis {
        config.hysteresis = h;
    }
    config.validate()?;
    let (text, bytes) = read_text(&args.csv)?;
    let series = parse_time_series(&text, args.target, args.full_load_time)?;

    let mut report = Report::new("detect", arguments);
    report.input = Some(Fingerprint::file(&args.csv, &bytes));
    let stem = format!(
        "detect-{}",
        args.csv
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("record")
    );

    let mut pressure_drop = None;
    let mut hint = args.hint;
    let outcome = match method {
        DetectionMethod::PressureDrop => detect_failure_pressure(&series, &config),
        DetectionMethod::Intersection => {
            if series.has_signal() {
                pressure_drop = detect_failure_pressure(&series, &config).ok();
                if hint.is_none() {
                    hint = pressure_drop;
                }
            }
            detect_failure_intersection(&series, &config, hint)
        }
    };
    let code = match outcome {
        Ok(t) => {
            report.detection = Some(Detection {
                method: match args.method {
                    Method::Pressure => "pressure",
                    Method::Intersection => "intersection",
                },
                failure_time_s: t,
                failure_time_h: seconds_to_hours(t),
                full_load_time_s: series.full_load_time(),
                hint_s: hint,
                pressure_drop_s: pressure_drop,
            });
            0
        }
        Err(e) => {
            if matches!(e, Error::NoFailure) {
                report.warn([
                    "record ends without failure; treat the hold time as censored".to_string(),
                ]);
            }
            report.fail(&e);
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    finish(&report, &args.output, &stem)?;
    Ok(code)
}

fn cmd_rate(args: RateArgs, arguments: Vec<String>) -> Result<u8, CliError> {
    let (text, bytes) = read_text(&args.csv)?;
    let points = parse_rates(&text)?;
    let sensitivity = rate_sensitivity(&points)?;
    let mut report = Report::new("rate", arguments);
    report.input = Some(Fingerprint::file(&args.csv, &bytes));
    report.notes.push(
        "exponent e is the log-log slope of peak on rate; percent_per_decade = 10^e - 1".into(),
    );

    let mut bond = Vec::new();
    if let (Some(d), Some(h)) = (args.diameter, args.embedment) {
        let geometry = AnchorGeometry::new(d, h)?;
        for p in &points {
            bond.push(BondRow {
                rate_mm_s: p.rate,
                peak_kn: p.peak,
                bond_strength_mpa: bond_strength(p.peak, geometry)?,
            });
        }
        report.notes.push(
            "bond strength assumes uniform stress over the embedment: N / (pi d h_ef)".into(),
        );
    }
    report.rate = Some(RateSummary {
        exponent: sensitivity.exponent,
        percent_per_decade: sensitivity.percent_per_decade,
        points: sensitivity.points,
        bond_strength: bond,
    });
    let stem = format!(
        "rate-{}",
        args.csv
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("rates")
    );
    finish(&report, &args.output, &stem)?;
    Ok(0)
}

fn cmd_dataset(command: DatasetCommand, arguments: Vec<String>) -> Result<u8, CliError> {
    match command {
        DatasetCommand::List => {
            for d in BuiltinDataset::ALL {
                println!("{d}");
            }
            Ok(0)
        }
        DatasetCommand::Show { input, output } => {
            let Input { builtin, csv } = input;
            let (ds, fingerprint) = load_input(builtin.as_deref(), csv.as_deref())?;
            let mut report = Report::new("dataset show", arguments);
            report.input = Some(fingerprint);
            report.warn(ds.warnings());
            let range = |f: fn(&sustain_core::FailurePoint) -> f64| {
                ds.points()
                    .iter()
                    .map(f)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                        (lo.min(v), hi.max(v))
                    })
            };
            report.dataset = Some(DatasetSummary {
                id: ds.id().to_string(),
                points: ds.points().len(),
                failed: ds.failed().count(),
                censored: ds.censored_count(),
                short_term_capacity_kn: ds.short_term_capacity(),
                capacity_cov: ds.capacity_cov(),
                load_range: range(|p| p.load_level),
                time_range_h: range(|p| p.failure_time),
            });
            finish(&report, &output, &format!("dataset-{}", ds.id()))?;
            Ok(0)
        }
        DatasetCommand::Export { input, out } => {
            let (ds, _) = load_input(input.builtin.as_deref(), input.csv.as_deref())?;
            let csv = ds.to_csv_string();
            match out {
                Some(path) => {
                    fs::write(&path, csv).map_err(|source| CliError::Io { path, source })?
                }
                None => io::stdout()
                    .write_all(csv.as_bytes())
                    .map_err(|source| CliError::Io {
                        path: PathBuf::from("<stdout>"),
                        source,
                    })?,
            }
            Ok(0)
        }
    }
}
