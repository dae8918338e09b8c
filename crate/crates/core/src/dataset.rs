//! Test-data model and on-disk CSV schemas.
//!
//! Three schemas are understood:
//!
//! - time-to-failure tables: `load_level,failure_time_h,censored` (the
//!   `censored` column is optional, `load_level_pct` may replace
//!   `load_level` to give percentages),
//! - raw sustained-load records: `time_s,displacement_mm,load_kN` (or
//!   `pressure_bar` as the signal column),
//! - loading-rate tables: `rate_mm_s,peak_kN`.
//!
//! Lines starting with `#` are comments. Time-to-failure files may carry
//! `# key=value` metadata comments for `id`, `short_term_capacity_kN` and
//! `capacity_cov`; [`TtfDataset::to_csv_string`] writes them so that an
//! export re-imports bit-identically.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Load levels above this are rejected.
pub const MAX_LOAD_LEVEL: f64 = 1.05;

/// Relative load level paired with the time to failure (or hold time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailurePoint {
    /// Fraction of the short-term capacity, `N / N_100%`.
    pub load_level: f64,
    /// Hours since full load application.
    pub failure_time: f64,
    /// `true` when the test was stopped or is still running without failure;
    /// `failure_time` is then the elapsed hold time.
    pub censored: bool,
}

impl FailurePoint {
    pub fn new(load_level: f64, failure_time: f64) -> Result<Self> {
        let p = FailurePoint {
            load_level,
            failure_time,
            censored: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn running(load_level: f64, hold_time: f64) -> Result<Self> {
        let p = FailurePoint {
            load_level,
            failure_time: hold_time,
            censored: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.load_level > 0.0 && self.load_level <= MAX_LOAD_LEVEL) {
            return Err(Error::InvalidInput(format!(
                "load level {} outside (0, {MAX_LOAD_LEVEL}]",
                self.load_level
            )));
        }
        if !(self.failure_time > 0.0 && self.failure_time.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "failure time {} h is not positive",
                self.failure_time
            )));
        }
        Ok(())
    }
}

/// An ordered set of failure points from one product or test series.
///
/// Replicates at the same load level are kept as separate points. The value
/// is immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtfDataset {
    id: String,
    points: Vec<FailurePoint>,
    short_term_capacity: f64,
    capacity_cov: Option<f64>,
}

impl TtfDataset {
    pub fn new(id: impl Into<String>, points: Vec<FailurePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for p in &points {
            p.validate()?;
        }
        Ok(TtfDataset {
            id: id.into(),
            points,
            short_term_capacity: 0.0,
            capacity_cov: None,
        })
    }

    /// Attaches the short-term capacity in kN (0 means unknown) and its
    /// coefficient of variation.
    pub fn with_capacity(mut self, capacity_kn: f64, cov: Option<f64>) -> Result<Self> {
        if !(capacity_kn >= 0.0 && capacity_kn.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "short-term capacity {capacity_kn} kN is negative"
            )));
        }
        if let Some(c) = cov {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::InvalidInput(format!("capacity CoV {c} is negative")));
            }
        }
        self.short_term_capacity = capacity_kn;
        self.capacity_cov = cov;
        Ok(self)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn points(&self) -> &[FailurePoint] {
        &self.points
    }

    pub fn short_term_capacity(&self) -> f64 {
        self.short_term_capacity
    }

    pub fn capacity_cov(&self) -> Option<f64> {
        self.capacity_cov
    }

    /// Points that actually failed, in input order.
    pub fn failed(&self) -> impl Iterator<Item = &FailurePoint> + '_ {
        self.points.iter().filter(|p| !p.censored)
    }

    pub fn censored_count(&self) -> usize {
        self.points.iter().filter(|p| p.censored).count()
    }

    /// Returns a copy with the points in a different order.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.points.len()];
        if order.len() != self.points.len() {
            return Err(Error::InvalidInput("order is not a permutation".into()));
        }
        let mut points = Vec::with_capacity(order.len());
        for &i in order {
            if i >= seen.len() || seen[i] {
                return Err(Error::InvalidInput("order is not a permutation".into()));
            }
            seen[i] = true;
            points.push(self.points[i]);
        }
        Ok(TtfDataset {
            points,
            ..self.clone()
        })
    }

    /// Returns a copy with every time multiplied by `factor`.
    pub fn with_scaled_times(&self, factor: f64) -> Result<Self> {
        let points = self
            .points
            .iter()
            .map(|p| FailurePoint {
                failure_time: p.failure_time * factor,
                ..*p
            })
            .collect();
        let mut out = TtfDataset::new(self.id.clone(), points)?;
        out.short_term_capacity = self.short_term_capacity;
        out.capacity_cov = self.capacity_cov;
        Ok(out)
    }

    /// Data-quality warnings; none of them prevent fitting.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            if p.load_level > 1.0 {
                out.push(format!(
                    "point {} has load level {} above the short-term capacity",
                    i + 1,
                    p.load_level
                ));
            }
        }
        let censored = self.censored_count();
        if censored > 0 {
            out.push(format!(
                "{censored} censored point(s) excluded from fitting"
            ));
        }
        out
    }

    /// Serializes to the time-to-failure CSV schema with metadata comments.
    ///
    /// Numbers use the shortest representation that parses back to the same
    /// `f64`.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("# id={}\n", self.id));
        s.push_str(&format!(
            "# short_term_capacity_kN={:?}\n",
            self.short_term_capacity
        ));
        if let Some(cov) = self.capacity_cov {
            s.push_str(&format!("# capacity_cov={cov:?}\n"));
        }
        s.push_str("load_level,failure_time_h,censored\n");
        for p in &self.points {
            s.push_str(&format!(
                "{:?},{:?},{}\n",
                p.load_level, p.failure_time, p.censored
            ));
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn from_csv_str(text: &str, default_id: &str) -> Result<Self> {
        let mut id = default_id.to_string();
        let mut capacity = 0.0;
        let mut cov = None;
        for (n, line) in text.lines().enumerate() {
            let Some(comment) = line.trim_start().strip_prefix('#') else {
                continue;
            };
            let Some((key, value)) = comment.split_once('=') else {
                continue;
            };
            let line_no = n as u64 + 1;
            let number = |v: &str| {
                v.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("bad metadata value `{}`: {e}", v.trim()),
                })
            };
            match key.trim() {
                "id" => id = value.trim().to_string(),
                "short_term_capacity_kN" => capacity = number(value)?,
                "capacity_cov" => cov = Some(number(value)?),
                _ => {}
            }
        }

        let table = read_table(text)?;
        let level_col = table.column("load_level");
        let pct_col = table.column("load_level_pct");
        // Divisor rather than a 0.01 factor: 70 / 100 is exactly 0.7.
        let (level_idx, divisor) = match (level_col, pct_col) {
            (Some(i), None) => (i, 1.0),
            (None, Some(i)) => (i, 100.0),
            (Some(_), Some(_)) => {
                return Err(Error::Parse {
                    line: table.header_line,
                    message: "both load_level and load_level_pct given".into(),
                })
            }
            (None, None) => return Err(table.missing("load_level")),
        };
        let time_idx = table
            .column("failure_time_h")
            .ok_or_else(|| table.missing("failure_time_h"))?;
        let censored_idx = table.column("censored");

        let mut points = Vec::with_capacity(table.rows.len());
        for row in &table.rows {
            let load_level = row.number(level_idx)? / divisor;
            let failure_time = row.number(time_idx)?;
            let censored = match censored_idx {
                Some(i) => row.flag(i)?,
                None => false,
            };
            let p = FailurePoint {
                load_level,
                failure_time,
                censored,
            };
            p.validate().map_err(|e| Error::Parse {
                line: row.line,
                message: e.to_string(),
            })?;
            points.push(p);
        }
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        TtfDataset::new(id, points)?.with_capacity(capacity, cov)
    }
}

/// On-disk formats accepted by [`load_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DatasetFormat {
    #[default]
    TtfCsv,
}

/// Reads a time-to-failure table. The file stem becomes the id unless an
/// `# id=` comment overrides it.
pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<TtfDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset");
    match format {
        DatasetFormat::TtfCsv => TtfDataset::from_csv_str(&text, stem),
    }
}

/// The literature data sets shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinDataset {
    ProductA,
    ProductB,
    ProductC,
}

impl BuiltinDataset {
    pub const ALL: [BuiltinDataset; 3] = [
        BuiltinDataset::ProductA,
        BuiltinDataset::ProductB,
        BuiltinDataset::ProductC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinDataset::ProductA => "product_a",
            BuiltinDataset::ProductB => "product_b",
            BuiltinDataset::ProductC => "product_c",
        }
    }

    /// (load level in percent, failure time in hours), as tabulated.
    fn table(self) -> &'static [(f64, f64)] {
        match self {
            BuiltinDataset::ProductA => &[
                (88.0, 0.12),
                (76.0, 0.17),
                (68.0, 0.14),
                (57.0, 36.0),
                (57.0, 52.0),
                (57.0, 55.0),
                (57.0, 59.0),
                (46.0, 16174.0),
            ],
            BuiltinDataset::ProductB => &[
                (81.0, 0.11),
                (73.0, 0.67),
                (72.0, 0.32),
                (70.0, 3.29),
                (70.0, 3.6),
                (67.0, 35.0),
                (56.0, 24.0),
                (53.0, 862.0),
            ],
            BuiltinDataset::ProductC => &[
                (80.0, 0.32),
                (79.0, 0.15),
                (72.0, 11.0),
                (72.0, 7.76),
                (72.0, 37.0),
                (70.0, 0.25),
                (68.0, 0.29),
                (52.0, 1347.0),
                (50.0, 1576.0),
            ],
        }
    }

    pub fn dataset(self) -> TtfDataset {
        let points = self
            .table()
            .iter()
            .map(|&(pct, hours)| FailurePoint {
                // Exact decimal fractions: 88.0 / 100.0 == 0.88.
                load_level: pct / 100.0,
                failure_time: hours,
                censored: false,
            })
            .collect();
        TtfDataset {
            id: self.name().to_string(),
            points,
            short_term_capacity: 0.0,
            capacity_cov: None,
        }
    }
}

impl fmt::Display for BuiltinDataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinDataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinDataset::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::UnknownDataset(s.to_string()))
    }
}

/// Looks up a built-in data set by name.
pub fn builtin_dataset(name: &str) -> Result<TtfDataset> {
    Ok(name.parse::<BuiltinDataset>()?.dataset())
}

/// Which physical quantity the third column of a raw record carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalChannel {
    /// Force in kN.
    Load,
    /// Jack pressure in bar.
    Pressure,
}

impl SignalChannel {
    pub fn column(self) -> &'static str {
        match self {
            SignalChannel::Load => "load_kN",
            SignalChannel::Pressure => "pressure_bar",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Seconds since the start of the record.
    pub time: f64,
    /// Anchor head displacement in mm.
    pub displacement: Option<f64>,
    /// Load (kN) or pressure (bar), see [`TimeSeries::channel`].
    pub signal: Option<f64>,
}

/// A raw sustained-load record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    samples: Vec<Sample>,
    channel: Option<SignalChannel>,
    load_target: f64,
    full_load_time: f64,
}

impl TimeSeries {
    /// `load_target` is in the units of the signal channel. Times must be
    /// strictly increasing and `full_load_time` not earlier than the first
    /// sample.
    pub fn new(
        samples: Vec<Sample>,
        channel: Option<SignalChannel>,
        load_target: f64,
        full_load_time: f64,
    ) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidSeries("no samples".into()))?;
        if !(first.time >= 0.0) {
            return Err(Error::InvalidSeries(format!(
                "negative start time {}",
                first.time
            )));
        }
        if let Some(w) = samples.windows(2).find(|w| !(w[1].time > w[0].time)) {
            return Err(Error::InvalidSeries(format!(
                "time not strictly increasing at {} s",
                w[1].time
            )));
        }
        if !(full_load_time >= first.time && full_load_time.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "full load time {full_load_time} s precedes the first sample"
            )));
        }
        let has_disp = samples.iter().all(|s| s.displacement.is_some());
        let has_signal = channel.is_some() && samples.iter().all(|s| s.signal.is_some());
        if !has_disp && !has_signal {
            return Err(Error::InvalidSeries(
                "neither a displacement nor a load channel is present".into(),
            ));
        }
        Ok(TimeSeries {
            samples,
            channel,
            load_target,
            full_load_time,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn channel(&self) -> Option<SignalChannel> {
        self.channel
    }

    pub fn load_target(&self) -> f64 {
        self.load_target
    }

    pub fn full_load_time(&self) -> f64 {
        self.full_load_time
    }

    pub fn end_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.time)
    }

    pub fn has_displacement(&self) -> bool {
        self.samples.iter().all(|s| s.displacement.is_some())
    }

    pub fn has_signal(&self) -> bool {
        self.channel.is_some() && self.samples.iter().all(|s| s.signal.is_some())
    }
}

/// First sample time at which the signal reaches `target`, the origin of
/// the failure-time axis.
pub fn first_reaching(samples: &[Sample], target: f64) -> Option<f64> {
    samples
        .iter()
        .find(|s| s.signal.is_some_and(|v| v >= target))
        .map(|s| s.time)
}

/// Reads a raw record. Without `full_load_time` the origin is the first
/// sample where the signal reaches `load_target`.
pub fn load_time_series(
    path: impl AsRef<Path>,
    load_target: f64,
    full_load_time: Option<f64>,
) -> Result<TimeSeries> {
    let text = fs::read_to_string(path)?;
    parse_time_series(&text, load_target, full_load_time)
}

pub fn parse_time_series(
    text: &str,
    load_target: f64,
    full_load_time: Option<f64>,
) -> Result<TimeSeries> {
    let table = read_table(text)?;
    let time_idx = table
        .column("time_s")
        .ok_or_else(|| table.missing("time_s"))?;
    let disp_idx = table.column("displacement_mm");
    let (channel, sig_idx) = match (table.column("load_kN"), table.column("pressure_bar")) {
        (Some(i), None) => (Some(SignalChannel::Load), Some(i)),
        (None, Some(i)) => (Some(SignalChannel::Pressure), Some(i)),
        (None, None) => (None, None),
        (Some(_), Some(_)) => {
            return Err(Error::Parse {
                line: table.header_line,
                message: "both load_kN and pressure_bar given".into(),
            })
        }
    };
    if disp_idx.is_none() && sig_idx.is_none() {
        return Err(table.missing("displacement_mm or load_kN"));
    }
    let mut samples = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let time = row.number(time_idx)?;
        if time < 0.0 {
            return Err(Error::Parse {
                line: row.line,
                message: format!("negative time {time}"),
            });
        }
        samples.push(Sample {
            time,
            displacement: disp_idx.map(|i| row.number(i)).transpose()?,
            signal: sig_idx.map(|i| row.number(i)).transpose()?,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let origin = match full_load_time {
        Some(t) => t,
        None if channel.is_some() => first_reaching(&samples, load_target).ok_or_else(|| {
            Error::InvalidSeries(format!("signal never reaches the target {load_target}"))
        })?,
        None => samples[0].time,
    };
    TimeSeries::new(samples, channel, load_target, origin)
}

/// Peak capacity measured at one displacement rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    /// mm/s
    pub rate: f64,
    /// kN
    pub peak: f64,
}

impl RatePoint {
    pub fn new(rate: f64, peak: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite() && peak > 0.0 && peak.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "rate {rate} mm/s and peak {peak} kN must be positive"
            )));
        }
        Ok(RatePoint { rate, peak })
    }
}

pub fn load_rates(path: impl AsRef<Path>) -> Result<Vec<RatePoint>> {
    let text = fs::read_to_string(path)?;
    parse_rates(&text)
}

pub fn parse_rates(text: &str) -> Result<Vec<RatePoint>> {
    let table = read_table(text)?;
    let rate_idx = table
        .column("rate_mm_s")
        .ok_or_else(|| table.missing("rate_mm_s"))?;
    let peak_idx = table
        .column("peak_kN")
        .ok_or_else(|| table.missing("peak_kN"))?;
    let mut out = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let p = RatePoint::new(row.number(rate_idx)?, row.number(peak_idx)?).map_err(|e| {
            Error::Parse {
                line: row.line,
                message: e.to_string(),
            }
        })?;
        out.push(p);
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}

struct Table {
    header: Vec<String>,
    header_line: u64,
    rows: Vec<Row>,
}

struct Row {
    line: u64,
    cells: Vec<String>,
}

impl Table {
    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn missing(&self, name: &str) -> Error {
        Error::Parse {
            line: self.header_line,
            message: format!("missing column `{name}`"),
        }
    }
}

impl Row {
    fn cell(&self, idx: usize) -> Result<&str> {
        self.cells
            .get(idx)
            .map(String::as_str)
            .ok_or_else(|| Error::Parse {
                line: self.line,
                message: format!("missing field {}", idx + 1),
            })
    }

    fn number(&self, idx: usize) -> Result<f64> {
        let cell = self.cell(idx)?;
        let v: f64 = cell.parse().map_err(|_| Error::Parse {
            line: self.line,
            message: format!("`{cell}` is not a number"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: self.line,
                message: format!("`{cell}` is not finite"),
            });
        }
        Ok(v)
    }

    fn flag(&self, idx: usize) -> Result<bool> {
        let cell = self.cell(idx)?;
        match cell.to_ascii_lowercase().as_str() {
            "" | "false" | "0" | "no" | "n" => Ok(false),
            "true" | "1" | "yes" | "y" => Ok(true),
            _ => Err(Error::Parse {
                line: self.line,
                message: format!("`{cell}` is not a boolean"),
            }),
        }
    }
}

fn read_table(text: &str) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header_line = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    if header_line.is_empty() || header_line.iter().all(str::is_empty) {
        return Err(Error::EmptyDataset);
    }
    let header_line_no = header_line.position().map_or(1, |p| p.line());
    let header = header_line.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, 0))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        rows.push(Row {
            line: record.position().map_or(0, |p| p.line()),
            cells: record.iter().map(str::to_string).collect(),
        });
    }
    Ok(Table {
        header,
        header_line: header_line_no,
        rows,
    })
}

fn csv_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}
