//! Failure-time detection from sustained-load records.
//!
//! Two methods are provided. The pressure-drop method takes the first
//! sample after which the controlled load stays below its hysteresis band.
//! The intersection method intersects regression lines fitted to the
//! secondary and tertiary creep stages in a displacement versus `ln t`
//! plot.
//!
//! The creep-stage windows are fractions of a reference time `T` (the time
//! of rupture): secondary `[0.3, 0.6]·T`, tertiary `[0.9, 1.0]·T`. As `T` is
//! not known up front it is found iteratively. Each step intersects the two
//! lines at `t×` and moves `T` so that `t×` falls midway between the two
//! windows (`T = t× / 0.75` for the default windows), capped at the end of
//! the record. While the tertiary line is not steeper than the secondary
//! one the windows have not yet reached the tertiary stage and `T` is
//! enlarged instead.

use serde::{Deserialize, Serialize};

use super::ols;
use crate::dataset::TimeSeries;
use crate::error::{Error, Result};

/// Factor by which the reference time grows while no tertiary stage is in
/// the window.
const WINDOW_GROWTH: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMethod {
    PressureDrop,
    Intersection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub method: DetectionMethod,
    /// Control band below the target, as a fraction of the target.
    pub hysteresis: f64,
    pub secondary_window: (f64, f64),
    pub tertiary_window: (f64, f64),
    pub max_iterations: usize,
    /// Relative change of the reference time that ends the iteration.
    pub convergence: f64,
    pub min_window_samples: usize,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            method: DetectionMethod::PressureDrop,
            hysteresis: 0.02,
            secondary_window: (0.3, 0.6),
            tertiary_window: (0.9, 1.0),
            max_iterations: 20,
            convergence: 0.001,
            min_window_samples: 10,
        }
    }
}

impl DetectionConfig {
    pub fn with_method(method: DetectionMethod) -> Self {
        DetectionConfig {
            method,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let window_ok = |(lo, hi): (f64, f64)| lo > 0.0 && lo < hi && hi <= 1.0;
        if !window_ok(self.secondary_window) || !window_ok(self.tertiary_window) {
            return Err(Error::InvalidInput(
                "windows need 0 < lower < upper <= 1".into(),
            ));
        }
        if self.secondary_window.1 > self.tertiary_window.0 {
            return Err(Error::InvalidInput(
                "secondary window must end before the tertiary window starts".into(),
            ));
        }
        if !(self.hysteresis > 0.0 && self.hysteresis < 1.0) {
            return Err(Error::InvalidInput(format!(
                "hysteresis {} outside (0, 1)",
                self.hysteresis
            )));
        }
        if !(self.convergence > 0.0) || self.max_iterations == 0 {
            return Err(Error::InvalidInput(
                "convergence and max_iterations must be positive".into(),
            ));
        }
        if self.min_window_samples < 2 {
            return Err(Error::InvalidInput(
                "at least two samples per window are needed".into(),
            ));
        }
        Ok(())
    }

    /// Where the intersection sits relative to the reference time once the
    /// iteration has settled: midway between the two windows.
    fn pivot(&self) -> f64 {
        0.5 * (self.secondary_window.1 + self.tertiary_window.0)
    }
}

/// Failure time in seconds after full load application, by the configured
/// method.
pub fn detect_failure(
    series: &TimeSeries,
    config: &DetectionConfig,
    hint: Option<f64>,
) -> Result<f64> {
    match config.method {
        DetectionMethod::PressureDrop => detect_failure_pressure(series, config),
        DetectionMethod::Intersection => detect_failure_intersection(series, config, hint),
    }
}

/// Earliest sample after which the signal stays below
/// `(1 − hysteresis)·target` for the rest of the record.
///
/// Transient dips that recover above the threshold are control hysteresis,
/// not failure. A record that ends above the threshold is censored and
/// yields [`Error::NoFailure`].
pub fn detect_failure_pressure(series: &TimeSeries, config: &DetectionConfig) -> Result<f64> {
    config.validate()?;
    if !series.has_signal() {
        return Err(Error::MissingChannel("load/pressure"));
    }
    let target = series.load_target();
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "load target {target} must be positive"
        )));
    }
    let threshold = (1.0 - config.hysteresis) * target;
    let samples = series.samples();
    let last_held = samples
        .iter()
        .rposition(|s| s.signal.is_some_and(|v| v >= threshold))
        .ok_or_else(|| Error::InvalidSeries("signal never reaches the sustained level".into()))?;
    let Some(drop) = samples.get(last_held + 1) else {
        return Err(Error::NoFailure);
    };
    let t = drop.time - series.full_load_time();
    if t < 0.0 {
        return Err(Error::InvalidSeries(format!(
            "failure at {} s precedes full load application",
            drop.time
        )));
    }
    Ok(t)
}

struct Line {
    slope: f64,
    intercept: f64,
}

fn window_line(points: &[(f64, f64)], from: f64, to: f64, needed: usize) -> Result<Line> {
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(t, _)| *t >= from && *t <= to)
        .map(|&(t, d)| (t.ln(), d))
        .unzip();
    if x.len() < needed {
        return Err(Error::SparseWindow {
            from,
            to,
            count: x.len(),
            needed,
        });
    }
    let (slope, intercept) = ols(&x, &y).ok_or(Error::SparseWindow {
        from,
        to,
        count: x.len(),
        needed,
    })?;
    Ok(Line { slope, intercept })
}

/// Nominal failure time (seconds after full load) at the intersection of
/// the secondary- and tertiary-creep regression lines.
///
/// `hint` seeds the reference (rupture) time; the pressure-drop result is a
/// natural choice. Without it the end of the record is used.
pub fn detect_failure_intersection(
    series: &TimeSeries,
    config: &DetectionConfig,
    hint: Option<f64>,
) -> Result<f64> {
    config.validate()?;
    if !series.has_displacement() {
        return Err(Error::MissingChannel("displacement"));
    }
    let origin = series.full_load_time();
    let points: Vec<(f64, f64)> = series
        .samples()
        .iter()
        .filter_map(|s| {
            let t = s.time - origin;
            (t > 0.0).then(|| (t, s.displacement.unwrap()))
        })
        .collect();
    let record_end = points
        .last()
        .map(|p| p.0)
        .ok_or_else(|| Error::InvalidSeries("no samples after full load".into()))?;
    if let Some(h) = hint {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("hint {h} s must be positive")));
        }
    }
    let mut reference = hint.unwrap_or(record_end).min(record_end);
    let (s_lo, s_hi) = config.secondary_window;
    let (t_lo, t_hi) = config.tertiary_window;
    let needed = config.min_window_samples;

    for _ in 0..config.max_iterations {
        let secondary = window_line(&points, s_lo * reference, s_hi * reference, needed)?;
        let tertiary = window_line(&points, t_lo * reference, t_hi * reference, needed)?;
        let gap = tertiary.slope - secondary.slope;
        let scale = secondary.slope.abs().max(tertiary.slope.abs());
        if gap <= 1e-9 * scale || gap == 0.0 {
            if reference >= record_end {
                return Err(if gap.abs() <= 1e-9 * scale {
                    Error::ParallelLines
                } else {
                    Error::InvalidSeries("displacement does not accelerate towards the end".into())
                });
            }
            reference = (reference * WINDOW_GROWTH).min(record_end);
            continue;
        }
        let crossing = ((secondary.intercept - tertiary.intercept) / gap).exp();
        if !crossing.is_finite() {
            return Err(Error::ParallelLines);
        }
        let next = (crossing / config.pivot()).min(record_end);
        if (next - reference).abs() / reference < config.convergence {
            return Ok(crossing);
        }
        reference = next;
    }
    Err(Error::DetectionDiverged(config.max_iterations))
}
