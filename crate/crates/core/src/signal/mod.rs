//! Failure-time extraction from raw records, loading-rate sensitivity and
//! bond strength.

mod detect;
mod rate;

pub use detect::{
    detect_failure, detect_failure_intersection, detect_failure_pressure, DetectionConfig,
    DetectionMethod,
};
pub use rate::{bond_strength, rate_sensitivity, AnchorGeometry, RateSensitivity};

/// Seconds to hours, for handing detected failure times to the regression
/// layer.
pub fn seconds_to_hours(s: f64) -> f64 {
    s / 3600.0
}

/// Ordinary least-squares line `y = slope·x + intercept`.
pub(crate) fn ols(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}
