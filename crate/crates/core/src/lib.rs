//! Sustained-load time-to-failure analysis.
//!
//! The crate covers the whole chain from raw test records to service-life
//! extrapolation:
//!
//! - [`dataset`]: failure points, raw time series and rate tables, their CSV
//!   schemas, and three built-in literature data sets.
//! - [`models`]: the five stress versus time-to-failure regression families
//!   (logarithmic, power law, sigmoid, rate theory, Powell-Eyring) with
//!   evaluation, inversion and asymptotes.
//! - [`fitting`]: least-squares estimation with fixed or bounded parameters,
//!   delta-method confidence bands, model comparison and safe-load
//!   extrapolation.
//! - [`signal`]: failure-time detection from pressure and displacement
//!   records, loading-rate sensitivity, and uniform bond strength.
//!
//! Times are in hours throughout the regression layer and in seconds in raw
//! time series.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod fitting;
pub mod models;
pub mod signal;

pub use dataset::{
    builtin_dataset, load_dataset, BuiltinDataset, DatasetFormat, FailurePoint, RatePoint, Sample,
    SignalChannel, TimeSeries, TtfDataset,
};
pub use error::{Error, Result};
pub use fitting::{
    compare_at_fifty_years, compare_models, confidence_band, fit, safe_load, t_quantile, BandPoint,
    CompareReport, CompareRow, FitConfig, FitResult, ResidualDomain, FIFTY_YEARS_H, HOURS_PER_YEAR,
};
pub use models::{asymptote, eval_model, inverse_time, Asymptote, End, ModelKind, ModelParams};
pub use signal::{
    bond_strength, detect_failure, detect_failure_intersection, detect_failure_pressure,
    rate_sensitivity, seconds_to_hours, AnchorGeometry, DetectionConfig, DetectionMethod,
    RateSensitivity,
};
