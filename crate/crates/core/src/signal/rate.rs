use std::f64::consts::{LN_10, PI};

use serde::{Deserialize, Serialize};

use super::ols;
use crate::dataset::RatePoint;
use crate::error::{Error, Result};

/// Power-law sensitivity of peak capacity to displacement rate,
/// `peak ∝ rateᵉ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSensitivity {
    pub exponent: f64,
    /// Relative capacity increase for a tenfold rate increase,
    /// `10ᵉ − 1`.
    pub percent_per_decade: f64,
    pub points: usize,
}

/// Slope of `ln peak` on `ln rate`.
pub fn rate_sensitivity(points: &[RatePoint]) -> Result<RateSensitivity> {
    for p in points {
        RatePoint::new(p.rate, p.peak)?;
    }
    let x: Vec<f64> = points.iter().map(|p| p.rate.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.peak.ln()).collect();
    let mut distinct = x.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InvalidInput(
            "at least two distinct loading rates are required".into(),
        ));
    }
    let (exponent, _) = ols(&x, &y).expect("two distinct rates");
    Ok(RateSensitivity {
        exponent,
        percent_per_decade: (exponent * LN_10).exp_m1(),
        points: points.len(),
    })
}

/// Nominal bar diameter and embedment depth, both in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorGeometry {
    pub diameter: f64,
    pub embedment: f64,
}

impl AnchorGeometry {
    pub fn new(diameter: f64, embedment: f64) -> Result<Self> {
        if !(diameter > 0.0 && embedment > 0.0 && diameter.is_finite() && embedment.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "diameter {diameter} mm and embedment {embedment} mm must be positive"
            )));
        }
        Ok(AnchorGeometry {
            diameter,
            embedment,
        })
    }
}

/// Uniform bond stress `N / (π·d·h_ef)` in MPa for a capacity in kN.
pub fn bond_strength(capacity_kn: f64, geometry: AnchorGeometry) -> Result<f64> {
    if !(capacity_kn > 0.0 && capacity_kn.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "capacity {capacity_kn} kN must be positive"
        )));
    }
    let geometry = AnchorGeometry::new(geometry.diameter, geometry.embedment)?;
    // kN → N; N/mm² = MPa
    Ok(capacity_kn * 1000.0 / (PI * geometry.diameter * geometry.embedment))
}
