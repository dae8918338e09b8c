//! Delta-method confidence bands for the fitted mean curve.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::FitResult;
use crate::error::{Error, Result};

/// Component of the prediction gradient along an unresolved direction,
/// relative to its norm, that still counts as zero.
const NULL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    /// hours
    pub time: f64,
    pub fitted: f64,
    pub lower: f64,
    pub upper: f64,
}

impl BandPoint {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

/// Two-sided Student-t quantile for confidence `level`.
pub fn t_quantile(level: f64, dof: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let dist = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::InvalidInput(format!("t distribution with {dof} dof: {e}")))?;
    Ok(dist.inverse_cdf(0.5 + 0.5 * level))
}

/// `ŷ(t) ± q·sqrt(gᵀCg)` at each time, with `g` the gradient over the free
/// parameters, `C` the fit covariance and `q` the t quantile on
/// `n − p` degrees of freedom.
pub fn confidence_band(fit: &FitResult, times: &[f64], level: f64) -> Result<Vec<BandPoint>> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    if fit.dof <= 0 {
        return Err(Error::NonPositiveDof(fit.dof));
    }
    let cov = fit
        .covariance
        .as_ref()
        .ok_or(Error::NonPositiveDof(fit.dof))?;
    let q = t_quantile(level, fit.dof as f64)?;
    times
        .iter()
        .map(|&t| {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "band time {t} h must be positive"
                )));
            }
            let fitted = fit.params.eval(t)?;
            let g = fit.free_gradient(t);
            let g_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            for u in &fit.null_directions {
                let along: f64 = g.iter().zip(u).map(|(a, b)| a * b).sum();
                if along.abs() > NULL_TOLERANCE * g_norm {
                    return Err(Error::SingularCovariance);
                }
            }
            let mut var = 0.0;
            for (a, ga) in g.iter().enumerate() {
                for (b, gb) in g.iter().enumerate() {
                    var += ga * cov[a][b] * gb;
                }
            }
            let half = q * var.max(0.0).sqrt();
            Ok(BandPoint {
                time: t,
                fitted,
                lower: fitted - half,
                upper: fitted + half,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::BuiltinDataset;
    use crate::fitting::{fit, FitConfig};
    use crate::models::ModelKind;

    #[test]
    fn t_table_value() {
        // two-sided 95 %, 6 degrees of freedom
        let q = t_quantile(0.95, 6.0).unwrap();
        assert!((q - 2.446_911_851).abs() < 1e-6, "{q}");
        assert!(t_quantile(1.0, 6.0).is_err());
    }

    #[test]
    fn zero_covariance_collapses() {
        let mut r = fit(
            &BuiltinDataset::ProductA.dataset(),
            &FitConfig::new(ModelKind::Logarithmic),
        )
        .unwrap();
        r.covariance = Some(vec![vec![0.0; 2]; 2]);
        let band = confidence_band(&r, &[1.0, 100.0], 0.95).unwrap();
        for p in band {
            assert_eq!(p.lower, p.fitted);
            assert_eq!(p.upper, p.fitted);
        }
    }

    #[test]
    fn band_brackets_fit_and_widens_away_from_data() {
        let r = fit(
            &BuiltinDataset::ProductA.dataset(),
            &FitConfig::new(ModelKind::Logarithmic),
        )
        .unwrap();
        let band = confidence_band(&r, &[10.0, 1e6], 0.95).unwrap();
        assert!(band[0].lower < band[0].fitted && band[0].fitted < band[0].upper);
        assert!(band[1].half_width() > band[0].half_width());
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut r = fit(
            &BuiltinDataset::ProductA.dataset(),
            &FitConfig::new(ModelKind::Logarithmic),
        )
        .unwrap();
        assert!(confidence_band(&r, &[0.0], 0.95).is_err());
        r.converged = false;
        assert!(matches!(
            confidence_band(&r, &[1.0], 0.95),
            Err(Error::NotConverged)
        ));
        r.converged = true;
        r.dof = 0;
        assert!(matches!(
            confidence_band(&r, &[1.0], 0.95),
            Err(Error::NonPositiveDof(0))
        ));
    }
}
