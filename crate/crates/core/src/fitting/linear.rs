//! Closed-form least squares for the logarithmic and power-law families.

use super::{FitConfig, Solved};
use crate::error::{Error, Result};
use crate::models::ModelKind;

/// Line `z = slope·x + intercept` with either coefficient optionally held.
fn line(x: &[f64], z: &[f64], slope: Option<f64>, intercept: Option<f64>) -> (f64, f64) {
    let n = x.len() as f64;
    match (slope, intercept) {
        (Some(s), Some(i)) => (s, i),
        (Some(s), None) => {
            let i = x.iter().zip(z).map(|(x, z)| z - s * x).sum::<f64>() / n;
            (s, i)
        }
        (None, Some(i)) => {
            let sxz: f64 = x.iter().zip(z).map(|(x, z)| x * (z - i)).sum();
            let sxx: f64 = x.iter().map(|x| x * x).sum();
            (sxz / sxx, i)
        }
        (None, None) => {
            let mx = x.iter().sum::<f64>() / n;
            let mz = z.iter().sum::<f64>() / n;
            let sxz: f64 = x.iter().zip(z).map(|(x, z)| (x - mx) * (z - mz)).sum();
            let sxx: f64 = x.iter().map(|x| (x - mx) * (x - mx)).sum();
            let s = sxz / sxx;
            (s, mz - s * mx)
        }
    }
}

pub(super) fn solve(config: &FitConfig, times: &[f64], levels: &[f64]) -> Result<Solved> {
    let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let spread = x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - x.iter().copied().fold(f64::INFINITY, f64::min);
    let slope_free = !config.fixed.contains_key(slope_name(config.kind));
    if slope_free && !(spread > 0.0) {
        return Err(Error::InsufficientPoints {
            needed: 2,
            available: 1,
        });
    }
    let kind = config.kind;
    let fixed = |name: &str| config.fixed.get(name).copied();
    let params = match kind {
        ModelKind::Logarithmic => {
            let (a, b) = line(&x, levels, fixed("a"), fixed("b"));
            vec![a, b]
        }
        ModelKind::PowerLaw => {
            let z: Vec<f64> = levels.iter().map(|y| y.ln()).collect();
            let ln_b = fixed("b").map(f64::ln);
            let (n, lb) = line(&x, &z, fixed("n"), ln_b);
            // keep a held b bit-identical rather than exp(ln b)
            vec![fixed("b").unwrap_or_else(|| lb.exp()), n]
        }
        _ => unreachable!("nonlinear family"),
    };
    let fixed_mask = kind
        .param_names()
        .iter()
        .map(|n| config.fixed.contains_key(*n))
        .collect();
    Ok(Solved {
        params,
        fixed_mask,
        converged: true,
        iterations: 1,
        starts: 1,
        starts_converged: 1,
    })
}

fn slope_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Logarithmic => "a",
        _ => "n",
    }
}
