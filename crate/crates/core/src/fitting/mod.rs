//! Parameter estimation, confidence bands, comparison and extrapolation.
//!
//! Logarithmic and power-law models are fitted in closed form by ordinary
//! least squares in the domain they are stated in (`y` on `ln t`, and
//! `ln y` on `ln t`). The three asymptotic families are fitted by
//! Levenberg-Marquardt on load-level residuals, with constraints enforced by
//! reparameterisation:
//!
//! - `b`, `c` are log-transformed, `n` is `−exp(u)`,
//! - `κ0` is logistic on `(lower, 1.05)`,
//! - `κ∞` is logistic between its floor and `κ0`, or `κ0 − exp(u)` when no
//!   floor is set (the sigmoid default, which lets the data push the
//!   asymptote below zero).
//!
//! Every nonlinear fit runs from a grid of starts and keeps the lowest SSE.

mod band;
mod compare;
mod linear;
mod lm;
mod transform;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub use band::{confidence_band, t_quantile, BandPoint};
pub use compare::{compare_at_fifty_years, compare_models, CompareReport, CompareRow};

use crate::dataset::{TtfDataset, MAX_LOAD_LEVEL};
use crate::error::{Error, Result};
use crate::models::{ModelKind, ModelParams};
use transform::{Coord, Transform};

pub const HOURS_PER_YEAR: f64 = 8760.0;
/// 50 years of 365 days.
pub const FIFTY_YEARS_H: f64 = 50.0 * HOURS_PER_YEAR;

/// Relative eigenvalue below which the scaled information matrix is
/// treated as singular.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualDomain {
    /// Residuals `y − f(t)`.
    LinearYLogT,
    /// Residuals `ln y − ln f(t)`.
    LogYLogT,
}

impl ResidualDomain {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::PowerLaw => ResidualDomain::LogYLogT,
            _ => ResidualDomain::LinearYLogT,
        }
    }

    fn map(self, y: f64) -> f64 {
        match self {
            ResidualDomain::LinearYLogT => y,
            ResidualDomain::LogYLogT => y.ln(),
        }
    }

    fn slope(self, y: f64) -> f64 {
        match self {
            ResidualDomain::LinearYLogT => 1.0,
            ResidualDomain::LogYLogT => 1.0 / y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub kind: ModelKind,
    /// Parameters held at the given value.
    pub fixed: BTreeMap<String, f64>,
    pub residual_domain: ResidualDomain,
    pub max_iterations: usize,
    /// Relative SSE change that ends the iteration.
    pub tolerance: f64,
    /// Lower bound for a free `kappa_inf`. `None` leaves it unbounded below;
    /// only the sigmoid family accepts that.
    pub kappa_inf_floor: Option<f64>,
}

impl FitConfig {
    /// Defaults per family: `κ0` is fixed at 1 for sigmoid and Powell-Eyring,
    /// the sigmoid `κ∞` is unbounded below, the other `κ∞` are floored at 0.
    pub fn new(kind: ModelKind) -> Self {
        let mut fixed = BTreeMap::new();
        if matches!(kind, ModelKind::Sigmoid | ModelKind::PowellEyring) {
            fixed.insert("kappa_0".to_string(), 1.0);
        }
        let kappa_inf_floor = match kind {
            ModelKind::RateTheory | ModelKind::PowellEyring => Some(0.0),
            _ => None,
        };
        FitConfig {
            kind,
            fixed,
            residual_domain: ResidualDomain::default_for(kind),
            max_iterations: 200,
            tolerance: 1e-10,
            kappa_inf_floor,
        }
    }

    pub fn fix(mut self, name: &str, value: f64) -> Self {
        self.fixed.insert(name.to_string(), value);
        self
    }

    pub fn release(mut self, name: &str) -> Self {
        self.fixed.remove(name);
        self
    }

    pub fn with_kappa_inf_floor(mut self, floor: Option<f64>) -> Self {
        self.kappa_inf_floor = floor;
        self
    }

    fn fixed_value(&self, name: &str) -> Option<f64> {
        self.fixed.get(name).copied()
    }

    pub fn free_count(&self) -> usize {
        self.kind
            .param_names()
            .iter()
            .filter(|n| !self.fixed.contains_key(**n))
            .count()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance {} must be positive", self.tolerance));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive".into());
        }
        for (name, &v) in &self.fixed {
            if self.kind.param_index(name).is_none() {
                return bad(format!("{} has no parameter `{name}`", self.kind));
            }
            if !v.is_finite() {
                return bad(format!("fixed {name} = {v} is not finite"));
            }
            let ok = match (self.kind, name.as_str()) {
                (ModelKind::Logarithmic, "a") => v < 0.0,
                (ModelKind::PowerLaw, "b") => v > 0.0,
                (ModelKind::PowerLaw | ModelKind::RateTheory, "n") => v < 0.0,
                (_, "b" | "c") if !self.kind.is_linear() => v > 0.0,
                (_, "kappa_0") => v > 0.0 && v <= MAX_LOAD_LEVEL,
                (ModelKind::RateTheory, "kappa_inf") => (0.0..1.0).contains(&v),
                (ModelKind::PowellEyring, "kappa_inf") => v >= 0.0,
                _ => true,
            };
            if !ok {
                return bad(format!(
                    "fixed {name} = {v} violates the {} parameter bounds",
                    self.kind
                ));
            }
        }
        if let (Some(ki), Some(k0)) = (self.fixed_value("kappa_inf"), self.fixed_value("kappa_0")) {
            if ki >= k0 {
                return bad(format!(
                    "fixed kappa_inf = {ki} must be below kappa_0 = {k0}"
                ));
            }
        }
        let has_kappa_inf = self.kind.param_index("kappa_inf").is_some();
        match (self.kind, self.kappa_inf_floor) {
            (ModelKind::RateTheory | ModelKind::PowellEyring, None) => {
                return bad(format!("{} requires a kappa_inf floor >= 0", self.kind))
            }
            (ModelKind::RateTheory | ModelKind::PowellEyring, Some(f)) if f < 0.0 => {
                return bad(format!("{} kappa_inf floor {f} must be >= 0", self.kind))
            }
            (_, Some(f)) if has_kappa_inf => {
                let upper = self.fixed_value("kappa_0").unwrap_or(1.0);
                if !(f.is_finite() && f < upper) {
                    return bad(format!("kappa_inf floor {f} must lie below kappa_0"));
                }
                if let Some(ki) = self.fixed_value("kappa_inf") {
                    if ki < f {
                        return bad(format!("fixed kappa_inf = {ki} is below the floor {f}"));
                    }
                }
            }
            _ => {}
        }
        let default_domain = ResidualDomain::default_for(self.kind);
        if self.kind.is_linear() && self.residual_domain != default_domain {
            return bad(format!(
                "{} is fitted in closed form in the {:?} domain only",
                self.kind, default_domain
            ));
        }
        Ok(())
    }

    fn transform(&self) -> Transform {
        let fixed_or = |name: &str, c: Coord| self.fixed_value(name).map_or(c, Coord::Fixed);
        let kappa_0 = |lower: f64| {
            fixed_or(
                "kappa_0",
                Coord::Interval {
                    lo: lower,
                    hi: MAX_LOAD_LEVEL,
                },
            )
        };
        let coords = match self.kind {
            ModelKind::Logarithmic | ModelKind::PowerLaw => unreachable!("closed-form families"),
            ModelKind::Sigmoid | ModelKind::PowellEyring => {
                let (ki, k0) = match (self.fixed_value("kappa_inf"), self.kappa_inf_floor) {
                    (Some(v), _) => (Coord::Fixed(v), kappa_0(v)),
                    (None, Some(lo)) => (Coord::Between { lo, of: 1 }, kappa_0(lo.max(0.0))),
                    (None, None) => (Coord::Below { of: 1 }, kappa_0(0.0)),
                };
                let mut v = vec![ki, k0, fixed_or("b", Coord::Positive)];
                if self.kind == ModelKind::Sigmoid {
                    v.push(fixed_or("c", Coord::Positive));
                }
                v
            }
            ModelKind::RateTheory => vec![
                fixed_or(
                    "kappa_inf",
                    Coord::Interval {
                        lo: self.kappa_inf_floor.unwrap_or(0.0),
                        hi: 1.0,
                    },
                ),
                fixed_or("b", Coord::Positive),
                fixed_or("c", Coord::Positive),
                fixed_or("n", Coord::Negative),
            ],
        };
        Transform::new(coords)
    }
}

/// Outcome of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: ModelKind,
    pub params: ModelParams,
    /// Per parameter in [`ModelKind::param_names`] order; `true` = fixed.
    pub fixed_mask: Vec<bool>,
    /// Names of the free parameters, the row/column order of `covariance`.
    pub free_params: Vec<String>,
    pub residual_domain: ResidualDomain,
    /// Sum of squared residuals in `residual_domain`.
    pub sse: f64,
    /// Sum of squared load-level residuals `y − f(t)`, comparable across
    /// families.
    pub load_sse: f64,
    pub rmse: f64,
    pub r_squared: f64,
    /// `s²·(JᵀJ)⁺` over the free parameters; absent without residual
    /// degrees of freedom.
    pub covariance: Option<Vec<Vec<f64>>>,
    pub covariance_rank: usize,
    /// Unit directions in free-parameter space the data cannot resolve.
    pub null_directions: Vec<Vec<f64>>,
    pub n_points: usize,
    pub dof: i64,
    pub converged: bool,
    pub iterations: usize,
    pub starts: usize,
    pub starts_converged: usize,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn free_count(&self) -> usize {
        self.free_params.len()
    }

    /// Gradient of `y(t)` with respect to the free parameters.
    pub fn free_gradient(&self, t: f64) -> Vec<f64> {
        let g = self.params.gradient(t);
        g.into_iter()
            .zip(&self.fixed_mask)
            .filter(|(_, &fixed)| !fixed)
            .map(|(v, _)| v)
            .collect()
    }
}

struct Observations {
    times: Vec<f64>,
    levels: Vec<f64>,
}

fn observations(dataset: &TtfDataset) -> Observations {
    let mut pts: Vec<(f64, f64)> = dataset
        .failed()
        .map(|p| (p.failure_time, p.load_level))
        .collect();
    // Canonical order: results do not depend on the row order of the input.
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Observations {
        times: pts.iter().map(|p| p.0).collect(),
        levels: pts.iter().map(|p| p.1).collect(),
    }
}

/// Fits one model family to the failed points of `dataset`.
pub fn fit(dataset: &TtfDataset, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let obs = observations(dataset);
    let free = config.free_count();
    let needed = if config.kind.is_linear() {
        free.max(2)
    } else {
        free.max(3)
    };
    if obs.times.len() < needed {
        return Err(Error::InsufficientPoints {
            needed,
            available: obs.times.len(),
        });
    }

    let mut warnings = dataset.warnings();
    let solved = if config.kind.is_linear() {
        linear::solve(config, &obs.times, &obs.levels)?
    } else {
        solve_nonlinear(config, &obs)?
    };
    let params = ModelParams::from_slice(config.kind, &solved.params)?;
    params.validate()?;
    if let Some(w) = params.non_physical() {
        warnings.push(w);
    }
    if !solved.converged {
        warnings.push(format!(
            "{} fit stopped after {} iterations without meeting the tolerance",
            config.kind, solved.iterations
        ));
    }
    let mut result = summarize(config, params, &obs, &solved);
    if result.covariance.is_some() && result.covariance_rank < result.free_count() {
        warnings.push(format!(
            "{} parameters are not separately identifiable (covariance rank {} of {})",
            config.kind,
            result.covariance_rank,
            result.free_count()
        ));
    }
    result.warnings = warnings;
    Ok(result)
}

pub(crate) struct Solved {
    pub params: Vec<f64>,
    pub fixed_mask: Vec<bool>,
    pub converged: bool,
    pub iterations: usize,
    pub starts: usize,
    pub starts_converged: usize,
}

fn solve_nonlinear(config: &FitConfig, obs: &Observations) -> Result<Solved> {
    let transform = config.transform();
    let kind = config.kind;
    let domain = config.residual_domain;
    let targets: Vec<f64> = obs.levels.iter().map(|&y| domain.map(y)).collect();
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(
            "load levels must be positive for log-domain residuals".into(),
        ));
    }

    let eval = |theta: &[f64]| -> Option<(DVector<f64>, DMatrix<f64>)> {
        let (nat, dnat) = transform.forward(theta);
        let params = ModelParams::from_slice(kind, &nat).ok()?;
        let m = obs.times.len();
        let mut r = DVector::zeros(m);
        let mut jac = DMatrix::zeros(m, transform.n_free());
        for (i, &t) in obs.times.iter().enumerate() {
            let f = params.eval_unchecked(t);
            let mapped = domain.map(f);
            if !mapped.is_finite() {
                return None;
            }
            r[i] = targets[i] - mapped;
            let slope = domain.slope(f);
            let g = params.gradient(t);
            for k in 0..transform.n_free() {
                let d: f64 = (0..g.len()).map(|p| g[p] * dnat[(p, k)]).sum();
                jac[(i, k)] = -slope * d;
            }
        }
        if jac.iter().all(|v| v.is_finite()) {
            Some((r, jac))
        } else {
            None
        }
    };

    let settings = lm::LmSettings {
        max_iterations: config.max_iterations,
        tolerance: config.tolerance,
    };
    let starts = initial_guesses(config, obs);
    let mut best: Option<lm::LmOutcome> = None;
    let mut best_any: Option<lm::LmOutcome> = None;
    let mut n_converged = 0;
    for start in &starts {
        let theta0 = transform.internal(start);
        let Some(out) = lm::minimize(eval, theta0, settings) else {
            continue;
        };
        let better = |cur: &Option<lm::LmOutcome>| cur.as_ref().is_none_or(|b| out.sse < b.sse);
        if out.converged {
            n_converged += 1;
            if better(&best) {
                best = Some(out.clone());
            }
        }
        if better(&best_any) {
            best_any = Some(out);
        }
    }
    let Some(chosen) = best else {
        return Err(Error::NoConvergence {
            kind,
            best_sse: best_any.map_or(f64::NAN, |b| b.sse),
        });
    };
    Ok(Solved {
        params: transform.natural(&chosen.theta),
        fixed_mask: transform.fixed_mask(),
        converged: chosen.converged,
        iterations: chosen.iterations,
        starts: starts.len(),
        starts_converged: n_converged,
    })
}

/// Start grid: `κ∞ ∈ {0, ½·min y, 0.9·min y}`, `c ∈ {0.05, 0.2, 1}`,
/// `n ∈ {−0.01, −0.05, −0.2}`, and `b` placing the transition at the
/// geometric mean of the failure times.
fn initial_guesses(config: &FitConfig, obs: &Observations) -> Vec<Vec<f64>> {
    let min_y = obs.levels.iter().copied().fold(f64::INFINITY, f64::min);
    let mean_y = obs.levels.iter().sum::<f64>() / obs.levels.len() as f64;
    let geo_mean_t = (obs.times.iter().map(|t| t.ln()).sum::<f64>() / obs.times.len() as f64).exp();
    let b0 = 1.0 / geo_mean_t;
    let kappa_0 = config.fixed_value("kappa_0").unwrap_or(1.0);
    let floor = config.kappa_inf_floor;

    let kappa_infs: Vec<f64> = match config.fixed_value("kappa_inf") {
        Some(v) => vec![v],
        None => [0.0, 0.5 * min_y, 0.9 * min_y]
            .into_iter()
            .map(|v| match floor {
                Some(lo) => v.max(lo),
                None => v,
            })
            .collect(),
    };
    let pick = |name: &str, grid: &[f64]| -> Vec<f64> {
        config
            .fixed_value(name)
            .map_or_else(|| grid.to_vec(), |v| vec![v])
    };

    let mut out = Vec::new();
    match config.kind {
        ModelKind::Sigmoid => {
            for &ki in &kappa_infs {
                for &b in &pick("b", &[b0]) {
                    for &c in &pick("c", &[0.05, 0.2, 1.0]) {
                        out.push(vec![ki, kappa_0, b, c]);
                    }
                }
            }
        }
        ModelKind::RateTheory => {
            for &ki in &kappa_infs {
                // c matched so that the curve passes the mean level at the
                // geometric-mean time, next to the fixed grid.
                let matched = 1.0 / (mean_y - ki).max(1e-3).sinh();
                let mut cs = vec![0.05, 0.2, 1.0];
                cs.push(matched);
                for &b in &pick("b", &[b0]) {
                    for &c in &pick("c", &cs) {
                        for &n in &pick("n", &[-0.01, -0.05, -0.2]) {
                            out.push(vec![ki, b, c, n]);
                        }
                    }
                }
            }
        }
        ModelKind::PowellEyring => {
            for &ki in &kappa_infs {
                for &b in &pick("b", &[0.01 * b0, b0, 100.0 * b0]) {
                    out.push(vec![ki, kappa_0, b]);
                }
            }
        }
        ModelKind::Logarithmic | ModelKind::PowerLaw => unreachable!(),
    }
    out
}

fn summarize(
    config: &FitConfig,
    params: ModelParams,
    obs: &Observations,
    solved: &Solved,
) -> FitResult {
    let domain = config.residual_domain;
    let kind = config.kind;
    let m = obs.times.len();
    let mut sse = 0.0;
    let mut load_sse = 0.0;
    let mut mean = 0.0;
    for (&t, &y) in obs.times.iter().zip(&obs.levels) {
        let f = params.eval_unchecked(t);
        sse += (domain.map(y) - domain.map(f)).powi(2);
        load_sse += (y - f).powi(2);
        mean += domain.map(y);
    }
    mean /= m as f64;
    let sst: f64 = obs
        .levels
        .iter()
        .map(|&y| (domain.map(y) - mean).powi(2))
        .sum();
    let r_squared = if sst > 0.0 {
        1.0 - sse / sst
    } else if sse == 0.0 {
        1.0
    } else {
        0.0
    };

    let free_idx: Vec<usize> = (0..kind.param_count())
        .filter(|&i| !solved.fixed_mask[i])
        .collect();
    let p = free_idx.len();
    let dof = m as i64 - p as i64;

    let mut jac = DMatrix::zeros(m, p);
    for (i, &t) in obs.times.iter().enumerate() {
        let f = params.eval_unchecked(t);
        let g = params.gradient(t);
        for (k, &j) in free_idx.iter().enumerate() {
            jac[(i, k)] = domain.slope(f) * g[j];
        }
    }
    let (covariance, rank, null_directions) = if dof > 0 && p > 0 {
        let s2 = sse / dof as f64;
        let cov = pseudo_inverse_covariance(&jac, s2);
        (Some(cov.matrix), cov.rank, cov.null_directions)
    } else {
        (None, p, Vec::new())
    };

    FitResult {
        kind,
        params,
        fixed_mask: solved.fixed_mask.clone(),
        free_params: free_idx
            .iter()
            .map(|&i| kind.param_names()[i].to_string())
            .collect(),
        residual_domain: domain,
        sse,
        load_sse,
        rmse: (sse / m as f64).sqrt(),
        r_squared,
        covariance,
        covariance_rank: rank,
        null_directions,
        n_points: m,
        dof,
        converged: solved.converged,
        iterations: solved.iterations,
        starts: solved.starts,
        starts_converged: solved.starts_converged,
        warnings: Vec::new(),
    }
}

struct Covariance {
    matrix: Vec<Vec<f64>>,
    rank: usize,
    null_directions: Vec<Vec<f64>>,
}

/// `s²·(JᵀJ)⁺` computed on column-scaled `J` so the rank decision does not
/// depend on parameter units.
fn pseudo_inverse_covariance(jac: &DMatrix<f64>, s2: f64) -> Covariance {
    let p = jac.ncols();
    let scales: Vec<f64> = (0..p)
        .map(|k| {
            let n = jac.column(k).norm();
            if n > 0.0 && n.is_finite() {
                n
            } else {
                1.0
            }
        })
        .collect();
    let mut scaled = jac.clone();
    for (k, s) in scales.iter().enumerate() {
        scaled.column_mut(k).scale_mut(1.0 / s);
    }
    let info = scaled.transpose() * &scaled;
    let eig = SymmetricEigen::new(info);
    let max_ev = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    let mut pinv = DMatrix::zeros(p, p);
    let mut rank = 0;
    let mut null_directions = Vec::new();
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        if max_ev > 0.0 && ev > RANK_TOLERANCE * max_ev {
            rank += 1;
            pinv += (v * v.transpose()) / ev;
        } else {
            // back to natural units: J·(S⁻¹v) = 0
            let u: Vec<f64> = (0..p).map(|k| v[k] / scales[k]).collect();
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            null_directions.push(u.iter().map(|x| x / norm).collect());
        }
    }
    let mut matrix = vec![vec![0.0; p]; p];
    for a in 0..p {
        for b in 0..p {
            let sym = 0.5 * (pinv[(a, b)] + pinv[(b, a)]);
            matrix[a][b] = s2 * sym / (scales[a] * scales[b]);
        }
    }
    Covariance {
        matrix,
        rank,
        null_directions,
    }
}

/// Load level the fitted model predicts at `service_life` hours.
pub fn safe_load(fit: &FitResult, service_life: f64) -> Result<f64> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    if !(service_life > 0.0 && service_life.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "service life {service_life} h must be positive"
        )));
    }
    fit.params.eval(service_life)
}
