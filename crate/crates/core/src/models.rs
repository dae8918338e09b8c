//! Stress versus time-to-failure regression families.
//!
//! All five families map a failure time `t` (hours) to a relative load level
//! `y` and are strictly decreasing in `t`:
//!
//! | kind            | `y(t)`                                         |
//! |-----------------|------------------------------------------------|
//! | logarithmic     | `a·ln t + b`                                   |
//! | power law       | `b·tⁿ` (linear in log-log)                     |
//! | sigmoid         | `κ∞ + (κ0 − κ∞)·(1 / (1 + b·t))ᶜ`              |
//! | rate theory     | `κ∞ + asinh((b·t)ⁿ / c)`                       |
//! | Powell-Eyring   | `κ∞ + (κ0 − κ∞)·asinh(b·t) / (b·t)`            |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::MAX_LOAD_LEVEL;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logarithmic,
    PowerLaw,
    Sigmoid,
    RateTheory,
    PowellEyring,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Logarithmic,
        ModelKind::PowerLaw,
        ModelKind::Sigmoid,
        ModelKind::RateTheory,
        ModelKind::PowellEyring,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Logarithmic => "logarithmic",
            ModelKind::PowerLaw => "power_law",
            ModelKind::Sigmoid => "sigmoid",
            ModelKind::RateTheory => "rate_theory",
            ModelKind::PowellEyring => "powell_eyring",
        }
    }

    /// Parameter names in vector order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Logarithmic => &["a", "b"],
            ModelKind::PowerLaw => &["b", "n"],
            ModelKind::Sigmoid => &["kappa_inf", "kappa_0", "b", "c"],
            ModelKind::RateTheory => &["kappa_inf", "b", "c", "n"],
            ModelKind::PowellEyring => &["kappa_inf", "kappa_0", "b"],
        }
    }

    pub fn param_count(self) -> usize {
        self.param_names().len()
    }

    pub fn param_index(self, name: &str) -> Option<usize> {
        self.param_names().iter().position(|n| *n == name)
    }

    /// Fitted in closed form by ordinary least squares.
    pub fn is_linear(self) -> bool {
        matches!(self, ModelKind::Logarithmic | ModelKind::PowerLaw)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::InvalidInput(format!("unknown model `{s}`")))
    }
}

/// Parameters of one regression family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    /// Slope `a` per unit ln-hour and intercept `b` (the level at t = 1 h).
    Logarithmic {
        a: f64,
        b: f64,
    },
    PowerLaw {
        b: f64,
        n: f64,
    },
    Sigmoid {
        kappa_inf: f64,
        kappa_0: f64,
        b: f64,
        c: f64,
    },
    RateTheory {
        kappa_inf: f64,
        b: f64,
        c: f64,
        n: f64,
    },
    PowellEyring {
        kappa_inf: f64,
        kappa_0: f64,
        b: f64,
    },
}

/// Which end of the time axis an asymptote refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    ShortTime,
    LongTime,
}

/// Limit of the model at `t → 0` or `t → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Asymptote {
    Finite(f64),
    PlusInfinity,
    MinusInfinity,
}

impl Asymptote {
    pub fn value(self) -> Option<f64> {
        match self {
            Asymptote::Finite(v) => Some(v),
            _ => None,
        }
    }
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Logarithmic { .. } => ModelKind::Logarithmic,
            ModelParams::PowerLaw { .. } => ModelKind::PowerLaw,
            ModelParams::Sigmoid { .. } => ModelKind::Sigmoid,
            ModelParams::RateTheory { .. } => ModelKind::RateTheory,
            ModelParams::PowellEyring { .. } => ModelKind::PowellEyring,
        }
    }

    /// Parameter vector in [`ModelKind::param_names`] order.
    pub fn to_vec(&self) -> Vec<f64> {
        match *self {
            ModelParams::Logarithmic { a, b } => vec![a, b],
            ModelParams::PowerLaw { b, n } => vec![b, n],
            ModelParams::Sigmoid {
                kappa_inf,
                kappa_0,
                b,
                c,
            } => vec![kappa_inf, kappa_0, b, c],
            ModelParams::RateTheory { kappa_inf, b, c, n } => vec![kappa_inf, b, c, n],
            ModelParams::PowellEyring {
                kappa_inf,
                kappa_0,
                b,
            } => vec![kappa_inf, kappa_0, b],
        }
    }

    /// Inverse of [`ModelParams::to_vec`]; does not validate.
    pub fn from_slice(kind: ModelKind, v: &[f64]) -> Result<Self> {
        if v.len() != kind.param_count() {
            return Err(Error::InvalidParams {
                kind,
                reason: format!("expected {} values, got {}", kind.param_count(), v.len()),
            });
        }
        Ok(match kind {
            ModelKind::Logarithmic => ModelParams::Logarithmic { a: v[0], b: v[1] },
            ModelKind::PowerLaw => ModelParams::PowerLaw { b: v[0], n: v[1] },
            ModelKind::Sigmoid => ModelParams::Sigmoid {
                kappa_inf: v[0],
                kappa_0: v[1],
                b: v[2],
                c: v[3],
            },
            ModelKind::RateTheory => ModelParams::RateTheory {
                kappa_inf: v[0],
                b: v[1],
                c: v[2],
                n: v[3],
            },
            ModelKind::PowellEyring => ModelParams::PowellEyring {
                kappa_inf: v[0],
                kappa_0: v[1],
                b: v[2],
            },
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let idx = self.kind().param_index(name)?;
        Some(self.to_vec()[idx])
    }

    /// Checks the hard constraints of the family. A negative sigmoid `κ∞`
    /// passes here and is reported by [`ModelParams::non_physical`].
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind();
        let fail = |reason: &str| {
            Err(Error::InvalidParams {
                kind,
                reason: reason.to_string(),
            })
        };
        if self.to_vec().iter().any(|v| !v.is_finite()) {
            return fail("parameters must be finite");
        }
        match *self {
            ModelParams::Logarithmic { a, .. } => {
                if !(a < 0.0) {
                    return fail("a must be negative");
                }
            }
            ModelParams::PowerLaw { b, n } => {
                if !(b > 0.0) {
                    return fail("b must be positive");
                }
                if !(n < 0.0) {
                    return fail("n must be negative");
                }
            }
            ModelParams::Sigmoid {
                kappa_inf,
                kappa_0,
                b,
                c,
            } => {
                if !(kappa_inf < kappa_0 && kappa_0 > 0.0 && kappa_0 <= MAX_LOAD_LEVEL) {
                    return fail("need kappa_inf < kappa_0 <= 1.05 and kappa_0 > 0");
                }
                if !(b > 0.0 && c > 0.0) {
                    return fail("b and c must be positive");
                }
            }
            ModelParams::RateTheory { kappa_inf, b, c, n } => {
                if !(0.0..1.0).contains(&kappa_inf) {
                    return fail("kappa_inf must lie in [0, 1)");
                }
                if !(b > 0.0 && c > 0.0) {
                    return fail("b and c must be positive");
                }
                if !(n < 0.0) {
                    return fail("n must be negative");
                }
            }
            ModelParams::PowellEyring {
                kappa_inf,
                kappa_0,
                b,
            } => {
                if !(kappa_inf >= 0.0 && kappa_inf < kappa_0 && kappa_0 <= MAX_LOAD_LEVEL) {
                    return fail("need 0 <= kappa_inf < kappa_0 <= 1.05");
                }
                if !(b > 0.0) {
                    return fail("b must be positive");
                }
            }
        }
        Ok(())
    }

    /// Describes parameters that are admissible but physically implausible.
    pub fn non_physical(&self) -> Option<String> {
        match *self {
            ModelParams::Sigmoid { kappa_inf, .. } if kappa_inf < 0.0 => Some(format!(
                "sigmoid long-time asymptote kappa_inf = {kappa_inf} is negative (non-physical)"
            )),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let kind = self.kind();
        if !(t >= 0.0) {
            return Err(Error::InvalidInput(format!("negative time {t} h")));
        }
        if t == 0.0 {
            return match *self {
                ModelParams::Sigmoid { kappa_0, .. }
                | ModelParams::PowellEyring { kappa_0, .. } => Ok(kappa_0),
                _ => Err(Error::DivergesAtOrigin(kind)),
            };
        }
        let y = self.eval_unchecked(t);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite { kind, time: t })
        }
    }

    /// Evaluates without domain checks; may return a non-finite value.
    pub fn eval_unchecked(&self, t: f64) -> f64 {
        match *self {
            ModelParams::Logarithmic { a, b } => a * t.ln() + b,
            ModelParams::PowerLaw { b, n } => b * t.powf(n),
            ModelParams::Sigmoid {
                kappa_inf,
                kappa_0,
                b,
                c,
            } => {
                // κ0 − (κ0 − κ∞)·(1 − sᶜ) stays accurate when κ∞ is far below zero
                let decay = -(-c * (b * t).ln_1p()).exp_m1();
                kappa_0 - (kappa_0 - kappa_inf) * decay
            }
            ModelParams::RateTheory { kappa_inf, b, c, n } => {
                kappa_inf + ((b * t).powf(n) / c).asinh()
            }
            ModelParams::PowellEyring {
                kappa_inf,
                kappa_0,
                b,
            } => kappa_inf + (kappa_0 - kappa_inf) * asinh_ratio(b * t),
        }
    }

    /// Partial derivatives of `y(t)` with respect to each parameter, in
    /// vector order.
    pub fn gradient(&self, t: f64) -> Vec<f64> {
        match *self {
            ModelParams::Logarithmic { .. } => vec![t.ln(), 1.0],
            ModelParams::PowerLaw { b, n } => {
                let tn = t.powf(n);
                vec![tn, b * tn * t.ln()]
            }
            ModelParams::Sigmoid {
                kappa_inf,
                kappa_0,
                b,
                c,
            } => {
                let l = (b * t).ln_1p();
                let sc = (-c * l).exp();
                let span = kappa_0 - kappa_inf;
                vec![
                    -(-c * l).exp_m1(),
                    sc,
                    -span * c * t * sc / (1.0 + b * t),
                    -span * sc * l,
                ]
            }
            ModelParams::RateTheory { b, c, n, .. } => {
                let bt = b * t;
                let z = bt.powf(n) / c;
                // z / sqrt(1 + z²) without overflowing for large z
                let zd = z / z.hypot(1.0);
                vec![1.0, zd * n / b, -zd / c, zd * bt.ln()]
            }
            ModelParams::PowellEyring {
                kappa_inf,
                kappa_0,
                b,
            } => {
                let x = b * t;
                let g = asinh_ratio(x);
                vec![1.0 - g, g, (kappa_0 - kappa_inf) * asinh_ratio_deriv(x) * t]
            }
        }
    }

    pub fn asymptote(&self, end: End) -> Asymptote {
        match (*self, end) {
            (ModelParams::Logarithmic { .. }, End::LongTime) => Asymptote::MinusInfinity,
            (ModelParams::PowerLaw { .. }, End::LongTime) => Asymptote::Finite(0.0),
            (ModelParams::Sigmoid { kappa_inf, .. }, End::LongTime)
            | (ModelParams::RateTheory { kappa_inf, .. }, End::LongTime)
            | (ModelParams::PowellEyring { kappa_inf, .. }, End::LongTime) => {
                Asymptote::Finite(kappa_inf)
            }
            (ModelParams::Sigmoid { kappa_0, .. }, End::ShortTime)
            | (ModelParams::PowellEyring { kappa_0, .. }, End::ShortTime) => {
                Asymptote::Finite(kappa_0)
            }
            (_, End::ShortTime) => Asymptote::PlusInfinity,
        }
    }

    /// Time at which the model reaches load level `y`.
    pub fn inverse_time(&self, y: f64) -> Result<f64> {
        let kind = self.kind();
        let out_of_range = || Error::OutOfRange { kind, level: y };
        if !y.is_finite() {
            return Err(out_of_range());
        }
        if let Asymptote::Finite(lo) = self.asymptote(End::LongTime) {
            if y <= lo {
                return Err(out_of_range());
            }
        }
        if let Asymptote::Finite(hi) = self.asymptote(End::ShortTime) {
            if y >= hi {
                return Err(out_of_range());
            }
        }
        let t = match *self {
            ModelParams::Logarithmic { a, b } => ((y - b) / a).exp(),
            ModelParams::PowerLaw { b, n } => ((y / b).ln() / n).exp(),
            ModelParams::Sigmoid {
                kappa_inf,
                kappa_0,
                b,
                c,
            } => {
                // (1 + b t)^c = (κ0 − κ∞) / (y − κ∞)
                let log_ratio = -((y - kappa_0) / (kappa_0 - kappa_inf)).ln_1p();
                (log_ratio / c).exp_m1() / b
            }
            ModelParams::RateTheory { kappa_inf, b, c, n } => {
                ((c * (y - kappa_inf).sinh()).ln() / n).exp() / b
            }
            ModelParams::PowellEyring {
                kappa_inf,
                kappa_0,
                b,
            } => {
                let target = (y - kappa_inf) / (kappa_0 - kappa_inf);
                solve_asinh_ratio(target).ok_or(Error::NoBracket { level: y })? / b
            }
        };
        if t.is_finite() && t > 0.0 {
            Ok(t)
        } else {
            Err(out_of_range())
        }
    }
}

/// `asinh(x) / x`, continued to 1 at the origin.
pub fn asinh_ratio(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + 3.0 * x2 * x2 / 40.0
    } else {
        x.asinh() / x
    }
}

/// Derivative of [`asinh_ratio`].
pub fn asinh_ratio_deriv(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        -x / 3.0 + 3.0 * x * x2 / 10.0 - 5.0 * x * x2 * x2 / 42.0
    } else {
        (x / x.hypot(1.0) - x.asinh()) / (x * x)
    }
}

/// Solves `asinh(x)/x = q` for `x > 0`, `q ∈ (0, 1)`, to a relative
/// tolerance of 1e-10 or better.
fn solve_asinh_ratio(q: f64) -> Option<f64> {
    if !(q > 0.0 && q < 1.0) {
        return None;
    }
    let mut lo = 1.0;
    let mut hi = 1.0;
    let mut expand = 0;
    while asinh_ratio(lo) <= q {
        lo *= 0.5;
        expand += 1;
        if expand > 2100 {
            return None;
        }
    }
    while asinh_ratio(hi) >= q {
        hi *= 2.0;
        expand += 1;
        if expand > 2100 || !hi.is_finite() {
            return None;
        }
    }
    // Bisection in log x keeps the relative tolerance uniform.
    let (mut a, mut b) = (lo.ln(), hi.ln());
    while b - a > 1e-12 {
        let m = 0.5 * (a + b);
        if asinh_ratio(m.exp()) > q {
            a = m;
        } else {
            b = m;
        }
    }
    let mut x = (0.5 * (a + b)).exp();
    // Newton polish; keep it inside the bracket.
    for _ in 0..3 {
        let d = asinh_ratio_deriv(x);
        if d == 0.0 {
            break;
        }
        let next = x - (asinh_ratio(x) - q) / d;
        if next > a.exp() && next < b.exp() {
            x = next;
        }
    }
    Some(x)
}

/// `y(t)` for the given parameters.
pub fn eval_model(params: &ModelParams, t: f64) -> Result<f64> {
    params.eval(t)
}

pub fn inverse_time(params: &ModelParams, y: f64) -> Result<f64> {
    params.inverse_time(y)
}

pub fn asymptote(params: &ModelParams, end: End) -> Asymptote {
    params.asymptote(end)
}
