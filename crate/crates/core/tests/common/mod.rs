//! Reference implementations for the integration tests. Nothing here calls
//! into the fitting code: formulas are restated, searches are brute force.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use sustain_core::{
    eval_model, inverse_time, ModelKind, ModelParams, Sample, SignalChannel, TimeSeries, TtfDataset,
};

/// Model value at `t` for natural parameters in canonical order.
pub fn formula(kind: ModelKind, p: &[f64], t: f64) -> f64 {
    match kind {
        ModelKind::Logarithmic => p[0] * t.ln() + p[1],
        ModelKind::PowerLaw => p[0] * t.powf(p[1]),
        ModelKind::Sigmoid => {
            let (ki, k0, b, c) = (p[0], p[1], p[2], p[3]);
            ki + (k0 - ki) * (1.0 / (1.0 + b * t)).powf(c)
        }
        ModelKind::RateTheory => {
            let (ki, b, c, n) = (p[0], p[1], p[2], p[3]);
            ki + ((b * t).powf(n) / c).asinh()
        }
        ModelKind::PowellEyring => {
            let (ki, k0, b) = (p[0], p[1], p[2]);
            let x = b * t;
            ki + (k0 - ki) * x.asinh() / x
        }
    }
}

pub fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

/// Valid parameters together with a time at which the curve is neither
/// saturated nor flat to working precision.
pub fn well_conditioned(kind: ModelKind) -> BoxedStrategy<(ModelParams, f64)> {
    match kind {
        ModelKind::Logarithmic => (-0.2..-1e-3, 0.3..1.5f64, log_uniform(1e-2, 1e6))
            .prop_map(|(a, b, t)| (ModelParams::Logarithmic { a, b }, t))
            .boxed(),
        ModelKind::PowerLaw => (0.3..1.5f64, -0.5..-1e-3, log_uniform(1e-2, 1e6))
            .prop_map(|(b, n, t)| (ModelParams::PowerLaw { b, n }, t))
            .boxed(),
        ModelKind::Sigmoid => (
            0.5..1.05f64,
            0.0..1.0f64,
            log_uniform(1e-3, 1e3),
            log_uniform(0.05, 3.0),
            log_uniform(1e-2, 1e2),
        )
            .prop_map(|(k0, frac, b, c, bt)| {
                let kappa_inf = -1.0 + frac * (k0 - 0.05 + 1.0);
                let p = ModelParams::Sigmoid {
                    kappa_inf,
                    kappa_0: k0,
                    b,
                    c,
                };
                (p, bt / b)
            })
            .boxed(),
        ModelKind::RateTheory => (
            0.0..0.9f64,
            log_uniform(1e-3, 1e3),
            log_uniform(0.1, 10.0),
            -1.0..-0.01f64,
            log_uniform(1e-3, 1e3),
        )
            .prop_map(|(kappa_inf, b, c, n, bt)| {
                (ModelParams::RateTheory { kappa_inf, b, c, n }, bt / b)
            })
            .boxed(),
        ModelKind::PowellEyring => (
            0.5..1.05f64,
            0.0..1.0f64,
            log_uniform(1e-3, 1e3),
            log_uniform(1e-3, 1e3),
        )
            .prop_map(|(k0, frac, b, bt)| {
                let kappa_inf = frac * (k0 - 0.05);
                let p = ModelParams::PowellEyring {
                    kappa_inf,
                    kappa_0: k0,
                    b,
                };
                (p, bt / b)
            })
            .boxed(),
    }
}

pub fn round_trip_tolerance(kind: ModelKind) -> f64 {
    match kind {
        ModelKind::PowellEyring => 1e-6,
        _ => 1e-9,
    }
}

/// Largest relative time error of `inverse_time ∘ eval_model` over `draws`
/// seeded parameter draws.
pub fn round_trip_worst(kind: ModelKind, draws: usize) -> f64 {
    use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[kind as u8 + 1; 32]);
    let mut runner = TestRunner::new_with_rng(Config::default(), rng);
    let strategy = well_conditioned(kind);
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let (params, t) = strategy.new_tree(&mut runner).unwrap().current();
        let y = eval_model(&params, t).unwrap();
        let back = inverse_time(&params, y).unwrap();
        worst = worst.max(((back - t) / t).abs());
    }
    worst
}

pub fn observations(ds: &TtfDataset) -> (Vec<f64>, Vec<f64>) {
    ds.points()
        .iter()
        .filter(|p| !p.censored)
        .map(|p| (p.failure_time, p.load_level))
        .unzip()
}

/// Objective in the domain each family is fitted in: log-log for the power
/// law, plain load level otherwise.
pub fn objective(kind: ModelKind, p: &[f64], times: &[f64], levels: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&t, &y) in times.iter().zip(levels) {
        let f = formula(kind, p, t);
        let r = if kind == ModelKind::PowerLaw {
            y.ln() - f.ln()
        } else {
            y - f
        };
        s += r * r;
    }
    if s.is_finite() {
        s
    } else {
        f64::INFINITY
    }
}

/// One search axis; `log` axes are searched in ln-space.
#[derive(Clone, Copy, Debug)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub log: bool,
    /// A negated log axis: values `−exp(u)`.
    pub negative: bool,
}

impl Axis {
    fn lin(lo: f64, hi: f64) -> Self {
        Axis {
            lo,
            hi,
            log: false,
            negative: false,
        }
    }
    fn log(lo: f64, hi: f64) -> Self {
        Axis {
            lo: lo.ln(),
            hi: hi.ln(),
            log: true,
            negative: false,
        }
    }
    fn neg_log(lo: f64, hi: f64) -> Self {
        Axis {
            lo: lo.ln(),
            hi: hi.ln(),
            log: true,
            negative: true,
        }
    }
    fn value(&self, u: f64) -> f64 {
        match (self.log, self.negative) {
            (false, _) => u,
            (true, false) => u.exp(),
            (true, true) => -u.exp(),
        }
    }
    fn node(&self, i: usize, n: usize) -> f64 {
        self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64
    }
}

pub const GRID_POINTS: usize = 50;

/// Search box and fixed values (`None` = searched) per family, with κ0 = 1.
fn search_space(kind: ModelKind, levels: &[f64]) -> Vec<Result<Axis, f64>> {
    let ymin = levels.iter().cloned().fold(f64::INFINITY, f64::min);
    match kind {
        ModelKind::Logarithmic => vec![Ok(Axis::lin(-0.2, -1e-6)), Ok(Axis::lin(0.0, 1.5))],
        ModelKind::PowerLaw => vec![Ok(Axis::log(0.05, 5.0)), Ok(Axis::neg_log(1e-5, 1.0))],
        ModelKind::Sigmoid => vec![
            Ok(Axis::lin(-1.5, ymin)),
            Err(1.0),
            Ok(Axis::log(1e-5, 1e5)),
            Ok(Axis::log(1e-4, 1e2)),
        ],
        ModelKind::RateTheory => vec![
            Ok(Axis::lin(0.0, 0.999)),
            Ok(Axis::log(1e-6, 1e6)),
            Ok(Axis::log(1e-4, 1e4)),
            Ok(Axis::neg_log(1e-4, 1.0)),
        ],
        ModelKind::PowellEyring => vec![
            Ok(Axis::lin(0.0, 0.999)),
            Err(1.0),
            Ok(Axis::log(1e-6, 1e6)),
        ],
    }
}

#[derive(Debug, Clone)]
pub struct OracleFit {
    pub sse: f64,
    pub params: Vec<f64>,
}

/// Exhaustive grid (`GRID_POINTS` per axis) followed by a Hooke-Jeeves
/// pattern search from the best few nodes, confined to the grid box.
pub fn grid_oracle(kind: ModelKind, times: &[f64], levels: &[f64]) -> OracleFit {
    let space = search_space(kind, levels);
    let axes: Vec<(usize, Axis)> = space
        .iter()
        .enumerate()
        .filter_map(|(i, a)| a.ok().map(|a| (i, a)))
        .collect();
    let to_params = |u: &[f64]| -> Vec<f64> {
        let mut p: Vec<f64> = space.iter().map(|a| a.err().unwrap_or(0.0)).collect();
        for ((i, axis), &v) in axes.iter().zip(u) {
            p[*i] = axis.value(v);
        }
        p
    };
    let f = |u: &[f64]| objective(kind, &to_params(u), times, levels);

    let dims = axes.len();
    let total = GRID_POINTS.pow(dims as u32);
    let keep = 8;
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut u = vec![0.0; dims];
    for idx in 0..total {
        let mut rem = idx;
        for (d, (_, axis)) in axes.iter().enumerate() {
            u[d] = axis.node(rem % GRID_POINTS, GRID_POINTS);
            rem /= GRID_POINTS;
        }
        let s = f(&u);
        if best.len() < keep || s < best[keep - 1].0 {
            best.push((s, u.clone()));
            best.sort_by(|a, b| a.0.total_cmp(&b.0));
            best.truncate(keep);
        }
    }

    let bounds: Vec<(f64, f64)> = axes.iter().map(|(_, a)| (a.lo, a.hi)).collect();
    let mut winner = best[0].clone();
    for (_, start) in &best {
        let steps: Vec<f64> = bounds
            .iter()
            .map(|(lo, hi)| (hi - lo) / (GRID_POINTS - 1) as f64)
            .collect();
        let refined = hooke_jeeves(&f, start.clone(), steps, &bounds);
        if refined.0 < winner.0 {
            winner = refined;
        }
    }
    OracleFit {
        sse: winner.0,
        params: to_params(&winner.1),
    }
}

fn hooke_jeeves(
    f: &dyn Fn(&[f64]) -> f64,
    mut base: Vec<f64>,
    mut steps: Vec<f64>,
    bounds: &[(f64, f64)],
) -> (f64, Vec<f64>) {
    let clamp = |x: &mut Vec<f64>| {
        for (v, (lo, hi)) in x.iter_mut().zip(bounds) {
            *v = v.clamp(*lo, *hi);
        }
    };
    let explore = |point: &[f64], fp: f64, steps: &[f64]| -> (f64, Vec<f64>) {
        let mut x = point.to_vec();
        let mut fx = fp;
        for d in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut trial = x.clone();
                trial[d] += dir * steps[d];
                clamp(&mut trial);
                let ft = f(&trial);
                if ft < fx {
                    fx = ft;
                    x = trial;
                    break;
                }
            }
        }
        (fx, x)
    };
    let mut fbase = f(&base);
    let mut evals = 0usize;
    while steps.iter().any(|&s| s > 1e-12) && evals < 400_000 {
        evals += 2 * base.len();
        let (fnew, new) = explore(&base, fbase, &steps);
        if fnew < fbase {
            // Pattern moves along the improving direction.
            let mut prev = base;
            let mut cur = new;
            let mut fcur = fnew;
            loop {
                let mut jump: Vec<f64> = cur.iter().zip(&prev).map(|(c, p)| 2.0 * c - p).collect();
                clamp(&mut jump);
                let fj = f(&jump);
                let (fe, e) = explore(&jump, fj, &steps);
                evals += 2 * cur.len() + 1;
                if fe < fcur {
                    prev = cur;
                    cur = e;
                    fcur = fe;
                } else {
                    break;
                }
            }
            base = cur;
            fbase = fcur;
        } else {
            for s in steps.iter_mut() {
                *s *= 0.5;
            }
        }
    }
    (fbase, base)
}

/// Closed-form least-squares line of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Standard error of the mean prediction of `y = a·ln t + b` at each
/// `eval_times`, by residual bootstrap with leverage-corrected residuals
/// `rᵢ / √(1 − hᵢ)` (recentred), `resamples` draws.
pub fn bootstrap_log_se(
    times: &[f64],
    levels: &[f64],
    eval_times: &[f64],
    resamples: usize,
    seed: u64,
) -> Vec<f64> {
    use rand::Rng;
    use rand::SeedableRng;
    let x: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let n = x.len();
    let (a, b) = ols(&x, levels);
    let fitted: Vec<f64> = x.iter().map(|v| a * v + b).collect();
    let mx = x.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let mut adjusted: Vec<f64> = x
        .iter()
        .zip(levels.iter().zip(&fitted))
        .map(|(xi, (y, f))| {
            let h = 1.0 / n as f64 + (xi - mx).powi(2) / sxx;
            (y - f) / (1.0 - h).sqrt()
        })
        .collect();
    let mean = adjusted.iter().sum::<f64>() / n as f64;
    for r in &mut adjusted {
        *r -= mean;
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut preds = vec![Vec::with_capacity(resamples); eval_times.len()];
    let mut ystar = vec![0.0; n];
    for _ in 0..resamples {
        for i in 0..n {
            ystar[i] = fitted[i] + adjusted[rng.random_range(0..n)];
        }
        let (a_s, b_s) = ols(&x, &ystar);
        for (k, t) in eval_times.iter().enumerate() {
            preds[k].push(a_s * t.ln() + b_s);
        }
    }
    preds
        .iter()
        .map(|p| {
            let m = p.iter().sum::<f64>() / p.len() as f64;
            (p.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (p.len() - 1) as f64).sqrt()
        })
        .collect()
}

/// Displacement rising with slope `s1` per unit `ln t` up to `breakpoint`
/// seconds and `s2` after, sampled every `dt` seconds up to `end`.
pub fn two_slope_record(
    breakpoint: f64,
    s1: f64,
    s2: f64,
    dt: f64,
    end: f64,
    offset: f64,
) -> TimeSeries {
    let n = (end / dt).floor() as usize;
    let lb = breakpoint.ln();
    let samples = (0..=n)
        .map(|i| {
            let t = i as f64 * dt;
            let d = if t <= 0.0 {
                0.0
            } else if t < breakpoint {
                s1 * t.ln()
            } else {
                s1 * lb + s2 * (t.ln() - lb)
            };
            Sample {
                time: t,
                displacement: Some(d + offset),
                signal: None,
            }
        })
        .collect();
    TimeSeries::new(samples, None, 1.0, 0.0).unwrap()
}

/// Load held in `[target·(1 − 0.015), target·(1 + 0.015)]` until sample
/// `step`, then dropped to `drop_to·target`.
pub fn pressure_step_record(n: usize, step: usize, target: f64, drop_to: f64) -> TimeSeries {
    let samples = (0..n)
        .map(|i| {
            let wiggle = 0.015 * ((i as f64) * 0.7).sin();
            let v = if i < step {
                target * (1.0 + wiggle)
            } else {
                target * drop_to
            };
            Sample {
                time: i as f64,
                displacement: None,
                signal: Some(v),
            }
        })
        .collect();
    TimeSeries::new(samples, Some(SignalChannel::Pressure), target, 0.0).unwrap()
}
