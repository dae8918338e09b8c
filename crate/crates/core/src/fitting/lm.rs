//! Damped Gauss-Newton (Levenberg-Marquardt) minimizer for small problems.

use nalgebra::{DMatrix, DVector};

const INITIAL_DAMPING: f64 = 1e-3;
const MAX_DAMPING: f64 = 1e16;

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmSettings {
    pub max_iterations: usize,
    /// Relative SSE decrease below which an accepted step ends the search.
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub theta: Vec<f64>,
    pub sse: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `‖r(θ)‖²` starting from `start`.
///
/// `eval` returns the residual vector and its Jacobian, or `None` where the
/// model is not finite. Returns `None` only if the start itself is not
/// evaluable.
pub(crate) fn minimize<F>(eval: F, start: Vec<f64>, settings: LmSettings) -> Option<LmOutcome>
where
    F: Fn(&[f64]) -> Option<(DVector<f64>, DMatrix<f64>)>,
{
    let mut theta = start;
    let (mut r, mut jac) = eval(&theta)?;
    let mut sse = r.norm_squared();
    let mut damping = INITIAL_DAMPING;
    let p = theta.len();

    if p == 0 || sse == 0.0 {
        return Some(LmOutcome {
            theta,
            sse,
            iterations: 0,
            converged: true,
        });
    }

    for iteration in 1..=settings.max_iterations {
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let max_diag = (0..p).map(|i| jtj[(i, i)]).fold(0.0_f64, f64::max);
        let floor = (max_diag * 1e-12).max(f64::MIN_POSITIVE);

        let accepted = loop {
            if damping > MAX_DAMPING {
                break None;
            }
            let mut m = jtj.clone();
            for i in 0..p {
                m[(i, i)] += damping * jtj[(i, i)].max(floor);
            }
            let Some(chol) = m.cholesky() else {
                damping *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if trial.iter().all(|v| v.is_finite()) {
                if let Some((tr, tj)) = eval(&trial) {
                    let trial_sse = tr.norm_squared();
                    if trial_sse.is_finite() && trial_sse < sse {
                        break Some((trial, tr, tj, trial_sse));
                    }
                }
            }
            damping *= 10.0;
        };

        let Some((trial, tr, tj, trial_sse)) = accepted else {
            // No damped step lowers the SSE: a minimum to working precision.
            return Some(LmOutcome {
                theta,
                sse,
                iterations: iteration,
                converged: true,
            });
        };
        let relative = (sse - trial_sse) / sse;
        theta = trial;
        r = tr;
        jac = tj;
        sse = trial_sse;
        damping = (damping / 10.0).max(1e-12);
        if relative < settings.tolerance || sse == 0.0 {
            return Some(LmOutcome {
                theta,
                sse,
                iterations: iteration,
                converged: true,
            });
        }
    }
    Some(LmOutcome {
        theta,
        sse,
        iterations: settings.max_iterations,
        converged: false,
    })
}
