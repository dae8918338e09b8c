//! Maps an unconstrained internal vector onto constrained model parameters.

use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Coord {
    Fixed(f64),
    /// `x = exp(u)`
    Positive,
    /// `x = −exp(u)`
    Negative,
    /// `x = lo + (hi − lo)·σ(u)`
    Interval {
        lo: f64,
        hi: f64,
    },
    /// `x = p[of] − exp(u)`, unbounded below.
    Below {
        of: usize,
    },
    /// `x = lo + (p[of] − lo)·σ(u)`
    Between {
        lo: f64,
        of: usize,
    },
}

impl Coord {
    fn depends_on(self) -> Option<usize> {
        match self {
            Coord::Below { of } | Coord::Between { of, .. } => Some(of),
            _ => None,
        }
    }
}

/// Internal coordinates are the free parameters in natural order.
#[derive(Debug, Clone)]
pub(crate) struct Transform {
    coords: Vec<Coord>,
    free: Vec<usize>,
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-9, 1.0 - 1e-9);
    (p / (1.0 - p)).ln()
}

impl Transform {
    pub(crate) fn new(coords: Vec<Coord>) -> Self {
        for c in &coords {
            if let Some(of) = c.depends_on() {
                debug_assert!(coords[of].depends_on().is_none());
            }
        }
        let free = coords
            .iter()
            .enumerate()
            .filter(|(_, c)| !matches!(c, Coord::Fixed(_)))
            .map(|(i, _)| i)
            .collect();
        Transform { coords, free }
    }

    pub(crate) fn n_free(&self) -> usize {
        self.free.len()
    }

    pub(crate) fn fixed_mask(&self) -> Vec<bool> {
        self.coords
            .iter()
            .map(|c| matches!(c, Coord::Fixed(_)))
            .collect()
    }

    /// Natural parameters and `∂natural/∂internal` (natural × free).
    pub(crate) fn forward(&self, theta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let n = self.coords.len();
        let mut x = vec![0.0; n];
        let mut jac = DMatrix::zeros(n, self.free.len());
        let mut internal = vec![None; n];
        for (k, &i) in self.free.iter().enumerate() {
            internal[i] = Some((k, theta[k]));
        }
        // Independent coordinates first, then those referring to them.
        for pass in 0..2 {
            for (i, c) in self.coords.iter().enumerate() {
                if (c.depends_on().is_some()) != (pass == 1) {
                    continue;
                }
                let own = internal[i];
                match *c {
                    Coord::Fixed(v) => x[i] = v,
                    Coord::Positive => {
                        let (k, u) = own.unwrap();
                        x[i] = u.exp();
                        jac[(i, k)] = x[i];
                    }
                    Coord::Negative => {
                        let (k, u) = own.unwrap();
                        x[i] = -u.exp();
                        jac[(i, k)] = x[i];
                    }
                    Coord::Interval { lo, hi } => {
                        let (k, u) = own.unwrap();
                        let s = sigmoid(u);
                        x[i] = lo + (hi - lo) * s;
                        jac[(i, k)] = (hi - lo) * s * (1.0 - s);
                    }
                    Coord::Below { of } => {
                        let (k, u) = own.unwrap();
                        let e = u.exp();
                        x[i] = x[of] - e;
                        jac[(i, k)] = -e;
                        for col in 0..self.free.len() {
                            jac[(i, col)] += jac[(of, col)];
                        }
                    }
                    Coord::Between { lo, of } => {
                        let (k, u) = own.unwrap();
                        let s = sigmoid(u);
                        x[i] = lo + (x[of] - lo) * s;
                        jac[(i, k)] = (x[of] - lo) * s * (1.0 - s);
                        for col in 0..self.free.len() {
                            jac[(i, col)] += s * jac[(of, col)];
                        }
                    }
                }
            }
        }
        (x, jac)
    }

    pub(crate) fn natural(&self, theta: &[f64]) -> Vec<f64> {
        self.forward(theta).0
    }

    /// Internal coordinates for natural values; out-of-range values are
    /// pulled just inside their bounds.
    pub(crate) fn internal(&self, x: &[f64]) -> Vec<f64> {
        self.free
            .iter()
            .map(|&i| {
                let v = x[i];
                match self.coords[i] {
                    Coord::Fixed(_) => unreachable!(),
                    Coord::Positive => v.max(1e-300).ln(),
                    Coord::Negative => (-v).max(1e-300).ln(),
                    Coord::Interval { lo, hi } => logit((v - lo) / (hi - lo)),
                    Coord::Below { of } => {
                        let anchor = self.anchor_value(of, x);
                        (anchor - v).max(1e-12).ln()
                    }
                    Coord::Between { lo, of } => {
                        let anchor = self.anchor_value(of, x);
                        logit((v - lo) / (anchor - lo))
                    }
                }
            })
            .collect()
    }

    fn anchor_value(&self, of: usize, x: &[f64]) -> f64 {
        match self.coords[of] {
            Coord::Fixed(v) => v,
            _ => x[of],
        }
    }
}
