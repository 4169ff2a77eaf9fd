//! One-dimensional logistic regression, fitted by damped Newton iteration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TOLERANCE: f64 = 1e-6;
const MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 40;
const PROB_CLAMP: f64 = 1e-6;

/// `p(y = 1 | d) = σ(slope · d + intercept)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticCurve {
    pub slope: f64,
    pub intercept: f64,
}

impl LogisticCurve {
    pub fn probability(&self, d: f64) -> f64 {
        sigmoid(self.slope * d + self.intercept)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// ln(1 + e^z) without overflow
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn log_likelihood(points: &[(f64, bool)], slope: f64, intercept: f64, ridge: f64) -> f64 {
    let penalty = 0.5 * ridge * (slope * slope + intercept * intercept);
    let fit: f64 = points
        .iter()
        .map(|&(d, y)| {
            let z = slope * d + intercept;
            if y {
                -softplus(-z)
            } else {
                -softplus(z)
            }
        })
        .sum();
    fit - penalty
}

/// Maximum-likelihood fit over `(decision value, label)` points.
///
/// Single-class input yields a flat curve at the (clamped) class rate.
/// Perfectly separable input has no finite optimum; the fit then returns
/// the iterate reached after the iteration cap, a steep step-like curve.
pub fn fit_logistic_1d(points: &[(f64, bool)]) -> Result<LogisticCurve> {
    fit(points, 0.0)
}

/// L2-regularised fit: minimises `½(slope² + intercept²) + C · Σ log-loss`.
///
/// Both parameters are penalised, so the curve flattens towards 0.5 as `C`
/// shrinks. Single-class input is handled as in [`fit_logistic_1d`].
pub fn fit_logistic_1d_l2(points: &[(f64, bool)], c: f64) -> Result<LogisticCurve> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Usage(format!("regularisation C must be positive, got {c}")));
    }
    fit(points, 1.0 / c)
}

fn fit(points: &[(f64, bool)], ridge: f64) -> Result<LogisticCurve> {
    if points.is_empty() {
        return Err(Error::Usage("logistic fit needs at least one point".into()));
    }
    let n = points.len() as f64;
    let rate = points.iter().filter(|p| p.1).count() as f64 / n;
    let clamped = rate.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let mut slope = 0.0;
    let mut intercept = (clamped / (1.0 - clamped)).ln();
    if rate == 0.0 || rate == 1.0 {
        return Ok(LogisticCurve { slope, intercept });
    }

    let mut ll = log_likelihood(points, slope, intercept, ridge);
    for _ in 0..MAX_ITER {
        let (mut g_s, mut g_i) = (0.0, 0.0);
        let (mut h_ss, mut h_si, mut h_ii) = (0.0, 0.0, 0.0);
        for &(d, y) in points {
            let p = sigmoid(slope * d + intercept);
            let r = if y { 1.0 } else { 0.0 } - p;
            let w = p * (1.0 - p);
            g_s += r * d;
            g_i += r;
            h_ss += w * d * d;
            h_si += w * d;
            h_ii += w;
        }
        g_s -= ridge * slope;
        g_i -= ridge * intercept;
        h_ss += ridge;
        h_ii += ridge;
        // tiny ridge keeps the 2x2 system solvable near separation
        let jitter = 1e-12 * (h_ss + h_ii).max(1e-300);
        h_ss += jitter;
        h_ii += jitter;
        let det = h_ss * h_ii - h_si * h_si;
        if !(det.is_finite() && det > 0.0) {
            break;
        }
        let step_s = (h_ii * g_s - h_si * g_i) / det;
        let step_i = (h_ss * g_i - h_si * g_s) / det;

        let mut factor = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let (s, i) = (slope + factor * step_s, intercept + factor * step_i);
            let new_ll = log_likelihood(points, s, i, ridge);
            if new_ll.is_finite() && new_ll >= ll {
                accepted = Some((s, i, new_ll));
                break;
            }
            factor *= 0.5;
        }
        let Some((s, i, new_ll)) = accepted else {
            break;
        };
        let change = (s - slope).abs().max((i - intercept).abs());
        slope = s;
        intercept = i;
        ll = new_ll;
        if change < TOLERANCE {
            break;
        }
    }
    Ok(LogisticCurve { slope, intercept })
}
