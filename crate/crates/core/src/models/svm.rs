//! Class-weighted linear SVM trained by deterministic primal subgradient descent.
//!
//! Objective (the bias is regularised as an extra constant feature):
//!
//! ```text
//! J(w, b) = ½(‖w‖² + b²) + C Σᵢ cᵢ · max(0, 1 − yᵢ(w·xᵢ + b))
//! ```
//!
//! Training runs Pegasos-style updates over the examples in ascending key
//! order for a fixed number of epochs with step `1/(λt)`, `λ = 1/(C·n)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textfeat::SparseVec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
    /// Final weights are clipped to `[-weight_cap, weight_cap]`.
    pub weight_cap: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            epochs: 200,
            weight_cap: 1e6,
        }
    }
}

/// One training row. `key` fixes the processing order (the document id).
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub key: u32,
    pub features: &'a SparseVec,
    pub positive: bool,
}

impl Example<'_> {
    fn sign(&self) -> f64 {
        if self.positive {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights {
    pub positive: f64,
    pub negative: f64,
}

impl ClassWeights {
    pub const UNIT: ClassWeights = ClassWeights {
        positive: 1.0,
        negative: 1.0,
    };

    /// `n_total / (2 · n_class)` for each class.
    pub fn balanced(n_pos: usize, n_neg: usize) -> Self {
        let total = (n_pos + n_neg) as f64;
        ClassWeights {
            positive: total / (2.0 * n_pos as f64),
            negative: total / (2.0 * n_neg as f64),
        }
    }

    fn of(&self, positive: bool) -> f64 {
        if positive {
            self.positive
        } else {
            self.negative
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingCounts {
    pub positives: usize,
    pub negatives: usize,
}

/// A trained linear decision function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub trained_on: TrainingCounts,
    pub undersampled: bool,
}

impl ModelSnapshot {
    /// `w·x + b`; positive means predicted relevant.
    pub fn decision(&self, x: &SparseVec) -> Result<f64> {
        if x.min_dim() > self.weights.len() {
            return Err(Error::Usage(format!(
                "feature index {} outside model dimension {}",
                x.min_dim() - 1,
                self.weights.len()
            )));
        }
        Ok(self.decision_unchecked(x))
    }

    pub(crate) fn decision_unchecked(&self, x: &SparseVec) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

fn count_classes(examples: &[Example]) -> TrainingCounts {
    let positives = examples.iter().filter(|e| e.positive).count();
    TrainingCounts {
        positives,
        negatives: examples.len() - positives,
    }
}

fn check_classes(counts: TrainingCounts) -> Result<()> {
    match (counts.positives, counts.negatives) {
        (0, _) => Err(Error::Training("no positive (relevant) examples".into())),
        (_, 0) => Err(Error::Training("no negative (non-relevant) examples".into())),
        _ => Ok(()),
    }
}

/// Trains on `examples` over a `dim`-dimensional feature space.
///
/// With `balanced`, each class's hinge terms are weighted by
/// [`ClassWeights::balanced`]. Input order does not matter.
pub fn train_svm(examples: &[Example], dim: usize, balanced: bool, config: &SvmConfig) -> Result<ModelSnapshot> {
    let counts = count_classes(examples);
    check_classes(counts)?;
    if let Some(e) = examples.iter().find(|e| e.features.min_dim() > dim) {
        return Err(Error::Usage(format!(
            "example {} exceeds feature dimension {dim}",
            e.key
        )));
    }
    let weights = if balanced {
        ClassWeights::balanced(counts.positives, counts.negatives)
    } else {
        ClassWeights::UNIT
    };

    let mut ordered: Vec<&Example> = examples.iter().collect();
    ordered.sort_by_key(|e| e.key);

    let n = ordered.len() as f64;
    let lambda = 1.0 / (config.c * n);
    // w = scale · v; v[dim] holds the bias
    let mut v = vec![0.0; dim + 1];
    let mut scale = 1.0;
    let mut t = 0u64;
    for _ in 0..config.epochs {
        for ex in &ordered {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let y = ex.sign();
            let margin = y * scale * (ex.features.dot(&v[..dim]) + v[dim]);

            let shrink = 1.0 - 1.0 / t as f64;
            if shrink == 0.0 {
                v.iter_mut().for_each(|x| *x = 0.0);
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let coef = eta * weights.of(ex.positive) * y / scale;
                for (j, x) in ex.features.iter() {
                    v[j as usize] += coef * x;
                }
                v[dim] += coef;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|x| *x *= scale);
                scale = 1.0;
            }
        }
    }

    let cap = config.weight_cap;
    let clip = |x: f64| (x * scale).clamp(-cap, cap);
    let bias = clip(v[dim]);
    v.truncate(dim);
    let weights = v.into_iter().map(clip).collect();
    Ok(ModelSnapshot {
        weights,
        bias,
        trained_on: counts,
        undersampled: false,
    })
}

/// Keeps the `|included|` excluded rows with the lowest decision values
/// (ties by ascending key) and retrains an unweighted SVM on those plus
/// every included row. All excluded rows are kept when there are no more
/// of them than included rows.
pub fn aggressive_undersample(
    model: &ModelSnapshot,
    included: &[Example],
    excluded: &[Example],
    config: &SvmConfig,
) -> Result<ModelSnapshot> {
    if included.is_empty() {
        return Err(Error::Training("no positive (relevant) examples".into()));
    }
    if excluded.is_empty() {
        return Err(Error::Training("no negative (non-relevant) examples".into()));
    }
    let retained = select_most_negative(model, excluded, included.len())?;
    let mut rows: Vec<Example> = included.to_vec();
    rows.extend(retained);
    let mut snapshot = train_svm(&rows, model.dim(), false, config)?;
    snapshot.undersampled = true;
    Ok(snapshot)
}

/// The `keep` rows with the smallest decision values, ties by ascending key.
pub fn select_most_negative<'a>(model: &ModelSnapshot, rows: &[Example<'a>], keep: usize) -> Result<Vec<Example<'a>>> {
    let mut scored = rows
        .iter()
        .map(|e| Ok((model.decision(e.features)?, *e)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.key.cmp(&b.1.key)));
    Ok(scored.into_iter().take(keep).map(|(_, e)| e).collect())
}

/// Value of the training objective at `(w, b)`.
pub fn hinge_objective(w: &[f64], b: f64, examples: &[Example], weights: ClassWeights, c: f64) -> f64 {
    let reg = 0.5 * (w.iter().map(|x| x * x).sum::<f64>() + b * b);
    let loss: f64 = examples
        .iter()
        .map(|e| {
            let m = e.sign() * (e.features.dot(w) + b);
            weights.of(e.positive) * (1.0 - m).max(0.0)
        })
        .sum();
    reg + c * loss
}

/// A subgradient of [`hinge_objective`] (the gradient away from hinge kinks).
pub fn hinge_subgradient(w: &[f64], b: f64, examples: &[Example], weights: ClassWeights, c: f64) -> (Vec<f64>, f64) {
    let mut gw = w.to_vec();
    let mut gb = b;
    for e in examples {
        let y = e.sign();
        if y * (e.features.dot(w) + b) < 1.0 {
            let k = c * weights.of(e.positive) * y;
            for (j, x) in e.features.iter() {
                gw[j as usize] -= k * x;
            }
            gb -= k;
        }
    }
    (gw, gb)
}
