//! Semi-supervised estimate of the total number of relevant documents.
//!
//! Starting from `Y = 1` for included documents and `0` elsewhere, a logistic
//! curve is fitted to `(decision value, Y)` over the whole corpus and used to
//! hand out temporary positives among the unlabeled documents. Each round
//! refits on the previous round's `Y` and reassigns the temporary positives
//! from scratch, until `ΣY` stops changing.
//!
//! The curve is L2-regularised with `C = ΣY / n_neg`, `n_neg` being the
//! number of negatives the classifier was trained on. Decision values of
//! training documents sit at or beyond the SVM margin, which makes an
//! unregularised fit all but separable and the estimate collapse to `|L_R|`.

use crate::corpus::DocId;
use crate::error::Result;
use crate::models::{fit_logistic_1d_l2, LogisticCurve};

pub const MAX_SEMI_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SemiOutcome {
    pub estimated_relevant: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs the estimator.
///
/// `decisions[i]` is the classifier output for document `i` and `labels[i]`
/// its active label (`Some(true)` = included). Returns the last value when
/// the fixed point is not reached within [`MAX_SEMI_ITERATIONS`].
pub fn semi_estimate(decisions: &[f64], labels: &[Option<bool>], training_negatives: usize) -> Result<SemiOutcome> {
    assert_eq!(decisions.len(), labels.len(), "one label slot per decision");
    let n_neg = training_negatives.max(1) as f64;
    let known: Vec<bool> = labels.iter().map(|l| *l == Some(true)).collect();
    let mut y = known.clone();
    let unlabeled: Vec<(DocId, f64)> = labels
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_none())
        .map(|(i, _)| (DocId::from(i), decisions[i]))
        .collect();

    let mut estimate = y.iter().filter(|&&v| v).count();
    let mut last = 0;
    let mut iterations = 0;
    while estimate != last && iterations < MAX_SEMI_ITERATIONS {
        let points: Vec<(f64, bool)> = decisions.iter().copied().zip(y.iter().copied()).collect();
        let c = (estimate.max(1) as f64) / n_neg;
        let curve = fit_logistic_1d_l2(&points, c)?;
        y.copy_from_slice(&known);
        temporary_label(&curve, &unlabeled, &mut y);
        last = estimate;
        estimate = y.iter().filter(|&&v| v).count();
        iterations += 1;
    }
    Ok(SemiOutcome {
        estimated_relevant: estimate,
        iterations,
        converged: estimate == last,
    })
}

/// Walks the unlabeled documents by descending probability (ties by ascending
/// id), accumulating probabilities. Whenever the running sum reaches the next
/// integer target, the first document of the current window becomes a
/// temporary positive and a new window starts.
///
/// `y` is indexed by document id; entries are only ever set, never cleared.
pub fn temporary_label(curve: &LogisticCurve, unlabeled: &[(DocId, f64)], y: &mut [bool]) {
    let mut ranked: Vec<(DocId, f64)> = unlabeled.iter().map(|&(id, d)| (id, curve.probability(d))).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut count = 0.0;
    let mut target = 1.0;
    let mut window_start: Option<DocId> = None;
    for (id, p) in ranked {
        count += p;
        let first = *window_start.get_or_insert(id);
        if count >= target {
            y[first.index()] = true;
            target += 1.0;
            window_start = None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(p: f64) -> LogisticCurve {
        LogisticCurve {
            slope: 0.0,
            intercept: (p / (1.0 - p)).ln(),
        }
    }

    #[test]
    fn three_at_point_six_marks_one() {
        let unl = [(DocId(0), 0.0), (DocId(1), 0.0), (DocId(2), 0.0)];
        let mut y = vec![false; 3];
        temporary_label(&flat(0.6), &unl, &mut y);
        assert_eq!(y, [true, false, false]);
    }

    #[test]
    fn zero_probabilities_mark_nothing() {
        let curve = LogisticCurve {
            slope: 0.0,
            intercept: -1e4,
        };
        let unl: Vec<_> = (0..5).map(|i| (DocId(i), 1.0)).collect();
        let mut y = vec![false; 5];
        temporary_label(&curve, &unl, &mut y);
        assert!(y.iter().all(|v| !v));
    }

    #[test]
    fn certain_single_doc_is_marked() {
        let curve = LogisticCurve {
            slope: 0.0,
            intercept: 1e4,
        };
        let mut y = vec![false; 4];
        temporary_label(&curve, &[(DocId(3), 0.2)], &mut y);
        assert_eq!(y, [false, false, false, true]);
    }

    #[test]
    fn window_start_follows_sorted_order() {
        // probabilities rise with d: doc 2 (d=3) first, then doc 0, then doc 1
        let curve = LogisticCurve {
            slope: 1.0,
            intercept: 0.0,
        };
        let unl = [(DocId(0), 0.5), (DocId(1), -0.5), (DocId(2), 3.0)];
        let mut y = vec![false; 3];
        temporary_label(&curve, &unl, &mut y);
        // 0.953 < 1, +0.622 = 1.575 >= 1 -> window [2, 0] marks doc 2
        assert_eq!(y, [false, false, true]);
    }

    #[test]
    fn fully_labeled_estimate_is_exact() {
        let d = [1.0, -1.0, 0.5, -0.2];
        let l = [Some(true), Some(false), Some(true), Some(false)];
        let out = semi_estimate(&d, &l, 2).unwrap();
        assert_eq!(out.estimated_relevant, 2);
        assert!(out.converged);
    }

    #[test]
    fn estimate_never_below_included() {
        let d = [2.0, 1.5, -1.0, 0.1, -0.3, 1.8, -2.0];
        let l = [Some(true), None, Some(false), None, Some(true), None, None];
        let out = semi_estimate(&d, &l, 2).unwrap();
        assert!(out.estimated_relevant >= 2);
        assert!(out.iterations <= MAX_SEMI_ITERATIONS);
    }
}
