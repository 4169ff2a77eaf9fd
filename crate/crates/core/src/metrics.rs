//! Screening-quality accounting: tool vs. human precision and recall,
//! screening cost, and recall-versus-effort curves.
//!
//! A metric whose denominator is zero is [`Metric::Undefined`] rather than 0.

use serde::{Deserialize, Serialize};

use crate::corpus::{Decision, DocId};
use crate::error::{Error, Result};

/// A ratio that may be undefined. Serialises as a number or `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<f64>", into = "Option<f64>")]
pub enum Metric {
    Value(f64),
    Undefined,
}

impl Metric {
    pub fn ratio(num: f64, den: f64) -> Self {
        if den == 0.0 {
            Metric::Undefined
        } else {
            Metric::Value(num / den)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Value(v) => Some(v),
            Metric::Undefined => None,
        }
    }

    pub fn is_undefined(self) -> bool {
        matches!(self, Metric::Undefined)
    }

    fn times(self, other: Metric) -> Metric {
        match (self, other) {
            (Metric::Value(a), Metric::Value(b)) => Metric::Value(a * b),
            _ => Metric::Undefined,
        }
    }
}

impl From<Option<f64>> for Metric {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Metric::Undefined, Metric::Value)
    }
}

impl From<Metric> for Option<f64> {
    fn from(m: Metric) -> Self {
        m.value()
    }
}

/// Tool outcome (included / excluded by the reviewer / never suggested)
/// crossed with ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionTable {
    pub tool_yes_truth_yes: i64,
    pub tool_no_truth_yes: i64,
    pub tool_ignored_truth_yes: i64,
    pub tool_yes_truth_no: i64,
    pub tool_no_truth_no: i64,
    pub tool_ignored_truth_no: i64,
    pub corpus_size: i64,
}

impl ConfusionTable {
    /// Builds the table from each document's screening decision (`None` =
    /// never suggested) and its ground-truth relevance.
    pub fn from_outcomes(outcomes: impl IntoIterator<Item = (Option<Decision>, bool)>) -> Self {
        let mut t = ConfusionTable::default();
        for (decision, relevant) in outcomes {
            let cell = match (decision, relevant) {
                (Some(Decision::Included), true) => &mut t.tool_yes_truth_yes,
                (Some(Decision::Excluded), true) => &mut t.tool_no_truth_yes,
                (None, true) => &mut t.tool_ignored_truth_yes,
                (Some(Decision::Included), false) => &mut t.tool_yes_truth_no,
                (Some(Decision::Excluded), false) => &mut t.tool_no_truth_no,
                (None, false) => &mut t.tool_ignored_truth_no,
            };
            *cell += 1;
            t.corpus_size += 1;
        }
        t
    }

    fn cells(&self) -> [i64; 6] {
        [
            self.tool_yes_truth_yes,
            self.tool_no_truth_yes,
            self.tool_ignored_truth_yes,
            self.tool_yes_truth_no,
            self.tool_no_truth_no,
            self.tool_ignored_truth_no,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells().iter().any(|&c| c < 0) || self.corpus_size < 0 {
            return Err(Error::Validation("confusion counts must be non-negative".into()));
        }
        let sum: i64 = self.cells().iter().sum();
        if sum != self.corpus_size {
            return Err(Error::Validation(format!(
                "confusion counts sum to {sum}, corpus size is {}",
                self.corpus_size
            )));
        }
        Ok(())
    }

    pub fn suggested(&self) -> i64 {
        self.tool_yes_truth_yes + self.tool_yes_truth_no + self.tool_no_truth_yes + self.tool_no_truth_no
    }

    pub fn truth_yes(&self) -> i64 {
        self.tool_yes_truth_yes + self.tool_no_truth_yes + self.tool_ignored_truth_yes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToolMetrics {
    pub human_precision: Metric,
    pub tool_precision: Metric,
    pub tool_recall: Metric,
    pub human_recall: Metric,
    pub compound_recall: Metric,
    pub cost: Metric,
}

pub fn compute_tool_metrics(t: &ConfusionTable) -> Result<ToolMetrics> {
    t.validate()?;
    let yes_yes = t.tool_yes_truth_yes as f64;
    let suggested = t.suggested() as f64;
    let suggested_yes = (t.tool_yes_truth_yes + t.tool_no_truth_yes) as f64;
    let tool_recall = Metric::ratio(suggested_yes, t.truth_yes() as f64);
    let human_recall = Metric::ratio(yes_yes, suggested_yes);
    Ok(ToolMetrics {
        human_precision: Metric::ratio(yes_yes, yes_yes + t.tool_yes_truth_no as f64),
        tool_precision: Metric::ratio(yes_yes, suggested),
        tool_recall,
        human_recall,
        compound_recall: tool_recall.times(human_recall),
        cost: Metric::ratio(suggested, t.corpus_size as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoteMetrics {
    pub precision: Metric,
    pub recall: Metric,
    pub cost: Metric,
}

/// Manual screening where every document gets `reviews_per_doc` votes and
/// `adjudicated` documents needed one more.
pub fn compute_vote_metrics(
    yes_truth_yes: i64,
    yes_truth_no: i64,
    truth_yes: i64,
    reviews_per_doc: i64,
    adjudicated: i64,
    corpus_size: i64,
) -> Result<VoteMetrics> {
    let all = [
        yes_truth_yes,
        yes_truth_no,
        truth_yes,
        reviews_per_doc,
        adjudicated,
        corpus_size,
    ];
    if all.iter().any(|&c| c < 0) {
        return Err(Error::Validation("vote counts must be non-negative".into()));
    }
    if yes_truth_yes > truth_yes {
        return Err(Error::Validation("more true inclusions than relevant documents".into()));
    }
    let yy = yes_truth_yes as f64;
    Ok(VoteMetrics {
        precision: Metric::ratio(yy, yy + yes_truth_no as f64),
        recall: Metric::ratio(yy, truth_yes as f64),
        cost: Metric::ratio((corpus_size * reviews_per_doc + adjudicated) as f64, corpus_size as f64),
    })
}

/// Per-document ground truth, indexed by doc id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth(Vec<bool>);

impl GroundTruth {
    /// Requires a label for every document.
    pub fn from_labels(labels: &[Option<bool>]) -> Result<Self> {
        if let Some(i) = labels.iter().position(Option::is_none) {
            return Err(Error::Validation(format!("document {i} has no ground-truth label")));
        }
        Ok(GroundTruth(labels.iter().map(|l| l.unwrap_or(false)).collect()))
    }

    pub fn new(relevant: Vec<bool>) -> Self {
        GroundTruth(relevant)
    }

    pub fn is_relevant(&self, id: DocId) -> bool {
        self.0[id.index()]
    }

    pub fn n_relevant(&self) -> usize {
        self.0.iter().filter(|&&r| r).count()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub screened: usize,
    pub recall: f64,
}

/// Recall after each screening decision of `trace`, against `truth`.
///
/// A document counts as found once it is screened as included and truly
/// relevant. Re-screening a document does not change the count.
pub fn recall_cost_curve(trace: &[(DocId, Decision)], truth: &GroundTruth) -> Result<Vec<CurvePoint>> {
    let total = truth.n_relevant();
    let mut found = vec![false; truth.len()];
    let mut n_found = 0usize;
    let mut points = Vec::with_capacity(trace.len());
    for (i, &(id, decision)) in trace.iter().enumerate() {
        if id.index() >= truth.len() {
            return Err(Error::Validation(format!("document {id} has no ground-truth label")));
        }
        if decision.is_included() && truth.is_relevant(id) && !found[id.index()] {
            found[id.index()] = true;
            n_found += 1;
        }
        let recall = if total == 0 { 1.0 } else { n_found as f64 / total as f64 };
        points.push(CurvePoint {
            screened: i + 1,
            recall,
        });
    }
    Ok(points)
}
