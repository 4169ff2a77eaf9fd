//! The screening session: which documents to show next, when to retrain,
//! how many relevant documents remain, and when to stop.
//!
//! Phases follow the number of included documents `|L_R|`:
//!
//! | `|L_R|`        | phase         | batch source                       |
//! |----------------|---------------|------------------------------------|
//! | 0              | `Bootstrap`   | BM25 on the query (random if none) |
//! | `1 ..N2`       | `Uncertainty` | smallest `|decision|`              |
//! | `N2..`         | `Certainty`   | largest `decision`                 |
//!
//! `Done` is entered when the estimated recall reaches the target or no
//! unlabeled documents remain. A target stop is soft: see
//! [`Session::continue_screening`].

mod semi;

use std::path::Path;
use std::sync::Arc;

use chrono::Utc;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Decision, DocId, Journal, JournalEntry, LabelSource};
use crate::error::{Error, Result};
use crate::models::{aggressive_undersample, train_svm, Example, ModelSnapshot, SvmConfig};
use crate::textfeat::{Bm25Index, Bm25Params, FeatureSpace, DEFAULT_MAX_TERMS};

pub use semi::{semi_estimate, temporary_label, SemiOutcome, MAX_SEMI_ITERATIONS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub target_recall: f64,
    pub batch_size: usize,
    pub strategy_threshold: usize,
    pub rng_seed: u64,
    pub bootstrap_query: Option<String>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            target_recall: 0.9,
            batch_size: 10,
            strategy_threshold: 30,
            rng_seed: 0,
            bootstrap_query: None,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_recall > 0.0 && self.target_recall <= 1.0) {
            return Err(Error::Config(format!(
                "target recall must be in (0, 1], got {}",
                self.target_recall
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.strategy_threshold == 0 {
            return Err(Error::Config("strategy threshold must be at least 1".into()));
        }
        if let Some(q) = &self.bootstrap_query {
            Bm25Index::query_terms(q)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Bootstrap,
    Uncertainty,
    Certainty,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TargetReached,
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallEstimate {
    /// `|R_E|`
    pub estimated_relevant: usize,
    /// `|L_R| / |R_E|`
    pub estimated_recall: f64,
    /// Label sequence number the estimate was computed at.
    pub computed_at: u64,
}

impl RecallEstimate {
    fn new(n_included: usize, estimated_relevant: usize, computed_at: u64) -> Self {
        let estimated_recall = if estimated_relevant == 0 {
            0.0
        } else {
            n_included as f64 / estimated_relevant as f64
        };
        RecallEstimate {
            estimated_relevant,
            estimated_recall,
            computed_at,
        }
    }
}

/// What a label submission did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubmitOutcome {
    pub retrained: bool,
    pub estimate: Option<RecallEstimate>,
}

/// Counters reported to the reviewer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub n_documents: usize,
    pub n_labeled: usize,
    pub n_included: usize,
    pub phase: Phase,
    pub estimated_relevant: Option<usize>,
    pub estimated_recall: Option<f64>,
    pub target_recall: f64,
    pub stop: bool,
    pub stop_reason: Option<StopReason>,
    pub retrains: usize,
    pub last_sequence: u64,
}

/// One reviewer's screening session over a corpus.
#[derive(Debug)]
pub struct Session {
    corpus: Corpus,
    config: SessionConfig,
    features: Arc<FeatureSpace>,
    bm25: Arc<Bm25Index>,
    rng: ChaCha8Rng,
    model: Option<Arc<ModelSnapshot>>,
    decisions: Option<Arc<Vec<f64>>>,
    estimate: Option<RecallEstimate>,
    estimate_history: Vec<RecallEstimate>,
    pending: Vec<DocId>,
    labels_since_retrain: usize,
    seen_relevant: bool,
    stop: Option<StopReason>,
    stop_overridden: bool,
    retrains: usize,
    submissions: u64,
    journal: Option<Journal>,
}

impl Session {
    /// Opens a session. Labels already present in `corpus` (replayed from an
    /// import) count as screened; if any are included, an initial model is
    /// trained, but no recall estimate is made until the next retrain.
    pub fn start(corpus: Corpus, config: SessionConfig) -> Result<Self> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(Error::Config("corpus has no documents".into()));
        }
        let features = FeatureSpace::build(&corpus, DEFAULT_MAX_TERMS)?;
        let bm25 = Bm25Index::build(&corpus, Bm25Params::default());
        let mut session = Session {
            seen_relevant: corpus.n_included() > 0,
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            corpus,
            config,
            features: Arc::new(features),
            bm25: Arc::new(bm25),
            model: None,
            decisions: None,
            estimate: None,
            estimate_history: Vec::new(),
            pending: Vec::new(),
            labels_since_retrain: 0,
            stop: None,
            stop_overridden: false,
            retrains: 0,
            submissions: 0,
            journal: None,
        };
        if session.corpus.n_included() > 0 && session.corpus.n_unlabeled() > 0 {
            session.retrain()?;
        }
        session.update_stop();
        Ok(session)
    }

    /// Rebuilds a session from its journal, replaying each recorded
    /// submission in order, then keeps appending to the same journal.
    pub fn resume(corpus: Corpus, config: SessionConfig, journal: impl AsRef<Path>) -> Result<Self> {
        let path = journal.as_ref();
        let entries = Journal::read(path)?;
        let mut session = Session::start(corpus, config)?;
        let mut start = 0;
        while start < entries.len() {
            let batch = entries[start].batch;
            let end = entries[start..]
                .iter()
                .position(|e| e.batch != batch)
                .map_or(entries.len(), |p| start + p);
            let labels: Vec<(DocId, Decision)> = entries[start..end].iter().map(|e| (e.doc_id, e.decision)).collect();
            if session.stop == Some(StopReason::TargetReached) {
                // labels after a target stop imply the reviewer chose to continue
                session.continue_screening()?;
            }
            session.submit_labels(&labels)?;
            start = end;
        }
        session.journal = Some(Journal::open(path)?);
        Ok(session)
    }

    /// Journals every subsequent submission to `journal`.
    pub fn attach_journal(&mut self, journal: Journal) {
        self.journal = Some(journal);
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn features(&self) -> &FeatureSpace {
        &self.features
    }

    pub fn model(&self) -> Option<&ModelSnapshot> {
        self.model.as_deref()
    }

    /// Decision value of every document under the current model.
    pub fn decisions(&self) -> Option<&[f64]> {
        self.decisions.as_ref().map(|d| d.as_slice())
    }

    pub fn estimate(&self) -> Option<RecallEstimate> {
        self.estimate
    }

    /// Every estimate made so far, oldest first.
    pub fn estimate_history(&self) -> &[RecallEstimate] {
        &self.estimate_history
    }

    pub fn pending_batch(&self) -> &[DocId] {
        &self.pending
    }

    pub fn retrain_count(&self) -> usize {
        self.retrains
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }

    pub fn phase(&self) -> Phase {
        if self.stop.is_some() {
            Phase::Done
        } else {
            self.labeling_phase()
        }
    }

    fn labeling_phase(&self) -> Phase {
        match self.corpus.n_included() {
            0 => Phase::Bootstrap,
            n if n < self.config.strategy_threshold => Phase::Uncertainty,
            _ => Phase::Certainty,
        }
    }

    pub fn stats(&self) -> SessionStats {
        SessionStats {
            n_documents: self.corpus.len(),
            n_labeled: self.corpus.n_labeled(),
            n_included: self.corpus.n_included(),
            phase: self.phase(),
            estimated_relevant: self.estimate.map(|e| e.estimated_relevant),
            estimated_recall: self.estimate.map(|e| e.estimated_recall),
            target_recall: self.config.target_recall,
            stop: self.stop.is_some(),
            stop_reason: self.stop,
            retrains: self.retrains,
            last_sequence: self.corpus.last_sequence(),
        }
    }

    /// The documents to screen next, at most `batch_size` of them.
    ///
    /// The batch is cached: repeated calls return the same documents until
    /// labels arrive. Fewer than `batch_size` come back only when fewer
    /// unlabeled documents remain.
    pub fn next_batch(&mut self) -> Result<Vec<DocId>> {
        if self.stop.is_some() {
            return Err(Error::State("session is done; no further batches".into()));
        }
        if !self.pending.is_empty() {
            return Ok(self.pending.clone());
        }
        let n = self.config.batch_size;
        let batch = match self.labeling_phase() {
            Phase::Bootstrap => self.bootstrap_batch(n)?,
            phase => {
                if self.decisions.is_none() {
                    self.retrain()?;
                }
                let decisions = self.decisions.clone().expect("model trained above");
                let mut scored: Vec<(DocId, f64)> = self
                    .corpus
                    .unlabeled_ids()
                    .map(|id| (id, decisions[id.index()]))
                    .collect();
                if phase == Phase::Certainty {
                    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                } else {
                    scored.sort_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(a.0.cmp(&b.0)));
                }
                scored.into_iter().take(n).map(|(id, _)| id).collect()
            }
        };
        self.pending = batch.clone();
        Ok(batch)
    }

    fn bootstrap_batch(&self, n: usize) -> Result<Vec<DocId>> {
        let corpus = &self.corpus;
        if let Some(query) = &self.config.bootstrap_query {
            let ranked = self.bm25.rank(query, n, |id| !corpus.is_labeled(id))?;
            return Ok(ranked.into_iter().map(|(id, _)| id).collect());
        }
        // No query: a seeded random draw, keyed on the label count so the
        // choice does not depend on how often this was called.
        let unlabeled: Vec<DocId> = corpus.unlabeled_ids().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.rng_seed);
        rng.set_stream(1 + corpus.last_sequence());
        let k = n.min(unlabeled.len());
        Ok(index::sample(&mut rng, unlabeled.len(), k)
            .into_iter()
            .map(|i| unlabeled[i])
            .collect())
    }

    /// Records the reviewer's decisions. Retrains (and re-estimates) after
    /// every `batch_size` labels, and right away when the first relevant
    /// document ever is found. The whole submission is rejected if any id is
    /// unknown.
    pub fn submit_labels(&mut self, labels: &[(DocId, Decision)]) -> Result<SubmitOutcome> {
        if self.stop.is_some() {
            return Err(Error::State(
                "session is done; call continue_screening to keep labeling".into(),
            ));
        }
        if labels.is_empty() {
            return Ok(SubmitOutcome {
                retrained: false,
                estimate: None,
            });
        }
        if let Some(&(bad, _)) = labels.iter().find(|(id, _)| !self.corpus.contains(*id)) {
            return Err(Error::UnknownDocument(bad));
        }

        self.submissions += 1;
        let now = Utc::now();
        let mut entries = Vec::with_capacity(labels.len());
        for &(doc_id, decision) in labels {
            let record = self.corpus.record_label(doc_id, decision, LabelSource::Human)?;
            entries.push(JournalEntry::from_record(record, self.submissions, now));
        }
        if let Some(journal) = self.journal.as_mut() {
            journal.append(&entries)?;
        }
        self.labels_since_retrain += labels.len();
        self.pending.clear();

        let mut retrained = false;
        let mut fresh = None;
        if self.corpus.n_included() == 0 {
            self.estimate = None;
        } else {
            let first_relevant = !self.seen_relevant;
            self.seen_relevant = true;
            let due = first_relevant || self.labels_since_retrain >= self.config.batch_size;
            if due && self.can_train() {
                self.retrain()?;
                fresh = Some(self.estimate_recall()?);
                retrained = true;
            }
        }
        if let Some(est) = self.estimate.as_mut() {
            // known relevant documents bound the estimate from below
            let relevant = est.estimated_relevant.max(self.corpus.n_included());
            *est = RecallEstimate::new(self.corpus.n_included(), relevant, est.computed_at);
        }
        self.update_stop();
        Ok(SubmitOutcome {
            retrained,
            estimate: fresh,
        })
    }

    fn can_train(&self) -> bool {
        self.corpus.n_included() > 0
            && (self.corpus.n_unlabeled() > 0 || self.corpus.n_labeled() > self.corpus.n_included())
    }

    /// Trains a fresh model: labeled documents plus an equal-sized random
    /// sample of unlabeled ones presumed non-relevant, class-balanced; once
    /// `|L_R| >= N2` the negatives are undersampled and the model retrained.
    pub fn retrain(&mut self) -> Result<Arc<ModelSnapshot>> {
        let n_included = self.corpus.n_included();
        if n_included == 0 {
            return Err(Error::State("retraining needs at least one relevant label".into()));
        }
        let rows = self.features.matrix.rows();
        let mut examples: Vec<Example> = self
            .corpus
            .labeled_ids()
            .map(|id| Example {
                key: id.0,
                features: &rows[id.index()],
                positive: self.corpus.decision(id) == Some(Decision::Included),
            })
            .collect();
        let unlabeled: Vec<DocId> = self.corpus.unlabeled_ids().collect();
        let n_presumed = examples.len().min(unlabeled.len());
        let mut presumed: Vec<DocId> = index::sample(&mut self.rng, unlabeled.len(), n_presumed)
            .into_iter()
            .map(|i| unlabeled[i])
            .collect();
        presumed.sort_unstable();
        examples.extend(presumed.iter().map(|id| Example {
            key: id.0,
            features: &rows[id.index()],
            positive: false,
        }));

        let svm = SvmConfig::default();
        let dim = self.features.matrix.dim();
        let mut model = train_svm(&examples, dim, true, &svm)?;
        if n_included >= self.config.strategy_threshold {
            let (pos, neg): (Vec<Example>, Vec<Example>) = examples.iter().partition(|e| e.positive);
            model = aggressive_undersample(&model, &pos, &neg, &svm)?;
        }
        let decisions: Vec<f64> = rows.iter().map(|r| model.decision_unchecked(r)).collect();
        let model = Arc::new(model);
        self.model = Some(Arc::clone(&model));
        self.decisions = Some(Arc::new(decisions));
        self.labels_since_retrain = 0;
        self.pending.clear();
        self.retrains += 1;
        Ok(model)
    }

    /// Runs the semi-supervised estimator on the current model and stores
    /// the result.
    pub fn estimate_recall(&mut self) -> Result<RecallEstimate> {
        let decisions = self
            .decisions
            .as_ref()
            .ok_or_else(|| Error::State("no trained model to estimate from".into()))?;
        let labels: Vec<Option<bool>> = (0..self.corpus.len())
            .map(|i| self.corpus.decision(DocId::from(i)).map(Decision::is_included))
            .collect();
        let negatives = self.model.as_ref().map_or(1, |m| m.trained_on.negatives);
        let outcome = semi_estimate(decisions, &labels, negatives)?;
        let estimate = RecallEstimate::new(
            self.corpus.n_included(),
            outcome.estimated_relevant,
            self.corpus.last_sequence(),
        );
        self.estimate = Some(estimate);
        self.estimate_history.push(estimate);
        Ok(estimate)
    }

    /// Whether screening should stop now, and why.
    pub fn should_stop(&self) -> (bool, Option<StopReason>) {
        let reason = evaluate_stop(
            self.corpus.n_included(),
            self.corpus.n_unlabeled(),
            self.estimate.map(|e| e.estimated_relevant),
            self.config.target_recall,
        )
        .filter(|r| !(self.stop_overridden && *r == StopReason::TargetReached));
        (reason.is_some(), reason)
    }

    fn update_stop(&mut self) {
        self.stop = self.should_stop().1;
    }

    /// Reopens a session stopped at the target recall. Later estimates no
    /// longer stop it; exhausting the corpus still does.
    pub fn continue_screening(&mut self) -> Result<()> {
        match self.stop {
            Some(StopReason::Exhausted) => Err(Error::State("every document has been screened".into())),
            _ => {
                self.stop = None;
                self.stop_overridden = true;
                Ok(())
            }
        }
    }

    /// Labeled documents whose label disagrees with the model, most
    /// confident disagreement first.
    pub fn suggest_error_checks(&self, k: usize) -> Vec<DocId> {
        match &self.decisions {
            Some(d) => suggest_error_checks(&self.corpus, d, k),
            None => Vec::new(),
        }
    }

    /// Cheap read-only copy for concurrent readers.
    pub fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            corpus: self.corpus.clone(),
            stats: self.stats(),
            decisions: self.decisions.clone(),
            estimate_history: self.estimate_history.clone(),
        }
    }
}

/// Stop rule: exhausted, or `|L_R| >= T_rec · |R_E|` with an estimate present.
pub fn evaluate_stop(
    n_included: usize,
    n_unlabeled: usize,
    estimated_relevant: Option<usize>,
    target_recall: f64,
) -> Option<StopReason> {
    if n_unlabeled == 0 {
        return Some(StopReason::Exhausted);
    }
    let relevant = estimated_relevant?;
    if n_included as f64 >= target_recall * relevant as f64 - 1e-9 {
        Some(StopReason::TargetReached)
    } else {
        None
    }
}

/// Labeled documents whose decision sign contradicts the label, ordered by
/// descending `|decision|` (ties by ascending id), at most `k`.
pub fn suggest_error_checks(corpus: &Corpus, decisions: &[f64], k: usize) -> Vec<DocId> {
    let mut flagged: Vec<(DocId, f64)> = corpus
        .labeled_ids()
        .filter_map(|id| {
            let d = decisions[id.index()];
            let disagrees = match corpus.decision(id)? {
                Decision::Included => d < 0.0,
                Decision::Excluded => d > 0.0,
            };
            disagrees.then_some((id, d.abs()))
        })
        .collect();
    flagged.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    flagged.into_iter().take(k).map(|(id, _)| id).collect()
}

/// Immutable view of a session at one point in time.
#[derive(Debug, Clone)]
pub struct SessionSnapshot {
    pub corpus: Corpus,
    pub stats: SessionStats,
    pub decisions: Option<Arc<Vec<f64>>>,
    pub estimate_history: Vec<RecallEstimate>,
}

impl SessionSnapshot {
    pub fn error_checks(&self, k: usize) -> Vec<DocId> {
        match &self.decisions {
            Some(d) => suggest_error_checks(&self.corpus, d, k),
            None => Vec::new(),
        }
    }
}
