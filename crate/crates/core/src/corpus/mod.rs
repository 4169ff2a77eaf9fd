//! Candidate documents and the reviewer's label history.
//!
//! A [`Corpus`] is the candidate set `E`. Every screening decision is stored as
//! a [`LabelRecord`]; the record with the highest sequence number for a
//! document is its active label. The labeled set `L` and the included subset
//! `L_R` are derived from the active labels.

mod csv_io;
mod journal;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{export_csv, import_csv, read_csv, write_csv, ImportReport, EXPORT_COLUMNS};
pub use journal::{Journal, JournalEntry};

/// Position of a document in its corpus, assigned in file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DocId(pub u32);

impl DocId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<usize> for DocId {
    fn from(i: usize) -> Self {
        DocId(u32::try_from(i).expect("corpus larger than u32::MAX documents"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: DocId,
    pub title: String,
    pub abstract_text: String,
    pub year: Option<i32>,
    pub link: Option<String>,
}

impl Document {
    /// Title and abstract joined, the text every featurizer sees.
    pub fn text(&self) -> String {
        if self.abstract_text.is_empty() {
            self.title.clone()
        } else {
            format!("{} {}", self.title, self.abstract_text)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Included,
    Excluded,
}

impl Decision {
    pub fn is_included(self) -> bool {
        matches!(self, Decision::Included)
    }

    pub fn flipped(self) -> Self {
        match self {
            Decision::Included => Decision::Excluded,
            Decision::Excluded => Decision::Included,
        }
    }
}

impl From<bool> for Decision {
    fn from(included: bool) -> Self {
        if included {
            Decision::Included
        } else {
            Decision::Excluded
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Human,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub doc_id: DocId,
    pub decision: Decision,
    pub source: LabelSource,
    pub sequence: u64,
}

/// The candidate set together with its append-only label history.
///
/// Documents sit behind an `Arc`, so cloning a corpus to publish a read
/// snapshot copies only the label bookkeeping.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    documents: Arc<Vec<Document>>,
    history: Vec<LabelRecord>,
    // index into `history` of each document's active record
    active: Vec<Option<usize>>,
    next_sequence: u64,
    n_labeled: usize,
    n_included: usize,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Self {
        debug_assert!(documents.iter().enumerate().all(|(i, d)| d.doc_id.index() == i));
        let n = documents.len();
        Corpus {
            documents: Arc::new(documents),
            history: Vec::new(),
            active: vec![None; n],
            next_sequence: 1,
            n_labeled: 0,
            n_included: 0,
        }
    }

    /// Builds documents from `(title, abstract)` pairs, assigning ids in order.
    pub fn from_texts<I, T, A>(texts: I) -> Self
    where
        I: IntoIterator<Item = (T, A)>,
        T: Into<String>,
        A: Into<String>,
    {
        let documents = texts
            .into_iter()
            .enumerate()
            .map(|(i, (title, abs))| Document {
                doc_id: DocId::from(i),
                title: title.into(),
                abstract_text: abs.into(),
                year: None,
                link: None,
            })
            .collect();
        Corpus::new(documents)
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, doc_id: DocId) -> Result<&Document> {
        self.documents.get(doc_id.index()).ok_or(Error::UnknownDocument(doc_id))
    }

    pub fn contains(&self, doc_id: DocId) -> bool {
        doc_id.index() < self.documents.len()
    }

    /// Full label history in submission order.
    pub fn history(&self) -> &[LabelRecord] {
        &self.history
    }

    pub fn active_label(&self, doc_id: DocId) -> Option<&LabelRecord> {
        self.active
            .get(doc_id.index())
            .copied()
            .flatten()
            .map(|i| &self.history[i])
    }

    pub fn decision(&self, doc_id: DocId) -> Option<Decision> {
        self.active_label(doc_id).map(|r| r.decision)
    }

    pub fn is_labeled(&self, doc_id: DocId) -> bool {
        self.active_label(doc_id).is_some()
    }

    /// `|L|`
    pub fn n_labeled(&self) -> usize {
        self.n_labeled
    }

    /// `|L_R|`
    pub fn n_included(&self) -> usize {
        self.n_included
    }

    pub fn n_unlabeled(&self) -> usize {
        self.len() - self.n_labeled
    }

    /// Sequence number of the most recent label, 0 when nothing was labeled.
    pub fn last_sequence(&self) -> u64 {
        self.next_sequence - 1
    }

    pub fn unlabeled_ids(&self) -> impl Iterator<Item = DocId> + '_ {
        self.active
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_none())
            .map(|(i, _)| DocId::from(i))
    }

    pub fn labeled_ids(&self) -> impl Iterator<Item = DocId> + '_ {
        self.active
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_some())
            .map(|(i, _)| DocId::from(i))
    }

    pub fn included_ids(&self) -> impl Iterator<Item = DocId> + '_ {
        self.labeled_ids()
            .filter(|&id| self.decision(id) == Some(Decision::Included))
    }

    /// Records a decision for `doc_id`, superseding any earlier one.
    pub fn record_label(&mut self, doc_id: DocId, decision: Decision, source: LabelSource) -> Result<&LabelRecord> {
        if !self.contains(doc_id) {
            return Err(Error::UnknownDocument(doc_id));
        }
        match self.decision(doc_id) {
            None => {
                self.n_labeled += 1;
                if decision.is_included() {
                    self.n_included += 1;
                }
            }
            Some(prev) if prev != decision => {
                if decision.is_included() {
                    self.n_included += 1;
                } else {
                    self.n_included -= 1;
                }
            }
            Some(_) => {}
        }
        let record = LabelRecord {
            doc_id,
            decision,
            source,
            sequence: self.next_sequence,
        };
        self.next_sequence += 1;
        self.history.push(record);
        self.active[doc_id.index()] = Some(self.history.len() - 1);
        Ok(self.history.last().expect("just pushed"))
    }

    /// A copy of this corpus with the same documents and no labels.
    pub fn without_labels(&self) -> Corpus {
        Corpus {
            documents: Arc::clone(&self.documents),
            history: Vec::new(),
            active: vec![None; self.len()],
            next_sequence: 1,
            n_labeled: 0,
            n_included: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_docs() -> Corpus {
        Corpus::from_texts([("a title", "x"), ("b title", ""), ("c title", "z")])
    }

    #[test]
    fn include_grows_both_sets() {
        let mut c = three_docs();
        c.record_label(DocId(0), Decision::Included, LabelSource::Human)
            .unwrap();
        assert_eq!((c.n_labeled(), c.n_included()), (1, 1));
    }

    #[test]
    fn relabel_included_to_excluded() {
        let mut c = three_docs();
        c.record_label(DocId(1), Decision::Included, LabelSource::Human)
            .unwrap();
        c.record_label(DocId(1), Decision::Excluded, LabelSource::Human)
            .unwrap();
        assert_eq!((c.n_labeled(), c.n_included()), (1, 0));
        assert_eq!(c.history().len(), 2);
        assert_eq!(c.active_label(DocId(1)).unwrap().sequence, 2);
    }

    #[test]
    fn same_decision_only_touches_history() {
        let mut c = three_docs();
        c.record_label(DocId(2), Decision::Included, LabelSource::Human)
            .unwrap();
        c.record_label(DocId(2), Decision::Included, LabelSource::Human)
            .unwrap();
        assert_eq!((c.n_labeled(), c.n_included()), (1, 1));
        assert_eq!(c.history().len(), 2);
        assert_eq!(c.decision(DocId(2)), Some(Decision::Included));
    }

    #[test]
    fn unknown_doc_is_rejected() {
        let mut c = three_docs();
        let err = c
            .record_label(DocId(3), Decision::Included, LabelSource::Human)
            .unwrap_err();
        assert!(matches!(err, Error::UnknownDocument(DocId(3))));
        assert!(c.history().is_empty());
    }

    #[test]
    fn without_labels_shares_documents() {
        let mut c = three_docs();
        c.record_label(DocId(0), Decision::Included, LabelSource::Replay)
            .unwrap();
        let fresh = c.without_labels();
        assert_eq!(fresh.n_labeled(), 0);
        assert_eq!(fresh.documents(), c.documents());
    }
}
