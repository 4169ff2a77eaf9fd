//! Human-in-the-loop active learning for total-recall document screening.
//!
//! A reviewer screens candidate documents (title + abstract) in batches chosen
//! by the [`engine`]. The engine starts from a keyword search, switches to a
//! linear classifier once the first relevant document is found, estimates how
//! many relevant documents exist in total, and signals when the target recall
//! has (probably) been reached.
//!
//! Module map:
//!
//! - [`corpus`]: documents, label records, CSV import/export, session journal
//! - [`textfeat`]: tokenizer, TF-IDF features, BM25 ranking
//! - [`models`]: class-weighted linear SVM and 1-D logistic regression
//! - [`engine`]: the screening session state machine
//! - [`metrics`]: precision / recall / cost accounting
//! - [`sim`]: replay simulation and synthetic corpora

pub mod corpus;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod models;
pub mod sim;
pub mod textfeat;

pub use corpus::{Corpus, Decision, DocId, Document, LabelRecord, LabelSource};
pub use engine::{Phase, RecallEstimate, Session, SessionConfig, StopReason};
pub use error::{Error, Result};
