//! REST handlers.
//!
//! | method | path                         | body / query            |
//! |--------|------------------------------|-------------------------|
//! | POST   | `/sessions`                  | [`CreateSessionRequest`] |
//! | GET    | `/sessions`                  |                         |
//! | GET    | `/sessions/{id}/next`        |                         |
//! | POST   | `/sessions/{id}/labels`      | [`LabelsRequest`]       |
//! | GET    | `/sessions/{id}/stats`       |                         |
//! | GET    | `/sessions/{id}/export`      |                         |
//! | GET    | `/sessions/{id}/error-checks`| `?k=10`                 |
//! | POST   | `/sessions/{id}/continue`    |                         |
//! | GET    | `/sessions/{id}/metrics`     |                         |

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use fastscreen_core::corpus::{import_csv, read_csv, write_csv, ImportReport};
use fastscreen_core::engine::SessionStats;
use fastscreen_core::metrics::{
    compute_tool_metrics, recall_cost_curve, ConfusionTable, CurvePoint, GroundTruth, ToolMetrics,
};
use fastscreen_core::sim::ground_truth;
use fastscreen_core::{Corpus, Decision, DocId, Error, Phase, RecallEstimate, SessionConfig, StopReason};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::store::{SessionEntry, SessionStore};

const MAX_UPLOAD_BYTES: usize = 256 * 1024 * 1024;
const DEFAULT_ERROR_CHECKS: usize = 10;

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}/next", get(next_batch))
        .route("/sessions/{id}/labels", post(submit_labels))
        .route("/sessions/{id}/stats", get(stats))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/error-checks", get(error_checks))
        .route("/sessions/{id}/continue", post(continue_screening))
        .route("/sessions/{id}/metrics", get(metrics))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(store)
}

/// Corpus given inline (`csv`) or as a server-side `path`, exactly one.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub csv: Option<String>,
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub config: SessionConfig,
    /// Relevance per document, in file order.
    pub ground_truth: Option<Vec<bool>>,
    /// Use the file's `label` column as ground truth instead of as
    /// already-screened labels. Every row must then be labeled.
    #[serde(default)]
    pub labels_are_ground_truth: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateSessionResponse {
    pub session_id: String,
    pub n_documents: usize,
    pub n_labeled: usize,
    pub phase: Phase,
    pub skipped_empty_title: usize,
    pub malformed_rows: usize,
    pub unrecognized_labels: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionList {
    pub sessions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentView {
    pub doc_id: DocId,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub year: Option<i32>,
    pub link: Option<String>,
}

/// The batch to screen; empty with a `stop_reason` once the session is done.
#[derive(Debug, Serialize, Deserialize)]
pub struct NextResponse {
    pub phase: Phase,
    pub batch: Vec<DocumentView>,
    pub stop_reason: Option<StopReason>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LabelInput {
    pub doc_id: DocId,
    pub decision: Decision,
}

#[derive(Debug, Deserialize)]
pub struct LabelsRequest {
    pub labels: Vec<LabelInput>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LabelsResponse {
    #[serde(flatten)]
    pub stats: SessionStats,
    pub retrained: bool,
    /// Latest estimate, fresh when `retrained` is true.
    pub estimate: Option<RecallEstimate>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StatsResponse {
    #[serde(flatten)]
    pub stats: SessionStats,
    pub estimate_history: Vec<RecallEstimate>,
}

#[derive(Debug, Deserialize)]
pub struct ErrorCheckQuery {
    pub k: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorCheck {
    pub doc_id: DocId,
    pub title: String,
    pub label: Decision,
    /// Classifier decision value; its sign disagrees with `label`.
    pub score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorChecksResponse {
    pub checks: Vec<ErrorCheck>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetricsResponse {
    pub confusion: ConfusionTable,
    pub metrics: ToolMetrics,
    /// Relevant documents found so far over all relevant documents.
    pub true_recall: f64,
    pub cost: f64,
    pub curve: Vec<CurvePoint>,
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

fn entry(store: &SessionStore, id: &str) -> Result<Arc<SessionEntry>, ApiError> {
    store.get(id).ok_or_else(|| ApiError::unknown_session(id))
}

fn load_corpus(req: &CreateSessionRequest) -> Result<ImportReport, ApiError> {
    match (&req.csv, &req.path) {
        (Some(text), None) => Ok(read_csv(text.as_bytes())?),
        (None, Some(path)) => import_csv(path).map_err(|e| match e {
            Error::Io { .. } => ApiError::bad_request(e.to_string()),
            other => other.into(),
        }),
        _ => Err(ApiError::bad_request("give exactly one of `csv` or `path`")),
    }
}

fn split_truth(req: &CreateSessionRequest, corpus: Corpus) -> Result<(Corpus, Option<GroundTruth>), ApiError> {
    if req.labels_are_ground_truth {
        if req.ground_truth.is_some() {
            return Err(ApiError::bad_request(
                "`ground_truth` and `labels_are_ground_truth` are exclusive",
            ));
        }
        let truth = ground_truth(&corpus)?;
        return Ok((corpus.without_labels(), Some(truth)));
    }
    Ok((corpus, req.ground_truth.clone().map(GroundTruth::new)))
}

async fn create_session(
    State(store): State<Arc<SessionStore>>,
    Json(req): Json<CreateSessionRequest>,
) -> Result<(StatusCode, Json<CreateSessionResponse>), ApiError> {
    let resp = blocking(move || {
        let report = load_corpus(&req)?;
        let (corpus, truth) = split_truth(&req, report.corpus)?;
        let created = store.create(corpus, req.config.clone(), truth)?;
        let stats = created.snapshot().stats.clone();
        Ok(CreateSessionResponse {
            session_id: created.id.clone(),
            n_documents: stats.n_documents,
            n_labeled: stats.n_labeled,
            phase: stats.phase,
            skipped_empty_title: report.skipped_empty_title,
            malformed_rows: report.malformed_rows,
            unrecognized_labels: report.unrecognized_labels,
        })
    })
    .await?;
    Ok((StatusCode::CREATED, Json(resp)))
}

async fn list_sessions(State(store): State<Arc<SessionStore>>) -> Json<SessionList> {
    Json(SessionList { sessions: store.ids() })
}

async fn next_batch(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
) -> Result<Json<NextResponse>, ApiError> {
    let entry = entry(&store, &id)?;
    let resp = blocking(move || {
        let resp = entry.write(|s| {
            if s.phase() == Phase::Done {
                return Ok(NextResponse {
                    phase: Phase::Done,
                    batch: Vec::new(),
                    stop_reason: s.stop_reason(),
                });
            }
            let ids = s.next_batch()?;
            let corpus = s.corpus();
            let batch = ids
                .iter()
                .map(|&id| {
                    corpus.document(id).map(|d| DocumentView {
                        doc_id: d.doc_id,
                        title: d.title.clone(),
                        abstract_text: d.abstract_text.clone(),
                        year: d.year,
                        link: d.link.clone(),
                    })
                })
                .collect::<Result<_, _>>()?;
            Ok(NextResponse {
                phase: s.phase(),
                batch,
                stop_reason: None,
            })
        })?;
        Ok(resp)
    })
    .await?;
    Ok(Json(resp))
}

async fn submit_labels(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    Json(req): Json<LabelsRequest>,
) -> Result<Json<LabelsResponse>, ApiError> {
    let entry = entry(&store, &id)?;
    let resp = blocking(move || {
        let labels: Vec<(DocId, Decision)> = req.labels.iter().map(|l| (l.doc_id, l.decision)).collect();
        let resp = entry.write(|s| {
            let outcome = s.submit_labels(&labels)?;
            Ok(LabelsResponse {
                stats: s.stats(),
                retrained: outcome.retrained,
                estimate: s.estimate(),
            })
        })?;
        Ok(resp)
    })
    .await?;
    Ok(Json(resp))
}

async fn stats(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
) -> Result<Json<StatsResponse>, ApiError> {
    let snap = entry(&store, &id)?.snapshot();
    Ok(Json(StatsResponse {
        stats: snap.stats.clone(),
        estimate_history: snap.estimate_history.clone(),
    }))
}

async fn export(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let snap = entry(&store, &id)?.snapshot();
    let body = blocking(move || {
        let mut buf = Vec::new();
        write_csv(&snap.corpus, &mut buf)?;
        Ok(buf)
    })
    .await?;
    Ok((
        [
            (header::CONTENT_TYPE, "text/csv; charset=utf-8".to_string()),
            (
                header::CONTENT_DISPOSITION,
                format!("attachment; filename=\"{id}.csv\""),
            ),
        ],
        body,
    ))
}

async fn error_checks(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    Query(q): Query<ErrorCheckQuery>,
) -> Result<Json<ErrorChecksResponse>, ApiError> {
    let snap = entry(&store, &id)?.snapshot();
    let k = q.k.unwrap_or(DEFAULT_ERROR_CHECKS);
    let checks = snap
        .error_checks(k)
        .into_iter()
        .filter_map(|id| {
            let doc = snap.corpus.document(id).ok()?;
            Some(ErrorCheck {
                doc_id: id,
                title: doc.title.clone(),
                label: snap.corpus.decision(id)?,
                score: snap.decisions.as_ref()?[id.index()],
            })
        })
        .collect();
    Ok(Json(ErrorChecksResponse { checks }))
}

async fn continue_screening(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
) -> Result<Json<StatsResponse>, ApiError> {
    let entry = entry(&store, &id)?;
    let snap = blocking(move || {
        entry.continue_screening()?;
        Ok(entry.snapshot())
    })
    .await?;
    Ok(Json(StatsResponse {
        stats: snap.stats.clone(),
        estimate_history: snap.estimate_history.clone(),
    }))
}

async fn metrics(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
) -> Result<Json<MetricsResponse>, ApiError> {
    let entry = entry(&store, &id)?;
    let truth = entry
        .truth()
        .ok_or_else(|| ApiError::not_found(format!("session {id} has no ground truth attached")))?;
    let snap = entry.snapshot();
    let corpus = &snap.corpus;
    let confusion = ConfusionTable::from_outcomes(
        corpus
            .documents()
            .iter()
            .map(|d| (corpus.decision(d.doc_id), truth.is_relevant(d.doc_id))),
    );
    let metrics = compute_tool_metrics(&confusion)?;
    let trace: Vec<(DocId, Decision)> = corpus.history().iter().map(|r| (r.doc_id, r.decision)).collect();
    let curve = recall_cost_curve(&trace, truth)?;
    let found = confusion.tool_yes_truth_yes as f64;
    let relevant = truth.n_relevant();
    Ok(Json(MetricsResponse {
        confusion,
        metrics,
        true_recall: if relevant == 0 { 1.0 } else { found / relevant as f64 },
        cost: corpus.n_labeled() as f64 / corpus.len() as f64,
        curve,
    }))
}
