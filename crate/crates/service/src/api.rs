//! HTTP routes.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use corrduel::similarity::{electrode_similarity, ElectrodeConfig, FieldGrid};
use corrduel::{ArmId, SessionConfig, SimilarityMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::event::{ArmEntry, SessionEvent, SimilaritySource};
use crate::session::{
    Command, CommandResult, Outcome, OutcomeReport, ProposalView, SessionSpec, StateView,
};
use crate::store::SessionStore;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmRequest {
    pub label: String,
    #[serde(default)]
    pub electrode: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub arms: Vec<ArmRequest>,
    #[serde(default)]
    pub similarity: Option<Vec<Vec<f64>>>,
    pub horizon: u64,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateResponse {
    pub session_id: String,
    pub similarity: SimilarityMatrix,
    pub similarity_source: SimilaritySource,
    pub config: SessionConfig,
    pub state: StateView,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeRequest {
    #[serde(default)]
    pub winner: Option<ArmId>,
    #[serde(default)]
    pub tie: bool,
}

impl OutcomeRequest {
    pub fn outcome(&self) -> Result<Outcome> {
        match (self.winner, self.tie) {
            (Some(w), false) => Ok(Outcome::Winner(w)),
            (None, true) => Ok(Outcome::Tie),
            (Some(_), true) => Err(ServiceError::validation(
                "tie",
                "give either a winner or a tie, not both",
            )),
            (None, false) => Err(ServiceError::validation(
                "winner",
                "a winner or `tie: true` is required",
            )),
        }
    }
}

impl CreateRequest {
    /// Validates the request and resolves the similarity source.
    pub fn into_spec(self, default_seed: impl FnOnce() -> u64) -> Result<SessionSpec> {
        let k = self.arms.len();
        if k < 2 {
            return Err(ServiceError::validation(
                "arms",
                format!("need at least 2 arms, got {k}"),
            ));
        }
        if self.horizon == 0 {
            return Err(ServiceError::validation("horizon", "must be at least 1"));
        }
        let mut arms = Vec::with_capacity(k);
        for (i, a) in self.arms.into_iter().enumerate() {
            let electrode = a
                .electrode
                .as_deref()
                .map(|s| s.parse::<ElectrodeConfig>())
                .transpose()
                .map_err(|e| {
                    ServiceError::validation(format!("arms[{i}].electrode"), e.to_string())
                })?;
            arms.push(ArmEntry {
                label: a.label,
                electrode,
            });
        }
        let (similarity, similarity_source) = match self.similarity {
            Some(rows) => {
                if rows.len() != k {
                    return Err(ServiceError::validation(
                        "similarity",
                        format!("expected {k} rows, got {}", rows.len()),
                    ));
                }
                if let Some(i) = rows.iter().position(|r| r.len() != k) {
                    return Err(ServiceError::validation(
                        format!("similarity[{i}]"),
                        format!("expected {k} entries, got {}", rows[i].len()),
                    ));
                }
                (
                    SimilarityMatrix::from_rows(rows).map_err(matrix_error)?,
                    SimilaritySource::Inline,
                )
            }
            None => {
                let mut configs = Vec::with_capacity(k);
                for (i, a) in arms.iter().enumerate() {
                    configs.push(a.electrode.clone().ok_or_else(|| {
                        ServiceError::validation(
                            format!("arms[{i}].electrode"),
                            "required when no similarity matrix is supplied",
                        )
                    })?);
                }
                let m =
                    electrode_similarity(&configs, &FieldGrid::default()).map_err(matrix_error)?;
                (m, SimilaritySource::Electrode)
            }
        };
        let seed = self.seed.unwrap_or_else(default_seed);
        let mut config = SessionConfig::new(k, self.horizon, seed);
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(ServiceError::validation(
                    "delta",
                    format!("must lie in (0, 1), got {d}"),
                ));
            }
            config = config.with_delta(d);
        }
        Ok(SessionSpec {
            arms,
            similarity,
            similarity_source,
            config,
        })
    }
}

fn matrix_error(e: corrduel::Error) -> ServiceError {
    match e {
        corrduel::Error::Similarity { row, col, reason } => {
            ServiceError::validation(format!("similarity[{row}][{col}]"), reason)
        }
        other => ServiceError::validation("similarity", other.to_string()),
    }
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::validation("body", e.body_text()))
}

async fn create_session(
    State(store): State<Arc<SessionStore>>,
    payload: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<CreateResponse>)> {
    let spec = body(payload)?.into_spec(|| store.next_seed())?;
    let session = store.create(spec)?;
    Ok((
        StatusCode::CREATED,
        Json(CreateResponse {
            session_id: session.id().to_string(),
            similarity: session.similarity().clone(),
            similarity_source: session.similarity_source(),
            config: session.engine().state().config,
            state: session.state_view(),
        }),
    ))
}

async fn proposal(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
) -> Result<Json<ProposalView>> {
    match store.execute(&id, Command::Propose)? {
        CommandResult::Proposal(p) => Ok(Json(p)),
        CommandResult::Outcome(_) => {
            Err(ServiceError::Internal("propose returned an outcome".into()))
        }
    }
}

async fn outcome(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    payload: Result<Json<OutcomeRequest>, JsonRejection>,
) -> Result<Json<OutcomeReport>> {
    let outcome = body(payload)?.outcome()?;
    match store.execute(&id, Command::Report(outcome))? {
        CommandResult::Outcome(r) => Ok(Json(*r)),
        CommandResult::Proposal(_) => {
            Err(ServiceError::Internal("report returned a proposal".into()))
        }
    }
}

async fn state(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
) -> Result<Json<StateView>> {
    store.read(&id, |s| s.state_view()).map(Json)
}

async fn events(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
) -> Result<Json<Vec<SessionEvent>>> {
    store.read(&id, |s| s.events().to_vec()).map(Json)
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/proposal", get(proposal))
        .route("/sessions/{id}/outcome", post(outcome))
        .route("/sessions/{id}/state", get(state))
        .route("/sessions/{id}/events", get(events))
        .with_state(store)
}
