use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::{Multipart, Path, Query, State};
use axum::http::StatusCode;
use axum::Json;
use serde::{Deserialize, Serialize};

use chardiff::discovery::{run_pipeline, shortlist_attributes, DiscoveryConfig, DiscoveryError, Shortlist};
use chardiff::frame::Frame;
use chardiff::snapshot::{parse_type_hints, AttributeMeta};

use crate::error::{ApiError, ApiResult};
use crate::store::{RunRequest, Session};
use crate::views::{partition_views, PartitionView, RunView};
use crate::AppState;

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub key: String,
    pub schema: Vec<AttributeMeta>,
    pub row_count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub key: String,
    pub schema: Vec<AttributeMeta>,
    pub row_count: usize,
    pub runs: Vec<String>,
}

fn frame_for(session: &Session, target: &str) -> ApiResult<Frame> {
    Frame::new(&session.pair, target).map_err(|e| ApiError::snapshot(&e, StatusCode::UNPROCESSABLE_ENTITY))
}

pub async fn create_session(
    State(state): State<Arc<AppState>>,
    mut multipart: Multipart,
) -> ApiResult<Json<SessionCreated>> {
    let mut fields: BTreeMap<String, String> = BTreeMap::new();
    while let Some(field) = multipart.next_field().await.map_err(multipart_error)? {
        let name = field.name().unwrap_or_default().to_string();
        let text = field.text().await.map_err(multipart_error)?;
        if !matches!(name.as_str(), "source" | "target" | "key" | "type_hints") {
            return Err(ApiError::bad_request(
                "UnknownField",
                format!("unexpected form field `{name}`"),
            ));
        }
        fields.insert(name, text);
    }
    let mut take = |name: &str| {
        fields
            .remove(name)
            .ok_or_else(|| ApiError::bad_request("MissingField", format!("form field `{name}` is required")))
    };
    let source = take("source")?;
    let target = take("target")?;
    let key = take("key")?.trim().to_string();
    let hints = match fields.remove("type_hints") {
        Some(text) if !text.trim().is_empty() => {
            parse_type_hints(&text).map_err(|e| ApiError::snapshot(&e, StatusCode::BAD_REQUEST))?
        }
        _ => BTreeMap::new(),
    };
    let store = state.clone();
    let session = tokio::task::spawn_blocking(move || store.store.create(source, target, key, hints))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    log::info!("session {} created with {} rows", session.id, session.pair.len());
    Ok(Json(SessionCreated {
        session_id: session.id.clone(),
        key: session.key.clone(),
        schema: session.pair.schema().to_vec(),
        row_count: session.pair.len(),
    }))
}

fn multipart_error(e: axum::extract::multipart::MultipartError) -> ApiError {
    let status = e.status();
    let code = if status == StatusCode::PAYLOAD_TOO_LARGE {
        "PayloadTooLarge"
    } else {
        "MalformedMultipart"
    };
    ApiError::new(status, code, e.body_text())
}

pub async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionInfo>> {
    let s = state.store.get(&id)?;
    Ok(Json(SessionInfo {
        session_id: s.id.clone(),
        key: s.key.clone(),
        schema: s.pair.schema().to_vec(),
        row_count: s.pair.len(),
        runs: s.run_ids(),
    }))
}

#[derive(Debug, Deserialize)]
pub struct ShortlistQuery {
    pub target: String,
    #[serde(default)]
    pub threshold: Option<f64>,
}

pub async fn shortlist(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<ShortlistQuery>,
) -> ApiResult<Json<Shortlist>> {
    let session = state.store.get(&id)?;
    let frame = frame_for(&session, &q.target)?;
    Ok(Json(shortlist_attributes(&frame, q.threshold.unwrap_or(0.5))?))
}

/// Engine config for a request; omitted pools default to the shortlist's top
/// `c` and `t` attributes.
pub fn config_for(frame: &Frame, req: &RunRequest) -> Result<DiscoveryConfig, DiscoveryError> {
    let mut config = DiscoveryConfig::new(req.target.clone());
    config.c = req.c.unwrap_or(config.c);
    config.t = req.t.unwrap_or(config.t);
    config.alpha = req.alpha.unwrap_or(config.alpha);
    config.k_max = req.k_max.unwrap_or(config.k_max);
    config.top_n = req.top_n.unwrap_or(config.top_n);
    config.correlation_threshold = req.threshold.unwrap_or(config.correlation_threshold);
    if req.cond_attrs.is_none() || req.tran_attrs.is_none() {
        let (cond, tran) = shortlist_attributes(frame, config.correlation_threshold)?.default_pools(config.c, config.t);
        config.cond_pool = cond;
        config.tran_pool = tran;
    }
    if let Some(c) = &req.cond_attrs {
        config.cond_pool = c.clone();
    }
    if let Some(t) = &req.tran_attrs {
        config.tran_pool = t.clone();
    }
    Ok(config)
}

pub async fn create_run(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<RunRequest>,
) -> ApiResult<Json<RunView>> {
    let session = state.store.get(&id)?;
    let frame = frame_for(&session, &req.target)?;
    let config = config_for(&frame, &req)?;
    let count = config.resolve(&frame)?.candidate_count();
    let budget = state.config.candidate_budget;
    if count > budget {
        return Err(DiscoveryError::BudgetExceeded { count, budget }.into());
    }
    let ranked = tokio::task::spawn_blocking(move || run_pipeline(&frame, &config))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    let run = state.store.add_run(&session, req, ranked)?;
    log::info!(
        "run {} on session {}: {} candidates",
        run.id,
        session.id,
        run.ranked.evaluated
    );
    Ok(Json(RunView::new(&run.id, &run.ranked)))
}

pub async fn get_run(
    State(state): State<Arc<AppState>>,
    Path((id, run_id)): Path<(String, String)>,
) -> ApiResult<Json<RunView>> {
    let session = state.store.get(&id)?;
    let run = session
        .run(&run_id)
        .ok_or_else(|| ApiError::not_found("run", &run_id))?;
    Ok(Json(RunView::new(&run.id, &run.ranked)))
}

pub async fn partitions(
    State(state): State<Arc<AppState>>,
    Path((id, run_id, rank)): Path<(String, String, String)>,
) -> ApiResult<Json<Vec<PartitionView>>> {
    let session = state.store.get(&id)?;
    let run = session
        .run(&run_id)
        .ok_or_else(|| ApiError::not_found("run", &run_id))?;
    let summary = rank
        .parse::<usize>()
        .ok()
        .and_then(|r| r.checked_sub(1))
        .and_then(|i| run.ranked.entries.get(i))
        .ok_or_else(|| ApiError::not_found("rank", &rank))?;
    let frame = frame_for(&session, &summary.target)?;
    let views = partition_views(summary, &frame)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string()))?;
    Ok(Json(views))
}
