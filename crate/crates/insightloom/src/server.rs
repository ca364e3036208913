//! HTTP JSON API over an immutable bundle, with per-session story state.

use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use insightloom_core::insight::{Insight, InsightId};
use insightloom_core::llm::{
    generate_summary, verify_grounding, ChatBackend, GroundingReport, LlmParams, RetryPolicy, RunMode,
};
use insightloom_core::narrative::{build_prompt, concat_baseline, order_for_reading, PromptOptions};
use insightloom_core::network::{
    cluster_grid, focus_order, gatekeeper_graph, link_matrix, parse_kinds, InsightNetwork, LinkCategory, LinkKind,
};
use insightloom_core::scoring::priorities;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bundle::{Bundle, BundleSummary, NetworkExport};
use crate::story::{story_component, StoryComponent};

const INDEX_HTML: &str = include_str!("../static/index.html");

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Default)]
struct Session {
    selected: Vec<InsightId>,
}

/// Session story state. The summarization lock is separate from the
/// selection lock so selections stay responsive during a slow call.
#[derive(Default)]
struct SessionSlot {
    state: tokio::sync::Mutex<Session>,
    summarizing: tokio::sync::Mutex<()>,
}

pub struct AppState {
    bundle: Bundle,
    net: InsightNetwork,
    sessions: Mutex<BTreeMap<String, Arc<SessionSlot>>>,
    next_session: AtomicU64,
    backend: Arc<dyn ChatBackend>,
    params: LlmParams,
    retry: RetryPolicy,
    summarize_lock: tokio::sync::Mutex<()>,
}

impl AppState {
    pub fn new(bundle: Bundle, backend: Arc<dyn ChatBackend>, params: LlmParams, retry: RetryPolicy) -> AppState {
        let net = bundle.network.to_network(&bundle.insights);
        AppState {
            bundle,
            net,
            sessions: Mutex::default(),
            next_session: AtomicU64::new(1),
            backend,
            params,
            retry,
            summarize_lock: tokio::sync::Mutex::new(()),
        }
    }

    fn insight(&self, id: &InsightId) -> Option<&Insight> {
        self.bundle.insight(id)
    }

    fn session(&self, id: &str) -> ApiResult<Arc<SessionSlot>> {
        self.sessions
            .lock()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session '{id}'")))
    }

    fn parse_id(&self, raw: &str) -> ApiResult<InsightId> {
        let id = InsightId::parse(raw).map_err(|e| ApiError::not_found(e.to_string()))?;
        if self.insight(&id).is_none() {
            return Err(ApiError::not_found(format!("unknown insight '{raw}'")));
        }
        Ok(id)
    }

    fn story(&self, selected: &[InsightId]) -> String {
        concat_baseline(selected, &self.bundle.insights)
    }
}

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/api/dashboard", get(dashboard))
        .route("/api/insights", get(insights))
        .route("/api/insights/{id}", get(insight_by_id))
        .route("/api/insights/{id}/story", get(insight_story))
        .route("/api/network", get(network))
        .route("/api/gatekeepers", get(gatekeepers))
        .route("/api/matrix", get(matrix))
        .route("/api/clusters", get(clusters))
        .route("/api/scores", get(scores))
        .route("/api/selection", get(selection))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/select", post(select))
        .route("/api/sessions/{id}/select/{insight_id}", delete(deselect))
        .route("/api/summarize", post(summarize))
        .with_state(state)
}

/// Binds `port` on localhost and serves until the process stops.
pub async fn serve(state: AppState, port: u16) -> Result<(), ServeError> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => ServeError::PortInUse(port),
        _ => ServeError::Io(e),
    })?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state))).await?;
    Ok(())
}

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

async fn dashboard(State(s): State<Shared>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], s.bundle.spec.to_json()).into_response()
}

async fn insights(State(s): State<Shared>) -> Json<Vec<Insight>> {
    Json(s.bundle.insights.clone())
}

async fn insight_by_id(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Insight>> {
    let id = s.parse_id(&id)?;
    Ok(Json(s.insight(&id).expect("checked").clone()))
}

async fn insight_story(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<StoryComponent>> {
    let id = s.parse_id(&id)?;
    component(&s, &id).map(Json)
}

fn component(s: &AppState, id: &InsightId) -> ApiResult<StoryComponent> {
    let n = s.insight(id).expect("caller checked id");
    story_component(n, &s.bundle.spec).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
}

#[derive(Debug, Deserialize)]
struct KindsQuery {
    kinds: Option<String>,
    focus: Option<String>,
}

/// Absent means every enabled kind; an empty list means none.
fn kinds_filter(s: &AppState, kinds: Option<&str>) -> ApiResult<BTreeSet<LinkKind>> {
    match kinds {
        None => Ok(s.net.enabled_kinds.clone()),
        Some(list) => parse_kinds(list).map_err(|e| ApiError::bad_request(e.to_string())),
    }
}

async fn network(State(s): State<Shared>, Query(q): Query<KindsQuery>) -> ApiResult<Json<NetworkExport>> {
    let kinds = kinds_filter(&s, q.kinds.as_deref())?;
    let mut export = s.bundle.network.clone();
    export.links.retain(|l| kinds.contains(&l.kind));
    Ok(Json(export))
}

#[derive(Debug, Deserialize)]
struct GatekeeperQuery {
    categories: Option<String>,
}

async fn gatekeepers(State(s): State<Shared>, Query(q): Query<GatekeeperQuery>) -> ApiResult<Response> {
    let categories: BTreeSet<LinkCategory> = match q.categories.as_deref() {
        None => LinkCategory::ALL.into_iter().collect(),
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .map(|c| {
                LinkCategory::ALL
                    .into_iter()
                    .find(|k| k.name() == c)
                    .ok_or_else(|| ApiError::bad_request(format!("unknown link category '{c}'")))
            })
            .collect::<ApiResult<_>>()?,
    };
    Ok(Json(gatekeeper_graph(&s.net, &categories)).into_response())
}

async fn matrix(State(s): State<Shared>, Query(q): Query<KindsQuery>) -> ApiResult<Response> {
    let kinds = kinds_filter(&s, q.kinds.as_deref())?;
    let order = match q.focus.as_deref() {
        None => None,
        Some(list) => {
            let ids = list
                .split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(|x| s.parse_id(x))
                .collect::<ApiResult<Vec<_>>>()?;
            Some(focus_order(&s.net, &ids, &priorities(&s.bundle.scores.cards), &kinds))
        }
    };
    Ok(Json(link_matrix(&s.net, &kinds, order.as_deref())).into_response())
}

#[derive(Debug, Deserialize)]
struct ClusterQuery {
    row: Option<String>,
    col: Option<String>,
}

fn axis_kinds(list: Option<&str>) -> ApiResult<Vec<LinkKind>> {
    list.unwrap_or("")
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|e: String| ApiError::bad_request(e)))
        .collect()
}

async fn clusters(State(s): State<Shared>, Query(q): Query<ClusterQuery>) -> ApiResult<Response> {
    let row = axis_kinds(q.row.as_deref())?;
    let col = axis_kinds(q.col.as_deref())?;
    let grid = cluster_grid(&s.bundle.insights, &row, &col, s.net.date_match)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(Json(grid).into_response())
}

async fn scores(State(s): State<Shared>) -> Response {
    Json(&s.bundle.scores).into_response()
}

async fn selection(State(s): State<Shared>) -> Response {
    let b = &s.bundle;
    Json(json!({
        "scoreOrder": b.selection.score_order,
        "readingOrder": b.selection.reading_order,
        "minTarget": b.selection.min_target,
        "maxTarget": b.selection.max_target,
        "baseline": b.baseline,
        "prompt": b.prompt.text,
        "summary": b.summary,
        "grounding": b.grounding,
    }))
    .into_response()
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct SessionView {
    session_id: String,
    selected: Vec<InsightId>,
    story: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    component: Option<StoryComponent>,
}

fn view(s: &AppState, id: &str, session: &Session, component: Option<StoryComponent>) -> SessionView {
    SessionView {
        session_id: id.to_string(),
        selected: session.selected.clone(),
        story: s.story(&session.selected),
        component,
    }
}

async fn create_session(State(s): State<Shared>) -> (StatusCode, Json<SessionView>) {
    let n = s.next_session.fetch_add(1, Ordering::SeqCst);
    let id = format!("s{n}");
    s.sessions
        .lock()
        .expect("session table lock")
        .insert(id.clone(), Arc::default());
    (StatusCode::CREATED, Json(view(&s, &id, &Session::default(), None)))
}

async fn get_session(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let slot = s.session(&id)?;
    let session = slot.state.lock().await;
    Ok(Json(view(&s, &id, &session, None)))
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct SelectBody {
    insight_id: String,
}

async fn select(State(s): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<SessionView>> {
    let req: SelectBody = parse_body(&body)?;
    let slot = s.session(&id)?;
    let insight = s.parse_id(&req.insight_id)?;
    let mut session = slot.state.lock().await;
    if session.selected.contains(&insight) {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            format!("insight '{insight}' is already in the story"),
        ));
    }
    let comp = component(&s, &insight)?;
    session.selected.push(insight);
    Ok(Json(view(&s, &id, &session, Some(comp))))
}

async fn deselect(
    State(s): State<Shared>,
    Path((id, insight_id)): Path<(String, String)>,
) -> ApiResult<Json<SessionView>> {
    let slot = s.session(&id)?;
    let insight = s.parse_id(&insight_id)?;
    let mut session = slot.state.lock().await;
    let Some(pos) = session.selected.iter().position(|x| x == &insight) else {
        return Err(ApiError::not_found(format!(
            "insight '{insight}' is not in session '{id}'"
        )));
    };
    session.selected.remove(pos);
    Ok(Json(view(&s, &id, &session, None)))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
struct SummarizeBody {
    session_id: Option<String>,
    insight_ids: Option<Vec<String>>,
    include_titles: bool,
    dry_run: bool,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct SummarizeResponse {
    prompt: String,
    summary: Option<BundleSummary>,
    grounding: Option<GroundingReport>,
    baseline: String,
}

/// Summarizes a session's selection, an explicit ID list or the bundle's
/// own selection. One call runs at a time per session and one across the
/// service for session-less requests.
async fn summarize(State(s): State<Shared>, body: Bytes) -> ApiResult<Json<SummarizeResponse>> {
    let req: SummarizeBody = if body.iter().all(u8::is_ascii_whitespace) {
        SummarizeBody::default()
    } else {
        parse_body(&body)?
    };
    let slot = req.session_id.as_deref().map(|id| s.session(id)).transpose()?;
    let ids: Vec<InsightId> = match (&req.insight_ids, &slot) {
        (Some(raw), _) => raw.iter().map(|x| s.parse_id(x)).collect::<ApiResult<_>>()?,
        (None, Some(slot)) => slot.state.lock().await.selected.clone(),
        (None, None) => s.bundle.selection.reading_order.clone(),
    };
    if ids.is_empty() {
        return Err(ApiError::bad_request("nothing selected to summarize"));
    }
    let _guard = match &slot {
        Some(slot) => slot.summarizing.try_lock(),
        None => s.summarize_lock.try_lock(),
    }
    .map_err(|_| ApiError::new(StatusCode::CONFLICT, "a summarization is already in flight"))?;

    let order = order_for_reading(&ids, &s.bundle.insights);
    let opts = PromptOptions {
        include_titles: req.include_titles,
        ..Default::default()
    };
    let prompt = build_prompt(&order, &s.bundle.insights, &s.bundle.spec, &opts);
    let baseline = concat_baseline(&order, &s.bundle.insights);
    if req.dry_run {
        return Ok(Json(SummarizeResponse {
            prompt: prompt.text(),
            summary: None,
            grounding: None,
            baseline,
        }));
    }
    let params = LlmParams {
        max_tokens: prompt.token_budget.max(1),
        ..s.params.clone()
    };
    let backend = s.backend.clone();
    let retry = s.retry;
    let doc = prompt.clone();
    let result =
        tokio::task::spawn_blocking(move || generate_summary(&doc, &params, backend.as_ref(), RunMode::Live, retry))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
            .map_err(|e| ApiError::new(StatusCode::BAD_GATEWAY, e.to_string()))?;
    let selected: Vec<Insight> = order.iter().filter_map(|id| s.insight(id).cloned()).collect();
    let grounding = verify_grounding(&result.summary_text, &selected);
    Ok(Json(SummarizeResponse {
        prompt: prompt.text(),
        summary: Some(BundleSummary::from(&result)),
        grounding: Some(grounding),
        baseline,
    }))
}
