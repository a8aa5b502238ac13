//! HTTP/JSON query service over one loaded bundle.
//!
//! The bundle, its usage statistics and the full layout form an immutable
//! snapshot shared by all requests; `POST /reload` swaps in a new one while
//! in-flight requests finish on the old. Selection, overlay and history are
//! kept per session, keyed by the `x-session-id` header.

pub mod error;
pub mod view;

use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use pednet_core::genotype::{match_genotype, parse_calls, similarity_to_all, HISTOGRAM_BINS};
use pednet_core::io::{export_list_text, load_bundle, sha256_hex, DataBundle, EventKind, SessionHistory};
use pednet_core::layout::compute_layout;
use pednet_core::overlay::class_histogram;
use pednet_core::{search_lines, usage_stats, Layout, LayoutConfig, LineId, PedigreeNet, UsageStats};

pub use error::ApiError;
pub use view::{build_overlay, layout_view, LayoutView, OverlayRequest};

pub const SESSION_HEADER: &str = "x-session-id";
pub const DEFAULT_SESSION: &str = "default";
pub const DEFAULT_LOCAL_DEPTH: u32 = 1;

/// Immutable view of one loaded bundle.
pub struct Snapshot {
    pub bundle: DataBundle,
    pub stats: UsageStats,
    pub layout: Layout,
}

impl Snapshot {
    pub fn new(bundle: DataBundle) -> Result<Self, String> {
        let stats = usage_stats(&bundle.net);
        let layout = compute_layout(&bundle.net, &LayoutConfig::default()).map_err(|e| e.to_string())?;
        Ok(Snapshot { bundle, stats, layout })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selection {
    #[serde(default)]
    pub lines: Vec<LineId>,
    #[serde(default)]
    pub traits: Vec<String>,
}

#[derive(Default)]
struct Session {
    selection: Selection,
    overlay: OverlayRequest,
    history: SessionHistory,
}

pub struct AppState {
    snapshot: RwLock<Arc<Snapshot>>,
    sessions: Mutex<BTreeMap<String, Session>>,
    source: Option<PathBuf>,
}

impl AppState {
    pub fn new(bundle: DataBundle, source: Option<PathBuf>) -> Result<Self, String> {
        Ok(AppState {
            snapshot: RwLock::new(Arc::new(Snapshot::new(bundle)?)),
            sessions: Mutex::new(BTreeMap::new()),
            source,
        })
    }

    /// Loads a bundle directory; reloads read the same directory.
    pub fn load(dir: impl Into<PathBuf>) -> Result<Self, String> {
        let dir = dir.into();
        let bundle = load_bundle(&dir).map_err(|e| e.to_string())?;
        Self::new(bundle, Some(dir))
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    fn with_session<T>(&self, headers: &HeaderMap, f: impl FnOnce(&mut Session) -> T) -> T {
        let id = headers
            .get(SESSION_HEADER)
            .and_then(|v| v.to_str().ok())
            .filter(|s| !s.is_empty())
            .unwrap_or(DEFAULT_SESSION)
            .to_string();
        let mut sessions = self.sessions.lock().expect("session lock");
        f(sessions.entry(id).or_default())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/lines/{id}", get(get_line))
        .route("/lines/{id}/local", get(get_local))
        .route("/layout", get(get_layout))
        .route("/similarity/{id}", get(get_similarity))
        .route("/match-genotype", post(post_match))
        .route("/search", get(get_search))
        .route("/selection", get(get_selection).post(post_selection))
        .route("/history", get(get_history))
        .route("/export", post(post_export))
        .route("/phenotypes", get(get_phenotypes))
        .route("/overlay", get(get_overlay).post(post_overlay))
        .route("/reload", post(post_reload))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "UnknownRoute", "no such route") })
        .with_state(state)
}

/// Binds and serves until the process ends.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    serve_on(listener, state).await
}

/// Serves on an already bound listener, so callers can report bind errors.
pub async fn serve_on(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

type Params = Query<BTreeMap<String, String>>;

fn parse_body<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("MalformedBody", e.to_string()))
}

fn param<T: std::str::FromStr>(params: &BTreeMap<String, String>, name: &str) -> Result<Option<T>, ApiError> {
    params
        .get(name)
        .map(|v| {
            v.parse()
                .map_err(|_| ApiError::bad_request("InvalidParameter", format!("bad value `{v}` for `{name}`")))
        })
        .transpose()
}

fn require_line(net: &PedigreeNet, id: &LineId) -> Result<(), ApiError> {
    if net.contains(id) {
        Ok(())
    } else {
        Err(ApiError::unknown_line(id))
    }
}

async fn get_line(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let snap = state.snapshot();
    let net = &snap.bundle.net;
    let id = LineId::new(id);
    let line = net.line(&id).ok_or_else(|| ApiError::unknown_line(&id))?;
    let idx = net.index_of(&id).expect("known line");
    let parents: Vec<Value> = net
        .parent_relations(idx)
        .iter()
        .map(|&r| {
            let rel = &net.relations()[r];
            json!({"id": rel.parent, "role": rel.role, "cross_type": rel.cross_type})
        })
        .collect();
    let children = net.children_of(&id).expect("known line");
    let usage = snap.stats.get(&id).copied().unwrap_or_default();
    Ok(Json(json!({
        "id": line.id,
        "name": line.name,
        "aliases": line.aliases,
        "attributes": line.attributes,
        "parents": parents,
        "children": children,
        "in_degree": net.parent_relations(idx).len(),
        "out_degree": net.child_relations(idx).len(),
        "usage": usage,
    })))
}

async fn get_local(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Query(params): Params,
) -> Result<Json<LayoutView>, ApiError> {
    let snap = state.snapshot();
    let id = LineId::new(id);
    require_line(&snap.bundle.net, &id)?;
    let up = param(&params, "up")?.unwrap_or(DEFAULT_LOCAL_DEPTH);
    let down = param(&params, "down")?.unwrap_or(DEFAULT_LOCAL_DEPTH);
    let sub = snap
        .bundle
        .net
        .local_subnet(&id, up, down)
        .map_err(|_| ApiError::unknown_line(&id))?;
    let layout: Layout = compute_layout(&sub, &LayoutConfig::default())
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "LayoutFailed", e.to_string()))?;
    let request = state.with_session(&headers, |s| s.overlay.clone());
    let overlay = build_overlay(&snap.bundle, &snap.stats, &request)?;
    Ok(Json(layout_view(&layout, &overlay)))
}

async fn get_layout(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Query(params): Params,
) -> Result<Response, ApiError> {
    let snap = state.snapshot();
    let component = params.get("component").map_or("all", String::as_str).to_string();
    let request = state.with_session(&headers, |s| s.overlay.clone());
    let tag = format!(
        "\"{}\"",
        sha256_hex(
            format!(
                "{}|{}|{}",
                snap.bundle.digest(),
                component,
                serde_json::to_string(&request).expect("serializable")
            )
            .as_bytes()
        )
    );
    if headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v == tag)
    {
        return Ok((StatusCode::NOT_MODIFIED, [(header::ETAG, tag)]).into_response());
    }
    let overlay = build_overlay(&snap.bundle, &snap.stats, &request)?;
    let view = if component == "all" {
        layout_view(&snap.layout, &overlay)
    } else {
        let k: usize = component
            .parse()
            .map_err(|_| ApiError::bad_request("InvalidParameter", "component must be `all` or an index"))?;
        let comps = snap.bundle.net.components();
        let members = comps
            .get(k)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "UnknownComponent", format!("no component {k}")))?;
        let keep: BTreeSet<LineId> = members
            .iter()
            .map(|&i| snap.bundle.net.line_at(i).id.clone())
            .collect();
        let layout: Layout = compute_layout(&snap.bundle.net.induced(&keep), &LayoutConfig::default())
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "LayoutFailed", e.to_string()))?;
        layout_view(&layout, &overlay)
    };
    Ok(([(header::ETAG, tag)], Json(view)).into_response())
}

async fn get_similarity(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Query(params): Params,
) -> Result<Json<Value>, ApiError> {
    let snap = state.snapshot();
    let matrix = snap.bundle.matrix.as_ref().ok_or_else(ApiError::no_genotypes)?;
    let id = LineId::new(id);
    let cutoff: f64 = param(&params, "cutoff")?.unwrap_or(view::DEFAULT_CUTOFF);
    if !(0.0..=1.0).contains(&cutoff) {
        return Err(ApiError::bad_request("InvalidCutoff", format!("cutoff {cutoff} is outside [0, 1]")));
    }
    let profile = similarity_to_all::<f64>(matrix, &id)?;
    let filtered = pednet_core::genotype::filter_by_cutoff(&profile.entries, cutoff);
    state.with_session(&headers, |s| {
        s.history
            .record_event(EventKind::SimilarityQuery, json!({"base": id, "cutoff": cutoff}));
    });
    let histogram: Vec<Value> = (0..HISTOGRAM_BINS)
        .map(|k| {
            json!({
                "lo": k as f64 / HISTOGRAM_BINS as f64,
                "hi": (k + 1) as f64 / HISTOGRAM_BINS as f64,
                "count": profile.histogram[k],
            })
        })
        .collect();
    Ok(Json(json!({
        "base": id,
        "cutoff": cutoff,
        "entries": profile.entries,
        "histogram": histogram,
        "filtered": filtered.iter().map(|(l, s)| json!({"line": l, "score": s})).collect::<Vec<_>>(),
    })))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatchBody {
    List(Vec<String>),
    Object { calls: CallsField },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CallsField {
    List(Vec<String>),
    Text(String),
}

async fn post_match(
    State(state): State<Arc<AppState>>,
    Query(params): Params,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let snap = state.snapshot();
    let matrix = snap.bundle.matrix.as_ref().ok_or_else(ApiError::no_genotypes)?;
    let parsed: MatchBody =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request("MalformedBody", e.to_string()))?;
    let text = match parsed {
        MatchBody::List(v) | MatchBody::Object { calls: CallsField::List(v) } => v.join(" "),
        MatchBody::Object { calls: CallsField::Text(t) } => t,
    };
    let query = parse_calls(&text).map_err(|e| ApiError::bad_request("IllegalCall", e))?;
    let hits = match_genotype::<f64>(matrix, &query)?;
    let limit: usize = param(&params, "limit")?.unwrap_or(hits.len());
    let rows: Vec<Value> = hits
        .iter()
        .take(limit)
        .enumerate()
        .map(|(i, h)| {
            json!({
                "rank": i + 1,
                "line": h.line,
                "score": h.similarity.score,
                "compared": h.similarity.compared,
                "low_confidence": h.low_confidence,
            })
        })
        .collect();
    Ok(Json(json!({"matches": rows})))
}

async fn get_search(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    Query(params): Params,
) -> Result<Json<Value>, ApiError> {
    let snap = state.snapshot();
    let q = params.get("q").cloned().unwrap_or_default();
    let follow: bool = param(&params, "follow")?.unwrap_or(false);
    let hits = search_lines(&snap.bundle.net, &q);
    state.with_session(&headers, |s| {
        s.history
            .record_event(EventKind::Search, json!({"q": q, "hits": hits.len()}));
        if let (true, Some(first)) = (follow, hits.first()) {
            s.selection.lines = vec![first.clone()];
            s.history
                .record_event(EventKind::LineSelected, json!({"lines": [first]}));
        }
    });
    let rows: Vec<Value> = hits
        .iter()
        .map(|id| json!({"id": id, "name": snap.bundle.net.line(id).map(|l| l.name.as_str())}))
        .collect();
    Ok(Json(json!({"hits": rows})))
}

async fn get_selection(State(state): State<Arc<AppState>>, headers: HeaderMap) -> Json<Selection> {
    Json(state.with_session(&headers, |s| s.selection.clone()))
}

async fn post_selection(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<Selection>, ApiError> {
    let snap = state.snapshot();
    let sel: Selection = parse_body(&body)?;
    for id in &sel.lines {
        require_line(&snap.bundle.net, id)?;
    }
    for t in &sel.traits {
        if !snap.bundle.traits.iter().any(|d| &d.name == t) {
            return Err(ApiError::new(StatusCode::NOT_FOUND, "UnknownTrait", format!("unknown trait `{t}`")));
        }
    }
    Ok(Json(state.with_session(&headers, |s| {
        if s.selection.lines != sel.lines {
            s.history
                .record_event(EventKind::LineSelected, json!({"lines": sel.lines}));
        }
        if s.selection.traits != sel.traits {
            s.history
                .record_event(EventKind::PhenotypeSelected, json!({"traits": sel.traits}));
        }
        s.selection = sel.clone();
        sel
    })))
}

async fn get_history(State(state): State<Arc<AppState>>, headers: HeaderMap) -> Json<Value> {
    let events = state.with_session(&headers, |s| s.history.replay().to_vec());
    Json(json!({"events": events}))
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExportBody {
    lines: Option<Vec<LineId>>,
}

async fn post_export(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    let snap = state.snapshot();
    let req: ExportBody = parse_body(&body)?;
    let ids = match req.lines {
        Some(ids) => ids,
        None => state.with_session(&headers, |s| s.selection.lines.clone()),
    };
    let names = ids
        .iter()
        .map(|id| {
            snap.bundle
                .net
                .line(id)
                .map(|l| l.name.clone())
                .ok_or_else(|| ApiError::unknown_line(id))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((
        [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
        export_list_text(&names),
    )
        .into_response())
}

async fn get_phenotypes(State(state): State<Arc<AppState>>) -> Result<Json<Value>, ApiError> {
    let snap = state.snapshot();
    let ids: Vec<LineId> = snap.bundle.net.lines().iter().map(|l| l.id.clone()).collect();
    let table = snap.bundle.phenotypes.clone().unwrap_or_default();
    let traits = snap
        .bundle
        .traits
        .iter()
        .map(|t| {
            let hist = class_histogram(&table, &snap.bundle.traits, &t.name, &ids, Default::default())?;
            Ok(json!({
                "name": t.name,
                "kind": t.kind.to_string(),
                "classes": t.classes,
                "palette": t.palette(),
                "histogram": hist.iter().map(|(c, n)| json!({"class": c, "count": n})).collect::<Vec<_>>(),
            }))
        })
        .collect::<Result<Vec<Value>, ApiError>>()?;
    Ok(Json(json!({"traits": traits})))
}

async fn get_overlay(State(state): State<Arc<AppState>>, headers: HeaderMap) -> Result<Json<Value>, ApiError> {
    let snap = state.snapshot();
    let request = state.with_session(&headers, |s| s.overlay.clone());
    let spec = build_overlay(&snap.bundle, &snap.stats, &request)?;
    Ok(Json(json!({"request": request, "nodes": spec.nodes, "legend": spec.legend})))
}

async fn post_overlay(
    State(state): State<Arc<AppState>>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let snap = state.snapshot();
    let request: OverlayRequest = parse_body(&body)?;
    let spec = build_overlay(&snap.bundle, &snap.stats, &request)?;
    state.with_session(&headers, |s| {
        if !request.traits.is_empty() && s.selection.traits != request.traits {
            s.selection.traits = request.traits.clone();
            s.history
                .record_event(EventKind::PhenotypeSelected, json!({"traits": request.traits}));
        }
        s.overlay = request.clone();
    });
    Ok(Json(json!({"request": request, "nodes": spec.nodes, "legend": spec.legend})))
}

async fn post_reload(State(state): State<Arc<AppState>>) -> Result<Json<Value>, ApiError> {
    let dir = state
        .source
        .clone()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "NoSource", "service was not started from a directory"))?;
    let snap = tokio::task::spawn_blocking(move || {
        let bundle = load_bundle(&dir).map_err(|e| e.to_string())?;
        Snapshot::new(bundle)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "ReloadFailed", e.to_string()))?
    .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "ReloadFailed", e))?;
    let digest = snap.bundle.digest();
    *state.snapshot.write().expect("snapshot lock") = Arc::new(snap);
    state.sessions.lock().expect("session lock").clear();
    Ok(Json(json!({"digest": digest})))
}
