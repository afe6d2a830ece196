use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::Json;
use serde::{Deserialize, Serialize};

use tilexplore_core::ingestion::LoadReport;
use tilexplore_core::projection::most_informative_directions;
use tilexplore_core::request::{HypothesisSpec, Levels, RowSpec, SelectionSpec};
use tilexplore_core::selection::{crosstab, AttributeReport, Crosstab, PointSelection, DEFAULT_TAU};
use tilexplore_core::session::{
    DatasetSummary, GainTable, HypothesisSummary, NamedDirection, PairSpec, PcpPayload, SessionDocument, ViewState,
};
use tilexplore_core::{Error, Session, Tile};

use crate::error::{ApiError, ApiResult};
use crate::store::{CreateSession, Entry, Store};

pub type AppState = Arc<Store>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiSession {
    pub id: String,
    pub seed: u64,
    pub floor: f64,
    pub dataset: DatasetSummary,
    /// Top gain of the current view; `None` without a hypothesis.
    pub gain: Option<f64>,
    pub degenerate: Option<bool>,
    pub hypothesis: Option<HypothesisSummary>,
    pub tile_count: usize,
    /// Rows dropped while loading; only present on creation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingestion: Option<LoadReport>,
}

impl ApiSession {
    pub fn of(s: &Session) -> ApiResult<Self> {
        let (gain, degenerate) = match s.covariances() {
            Ok(pair) => match most_informative_directions(&pair, 1, s.floor()) {
                Ok(p) => (Some(p.top_gain()), Some(p.degenerate)),
                Err(Error::DegenerateCovariance(_) | Error::DegenerateDirection(_)) => (None, Some(true)),
                Err(e) => return Err(e.into()),
            },
            Err(Error::NoHypothesis) => (None, None),
            Err(e) => return Err(e.into()),
        };
        Ok(ApiSession {
            id: s.id().to_string(),
            seed: s.seed(),
            floor: s.floor(),
            dataset: s.summary(),
            gain,
            degenerate,
            hypothesis: s.hypothesis_summary(),
            tile_count: s.tile_count(),
            ingestion: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileCreated {
    pub tile: Tile,
    pub report: AttributeReport,
    pub tile_count: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct ViewQuery {
    #[serde(default)]
    pub samples: usize,
}

/// Row selection in a query string: `rows=0,4,7` (0-based) or `rows=all`,
/// or `where=Region:East,Type:Rural` over side columns.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct RowsQuery {
    pub rows: Option<String>,
    #[serde(rename = "where")]
    pub filter: Option<String>,
    pub tau: Option<f64>,
    pub col: Option<String>,
}

impl RowsQuery {
    fn spec(&self) -> ApiResult<RowSpec> {
        match (self.rows.as_deref().map(str::trim), self.filter.as_deref()) {
            (Some(_), Some(_)) => Err(ApiError::unprocessable("give either `rows` or `where`, not both")),
            (Some("all"), None) => Ok(RowSpec::Keyword("all".into())),
            (Some(text), None) => {
                let rows = text
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| ApiError::unprocessable(format!("rows: {e}")))?;
                if rows.is_empty() {
                    return Err(ApiError::unprocessable("`rows` is empty"));
                }
                Ok(RowSpec::Indices(rows))
            }
            (None, Some(filter)) => {
                let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
                for part in filter.split(',').filter(|p| !p.is_empty()) {
                    let (col, level) = part
                        .split_once(':')
                        .ok_or_else(|| ApiError::unprocessable(format!("`{part}` is not column:level")))?;
                    map.entry(col.to_string()).or_default().push(level.to_string());
                }
                let filter = map.into_iter().map(|(k, v)| (k, Levels::Many(v))).collect();
                Ok(RowSpec::Where { filter })
            }
            (None, None) => Err(ApiError::unprocessable("missing `rows` or `where`")),
        }
    }

    fn selection(&self, s: &Session) -> ApiResult<PointSelection> {
        let rows = self.spec()?.resolve(s.data())?;
        Ok(PointSelection::new(rows, "query")?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApiPair {
    pub name: String,
    /// Tiles replacing the session's own; `None` keeps the session's.
    #[serde(default)]
    pub tiles: Option<Vec<Tile>>,
    #[serde(default)]
    pub hypothesis: HypothesisSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainsRequest {
    pub pairs: Vec<ApiPair>,
    #[serde(default)]
    pub external: Vec<NamedDirection>,
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

fn read<T>(entry: &Entry, f: impl FnOnce(&Session) -> ApiResult<T>) -> ApiResult<T> {
    f(&entry.session.read().unwrap())
}

/// Runs a mutation under the session's write lock, then persists it.
fn write<T>(store: &Store, entry: &Entry, f: impl FnOnce(&mut Session) -> ApiResult<T>) -> ApiResult<T> {
    let out = f(&mut entry.session.write().unwrap())?;
    store.persist(entry)?;
    Ok(out)
}

pub async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

pub async fn list_sessions(State(store): State<AppState>) -> Json<Vec<String>> {
    Json(store.ids())
}

pub async fn create_session(
    State(store): State<AppState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<ApiSession>)> {
    let Json(req) = body.map_err(|r| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", r.body_text()))?;
    blocking(move || {
        let (id, report) = store.create(req)?;
        let entry = store.get(&id)?;
        let mut api = read(&entry, ApiSession::of)?;
        api.ingestion = report;
        Ok((StatusCode::CREATED, Json(api)))
    })
    .await
}

pub async fn get_session(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ApiSession>> {
    blocking(move || read(&*store.get(&id)?, ApiSession::of).map(Json)).await
}

pub async fn delete_session(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    store.remove(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

pub async fn put_hypothesis(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<HypothesisSpec>, JsonRejection>,
) -> ApiResult<Json<ApiSession>> {
    let entry = store.get(&id)?;
    let Json(spec) = body?;
    blocking(move || {
        write(&store, &entry, |s| {
            let h = spec.resolve(s.data())?;
            s.set_hypothesis(h)?;
            ApiSession::of(s)
        })
        .map(Json)
    })
    .await
}

/// Upper bound on sample overlays per side in one view request.
pub const MAX_SAMPLES: usize = 64;

pub async fn get_view(
    State(store): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<ViewQuery>, QueryRejection>,
) -> ApiResult<Json<ViewState>> {
    let entry = store.get(&id)?;
    let Query(q) = query?;
    if q.samples > MAX_SAMPLES {
        return Err(ApiError::unprocessable(format!("samples must be at most {MAX_SAMPLES}")));
    }
    blocking(move || read(&entry, |s| Ok(s.compute_view(q.samples)?)).map(Json)).await
}

pub async fn post_tile(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<SelectionSpec>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<TileCreated>)> {
    let entry = store.get(&id)?;
    let Json(spec) = body?;
    blocking(move || {
        write(&store, &entry, |s| {
            let rows = spec.rows.resolve(s.data())?;
            let sel = PointSelection::new(rows, spec.label.clone().unwrap_or_else(|| "api".into()))?;
            let (tile, report) = s.add_tile_from_selection(&sel, spec.tau.unwrap_or(DEFAULT_TAU))?;
            Ok((StatusCode::CREATED, Json(TileCreated { tile, report, tile_count: s.tile_count() })))
        })
    })
    .await
}

pub async fn get_pcp(
    State(store): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<RowsQuery>, QueryRejection>,
) -> ApiResult<Json<PcpPayload>> {
    let entry = store.get(&id)?;
    let Query(q) = query?;
    blocking(move || read(&entry, |s| Ok(s.pcp(&q.selection(s)?, q.tau.unwrap_or(DEFAULT_TAU))?)).map(Json)).await
}

pub async fn get_crosstab(
    State(store): State<AppState>,
    Path(id): Path<String>,
    query: Result<Query<RowsQuery>, QueryRejection>,
) -> ApiResult<Json<Crosstab>> {
    let entry = store.get(&id)?;
    let Query(q) = query?;
    let col = q.col.clone().ok_or_else(|| ApiError::unprocessable("missing `col`"))?;
    blocking(move || read(&entry, |s| Ok(crosstab(s.data(), &col, &q.selection(s)?)?)).map(Json)).await
}

pub async fn post_gains(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<GainsRequest>, JsonRejection>,
) -> ApiResult<Json<GainTable>> {
    let entry = store.get(&id)?;
    let Json(req) = body?;
    blocking(move || {
        read(&entry, |s| {
            let pairs = req
                .pairs
                .iter()
                .map(|p| {
                    Ok(PairSpec {
                        name: p.name.clone(),
                        user_tiles: p.tiles.clone(),
                        hypothesis: p.hypothesis.resolve(s.data())?,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(s.gain_matrix(&pairs, &req.external)?)
        })
        .map(Json)
    })
    .await
}

pub async fn export(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionDocument>> {
    let entry = store.get(&id)?;
    let data_ref = serde_json::to_string(&entry.source).ok();
    read(&entry, |s| Ok(Json(s.to_document(data_ref))))
}

pub async fn ui_placeholder() -> axum::response::Html<&'static str> {
    axum::response::Html(
        "<!doctype html><title>explore</title><p>No UI bundle configured. Start the service with <code>--ui-dir</code>.</p>",
    )
}
