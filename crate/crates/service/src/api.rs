//! Request parsing, response bodies and handlers.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use synergy_core::countrank::RankError;
use synergy_core::graphstore::GraphCounts;
use synergy_core::pathrank::{precompute, rank_method, PrecomputeReport};
use synergy_core::{MoleculeId, MultilayerGraph, RankMethod, RankedEntry, Variant};
use thiserror::Error;

use crate::cache::CacheKey;
use crate::{AppState, Loaded};

pub const MAX_PAGE_SIZE: usize = 100;
pub const DEFAULT_PAGE_SIZE: usize = 20;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("no snapshot loaded")]
    NotLoaded,
    #[error("unknown molecule '{0}'")]
    UnknownMolecule(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    fn status(&self) -> StatusCode {
        match self {
            ApiError::NotLoaded => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::UnknownMolecule(_) => StatusCode::NOT_FOUND,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            ApiError::NotLoaded => "not_loaded",
            ApiError::UnknownMolecule(_) => "unknown_molecule",
            ApiError::BadRequest(_) => "bad_request",
            ApiError::Internal(_) => "internal",
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.code(),
            message: self.to_string(),
        };
        (self.status(), Json(body)).into_response()
    }
}

impl From<RankError> for ApiError {
    fn from(e: RankError) -> Self {
        ApiError::Internal(e.to_string())
    }
}

/// Validated `/api/search` parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchRequest {
    pub molecule: String,
    pub method: RankMethod,
    pub page: usize,
    pub page_size: usize,
}

impl SearchRequest {
    pub fn from_params(params: &HashMap<String, String>) -> Result<Self, ApiError> {
        let molecule = params
            .get("molecule")
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| ApiError::BadRequest("missing 'molecule'".into()))?
            .to_string();
        let method = params
            .get("method")
            .ok_or_else(|| ApiError::BadRequest("missing 'method'".into()))?
            .parse::<RankMethod>()
            .map_err(|e| ApiError::BadRequest(e.to_string()))?;
        let number = |name: &str, default: usize| -> Result<usize, ApiError> {
            match params.get(name) {
                None => Ok(default),
                Some(v) => v
                    .parse::<usize>()
                    .map_err(|_| ApiError::BadRequest(format!("'{name}' must be a positive integer"))),
            }
        };
        let page = number("page", 1)?;
        if page == 0 {
            return Err(ApiError::BadRequest("'page' starts at 1".into()));
        }
        let page_size = number("page_size", DEFAULT_PAGE_SIZE)?;
        if !(1..=MAX_PAGE_SIZE).contains(&page_size) {
            return Err(ApiError::BadRequest(format!("'page_size' must be in 1..={MAX_PAGE_SIZE}")));
        }
        Ok(Self {
            molecule,
            method,
            page,
            page_size,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryEcho {
    /// Canonical name of the resolved molecule.
    pub molecule: String,
    pub method: RankMethod,
    pub page: usize,
    pub page_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelatedCount {
    pub name: String,
    pub pub_count: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub rank: usize,
    pub author: String,
    pub affiliation: Option<String>,
    pub score: f64,
    pub n_pc: u32,
    pub n_total: u32,
    pub related_molecules: Vec<RelatedCount>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub query: QueryEcho,
    pub total_results: usize,
    pub total_pages: usize,
    pub entries: Vec<SearchEntry>,
}

/// Round to six significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn entry(graph: &MultilayerGraph, rank: usize, e: &RankedEntry) -> Result<SearchEntry, ApiError> {
    let author = graph.author(e.author).map_err(|e| ApiError::Internal(e.to_string()))?;
    let mut related = e
        .contribution
        .per_molecule
        .iter()
        .map(|(&m, &n)| {
            let name = graph
                .molecule(m)
                .map_err(|e| ApiError::Internal(e.to_string()))?
                .canonical_name
                .clone();
            Ok(RelatedCount { name, pub_count: n })
        })
        .collect::<Result<Vec<_>, ApiError>>()?;
    related.sort_by(|a, b| b.pub_count.cmp(&a.pub_count).then_with(|| a.name.cmp(&b.name)));
    Ok(SearchEntry {
        rank,
        author: author.canonical_name.clone(),
        affiliation: author.affiliation.clone(),
        score: round_sig(e.score),
        n_pc: e.contribution.n_pc,
        n_total: e.contribution.n_total,
        related_molecules: related,
    })
}

/// Rank and slice one page. Blocking.
pub fn compute_page(
    loaded: &Loaded,
    molecule: MoleculeId,
    req: &SearchRequest,
    cfg: &synergy_core::PagerankConfig,
) -> Result<SearchResponse, ApiError> {
    let graph = &loaded.graph;
    let (list, _) = rank_method(graph, molecule, req.method, cfg, Some(&loaded.store))?;
    let total = list.len();
    let start = (req.page - 1).saturating_mul(req.page_size);
    let entries = list
        .entries
        .iter()
        .enumerate()
        .skip(start)
        .take(req.page_size)
        .map(|(i, e)| entry(graph, i + 1, e))
        .collect::<Result<Vec<_>, _>>()?;
    let canonical = graph
        .molecule(molecule)
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .canonical_name
        .clone();
    Ok(SearchResponse {
        query: QueryEcho {
            molecule: canonical,
            method: req.method,
            page: req.page,
            page_size: req.page_size,
        },
        total_results: total,
        total_pages: total.div_ceil(req.page_size),
        entries,
    })
}

fn json_bytes(body: Bytes, cache: &'static str, compute_ms: u128) -> Response {
    let mut resp = (StatusCode::OK, body).into_response();
    let h = resp.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    h.insert("x-cache", HeaderValue::from_static(cache));
    h.insert("x-compute-ms", HeaderValue::from(compute_ms as u64));
    resp
}

pub async fn search(
    State(state): State<AppState>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let loaded = state.current().ok_or(ApiError::NotLoaded)?;
    let req = SearchRequest::from_params(&params)?;
    let molecule = loaded
        .graph
        .resolve_molecule(&req.molecule)
        .ok_or_else(|| ApiError::UnknownMolecule(req.molecule.clone()))?;
    let key = CacheKey {
        generation: loaded.generation,
        revision: loaded.graph.revision(),
        molecule,
        method: req.method,
        page: req.page,
        page_size: req.page_size,
    };
    if let Some(body) = state.cache().get(&key) {
        return Ok(json_bytes(body, "HIT", 0));
    }

    let _permit = state.permits().acquire().await.map_err(|e| ApiError::Internal(e.to_string()))?;
    // another request may have filled the entry while we waited
    if let Some(body) = state.cache().get(&key) {
        return Ok(json_bytes(body, "HIT", 0));
    }
    let started = Instant::now();
    let cfg = state.config().pagerank.clone();
    let work = Arc::clone(&loaded);
    let page = tokio::task::spawn_blocking(move || compute_page(&work, molecule, &req, &cfg))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    let body = Bytes::from(serde_json::to_vec(&page).map_err(|e| ApiError::Internal(e.to_string()))?);
    state.cache().insert(key, body.clone());
    Ok(json_bytes(body, "MISS", started.elapsed().as_millis()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoleculeDetail {
    pub name: String,
    pub aliases: Vec<String>,
    pub degree: usize,
    pub related: Vec<String>,
    pub publications: usize,
}

pub async fn molecule(State(state): State<AppState>, Path(name): Path<String>) -> Result<Json<MoleculeDetail>, ApiError> {
    let loaded = state.current().ok_or(ApiError::NotLoaded)?;
    let g = &loaded.graph;
    let m = g.resolve_molecule(&name).ok_or(ApiError::UnknownMolecule(name))?;
    let internal = |e: synergy_core::GraphError| ApiError::Internal(e.to_string());
    let node = g.molecule(m).map_err(internal)?;
    let neighbors = g.interaction_neighbors(m).map_err(internal)?;
    let mut related = neighbors
        .iter()
        .map(|&n| g.molecule(n).map(|x| x.canonical_name.clone()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(internal)?;
    related.sort();
    Ok(Json(MoleculeDetail {
        name: node.canonical_name.clone(),
        aliases: node.aliases.iter().cloned().collect(),
        degree: neighbors.len(),
        related,
        publications: g.publications_mentioning([m].iter()).map_err(internal)?.len(),
    }))
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecomputeRequest {
    pub molecules: Option<Vec<String>>,
    pub variants: Option<Vec<Variant>>,
}

pub async fn admin_precompute(State(state): State<AppState>, body: Bytes) -> Result<Json<PrecomputeReport>, ApiError> {
    let loaded = state.current().ok_or(ApiError::NotLoaded)?;
    let req: PrecomputeRequest = if body.iter().all(u8::is_ascii_whitespace) {
        PrecomputeRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(format!("invalid body: {e}")))?
    };
    let g = &loaded.graph;
    let molecules: BTreeSet<MoleculeId> = match &req.molecules {
        None => g.molecules().iter().map(|m| m.id).collect(),
        Some(names) => names
            .iter()
            .map(|n| {
                g.resolve_molecule(n)
                    .ok_or_else(|| ApiError::BadRequest(format!("unknown molecule '{n}'")))
            })
            .collect::<Result<_, _>>()?,
    };
    let variants = req.variants.unwrap_or_else(|| Variant::BOTH.to_vec());
    let cfg = state.config().pagerank.clone();
    let work = Arc::clone(&loaded);
    let report = tokio::task::spawn_blocking(move || precompute(&work.graph, &molecules, &variants, &cfg, &work.store))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Json(report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub revision: Option<u64>,
    pub counts: Option<GraphCounts>,
}

pub async fn health(State(state): State<AppState>) -> Response {
    match state.current() {
        None => (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(Health {
                status: "not_loaded".into(),
                revision: None,
                counts: None,
            }),
        )
            .into_response(),
        Some(l) => Json(Health {
            status: "ok".into(),
            revision: Some(l.graph.revision()),
            counts: Some(l.graph.counts()),
        })
        .into_response(),
    }
}
