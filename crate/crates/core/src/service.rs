//! Read-only HTTP API over a built dataset.
//!
//! | route | response |
//! |---|---|
//! | `GET /api/pairs` | JSON `[{id, width, height}]` |
//! | `GET /api/enhance?pair&s&method=retinex\|alpha\|model` | RGB PNG |
//! | `GET /api/weightmap?pair&s` | grayscale PNG |
//! | `GET /api/edgediff?pair&s` | grayscale PNG |
//!
//! Everything else falls through to the static UI directory, if one is set.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::Error;
use crate::flow::{sample, VelocityNet};
use crate::image::{linear_to_srgb, ImageBuffer};
use crate::io::{encode_png_bytes, quantize8, BitDepth};
use crate::pipeline::{Dataset, ManifestRecord};
use crate::retinex::{alpha_blend, RetinexPair};
use crate::weights::{edge_diff, read_weight_png, weight_map_for_pair};

/// Sampler settings used for `method=model`.
pub const MODEL_STEPS: usize = 20;
pub const MODEL_SEED: u64 = 0;
/// Display gain applied to edge-difference maps before 8-bit encoding.
pub const EDGE_DIFF_GAIN: f32 = 4.0;

pub struct ServiceState {
    pub dataset: Dataset,
    pub model: Option<VelocityNet>,
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug)]
enum ApiError {
    BadRequest(String),
    NotFound(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, msg) = match self {
            Self::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            Self::NotFound(m) => (StatusCode::NOT_FOUND, m),
            Self::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (status, Json(serde_json::json!({ "error": msg }))).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::Precondition(_) | Error::Config(_) | Error::Range { .. } => Self::BadRequest(e.to_string()),
            other => Self::Internal(other.to_string()),
        }
    }
}

#[derive(Serialize)]
struct PairInfo {
    id: String,
    width: usize,
    height: usize,
}

#[derive(Deserialize)]
struct StrengthQuery {
    pair: String,
    s: f64,
    method: Option<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum Method {
    Retinex,
    Alpha,
    Model,
}

impl StrengthQuery {
    fn strength(&self) -> Result<f64, ApiError> {
        if self.s.is_finite() && (0.0..=1.0).contains(&self.s) {
            Ok(self.s)
        } else {
            Err(ApiError::BadRequest(format!("s must lie in [0, 1], got {}", self.s)))
        }
    }

    fn method(&self) -> Result<Method, ApiError> {
        match self.method.as_deref() {
            None | Some("retinex") => Ok(Method::Retinex),
            Some("alpha") => Ok(Method::Alpha),
            Some("model") => Ok(Method::Model),
            Some(other) => Err(ApiError::BadRequest(format!("unknown method {other:?}"))),
        }
    }
}

pub fn router(state: Arc<ServiceState>) -> Router {
    let api = Router::new()
        .route("/api/pairs", get(pairs))
        .route("/api/enhance", get(enhance))
        .route("/api/weightmap", get(weightmap))
        .route("/api/edgediff", get(edgediff));
    let app = match &state.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(placeholder_index)),
    };
    app.with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(state: ServiceState, addr: SocketAddr) -> crate::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Error::Io {
        path: PathBuf::from(addr.to_string()),
        source: e,
    })?;
    log::info!("listening on http://{}", listener.local_addr().unwrap_or(addr));
    axum::serve(listener, router(Arc::new(state)))
        .await
        .map_err(|e| Error::Io {
            path: PathBuf::from(addr.to_string()),
            source: e,
        })
}

async fn placeholder_index() -> Html<&'static str> {
    Html("<!doctype html><title>lumaflow</title><p>API: /api/pairs, /api/enhance, /api/weightmap, /api/edgediff</p>")
}

async fn pairs(State(state): State<Arc<ServiceState>>) -> Json<Vec<PairInfo>> {
    Json(
        state
            .dataset
            .manifest
            .accepted()
            .map(|r| PairInfo {
                id: r.pair.pair_id.clone(),
                width: r.pair.width,
                height: r.pair.height,
            })
            .collect(),
    )
}

fn png_response(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

fn lookup<'a>(state: &'a ServiceState, pair: &str) -> Result<&'a ManifestRecord, ApiError> {
    state
        .dataset
        .record(pair)
        .ok_or_else(|| ApiError::NotFound(format!("unknown pair {pair:?}")))
}

/// Runs CPU-bound request work off the async executor.
async fn blocking<F>(f: F) -> Result<Response, ApiError>
where
    F: FnOnce() -> Result<Vec<u8>, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map(png_response)
}

fn retinex_target(state: &ServiceState, i0: &ImageBuffer, i1: &ImageBuffer, s: f64) -> crate::Result<ImageBuffer> {
    match s {
        0.0 => Ok(i0.clone()),
        1.0 => Ok(i1.clone()),
        _ => RetinexPair::new(i0, i1, &state.dataset.manifest.parameters.bilateral)?.at(s),
    }
}

async fn enhance(State(state): State<Arc<ServiceState>>, Query(q): Query<StrengthQuery>) -> Result<Response, ApiError> {
    let s = q.strength()?;
    let method = q.method()?;
    lookup(&state, &q.pair)?;
    if method == Method::Model && state.model.is_none() {
        return Err(ApiError::NotFound("no model loaded".into()));
    }
    blocking(move || {
        let record = lookup(&state, &q.pair)?;
        let (i0, i1) = state.dataset.load_endpoints(record)?;
        let out = match method {
            Method::Retinex => retinex_target(&state, &i0, &i1, s)?,
            Method::Alpha => match s {
                0.0 => i0,
                1.0 => i1,
                _ => alpha_blend(&i0, &i1, s)?,
            },
            Method::Model => {
                let net = state.model.as_ref().expect("checked above");
                linear_to_srgb(&sample(net, &i0, s, MODEL_STEPS, MODEL_SEED)?)?
            }
        };
        Ok(encode_png_bytes(&out, BitDepth::Eight))
    })
    .await
}

async fn weightmap(
    State(state): State<Arc<ServiceState>>,
    Query(q): Query<StrengthQuery>,
) -> Result<Response, ApiError> {
    let s = q.strength()?;
    lookup(&state, &q.pair)?;
    blocking(move || {
        let record = lookup(&state, &q.pair)?;
        let params = &state.dataset.manifest.parameters;
        let cached = record
            .entries
            .iter()
            .find(|e| e.strength == s)
            .and_then(|e| e.weight_map.as_ref());
        let w = match cached {
            Some(rel) => read_weight_png(state.dataset.root.join(rel), params.mask.w_min)?,
            None => {
                let (i0, i1) = state.dataset.load_endpoints(record)?;
                let is = quantize8(&retinex_target(&state, &i0, &i1, s)?);
                weight_map_for_pair(&i0, &is, &params.mask)?
            }
        };
        Ok(encode_png_bytes(&w.map().to_image()?, BitDepth::Eight))
    })
    .await
}

async fn edgediff(
    State(state): State<Arc<ServiceState>>,
    Query(q): Query<StrengthQuery>,
) -> Result<Response, ApiError> {
    let s = q.strength()?;
    lookup(&state, &q.pair)?;
    blocking(move || {
        let record = lookup(&state, &q.pair)?;
        let (i0, i1) = state.dataset.load_endpoints(record)?;
        let is = retinex_target(&state, &i0, &i1, s)?;
        let diff = edge_diff(&is, &i0, &state.dataset.manifest.parameters.mask.structure)?;
        let img = diff.map().to_image()?.map_values(|v| (v * EDGE_DIFF_GAIN).min(1.0))?;
        Ok(encode_png_bytes(&img, BitDepth::Eight))
    })
    .await
}
