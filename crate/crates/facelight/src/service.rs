//! HTTP service: illumination assessment and shade recommendation.
//!
//! Images arrive either as a raw `image/png` body or as `multipart/form-data`
//! with an `image` part and an optional `mask` part. The model and catalog
//! are loaded once and shared read-only.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequest, Multipart, Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use facelight_core::illum::ClassifierModel;
use facelight_core::shade::{Catalog, DEFAULT_RECOMMEND_THRESHOLD};
use facelight_core::{ImageBuffer, Mask};
use serde::{Deserialize, Serialize};
use tower_http::cors::{Any, CorsLayer};

use crate::api::{self, ApiError};
use crate::formats::{CatalogJson, MODEL_VERSION};

pub const DEFAULT_PORT: u16 = 8080;
const BODY_LIMIT: usize = 32 * 1024 * 1024;

#[derive(Debug, Clone, Default)]
pub struct AppState {
    pub model: Option<Arc<ClassifierModel>>,
    pub catalog: Option<Arc<Catalog>>,
}

impl AppState {
    pub fn new(model: Option<ClassifierModel>, catalog: Option<Catalog>) -> Self {
        AppState {
            model: model.map(Arc::new),
            catalog: catalog.map(Arc::new),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub model_version: Option<u32>,
    pub catalog_loaded: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(ErrorBody { error: self.to_string() })).into_response()
    }
}

/// Router with CORS open to `cors_origin`, or to any origin when `None`.
pub fn router(state: AppState, cors_origin: Option<&str>) -> Result<Router, String> {
    let cors = CorsLayer::new()
        .allow_methods([axum::http::Method::GET, axum::http::Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    let cors = match cors_origin {
        Some(origin) => cors.allow_origin(HeaderValue::from_str(origin).map_err(|e| format!("--cors-origin: {e}"))?),
        None => cors.allow_origin(Any),
    };
    Ok(Router::new()
        .route("/v1/health", get(health))
        .route("/v1/catalog", get(catalog))
        .route("/v1/assess", post(assess))
        .route("/v1/recommend", post(recommend))
        .layer(axum::extract::DefaultBodyLimit::max(BODY_LIMIT))
        .layer(cors)
        .with_state(state))
}

pub async fn serve(state: AppState, addr: SocketAddr, cors_origin: Option<&str>) -> std::io::Result<()> {
    let app = router(state, cors_origin).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, app).await
}

async fn health(State(state): State<AppState>) -> Response {
    let body = HealthResponse {
        status: if state.model.is_some() { "ok" } else { "unavailable" }.into(),
        model_version: state.model.as_ref().map(|_| MODEL_VERSION),
        catalog_loaded: state.catalog.is_some(),
    };
    let status = if state.model.is_some() {
        StatusCode::OK
    } else {
        StatusCode::SERVICE_UNAVAILABLE
    };
    (status, Json(body)).into_response()
}

async fn catalog(State(state): State<AppState>) -> Result<Json<CatalogJson>, ApiError> {
    let catalog = state.catalog.as_ref().ok_or(ApiError::NotLoaded("catalog"))?;
    Ok(Json(CatalogJson::new(catalog)))
}

/// Raw PNG body or multipart `image` + optional `mask`.
async fn read_upload(req: Request) -> Result<(ImageBuffer, Option<Mask>), ApiError> {
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    if !is_multipart {
        let bytes = Bytes::from_request(req, &())
            .await
            .map_err(|e| ApiError::BadRequest(e.body_text()))?;
        return Ok((api::decode_image(&bytes)?, None));
    }
    let mut multipart = Multipart::from_request(req, &())
        .await
        .map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let (mut image, mut mask) = (None, None);
    while let Some(field) = multipart.next_field().await.map_err(|e| ApiError::BadRequest(e.body_text()))? {
        let name = field.name().unwrap_or_default().to_string();
        let data = field.bytes().await.map_err(|e| ApiError::BadRequest(e.body_text()))?;
        match name.as_str() {
            "image" => image = Some(api::decode_image(&data)?),
            "mask" => mask = Some(api::decode_request_mask(&data)?),
            _ => {}
        }
    }
    let image = image.ok_or_else(|| ApiError::BadRequest("multipart body has no image part".into()))?;
    Ok((image, mask))
}

#[derive(Debug, Default, Deserialize)]
struct AssessQuery {
    #[serde(default)]
    debug: bool,
}

async fn assess(State(state): State<AppState>, Query(q): Query<AssessQuery>, req: Request) -> Result<Json<api::AssessResponse>, ApiError> {
    let model = state.model.clone().ok_or(ApiError::NotLoaded("model"))?;
    let (img, mask) = read_upload(req).await?;
    let resp = tokio::task::spawn_blocking(move || {
        let mask = api::resolve_mask(&img, mask)?;
        api::assess(&model, &img, &mask, q.debug)
    })
    .await
    .map_err(|e| ApiError::BadRequest(e.to_string()))??;
    Ok(Json(resp))
}

#[derive(Debug, Deserialize)]
struct RecommendQuery {
    product_id: Option<String>,
    threshold: Option<f64>,
}

async fn recommend(
    State(state): State<AppState>,
    Query(q): Query<RecommendQuery>,
    req: Request,
) -> Result<Json<api::RecommendResponse>, ApiError> {
    let catalog = state.catalog.clone().ok_or(ApiError::NotLoaded("catalog"))?;
    let model = state.model.clone();
    let (img, mask) = read_upload(req).await?;
    let resp = tokio::task::spawn_blocking(move || {
        let mask = api::resolve_mask(&img, mask)?;
        api::recommend_response(
            &catalog,
            model.as_deref(),
            &img,
            &mask,
            q.product_id.as_deref(),
            q.threshold.unwrap_or(DEFAULT_RECOMMEND_THRESHOLD),
        )
    })
    .await
    .map_err(|e| ApiError::BadRequest(e.to_string()))??;
    Ok(Json(resp))
}
