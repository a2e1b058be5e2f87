//! Request handling shared by the HTTP service and the CLI, so both produce
//! identical responses for identical inputs.

use facelight_core::illum::{extract_features, predict, ClassifierModel};
use facelight_core::relight::Label;
use facelight_core::shade::{estimate_skin_tone, recommend, Catalog, REPORT_THRESHOLDS};
use facelight_core::{DeltaE, ImageBuffer, Lab, Mask, Rgb8};
use serde::{Deserialize, Serialize};

use crate::io::{decode_mask, decode_png};

/// Diameter of the default circular mask relative to the shorter side.
pub const DEFAULT_MASK_FRACTION: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApiError {
    #[error("undecodable image: {0}")]
    BadImage(String),
    #[error("unusable mask: {0}")]
    BadMask(String),
    #[error("{0} not loaded")]
    NotLoaded(&'static str),
    #[error("unknown product {0}")]
    UnknownProduct(String),
    #[error("{0}")]
    BadRequest(String),
}

impl ApiError {
    pub fn status(&self) -> u16 {
        match self {
            ApiError::BadImage(_) | ApiError::BadRequest(_) => 400,
            ApiError::BadMask(_) => 422,
            ApiError::NotLoaded(_) => 503,
            ApiError::UnknownProduct(_) => 404,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessResponse {
    pub label: Label,
    pub probability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedTone {
    pub rgb: Rgb8,
    pub lab: Lab,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchJson {
    pub product_id: String,
    pub shade_id: String,
    pub name: String,
    pub color: Rgb8,
    pub distance: f64,
    /// Distance below 2.
    pub very_close: bool,
    /// Distance below 5.
    pub similar: bool,
    pub within_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendResponse {
    pub estimated_skin_tone: EstimatedTone,
    pub verdict: Option<AssessResponse>,
    pub threshold: f64,
    pub matches: Vec<MatchJson>,
}

pub fn decode_image(bytes: &[u8]) -> Result<ImageBuffer, ApiError> {
    decode_png(bytes).map_err(|e| ApiError::BadImage(e.to_string()))
}

pub fn decode_request_mask(bytes: &[u8]) -> Result<Mask, ApiError> {
    decode_mask(bytes).map_err(|e| ApiError::BadMask(e.to_string()))
}

/// The supplied mask, or a centered circle when none is given.
pub fn resolve_mask(img: &ImageBuffer, mask: Option<Mask>) -> Result<Mask, ApiError> {
    let mask = mask.unwrap_or_else(|| Mask::central_ellipse(img.width(), img.height(), DEFAULT_MASK_FRACTION));
    if mask.dims() != img.dims() {
        return Err(ApiError::BadMask(format!(
            "mask is {}x{}, image is {}x{}",
            mask.width(),
            mask.height(),
            img.width(),
            img.height()
        )));
    }
    if mask.is_empty() {
        return Err(ApiError::BadMask("mask selects no pixels".into()));
    }
    Ok(mask)
}

pub fn assess(model: &ClassifierModel, img: &ImageBuffer, mask: &Mask, debug: bool) -> Result<AssessResponse, ApiError> {
    let features = extract_features(img, mask).map_err(|e| ApiError::BadMask(e.to_string()))?;
    let (label, probability) = predict(model, &features);
    Ok(AssessResponse {
        label,
        probability,
        features: debug.then(|| features.0.to_vec()),
    })
}

pub fn recommend_response(
    catalog: &Catalog,
    model: Option<&ClassifierModel>,
    img: &ImageBuffer,
    mask: &Mask,
    product_id: Option<&str>,
    threshold: f64,
) -> Result<RecommendResponse, ApiError> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(ApiError::BadRequest(format!("threshold {threshold} must be a non-negative number")));
    }
    let scoped;
    let catalog = match product_id {
        Some(pid) => {
            scoped = catalog.product(pid).ok_or_else(|| ApiError::UnknownProduct(pid.to_string()))?;
            &scoped
        }
        None => catalog,
    };
    let empty = Mask::empty(mask.width(), mask.height());
    let estimate = estimate_skin_tone(img, mask, &empty).map_err(|e| ApiError::BadMask(e.to_string()))?;
    let verdict = match model {
        Some(m) => Some(assess(m, img, mask, false)?),
        None => None,
    };
    let rec = recommend(catalog, &estimate, DeltaE(threshold)).map_err(|_| ApiError::NotLoaded("catalog"))?;
    let matches = rec
        .matches
        .into_iter()
        .map(|m| MatchJson {
            product_id: m.shade.product_id,
            shade_id: m.shade.shade_id,
            name: m.shade.name,
            color: m.shade.color,
            distance: m.distance.0,
            very_close: m.distance.0 < REPORT_THRESHOLDS[0],
            similar: m.distance.0 < REPORT_THRESHOLDS[1],
            within_threshold: m.within_threshold,
        })
        .collect();
    Ok(RecommendResponse {
        estimated_skin_tone: EstimatedTone {
            rgb: estimate.color,
            lab: estimate.lab,
        },
        verdict,
        threshold,
        matches,
    })
}
