//! Facial region masks: landmarks to polygons, rasterization, binary
//! morphology and the soft mask transform.

mod hull;
mod landmarks;
mod morph;
mod raster;
mod regions;
mod sample;
mod transform;

pub use hull::{convex_hull, polygon_contains, Point, Polygon};
pub use landmarks::{LandmarkFile, LandmarkSet81, LANDMARK_COUNT};
pub use morph::{dilate, erode, morph_mask, MorphOp};
pub use raster::{rasterize_mask, RegionMask};
pub use regions::{region_polygon, region_table, RegionTable};
pub use sample::{sample_mask_transform, sample_region_combo};
pub use transform::{transform_mask, Jitter, MaskTransformParams, SoftMask};

use crate::region::RegionId;

#[derive(Debug, thiserror::Error)]
pub enum MaskError {
    #[error("invalid landmarks: {0}")]
    InvalidLandmarks(String),
    #[error("region {0} is degenerate (fewer than 3 distinct or collinear points)")]
    DegenerateRegion(RegionId),
    #[error("mask is empty after transform")]
    EmptyMask,
    #[error("invalid mask transform parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("landmark file: {0}")]
    Json(#[from] serde_json::Error),
}

use std::collections::BTreeMap;

use crate::region::RegionCombo;

/// Binary mask of each region in `combo`.
pub fn region_masks(
    landmarks: &LandmarkSet81,
    combo: &RegionCombo,
) -> Result<BTreeMap<RegionId, RegionMask>, MaskError> {
    let (w, h) = (landmarks.width() as usize, landmarks.height() as usize);
    combo
        .regions
        .iter()
        .map(|&r| Ok((r, rasterize_mask(&[region_polygon(landmarks, r)?], w, h))))
        .collect()
}

/// Union mask `I_m` of every region in `combo`.
pub fn combo_mask(landmarks: &LandmarkSet81, combo: &RegionCombo) -> Result<RegionMask, MaskError> {
    let polys = combo
        .regions
        .iter()
        .map(|&r| region_polygon(landmarks, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(rasterize_mask(&polys, landmarks.width() as usize, landmarks.height() as usize))
}
