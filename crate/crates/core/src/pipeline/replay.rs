use std::fs;
use std::path::Path;

use serde::Serialize;

use super::generate::{load_mask_png, render_forgery, union_mask};
use super::record::SampleRecord;
use super::PipelineError;
use crate::compositor::ImageBuffer;
use crate::mask::{region_masks, LandmarkSet81};
use crate::reward::Label;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Identical,
    /// Largest per-channel difference of the forged image (in 8-bit steps)
    /// and of the mask.
    Mismatch { forged_max_diff: [u8; 3], mask_max_diff: u8 },
    VersionSkew { recorded: String, current: String },
    Unreadable { detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayResult {
    pub id: String,
    #[serde(flatten)]
    pub verdict: Verdict,
}

/// Regenerates forged images and masks from the stored parameters and
/// compares them bit for bit with the files on disk. `row` selects one id.
pub fn replay(manifest: &Path, row: Option<&str>) -> Result<Vec<ReplayResult>, PipelineError> {
    let text = fs::read_to_string(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let rec: SampleRecord = serde_json::from_str(line)?;
        if row.is_some_and(|id| id != rec.id) {
            continue;
        }
        let verdict = replay_record(base, &rec).unwrap_or_else(|e| Verdict::Unreadable { detail: e.to_string() });
        out.push(ReplayResult { id: rec.id, verdict });
    }
    if let Some(id) = row {
        if out.is_empty() {
            return Err(PipelineError::Config(format!("no row with id {id}")));
        }
    }
    Ok(out)
}

fn replay_record(base: &Path, rec: &SampleRecord) -> Result<Verdict, PipelineError> {
    if rec.generator_version != crate::GENERATOR_VERSION {
        return Ok(Verdict::VersionSkew {
            recorded: rec.generator_version.clone(),
            current: crate::GENERATOR_VERSION.to_string(),
        });
    }
    if rec.label == Label::Real {
        return Ok(Verdict::Identical);
    }
    let missing = |what: &str| PipelineError::Config(format!("{}: fake row without {what}", rec.id));
    let combo = rec.combo.as_ref().ok_or_else(|| missing("combo"))?;
    let xi = rec.xi.as_ref().ok_or_else(|| missing("xi"))?;
    let mask_params = rec.mask_transform.as_ref().ok_or_else(|| missing("mask_transform"))?;
    let alpha = rec.alpha.ok_or_else(|| missing("alpha"))?;
    let forged_path = rec.forged_image_path.as_ref().ok_or_else(|| missing("forged_image_path"))?;
    let mask_path = rec.mask_path.as_ref().ok_or_else(|| missing("mask_path"))?;

    let real = ImageBuffer::load_png(&base.join(&rec.real_image_path))?;
    let (lm, _) = LandmarkSet81::load(&base.join(&rec.landmarks_path))?;
    let masks = region_masks(&lm, combo)?;
    let union = union_mask(&masks, real.width(), real.height());
    let (forged, soft) = render_forgery(&real, &union, mask_params, xi, alpha)?;

    let stored = ImageBuffer::load_png(&base.join(forged_path))?;
    let (mw, mh, stored_mask) = load_mask_png(&base.join(mask_path))?;
    let forged_max_diff = if stored.dims() == forged.dims() {
        let d = forged.max_abs_diff(&stored);
        d.map(|v| (v * 255.0).round() as u8)
    } else {
        [255; 3]
    };
    let mask_max_diff = if (mw, mh) == (soft.width(), soft.height()) {
        soft.to_u8().iter().zip(&stored_mask).map(|(a, b)| a.abs_diff(*b)).max().unwrap_or(0)
    } else {
        255
    };
    Ok(if forged_max_diff == [0; 3] && mask_max_diff == 0 {
        Verdict::Identical
    } else {
        Verdict::Mismatch { forged_max_diff, mask_max_diff }
    })
}
