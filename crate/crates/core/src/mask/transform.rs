use serde::{Deserialize, Serialize};

use super::{morph_mask, MaskError, MorphOp, RegionMask};
use crate::{filter, par};

/// Soft mask with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMask {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl SoftMask {
    /// Values are clamped into `[0, 1]`.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "soft mask buffer size");
        SoftMask {
            width,
            height,
            data: data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::from_vec(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Rounds to 8-bit and back, the form stored on disk.
    pub fn quantized(&self) -> SoftMask {
        SoftMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| (v * 255.0).round() / 255.0).collect(),
        }
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|v| (v * 255.0).round() as u8).collect()
    }
}

impl From<&RegionMask> for SoftMask {
    fn from(m: &RegionMask) -> Self {
        SoftMask {
            width: m.width(),
            height: m.height(),
            data: m.data().iter().map(|&v| v as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct Jitter {
    pub dx: f64,
    pub dy: f64,
    pub scale: f64,
}

impl Default for Jitter {
    fn default() -> Self {
        Jitter {
            dx: 0.0,
            dy: 0.0,
            scale: 1.0,
        }
    }
}

impl Jitter {
    pub fn is_identity(&self) -> bool {
        self.dx == 0.0 && self.dy == 0.0 && self.scale == 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct MaskTransformParams {
    pub morph_op: MorphOp,
    pub morph_radius: usize,
    pub affine_jitter: Jitter,
    pub blur_sigma: f64,
}

impl Default for MaskTransformParams {
    fn default() -> Self {
        MaskTransformParams {
            morph_op: MorphOp::None,
            morph_radius: 0,
            affine_jitter: Jitter::default(),
            blur_sigma: 0.0,
        }
    }
}

impl MaskTransformParams {
    pub fn validate(&self) -> Result<(), MaskError> {
        if !(self.blur_sigma >= 0.0) || !self.blur_sigma.is_finite() {
            return Err(MaskError::InvalidParams(format!("blur_sigma {}", self.blur_sigma)));
        }
        let j = self.affine_jitter;
        if !(j.scale > 0.0) || !j.scale.is_finite() || !j.dx.is_finite() || !j.dy.is_finite() {
            return Err(MaskError::InvalidParams(format!("jitter {j:?}")));
        }
        Ok(())
    }
}

/// Translate by `(dx, dy)` and scale about the mask centroid, nearest-neighbour.
fn jitter_mask(mask: &RegionMask, jitter: Jitter) -> RegionMask {
    if jitter.is_identity() {
        return mask.clone();
    }
    let (w, h) = (mask.width(), mask.height());
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                sx += x as f64 + 0.5;
                sy += y as f64 + 0.5;
                n += 1;
            }
        }
    }
    if n == 0 {
        return mask.clone();
    }
    let (cx, cy) = (sx / n as f64, sy / n as f64);
    let mut out = vec![0u8; w * h];
    par::for_each_row(&mut out, w, |y, row| {
        let py = y as f64 + 0.5;
        for (x, px) in row.iter_mut().enumerate() {
            let qx = cx + (x as f64 + 0.5 - cx - jitter.dx) / jitter.scale;
            let qy = cy + (py - cy - jitter.dy) / jitter.scale;
            let (fx, fy) = (qx.floor(), qy.floor());
            if fx >= 0.0 && fy >= 0.0 && fx < w as f64 && fy < h as f64 {
                *px = mask.get(fx as usize, fy as usize) as u8;
            }
        }
    });
    RegionMask::from_vec(w, h, out)
}

/// Morph, then affine jitter, then Gaussian blur.
pub fn transform_mask(mask: &RegionMask, params: &MaskTransformParams) -> Result<SoftMask, MaskError> {
    params.validate()?;
    let morphed = morph_mask(mask, params.morph_op, params.morph_radius);
    if morphed.is_empty() {
        return Err(MaskError::EmptyMask);
    }
    let moved = jitter_mask(&morphed, params.affine_jitter);
    if moved.is_empty() {
        return Err(MaskError::EmptyMask);
    }
    let soft = SoftMask::from(&moved);
    if params.blur_sigma == 0.0 {
        return Ok(soft);
    }
    let blurred = filter::gaussian_blur(&soft.data, soft.width, soft.height, params.blur_sigma);
    Ok(SoftMask::from_vec(soft.width, soft.height, blurred))
}
