use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::CaptionError;
use crate::compositor::{rgb_to_hsv, Factor, ImageBuffer};
use crate::filter::reflect;
use crate::mask::RegionMask;
use crate::region::RegionId;

/// Pixels whose chroma is below this in either image have no usable hue.
const CHROMA_MIN: f64 = 0.02;
const STD_FLOOR: f64 = 0.01;
const LAPLACIAN_VAR_FLOOR: f64 = 1e-4;
/// Block matching: grid spacing, patch half-size, search radius, and the
/// minimum patch variance below which a patch is treated as textureless.
const GRID_STEP: usize = 4;
const PATCH_RADIUS: isize = 3;
const SEARCH_RADIUS: isize = 6;
const TEXTURE_MIN_VAR: f64 = 1e-4;

/// Per-region, per-factor difference measures. All values are `>= 0` and
/// are exactly zero when the two images are identical.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiffStats {
    pub measures: BTreeMap<RegionId, BTreeMap<Factor, f64>>,
    /// Regions whose mask was empty; they carry no measures.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<RegionId>,
}

impl DiffStats {
    pub fn get(&self, region: RegionId, factor: Factor) -> f64 {
        self.measures.get(&region).and_then(|m| m.get(&factor)).copied().unwrap_or(0.0)
    }
}

pub fn measure_region_differences(
    real: &ImageBuffer,
    forged: &ImageBuffer,
    masks: &BTreeMap<RegionId, RegionMask>,
) -> Result<DiffStats, CaptionError> {
    if real.dims() != forged.dims() {
        return Err(CaptionError::ShapeMismatch(real.dims(), forged.dims()));
    }
    let (w, h) = real.dims();
    let planes = Planes::new(real, forged);
    let mut stats = DiffStats::default();
    for (&region, mask) in masks {
        if mask.dims() != (w, h) {
            return Err(CaptionError::ShapeMismatch((w, h), mask.dims()));
        }
        if mask.is_empty() {
            log::warn!("region {region} has an empty mask; skipped");
            stats.skipped.push(region);
            continue;
        }
        stats.measures.insert(region, planes.measure(real, forged, mask));
    }
    Ok(stats)
}

struct Planes {
    w: usize,
    h: usize,
    luma_r: Vec<f64>,
    luma_f: Vec<f64>,
    lap_r: Vec<f64>,
    lap_f: Vec<f64>,
}

impl Planes {
    fn new(real: &ImageBuffer, forged: &ImageBuffer) -> Self {
        let (w, h) = real.dims();
        let luma_r = real.luminance();
        let luma_f = forged.luminance();
        let lap_r = laplacian(&luma_r, w, h);
        let lap_f = laplacian(&luma_f, w, h);
        Planes { w, h, luma_r, luma_f, lap_r, lap_f }
    }

    fn measure(&self, real: &ImageBuffer, forged: &ImageBuffer, mask: &RegionMask) -> BTreeMap<Factor, f64> {
        let idx: Vec<usize> = (0..self.w * self.h).filter(|&i| mask.data()[i] != 0).collect();
        let (mr, sr) = mean_std(&idx, &self.luma_r);
        let (mf, sf) = mean_std(&idx, &self.luma_f);
        let (_, lr) = mean_std(&idx, &self.lap_r);
        let (_, lf) = mean_std(&idx, &self.lap_f);
        let (vr, vf) = (lr * lr, lf * lf);
        let (translation, scaling) = self.displacement(mask);
        let mut out = BTreeMap::new();
        out.insert(Factor::Hue, hue_delta(&idx, real, forged));
        out.insert(Factor::Lighting, (mf - mr).abs());
        out.insert(Factor::Contrast, (sf - sr).abs() / sr.max(STD_FLOOR));
        out.insert(Factor::Clarity, (vf - vr).abs() / vr.max(LAPLACIAN_VAR_FLOOR));
        out.insert(Factor::Scaling, scaling);
        out.insert(Factor::Translation, translation);
        out
    }

    /// Block-matched displacement on a grid inside the mask. Returns the
    /// norm of the mean displacement and the scaling part: the isotropic
    /// expansion rate fitted by least squares times the RMS grid radius.
    fn displacement(&self, mask: &RegionMask) -> (f64, f64) {
        let mut field = Vec::new();
        for y in (0..self.h).step_by(GRID_STEP) {
            for x in (0..self.w).step_by(GRID_STEP) {
                if mask.get(x, y) {
                    if let Some(d) = self.match_block(x as isize, y as isize) {
                        field.push(([x as f64, y as f64], d));
                    }
                }
            }
        }
        if field.is_empty() {
            return (0.0, 0.0);
        }
        let n = field.len() as f64;
        let mean = |f: &dyn Fn(&([f64; 2], [f64; 2])) -> f64| field.iter().map(f).sum::<f64>() / n;
        let (px, py) = (mean(&|e| e.0[0]), mean(&|e| e.0[1]));
        let (dx, dy) = (mean(&|e| e.1[0]), mean(&|e| e.1[1]));
        let mut num = 0.0;
        let mut den = 0.0;
        for ([x, y], [u, v]) in &field {
            let (rx, ry) = (x - px, y - py);
            num += rx * (u - dx) + ry * (v - dy);
            den += rx * rx + ry * ry;
        }
        let scaling = if den > 0.0 { (num / den).abs() * (den / n).sqrt() } else { 0.0 };
        (dx.hypot(dy), scaling)
    }

    fn patch(&self, plane: &[f64], cx: isize, cy: isize) -> Vec<f64> {
        let mut out = Vec::with_capacity(((2 * PATCH_RADIUS + 1) * (2 * PATCH_RADIUS + 1)) as usize);
        for dy in -PATCH_RADIUS..=PATCH_RADIUS {
            let y = reflect(cy + dy, self.h);
            for dx in -PATCH_RADIUS..=PATCH_RADIUS {
                out.push(plane[y * self.w + reflect(cx + dx, self.w)]);
            }
        }
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        out.iter_mut().for_each(|v| *v -= mean);
        out
    }

    /// Where the real patch at `(x, y)` reappears in the forged image.
    fn match_block(&self, x: isize, y: isize) -> Option<[f64; 2]> {
        let reference = self.patch(&self.luma_r, x, y);
        let var = reference.iter().map(|v| v * v).sum::<f64>() / reference.len() as f64;
        if var < TEXTURE_MIN_VAR {
            return None;
        }
        let side = (2 * SEARCH_RADIUS + 1) as usize;
        let mut cost = vec![0.0; side * side];
        for dy in -SEARCH_RADIUS..=SEARCH_RADIUS {
            for dx in -SEARCH_RADIUS..=SEARCH_RADIUS {
                let cand = self.patch(&self.luma_f, x + dx, y + dy);
                let ssd = reference.iter().zip(&cand).map(|(a, b)| (a - b) * (a - b)).sum();
                cost[((dy + SEARCH_RADIUS) as usize) * side + (dx + SEARCH_RADIUS) as usize] = ssd;
            }
        }
        let at = |dx: isize, dy: isize| cost[((dy + SEARCH_RADIUS) as usize) * side + (dx + SEARCH_RADIUS) as usize];
        // Zero displacement wins ties so identical images measure exactly 0.
        let (mut bx, mut by, mut best) = (0, 0, at(0, 0));
        for dy in -SEARCH_RADIUS..=SEARCH_RADIUS {
            for dx in -SEARCH_RADIUS..=SEARCH_RADIUS {
                if at(dx, dy) < best {
                    (bx, by, best) = (dx, dy, at(dx, dy));
                }
            }
        }
        if best == 0.0 {
            // An exact match needs no subpixel refinement.
            return Some([bx as f64, by as f64]);
        }
        let sub = |lo: Option<f64>, mid: f64, hi: Option<f64>| match (lo, hi) {
            (Some(l), Some(h)) => {
                let denom = l - 2.0 * mid + h;
                if denom > 0.0 {
                    ((l - h) / (2.0 * denom)).clamp(-0.5, 0.5)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        };
        let inside = |d: isize| d.abs() <= SEARCH_RADIUS;
        let ox = sub(
            inside(bx - 1).then(|| at(bx - 1, by)),
            best,
            inside(bx + 1).then(|| at(bx + 1, by)),
        );
        let oy = sub(
            inside(by - 1).then(|| at(bx, by - 1)),
            best,
            inside(by + 1).then(|| at(bx, by + 1)),
        );
        Some([bx as f64 + ox, by as f64 + oy])
    }
}

fn mean_std(idx: &[usize], plane: &[f64]) -> (f64, f64) {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| plane[i]).sum::<f64>() / n;
    let var = idx.iter().map(|&i| (plane[i] - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// 4-neighbour Laplacian with reflected borders.
fn laplacian(plane: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let at = |dx: isize, dy: isize| plane[reflect(y as isize + dy, h) * w + reflect(x as isize + dx, w)];
            out[y * w + x] = at(-1, 0) + at(1, 0) + at(0, -1) + at(0, 1) - 4.0 * at(0, 0);
        }
    }
    out
}

fn hue_delta(idx: &[usize], real: &ImageBuffer, forged: &ImageBuffer) -> f64 {
    let w = real.width();
    let mut sum = 0.0;
    let mut n = 0usize;
    for &i in idx {
        let (x, y) = (i % w, i / w);
        let (a, b) = (real.pixel(x, y), forged.pixel(x, y));
        if chroma(a) < CHROMA_MIN || chroma(b) < CHROMA_MIN {
            continue;
        }
        let d = (rgb_to_hsv(b)[0] - rgb_to_hsv(a)[0]).rem_euclid(360.0);
        sum += d.min(360.0 - d);
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn chroma([r, g, b]: [f64; 3]) -> f64 {
    r.max(g).max(b) - r.min(g).min(b)
}
