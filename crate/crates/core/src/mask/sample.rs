use rand::Rng;

use super::{Jitter, MaskTransformParams, MorphOp};
use crate::policy::{GenerationPolicy, PolicyError};
use crate::region::RegionCombo;
use crate::rng::weighted_index;

/// Draws one of the 19 combos with probability proportional to the policy weights.
pub fn sample_region_combo<R: Rng + ?Sized>(
    rng: &mut R,
    policy: &GenerationPolicy,
) -> Result<RegionCombo, PolicyError> {
    let weights = policy.combo_weight_vec();
    let i = weighted_index(rng, &weights).ok_or_else(|| PolicyError("combo weights are all zero".into()))?;
    Ok(RegionCombo::catalogue().swap_remove(i))
}

/// Draws erode/dilate radius, jitter and blur for a face of `extent` pixels.
pub fn sample_mask_transform<R: Rng + ?Sized>(
    rng: &mut R,
    policy: &GenerationPolicy,
    extent: f64,
) -> MaskTransformParams {
    let m = &policy.mask;
    let op = match weighted_index(rng, &m.morph_weights) {
        Some(0) => MorphOp::Erode,
        Some(1) => MorphOp::Dilate,
        _ => MorphOp::None,
    };
    let max_radius = (m.max_morph_radius * extent).floor().max(0.0) as usize;
    let radius = if op == MorphOp::None || max_radius == 0 {
        0
    } else {
        rng.random_range(1..=max_radius)
    };
    let shift = m.max_shift * extent;
    let mut uniform = |lo: f64, hi: f64| if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let dx = uniform(-shift, shift);
    let dy = uniform(-shift, shift);
    let scale = uniform(m.scale_range[0], m.scale_range[1]);
    let blur_sigma = uniform(m.blur_sigma_range[0] * extent, m.blur_sigma_range[1] * extent);
    MaskTransformParams {
        morph_op: if radius == 0 { MorphOp::None } else { op },
        morph_radius: radius,
        affine_jitter: Jitter { dx, dy, scale },
        blur_sigma,
    }
}
