use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CompositorError, ImageBuffer};
use crate::mask::SoftMask;
use crate::policy::GenerationPolicy;
use crate::rng::weighted_index;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct BlendSpec {
    pub alpha: f64,
}

impl BlendSpec {
    pub fn new(alpha: f64) -> Result<Self, CompositorError> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(BlendSpec { alpha })
        } else {
            Err(CompositorError::InvalidAlpha(alpha))
        }
    }
}

pub fn sample_alpha<R: Rng + ?Sized>(
    rng: &mut R,
    policy: &GenerationPolicy,
) -> Result<BlendSpec, CompositorError> {
    let candidates: Vec<_> = policy
        .alpha_weights
        .iter()
        .filter(|a| a.alpha > 0.0 && a.alpha <= 1.0)
        .collect();
    let weights: Vec<f64> = candidates.iter().map(|a| a.weight).collect();
    let i = weighted_index(rng, &weights).ok_or(CompositorError::EmptyAlphaPolicy)?;
    BlendSpec::new(candidates[i].alpha)
}

/// `out = w * augmented + (1 - w) * real` with `w = alpha * mask` per pixel.
///
/// `w = 0` returns `real` and `w = 1` returns `augmented` bit for bit; other
/// weights stay within the per-channel bounds of the two inputs.
pub fn blend_forgery(
    real: &ImageBuffer,
    augmented: &ImageBuffer,
    soft_mask: &SoftMask,
    spec: BlendSpec,
) -> Result<ImageBuffer, CompositorError> {
    let dims = real.dims();
    if augmented.dims() != dims {
        return Err(CompositorError::ShapeMismatch {
            expected: dims,
            actual: augmented.dims(),
        });
    }
    if (soft_mask.width(), soft_mask.height()) != dims {
        return Err(CompositorError::ShapeMismatch {
            expected: dims,
            actual: (soft_mask.width(), soft_mask.height()),
        });
    }
    let BlendSpec { alpha } = BlendSpec::new(spec.alpha)?;
    let mut data = Vec::with_capacity(real.data().len());
    for (i, (r, a)) in real
        .data()
        .chunks_exact(3)
        .zip(augmented.data().chunks_exact(3))
        .enumerate()
    {
        let w = alpha * soft_mask.data()[i];
        for c in 0..3 {
            let v = if w == 0.0 {
                r[c]
            } else if w == 1.0 {
                a[c]
            } else {
                (r[c] + w * (a[c] - r[c])).clamp(r[c].min(a[c]), r[c].max(a[c]))
            };
            data.push(v);
        }
    }
    Ok(ImageBuffer::from_vec(dims.0, dims.1, data))
}
