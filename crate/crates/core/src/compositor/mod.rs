//! Perturbation sampling, image augmentation and the self-blend.
//!
//! A forged image is `w * A(real; xi) + (1 - w) * real` with the per-pixel
//! weight `w = alpha * T(mask)`.

mod augment;
mod blend;
mod image;
mod perturb;

pub use self::image::{hsv_to_rgb, rgb_to_hsv, ImageBuffer};
pub use augment::apply_augmentation;
pub use blend::{blend_forgery, sample_alpha, BlendSpec};
pub use perturb::{
    sample_perturbation, Factor, FactorSetting, Geometry, Intensity, MagnitudeRange, MagnitudeTable,
    PerturbationParams,
};

#[derive(Debug, thiserror::Error)]
pub enum CompositorError {
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("policy excludes every perturbation factor")]
    EmptyPerturbation,
    #[error("alpha policy has no positive weight in (0, 1]")]
    EmptyAlphaPolicy,
    #[error("invalid blend weight {0}; must be in (0, 1]")]
    InvalidAlpha(f64),
    #[error("magnitude table: {0}")]
    Table(String),
    #[error("image io: {0}")]
    Image(#[from] ::image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
