//! Self-blended face forgery synthesis with exact ground-truth conditions,
//! keyword/chain-of-thought annotation, structured-response rewards for
//! group-relative policy optimization, and a reward-driven curriculum.
//!
//! Data flow for one forged sample:
//!
//! ```text
//! landmarks -> region polygons -> binary mask -> soft mask T(m)
//! real image -> augmentation A(real; xi) ----------------+
//!                                                        v
//!        forged = a*T(m)*A(real; xi) + (1 - a*T(m))*real
//! (real, forged, region masks) -> difference stats -> key captions -> CoT
//! ```
//!
//! The `parallel` feature (on by default) runs row kernels and dataset
//! generation on rayon. Without it everything runs sequentially and
//! produces bit-identical output.

pub mod annotate;
pub mod caption;
pub mod compositor;
pub mod curriculum;
pub mod filter;
pub mod mask;
pub mod par;
pub mod pipeline;
pub mod policy;
pub mod region;
pub mod reward;
pub mod rng;
pub mod synthetic;

pub use compositor::ImageBuffer;
pub use mask::{LandmarkSet81, RegionMask, SoftMask};
pub use policy::GenerationPolicy;
pub use region::{RegionCombo, RegionId};

/// Version string recorded in manifests; replay refuses rows from other versions.
pub const GENERATOR_VERSION: &str = concat!("forgecot-", env!("CARGO_PKG_VERSION"));
