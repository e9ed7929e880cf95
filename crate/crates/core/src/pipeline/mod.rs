//! Dataset generation, manifest validation and replay.

mod config;
mod generate;
mod record;
mod replay;
mod validate;

pub use config::{
    config_schema, AnnotationConfig, AnnotationMode, Counts, GenerationConfig, InputConfig, MixConfig, RunConfig,
};
pub use generate::{
    face_geometry, generate_dataset, generate_dataset_with, load_mask_png, render_forgery, save_mask_png, union_mask,
    GenerateSummary, SharedEndpoint, CAPTION_TABLE_NAME, MANIFEST_NAME,
};
pub use record::{CotRef, CountPair, ManifestHeader, SampleRecord, MANIFEST_FORMAT};
pub use replay::{replay, ReplayResult, Verdict};
pub use validate::{validate_manifest, ValidationReport, Violation, ViolationKind};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Mask(#[from] crate::mask::MaskError),
    #[error(transparent)]
    Compositor(#[from] crate::compositor::CompositorError),
    #[error(transparent)]
    Caption(#[from] crate::caption::CaptionError),
    #[error(transparent)]
    Annotate(#[from] crate::annotate::AnnotateError),
    #[error(transparent)]
    Policy(#[from] crate::policy::PolicyError),
}
