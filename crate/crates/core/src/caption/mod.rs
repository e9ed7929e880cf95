//! Key caption bank: a versioned table of anomaly phrases, per-region
//! real-vs-forged difference measures, and threshold-gated keyword selection.

mod measure;
mod select;
mod table;

pub use measure::{measure_region_differences, DiffStats};
pub use select::{select_key_captions, KeyCaptionSet, Keyword};
pub use table::{default_caption_table, load_caption_table, CaptionEntry, CaptionTable};

#[derive(Debug, thiserror::Error)]
pub enum CaptionError {
    #[error("caption table entry {index}: {reason}")]
    TableFormat { index: usize, reason: String },
    #[error("caption table: {0}")]
    Document(String),
    #[error("no measured difference exceeds its threshold")]
    SubThresholdSample,
    #[error("image dimensions differ: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
}
