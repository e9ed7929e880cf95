use serde::{Deserialize, Serialize};

use crate::annotate::CotSource;
use crate::caption::{DiffStats, KeyCaptionSet};
use crate::compositor::PerturbationParams;
use crate::mask::MaskTransformParams;
use crate::region::RegionCombo;
use crate::reward::Label;

pub const MANIFEST_FORMAT: u32 = 1;

/// First line of every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestHeader {
    pub manifest_format: u32,
    pub created: String,
    pub generator_version: String,
    pub seed: u64,
    pub requested: CountPair,
    pub produced: CountPair,
    /// Ids of requested samples that could not be produced.
    pub skipped: Vec<String>,
    pub caption_table_version: String,
    /// Copy of the caption table used, relative to the manifest.
    pub caption_table: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountPair {
    pub real: usize,
    pub fake: usize,
}

/// Pointer to a CoT sidecar file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CotRef {
    pub path: String,
    pub source: CotSource,
    pub attempts: u32,
}

/// One manifest row. Paths are relative to the manifest's directory.
/// Real rows carry no forgery fields and no captions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub id: String,
    pub index: u64,
    pub label: Label,
    pub real_image_path: String,
    pub landmarks_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forged_image_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combo: Option<RegionCombo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<PerturbationParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_transform: Option<MaskTransformParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Perturbation draws used, 1 when the first draw was accepted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draws: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diff_stats: Option<DiffStats>,
    #[serde(default)]
    pub captions: KeyCaptionSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cot: Option<CotRef>,
    pub seed: u64,
    pub generator_version: String,
}

impl SampleRecord {
    pub fn real(id: String, index: u64, real_image_path: String, landmarks_path: String, seed: u64) -> Self {
        SampleRecord {
            id,
            index,
            label: Label::Real,
            real_image_path,
            landmarks_path,
            forged_image_path: None,
            mask_path: None,
            combo: None,
            xi: None,
            mask_transform: None,
            alpha: None,
            draws: None,
            diff_stats: None,
            captions: KeyCaptionSet::default(),
            cot: None,
            seed,
            generator_version: crate::GENERATOR_VERSION.to_string(),
        }
    }

    #[cfg(test)]
    pub(crate) fn fake_stub(id: &str, real: &str, forged: &str) -> Self {
        let mut r = Self::real(id.into(), 0, real.into(), "landmarks/a.json".into(), 0);
        r.label = Label::Fake;
        r.forged_image_path = Some(forged.into());
        r
    }

    /// Invariant violations that need no file access.
    pub fn invariant_problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self.label {
            Label::Real => {
                let forged_fields = [
                    self.forged_image_path.is_some(),
                    self.mask_path.is_some(),
                    self.combo.is_some(),
                    self.xi.is_some(),
                    self.mask_transform.is_some(),
                    self.alpha.is_some(),
                ];
                if forged_fields.iter().any(|&b| b) {
                    out.push("real sample carries forgery fields".into());
                }
                if !self.captions.is_empty() || !self.captions.regions.is_empty() {
                    out.push("real sample carries captions".into());
                }
            }
            Label::Fake => {
                if self.forged_image_path.is_none()
                    || self.mask_path.is_none()
                    || self.combo.is_none()
                    || self.xi.is_none()
                    || self.mask_transform.is_none()
                    || self.alpha.is_none()
                {
                    out.push("fake sample is missing forgery fields".into());
                }
                if let Some(a) = self.alpha {
                    if !(a > 0.0 && a <= 1.0) {
                        out.push(format!("alpha {a} outside (0, 1]"));
                    }
                }
                if self.captions.is_empty() {
                    out.push("fake sample has no captions".into());
                }
                if let Some(combo) = &self.combo {
                    if !self.captions.regions.is_subset(&combo.regions) {
                        out.push("caption regions are not a subset of the combo".into());
                    }
                }
                let keyword_regions: std::collections::BTreeSet<_> =
                    self.captions.keywords.iter().map(|k| k.region).collect();
                if keyword_regions != self.captions.regions {
                    out.push("caption regions disagree with keyword sources".into());
                }
                if let Some(xi) = &self.xi {
                    if xi.factors.is_empty() {
                        out.push("perturbation has no factors".into());
                    }
                }
            }
        }
        out
    }
}
