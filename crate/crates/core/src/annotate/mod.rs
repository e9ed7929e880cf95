//! Chain-of-thought annotation: prompt assembly, an endpoint abstraction
//! with a validate-and-repair retry loop, and an offline template.

#[cfg(feature = "http-endpoint")]
mod http;
mod template;

#[cfg(feature = "http-endpoint")]
pub use http::{HttpEndpoint, HttpEndpointConfig};
pub use template::template_cot;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::caption::KeyCaptionSet;
use crate::pipeline::SampleRecord;
use crate::region::RegionId;
use crate::reward::{parse_response, Label, TAGS};

/// The instruction the annotator model must follow when choosing phrasing.
pub const SELECTION_INSTRUCTION: &str =
    "select the most contextually appropriate description while ensuring semantic distinctiveness";

pub const DEFAULT_MAX_ATTEMPTS: u32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum AnnotateError {
    #[error("no key captions to annotate")]
    EmptyEvidence,
    #[error("sample {0} is not a forgery")]
    NotForged(String),
    #[error("annotation endpoint unavailable: {0}")]
    EndpointUnavailable(String),
    #[error("no valid annotation after {attempts} attempts; last problem: {last}")]
    ValidationExhausted { attempts: u32, last: String },
    #[error("annotation endpoint configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum CotSource {
    Endpoint,
    Template,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
    /// Real image first, then the forgery.
    pub image_refs: [String; 2],
    pub required_format: String,
    /// Ground truth the reply is checked against; never sent to the model as-is.
    pub truth: KeyCaptionSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotRecord {
    pub text: String,
    pub regions: BTreeSet<RegionId>,
    pub keywords: Vec<String>,
    pub label: Label,
    pub source: CotSource,
    pub attempts: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: DEFAULT_MAX_ATTEMPTS }
    }
}

/// Anything that turns a prompt into response text. `repair` carries the
/// correction request after a rejected attempt.
pub trait AnnotationEndpoint {
    fn complete(&self, prompt: &PromptBundle, repair: Option<&str>) -> Result<String, AnnotateError>;
}

pub fn format_descriptor() -> String {
    format!(
        "<{t}>step-by-step reasoning</{t}>\n<{k}>Regions: <comma-separated region names>; Clues: <semicolon-separated phrases></{k}>\n<{a}>Real|Fake</{a}>",
        t = TAGS.think,
        k = TAGS.key,
        a = TAGS.answer
    )
}

pub fn build_annotation_prompt(sample: &SampleRecord, captions: &KeyCaptionSet) -> Result<PromptBundle, AnnotateError> {
    let forged = match (&sample.forged_image_path, sample.label) {
        (Some(p), Label::Fake) => p.clone(),
        _ => return Err(AnnotateError::NotForged(sample.id.clone())),
    };
    if captions.is_empty() {
        return Err(AnnotateError::EmptyEvidence);
    }
    let system_text = format!(
        "You are a forensic analyst explaining why a face image is forged. \
         Reply using exactly this structure and nothing else:\n{}",
        format_descriptor()
    );
    let mut user = String::from(
        "The first image is the original face and the second is a manipulated version of it. \
         The manipulated regions and their anomaly descriptions are listed below.\n",
    );
    for region in &captions.regions {
        let phrases: Vec<&str> = captions
            .keywords
            .iter()
            .filter(|k| k.region == *region)
            .map(|k| k.phrase.as_str())
            .collect();
        user.push_str(&format!("- {}: {}\n", region.display_name(), phrases.join("; ")));
    }
    user.push_str(&format!(
        "Reason step by step about what is visible in each region and {SELECTION_INSTRUCTION}. \
         In the key section list exactly these regions: {}; and exactly these clues, verbatim and in this order: {}. \
         The answer must be Fake.",
        captions.regions.iter().map(|r| r.display_name()).collect::<Vec<_>>().join(", "),
        captions.phrases().join("; "),
    ));
    Ok(PromptBundle {
        system_text,
        user_text: user,
        image_refs: [sample.real_image_path.clone(), forged],
        required_format: format_descriptor(),
        truth: captions.clone(),
    })
}

/// Checks a reply against the grammar and the ground truth.
pub fn validate_cot(text: &str, truth: &KeyCaptionSet, label: Label) -> Result<CotRecord, String> {
    let parsed = parse_response(text).map_err(|e| e.to_string())?;
    if parsed.answer != label {
        return Err(format!("answer is {} but should be {}", parsed.answer, label));
    }
    if !parsed.unknown_regions.is_empty() {
        return Err(format!("unknown regions: {}", parsed.unknown_regions.join(", ")));
    }
    if parsed.regions != truth.regions {
        return Err("regions differ from the ground truth".into());
    }
    if parsed.clues != truth.phrases() {
        return Err("clues differ from the ground-truth phrases".into());
    }
    Ok(CotRecord {
        text: text.to_string(),
        regions: parsed.regions,
        keywords: parsed.clues,
        label,
        source: CotSource::Endpoint,
        attempts: 1,
    })
}

/// Asks `endpoint` for a CoT, retrying with a repair note until the reply
/// passes [`validate_cot`] or the attempts run out.
pub fn request_cot(
    prompt: &PromptBundle,
    endpoint: &dyn AnnotationEndpoint,
    policy: RetryPolicy,
) -> Result<CotRecord, AnnotateError> {
    let mut repair: Option<String> = None;
    let mut last = String::from("no attempt made");
    for attempt in 1..=policy.max_attempts {
        let text = endpoint.complete(prompt, repair.as_deref())?;
        match validate_cot(&text, &prompt.truth, Label::Fake) {
            Ok(mut record) => {
                record.attempts = attempt;
                return Ok(record);
            }
            Err(why) => {
                log::debug!("annotation attempt {attempt} rejected: {why}");
                repair = Some(format!(
                    "Your previous reply was rejected: {why}. Reply again using exactly the required structure:\n{}",
                    prompt.required_format
                ));
                last = why;
            }
        }
    }
    Err(AnnotateError::ValidationExhausted { attempts: policy.max_attempts, last })
}
