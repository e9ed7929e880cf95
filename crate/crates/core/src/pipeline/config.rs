use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::compositor::MagnitudeTable;
use crate::curriculum::{policy_for, CurriculumConfig};
use crate::policy::GenerationPolicy;
use crate::reward::RewardConfig;

/// Top-level run configuration, read from TOML. Relative paths resolve
/// against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub inputs: InputConfig,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub counts: Counts,
    #[serde(default)]
    pub annotation: AnnotationConfig,
    #[serde(default)]
    pub generation: GenerationConfig,
    #[serde(default)]
    pub reward: RewardConfig,
    #[serde(default)]
    pub curriculum: CurriculumConfig,
    #[serde(default)]
    pub mix: MixConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    /// Directory of `.png` portraits.
    pub images: PathBuf,
    /// Directory of landmark files named `<image stem>.json`.
    pub landmarks: PathBuf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct Counts {
    #[serde(default)]
    pub real: usize,
    #[serde(default)]
    pub fake: usize,
}

impl Counts {
    pub fn total(&self) -> usize {
        self.real + self.fake
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationMode {
    Endpoint,
    #[default]
    Template,
}

impl std::str::FromStr for AnnotationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "endpoint" => Ok(AnnotationMode::Endpoint),
            "template" => Ok(AnnotationMode::Template),
            other => Err(format!("unknown annotation mode {other:?} (expected endpoint or template)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct AnnotationConfig {
    pub mode: AnnotationMode,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    /// Fall back to the template when the endpoint gives up; otherwise the sample is skipped.
    pub fallback_to_template: bool,
}

impl Default for AnnotationConfig {
    fn default() -> Self {
        AnnotationConfig {
            mode: AnnotationMode::Template,
            timeout_secs: 120,
            max_attempts: crate::annotate::DEFAULT_MAX_ATTEMPTS,
            fallback_to_template: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct GenerationConfig {
    /// Worker threads; 0 uses every core. Also bounds endpoint requests in flight.
    pub workers: usize,
    /// Fresh draws of the perturbation after a sub-threshold sample.
    pub max_resamples: u32,
    /// Curriculum level whose policy drives sampling when `policy` is absent.
    pub level: Option<i64>,
    pub policy: Option<GenerationPolicy>,
    pub magnitudes: Option<MagnitudeTable>,
    /// Caption table file; the bundled table when absent.
    pub caption_table: Option<PathBuf>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            workers: 0,
            max_resamples: 5,
            level: None,
            policy: None,
            magnitudes: None,
            caption_table: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct MixConfig {
    /// Share of rows emitted without a CoT sidecar. No default is assumed.
    pub plain_fraction: Option<f64>,
}

impl RunConfig {
    pub fn minimal(images: impl Into<PathBuf>, landmarks: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            seed: 0,
            inputs: InputConfig { images: images.into(), landmarks: landmarks.into() },
            output_dir: output_dir.into(),
            counts: Counts::default(),
            annotation: AnnotationConfig::default(),
            generation: GenerationConfig::default(),
            reward: RewardConfig::default(),
            curriculum: CurriculumConfig::default(),
            mix: MixConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.inputs.images);
        fix(&mut self.inputs.landmarks);
        fix(&mut self.output_dir);
        if let Some(t) = self.generation.caption_table.as_mut() {
            fix(t);
        }
    }

    pub fn policy(&self) -> Result<GenerationPolicy, PipelineError> {
        let policy = match (&self.generation.policy, self.generation.level) {
            (Some(p), _) => p.clone(),
            (None, Some(level)) => policy_for(level).map_err(|e| PipelineError::Config(e.to_string()))?,
            (None, None) => GenerationPolicy::uniform(),
        };
        policy.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(policy)
    }

    pub fn magnitudes(&self) -> Result<MagnitudeTable, PipelineError> {
        let table = self.generation.magnitudes.clone().unwrap_or_default();
        table.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.policy()?;
        self.magnitudes()?;
        self.curriculum.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if let Some(f) = self.mix.plain_fraction {
            if !(0.0..=1.0).contains(&f) {
                return Err(PipelineError::Config(format!("mix.plain_fraction {f} outside [0, 1]")));
            }
        }
        let [lo, hi] = self.reward.length_bounds;
        if lo == 0 || hi < lo || !(0.0..=1.0).contains(&self.reward.lambda) {
            return Err(PipelineError::Config("reward: need 0 < L_min <= L_max and lambda in [0, 1]".into()));
        }
        if self.annotation.max_attempts == 0 {
            return Err(PipelineError::Config("annotation.max_attempts must be >= 1".into()));
        }
        Ok(())
    }
}

/// JSON schema of the run config file.
pub fn config_schema() -> serde_json::Value {
    serde_json::to_value(schemars::schema_for!(RunConfig)).expect("schema serializes")
}
