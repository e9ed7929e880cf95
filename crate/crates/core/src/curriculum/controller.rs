use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{assess, policy_for, update_difficulty, CurriculumConfig, CurriculumError, DifficultyState, RewardHistory};
use crate::policy::GenerationPolicy;

/// Outcome of one observed batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub batch: u64,
    pub mean: f64,
    pub stability: f64,
    pub old_level: usize,
    pub new_level: usize,
}

impl Transition {
    pub fn changed(&self) -> bool {
        self.old_level != self.new_level
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerCheckpoint {
    pub level: usize,
    pub last_change: Option<u64>,
    pub window: Vec<f64>,
    pub batch_index: u64,
}

/// Single-writer curriculum controller. Optionally checkpoints to JSON after
/// every batch and appends level changes to a CSV audit log.
#[derive(Debug, Clone)]
pub struct Controller {
    config: CurriculumConfig,
    history: RewardHistory,
    state: DifficultyState,
    checkpoint_path: Option<PathBuf>,
    audit_path: Option<PathBuf>,
}

impl Controller {
    pub fn new(config: CurriculumConfig) -> Result<Self, CurriculumError> {
        config.validate()?;
        Ok(Controller {
            history: RewardHistory::new(config.window),
            state: DifficultyState {
                level: config.initial_level,
                last_change: None,
            },
            config,
            checkpoint_path: None,
            audit_path: None,
        })
    }

    /// Resumes from `path` when it exists, otherwise starts fresh. Either
    /// way later batches are checkpointed to `path`.
    pub fn with_checkpoint(mut self, path: impl Into<PathBuf>) -> Result<Self, CurriculumError> {
        let path = path.into();
        if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(|e| CurriculumError::Checkpoint(e.to_string()))?;
            let cp: ControllerCheckpoint =
                serde_json::from_str(&text).map_err(|e| CurriculumError::Checkpoint(e.to_string()))?;
            self.restore(cp)?;
        }
        self.checkpoint_path = Some(path);
        Ok(self)
    }

    pub fn with_audit_log(mut self, path: impl Into<PathBuf>) -> Self {
        self.audit_path = Some(path.into());
        self
    }

    pub fn restore(&mut self, cp: ControllerCheckpoint) -> Result<(), CurriculumError> {
        if cp.level > self.config.d_max {
            return Err(CurriculumError::LevelRange {
                level: cp.level as i64,
                max: self.config.d_max,
            });
        }
        self.history = RewardHistory::restore(self.config.window, cp.window, cp.batch_index)?;
        self.state = DifficultyState {
            level: cp.level,
            last_change: cp.last_change,
        };
        Ok(())
    }

    pub fn checkpoint(&self) -> ControllerCheckpoint {
        ControllerCheckpoint {
            level: self.state.level,
            last_change: self.state.last_change,
            window: self.history.entries().collect(),
            batch_index: self.history.count(),
        }
    }

    pub fn level(&self) -> usize {
        self.state.level
    }

    pub fn state(&self) -> DifficultyState {
        self.state
    }

    pub fn history(&self) -> &RewardHistory {
        &self.history
    }

    pub fn config(&self) -> &CurriculumConfig {
        &self.config
    }

    pub fn policy(&self) -> Result<GenerationPolicy, CurriculumError> {
        policy_for(self.state.level as i64)
    }

    pub fn observe(&mut self, batch_mean_reward: f64) -> Result<Transition, CurriculumError> {
        self.history.record_batch(batch_mean_reward)?;
        let batch = self.history.count();
        let a = assess(&self.history);
        let old = self.state.level;
        self.state = update_difficulty(self.state, &a, &self.config, batch);
        let t = Transition {
            batch,
            mean: a.mean,
            stability: a.stability,
            old_level: old,
            new_level: self.state.level,
        };
        if let Some(path) = &self.checkpoint_path {
            write_checkpoint(path, &self.checkpoint())?;
        }
        if t.changed() {
            if let Some(path) = &self.audit_path {
                append_audit(path, &t)?;
            }
        }
        Ok(t)
    }
}

fn write_checkpoint(path: &Path, cp: &ControllerCheckpoint) -> Result<(), CurriculumError> {
    let text = serde_json::to_string_pretty(cp).map_err(|e| CurriculumError::Checkpoint(e.to_string()))?;
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, text)
        .and_then(|_| std::fs::rename(&tmp, path))
        .map_err(|e| CurriculumError::Checkpoint(e.to_string()))
}

fn append_audit(path: &Path, t: &Transition) -> Result<(), CurriculumError> {
    let io = |e: std::io::Error| CurriculumError::Checkpoint(e.to_string());
    let fresh = !path.exists() || std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    let csv_err = |e: csv::Error| CurriculumError::Checkpoint(e.to_string());
    if fresh {
        w.write_record(["batch", "mean", "stability", "old_level", "new_level"]).map_err(csv_err)?;
    }
    w.write_record([
        t.batch.to_string(),
        t.mean.to_string(),
        t.stability.to_string(),
        t.old_level.to_string(),
        t.new_level.to_string(),
    ])
    .map_err(csv_err)?;
    w.flush().map_err(io)
}
