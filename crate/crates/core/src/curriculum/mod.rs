//! Reward-feedback curriculum: a windowed reward history, a clamped
//! difficulty level and the level-to-policy table.
//!
//! Higher levels produce subtler forgeries (smaller alpha, milder
//! perturbations, fewer factors, smaller regions). Sustained high, stable
//! rewards raise the level; low rewards lower it. `invert` flips both rules.

mod controller;
mod levels;

pub use controller::{Controller, ControllerCheckpoint, Transition};
pub use levels::{policy_for, LevelTable};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Largest reward a batch mean can take (four components in `[0, 1]`).
pub const MAX_REWARD: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CurriculumError {
    #[error("batch reward {0} outside [0, 4]")]
    RewardRange(f64),
    #[error("difficulty level {level} outside [0, {max}]")]
    LevelRange { level: i64, max: usize },
    #[error("invalid curriculum config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct Thresholds {
    pub high: f64,
    pub low: f64,
    pub stab_max: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            high: 3.2,
            low: 2.0,
            stab_max: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(default)]
pub struct CurriculumConfig {
    pub window: usize,
    pub d_max: usize,
    pub thresholds: Thresholds,
    pub cooldown: u64,
    pub invert: bool,
    /// Stop changing the level after this many batches; `None` never freezes.
    pub freeze_after_batches: Option<u64>,
    pub initial_level: usize,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        CurriculumConfig {
            window: 20,
            d_max: 6,
            thresholds: Thresholds::default(),
            cooldown: 5,
            invert: false,
            freeze_after_batches: None,
            initial_level: 0,
        }
    }
}

impl CurriculumConfig {
    pub fn validate(&self) -> Result<(), CurriculumError> {
        let t = &self.thresholds;
        if self.window == 0 {
            return Err(CurriculumError::Config("window must be positive".into()));
        }
        if !(t.low < t.high) {
            return Err(CurriculumError::Config(format!("low {} must be below high {}", t.low, t.high)));
        }
        if !(t.stab_max >= 0.0) {
            return Err(CurriculumError::Config("stab_max must be >= 0".into()));
        }
        if self.initial_level > self.d_max {
            return Err(CurriculumError::Config("initial_level exceeds d_max".into()));
        }
        Ok(())
    }
}

/// FIFO window of per-batch mean rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardHistory {
    capacity: usize,
    entries: VecDeque<f64>,
    count: u64,
}

impl RewardHistory {
    pub fn new(capacity: usize) -> Self {
        RewardHistory {
            capacity: capacity.max(1),
            entries: VecDeque::with_capacity(capacity),
            count: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Batches recorded since creation, including evicted ones.
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().copied()
    }

    pub fn record_batch(&mut self, batch_mean_reward: f64) -> Result<(), CurriculumError> {
        if !(0.0..=MAX_REWARD).contains(&batch_mean_reward) {
            return Err(CurriculumError::RewardRange(batch_mean_reward));
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(batch_mean_reward);
        self.count += 1;
        Ok(())
    }

    pub(crate) fn restore(capacity: usize, entries: Vec<f64>, count: u64) -> Result<Self, CurriculumError> {
        let mut h = RewardHistory::new(capacity);
        if entries.len() > h.capacity || (entries.len() as u64) > count {
            return Err(CurriculumError::Checkpoint("window larger than capacity or count".into()));
        }
        for e in entries {
            if !(0.0..=MAX_REWARD).contains(&e) {
                return Err(CurriculumError::RewardRange(e));
            }
            h.entries.push_back(e);
        }
        h.count = count;
        Ok(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub mean: f64,
    /// Population standard deviation over the window.
    pub stability: f64,
    pub ready: bool,
}

pub fn assess(history: &RewardHistory) -> Assessment {
    let n = history.len();
    if n == 0 {
        return Assessment {
            mean: 0.0,
            stability: 0.0,
            ready: false,
        };
    }
    // Sorting makes the result depend only on the multiset of entries.
    let mut values: Vec<f64> = history.entries().collect();
    values.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    Assessment {
        mean,
        stability: var.sqrt(),
        ready: 2 * n >= history.capacity(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifficultyState {
    pub level: usize,
    /// Batch index of the most recent level change.
    pub last_change: Option<u64>,
}

/// One controller step at batch `batch` (1-based count of recorded batches).
pub fn update_difficulty(
    state: DifficultyState,
    assessment: &Assessment,
    config: &CurriculumConfig,
    batch: u64,
) -> DifficultyState {
    if !assessment.ready {
        return state;
    }
    if config.freeze_after_batches.is_some_and(|n| batch > n) {
        return state;
    }
    if state.last_change.is_some_and(|b| batch.saturating_sub(b) < config.cooldown) {
        return state;
    }
    let t = &config.thresholds;
    let doing_well = assessment.mean >= t.high && assessment.stability <= t.stab_max;
    let struggling = assessment.mean <= t.low;
    let (up, down) = if config.invert {
        (struggling, doing_well)
    } else {
        (doing_well, struggling)
    };
    let level = if up {
        (state.level + 1).min(config.d_max)
    } else if down {
        state.level.saturating_sub(1)
    } else {
        state.level
    };
    if level == state.level {
        state
    } else {
        DifficultyState {
            level,
            last_change: Some(batch),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ready(mean: f64, stability: f64) -> Assessment {
        Assessment { mean, stability, ready: true }
    }

    fn past_cooldown(level: usize) -> DifficultyState {
        DifficultyState { level, last_change: Some(0) }
    }

    #[test]
    fn history_fifo() {
        let mut h = RewardHistory::new(20);
        h.record_batch(3.2).unwrap();
        assert_eq!(h.len(), 1);
        for i in 0..20 {
            h.record_batch(i as f64 / 10.0).unwrap();
        }
        assert_eq!(h.len(), 20);
        assert_eq!(h.entries().next(), Some(0.0));
        assert_eq!(h.count(), 21);
        assert_eq!(h.record_batch(5.0), Err(CurriculumError::RewardRange(5.0)));
        assert!(h.record_batch(-0.1).is_err());
        assert!(h.record_batch(f64::NAN).is_err());
    }

    #[test]
    fn assessment_examples() {
        let mut h = RewardHistory::new(20);
        assert_eq!(assess(&h), Assessment { mean: 0.0, stability: 0.0, ready: false });
        for _ in 0..12 {
            h.record_batch(2.0).unwrap();
        }
        assert_eq!(assess(&h), Assessment { mean: 2.0, stability: 0.0, ready: true });

        let mut h = RewardHistory::new(20);
        h.record_batch(0.0).unwrap();
        h.record_batch(4.0).unwrap();
        let a = assess(&h);
        assert_eq!((a.mean, a.stability), (2.0, 2.0));
        h.record_batch(1.0).unwrap();
        assert!(!assess(&h).ready);
    }

    #[test]
    fn level_moves() {
        let c = CurriculumConfig::default();
        assert_eq!(update_difficulty(past_cooldown(2), &ready(3.5, 0.2), &c, 10).level, 3);
        assert_eq!(update_difficulty(past_cooldown(2), &ready(1.5, 0.2), &c, 10).level, 1);
        assert_eq!(update_difficulty(past_cooldown(6), &ready(3.9, 0.1), &c, 10).level, 6);
        assert_eq!(update_difficulty(past_cooldown(0), &ready(0.5, 0.1), &c, 10).level, 0);
        // High but unstable: hold.
        assert_eq!(update_difficulty(past_cooldown(2), &ready(3.5, 0.9), &c, 10).level, 2);
        // Inside the cooldown: hold.
        let recent = DifficultyState { level: 2, last_change: Some(8) };
        assert_eq!(update_difficulty(recent, &ready(3.5, 0.1), &c, 10), recent);
        // Not ready: hold.
        let a = Assessment { ready: false, ..ready(3.9, 0.0) };
        assert_eq!(update_difficulty(past_cooldown(2), &a, &c, 10).level, 2);
    }

    #[test]
    fn invert_and_freeze() {
        let c = CurriculumConfig { invert: true, ..Default::default() };
        assert_eq!(update_difficulty(past_cooldown(2), &ready(3.5, 0.2), &c, 10).level, 1);
        assert_eq!(update_difficulty(past_cooldown(2), &ready(1.0, 0.2), &c, 10).level, 3);
        let c = CurriculumConfig { freeze_after_batches: Some(9), ..Default::default() };
        assert_eq!(update_difficulty(past_cooldown(2), &ready(3.5, 0.2), &c, 10).level, 2);
    }

    #[test]
    fn config_validation() {
        CurriculumConfig::default().validate().unwrap();
        let mut c = CurriculumConfig::default();
        c.thresholds.low = 3.5;
        assert!(c.validate().is_err());
    }
}
