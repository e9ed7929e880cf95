//! Generation policy: every distribution the sampler draws from.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::compositor::{Factor, Intensity};
use crate::region::{ComboClass, RegionCombo};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct AlphaWeight {
    pub alpha: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct IntensityWeights {
    pub mild: f64,
    pub moderate: f64,
    pub severe: f64,
}

impl IntensityWeights {
    pub const UNIFORM: IntensityWeights = IntensityWeights {
        mild: 1.0,
        moderate: 1.0,
        severe: 1.0,
    };

    pub fn as_array(&self) -> [f64; 3] {
        [self.mild, self.moderate, self.severe]
    }

    pub fn only(level: Intensity) -> Self {
        let mut w = [0.0; 3];
        w[level.index()] = 1.0;
        IntensityWeights {
            mild: w[0],
            moderate: w[1],
            severe: w[2],
        }
    }
}

/// Ranges for the mask transform; lengths are fractions of the face extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct MaskSamplingPolicy {
    /// Weights for erode, dilate, none.
    pub morph_weights: [f64; 3],
    pub max_morph_radius: f64,
    pub max_shift: f64,
    pub scale_range: [f64; 2],
    pub blur_sigma_range: [f64; 2],
}

impl Default for MaskSamplingPolicy {
    fn default() -> Self {
        MaskSamplingPolicy {
            morph_weights: [1.0, 1.0, 1.0],
            max_morph_radius: 0.04,
            max_shift: 0.02,
            scale_range: [0.97, 1.03],
            blur_sigma_range: [0.01, 0.04],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct GenerationPolicy {
    pub alpha_weights: Vec<AlphaWeight>,
    /// Relative selection weight per factor; missing factors weigh 0.
    pub factor_weights: BTreeMap<Factor, f64>,
    /// Missing factors fall back to uniform intensities.
    #[serde(default)]
    pub intensity_weights: BTreeMap<Factor, IntensityWeights>,
    /// Inclusive `[min, max]` number of factors per sample.
    pub factor_count_range: [usize; 2],
    /// Weight per combo key (e.g. `left_eye+nose`); missing combos weigh 0.
    pub combo_weights: BTreeMap<String, f64>,
    #[serde(default)]
    pub mask: MaskSamplingPolicy,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid generation policy: {0}")]
pub struct PolicyError(pub String);

impl Default for GenerationPolicy {
    fn default() -> Self {
        Self::uniform()
    }
}

impl GenerationPolicy {
    /// Uniform over alphas {0.25, 0.5, 0.75, 1}, all factors, all
    /// intensities, one to three factors and all 19 combos.
    pub fn uniform() -> Self {
        GenerationPolicy {
            alpha_weights: [0.25, 0.5, 0.75, 1.0]
                .iter()
                .map(|&alpha| AlphaWeight { alpha, weight: 1.0 })
                .collect(),
            factor_weights: Factor::ALL.iter().map(|&f| (f, 1.0)).collect(),
            intensity_weights: Factor::ALL.iter().map(|&f| (f, IntensityWeights::UNIFORM)).collect(),
            factor_count_range: [1, 3],
            combo_weights: RegionCombo::catalogue().iter().map(|c| (c.key(), 1.0)).collect(),
            mask: MaskSamplingPolicy::default(),
        }
    }

    /// Always exactly `factor` at `intensity`.
    pub fn forcing(factor: Factor, intensity: Intensity) -> Self {
        let mut p = Self::uniform();
        p.factor_weights = [(factor, 1.0)].into_iter().collect();
        p.intensity_weights = [(factor, IntensityWeights::only(intensity))].into_iter().collect();
        p.factor_count_range = [1, 1];
        p
    }

    /// Sets every combo weight from its size class, splitting each class
    /// weight evenly among its members.
    pub fn set_combo_class_weights(&mut self, weights: &BTreeMap<ComboClass, f64>) {
        let all = RegionCombo::catalogue();
        let size = |k: ComboClass| all.iter().filter(|c| c.class() == k).count() as f64;
        self.combo_weights = all
            .iter()
            .map(|c| {
                let w = weights.get(&c.class()).copied().unwrap_or(0.0) / size(c.class());
                (c.key(), w)
            })
            .collect();
    }

    pub fn factor_weight(&self, factor: Factor) -> f64 {
        self.factor_weights.get(&factor).copied().unwrap_or(0.0)
    }

    pub fn intensity_weights_for(&self, factor: Factor) -> [f64; 3] {
        self.intensity_weights
            .get(&factor)
            .copied()
            .unwrap_or(IntensityWeights::UNIFORM)
            .as_array()
    }

    /// Weights aligned with [`RegionCombo::catalogue`].
    pub fn combo_weight_vec(&self) -> Vec<f64> {
        RegionCombo::catalogue()
            .iter()
            .map(|c| self.combo_weights.get(&c.key()).copied().unwrap_or(0.0))
            .collect()
    }

    pub fn expected_alpha(&self) -> f64 {
        let total: f64 = self.alpha_weights.iter().map(|a| a.weight).sum();
        self.alpha_weights.iter().map(|a| a.alpha * a.weight).sum::<f64>() / total
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        let bad = |w: f64| !(w >= 0.0) || !w.is_finite();
        let positive = |ws: &mut dyn Iterator<Item = f64>| ws.sum::<f64>() > 0.0;

        if self.alpha_weights.iter().any(|a| bad(a.weight) || !(a.alpha > 0.0 && a.alpha <= 1.0)) {
            return Err(PolicyError("alpha weights must be >= 0 with alpha in (0, 1]".into()));
        }
        if !positive(&mut self.alpha_weights.iter().map(|a| a.weight)) {
            return Err(PolicyError("alpha weights sum to zero".into()));
        }
        if self.factor_weights.values().any(|w| bad(*w)) || !positive(&mut self.factor_weights.values().copied()) {
            return Err(PolicyError("factor weights must be >= 0 with a positive total".into()));
        }
        for (f, w) in &self.intensity_weights {
            let arr = w.as_array();
            if arr.iter().any(|v| bad(*v)) || !positive(&mut arr.iter().copied()) {
                return Err(PolicyError(format!("intensity weights for {f} must be >= 0 with a positive total")));
            }
        }
        let [lo, hi] = self.factor_count_range;
        if lo == 0 || lo > hi {
            return Err(PolicyError(format!("factor_count_range [{lo}, {hi}] must satisfy 1 <= min <= max")));
        }
        let known: Vec<String> = RegionCombo::catalogue().iter().map(|c| c.key()).collect();
        if let Some(k) = self.combo_weights.keys().find(|k| !known.contains(k)) {
            return Err(PolicyError(format!("unknown combo `{k}`")));
        }
        if self.combo_weights.values().any(|w| bad(*w)) || !positive(&mut self.combo_weights.values().copied()) {
            return Err(PolicyError("combo weights must be >= 0 with a positive total".into()));
        }
        let m = &self.mask;
        if m.morph_weights.iter().any(|w| bad(*w)) || !positive(&mut m.morph_weights.iter().copied()) {
            return Err(PolicyError("mask morph weights must be >= 0 with a positive total".into()));
        }
        let nonneg = [m.max_morph_radius, m.max_shift, m.blur_sigma_range[0]];
        if nonneg.iter().any(|v| bad(*v))
            || m.blur_sigma_range[0] > m.blur_sigma_range[1]
            || !(m.scale_range[0] > 0.0)
            || m.scale_range[0] > m.scale_range[1]
        {
            return Err(PolicyError(format!("mask sampling ranges invalid: {m:?}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_valid() {
        let p = GenerationPolicy::uniform();
        p.validate().unwrap();
        assert_eq!(p.combo_weight_vec().len(), 19);
        assert!((p.expected_alpha() - 0.625).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_and_empty_weights() {
        let mut p = GenerationPolicy::uniform();
        p.alpha_weights[0].weight = -1.0;
        assert!(p.validate().is_err());

        let mut p = GenerationPolicy::uniform();
        p.combo_weights.values_mut().for_each(|w| *w = 0.0);
        assert!(p.validate().is_err());

        let mut p = GenerationPolicy::uniform();
        p.combo_weights.insert("chin".into(), 1.0);
        assert!(p.validate().is_err());

        let mut p = GenerationPolicy::uniform();
        p.factor_count_range = [3, 2];
        assert!(p.validate().is_err());
    }

    #[test]
    fn class_weights_split_evenly() {
        let mut p = GenerationPolicy::uniform();
        let classes = [(ComboClass::SingleOrgan, 1.0), (ComboClass::MultiOrgan, 0.0), (ComboClass::Predefined, 0.0)]
            .into_iter()
            .collect();
        p.set_combo_class_weights(&classes);
        let w = p.combo_weight_vec();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(w.iter().filter(|v| **v > 0.0).count(), 4);
    }
}
