use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Deserialize;

use super::CurriculumError;
use crate::compositor::Factor;
use crate::policy::{AlphaWeight, GenerationPolicy, IntensityWeights};
use crate::region::ComboClass;

const LEVEL_TABLE_JSON: &str = include_str!("../../data/curriculum_levels.json");

#[derive(Debug, Clone, Deserialize)]
pub struct LevelRow {
    pub alpha: Vec<f64>,
    pub intensity: [f64; 3],
    pub factor_count: [usize; 2],
    pub combo_class: BTreeMap<ComboClass, f64>,
}

/// Difficulty level to generation policy, one row per level.
#[derive(Debug, Clone, Deserialize)]
pub struct LevelTable {
    pub curriculum_table_version: String,
    pub alpha_values: Vec<f64>,
    pub levels: Vec<LevelRow>,
}

impl LevelTable {
    pub fn bundled() -> &'static LevelTable {
        static TABLE: OnceLock<LevelTable> = OnceLock::new();
        TABLE.get_or_init(|| serde_json::from_str(LEVEL_TABLE_JSON).expect("bundled level table parses"))
    }

    pub fn max_level(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn policy(&self, level: i64) -> Result<GenerationPolicy, CurriculumError> {
        let max = self.max_level();
        let row = usize::try_from(level)
            .ok()
            .and_then(|l| self.levels.get(l))
            .ok_or(CurriculumError::LevelRange { level, max })?;
        let mut p = GenerationPolicy::uniform();
        p.alpha_weights = self
            .alpha_values
            .iter()
            .zip(&row.alpha)
            .map(|(&alpha, &weight)| AlphaWeight { alpha, weight })
            .collect();
        let [mild, moderate, severe] = row.intensity;
        p.intensity_weights = Factor::ALL
            .iter()
            .map(|&f| (f, IntensityWeights { mild, moderate, severe }))
            .collect();
        p.factor_count_range = row.factor_count;
        p.set_combo_class_weights(&row.combo_class);
        Ok(p)
    }
}

pub fn policy_for(level: i64) -> Result<GenerationPolicy, CurriculumError> {
    LevelTable::bundled().policy(level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compositor::{Intensity, MagnitudeTable};

    fn expected_deviation(p: &GenerationPolicy, f: Factor, table: &MagnitudeTable) -> f64 {
        let w = p.intensity_weights_for(f);
        let total: f64 = w.iter().sum();
        Intensity::ALL
            .iter()
            .map(|&i| w[i.index()] * table.range(f, i).unwrap().mean_deviation(f.neutral()))
            .sum::<f64>()
            / total
    }

    #[test]
    fn every_level_is_a_valid_policy() {
        let t = LevelTable::bundled();
        assert_eq!(t.max_level(), 6);
        for l in 0..=6 {
            policy_for(l).unwrap().validate().unwrap();
        }
        assert!(matches!(policy_for(-1), Err(CurriculumError::LevelRange { level: -1, max: 6 })));
        assert!(policy_for(7).is_err());
    }

    #[test]
    fn harder_levels_are_subtler() {
        let table = MagnitudeTable::default();
        let policies: Vec<_> = (0..=6).map(|l| policy_for(l).unwrap()).collect();
        for pair in policies.windows(2) {
            assert!(pair[1].expected_alpha() <= pair[0].expected_alpha());
            for f in Factor::ALL {
                assert!(expected_deviation(&pair[1], f, &table) <= expected_deviation(&pair[0], f, &table) + 1e-15);
            }
            assert!(pair[1].factor_count_range[1] <= pair[0].factor_count_range[1]);
        }
        let severe_share = |p: &GenerationPolicy| {
            let w = p.intensity_weights_for(Factor::Hue);
            w[2] / w.iter().sum::<f64>()
        };
        assert!(severe_share(&policies[6]) <= severe_share(&policies[0]));
        let single_share = |p: &GenerationPolicy| {
            let w = p.combo_weight_vec();
            let total: f64 = w.iter().sum();
            crate::region::RegionCombo::catalogue()
                .iter()
                .zip(&w)
                .filter(|(c, _)| c.class() == ComboClass::SingleOrgan)
                .map(|(_, w)| w)
                .sum::<f64>()
                / total
        };
        for pair in policies.windows(2) {
            assert!(single_share(&pair[1]) >= single_share(&pair[0]));
        }
    }
}
