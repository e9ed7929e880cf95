use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CaptionError, CaptionTable, DiffStats};
use crate::compositor::{Factor, PerturbationParams};
use crate::region::{RegionCombo, RegionId};

/// A selected phrase and the measurement that justified it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct Keyword {
    pub region: RegionId,
    pub factor: Factor,
    pub phrase: String,
    pub measure: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct KeyCaptionSet {
    pub regions: BTreeSet<RegionId>,
    pub keywords: Vec<Keyword>,
}

impl KeyCaptionSet {
    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn phrases(&self) -> Vec<String> {
        self.keywords.iter().map(|k| k.phrase.clone()).collect()
    }
}

/// Picks one phrase for every `(region, factor)` of `combo` whose measure
/// strictly exceeds the matching entry's threshold. Entry matching uses the
/// intensity recorded in `xi` when the factor was applied.
pub fn select_key_captions<R: Rng + ?Sized>(
    stats: &DiffStats,
    combo: &RegionCombo,
    table: &CaptionTable,
    xi: Option<&PerturbationParams>,
    rng: &mut R,
) -> Result<KeyCaptionSet, CaptionError> {
    let mut set = KeyCaptionSet::default();
    for &region in &combo.regions {
        for factor in Factor::ALL {
            let measure = stats.get(region, factor);
            let intensity = xi.and_then(|p| p.intensity_of(factor));
            let Some(entry) = table.lookup(region, factor, intensity) else {
                continue;
            };
            if measure > entry.threshold {
                let phrase = entry.captions[rng.random_range(0..entry.captions.len())].clone();
                set.regions.insert(region);
                set.keywords.push(Keyword { region, factor, phrase, measure, threshold: entry.threshold });
            }
        }
    }
    if set.is_empty() {
        return Err(CaptionError::SubThresholdSample);
    }
    Ok(set)
}
