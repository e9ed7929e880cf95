//! Region vocabulary and the fixed set of 19 forgery region combinations.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[derive(schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum RegionId {
    FullFace,
    LeftEye,
    RightEye,
    Nose,
    Mouth,
    LeftEyebrow,
    RightEyebrow,
    Forehead,
}

impl RegionId {
    pub const ALL: [RegionId; 8] = [
        RegionId::FullFace,
        RegionId::LeftEye,
        RegionId::RightEye,
        RegionId::Nose,
        RegionId::Mouth,
        RegionId::LeftEyebrow,
        RegionId::RightEyebrow,
        RegionId::Forehead,
    ];

    /// The four organs whose non-empty subsets form the organ combos.
    pub const ORGANS: [RegionId; 4] = [
        RegionId::LeftEye,
        RegionId::RightEye,
        RegionId::Nose,
        RegionId::Mouth,
    ];

    /// Canonical snake_case name.
    pub fn as_str(self) -> &'static str {
        match self {
            RegionId::FullFace => "full_face",
            RegionId::LeftEye => "left_eye",
            RegionId::RightEye => "right_eye",
            RegionId::Nose => "nose",
            RegionId::Mouth => "mouth",
            RegionId::LeftEyebrow => "left_eyebrow",
            RegionId::RightEyebrow => "right_eyebrow",
            RegionId::Forehead => "forehead",
        }
    }

    /// Human-readable name used in prose and in response key sections.
    pub fn display_name(self) -> &'static str {
        match self {
            RegionId::FullFace => "full face",
            RegionId::LeftEye => "left eye",
            RegionId::RightEye => "right eye",
            RegionId::Nose => "nose",
            RegionId::Mouth => "mouth",
            RegionId::LeftEyebrow => "left eyebrow",
            RegionId::RightEyebrow => "right eyebrow",
            RegionId::Forehead => "forehead",
        }
    }

    /// Resolves a free-form region name: case, separators and a few
    /// synonyms are normalized ("Left Eye", "left-eye", "lips" ...).
    pub fn from_alias(name: &str) -> Option<RegionId> {
        let key: String = name
            .trim()
            .to_lowercase()
            .split(|c: char| c.is_whitespace() || c == '_' || c == '-')
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        let id = match key.as_str() {
            "full face" | "fullface" | "face" | "whole face" | "entire face" => RegionId::FullFace,
            "left eye" => RegionId::LeftEye,
            "right eye" => RegionId::RightEye,
            "nose" => RegionId::Nose,
            "mouth" | "lips" => RegionId::Mouth,
            "left eyebrow" | "left brow" => RegionId::LeftEyebrow,
            "right eyebrow" | "right brow" => RegionId::RightEyebrow,
            "forehead" | "brow area" => RegionId::Forehead,
            _ => return None,
        };
        Some(id)
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown region name `{0}`")]
pub struct UnknownRegion(pub String);

impl FromStr for RegionId {
    type Err = UnknownRegion;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RegionId::from_alias(s).ok_or_else(|| UnknownRegion(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ComboKind {
    OrganSubset,
    Predefined,
}

/// Coarse size class used by curriculum policies to weight combos.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ComboClass {
    SingleOrgan,
    MultiOrgan,
    Predefined,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize, schemars::JsonSchema)]
pub struct RegionCombo {
    pub regions: BTreeSet<RegionId>,
    pub kind: ComboKind,
}

/// Number of combos in the catalogue.
pub const COMBO_COUNT: usize = 19;

impl RegionCombo {
    /// All 19 combos in canonical order: organ subsets by bitmask 1..=15
    /// (bit 0 left eye, bit 1 right eye, bit 2 nose, bit 3 mouth), then the
    /// predefined four.
    pub fn catalogue() -> Vec<RegionCombo> {
        use RegionId::*;
        let mut out = Vec::with_capacity(COMBO_COUNT);
        for bits in 1u8..16 {
            let regions = RegionId::ORGANS
                .iter()
                .enumerate()
                .filter(|(i, _)| bits & (1 << i) != 0)
                .map(|(_, r)| *r)
                .collect();
            out.push(RegionCombo {
                regions,
                kind: ComboKind::OrganSubset,
            });
        }
        let predefined: [&[RegionId]; 4] = [
            &[FullFace],
            &[LeftEyebrow, RightEyebrow],
            &[Forehead],
            &[LeftEyebrow, RightEyebrow, Forehead],
        ];
        for set in predefined {
            out.push(RegionCombo {
                regions: set.iter().copied().collect(),
                kind: ComboKind::Predefined,
            });
        }
        out
    }

    pub fn class(&self) -> ComboClass {
        match self.kind {
            ComboKind::Predefined => ComboClass::Predefined,
            ComboKind::OrganSubset if self.regions.len() == 1 => ComboClass::SingleOrgan,
            ComboKind::OrganSubset => ComboClass::MultiOrgan,
        }
    }

    /// Stable key such as `left_eye+nose`.
    pub fn key(&self) -> String {
        self.regions
            .iter()
            .map(|r| r.as_str())
            .collect::<Vec<_>>()
            .join("+")
    }

    /// Position in [`RegionCombo::catalogue`].
    pub fn catalogue_index(&self) -> Option<usize> {
        RegionCombo::catalogue().iter().position(|c| c == self)
    }
}
