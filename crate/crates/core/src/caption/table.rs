use std::collections::BTreeSet;
use std::io::Read;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::CaptionError;
use crate::compositor::{Factor, Intensity};
use crate::region::RegionId;

const WILDCARD: &str = "*";
const BUNDLED: &str = include_str!("../../data/caption_table.json");

/// One row of the table. `None` in `region` or `intensity` is the `"*"` wildcard.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptionEntry {
    pub region: Option<RegionId>,
    pub factor: Factor,
    pub intensity: Option<Intensity>,
    pub threshold: f64,
    pub captions: Vec<String>,
}

impl CaptionEntry {
    /// Specificity rank when the entry matches, `None` otherwise.
    /// Exact region and intensity rank highest, then exact region alone,
    /// then exact intensity alone, then the full wildcard.
    pub fn rank(&self, region: RegionId, factor: Factor, intensity: Option<Intensity>) -> Option<u8> {
        if self.factor != factor {
            return None;
        }
        let r = match self.region {
            None => 0,
            Some(r) if r == region => 2,
            Some(_) => return None,
        };
        let i = match (self.intensity, intensity) {
            (None, _) => 0,
            (Some(a), Some(b)) if a == b => 1,
            _ => return None,
        };
        Some(r + i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptionTable {
    pub version: String,
    pub entries: Vec<CaptionEntry>,
}

impl CaptionTable {
    /// Most specific entry for `(region, factor)` at `intensity`; ties go to the earlier entry.
    pub fn lookup(&self, region: RegionId, factor: Factor, intensity: Option<Intensity>) -> Option<&CaptionEntry> {
        let mut best: Option<(u8, &CaptionEntry)> = None;
        for e in &self.entries {
            if let Some(rank) = e.rank(region, factor, intensity) {
                if best.is_none_or(|(b, _)| rank > b) {
                    best = Some((rank, e));
                }
            }
        }
        best.map(|(_, e)| e)
    }

    pub fn to_json(&self) -> String {
        let doc = RawTable {
            caption_table_version: Some(self.version.clone()),
            entries: self
                .entries
                .iter()
                .map(|e| RawEntry {
                    region: e.region.map_or(WILDCARD.into(), |r| r.as_str().into()),
                    factor: e.factor.as_str().into(),
                    intensity: e.intensity.map_or(WILDCARD.into(), |i| intensity_name(i).into()),
                    threshold: e.threshold,
                    captions: e.captions.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("table serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    caption_table_version: Option<String>,
    entries: Vec<RawEntry>,
}

#[derive(Serialize, Deserialize)]
struct RawEntry {
    region: String,
    factor: String,
    intensity: String,
    threshold: f64,
    captions: Vec<String>,
}

fn intensity_name(i: Intensity) -> &'static str {
    match i {
        Intensity::Mild => "mild",
        Intensity::Moderate => "moderate",
        Intensity::Severe => "severe",
    }
}

fn parse_factor(s: &str) -> Option<Factor> {
    Factor::ALL.into_iter().find(|f| f.as_str() == s.trim().to_ascii_lowercase())
}

fn parse_intensity(s: &str) -> Option<Intensity> {
    [Intensity::Mild, Intensity::Moderate, Intensity::Severe]
        .into_iter()
        .find(|i| intensity_name(*i) == s.trim().to_ascii_lowercase())
}

fn check_phrase(p: &str) -> Result<(), String> {
    if p.trim().is_empty() {
        return Err("empty caption phrase".into());
    }
    if p != p.trim() {
        return Err(format!("caption {p:?} has surrounding whitespace"));
    }
    // Phrases travel inside `Clues: a; b` and inside tags.
    if p.contains([';', '<', '>', '\n', '\r']) {
        return Err(format!("caption {p:?} contains a reserved character"));
    }
    Ok(())
}

fn convert(index: usize, raw: RawEntry) -> Result<CaptionEntry, CaptionError> {
    let err = |reason: String| CaptionError::TableFormat { index, reason };
    let region = if raw.region.trim() == WILDCARD {
        None
    } else {
        Some(RegionId::from_alias(&raw.region).ok_or_else(|| err(format!("unknown region {:?}", raw.region)))?)
    };
    let factor = parse_factor(&raw.factor).ok_or_else(|| err(format!("unknown factor {:?}", raw.factor)))?;
    let intensity = if raw.intensity.trim() == WILDCARD {
        None
    } else {
        Some(parse_intensity(&raw.intensity).ok_or_else(|| err(format!("unknown intensity {:?}", raw.intensity)))?)
    };
    if !(raw.threshold >= 0.0) || !raw.threshold.is_finite() {
        return Err(err(format!("threshold {} must be finite and >= 0", raw.threshold)));
    }
    if raw.captions.is_empty() {
        return Err(err("captions list is empty".into()));
    }
    let mut seen = BTreeSet::new();
    for c in &raw.captions {
        check_phrase(c).map_err(err)?;
        if !seen.insert(c.as_str()) {
            return Err(err(format!("duplicate caption {c:?}")));
        }
    }
    Ok(CaptionEntry { region, factor, intensity, threshold: raw.threshold, captions: raw.captions })
}

/// Parses and validates a caption table document.
pub fn load_caption_table(mut source: impl Read) -> Result<CaptionTable, CaptionError> {
    let mut text = String::new();
    source.read_to_string(&mut text).map_err(|e| CaptionError::Document(e.to_string()))?;
    let raw: RawTable = serde_json::from_str(&text).map_err(|e| CaptionError::Document(e.to_string()))?;
    let version = raw
        .caption_table_version
        .filter(|v| !v.trim().is_empty())
        .ok_or_else(|| CaptionError::Document("missing caption_table_version".into()))?;
    let entries = raw
        .entries
        .into_iter()
        .enumerate()
        .map(|(i, e)| convert(i, e))
        .collect::<Result<Vec<_>, _>>()?;
    for f in Factor::ALL {
        if !entries.iter().any(|e| e.factor == f) {
            return Err(CaptionError::Document(format!("factor {} has no entry", f.as_str())));
        }
    }
    Ok(CaptionTable { version, entries })
}

/// The table bundled with the crate.
pub fn default_caption_table() -> &'static CaptionTable {
    static TABLE: OnceLock<CaptionTable> = OnceLock::new();
    TABLE.get_or_init(|| load_caption_table(BUNDLED.as_bytes()).expect("bundled caption table is valid"))
}
