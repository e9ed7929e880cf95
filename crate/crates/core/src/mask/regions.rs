use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Deserialize;

use super::{convex_hull, LandmarkSet81, MaskError, Point, Polygon};
use crate::region::RegionId;

const REGION_TABLE_JSON: &str = include_str!("../../data/region_indices.json");

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum IndexSpec {
    List(Vec<usize>),
    Keyword(String),
}

#[derive(Debug, Clone, Deserialize)]
struct ForeheadRule {
    lift_fraction_of_brow_to_chin: f64,
    chin_index: usize,
}

#[derive(Debug, Clone, Deserialize)]
struct RawTable {
    region_table_version: String,
    forehead_rule: ForeheadRule,
    regions: BTreeMap<String, IndexSpec>,
}

/// Landmark-index subsets per region, loaded from the bundled data file.
#[derive(Debug, Clone)]
pub struct RegionTable {
    pub version: String,
    indices: BTreeMap<RegionId, Vec<usize>>,
    forehead_lift: f64,
    chin_index: usize,
}

impl RegionTable {
    fn parse(text: &str) -> Result<Self, String> {
        let raw: RawTable = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut indices = BTreeMap::new();
        for (name, spec) in raw.regions {
            let id = RegionId::from_alias(&name).ok_or_else(|| format!("unknown region {name}"))?;
            let list = match spec {
                IndexSpec::List(v) => v,
                IndexSpec::Keyword(k) if k == "all" => (0..81).collect(),
                IndexSpec::Keyword(k) if k == "derived" => Vec::new(),
                IndexSpec::Keyword(k) => return Err(format!("bad index spec {k} for {name}")),
            };
            if list.iter().any(|&i| i >= 81) {
                return Err(format!("index out of range for {name}"));
            }
            indices.insert(id, list);
        }
        Ok(RegionTable {
            version: raw.region_table_version,
            indices,
            forehead_lift: raw.forehead_rule.lift_fraction_of_brow_to_chin,
            chin_index: raw.forehead_rule.chin_index,
        })
    }

    pub fn indices(&self, region: RegionId) -> &[usize] {
        self.indices.get(&region).map(Vec::as_slice).unwrap_or(&[])
    }

    fn brow_indices(&self) -> Vec<usize> {
        let mut v = self.indices(RegionId::RightEyebrow).to_vec();
        v.extend_from_slice(self.indices(RegionId::LeftEyebrow));
        v
    }

    /// Source points for `region` before hulling.
    pub fn region_points(&self, landmarks: &LandmarkSet81, region: RegionId) -> Vec<Point> {
        let pts = landmarks.points();
        if region != RegionId::Forehead {
            return self.indices(region).iter().map(|&i| pts[i]).collect();
        }
        // Brow line plus a copy lifted by a fraction of the brow-to-chin extent.
        let brows: Vec<Point> = self.brow_indices().iter().map(|&i| pts[i]).collect();
        let brow_y = brows.iter().map(|p| p.y).sum::<f64>() / brows.len().max(1) as f64;
        let lift = self.forehead_lift * (pts[self.chin_index].y - brow_y).max(0.0);
        let mut out = brows.clone();
        out.extend(brows.iter().map(|p| Point::new(p.x, (p.y - lift).max(0.0))));
        out
    }
}

pub fn region_table() -> &'static RegionTable {
    static TABLE: OnceLock<RegionTable> = OnceLock::new();
    TABLE.get_or_init(|| RegionTable::parse(REGION_TABLE_JSON).expect("bundled region table is valid"))
}

/// Convex polygon covering `region` for this face.
pub fn region_polygon(landmarks: &LandmarkSet81, region: RegionId) -> Result<Polygon, MaskError> {
    let pts = region_table().region_points(landmarks, region);
    convex_hull(&pts).ok_or(MaskError::DegenerateRegion(region))
}
