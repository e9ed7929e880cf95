//! JSON request/reply payloads shared by the line-delimited and HTTP
//! scoring front ends. Reward numbers are written with 17 significant
//! digits so they survive a text round trip exactly.

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use super::{group_advantages, total_reward, GroundTruth, GroupError, Label, RewardBreakdown, RewardConfig};
use crate::region::RegionId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    #[serde(default)]
    pub id: serde_json::Value,
    pub response_text: String,
    pub gt_label: Label,
    #[serde(default)]
    pub gt_regions: Vec<String>,
    #[serde(default)]
    pub gt_keywords: Vec<String>,
    #[serde(default)]
    pub length_bounds: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRequest {
    #[serde(default)]
    pub id: serde_json::Value,
    pub items: Vec<ScoreRequest>,
}

fn precise<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if !v.is_finite() {
        return s.serialize_none();
    }
    let raw = RawValue::from_string(format!("{v:.16e}")).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

fn precise_vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct P(f64);
    impl Serialize for P {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            precise(&self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&P(*x))?;
    }
    seq.end()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReply {
    pub id: serde_json::Value,
    #[serde(serialize_with = "precise")]
    pub r_acc: f64,
    #[serde(serialize_with = "precise")]
    pub r_format: f64,
    #[serde(serialize_with = "precise")]
    pub r_key: f64,
    #[serde(serialize_with = "precise")]
    pub r_len: f64,
    #[serde(serialize_with = "precise")]
    pub r_total: f64,
}

impl ScoreReply {
    pub fn breakdown(&self) -> RewardBreakdown {
        RewardBreakdown {
            r_acc: self.r_acc,
            r_format: self.r_format,
            r_key: self.r_key,
            r_len: self.r_len,
            r_total: self.r_total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReply {
    pub id: serde_json::Value,
    pub results: Vec<ScoreReply>,
    #[serde(serialize_with = "precise_vec")]
    pub advantages: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReply {
    pub id: serde_json::Value,
    pub error: String,
}

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("unknown ground-truth region `{0}`")]
    UnknownRegion(String),
    #[error("invalid ground truth: {0}")]
    GroundTruth(String),
    #[error(transparent)]
    Group(#[from] GroupError),
}

impl ScoreRequest {
    pub fn ground_truth(&self, config: &RewardConfig) -> Result<GroundTruth, WireError> {
        let regions = self
            .gt_regions
            .iter()
            .map(|r| RegionId::from_alias(r).ok_or_else(|| WireError::UnknownRegion(r.clone())))
            .collect::<Result<_, _>>()?;
        let gt = GroundTruth {
            label: self.gt_label,
            regions,
            keywords: self.gt_keywords.clone(),
            length_bounds: self.length_bounds.unwrap_or(config.length_bounds),
        };
        gt.validate().map_err(WireError::GroundTruth)?;
        Ok(gt)
    }
}

pub fn score(req: &ScoreRequest, config: &RewardConfig) -> Result<ScoreReply, WireError> {
    let gt = req.ground_truth(config)?;
    let b = total_reward(&req.response_text, &gt, config);
    Ok(ScoreReply {
        id: req.id.clone(),
        r_acc: b.r_acc,
        r_format: b.r_format,
        r_key: b.r_key,
        r_len: b.r_len,
        r_total: b.r_total,
    })
}

pub fn score_group(req: &GroupRequest, config: &RewardConfig) -> Result<GroupReply, WireError> {
    let results = req
        .items
        .iter()
        .map(|item| score(item, config))
        .collect::<Result<Vec<_>, _>>()?;
    let totals: Vec<f64> = results.iter().map(|r| r.r_total).collect();
    let advantages = group_advantages(&totals)?;
    Ok(GroupReply {
        id: req.id.clone(),
        results,
        advantages,
    })
}

/// Handles one line of the line-delimited protocol. Objects with an `items`
/// array are group requests; everything else is a single score request.
pub fn handle_line(line: &str, config: &RewardConfig) -> String {
    let value: serde_json::Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return error_line(serde_json::Value::Null, format!("bad json: {e}")),
    };
    let id = value.get("id").cloned().unwrap_or(serde_json::Value::Null);
    let out = if value.get("items").is_some() {
        serde_json::from_value::<GroupRequest>(value)
            .map_err(|e| e.to_string())
            .and_then(|r| score_group(&r, config).map_err(|e| e.to_string()))
            .and_then(|r| serde_json::to_string(&r).map_err(|e| e.to_string()))
    } else {
        serde_json::from_value::<ScoreRequest>(value)
            .map_err(|e| e.to_string())
            .and_then(|r| score(&r, config).map_err(|e| e.to_string()))
            .and_then(|r| serde_json::to_string(&r).map_err(|e| e.to_string()))
    };
    out.unwrap_or_else(|e| error_line(id, e))
}

fn error_line(id: serde_json::Value, error: String) -> String {
    serde_json::to_string(&ErrorReply { id, error }).expect("error reply serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(text: &str) -> ScoreRequest {
        ScoreRequest {
            id: serde_json::json!("r1"),
            response_text: text.into(),
            gt_label: Label::Fake,
            gt_regions: vec!["nose".into()],
            gt_keywords: vec!["unnatural color transition".into()],
            length_bounds: Some([3, 320]),
        }
    }

    #[test]
    fn reply_numbers_have_17_significant_digits() {
        let reply = score(&request("junk"), &RewardConfig::default()).unwrap();
        let text = serde_json::to_string(&reply).unwrap();
        assert!(text.contains("\"r_total\":3.3333333333333331e-1"), "{text}");
        let back: ScoreReply = serde_json::from_str(&text).unwrap();
        assert_eq!(back, reply);
    }

    #[test]
    fn line_protocol_single_and_group() {
        let good = "<think>the nose looks off</think><key>Regions: nose; Clues: unnatural color transition</key><answer>Fake</answer>";
        let line = serde_json::to_string(&request(good)).unwrap();
        let reply: ScoreReply = serde_json::from_str(&handle_line(&line, &RewardConfig::default())).unwrap();
        assert_eq!(reply.r_total, 4.0);
        assert_eq!(reply.id, serde_json::json!("r1"));

        let group = GroupRequest {
            id: serde_json::json!(7),
            items: vec![request(good); 8],
        };
        let line = serde_json::to_string(&group).unwrap();
        let reply: GroupReply = serde_json::from_str(&handle_line(&line, &RewardConfig::default())).unwrap();
        assert_eq!(reply.advantages, vec![0.0; 8]);
    }

    #[test]
    fn errors_are_reported_inline() {
        let out = handle_line("{not json", &RewardConfig::default());
        assert!(out.contains("\"error\""));
        let mut bad = request("x");
        bad.gt_regions = vec!["chin".into()];
        let out = handle_line(&serde_json::to_string(&bad).unwrap(), &RewardConfig::default());
        assert!(out.contains("unknown ground-truth region"), "{out}");
    }
}
