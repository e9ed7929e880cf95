use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::grammar::{parse_response, tokenize, whitespace_tokens, Label, ParseError, ParsedResponse};
use crate::region::RegionId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub label: Label,
    pub regions: BTreeSet<RegionId>,
    pub keywords: Vec<String>,
    /// Inclusive `[min, max]` whitespace tokens.
    pub length_bounds: [usize; 2],
}

impl GroundTruth {
    pub fn real(length_bounds: [usize; 2]) -> Self {
        GroundTruth {
            label: Label::Real,
            regions: BTreeSet::new(),
            keywords: Vec::new(),
            length_bounds,
        }
    }

    pub fn fake(
        regions: impl IntoIterator<Item = RegionId>,
        keywords: impl IntoIterator<Item = impl Into<String>>,
        length_bounds: [usize; 2],
    ) -> Self {
        GroundTruth {
            label: Label::Fake,
            regions: regions.into_iter().collect(),
            keywords: keywords.into_iter().map(Into::into).collect(),
            length_bounds,
        }
    }

    /// Real samples carry no regions or keywords; bounds satisfy `0 < min < max`.
    pub fn validate(&self) -> Result<(), String> {
        if self.label == Label::Real && (!self.regions.is_empty() || !self.keywords.is_empty()) {
            return Err("real ground truth must have no regions or keywords".into());
        }
        let [lo, hi] = self.length_bounds;
        if lo == 0 || lo >= hi {
            return Err(format!("length bounds [{lo}, {hi}] must satisfy 0 < min < max"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct RewardConfig {
    /// Weight of region Jaccard against clue ROUGE-L inside the keyword reward.
    pub lambda: f64,
    pub length_bounds: [usize; 2],
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            lambda: 0.5,
            length_bounds: [48, 320],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_acc: f64,
    pub r_format: f64,
    pub r_key: f64,
    pub r_len: f64,
    pub r_total: f64,
}

impl RewardBreakdown {
    /// Total is the plain sum in a fixed order.
    pub fn from_components(r_acc: f64, r_format: f64, r_key: f64, r_len: f64) -> Self {
        RewardBreakdown {
            r_acc,
            r_format,
            r_key,
            r_len,
            r_total: r_acc + r_format + r_key + r_len,
        }
    }
}

pub fn reward_accuracy(parsed: Result<&ParsedResponse, &ParseError>, gt: &GroundTruth) -> f64 {
    match parsed {
        Ok(p) if p.answer == gt.label => 1.0,
        _ => 0.0,
    }
}

pub fn reward_format(text: &str) -> f64 {
    if parse_response(text).is_ok() {
        1.0
    } else {
        0.0
    }
}

/// `|pred & gt| / |pred | gt|`, with two empty sets scoring 1.
pub fn jaccard_regions(pred: &BTreeSet<RegionId>, gt: &BTreeSet<RegionId>) -> f64 {
    let union = pred.union(gt).count();
    if union == 0 {
        return 1.0;
    }
    pred.intersection(gt).count() as f64 / union as f64
}

fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F1 on token sequences. Both empty scores 1, one empty scores 0.
pub fn rouge_l_f1<T: PartialEq>(pred: &[T], gt: &[T]) -> f64 {
    match (pred.is_empty(), gt.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let lcs = lcs_len(pred, gt) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / pred.len() as f64;
    let r = lcs / gt.len() as f64;
    2.0 * p * r / (p + r)
}

fn phrase_tokens(phrases: &[String]) -> Vec<String> {
    phrases.iter().flat_map(|p| tokenize(p)).collect()
}

/// `lambda * jaccard(regions) + (1 - lambda) * rouge_l(clues, keywords)`.
pub fn reward_keyword(parsed: Result<&ParsedResponse, &ParseError>, gt: &GroundTruth, lambda: f64) -> f64 {
    let Ok(p) = parsed else { return 0.0 };
    let lambda = lambda.clamp(0.0, 1.0);
    let jac = jaccard_regions(&p.regions, &gt.regions);
    let rouge = rouge_l_f1(&phrase_tokens(&p.clues), &phrase_tokens(&gt.keywords));
    (lambda * jac + (1.0 - lambda) * rouge).clamp(0.0, 1.0)
}

/// 1 inside `[min, max]`; ramps linearly to 0 over `min` tokens below and
/// `max / 2` tokens above.
pub fn reward_length(token_count: usize, [lo, hi]: [usize; 2]) -> f64 {
    let n = token_count as f64;
    let (lo, hi) = (lo as f64, hi as f64);
    let r = if n < lo {
        if lo > 0.0 {
            n / lo
        } else {
            1.0
        }
    } else if n > hi {
        let margin = hi / 2.0;
        if margin > 0.0 {
            1.0 - (n - hi) / margin
        } else {
            0.0
        }
    } else {
        1.0
    };
    r.clamp(0.0, 1.0)
}

/// Scores one response. An unparseable response keeps only its length reward.
pub fn total_reward(text: &str, gt: &GroundTruth, config: &RewardConfig) -> RewardBreakdown {
    let parsed = parse_response(text);
    let r_len = reward_length(whitespace_tokens(text), gt.length_bounds);
    match &parsed {
        Ok(p) => {
            let ok = Ok(p);
            RewardBreakdown::from_components(
                reward_accuracy(ok, gt),
                1.0,
                reward_keyword(ok, gt, config.lambda),
                reward_length(p.token_count, gt.length_bounds),
            )
        }
        Err(_) => RewardBreakdown::from_components(0.0, 0.0, 0.0, r_len),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rs: &[RegionId]) -> BTreeSet<RegionId> {
        rs.iter().copied().collect()
    }

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn jaccard_examples() {
        use RegionId::*;
        assert_eq!(jaccard_regions(&set(&[Nose]), &set(&[Nose])), 1.0);
        assert_eq!(jaccard_regions(&set(&[Nose, Mouth]), &set(&[Nose])), 0.5);
        assert_eq!(jaccard_regions(&set(&[]), &set(&[])), 1.0);
        assert_eq!(jaccard_regions(&set(&[LeftEye]), &set(&[])), 0.0);
    }

    #[test]
    fn rouge_examples() {
        assert_eq!(rouge_l_f1(&toks("a b c"), &toks("a b c")), 1.0);
        assert_eq!(rouge_l_f1(&toks("a b"), &toks("c d")), 0.0);
        assert_eq!(rouge_l_f1::<String>(&[], &[]), 1.0);
        assert_eq!(rouge_l_f1(&toks(""), &toks("x")), 0.0);
        // LCS("nose color mismatch", "color mismatch around nose") = 2, P = 2/3, R = 2/4.
        let v = rouge_l_f1(&toks("nose color mismatch"), &toks("color mismatch around nose"));
        assert!((v - 4.0 / 7.0).abs() < 1e-15, "{v}");
    }

    #[test]
    fn length_ramp() {
        let b = [48, 320];
        assert_eq!(reward_length((48 + 320) / 2, b), 1.0);
        assert_eq!(reward_length(0, b), 0.0);
        assert_eq!(reward_length(320 + 80, b), 0.5);
        assert_eq!(reward_length(24, b), 0.5);
        assert_eq!(reward_length(48, b), 1.0);
        assert_eq!(reward_length(320, b), 1.0);
        assert_eq!(reward_length(480, b), 0.0);
        assert_eq!(reward_length(10_000, b), 0.0);
    }

    #[test]
    fn component_sum() {
        let b = RewardBreakdown::from_components(1.0, 1.0, 0.5, 1.0);
        assert_eq!(b.r_total, 3.5);
    }

    fn response(regions: &str, clues: &str, answer: &str, pad: usize) -> String {
        let think = vec!["observation"; pad].join(" ");
        format!("<think>{think}</think>\n<key>Regions: {regions}; Clues: {clues}</key>\n<answer>{answer}</answer>")
    }

    #[test]
    fn perfect_response_scores_four() {
        let gt = GroundTruth::fake([RegionId::Nose], ["unnatural color transition"], [48, 320]);
        let text = response("nose", "unnatural color transition", "Fake", 60);
        let b = total_reward(&text, &gt, &RewardConfig::default());
        assert_eq!(b, RewardBreakdown::from_components(1.0, 1.0, 1.0, 1.0));
        assert_eq!(b.r_total, 4.0);
    }

    #[test]
    fn unparseable_keeps_length_only() {
        let gt = GroundTruth::fake([RegionId::Nose], ["x"], [48, 320]);
        let text = response("nose", "x", "Fake", 60).replace("</answer>", "");
        let b = total_reward(&text, &gt, &RewardConfig::default());
        assert_eq!((b.r_acc, b.r_format, b.r_key), (0.0, 0.0, 0.0));
        assert_eq!(b.r_len, 1.0);
        assert_eq!(b.r_total, b.r_len);
    }

    #[test]
    fn keyword_mixing() {
        let gt = GroundTruth::fake([RegionId::Nose], ["unnatural color transition"], [48, 320]);
        let text = response("nose", "jagged edge", "Fake", 60);
        let p = parse_response(&text).unwrap();
        assert_eq!(reward_keyword(Ok(&p), &gt, 0.5), 0.5);
        let perfect = parse_response(&response("nose", "unnatural color transition", "Fake", 60)).unwrap();
        for lambda in [0.0, 0.3, 1.0] {
            assert_eq!(reward_keyword(Ok(&perfect), &gt, lambda), 1.0);
        }
        let real = GroundTruth::real([48, 320]);
        let p = parse_response(&response("", "", "Real", 60)).unwrap();
        assert_eq!(reward_keyword(Ok(&p), &real, 0.5), 1.0);
    }

    #[test]
    fn accuracy_cases() {
        let gt = GroundTruth::fake([RegionId::Nose], ["x"], [48, 320]);
        let fake = parse_response(&response("nose", "x", "Fake", 5)).unwrap();
        let real = parse_response(&response("nose", "x", "Real", 5)).unwrap();
        assert_eq!(reward_accuracy(Ok(&fake), &gt), 1.0);
        assert_eq!(reward_accuracy(Ok(&real), &gt), 0.0);
        let e = parse_response("nope").unwrap_err();
        assert_eq!(reward_accuracy(Err(&e), &gt), 0.0);
    }

    #[test]
    fn format_cases() {
        let good = response("nose", "x", "Fake", 5);
        assert_eq!(reward_format(&good), 1.0);
        assert_eq!(reward_format(&good.replace("</answer>", "")), 0.0);
        let doubled = format!("{good}<key>Regions: nose; Clues: x</key>");
        assert_eq!(reward_format(&doubled), 0.0);
    }

    #[test]
    fn ground_truth_validation() {
        let mut gt = GroundTruth::real([48, 320]);
        gt.validate().unwrap();
        gt.regions.insert(RegionId::Nose);
        assert!(gt.validate().is_err());
        assert!(GroundTruth::fake([RegionId::Nose], ["x"], [0, 5]).validate().is_err());
    }
}
