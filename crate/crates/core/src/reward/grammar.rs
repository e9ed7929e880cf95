use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::region::RegionId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    #[serde(alias = "Real", alias = "REAL")]
    Real,
    #[serde(alias = "Fake", alias = "FAKE")]
    Fake,
}

impl Label {
    pub fn as_answer(self) -> &'static str {
        match self {
            Label::Real => "Real",
            Label::Fake => "Fake",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_answer())
    }
}

/// Tag names of the three response sections.
#[derive(Debug, Clone, Copy)]
pub struct Tags {
    pub think: &'static str,
    pub key: &'static str,
    pub answer: &'static str,
}

pub const TAGS: Tags = Tags {
    think: "think",
    key: "key",
    answer: "answer",
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    MissingTag(String),
    DuplicateTag(String),
    OrderViolation { tag: String, expected_after: String },
    StrayText,
    MalformedKey(String),
    UnknownAnswer(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::MissingTag(t) => write!(f, "missing tag {t}"),
            ParseErrorKind::DuplicateTag(t) => write!(f, "duplicated tag {t}"),
            ParseErrorKind::OrderViolation { tag, expected_after } => {
                write!(f, "order violation: {tag} must come after {expected_after}")
            }
            ParseErrorKind::StrayText => f.write_str("text outside the tagged sections"),
            ParseErrorKind::MalformedKey(why) => write!(f, "malformed key section: {why}"),
            ParseErrorKind::UnknownAnswer(a) => write!(f, "unknown answer `{a}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub think_text: String,
    pub regions: BTreeSet<RegionId>,
    pub clues: Vec<String>,
    pub answer: Label,
    pub token_count: usize,
    /// Region names that did not resolve to the vocabulary.
    pub unknown_regions: Vec<String>,
}

/// Whitespace token count used by the length reward.
pub fn whitespace_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Lowercased alphanumeric tokens; every other character separates.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn err(offset: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { offset, kind }
}

/// Parses `<think>..</think><key>..</key><answer>..</answer>`; only
/// whitespace may surround the sections.
pub fn parse_response(text: &str) -> Result<ParsedResponse, ParseError> {
    let names = [TAGS.think, TAGS.key, TAGS.answer];
    let markers: Vec<String> = names
        .iter()
        .flat_map(|n| [format!("<{n}>"), format!("</{n}>")])
        .collect();

    let mut positions = Vec::with_capacity(markers.len());
    for m in &markers {
        let mut found = text.match_indices(m.as_str()).map(|(i, _)| i);
        let first = found
            .next()
            .ok_or_else(|| err(text.len(), ParseErrorKind::MissingTag(m.clone())))?;
        if let Some(second) = found.next() {
            return Err(err(second, ParseErrorKind::DuplicateTag(m.clone())));
        }
        positions.push(first);
    }
    for i in 1..markers.len() {
        let prev_end = positions[i - 1] + markers[i - 1].len();
        if positions[i] < prev_end {
            return Err(err(
                positions[i],
                ParseErrorKind::OrderViolation {
                    tag: markers[i].clone(),
                    expected_after: markers[i - 1].clone(),
                },
            ));
        }
    }

    // Between sections: leading text, think/key gap, key/answer gap, trailing text.
    let gaps = [
        (0, positions[0]),
        (positions[1] + markers[1].len(), positions[2]),
        (positions[3] + markers[3].len(), positions[4]),
        (positions[5] + markers[5].len(), text.len()),
    ];
    for (start, end) in gaps {
        if let Some(off) = text[start..end].find(|c: char| !c.is_whitespace()) {
            return Err(err(start + off, ParseErrorKind::StrayText));
        }
    }

    let body = |i: usize| {
        let start = positions[2 * i] + markers[2 * i].len();
        (start, &text[start..positions[2 * i + 1]])
    };
    let (_, think) = body(0);
    let (key_start, key) = body(1);
    let (answer_start, answer) = body(2);

    let (regions, unknown_regions, clues) = parse_key(key).map_err(|(off, why)| err(key_start + off, why))?;
    let answer = match answer.trim().to_lowercase().as_str() {
        "real" => Label::Real,
        "fake" => Label::Fake,
        other => {
            return Err(err(answer_start, ParseErrorKind::UnknownAnswer(other.to_string())));
        }
    };

    Ok(ParsedResponse {
        think_text: think.trim().to_string(),
        regions,
        clues,
        answer,
        token_count: whitespace_tokens(text),
        unknown_regions,
    })
}

fn is_none_marker(s: &str) -> bool {
    matches!(s.trim().to_lowercase().as_str(), "" | "none" | "n/a")
}

type KeyParts = (BTreeSet<RegionId>, Vec<String>, Vec<String>);

/// `Regions: a, b; Clues: p1; p2`
fn parse_key(body: &str) -> Result<KeyParts, (usize, ParseErrorKind)> {
    let lower = body.to_lowercase();
    let lead = body.len() - body.trim_start().len();
    if !lower[lead..].starts_with("regions:") {
        return Err((lead, ParseErrorKind::MalformedKey("expected `Regions:`".into())));
    }
    let regions_start = lead + "regions:".len();
    let clues_at = lower
        .find("clues:")
        .filter(|&i| i >= regions_start)
        .ok_or((regions_start, ParseErrorKind::MalformedKey("expected `Clues:`".into())))?;
    let between = body[regions_start..clues_at].trim_end();
    let region_list = between
        .strip_suffix(';')
        .ok_or((clues_at, ParseErrorKind::MalformedKey("expected `;` before `Clues:`".into())))?;

    let mut regions = BTreeSet::new();
    let mut unknown = Vec::new();
    if !is_none_marker(region_list) {
        for name in region_list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match RegionId::from_alias(name) {
                Some(r) => {
                    regions.insert(r);
                }
                None => unknown.push(name.to_string()),
            }
        }
    }

    let clue_text = &body[clues_at + "clues:".len()..];
    let clues = if is_none_marker(clue_text) {
        Vec::new()
    } else {
        clue_text
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect()
    };
    Ok((regions, unknown, clues))
}
