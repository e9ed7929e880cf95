//! Structured-response parsing and the four-part reward
//! `total = accuracy + format + keyword + length`, plus group-relative
//! advantages.

mod grammar;
mod group;
mod score;
pub mod wire;

pub use grammar::{parse_response, tokenize, Label, ParseError, ParseErrorKind, ParsedResponse, Tags, TAGS};
pub use group::{group_advantages, GroupError, ADVANTAGE_EPS, DEFAULT_GROUP_SIZE};
pub use score::{
    jaccard_regions, reward_accuracy, reward_format, reward_keyword, reward_length, rouge_l_f1, total_reward,
    GroundTruth, RewardBreakdown, RewardConfig,
};
