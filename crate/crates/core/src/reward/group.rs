/// Group size used by the reference training setup.
pub const DEFAULT_GROUP_SIZE: usize = 8;
pub const ADVANTAGE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("group of {0} rewards is too small; need at least 2")]
pub struct GroupError(pub usize);

/// `(r - mean) / (std + eps)` with the population standard deviation.
/// A group of identical rewards gets all-zero advantages.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>, GroupError> {
    if rewards.len() < 2 {
        return Err(GroupError(rewards.len()));
    }
    if rewards.iter().all(|r| *r == rewards[0]) {
        return Ok(vec![0.0; rewards.len()]);
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let denom = var.sqrt() + ADVANTAGE_EPS;
    Ok(rewards.iter().map(|r| (r - mean) / denom).collect())
}
