//! Seeded random streams. Every sample gets its own stream seeded with
//! `master_seed + index` so parallel workers never share generator state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SampleRng = ChaCha8Rng;

pub fn stream(master_seed: u64, index: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(master_seed.wrapping_add(index))
}

pub fn seeded(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws an index with probability proportional to `weights`.
///
/// Returns `None` when no weight is positive.
pub fn weighted_index<R: rand::Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().filter(|w| **w > 0.0).sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    let mut target = rng.random::<f64>() * total;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = Some(i);
        if target < w {
            return Some(i);
        }
        target -= w;
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_are_never_drawn() {
        let mut rng = seeded(7);
        for _ in 0..1000 {
            let i = weighted_index(&mut rng, &[0.0, 1.0, 0.0, 3.0]).unwrap();
            assert!(i == 1 || i == 3);
        }
        assert_eq!(weighted_index(&mut rng, &[0.0, 0.0]), None);
        assert_eq!(weighted_index(&mut rng, &[]), None);
    }

    #[test]
    fn streams_differ_by_index() {
        use rand::Rng;
        let a: u64 = stream(42, 0).random();
        let b: u64 = stream(42, 1).random();
        let c: u64 = stream(43, 0).random();
        assert_ne!(a, b);
        assert_eq!(b, c);
    }
}
