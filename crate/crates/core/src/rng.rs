//! Reproducible random streams.
//!
//! Every transaction gets its own ChaCha8 stream keyed by
//! `SHA-256(seed as little-endian u64 || transaction id bytes)`. Weighted
//! draws take a uniform integer in `0..total_weight` (rand's widening-multiply
//! rejection sampler) and walk the cumulative weights, so a draw depends only
//! on integer arithmetic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Stream = ChaCha8Rng;

pub fn transaction_stream(seed: u64, transaction_id: &str) -> Stream {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(transaction_id.as_bytes());
    let key: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(key)
}

/// Index `i` drawn with probability `weights[i] / sum(weights)`.
///
/// Panics if the weights sum to zero.
pub fn draw_weighted<R: Rng + ?Sized>(rng: &mut R, weights: &[u64]) -> usize {
    let total: u64 = weights.iter().sum();
    assert!(total > 0, "weighted draw needs a positive total weight");
    let mut r = rng.random_range(0..total);
    for (i, &w) in weights.iter().enumerate() {
        if r < w {
            return i;
        }
        r -= w;
    }
    unreachable!("r < total")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_stable_and_distinct() {
        let a: u64 = transaction_stream(7, "T1").random();
        let b: u64 = transaction_stream(7, "T1").random();
        let c: u64 = transaction_stream(7, "T2").random();
        let d: u64 = transaction_stream(8, "T1").random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn zero_weights_never_drawn() {
        let mut rng = transaction_stream(1, "x");
        for _ in 0..1000 {
            let i = draw_weighted(&mut rng, &[0, 3, 0, 1]);
            assert!(i == 1 || i == 3);
        }
    }

    #[test]
    fn frequencies_follow_weights() {
        let mut rng = transaction_stream(2, "y");
        let mut hits = [0u32; 2];
        let n = 30_000;
        for _ in 0..n {
            hits[draw_weighted(&mut rng, &[2, 1])] += 1;
        }
        // sd of the count is sqrt(n p q) ~ 82
        let expect = n as f64 * 2.0 / 3.0;
        assert!((f64::from(hits[0]) - expect).abs() < 4.0 * 82.0, "{hits:?}");
    }
}
