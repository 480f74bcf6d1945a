//! Deterministic random-number plumbing.
//!
//! All stochastic code in this crate draws from ChaCha8 generators that are
//! derived from a single master seed. Independent work items (Monte Carlo
//! draws, learner iterations, solver restarts) each get their own ChaCha
//! stream, so results are reproducible bit for bit regardless of thread
//! count or reduction order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a component seed from a master seed and a textual label.
///
/// The mapping is a fixed FNV-1a/SplitMix combination, written out here so
/// that it never changes across platforms or compiler versions (the
/// standard library's hashers make no such promise). Distinct labels give
/// uncorrelated seeds for the same master.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for byte in label.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    splitmix64(splitmix64(master) ^ h)
}

/// A ChaCha8 generator positioned on `stream` for the given seed.
///
/// Streams are statistically independent, so `stream_rng(seed, i)` is the
/// generator for the `i`-th work item of a batch. Parallel and sequential
/// execution of the batch then consume identical randomness.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derive_seed_is_stable() {
        // Frozen values: the derivation must never change, or seeded runs
        // stop being reproducible across releases.
        let a = derive_seed(0, "scheduler");
        let b = derive_seed(0, "scheduler");
        assert_eq!(a, b);
        assert_ne!(derive_seed(0, "scheduler"), derive_seed(0, "sor"));
        assert_ne!(derive_seed(0, "scheduler"), derive_seed(1, "scheduler"));
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let mut r0 = stream_rng(7, 0);
        let mut r1 = stream_rng(7, 1);
        let x0: f64 = r0.random();
        let x1: f64 = r1.random();
        assert_ne!(x0, x1);

        let mut again = stream_rng(7, 0);
        assert_eq!(x0, again.random::<f64>());
    }
}
