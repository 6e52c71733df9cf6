//! Small shared helpers: deterministic scalar generation from a counter RNG
//! and a stable string hash for keying per-user random streams.

use rand_core::RngCore;

/// Maps the top 53 bits of a `u64` draw to a float in `[0, 1)`.
pub(crate) fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `[-1, 1)`.
pub(crate) fn symmetric_f64(rng: &mut impl RngCore) -> f64 {
    2.0 * unit_f64(rng) - 1.0
}

/// FNV-1a 64-bit hash. Used to key per-user split streams by user token so
/// one user's split never depends on which other users are present.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Unbiased uniform draw in `[0, bound)` by modulo rejection.
pub(crate) fn uniform_usize(rng: &mut impl RngCore, bound: usize) -> usize {
    debug_assert!(bound > 0);
    let b = bound as u64;
    let zone = u64::MAX - u64::MAX % b;
    loop {
        let x = rng.next_u64();
        if x < zone {
            return (x % b) as usize;
        }
    }
}
