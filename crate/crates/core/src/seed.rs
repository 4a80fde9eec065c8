//! Stable seed derivation for trials.
//!
//! Every trial's stream is seeded from `(master_seed, cell_id, trial_index)`.
//! The mixer is the SplitMix64 finalizer, a bijection on `u64`; chaining it
//! with XOR keeps the derived seed injective in each argument while the
//! others are held fixed.

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master_seed: u64, cell_id: u64, trial_index: u64) -> u64 {
    mix64(mix64(mix64(master_seed) ^ cell_id) ^ trial_index)
}

/// 64-bit FNV-1a, used to turn a canonical cell description into a cell id.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xCBF2_9CE4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01B3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}
