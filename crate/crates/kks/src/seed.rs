//! Deterministic seed derivation. All randomness in a study flows from a
//! single root seed, split per (cell, game, agent, ...) so one number
//! reproduces an entire run.

/// Derives a child seed from a root seed and a list of tag words.
pub fn derive(root: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix64(root ^ 0x9E37_79B9_7F4A_7C15);
    for &t in tags {
        h = splitmix64(h ^ t.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    }
    h
}

/// Stable 64-bit FNV-1a hash for tagging seeds with strings.
pub fn hash_str(s: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
