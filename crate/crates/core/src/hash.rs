//! Stable 64-bit hashing.
//!
//! `std::collections::hash_map::DefaultHasher` is not stable across Rust
//! releases, and split assignment, pseudonyms and token features must be
//! reproducible from persisted artifacts. FNV-1a followed by the splitmix64
//! finalizer gives a fixed, well-mixed 64-bit value.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn stable_hash64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    mix64(h)
}

/// Hash of a 64-bit key (little-endian) followed by a string, with a 0xff
/// separator so `(1, "2")` and `(12, "")` cannot collide structurally.
pub fn keyed_hash64(key: u64, text: &str) -> u64 {
    let mut buf = Vec::with_capacity(9 + text.len());
    buf.extend_from_slice(&key.to_le_bytes());
    buf.push(0xff);
    buf.extend_from_slice(text.as_bytes());
    stable_hash64(&buf)
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
