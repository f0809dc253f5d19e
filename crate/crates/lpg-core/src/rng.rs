//! Seeded random streams. Every stage that needs randomness draws from a
//! named substream of one top-level seed, so stages reproduce
//! independently of each other.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives a generator from `(seed, name)`. The name is folded into the
/// key with FNV-1a so distinct stage names give unrelated streams.
pub fn substream(seed: u64, name: &str) -> ChaCha8Rng {
    const FNV_OFFSET: u64 = 0xcbf29ce484222325;
    const FNV_PRIME: u64 = 0x100000001b3;
    let mut hash = FNV_OFFSET;
    for byte in name.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&hash.to_le_bytes());
    key[16..24].copy_from_slice(&seed.rotate_left(32).to_le_bytes());
    key[24..32].copy_from_slice(&hash.rotate_left(32).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn same_inputs_same_stream() {
        let mut a = substream(7, "split");
        let mut b = substream(7, "split");
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn names_separate_streams() {
        let mut a = substream(7, "split");
        let mut b = substream(7, "init");
        assert_ne!(a.next_u64(), b.next_u64());
    }
}
