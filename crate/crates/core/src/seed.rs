use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0100_0000_01b3;

/// FNV-1a over the seed and a request key. Stable across platforms and
/// releases, unlike `std`'s hashers.
pub fn mix(seed: u64, key: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in seed.to_le_bytes().iter().chain(key.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Independent, reproducible stream for one request.
pub fn rng_for(seed: u64, key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, key))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_depend_on_seed_and_key() {
        let a: u64 = rng_for(1, "x").random();
        assert_eq!(a, rng_for(1, "x").random::<u64>());
        assert_ne!(a, rng_for(2, "x").random::<u64>());
        assert_ne!(a, rng_for(1, "y").random::<u64>());
    }
}
