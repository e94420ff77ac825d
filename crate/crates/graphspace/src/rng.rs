//! Counter-based random bits.
//!
//! Every draw is a pure function of `(seed, sample index, bit index)`, so
//! sampling is reproducible bit-for-bit regardless of evaluation order or
//! worker count.

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform 64-bit word keyed by the full counter triple.
#[inline]
pub fn draw(seed: u64, sample: u64, bit: u64) -> u64 {
    let mut h = mix64(seed ^ 0x9e37_79b9_7f4a_7c15);
    h = mix64(h ^ sample.wrapping_mul(0xff51_afd7_ed55_8ccd));
    mix64(h ^ bit.wrapping_mul(0xc4ce_b9fe_1a85_ec53))
}

/// Bernoulli draw against a precomputed threshold in `[0, 2^64]`
/// (`threshold = floor(p * 2^64)`; `p = 1` maps to exactly `2^64` so the
/// draw is always true, `p = 0` to 0 so it never is).
#[inline]
pub fn bernoulli(seed: u64, sample: u64, bit: u64, threshold: u128) -> bool {
    (draw(seed, sample, bit) as u128) < threshold
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_keyed() {
        assert_eq!(draw(1, 2, 3), draw(1, 2, 3));
        assert_ne!(draw(1, 2, 3), draw(1, 2, 4));
        assert_ne!(draw(1, 2, 3), draw(1, 3, 3));
        assert_ne!(draw(1, 2, 3), draw(2, 2, 3));
    }

    #[test]
    fn threshold_edges() {
        for bit in 0..100 {
            assert!(bernoulli(7, 0, bit, 1u128 << 64));
            assert!(!bernoulli(7, 0, bit, 0));
        }
    }

    #[test]
    fn roughly_uniform() {
        let n = 100_000;
        let ones: u32 = (0..n).map(|i| bernoulli(42, i, 0, 1u128 << 63) as u32).sum();
        let f = ones as f64 / n as f64;
        assert!((f - 0.5).abs() < 0.01, "frequency {f}");
    }
}
