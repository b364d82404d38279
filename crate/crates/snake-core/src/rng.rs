//! Fixed 64-bit generator so games replay identically from a seed, on any
//! platform and in any implementation that copies these two constants.

/// SplitMix64: `state += 0x9E3779B97F4A7C15` per draw, output mixed with
/// Stafford's mix13 multipliers.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw from `0..bound` by rejection sampling over the smallest
    /// covering power of two, so no residue class is favored.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let mask = bound.next_power_of_two().wrapping_sub(1);
        loop {
            let r = self.next_u64() & mask;
            if r < bound {
                return r;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_a_seed() {
        let mut a = SplitMix64::new(12345);
        let mut b = SplitMix64::new(12345);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = SplitMix64::new(12346);
        assert_ne!(a.next_u64(), c.next_u64());
    }

    #[test]
    fn below_stays_in_range_and_hits_everything() {
        let mut rng = SplitMix64::new(7);
        let mut seen = [false; 7];
        for _ in 0..1000 {
            let v = rng.below(7);
            assert!(v < 7);
            seen[v as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn below_is_unbiased_enough_for_chi_squared() {
        // 3 bins, 10_000 draws: chi-squared with 2 degrees of freedom must
        // stay under the 0.01 critical value 9.21.
        let mut rng = SplitMix64::new(42);
        let mut counts = [0u32; 3];
        let draws = 10_000;
        for _ in 0..draws {
            counts[rng.below(3) as usize] += 1;
        }
        let expected = draws as f64 / 3.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 9.21, "chi2 = {chi2}, counts = {counts:?}");
    }
}
