/// SplitMix64, the generator behind every random draw in the crate.
///
/// Bounded integers use rejection sampling on the high bits, so the stream
/// of values is identical on every platform.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `0..bound`. Panics on `bound == 0`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        if bound == 1 {
            return 0;
        }
        let bits = 64 - (bound - 1).leading_zeros();
        loop {
            let x = self.next_u64() >> (64 - bits);
            if x < bound {
                return x;
            }
        }
    }

    pub fn below_usize(&mut self, bound: usize) -> usize {
        self.below(bound as u64) as usize
    }

    /// Uniform in `lo..=hi`.
    pub fn inclusive(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below_usize(hi - lo + 1)
    }

    /// `r` distinct values from `0..n` by a partial Fisher–Yates shuffle, in
    /// draw order.
    pub fn sample_distinct(&mut self, n: usize, r: usize) -> Vec<usize> {
        assert!(r <= n, "cannot draw {r} distinct values from {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..r {
            let j = i + self.below_usize(n - i);
            pool.swap(i, j);
        }
        pool.truncate(r);
        pool
    }

    /// An independent stream seeded from this one.
    pub fn fork(&mut self) -> SplitMix64 {
        SplitMix64::new(self.next_u64())
    }
}

/// Seed of the `index`-th sub-stream of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut g = SplitMix64::new(master ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    g.next_u64()
}
