//! Per-sample seeding and the SplitMix64 generator.
//!
//! Both are fixed bit-for-bit so that perturbed corpora are reproducible
//! across platforms, releases and thread schedules.

const FNV_OFFSET: u64 = 14695981039346656037;
const FNV_PRIME: u64 = 1099511628211;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// FNV-1a over `"{global_seed}\x1F{sample_id}\x1F{method}"`.
pub fn sample_seed(global_seed: u64, sample_id: &str, method: &str) -> u64 {
    let mut bytes = global_seed.to_string().into_bytes();
    bytes.push(0x1F);
    bytes.extend_from_slice(sample_id.as_bytes());
    bytes.push(0x1F);
    bytes.extend_from_slice(method.as_bytes());
    fnv1a64(&bytes)
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Unbiased integer in `0..n` by rejection sampling. Always consumes at
    /// least one draw, even for `n == 1`.
    pub fn uniform(&mut self, n: usize) -> usize {
        assert!(n > 0, "uniform(0)");
        let n = n as u64;
        // 2^64 mod n, computed without 128-bit arithmetic
        let rem = (u64::MAX % n + 1) % n;
        loop {
            let v = self.next_u64();
            if rem == 0 || v < rem.wrapping_neg() {
                return (v % n) as usize;
            }
        }
    }

    /// Uniformly random element of a non-empty slice.
    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.uniform(items.len())]
    }

    /// Fisher-Yates permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.uniform(i + 1);
            p.swap(i, j);
        }
        p
    }
}
