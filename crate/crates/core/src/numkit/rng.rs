//! Deterministic random number generation.
//!
//! Every stochastic step in the crate draws from this generator, a SplitMix64
//! counter generator. Pure integer arithmetic on `u64` plus IEEE-754 double
//! conversion gives bit-identical sequences on every platform, which the
//! reproducibility guarantees of the trainer and the evaluation protocols
//! rely on. Using the platform default generator would tie results to a
//! specific standard-library version.

/// SplitMix64 finalizer: a bijective avalanche mix of one 64-bit word.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Derives the seed of an independent substream from a root seed, a role tag,
/// and an index within the role. Streams for different (role, index) pairs do
/// not overlap in practice: both inputs pass through two rounds of the
/// SplitMix64 finalizer before seeding.
pub fn substream_seed(seed: u64, role: u64, index: u64) -> u64 {
    mix(mix(seed.wrapping_add(GOLDEN.wrapping_mul(role))) ^ index.wrapping_mul(GOLDEN))
}

/// Substream role tags. One namespace per independent consumer of randomness,
/// so reordering one phase of a run never disturbs another.
pub mod role {
    pub const INIT: u64 = 1;
    pub const SYNTH: u64 = 2;
    pub const PARTITION: u64 = 3;
    pub const STREAM: u64 = 4;
    pub const TRAINER: u64 = 5;
    pub const EVAL: u64 = 6;
    pub const MULTITASK: u64 = 7;
}

/// SplitMix64 generator. Single-owner: pass it by `&mut`, never share it.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
    cached_normal: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            state: seed,
            cached_normal: None,
        }
    }

    /// Next raw 64-bit draw.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, bound). Rejection sampling keeps the draw
    /// unbiased for every bound.
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "below: bound must be positive");
        let b = bound as u64;
        // 2^64 mod b; rejecting draws above the largest multiple of b
        // leaves a remainder-free range.
        let rem = (u64::MAX % b + 1) % b;
        loop {
            let r = self.next_u64();
            if r <= u64::MAX - rem {
                return (r % b) as usize;
            }
        }
    }

    /// Standard normal draw via the Box-Muller transform. Draws come in
    /// pairs; the second of each pair is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        // Shift into (0, 1] so the logarithm stays finite.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.cached_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Samples `k` distinct values from [0, n) by a partial Fisher-Yates
    /// shuffle. The result preserves sampling order.
    pub fn choose_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "choose_distinct: k={k} exceeds n={n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_seeds_agree_on_ten_thousand_draws() {
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        for _ in 0..10_000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn different_seeds_diverge() {
        let mut a = Rng::new(1);
        let mut b = Rng::new(2);
        let same = (0..100).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn next_f64_stays_in_unit_interval() {
        let mut rng = Rng::new(9);
        for _ in 0..10_000 {
            let v = rng.next_f64();
            assert!((0.0..1.0).contains(&v));
        }
    }

    #[test]
    fn below_is_roughly_uniform() {
        let mut rng = Rng::new(13);
        let mut counts = [0usize; 7];
        let draws = 70_000;
        for _ in 0..draws {
            counts[rng.below(7)] += 1;
        }
        let expected = draws as f64 / 7.0;
        for &c in &counts {
            assert!(
                (c as f64 - expected).abs() < 5.0 * expected.sqrt(),
                "bucket count {c} too far from {expected}"
            );
        }
    }

    #[test]
    fn below_covers_full_range() {
        let mut rng = Rng::new(99);
        let mut seen = [false; 5];
        for _ in 0..1_000 {
            seen[rng.below(5)] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn normal_moments_are_sane() {
        let mut rng = Rng::new(17);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let z = rng.normal();
            sum += z;
            sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.02, "mean drifted: {mean}");
        assert!((var - 1.0).abs() < 0.03, "variance drifted: {var}");
    }

    #[test]
    fn choose_distinct_returns_distinct_values() {
        let mut rng = Rng::new(3);
        for _ in 0..200 {
            let k = 1 + rng.below(10);
            let n = k + rng.below(10);
            let picks = rng.choose_distinct(n, k);
            assert_eq!(picks.len(), k);
            let mut sorted = picks.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), k, "duplicates in {picks:?}");
            assert!(picks.iter().all(|&p| p < n));
        }
    }

    #[test]
    fn choose_distinct_is_uniform_over_singletons() {
        let mut rng = Rng::new(29);
        let mut counts = [0usize; 6];
        let draws = 60_000;
        for _ in 0..draws {
            counts[rng.choose_distinct(6, 1)[0]] += 1;
        }
        let expected = draws as f64 / 6.0;
        for &c in &counts {
            assert!((c as f64 - expected).abs() < 5.0 * expected.sqrt());
        }
    }

    #[test]
    fn substreams_differ_by_role_and_index() {
        let s = 1234;
        let a = substream_seed(s, role::STREAM, 0);
        let b = substream_seed(s, role::STREAM, 1);
        let c = substream_seed(s, role::TRAINER, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(b, c);
        assert_eq!(a, substream_seed(s, role::STREAM, 0));
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = Rng::new(77);
        let mut v: Vec<usize> = (0..50).collect();
        rng.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
    }
}
