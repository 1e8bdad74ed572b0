//! Seeded deterministic random source.
//!
//! Every stochastic step in this crate (weight initialization, center
//! seeding, restart selection, synthetic data) draws from [`RngState`], a
//! SplitMix64 generator. The update is pure 64-bit integer arithmetic
//! (add / xor-shift / multiply), so a given seed reproduces the exact same
//! draw sequence on every platform and every run.

/// SplitMix64 generator state.
///
/// Reference: Steele, Lea & Flood, "Fast splittable pseudorandom number
/// generators" (the standard SplitMix64 constants).
#[derive(Debug, Clone)]
pub struct RngState {
    state: u64,
    gauss_spare: Option<f64>,
}

impl RngState {
    /// Creates a generator from a 64-bit seed.
    pub fn new(seed: u64) -> Self {
        RngState {
            state: seed,
            gauss_spare: None,
        }
    }

    /// Next raw 64-bit draw.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform index in `[0, n)`. `n` must be nonzero.
    ///
    /// Uses a plain modulo; the bias is below 2^-50 for any `n` this crate
    /// draws (dataset and cluster sizes), and reproducibility is the
    /// contract that matters here.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index() requires a nonempty range");
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal draw via Box-Muller (the sine twin is cached).
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(spare) = self.gauss_spare.take() {
            return spare;
        }
        // 1 - u keeps the argument of ln strictly positive.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.gauss_spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Index drawn with probability proportional to the given nonnegative
    /// weights. Falls back to the last positive-weight index when rounding
    /// walks the cumulative scan off the end. Panics if every weight is zero.
    pub fn weighted_index(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        assert!(
            total > 0.0,
            "weighted_index() requires a positive total weight"
        );
        let target = self.next_f64() * total;
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                last_positive = i;
            }
            acc += w;
            if target < acc {
                return i;
            }
        }
        last_positive
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}
