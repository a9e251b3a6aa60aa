//! Small numeric helpers shared across estimators and simulation.

use statrs::distribution::{ContinuousCDF, Normal};

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

/// Two-sided normal p-value for a z statistic.
pub fn two_sided_p(z: f64) -> f64 {
    if !z.is_finite() {
        return 0.0;
    }
    let n = Normal::new(0.0, 1.0).unwrap();
    (2.0 * n.cdf(-z.abs())).clamp(0.0, 1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (xs.len() as f64 - 1.0)
}

/// Monte-Carlo standard error of the mean of `xs`.
pub fn mc_se(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Pairwise (cascade) summation: order-independent aggregation that keeps
/// replicate reports reproducible regardless of how work was partitioned.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Derives the seed for subtask `index` from a master seed.
///
/// This is the documented splitting rule used everywhere randomness fans out
/// (bootstrap replicates, simulation replicates, resamples): mix
/// `master + (index + 1) * GOLDEN` through the SplitMix64 finalizer. Each
/// subtask seeds its own generator, so results do not depend on scheduling.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
