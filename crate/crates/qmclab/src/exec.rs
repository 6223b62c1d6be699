//! Chunked execution of Monte Carlo and sweep kernels.
//!
//! Every heavy loop in this crate is written as a map over chunk indices,
//! where each chunk derives its own RNG stream from `(seed, chunk_index)`.
//! Results are combined in chunk-index order, so the outcome is a
//! deterministic function of `(seed, chunk_count)` — identical whether the
//! chunks run sequentially or on a rayon pool, and identical across thread
//! counts.
//!
//! The `parallel` feature (on by default) routes [`ExecMode::Auto`] through
//! rayon; without it the crate falls back to plain sequential iteration.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of Monte Carlo samples per chunk used by the built-in kernels.
pub const CHUNK_SAMPLES: u64 = 1 << 16;

/// How a chunked kernel is executed. The mode never affects results, only
/// which scheduler runs the chunks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    /// Run chunks on the rayon pool when the `parallel` feature is enabled,
    /// otherwise sequentially.
    Auto,
    /// Force plain sequential iteration (used by benchmarks as the baseline).
    Sequential,
}

/// Map `f` over `0..chunks` and collect results in chunk order.
pub fn map_chunks<T, F>(mode: ExecMode, chunks: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match mode {
        ExecMode::Sequential => (0..chunks).map(f).collect(),
        ExecMode::Auto => map_chunks_auto(chunks, f),
    }
}

#[cfg(feature = "parallel")]
fn map_chunks_auto<T, F>(chunks: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..chunks).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_chunks_auto<T, F>(chunks: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..chunks).map(f).collect()
}

/// Split `samples` draws into chunks of [`CHUNK_SAMPLES`], returning
/// `(chunk_count, sizes)` with every size positive and summing to `samples`.
pub fn plan_chunks(samples: u64) -> (u64, Vec<u64>) {
    if samples == 0 {
        return (0, Vec::new());
    }
    let chunks = samples.div_ceil(CHUNK_SAMPLES);
    let sizes: Vec<u64> = (0..chunks)
        .map(|c| {
            let lo = c * CHUNK_SAMPLES;
            let hi = ((c + 1) * CHUNK_SAMPLES).min(samples);
            hi - lo
        })
        .collect();
    (chunks, sizes)
}

/// RNG for chunk `chunk` of the stream family identified by `(seed, stream)`.
///
/// `stream` separates independent uses of the same user-facing seed inside one
/// operation (e.g. net centers vs. pair sampling); `chunk` walks ChaCha's
/// 64-bit stream space so chunks never overlap.
pub fn chunk_rng(seed: u64, stream: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Streams are spaced 2^32 apart; no operation uses anywhere near 2^32 chunks.
    rng.set_stream(stream.wrapping_mul(1 << 32).wrapping_add(chunk));
    rng
}

/// Mean and the 95% confidence half-width of `sum / n` given chunkwise sums.
///
/// `sum` and `sumsq` are totals of the samples and their squares; the half
/// width is `1.96 * sqrt(sample_var / n)`.
pub fn mean_ci95(sum: f64, sumsq: f64, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let var = ((sumsq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    (mean, 1.96 * (var / nf).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_plan_covers_all_samples() {
        let (chunks, sizes) = plan_chunks(3 * CHUNK_SAMPLES + 17);
        assert_eq!(chunks, 4);
        assert_eq!(sizes.iter().sum::<u64>(), 3 * CHUNK_SAMPLES + 17);
        assert!(sizes.iter().all(|&s| s > 0));

        let (chunks, sizes) = plan_chunks(0);
        assert_eq!(chunks, 0);
        assert!(sizes.is_empty());

        let (chunks, sizes) = plan_chunks(1);
        assert_eq!(chunks, 1);
        assert_eq!(sizes, vec![1]);
    }

    #[test]
    fn modes_agree_and_preserve_order() {
        let seq = map_chunks(ExecMode::Sequential, 64, |c| c * c);
        let auto = map_chunks(ExecMode::Auto, 64, |c| c * c);
        assert_eq!(seq, auto);
        assert_eq!(seq[63], 63 * 63);
    }

    #[test]
    fn chunk_rngs_are_distinct_and_reproducible() {
        use rand::RngCore;
        let a = chunk_rng(7, 1, 0).next_u64();
        let b = chunk_rng(7, 1, 1).next_u64();
        let c = chunk_rng(7, 2, 0).next_u64();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, chunk_rng(7, 1, 0).next_u64());
    }

    #[test]
    fn mean_ci_matches_hand_computation() {
        // Samples 1, 2, 3: mean 2, sample variance 1, ci = 1.96/sqrt(3).
        let (mean, ci) = mean_ci95(6.0, 14.0, 3);
        assert!((mean - 2.0).abs() < 1e-15);
        assert!((ci - 1.96 / 3.0_f64.sqrt()).abs() < 1e-12);
    }
}
