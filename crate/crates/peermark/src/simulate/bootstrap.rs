//! Percentile bootstrap for success-rate confidence intervals.

use rand::Rng;

use super::SimError;
use crate::seed;

/// Percentile bootstrap confidence interval for a success fraction.
///
/// The observed data are `n` Bernoulli outcomes with `successes` ones. Each
/// replicate resamples `n` outcomes with replacement and takes the resampled
/// fraction; the interval is the symmetric percentile pair at `level`.
/// Deterministic under `seed_value`, and for a fixed seed the endpoints are
/// monotone in `successes` (the same uniform stream drives every replicate).
pub fn bootstrap_ci(
    successes: u64,
    n: u64,
    replicates: u64,
    level: f64,
    seed_value: u64,
) -> Result<(f64, f64), SimError> {
    if n == 0 || successes > n {
        return Err(SimError::InvalidCounts { successes, n });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(SimError::BadLevel(level));
    }
    let mut rng = seed::rng(seed_value);
    let mut stats = Vec::with_capacity(replicates as usize);
    for _ in 0..replicates {
        let mut count = 0u64;
        for _ in 0..n {
            // Resampling index i succeeds exactly when i < successes.
            if rng.random_range(0..n) < successes {
                count += 1;
            }
        }
        stats.push(count as f64 / n as f64);
    }
    stats.sort_by(f64::total_cmp);
    let q = (1.0 - level) / 2.0;
    Ok((percentile(&stats, q), percentile(&stats, 1.0 - q)))
}

/// Nearest-rank percentile of sorted data.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Coverage study: how often the bootstrap interval covers the true success
/// probability `p`, over `repetitions` synthetic datasets of size `n`.
pub fn coverage_study(
    p: f64,
    n: u64,
    repetitions: u64,
    replicates: u64,
    level: f64,
    seed_value: u64,
) -> Result<f64, SimError> {
    let mut covered = 0u64;
    for rep in 0..repetitions {
        let mut rng = seed::rng(seed::derive_indexed(seed_value, "coverage-data", rep));
        let mut successes = 0u64;
        for _ in 0..n {
            if rng.random_bool(p) {
                successes += 1;
            }
        }
        let (lo, hi) = bootstrap_ci(
            successes,
            n,
            replicates,
            level,
            seed::derive_indexed(seed_value, "coverage-boot", rep),
        )?;
        if lo <= p && p <= hi {
            covered += 1;
        }
    }
    Ok(covered as f64 / repetitions as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_all_success() {
        let (lo, hi) = bootstrap_ci(100, 100, 10_000, 0.95, 1).unwrap();
        assert_eq!((lo, hi), (1.0, 1.0));
    }

    #[test]
    fn degenerate_all_failure() {
        let (lo, hi) = bootstrap_ci(0, 50, 2_000, 0.95, 1).unwrap();
        assert_eq!((lo, hi), (0.0, 0.0));
    }

    #[test]
    fn invalid_counts_rejected() {
        assert!(matches!(
            bootstrap_ci(5, 4, 100, 0.95, 0),
            Err(SimError::InvalidCounts { .. })
        ));
        assert!(matches!(
            bootstrap_ci(0, 0, 100, 0.95, 0),
            Err(SimError::InvalidCounts { .. })
        ));
        assert!(matches!(
            bootstrap_ci(1, 4, 100, 1.0, 0),
            Err(SimError::BadLevel(_))
        ));
    }

    #[test]
    fn endpoints_monotone_in_successes() {
        let seed = 33;
        let mut prev = (0.0, 0.0);
        for successes in 0..=60 {
            let ci = bootstrap_ci(successes, 60, 500, 0.9, seed).unwrap();
            assert!(ci.0 + 1e-12 >= prev.0, "lower endpoint fell at {successes}");
            assert!(ci.1 + 1e-12 >= prev.1, "upper endpoint fell at {successes}");
            prev = ci;
        }
    }

    #[test]
    fn interval_brackets_the_point_estimate() {
        let (lo, hi) = bootstrap_ci(80, 100, 4_000, 0.95, 5).unwrap();
        assert!(lo <= 0.8 && 0.8 <= hi);
        assert!(hi - lo < 0.2);
    }
}
