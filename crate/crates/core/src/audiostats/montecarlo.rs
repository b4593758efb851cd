use rand::distributions::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::binomtail::Direction;
use crate::error::{Error, Result};

/// Trials per partition. Partition `i` draws from stream `i` of the
/// generator seeded with the run seed, so the result does not depend on how
/// partitions are spread over workers.
pub const PARTITION_TRIALS: u64 = 1 << 16;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloResult {
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    let low = (center - half).clamp(0.0, 1.0).min(phat);
    let high = (center + half).clamp(0.0, 1.0).max(phat);
    (low, high)
}

fn run_partition(
    index: u64,
    len: u64,
    n: u64,
    k: u64,
    coin: Bernoulli,
    upper: bool,
    seed: u64,
) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut hits = 0;
    for _ in 0..len {
        let successes = (0..n).filter(|_| coin.sample(&mut rng)).count() as u64;
        if (upper && successes >= k) || (!upper && successes <= k) {
            hits += 1;
        }
    }
    hits
}

/// Estimates `P(X ≥ k)` or `P(X ≤ k)` for `X ~ Binomial(n, p)` by drawing
/// `trials` independent runs of `n` Bernoulli(`p`) outcomes.
pub fn monte_carlo_tail(
    n: u64,
    k: u64,
    p: f64,
    direction: Direction,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloResult> {
    if trials == 0 {
        return Err(Error::domain("Monte Carlo needs at least one trial"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "p must lie strictly inside (0, 1), got {p}"
        )));
    }
    if k > n {
        return Err(Error::domain(format!("threshold K = {k} exceeds n = {n}")));
    }
    let coin = Bernoulli::new(p).map_err(|e| Error::domain(e.to_string()))?;
    let upper = direction == Direction::Upper;
    let partitions = trials.div_ceil(PARTITION_TRIALS);
    let successes: u64 = (0..partitions)
        .into_par_iter()
        .map(|i| {
            let len = PARTITION_TRIALS.min(trials - i * PARTITION_TRIALS);
            run_partition(i, len, n, k, coin, upper, seed)
        })
        .sum();
    let (ci_low, ci_high) = wilson_interval(successes, trials);
    Ok(MonteCarloResult {
        trials,
        successes,
        estimate: successes as f64 / trials as f64,
        ci_low,
        ci_high,
        seed,
    })
}

/// [`monte_carlo_tail`] on a dedicated pool of `workers` threads.
pub fn monte_carlo_tail_with_workers(
    n: u64,
    k: u64,
    p: f64,
    direction: Direction,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<MonteCarloResult> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?
        .install(|| monte_carlo_tail(n, k, p, direction, trials, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binomtail::{exact_tail_parts, RationalP};
    use num_traits::ToPrimitive;

    #[test]
    fn ten_fair_trials() {
        let r = monte_carlo_tail(10, 9, 0.5, Direction::Upper, 1_000_000, 42).unwrap();
        let exact = 11.0 / 1024.0;
        assert!(r.ci_low <= exact && exact <= r.ci_high, "{r:?}");
        assert_eq!(r.estimate, r.successes as f64 / 1e6);
    }

    #[test]
    fn certain_and_closed_form_cases() {
        let r = monte_carlo_tail(7, 0, 0.3, Direction::Upper, 1000, 1).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert!(r.ci_high == 1.0 && r.ci_low < 1.0);
        let r = monte_carlo_tail(5, 5, 0.9, Direction::Upper, 100_000, 9).unwrap();
        assert!(r.ci_low <= 0.59049 && 0.59049 <= r.ci_high, "{r:?}");
        let r = monte_carlo_tail(6, 6, 0.2, Direction::Lower, 500, 2).unwrap();
        assert_eq!(r.successes, 500);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let a = monte_carlo_tail_with_workers(12, 8, 0.6, Direction::Upper, 300_000, 5, 1).unwrap();
        let b = monte_carlo_tail_with_workers(12, 8, 0.6, Direction::Upper, 300_000, 5, 3).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_tail_with_workers(12, 8, 0.6, Direction::Upper, 300_000, 6, 1).unwrap();
        assert_ne!(a.successes, c.successes);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(monte_carlo_tail(5, 2, 0.5, Direction::Upper, 0, 1).is_err());
        assert!(monte_carlo_tail(5, 2, 1.0, Direction::Upper, 10, 1).is_err());
        assert!(monte_carlo_tail(5, 6, 0.5, Direction::Upper, 10, 1).is_err());
    }

    #[test]
    fn wilson_contains_estimate() {
        for (s, t) in [(0, 10), (10, 10), (3, 7), (1, 1_000_000), (500, 1000)] {
            let (lo, hi) = wilson_interval(s, t);
            let phat = s as f64 / t as f64;
            assert!(0.0 <= lo && lo <= phat && phat <= hi && hi <= 1.0);
        }
        // Reference interval for 3 of 10.
        let (lo, hi) = wilson_interval(3, 10);
        assert!(
            (lo - 0.10779).abs() < 1e-5 && (hi - 0.60322).abs() < 1e-5,
            "{lo} {hi}"
        );
    }

    #[test]
    fn estimates_sit_near_exact_tails() {
        let mut seed = 100;
        for n in [3u64, 8, 15, 30] {
            for (a, b) in [(1u64, 5u64), (1, 2), (7, 10)] {
                for k in [n / 4, n / 2, 3 * n / 4] {
                    for dir in [Direction::Upper, Direction::Lower] {
                        seed += 1;
                        let trials = 40_000;
                        let p = a as f64 / b as f64;
                        let r = monte_carlo_tail(n, k, p, dir, trials, seed).unwrap();
                        let exact = exact_tail_parts(n, k, dir, RationalP::new(a, b).unwrap())
                            .unwrap()
                            .value()
                            .to_f64()
                            .unwrap();
                        let se = (exact * (1.0 - exact) / trials as f64).sqrt();
                        assert!(
                            (r.estimate - exact).abs() <= 4.0 * se + 1e-12,
                            "n={n} k={k} p={p} {dir}: {} vs {exact}",
                            r.estimate
                        );
                    }
                }
            }
        }
    }
}
