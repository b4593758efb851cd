//! Tails as a function of window length, and recovery of `p` from a
//! published tail value.

use rayon::prelude::*;

use super::{BinomialSpec, Direction, TailEngine};
use crate::error::{Error, Result};
use crate::xprec::{LogMagnitude, Precision, XReal};

/// Threshold fraction `r = num/den` with `0 < r < 1`, kept exact so that
/// `floor(r·n)` never suffers from binary rounding (`0.994·44100` must give
/// 43835).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ThresholdRatio {
    num: u64,
    den: u64,
}

impl ThresholdRatio {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || num >= den {
            return Err(Error::domain(format!(
                "threshold ratio {num}/{den} must lie strictly inside (0, 1)"
            )));
        }
        Ok(ThresholdRatio { num, den })
    }

    /// Accepts `0.994` or `994/1000`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = || Error::domain(format!("cannot parse threshold ratio {text:?}"));
        if let Some((num, den)) = text.split_once('/') {
            let num = num.trim().parse().map_err(|_| bad())?;
            let den = den.trim().parse().map_err(|_| bad())?;
            return ThresholdRatio::new(num, den);
        }
        let (int, frac) = text.split_once('.').unwrap_or((text, ""));
        if frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let den = 10u64.pow(frac.len() as u32);
        let frac: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(bad)?;
        ThresholdRatio::new(num, den)
    }

    pub fn num(self) -> u64 {
        self.num
    }

    pub fn den(self) -> u64 {
        self.den
    }

    /// `K(n)`: `floor(r·n)` for upper tails, `ceil(r·n)` for lower tails.
    pub fn threshold(self, n: u64, direction: Direction) -> u64 {
        let scaled = u128::from(self.num) * u128::from(n);
        let den = u128::from(self.den);
        let k = match direction {
            Direction::Upper => scaled / den,
            Direction::Lower => scaled.div_ceil(den),
        };
        k as u64
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Parameters of a sweep over window lengths `n_min..=n_max`.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub n_min: u64,
    pub n_max: u64,
    pub ratio: ThresholdRatio,
    pub p: XReal,
}

impl SweepConfig {
    pub fn new(n_min: u64, n_max: u64, ratio: ThresholdRatio, p: XReal) -> Result<Self> {
        if n_min < 2 || n_min > n_max {
            return Err(Error::domain(format!(
                "sweep range needs 2 ≤ n_min ≤ n_max, got {n_min}..={n_max}"
            )));
        }
        BinomialSpec::new(n_max, p.clone())?;
        Ok(SweepConfig {
            n_min,
            n_max,
            ratio,
            p,
        })
    }

    pub fn precision(&self) -> Precision {
        self.p.precision()
    }

    fn engine(&self) -> Result<TailEngine> {
        TailEngine::new(&BinomialSpec::new(self.n_max, self.p.clone())?, self.n_max)
    }
}

/// `(n, log10 P)` pairs in increasing `n`.
#[derive(Clone, Debug)]
pub struct SweepSeries {
    pub direction: Direction,
    pub points: Vec<(u64, LogMagnitude)>,
}

impl SweepSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn log10_values(&self) -> Vec<f64> {
        self.points.iter().map(|(_, l)| l.log10_f64()).collect()
    }

    /// Least-squares line `log10 P ≈ slope·n + intercept` and its `R²`.
    pub fn linear_fit(&self) -> Option<(f64, f64, f64)> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|(_, l)| !l.is_zero())
            .map(|(n, l)| (*n as f64, l.log10_f64()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let len = pts.len() as f64;
        let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / len;
        let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / len;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
        let syy: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = mean_y - slope * mean_x;
        let ss_res: f64 = pts
            .iter()
            .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
            .sum();
        let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
        Some((slope, intercept, r2))
    }
}

fn evaluate(
    engine: &TailEngine,
    config: &SweepConfig,
    direction: Direction,
    ns: &[u64],
) -> Result<Vec<(u64, LogMagnitude)>> {
    ns.par_iter()
        .map(|&n| {
            let k = config.ratio.threshold(n, direction);
            engine.tail(n, k, direction).map(|l| (n, l))
        })
        .collect()
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))
}

/// Tail for every `n` in the configured range; `K(n)` scales with `n` via
/// the threshold ratio. Uses the global worker pool.
pub fn sweep(config: &SweepConfig, direction: Direction) -> Result<SweepSeries> {
    let engine = config.engine()?;
    let ns: Vec<u64> = (config.n_min..=config.n_max).collect();
    Ok(SweepSeries {
        direction,
        points: evaluate(&engine, config, direction, &ns)?,
    })
}

/// [`sweep`] on a dedicated pool of `workers` threads. The output does not
/// depend on `workers`.
pub fn sweep_with_workers(
    config: &SweepConfig,
    direction: Direction,
    workers: usize,
) -> Result<SweepSeries> {
    pool(workers)?.install(|| sweep(config, direction))
}

/// First `n` of a series whose tail lies strictly below `threshold_log10`.
pub fn first_crossing(series: &SweepSeries, threshold_log10: f64) -> Option<u64> {
    series
        .points
        .iter()
        .find(|(_, l)| l.is_zero() || l.log10_f64() < threshold_log10)
        .map(|(n, _)| *n)
}

/// Smallest `n` in the configured range with `log10 P < threshold_log10`.
///
/// Evaluates the range in blocks and stops at the first block containing a
/// crossing.
pub fn crossover(
    config: &SweepConfig,
    direction: Direction,
    threshold_log10: f64,
) -> Result<Option<u64>> {
    if threshold_log10.is_nan() || threshold_log10 >= 0.0 {
        return Err(Error::domain(format!(
            "crossover threshold must be negative, got {threshold_log10}"
        )));
    }
    const BLOCK: u64 = 512;
    let engine = config.engine()?;
    let mut start = config.n_min;
    while start <= config.n_max {
        let end = (start + BLOCK - 1).min(config.n_max);
        let ns: Vec<u64> = (start..=end).collect();
        let block = SweepSeries {
            direction,
            points: evaluate(&engine, config, direction, &ns)?,
        };
        if let Some(n) = first_crossing(&block, threshold_log10) {
            return Ok(Some(n));
        }
        start = end + 1;
    }
    Ok(None)
}

/// One second at 44.1 kHz.
pub const FLAGSHIP_N: u64 = 44_100;
/// `floor(0.994·44100)`: 99.4% proximate movement.
pub const FLAGSHIP_K: u64 = 43_835;
/// log10 of the published one-second continuity tail.
pub const FLAGSHIP_TARGET_LOG10: f64 = -2017.905331;

/// Largest admissible deviation of the calibrated tail from its target, in
/// log10 units.
pub const CALIBRATION_TOLERANCE: f64 = 1e-6;

/// Outcome of [`calibrate_p`].
#[derive(Clone, Debug)]
pub struct Calibration {
    pub p: XReal,
    /// Final bisection bracket.
    pub bracket: (XReal, XReal),
    pub iterations: u32,
    /// `log10` of the upper tail at the returned `p`.
    pub achieved_log10: f64,
    pub target_log10: f64,
}

impl Calibration {
    pub fn residual(&self) -> f64 {
        (self.achieved_log10 - self.target_log10).abs()
    }
}

/// Finds `p` with `log10 P(X ≥ k; n, p)` within [`CALIBRATION_TOLERANCE`] of
/// `target_log10` by bisection. The upper tail increases strictly with `p`,
/// so the root is unique.
pub fn calibrate_p(n: u64, k: u64, target_log10: f64, prec: Precision) -> Result<Calibration> {
    if k == 0 || k > n {
        return Err(Error::NoRoot(format!(
            "upper tail with K = {k} of n = {n} trials is constant in p"
        )));
    }
    if target_log10.is_nan() || target_log10 >= 0.0 {
        return Err(Error::NoRoot(format!(
            "target log10 {target_log10} is not a probability below one"
        )));
    }
    let eval = |p: &XReal| -> Result<f64> {
        let spec = BinomialSpec::new(n, p.clone())?;
        Ok(TailEngine::new(&spec, n)?
            .tail(n, k, Direction::Upper)?
            .log10_f64())
    };
    let edge = XReal::from_int(2, prec).powi(-128)?;
    let mut lo = edge.clone();
    let mut hi = XReal::one(prec).sub(&edge);
    let (f_lo, f_hi) = (eval(&lo)?, eval(&hi)?);
    if !(f_lo <= target_log10 && target_log10 <= f_hi) {
        return Err(Error::NoRoot(format!(
            "target log10 {target_log10} lies outside [{f_lo}, {f_hi}] reachable for p in (2^-128, 1 - 2^-128)"
        )));
    }
    let half = XReal::from_ratio(1, 2, prec)?;
    for iteration in 1..=512u32 {
        let mid = lo.add(&hi).mul(&half);
        let f_mid = eval(&mid)?;
        if (f_mid - target_log10).abs() <= CALIBRATION_TOLERANCE {
            return Ok(Calibration {
                p: mid,
                bracket: (lo, hi),
                iterations: iteration,
                achieved_log10: f_mid,
                target_log10,
            });
        }
        if f_mid < target_log10 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoRoot(format!(
        "bisection did not reach tolerance {CALIBRATION_TOLERANCE} for target {target_log10}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binomtail::{tail, TailQuery};

    const P: Precision = Precision::DEFAULT;

    fn p_of(text: &str) -> XReal {
        XReal::parse(text, P).unwrap()
    }

    #[test]
    fn ratio_parsing_is_exact() {
        let r = ThresholdRatio::parse("0.994").unwrap();
        assert_eq!((r.num(), r.den()), (994, 1000));
        assert_eq!(r.threshold(44_100, Direction::Upper), 43_835);
        assert_eq!(r.threshold(44_100, Direction::Lower), 43_836);
        let r = ThresholdRatio::parse("1/2").unwrap();
        assert_eq!(r.threshold(7, Direction::Upper), 3);
        assert_eq!(r.threshold(7, Direction::Lower), 4);
        assert_eq!(r.threshold(8, Direction::Lower), 4);
        for bad in ["1", "0", "1.5", "abc", "3/2", "0/4", ""] {
            assert!(ThresholdRatio::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn config_validation() {
        let r = ThresholdRatio::parse("0.9").unwrap();
        assert!(SweepConfig::new(1, 10, r, p_of("0.5")).is_err());
        assert!(SweepConfig::new(11, 10, r, p_of("0.5")).is_err());
        assert!(SweepConfig::new(2, 10, r, p_of("1.5")).is_err());
        assert!(SweepConfig::new(2, 2, r, p_of("0.5")).is_ok());
    }

    #[test]
    fn degenerate_range_is_one_tail() {
        let r = ThresholdRatio::parse("0.994").unwrap();
        let cfg = SweepConfig::new(44_100, 44_100, r, p_of("0.1")).unwrap();
        let series = sweep(&cfg, Direction::Upper).unwrap();
        assert_eq!(series.len(), 1);
        let spec = BinomialSpec::new(44_100, p_of("0.1")).unwrap();
        let direct = tail(&TailQuery::upper(spec, 43_835).unwrap()).unwrap();
        assert_eq!(series.points[0].1, direct);
        assert!(series.linear_fit().is_none());
    }

    #[test]
    fn sweep_points_match_single_tails() {
        let r = ThresholdRatio::parse("3/4").unwrap();
        let cfg = SweepConfig::new(2, 60, r, p_of("0.3")).unwrap();
        for dir in [Direction::Upper, Direction::Lower] {
            let series = sweep(&cfg, dir).unwrap();
            assert_eq!(series.len(), 59);
            for (n, l) in &series.points {
                let spec = BinomialSpec::new(*n, p_of("0.3")).unwrap();
                let q = TailQuery::new(spec, r.threshold(*n, dir), dir).unwrap();
                let direct = tail(&q).unwrap();
                let d = l.log10().unwrap().sub(direct.log10().unwrap()).abs();
                assert!(d.is_zero() || d.to_f64() < 1e-58, "n={n}: {d}");
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let r = ThresholdRatio::parse("0.8").unwrap();
        let cfg = SweepConfig::new(2, 300, r, p_of("0.45")).unwrap();
        let one = sweep_with_workers(&cfg, Direction::Upper, 1).unwrap();
        let three = sweep_with_workers(&cfg, Direction::Upper, 3).unwrap();
        assert_eq!(one.points, three.points);
    }

    #[test]
    fn upper_sweep_drops_where_threshold_advances() {
        // P(X_{n+1} ≥ K+1) < P(X_n ≥ K): a step of K(n) always lowers the
        // tail, while a stalled K(n) raises it.
        let r = ThresholdRatio::parse("0.7").unwrap();
        let cfg = SweepConfig::new(2, 400, r, p_of("0.4")).unwrap();
        let series = sweep(&cfg, Direction::Upper).unwrap();
        for w in series.points.windows(2) {
            let ((n0, l0), (n1, l1)) = (&w[0], &w[1]);
            let (k0, k1) = (
                r.threshold(*n0, Direction::Upper),
                r.threshold(*n1, Direction::Upper),
            );
            if k1 > k0 {
                assert!(l1 < l0, "n={n1}");
            } else {
                assert!(l1 >= l0, "n={n1}");
            }
        }
    }

    fn series_of(values: &[f64]) -> SweepSeries {
        SweepSeries {
            direction: Direction::Upper,
            points: values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let l = XReal::from_f64(*v, P).unwrap();
                    (i as u64 + 2, LogMagnitude::from_log10(l))
                })
                .collect(),
        }
    }

    #[test]
    fn crossing_is_strict() {
        let s = series_of(&[-79.5, -80.0, -80.25]);
        assert_eq!(first_crossing(&s, -80.0), Some(4));
        assert_eq!(first_crossing(&s, -79.9), Some(3));
        assert_eq!(first_crossing(&s, -81.0), None);
        let zero = SweepSeries {
            direction: Direction::Upper,
            points: vec![(2, LogMagnitude::one(P)), (3, LogMagnitude::zero(P))],
        };
        assert_eq!(first_crossing(&zero, -5.0), Some(3));
    }

    #[test]
    fn crossover_matches_linear_scan() {
        let r = ThresholdRatio::parse("0.9").unwrap();
        let cfg = SweepConfig::new(2, 1500, r, p_of("0.5")).unwrap();
        let series = sweep(&cfg, Direction::Upper).unwrap();
        for thr in [-3.0, -20.0, -100.0, -300.0] {
            assert_eq!(
                crossover(&cfg, Direction::Upper, thr).unwrap(),
                first_crossing(&series, thr),
                "threshold {thr}"
            );
        }
        assert_eq!(crossover(&cfg, Direction::Upper, -1e9).unwrap(), None);
        assert!(crossover(&cfg, Direction::Upper, 0.0).is_err());
    }

    #[test]
    fn calibration_recovers_closed_forms() {
        // K = n: the tail is p^n.
        let c = calibrate_p(8, 8, -3.0, P).unwrap();
        assert!((c.p.to_f64() - 10f64.powf(-3.0 / 8.0)).abs() < 1e-6);
        assert!(c.residual() <= CALIBRATION_TOLERANCE);

        // P(X ≥ 9; 10, 1/2) = 11/1024.
        let target = (11.0f64 / 1024.0).log10();
        let c = calibrate_p(10, 9, target, P).unwrap();
        assert!((c.p.to_f64() - 0.5).abs() < 1e-6, "{}", c.p);
        let (lo, hi) = &c.bracket;
        assert!(lo.to_f64() <= c.p.to_f64() && c.p.to_f64() <= hi.to_f64());
    }

    #[test]
    fn calibration_reports_missing_roots() {
        for (n, k, t) in [
            (10, 0, -2.0),
            (10, 11, -2.0),
            (10, 5, 0.0),
            (10, 5, 0.5),
            (10, 5, -1e6),
        ] {
            assert!(
                matches!(calibrate_p(n, k, t, P), Err(Error::NoRoot(_))),
                "n={n} k={k} t={t}"
            );
        }
    }
}
