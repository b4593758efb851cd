//! Binomial probabilities far below the floating-point range.
//!
//! Point masses, tail sums and Chernoff bounds for a Bernoulli process of
//! `n` trials with success probability `p`, all reported as
//! [`LogMagnitude`]s. An exact big-rational evaluation of the same tails
//! lives in [`exact`] and serves as an independent oracle.

use std::fmt;
use std::str::FromStr;

use dashu_int::UBig;
use num_integer::Integer;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::xprec::{ln10, LogConstants, LogMagnitude, Precision, XReal};

pub mod exact;
pub mod sweep;

pub use exact::{exact_tail_parts, tail_exact, ExactTail};
pub use sweep::{
    calibrate_p, crossover, first_crossing, sweep, sweep_with_workers, Calibration, SweepConfig,
    SweepSeries, ThresholdRatio, FLAGSHIP_K, FLAGSHIP_N, FLAGSHIP_TARGET_LOG10,
};

/// Largest `min(k, n - k)` for which binomial coefficients are formed as
/// exact integers; wider coefficients go through the Stirling series.
pub const EXACT_BINOMIAL_LIMIT: u64 = 100_000;

/// Which side of the threshold a tail covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `k ≥ K`
    Upper,
    /// `k ≤ K`
    Lower,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "upper" => Ok(Direction::Upper),
            "lower" => Ok(Direction::Lower),
            other => Err(Error::domain(format!(
                "direction must be `upper` or `lower`, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Upper => "upper",
            Direction::Lower => "lower",
        })
    }
}

/// A success probability written as `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RationalP {
    pub num: u64,
    pub den: u64,
}

impl RationalP {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || num >= den {
            return Err(Error::domain(format!(
                "rational probability {num}/{den} must lie strictly inside (0, 1)"
            )));
        }
        Ok(RationalP { num, den })
    }

    pub fn to_big_rational(self) -> BigRational {
        BigRational::new(self.num.into(), self.den.into())
    }
}

impl fmt::Display for RationalP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// `0.875` as `7/8`; `None` for exponent notation or more than 18
/// fractional digits.
fn decimal_ratio(text: &str) -> Option<RationalP> {
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if frac.len() > 18 || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let den = 10u64.pow(frac.len() as u32);
    let int: u64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let frac: u64 = if frac.is_empty() {
        0
    } else {
        frac.parse().ok()?
    };
    let num = int.checked_mul(den)?.checked_add(frac)?;
    let g = num.gcd(&den).max(1);
    RationalP::new(num / g, den / g).ok()
}

/// A probability parsed from text: `0.5`, `1.2e-3`, or `1/2`.
///
/// Fractions and plain decimals carry an exact rational; exponent notation
/// does not.
pub fn parse_probability(text: &str, prec: Precision) -> Result<(XReal, Option<RationalP>)> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let parse = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|e| Error::domain(format!("bad fraction {text:?}: {e}")))
        };
        let ratio = RationalP::new(parse(num)?, parse(den)?)?;
        let value = XReal::from_ratio(ratio.num, ratio.den, prec)?;
        return Ok((value, Some(ratio)));
    }
    Ok((XReal::parse(text, prec)?, decimal_ratio(text)))
}

/// Trial count and per-trial success probability.
#[derive(Clone, Debug)]
pub struct BinomialSpec {
    n: u64,
    p: XReal,
    q: XReal,
    exact: Option<RationalP>,
}

impl BinomialSpec {
    /// `p` must lie strictly between 0 and 1.
    pub fn new(n: u64, p: XReal) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("a binomial needs at least one trial"));
        }
        let one = XReal::one(p.precision());
        if p.signum() <= 0 || p >= one {
            return Err(Error::domain(format!(
                "success probability {} must lie strictly inside (0, 1)",
                p.to_sci_string(12)
            )));
        }
        let q = one.sub(&p);
        Ok(BinomialSpec {
            n,
            p,
            q,
            exact: None,
        })
    }

    pub fn with_ratio(n: u64, ratio: RationalP, prec: Precision) -> Result<Self> {
        let p = XReal::from_ratio(ratio.num, ratio.den, prec)?;
        let mut spec = BinomialSpec::new(n, p)?;
        // 1 - a/b formed exactly rather than by subtraction.
        spec.q = XReal::from_ratio(ratio.den - ratio.num, ratio.den, prec)?;
        spec.exact = Some(ratio);
        Ok(spec)
    }

    /// Builds a spec from textual `p` (see [`parse_probability`]).
    pub fn parse(n: u64, p: &str, prec: Precision) -> Result<Self> {
        match parse_probability(p, prec)? {
            (_, Some(ratio)) => BinomialSpec::with_ratio(n, ratio, prec),
            (value, None) => BinomialSpec::new(n, value),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> &XReal {
        &self.p
    }

    /// `1 - p`.
    pub fn q(&self) -> &XReal {
        &self.q
    }

    pub fn exact_p(&self) -> Option<RationalP> {
        self.exact
    }

    pub fn precision(&self) -> Precision {
        self.p.precision()
    }

    /// The most likely success count, `floor((n + 1)·p)` capped at `n`.
    pub fn mode(&self) -> u64 {
        let scaled = XReal::from_int(self.n + 1, self.precision()).mul(&self.p);
        let mode = scaled.floor().to_i64_exact().unwrap_or(0).max(0) as u64;
        mode.min(self.n)
    }
}

/// A tail of a [`BinomialSpec`] at threshold `K`.
#[derive(Clone, Debug)]
pub struct TailQuery {
    pub spec: BinomialSpec,
    pub threshold: u64,
    pub direction: Direction,
}

impl TailQuery {
    pub fn new(spec: BinomialSpec, threshold: u64, direction: Direction) -> Result<Self> {
        if threshold > spec.n {
            return Err(Error::domain(format!(
                "threshold K = {threshold} exceeds n = {}",
                spec.n
            )));
        }
        Ok(TailQuery {
            spec,
            threshold,
            direction,
        })
    }

    pub fn upper(spec: BinomialSpec, threshold: u64) -> Result<Self> {
        TailQuery::new(spec, threshold, Direction::Upper)
    }

    pub fn lower(spec: BinomialSpec, threshold: u64) -> Result<Self> {
        TailQuery::new(spec, threshold, Direction::Lower)
    }

    /// True when the query covers every outcome.
    pub fn is_full_support(&self) -> bool {
        match self.direction {
            Direction::Upper => self.threshold == 0,
            Direction::Lower => self.threshold == self.spec.n,
        }
    }
}

/// `C(n, k)` as an exact integer, built by the multiplicative recurrence
/// `C(n, i) = C(n, i - 1)·(n - i + 1) / i` over the shorter side.
pub fn exact_binomial(n: u64, k: u64) -> Result<UBig> {
    if k > n {
        return Err(Error::domain(format!("C({n}, {k}) needs k ≤ n")));
    }
    let m = k.min(n - k);
    let mut c = UBig::ONE;
    for i in 1..=m {
        c *= UBig::from(n - m + i);
        c /= UBig::from(i);
    }
    Ok(c)
}

/// `log10 C(n, k)`.
///
/// Exact integer evaluation whenever `min(k, n - k) ≤ EXACT_BINOMIAL_LIMIT`
/// (which covers every `n ≤ 10^5`), otherwise Stirling's series for the
/// log-gamma function.
pub fn log10_binomial_coefficient(n: u64, k: u64, prec: Precision) -> Result<XReal> {
    if k > n {
        return Err(Error::domain(format!("C({n}, {k}) needs k ≤ n")));
    }
    if k.min(n - k) <= EXACT_BINOMIAL_LIMIT {
        let c = exact_binomial(n, k)?;
        return XReal::from_int(c, prec.widen(2))
            .log10()
            .map(|l| l.with_precision(prec));
    }
    log10_binomial_stirling(n, k, prec)
}

pub(crate) fn log10_binomial_stirling(n: u64, k: u64, prec: Precision) -> Result<XReal> {
    let wide = prec.widen(6);
    let ln_c = ln_factorial_stirling(n, wide)?
        .sub(&ln_factorial_stirling(k, wide)?)
        .sub(&ln_factorial_stirling(n - k, wide)?);
    Ok(ln_c.div(&ln10(wide))?.with_precision(prec))
}

/// `ln n!` as `ln Γ(z)` at `z = n + 1`:
/// `(z - 1/2)·ln z - z + ln(2π)/2 + Σ B_2j / (2j(2j - 1)·z^(2j-1))`.
fn ln_factorial_stirling(n: u64, prec: Precision) -> Result<XReal> {
    let z = XReal::from_int(n + 1, prec);
    let half = XReal::from_ratio(1, 2, prec)?;
    let two_pi = crate::xprec::pi(prec).mul(&XReal::from_int(2, prec));
    let mut sum = z
        .sub(&half)
        .mul(&z.ln()?)
        .sub(&z)
        .add(&two_pi.ln()?.mul(&half));

    let z_sq = z.mul(&z);
    let mut z_power = z.clone();
    let cutoff = -(prec.bits() as isize) - 8;
    let mut previous: Option<isize> = None;
    for (j, b) in BernoulliEven::new(prec).take(400).enumerate() {
        let j = j as i64 + 1;
        let term = b
            .div(&XReal::from_int(2 * j * (2 * j - 1), prec))?
            .div(&z_power)?;
        let order = term.binary_order().unwrap_or(isize::MIN);
        if previous.is_some_and(|p| order > p) {
            return Err(Error::domain(format!(
                "Stirling series for ln({n}!) diverges before reaching {} digits",
                prec.digits()
            )));
        }
        sum = sum.add(&term);
        if order < cutoff + sum.binary_order().unwrap_or(0) {
            return Ok(sum);
        }
        previous = Some(order);
        z_power = z_power.mul(&z_sq);
    }
    Err(Error::domain(format!(
        "Stirling series for ln({n}!) did not converge"
    )))
}

/// `B_2, B_4, B_6, …` via the Akiyama–Tanigawa transform, rounded to `prec`.
struct BernoulliEven {
    prec: Precision,
    row: Vec<BigRational>,
}

impl BernoulliEven {
    fn new(prec: Precision) -> Self {
        BernoulliEven {
            prec,
            row: Vec::new(),
        }
    }

    /// Extends the transform by one row; `row[0]` then holds `B_i`.
    fn step(&mut self) -> usize {
        let i = self.row.len();
        self.row
            .push(BigRational::new(1.into(), (i as u64 + 1).into()));
        for j in (1..=i).rev() {
            let diff = &self.row[j - 1] - &self.row[j];
            self.row[j - 1] = diff * BigRational::from_integer((j as u64).into());
        }
        i
    }
}

impl Iterator for BernoulliEven {
    type Item = XReal;

    fn next(&mut self) -> Option<XReal> {
        loop {
            let i = self.step();
            if i >= 2 && i % 2 == 0 {
                let b = &self.row[0];
                let num = exact::num_to_ibig(b.numer());
                let den = exact::num_to_ibig(b.denom());
                return XReal::from_ratio(num, den, self.prec).ok();
            }
        }
    }
}

/// `log10` of `C(n, k)·p^k·(1 - p)^(n - k)`.
pub fn log10_pmf(spec: &BinomialSpec, k: u64) -> Result<LogMagnitude> {
    if k > spec.n {
        return Err(Error::domain(format!("k = {k} exceeds n = {}", spec.n)));
    }
    let prec = spec.precision();
    let wide = prec.widen(4);
    let log_c = log10_binomial_coefficient(spec.n, k, wide)?;
    let log_p = spec.p.with_precision(wide).log10()?;
    let log_q = spec.q.with_precision(wide).log10()?;
    let value = log_c
        .add(&XReal::from_int(k, wide).mul(&log_p))
        .add(&XReal::from_int(spec.n - k, wide).mul(&log_q));
    Ok(LogMagnitude::from_log10(value.with_precision(prec)))
}

/// Precomputed constants for evaluating many tails of one `p`.
pub(crate) struct TailEngine {
    prec: Precision,
    wide: Precision,
    p: XReal,
    q: XReal,
    p_over_q: XReal,
    q_over_p: XReal,
    constants: LogConstants,
}

impl TailEngine {
    /// An engine able to serve every `n ≤ n_max` at the distribution's precision.
    pub(crate) fn new(spec: &BinomialSpec, n_max: u64) -> Result<Self> {
        let prec = spec.precision();
        let guard = ((n_max + 1) as f64).log10().ceil() as u32 + 6;
        let wide = prec.widen(guard);
        let p = spec.p.with_precision(wide);
        let q = spec.q.with_precision(wide);
        // Sums reach binary exponents of order n·log2(1/min(p, q)).
        let exponent_digits = (n_max as f64 * 1100.0).log10().ceil() as u32;
        Ok(TailEngine {
            prec,
            wide,
            constants: LogConstants::new(wide, exponent_digits),
            p_over_q: p.div(&q)?,
            q_over_p: q.div(&p)?,
            p,
            q,
        })
    }

    /// The point mass at `k` as a plain (huge-exponent) real.
    fn term(&self, n: u64, k: u64) -> Result<XReal> {
        if k.min(n - k) <= EXACT_BINOMIAL_LIMIT {
            let c = XReal::from_int(exact_binomial(n, k)?, self.wide);
            return Ok(c
                .mul(&self.p.powi(k as i64)?)
                .mul(&self.q.powi((n - k) as i64)?));
        }
        let spec = BinomialSpec {
            n,
            p: self.p.clone(),
            q: self.q.clone(),
            exact: None,
        };
        let log = log10_pmf(&spec, k)?;
        Ok(log.to_xreal())
    }

    /// `Σ_{k=from}^{to} P(k)` walking away from `from` one term at a time,
    /// stopping once terms no longer affect the working precision.
    fn walk(&self, n: u64, from: u64, to: u64) -> Result<XReal> {
        let mut term = self.term(n, from)?;
        let mut sum = term.clone();
        let negligible = self.wide.bits() as isize + 8;
        let mut k = from;
        while k != to {
            if from < to {
                // P(k+1) = P(k)·(n - k)/(k + 1)·p/q
                term = term.mul(&self.p_over_q).mul_u64(n - k).div_u64(k + 1)?;
                k += 1;
            } else {
                // P(k-1) = P(k)·k/(n - k + 1)·q/p
                term = term.mul(&self.q_over_p).mul_u64(k).div_u64(n - k + 1)?;
                k -= 1;
            }
            sum = sum.add(&term);
            match (term.binary_order(), sum.binary_order()) {
                (Some(t), Some(s)) if t < s - negligible => break,
                (None, _) => break,
                _ => {}
            }
        }
        Ok(sum)
    }

    /// `log10 P(X ≥ K)` or `log10 P(X ≤ K)` for `n` trials.
    pub(crate) fn tail(
        &self,
        n: u64,
        threshold: u64,
        direction: Direction,
    ) -> Result<LogMagnitude> {
        // Reflect lower tails onto upper ones: P(X ≤ K) = P(n - X ≥ n - K).
        let (k0, p_is_success) = match direction {
            Direction::Upper => (threshold, true),
            Direction::Lower => (n - threshold, false),
        };
        if k0 == 0 {
            return Ok(LogMagnitude::one(self.prec));
        }
        let mode = {
            let p = if p_is_success { &self.p } else { &self.q };
            let m = XReal::from_int(n + 1, self.wide)
                .mul(p)
                .floor()
                .to_i64_exact()
                .unwrap_or(0);
            (m.max(0) as u64).min(n)
        };
        // Both sums walk away from the mode, so their terms shrink and the
        // walk stops early. A tail holding the mode is close to one and is
        // taken as the complement of the other side, keeping full relative
        // precision in its logarithm.
        if k0 > mode {
            let sum = self.upper_direct(n, k0, p_is_success)?;
            Ok(LogMagnitude::from_value_with(&sum, &self.constants)?.with_precision(self.prec))
        } else {
            let rest = self.upper_direct_complement(n, k0, p_is_success)?;
            Ok(LogMagnitude::one_minus_with(&rest, &self.constants)?.with_precision(self.prec))
        }
    }

    /// `Σ_{k ≥ k0}` of the success (or, reflected, failure) count.
    fn upper_direct(&self, n: u64, k0: u64, p_is_success: bool) -> Result<XReal> {
        if p_is_success {
            self.walk(n, k0, n)
        } else {
            self.walk(n, n - k0, 0)
        }
    }

    /// `Σ_{k < k0}`, the complement of [`Self::upper_direct`].
    fn upper_direct_complement(&self, n: u64, k0: u64, p_is_success: bool) -> Result<XReal> {
        if p_is_success {
            self.walk(n, k0 - 1, 0)
        } else {
            self.walk(n, n - k0 + 1, n)
        }
    }
}

/// `log10` of the tail sum `Σ C(n,k)·p^k·(1-p)^(n-k)` over the queried range.
///
/// Terms come from the ratio recurrence between neighbouring `k`, summed on
/// an extended-exponent real so no rescaling is needed.
pub fn tail(query: &TailQuery) -> Result<LogMagnitude> {
    if query.is_full_support() {
        return Ok(LogMagnitude::one(query.spec.precision()));
    }
    TailEngine::new(&query.spec, query.spec.n)?.tail(query.spec.n, query.threshold, query.direction)
}

/// Chernoff bound `exp(-n·D(a‖p))` with `a = k/n`, as a log10 magnitude.
///
/// `D(a‖p) = a·ln(a/p) + (1-a)·ln((1-a)/(1-p))`. When `a` lies on the wrong
/// side of `p` for the requested direction the bound is the trivial 1.
pub fn chernoff(spec: &BinomialSpec, k: u64, direction: Direction) -> Result<LogMagnitude> {
    let n = spec.n;
    if k > n {
        return Err(Error::domain(format!("k = {k} exceeds n = {n}")));
    }
    let prec = spec.precision();
    let wide = prec.widen(8);
    let a = XReal::from_ratio(k, n, wide)?;
    let p = spec.p.with_precision(wide);
    let q = spec.q.with_precision(wide);
    let informative = match direction {
        Direction::Lower => a < p,
        Direction::Upper => a > p,
    };
    if !informative {
        return Ok(LogMagnitude::one(prec));
    }
    let one = XReal::one(wide);
    let b = one.sub(&a);
    // a·ln(a/p) → 0 as a → 0, and likewise for the complementary term.
    let first = if k == 0 {
        XReal::zero(wide)
    } else {
        a.mul(&a.div(&p)?.ln()?)
    };
    let second = if k == n {
        XReal::zero(wide)
    } else {
        b.mul(&b.div(&q)?.ln()?)
    };
    let divergence = first.add(&second);
    let log10 = XReal::from_int(n, wide).mul(&divergence).div(&ln10(wide))?;
    Ok(LogMagnitude::from_log10((-log10).with_precision(prec)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xprec::log_sum_exp10;
    use num_bigint::BigUint;
    use proptest::prelude::*;

    const P: Precision = Precision::DEFAULT;

    fn spec(n: u64, p: &str) -> BinomialSpec {
        BinomialSpec::parse(n, p, P).unwrap()
    }

    fn log10_ratio(num: u64, den: u64) -> XReal {
        XReal::from_ratio(num, den, P).unwrap().log10().unwrap()
    }

    /// Counts outcomes of `n` fair trials with a given number of successes.
    fn enumerate_fair(n: u32) -> Vec<u64> {
        let mut counts = vec![0u64; n as usize + 1];
        for mask in 0u64..(1 << n) {
            counts[mask.count_ones() as usize] += 1;
        }
        counts
    }

    fn digits(a: &LogMagnitude, b: &XReal) -> f64 {
        a.log10().unwrap().correct_digits(b)
    }

    #[test]
    fn binomial_coefficient_examples() {
        let l = log10_binomial_coefficient(10, 3, P).unwrap();
        assert!(l.correct_digits(&XReal::from_int(120, P).log10().unwrap()) >= 62.0);
        assert!((l.to_f64() - 2.07918124605).abs() < 1e-11);
        assert!(log10_binomial_coefficient(77, 0, P).unwrap().is_zero());
        assert!(log10_binomial_coefficient(3, 4, P).is_err());
    }

    #[test]
    fn flagship_binomial_coefficient_matches_big_integer_recurrence() {
        // C(n, k+1) = C(n, k)·(n - k)/(k + 1), climbing from C(n, 0) = 1.
        let (n, k) = (44_100u64, 43_835u64);
        let mut c = BigUint::from(1u32);
        for i in 0..(n - k) {
            c = c * (n - i) / (i + 1);
        }
        let exact = XReal::from_int(exact::num_to_ibig(&num_bigint::BigInt::from(c)), P.widen(4))
            .log10()
            .unwrap();
        let l = log10_binomial_coefficient(n, k, P).unwrap();
        assert!(l.correct_digits(&exact) >= 60.0);
        assert!((l.to_f64() - 701.0).abs() < 1.0, "{}", l.to_f64());
    }

    #[test]
    fn stirling_path_matches_exact_coefficients() {
        for (n, k) in [(5_000u64, 2_000u64), (250_000, 110_000)] {
            let exact = log10_binomial_coefficient(n, k, P).unwrap();
            let stirling = log10_binomial_stirling(n, k, P).unwrap();
            assert!(
                stirling.correct_digits(&exact) >= f64::from(P.digits() - 6),
                "n={n} k={k}: {} vs {}",
                stirling,
                exact
            );
        }
    }

    #[test]
    fn pmf_examples() {
        let l = log10_pmf(&spec(1, "1/2"), 1).unwrap();
        assert!(digits(&l, &log10_ratio(1, 2)) >= 60.0);

        let counts = enumerate_fair(10);
        let l = log10_pmf(&spec(10, "1/2"), 9).unwrap();
        assert!(digits(&l, &log10_ratio(counts[9], 1024)) >= 60.0);
        assert!((l.log10_f64() + 2.0103).abs() < 1e-4);

        let l = log10_pmf(&spec(2, "1/4"), 1).unwrap();
        assert!(digits(&l, &log10_ratio(3, 8)) >= 60.0);
        assert!(log10_pmf(&spec(2, "1/4"), 3).is_err());
    }

    #[test]
    fn tail_examples() {
        let counts = enumerate_fair(10);
        let t = tail(&TailQuery::upper(spec(10, "1/2"), 9).unwrap()).unwrap();
        assert!(digits(&t, &log10_ratio(counts[9] + counts[10], 1024)) >= 60.0);
        assert!((t.log10_f64() + 1.96890).abs() < 1e-5);

        for p in ["1/3", "0.878", "1/1000"] {
            let s = spec(25, p);
            let full = tail(&TailQuery::upper(s.clone(), 0).unwrap()).unwrap();
            assert!(full.log10().unwrap().is_zero());
            let full = tail(&TailQuery::lower(s.clone(), 25).unwrap()).unwrap();
            assert!(full.log10().unwrap().is_zero());

            let top = tail(&TailQuery::upper(s.clone(), 25).unwrap()).unwrap();
            let expected = XReal::from_int(25, P).mul(&s.p().log10().unwrap());
            assert!(digits(&top, &expected) >= 60.0, "p = {p}");
        }
    }

    #[test]
    fn probability_text_forms() {
        let exact = |t: &str| parse_probability(t, P).unwrap().1;
        assert_eq!(exact("1/2"), Some(RationalP { num: 1, den: 2 }));
        assert_eq!(exact("0.5"), Some(RationalP { num: 1, den: 2 }));
        assert_eq!(exact(".875"), Some(RationalP { num: 7, den: 8 }));
        assert_eq!(exact("0.994"), Some(RationalP { num: 497, den: 500 }));
        assert_eq!(exact("5e-1"), None);
        let (v, _) = parse_probability("1.5e-3", P).unwrap();
        assert_eq!(v, XReal::parse("0.0015", P).unwrap());
        assert!(parse_probability("1/0", P).is_err());
        assert!(parse_probability("half", P).is_err());
    }

    #[test]
    fn tail_query_validation() {
        assert!(TailQuery::upper(spec(5, "1/2"), 6).is_err());
        assert!(BinomialSpec::parse(5, "0", P).is_err());
        assert!(BinomialSpec::parse(5, "1", P).is_err());
        assert!(BinomialSpec::parse(5, "1/1", P).is_err());
        assert!(BinomialSpec::parse(0, "1/2", P).is_err());
        assert!(BinomialSpec::parse(5, "-0.2", P).is_err());
        assert!("sideways".parse::<Direction>().is_err());
        assert_eq!("Upper".parse::<Direction>().unwrap(), Direction::Upper);
    }

    #[test]
    fn chernoff_golden_value() {
        let c = chernoff(&spec(44_100, "1/2"), 2205, Direction::Lower).unwrap();
        assert!((c.log10_f64() + 9473.38213).abs() < 1e-4);
        let sci = c.to_scientific(8);
        assert_eq!(sci.mantissa(), "4.1484712");
        assert_eq!(sci.exponent, -9474);
    }

    #[test]
    fn chernoff_trivial_and_limit_cases() {
        let s = spec(40, "1/4");
        // a = p: zero divergence.
        assert!(chernoff(&s, 10, Direction::Lower)
            .unwrap()
            .log10()
            .unwrap()
            .is_zero());
        assert!(chernoff(&s, 10, Direction::Upper)
            .unwrap()
            .log10()
            .unwrap()
            .is_zero());
        // Wrong side of p: trivial bound.
        assert!(chernoff(&s, 30, Direction::Lower)
            .unwrap()
            .log10()
            .unwrap()
            .is_zero());
        // k = 0 gives (1-p)^n, which is also the exact lower tail at 0.
        let c = chernoff(&s, 0, Direction::Lower).unwrap();
        let exact = tail(&TailQuery::lower(s.clone(), 0).unwrap()).unwrap();
        assert!(digits(&c, exact.log10().unwrap()) >= 58.0);
        // k = n gives p^n.
        let c = chernoff(&s, 40, Direction::Upper).unwrap();
        let expected = XReal::from_int(40, P).mul(&s.p().log10().unwrap());
        assert!(digits(&c, &expected) >= 58.0);
        assert!(chernoff(&s, 41, Direction::Upper).is_err());
    }

    #[test]
    fn chernoff_small_case_matches_double_precision_formula() {
        let a: f64 = 0.05;
        let d = a * (a / 0.5).ln() + (1.0 - a) * ((1.0 - a) / 0.5).ln();
        let expected = (-20.0 * d).exp();
        assert!((expected - 5.05e-5).abs() < 1e-7);
        let c = chernoff(&spec(20, "1/2"), 1, Direction::Lower).unwrap();
        assert!((c.log10_f64() - expected.log10()).abs() < 1e-12);
    }

    #[test]
    fn pmf_normalizes() {
        for (n, p) in [(1u64, "1/2"), (10, "0.3"), (100, "1/7"), (5000, "0.878")] {
            let s = spec(n, p);
            let terms: Vec<_> = (0..=n).map(|k| log10_pmf(&s, k).unwrap()).collect();
            let total = log_sum_exp10(&terms).unwrap();
            assert!(
                total.log10_f64().abs() < 1e-56,
                "n={n}: {}",
                total.log10().unwrap()
            );
        }
    }

    #[test]
    fn lower_tails_reflect_upper_tails() {
        for (n, k, p, q) in [(30u64, 4u64, "1/5", "4/5"), (200, 150, "0.9", "0.1")] {
            let lower = tail(&TailQuery::lower(spec(n, p), k).unwrap()).unwrap();
            let upper = tail(&TailQuery::upper(spec(n, q), n - k).unwrap()).unwrap();
            assert!(digits(&lower, upper.log10().unwrap()) >= 55.0);
        }
    }

    fn arb_case() -> impl Strategy<Value = (u64, u64, u64, u64)> {
        (1u64..=120, 2u64..=50).prop_flat_map(|(n, den)| (Just(n), 0..=n, 1..den, Just(den)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn log_path_agrees_with_rational_path((n, k, a, b) in arb_case(), upper in any::<bool>()) {
            let dir = if upper { Direction::Upper } else { Direction::Lower };
            let q = TailQuery::new(spec(n, &format!("{a}/{b}")), k, dir).unwrap();
            let log = tail(&q).unwrap();
            let exact = tail_exact(&q).unwrap().log10(P).unwrap();
            let (a, e) = (log.log10().unwrap(), exact.log10().unwrap());
            let agree = if e.is_zero() && a.is_zero() { f64::INFINITY } else { a.correct_digits(e) };
            prop_assert!(agree >= 58.0, "agree {agree}");
        }

        #[test]
        fn tail_bounded_by_chernoff((n, k, a, b) in arb_case()) {
            let s = spec(n, &format!("{a}/{b}"));
            let (dir, informative) = if k * b > a * n {
                (Direction::Upper, true)
            } else if k * b < a * n {
                (Direction::Lower, true)
            } else {
                (Direction::Upper, false)
            };
            prop_assume!(informative);
            let t = tail(&TailQuery::new(s.clone(), k, dir).unwrap()).unwrap();
            let c = chernoff(&s, k, dir).unwrap();
            // Equality holds at k = 0 and k = n; allow last-digit noise.
            prop_assert!(t.log10_f64() <= c.log10_f64() + 1e-12);
        }

        #[test]
        fn upper_tail_increases_with_p((n, k, a, b) in arb_case()) {
            prop_assume!(k >= 1 && a + 1 < b);
            let lo = tail(&TailQuery::upper(spec(n, &format!("{a}/{b}")), k).unwrap()).unwrap();
            let hi = tail(&TailQuery::upper(spec(n, &format!("{}/{b}", a + 1)), k).unwrap()).unwrap();
            prop_assert!(hi >= lo);
        }

        #[test]
        fn upper_tail_decreases_with_threshold((n, k, a, b) in arb_case()) {
            prop_assume!(k < n);
            let s = spec(n, &format!("{a}/{b}"));
            let at = tail(&TailQuery::upper(s.clone(), k).unwrap()).unwrap();
            let next = tail(&TailQuery::upper(s, k + 1).unwrap()).unwrap();
            prop_assert!(next <= at);
        }
    }
}
