//! Exact rational binomial tails.
//!
//! With `p = a/b` every tail is the rational
//! `Σ C(n,k)·a^k·(b-a)^(n-k) / b^n`. This module evaluates it with
//! `num-bigint` integers only, independent of the extended-precision path in
//! the parent module, so the two can check each other.

use std::fmt;

use dashu_int::{IBig, UBig};
use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};

use super::{Direction, RationalP, TailQuery};
use crate::error::{Error, Result};
use crate::xprec::{LogConstants, LogMagnitude, Precision, Scientific, XReal};

/// An exact tail probability in lowest terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactTail {
    value: BigRational,
}

impl ExactTail {
    pub fn value(&self) -> &BigRational {
        &self.value
    }

    pub fn numer(&self) -> &BigInt {
        self.value.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.value.denom()
    }

    pub fn is_one(&self) -> bool {
        self.value.is_one()
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    /// Decimal scientific form with `sig` significant digits, rounded half up,
    /// computed with integer arithmetic only.
    pub fn to_scientific(&self, sig: usize) -> Scientific {
        let sig = sig.max(1);
        let num = self.numer().magnitude().clone();
        let den = self.denom().magnitude().clone();
        if num.is_zero() {
            return Scientific {
                digits: "0".repeat(sig),
                exponent: 0,
            };
        }
        let ten = BigUint::from(10u32);
        // 10^e ≤ num/den < 10^(e+1)
        let bit_gap = num.bits() as f64 - den.bits() as f64;
        let mut e = (bit_gap * std::f64::consts::LOG10_2).floor() as i64;
        let below = |e: i64| -> bool {
            // num/den < 10^e ?
            if e >= 0 {
                num < &den * Pow::pow(&ten, e as u64)
            } else {
                &num * Pow::pow(&ten, (-e) as u64) < den
            }
        };
        while below(e) {
            e -= 1;
        }
        while !below(e + 1) {
            e += 1;
        }
        let shift = sig as i64 - 1 - e;
        let (scaled_num, scaled_den) = if shift >= 0 {
            (&num * Pow::pow(&ten, shift as u64), den)
        } else {
            (num, &den * Pow::pow(&ten, (-shift) as u64))
        };
        let (mut mantissa, rem) = scaled_num.div_rem(&scaled_den);
        if rem * 2u32 >= scaled_den {
            mantissa += 1u32;
        }
        let mut digits = mantissa.to_str_radix(10);
        if digits.len() > sig {
            digits.truncate(sig);
            e += 1;
        }
        Scientific {
            digits,
            exponent: e,
        }
    }

    /// The base-10 logarithm at working precision.
    pub fn log10(&self, prec: Precision) -> Result<LogMagnitude> {
        if self.is_zero() {
            return Ok(LogMagnitude::zero(prec));
        }
        let wide = prec.widen(4);
        let den = XReal::from_int(num_to_ibig(self.denom()), wide);
        let numer = self.numer();
        let log = if numer * 2 > *self.denom() {
            // Close to one: work from the exact complement.
            let rest = XReal::from_int(num_to_ibig(&(self.denom() - numer)), wide).div(&den)?;
            let constants = LogConstants::new(wide, 1);
            rest.log10_one_minus_with(&constants)?
        } else {
            XReal::from_int(num_to_ibig(numer), wide)
                .div(&den)?
                .log10()?
        };
        Ok(LogMagnitude::from_log10(log.with_precision(prec)))
    }
}

impl fmt::Display for ExactTail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

/// Converts a `num-bigint` integer into the representation used by
/// [`XReal`].
pub(crate) fn num_to_ibig(v: &BigInt) -> IBig {
    let magnitude = IBig::from(UBig::from_le_bytes(&v.magnitude().to_bytes_le()));
    match v.sign() {
        Sign::Minus => -magnitude,
        _ => magnitude,
    }
}

fn binomial(n: u64, k: u64) -> BigUint {
    let m = k.min(n - k);
    let mut c = BigUint::one();
    for i in 1..=m {
        c *= n - m + i;
        c /= i;
    }
    c
}

/// Distinct prime factors of `v` by trial division.
fn prime_factors(mut v: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= v {
        if v % f == 0 {
            out.push(f);
            while v % f == 0 {
                v /= f;
            }
        }
        f += 1;
    }
    if v > 1 {
        out.push(v);
    }
    out
}

/// `num / den^n` in lowest terms, cancelling only the primes of `den`.
fn reduce_over_power(mut num: BigUint, den: u64, n: u64) -> BigRational {
    if num.is_zero() {
        return BigRational::zero();
    }
    let mut den_value = BigUint::one();
    let mut remaining = den;
    for f in prime_factors(den) {
        let mut multiplicity = 0u64;
        while remaining % f == 0 {
            remaining /= f;
            multiplicity += 1;
        }
        let mut power = multiplicity * n;
        let fb = BigUint::from(f);
        while power > 0 {
            let (q, r) = num.div_rem(&fb);
            if !r.is_zero() {
                break;
            }
            num = q;
            power -= 1;
        }
        den_value *= Pow::pow(&fb, power);
    }
    BigRational::new_raw(BigInt::from(num), BigInt::from(den_value))
}

/// Exact tail for `n` trials with `p = ratio`, at threshold `k_threshold`.
pub fn exact_tail_parts(
    n: u64,
    k_threshold: u64,
    direction: Direction,
    ratio: RationalP,
) -> Result<ExactTail> {
    if k_threshold > n {
        return Err(Error::domain(format!(
            "threshold K = {k_threshold} exceeds n = {n}"
        )));
    }
    let ratio = RationalP::new(ratio.num, ratio.den)?;
    let a = BigUint::from(ratio.num);
    let c = BigUint::from(ratio.den - ratio.num);
    let (from, to) = match direction {
        Direction::Upper => (k_threshold, n),
        Direction::Lower => (k_threshold, 0),
    };
    // term(k) = C(n,k)·a^k·c^(n-k)
    let mut term = binomial(n, from) * Pow::pow(&a, from) * Pow::pow(&c, n - from);
    let mut sum = term.clone();
    let mut k = from;
    while k != to {
        if from < to {
            term = term * (n - k) / (k + 1);
            term = term * &a / &c;
            k += 1;
        } else {
            term = term * k / (n - k + 1);
            term = term * &c / &a;
            k -= 1;
        }
        sum += &term;
    }
    Ok(ExactTail {
        value: reduce_over_power(sum, ratio.den, n),
    })
}

/// Exact big-rational evaluation of a tail whose `p` was given as a
/// fraction.
pub fn tail_exact(query: &TailQuery) -> Result<ExactTail> {
    let ratio = query
        .spec
        .exact_p()
        .ok_or_else(|| Error::domain("the exact tail needs p given as a fraction a/b"))?;
    exact_tail_parts(query.spec.n(), query.threshold, query.direction, ratio)
}
