//! Extended-precision real arithmetic.
//!
//! Every probability handled by this crate lives far outside the range of
//! `f64` (the headline values sit near `1e-9474`), so the numerical engine is
//! written against [`XReal`], a binary floating-point number with an
//! arbitrary-precision significand and a machine-word exponent. Precision is
//! always an explicit value carried by each number; there is no global
//! context.
//!
//! Positive quantities that only ever need to be compared, multiplied, or
//! printed are carried as a [`LogMagnitude`], the base-10 logarithm of the
//! quantity.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use dashu_base::{BitTest, UnsignedAbs};
use dashu_float::round::mode::HalfEven;
use dashu_float::{DBig, FBig};
use dashu_int::{IBig, Sign, UBig};

use crate::error::{Error, Result};

type Big = FBig<HalfEven, 2>;

const LOG2_10: f64 = std::f64::consts::LOG2_10;
const GUARD_BITS: usize = 16;

/// Working precision in decimal digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Precision(u32);

impl Precision {
    pub const DEFAULT: Precision = Precision(64);

    pub fn new(digits: u32) -> Result<Self> {
        if digits < 2 {
            return Err(Error::domain(format!(
                "precision must be at least 2 decimal digits, got {digits}"
            )));
        }
        Ok(Precision(digits))
    }

    pub fn digits(self) -> u32 {
        self.0
    }

    /// Binary significand width used to honour the decimal contract.
    pub fn bits(self) -> usize {
        (f64::from(self.0) * LOG2_10).ceil() as usize + GUARD_BITS
    }

    /// The same precision widened by `extra` decimal digits.
    pub fn widen(self, extra: u32) -> Precision {
        Precision(self.0 + extra)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::DEFAULT
    }
}

/// Arithmetic kinds accepted by [`arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Elementary functions accepted by [`elementary`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elementary {
    Ln,
    Exp,
    Log10,
    Pow,
}

/// Arbitrary-precision signed real.
///
/// Results of arithmetic are rounded to the larger of the operands'
/// precisions. Zero is canonical.
#[derive(Clone, Debug)]
pub struct XReal {
    inner: Big,
    prec: Precision,
}

impl XReal {
    fn wrap(inner: Big, prec: Precision) -> Self {
        XReal { inner, prec }
    }

    fn rounded(value: Big, prec: Precision) -> Self {
        XReal::wrap(value.with_precision(prec.bits()).value(), prec)
    }

    pub fn zero(prec: Precision) -> Self {
        XReal::rounded(Big::ZERO, prec)
    }

    pub fn one(prec: Precision) -> Self {
        XReal::rounded(Big::ONE, prec)
    }

    pub fn from_int(value: impl Into<IBig>, prec: Precision) -> Self {
        XReal::rounded(Big::from(value.into()), prec)
    }

    /// `num / den` rounded once.
    pub fn from_ratio(num: impl Into<IBig>, den: impl Into<IBig>, prec: Precision) -> Result<Self> {
        let den = XReal::from_int(den, prec.widen(4));
        XReal::from_int(num, prec.widen(4))
            .div(&den)
            .map(|q| q.with_precision(prec))
    }

    pub fn from_f64(value: f64, prec: Precision) -> Result<Self> {
        let inner = Big::try_from(value)
            .map_err(|_| Error::domain(format!("{value} is not a finite real")))?;
        Ok(XReal::rounded(inner, prec))
    }

    /// Parses a decimal literal such as `0.994` or `1.24355865e-2018`.
    pub fn parse(text: &str, prec: Precision) -> Result<Self> {
        let decimal = DBig::from_str(text.trim())
            .map_err(|e| Error::domain(format!("cannot parse {text:?} as a real: {e}")))?;
        let inner = decimal
            .with_base_and_precision::<2>(prec.bits())
            .value()
            .with_rounding::<HalfEven>();
        Ok(XReal::rounded(inner, prec))
    }

    pub fn precision(&self) -> Precision {
        self.prec
    }

    pub fn with_precision(&self, prec: Precision) -> Self {
        XReal::rounded(self.inner.clone(), prec)
    }

    /// -1, 0 or +1.
    pub fn signum(&self) -> i8 {
        if self.inner.repr().is_zero() {
            0
        } else {
            match self.inner.sign() {
                Sign::Positive => 1,
                Sign::Negative => -1,
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.signum() == 0
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    fn common(&self, other: &XReal) -> Precision {
        self.prec.max(other.prec)
    }

    pub fn add(&self, other: &XReal) -> Self {
        XReal::wrap(&self.inner + &other.inner, self.common(other))
    }

    pub fn sub(&self, other: &XReal) -> Self {
        XReal::wrap(&self.inner - &other.inner, self.common(other))
    }

    pub fn mul(&self, other: &XReal) -> Self {
        XReal::wrap(&self.inner * &other.inner, self.common(other))
    }

    pub fn div(&self, other: &XReal) -> Result<Self> {
        if other.is_zero() {
            return Err(Error::domain("division by zero"));
        }
        Ok(XReal::wrap(&self.inner / &other.inner, self.common(other)))
    }

    /// Integer power; defined for every base except `0^negative`.
    pub fn powi(&self, exponent: i64) -> Result<Self> {
        if self.is_zero() && exponent < 0 {
            return Err(Error::domain("zero raised to a negative power"));
        }
        Ok(XReal::wrap(
            self.inner.powi(IBig::from(exponent)),
            self.prec,
        ))
    }

    pub fn ln(&self) -> Result<Self> {
        self.ln_impl(None)
    }

    /// [`XReal::ln`] reusing precomputed constants.
    pub fn ln_with(&self, constants: &LogConstants) -> Result<Self> {
        self.ln_impl(Some(constants))
    }

    fn ln_impl(&self, constants: Option<&LogConstants>) -> Result<Self> {
        if self.signum() <= 0 {
            return Err(Error::domain(format!(
                "logarithm of non-positive value {}",
                self.to_sci_string(12)
            )));
        }
        // x = m·2^e with m in [1/√2, √2), so ln x = ln m + e·ln2.
        let mut e = binary_magnitude(self);
        let exponent_digits = ((e.unsigned_abs() + 1) as f64).log10().ceil() as u32;
        let wide = self.prec.widen(exponent_digits + 2);
        let mut m = XReal::rounded(self.inner.clone() >> e, wide);
        if m.to_f64() < std::f64::consts::FRAC_1_SQRT_2 {
            m = XReal::wrap(m.inner << 1, wide);
            e -= 1;
        }
        let ln_m = ln_near_one(&m);
        if e == 0 {
            return Ok(ln_m.with_precision(self.prec));
        }
        let ln2 = match constants {
            Some(c) if c.prec >= wide => c.ln2.clone(),
            _ => ln2(wide),
        };
        Ok(ln_m
            .add(&XReal::from_int(e as i64, wide).mul(&ln2))
            .with_precision(self.prec))
    }

    pub fn log10(&self) -> Result<Self> {
        let wide = self.prec.widen(2);
        let ln = self.with_precision(wide).ln()?;
        Ok(ln.div(&ln10(wide))?.with_precision(self.prec))
    }

    /// [`XReal::log10`] reusing precomputed constants.
    pub fn log10_with(&self, constants: &LogConstants) -> Result<Self> {
        let wide = self.prec.widen(2);
        if constants.prec < wide {
            return self.log10();
        }
        let ln = self.with_precision(wide).ln_with(constants)?;
        Ok(ln.div(&constants.ln10)?.with_precision(self.prec))
    }

    /// `ln(1 - s)` for `0 ≤ s < 1`, accurate relative to the result even
    /// when `s` is far below the working precision.
    pub fn ln_one_minus(&self) -> Result<Self> {
        let one = XReal::one(self.prec);
        if self.signum() < 0 || *self >= one {
            return Err(Error::domain(format!(
                "ln(1 - s) needs 0 ≤ s < 1, got s = {}",
                self.to_sci_string(12)
            )));
        }
        if self.to_f64() >= 0.5 {
            return one.sub(self).ln();
        }
        // 1 - s = (1 - t)/(1 + t) with t = s/(2 - s).
        let wide = self.prec.widen(2);
        let s = self.with_precision(wide);
        let t = s.div(&XReal::from_int(2, wide).sub(&s))?;
        Ok(two_atanh(t).neg().with_precision(self.prec))
    }

    /// `log10(1 - s)`, see [`XReal::ln_one_minus`].
    pub fn log10_one_minus_with(&self, constants: &LogConstants) -> Result<Self> {
        let wide = self.prec.widen(2);
        let ln = self.with_precision(wide).ln_one_minus()?;
        let ln10 = if constants.prec >= wide {
            constants.ln10.clone()
        } else {
            ln10(wide)
        };
        Ok(ln.div(&ln10)?.with_precision(self.prec))
    }

    pub fn mul_u64(&self, v: u64) -> Self {
        XReal::wrap(&self.inner * v, self.prec)
    }

    pub fn div_u64(&self, v: u64) -> Result<Self> {
        if v == 0 {
            return Err(Error::domain("division by zero"));
        }
        Ok(XReal::wrap(&self.inner / v, self.prec))
    }

    /// `e^x`. The exponent is a machine word of binary orders, so arguments
    /// up to about `10^17` in magnitude neither overflow nor underflow.
    pub fn exp(&self) -> Self {
        // Reduce to x = k·ln2 + r with |r| ≤ ln2/2, then scale by 2^k.
        let magnitude_digits = self.to_f64().abs().max(1.0).log10().ceil() as u32;
        let wide = self.prec.widen(magnitude_digits + 2);
        let x = self.with_precision(wide);
        let ln2 = XReal::from_int(2, wide).ln().expect("2 is positive");
        let k = x.div(&ln2).expect("ln 2 is non-zero").round();
        let r = x.sub(&k.mul(&ln2));
        let shift = k.to_i64_exact().expect("exponent fits a machine word") as isize;
        let scaled = r.with_precision(self.prec.widen(2)).inner.exp() << shift;
        XReal::rounded(scaled, self.prec)
    }

    /// `10^x`.
    pub fn exp10(&self) -> Self {
        let wide = self.prec.widen(2);
        self.with_precision(wide)
            .mul(&ln10(wide))
            .exp()
            .with_precision(self.prec)
    }

    /// `self^y`; a negative base is only allowed for integral `y`.
    pub fn pow(&self, y: &XReal) -> Result<Self> {
        if let Some(k) = y.to_i64_exact() {
            return self.powi(k);
        }
        if self.signum() <= 0 {
            return Err(Error::domain("non-integral power of a non-positive base"));
        }
        let wide = self.common(y).widen(4);
        let ln = self.with_precision(wide).ln()?;
        Ok(ln
            .mul(&y.with_precision(wide))
            .exp()
            .with_precision(self.common(y)))
    }

    pub fn floor(&self) -> Self {
        XReal::wrap(self.inner.floor(), self.prec)
    }

    pub fn round(&self) -> Self {
        XReal::wrap(self.inner.round(), self.prec)
    }

    /// The value as an `i64` when it is an integer that fits.
    pub fn to_i64_exact(&self) -> Option<i64> {
        if !self.inner.repr().is_int() {
            return None;
        }
        i64::try_from(self.inner.to_int().value()).ok()
    }

    /// The value as an integer, rounding toward negative infinity.
    pub fn floor_to_ibig(&self) -> IBig {
        self.inner.floor().to_int().value()
    }

    /// `floor(log2 |x|) + 1`, or `None` for zero.
    pub fn binary_order(&self) -> Option<isize> {
        (!self.is_zero()).then(|| binary_magnitude(self))
    }

    pub fn to_f64(&self) -> f64 {
        self.inner.to_f64().value()
    }

    /// Number of leading decimal digits on which `self` agrees with
    /// `reference`; infinite when they are equal.
    pub fn correct_digits(&self, reference: &XReal) -> f64 {
        let diff = self.sub(reference).abs();
        if diff.is_zero() {
            return f64::INFINITY;
        }
        if reference.is_zero() {
            return -log10_f64_of(&diff);
        }
        log10_f64_of(&reference.abs()) - log10_f64_of(&diff)
    }

    /// Decimal scientific rendering with `sig` significant digits, e.g.
    /// `-3.33333e-1`.
    pub fn to_sci_string(&self, sig: usize) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let sig = sig.max(1);
        let (significand, exponent) = self.inner.repr().clone().into_parts();
        let negative = significand < IBig::ZERO;
        let magnitude = significand.unsigned_abs();
        // Estimate the decimal exponent, then correct it if the rounded
        // digit string comes out one short or one long.
        let mut sci_exp = log10_f64_of(self).floor() as i64;
        let digits = loop {
            let digits = scaled_digits(&magnitude, exponent, sig as i64 - 1 - sci_exp).to_string();
            match digits.len().cmp(&sig) {
                Ordering::Equal => break digits,
                Ordering::Greater
                    if digits.len() == sig + 1 && digits.ends_with('0') && {
                        // Rounding carried into a new leading digit: 99.96 → 1.000e2.
                        let head = &digits[..sig];
                        head.starts_with('1') && head[1..].bytes().all(|b| b == b'0')
                    } =>
                {
                    sci_exp += 1;
                    break digits[..sig].to_string();
                }
                Ordering::Greater => sci_exp += 1,
                Ordering::Less => sci_exp -= 1,
            }
        };
        let digits = digits.trim_end_matches('0');
        let mut out = String::new();
        if negative {
            out.push('-');
        }
        out.push_str(&digits[..1]);
        if digits.len() > 1 {
            out.push('.');
            out.push_str(&digits[1..]);
        }
        out.push_str(&format!("e{sci_exp}"));
        out
    }

    /// Positional decimal form with at most `sig` significant digits, such
    /// as `-9473.38211191877` or `0.000125`.
    pub fn to_plain_string(&self, sig: usize) -> String {
        let sci = self.to_sci_string(sig);
        let Some((mantissa, exp)) = sci.split_once('e') else {
            return sci;
        };
        let exp: i64 = exp.parse().expect("exponent is an integer");
        let (sign, mantissa) = match mantissa.strip_prefix('-') {
            Some(m) => ("-", m),
            None => ("", mantissa),
        };
        let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
        let body = if exp < 0 {
            format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
        } else if (exp as usize) + 1 >= digits.len() {
            format!("{digits}{}", "0".repeat(exp as usize + 1 - digits.len()))
        } else {
            let (int, frac) = digits.split_at(exp as usize + 1);
            format!("{int}.{frac}")
        };
        format!("{sign}{body}")
    }
}

/// `round(m·2^b·10^s)` with ties to even, in exact integer arithmetic.
fn scaled_digits(m: &UBig, b: isize, s: i64) -> UBig {
    let ten = UBig::from(10u8);
    let mut num = m.clone();
    let mut den = UBig::ONE;
    if s >= 0 {
        num *= ten.pow(s as usize);
    } else {
        den *= ten.pow((-s) as usize);
    }
    if b >= 0 {
        num <<= b as usize;
    } else {
        den <<= (-b) as usize;
    }
    let (q, r) = (&num / &den, &num % &den);
    let twice = r << 1;
    if twice > den || (twice == den && q.bit(0)) {
        q + UBig::ONE
    } else {
        q
    }
}

fn log10_f64_of(x: &XReal) -> f64 {
    // Split into binary mantissa and exponent so huge values stay finite.
    let (significand, exponent) = x.inner.repr().clone().into_parts();
    let magnitude = significand.unsigned_abs();
    let bits = magnitude.bit_len();
    let keep = bits.min(60);
    let top: u64 = (magnitude >> (bits - keep)).try_into().unwrap_or(u64::MAX);
    let shift = exponent as f64 + (bits - keep) as f64;
    ((top as f64).log2() + shift) / LOG2_10
}

/// `ln 2` and `ln 10`, computed once and shared by many logarithms.
#[derive(Clone, Debug)]
pub struct LogConstants {
    prec: Precision,
    ln2: XReal,
    ln10: XReal,
}

impl LogConstants {
    /// Constants good for logarithms at up to `prec` digits of values whose
    /// binary exponent has at most `exponent_digits` decimal digits.
    pub fn new(prec: Precision, exponent_digits: u32) -> Self {
        let prec = prec.widen(exponent_digits + 4);
        LogConstants {
            prec,
            ln2: ln2(prec),
            ln10: ln10(prec),
        }
    }

    pub fn ln10(&self) -> &XReal {
        &self.ln10
    }
}

/// `ln m = 2·atanh((m - 1)/(m + 1))` for `m` near 1.
fn ln_near_one(m: &XReal) -> XReal {
    let one = XReal::one(m.prec);
    two_atanh(m.sub(&one).div(&m.add(&one)).expect("m is positive"))
}

/// `2·atanh(s)` by the odd power series; converges quickly for `|s| ≤ 1/3`.
fn two_atanh(s: XReal) -> XReal {
    let prec = s.prec;
    if s.is_zero() {
        return XReal::zero(prec);
    }
    let s_sq = s.mul(&s);
    let mut power = s.clone();
    let mut sum = s;
    let limit = binary_magnitude(&sum) - prec.bits() as isize - 8;
    let mut k = 1u64;
    loop {
        power = power.mul(&s_sq);
        let term = power.div_u64(2 * k + 1).expect("odd divisor");
        if term.is_zero() || binary_magnitude(&term) < limit {
            break;
        }
        sum = sum.add(&term);
        k += 1;
    }
    XReal::wrap(sum.inner << 1, prec)
}

/// `ln 2` at the requested precision.
pub fn ln2(prec: Precision) -> XReal {
    // 2 = (1 + 1/3)/(1 - 1/3)
    let wide = prec.widen(2);
    let four_thirds = XReal::from_ratio(4, 3, wide).expect("non-zero denominator");
    let three_halves = XReal::from_ratio(3, 2, wide).expect("non-zero denominator");
    // ln 2 = ln(4/3) + ln(3/2), both arguments close to one.
    ln_near_one(&four_thirds)
        .add(&ln_near_one(&three_halves))
        .with_precision(prec)
}

/// `ln 10` at the requested precision.
pub fn ln10(prec: Precision) -> XReal {
    XReal::from_int(10, prec).ln().expect("10 is positive")
}

/// `π` at the requested precision, from Machin's formula.
pub fn pi(prec: Precision) -> XReal {
    let wide = prec.widen(4);
    let a = arctan_inverse(5, wide);
    let b = arctan_inverse(239, wide);
    let pi = XReal::from_int(16, wide)
        .mul(&a)
        .sub(&XReal::from_int(4, wide).mul(&b));
    pi.with_precision(prec)
}

/// `atan(1/x)` for integer `x ≥ 2` by its alternating Taylor series.
fn arctan_inverse(x: i64, prec: Precision) -> XReal {
    let x = XReal::from_int(x, prec);
    let x_sq = x.mul(&x);
    let one = XReal::one(prec);
    let mut power = one.div(&x).expect("x is non-zero");
    let mut sum = power.clone();
    let limit = -(prec.bits() as isize) - 8;
    let mut k: i64 = 1;
    loop {
        power = power.div(&x_sq).expect("x is non-zero");
        let term = power
            .div(&XReal::from_int(2 * k + 1, prec))
            .expect("odd denominator");
        if binary_magnitude(&term) < limit {
            break;
        }
        sum = if k % 2 == 1 {
            sum.sub(&term)
        } else {
            sum.add(&term)
        };
        k += 1;
    }
    sum
}

/// Position of the leading bit, i.e. `floor(log2 |x|) + 1`.
fn binary_magnitude(x: &XReal) -> isize {
    let repr = x.inner.repr();
    if repr.is_zero() {
        return isize::MIN;
    }
    repr.exponent() + repr.significand().unsigned_abs().bit_len() as isize
}

/// Applies one of the four basic operations.
pub fn arith(op: ArithOp, a: &XReal, b: &XReal) -> Result<XReal> {
    match op {
        ArithOp::Add => Ok(a.add(b)),
        ArithOp::Sub => Ok(a.sub(b)),
        ArithOp::Mul => Ok(a.mul(b)),
        ArithOp::Div => a.div(b),
    }
}

/// Applies an elementary function; `y` is required for [`Elementary::Pow`]
/// and ignored otherwise.
pub fn elementary(kind: Elementary, x: &XReal, y: Option<&XReal>) -> Result<XReal> {
    match kind {
        Elementary::Ln => x.ln(),
        Elementary::Exp => Ok(x.exp()),
        Elementary::Log10 => x.log10(),
        Elementary::Pow => {
            let y = y.ok_or_else(|| Error::domain("pow requires an exponent"))?;
            x.pow(y)
        }
    }
}

impl PartialEq for XReal {
    fn eq(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

impl PartialOrd for XReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.inner.cmp(&other.inner))
    }
}

impl Add for &XReal {
    type Output = XReal;
    fn add(self, rhs: &XReal) -> XReal {
        XReal::add(self, rhs)
    }
}

impl Sub for &XReal {
    type Output = XReal;
    fn sub(self, rhs: &XReal) -> XReal {
        XReal::sub(self, rhs)
    }
}

impl Mul for &XReal {
    type Output = XReal;
    fn mul(self, rhs: &XReal) -> XReal {
        XReal::mul(self, rhs)
    }
}

impl Neg for &XReal {
    type Output = XReal;
    fn neg(self) -> XReal {
        XReal::wrap(-self.inner.clone(), self.prec)
    }
}

impl Neg for XReal {
    type Output = XReal;
    fn neg(self) -> XReal {
        XReal::wrap(-self.inner, self.prec)
    }
}

impl fmt::Display for XReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sig = f.precision().unwrap_or(self.prec.digits() as usize);
        f.write_str(&self.to_sci_string(sig))
    }
}

/// A positive quantity stored as its base-10 logarithm, or the exact zero.
#[derive(Clone, Debug)]
pub struct LogMagnitude {
    value: XReal,
    is_zero: bool,
}

impl LogMagnitude {
    /// The exact zero quantity (logarithm −∞).
    pub fn zero(prec: Precision) -> Self {
        LogMagnitude {
            value: XReal::zero(prec),
            is_zero: true,
        }
    }

    /// The quantity 1.
    pub fn one(prec: Precision) -> Self {
        LogMagnitude::from_log10(XReal::zero(prec))
    }

    pub fn from_log10(value: XReal) -> Self {
        LogMagnitude {
            value,
            is_zero: false,
        }
    }

    /// Takes the logarithm of a non-negative value.
    pub fn from_value(x: &XReal) -> Result<Self> {
        match x.signum() {
            0 => Ok(LogMagnitude::zero(x.precision())),
            1 => Ok(LogMagnitude::from_log10(x.log10()?)),
            _ => Err(Error::domain("negative value has no log magnitude")),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.is_zero
    }

    /// [`LogMagnitude::from_value`] reusing precomputed constants.
    pub fn from_value_with(x: &XReal, constants: &LogConstants) -> Result<Self> {
        match x.signum() {
            0 => Ok(LogMagnitude::zero(x.precision())),
            1 => Ok(LogMagnitude::from_log10(x.log10_with(constants)?)),
            _ => Err(Error::domain("negative value has no log magnitude")),
        }
    }

    /// The magnitude of `1 - rest` for `0 ≤ rest < 1`, without forming the
    /// difference.
    pub fn one_minus_with(rest: &XReal, constants: &LogConstants) -> Result<Self> {
        Ok(LogMagnitude::from_log10(
            rest.log10_one_minus_with(constants)?,
        ))
    }

    /// The base-10 logarithm, `None` for the exact zero.
    pub fn log10(&self) -> Option<&XReal> {
        (!self.is_zero).then_some(&self.value)
    }

    pub fn log10_f64(&self) -> f64 {
        if self.is_zero {
            f64::NEG_INFINITY
        } else {
            self.value.to_f64()
        }
    }

    pub fn precision(&self) -> Precision {
        self.value.precision()
    }

    pub fn with_precision(&self, prec: Precision) -> Self {
        LogMagnitude {
            value: self.value.with_precision(prec),
            is_zero: self.is_zero,
        }
    }

    /// Product of two quantities.
    pub fn mul(&self, other: &LogMagnitude) -> LogMagnitude {
        if self.is_zero || other.is_zero {
            return LogMagnitude::zero(self.precision().max(other.precision()));
        }
        LogMagnitude::from_log10(self.value.add(&other.value))
    }

    /// The quantity itself as an [`XReal`].
    pub fn to_xreal(&self) -> XReal {
        if self.is_zero {
            XReal::zero(self.precision())
        } else {
            self.value.exp10()
        }
    }

    /// Mantissa in `[1, 10)` and decimal exponent; `None` for zero.
    pub fn mantissa_exponent(&self) -> Option<(XReal, i64)> {
        if self.is_zero {
            return None;
        }
        let exponent = self.value.floor();
        let mantissa = self.value.sub(&exponent).exp10();
        let exponent = exponent.to_i64_exact()?;
        Some((mantissa, exponent))
    }

    /// Scientific notation with `sig` significant digits.
    pub fn to_scientific(&self, sig: usize) -> Scientific {
        let sig = sig.max(1);
        if self.is_zero {
            return Scientific::zero(sig);
        }
        let wide = self.precision().widen(4);
        let value = self.value.with_precision(wide);
        let mut exponent = value.floor();
        let mantissa = value.sub(&exponent).exp10();
        let scale = XReal::from_int(10, wide)
            .powi(sig as i64 - 1)
            .expect("non-zero base");
        let mut digits = mantissa.mul(&scale).round().floor_to_ibig().to_string();
        if digits.len() > sig {
            // Rounded up to the next power of ten.
            digits.truncate(sig);
            exponent = exponent.add(&XReal::one(wide));
        }
        Scientific {
            digits,
            exponent: exponent.to_i64_exact().unwrap_or(i64::MAX),
        }
    }
}

impl PartialEq for LogMagnitude {
    fn eq(&self, other: &Self) -> bool {
        match (self.is_zero, other.is_zero) {
            (true, true) => true,
            (false, false) => self.value == other.value,
            _ => false,
        }
    }
}

impl PartialOrd for LogMagnitude {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self.is_zero, other.is_zero) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (false, false) => self.value.partial_cmp(&other.value),
        }
    }
}

/// A decimal number `d.ddd × 10^exponent` with a fixed count of significant
/// digits, used to print magnitudes no hardware float can hold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scientific {
    /// Significant digits without the decimal point; all zeros for zero.
    pub digits: String,
    pub exponent: i64,
}

impl Scientific {
    fn zero(sig: usize) -> Self {
        Scientific {
            digits: "0".repeat(sig),
            exponent: 0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.digits.bytes().all(|b| b == b'0')
    }

    /// The mantissa as text, e.g. `4.14847122`.
    pub fn mantissa(&self) -> String {
        if self.digits.len() == 1 {
            self.digits.clone()
        } else {
            format!("{}.{}", &self.digits[..1], &self.digits[1..])
        }
    }
}

impl fmt::Display for Scientific {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        write!(f, "{}e{}", self.mantissa(), self.exponent)
    }
}

/// `log10(Σ 10^t_i)` evaluated as `t_max + log10(Σ 10^(t_i − t_max))`.
///
/// Exact-zero terms are skipped; an input of only zeros yields the exact
/// zero. The sequence must be non-empty.
pub fn log_sum_exp10(terms: &[LogMagnitude]) -> Result<LogMagnitude> {
    let first = terms
        .first()
        .ok_or_else(|| Error::domain("log_sum_exp10 of an empty sequence"))?;
    let prec = terms
        .iter()
        .map(LogMagnitude::precision)
        .max()
        .unwrap_or(first.precision());
    let Some(max) = terms
        .iter()
        .filter_map(LogMagnitude::log10)
        .max_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal))
    else {
        return Ok(LogMagnitude::zero(prec));
    };
    let wide = prec.widen(4);
    let max = max.with_precision(wide);
    let ln10 = ln10(wide);
    let mut sum = XReal::zero(wide);
    for t in terms.iter().filter_map(LogMagnitude::log10) {
        let shifted = t.with_precision(wide).sub(&max);
        sum = sum.add(&shifted.mul(&ln10).exp());
    }
    let log_sum = sum.ln()?.div(&ln10)?;
    Ok(LogMagnitude::from_log10(
        max.add(&log_sum).with_precision(prec),
    ))
}
