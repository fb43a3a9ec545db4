//! Arbitrary-precision scaffolding: exact rationals, fixed-precision reals,
//! the conjugate exponent pair and generalized binomial coefficients.
//!
//! Exact values are `rug::Rational` (always stored in lowest terms, so equality
//! is structural). Real values are MPFR floats rounded to nearest at a declared
//! precision.

use std::cmp::Ordering;
use std::fmt;

use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

/// Exact arbitrary-precision rational, always reduced with a positive denominator.
pub type BigRational = Rational;

/// Smallest working precision accepted by the real-valued routines.
pub const MIN_PRECISION_BITS: u32 = 16;

/// Largest working precision handed to the backend (about 20 million digits).
pub const MAX_PRECISION_BITS: u32 = 1 << 26;

/// Guard bits added on top of the digit and cancellation budget.
pub const GUARD_BITS: u32 = 32;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// A real number carried at an explicit binary precision.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecReal {
    value: Float,
}

impl PrecReal {
    pub fn new(value: Float) -> Self {
        Self { value }
    }

    pub fn from_rational(r: &BigRational, bits: u32) -> Self {
        Self::new(Float::with_val(bits, r))
    }

    pub fn from_f64(x: f64, bits: u32) -> Self {
        Self::new(Float::with_val(bits, x))
    }

    pub fn precision_bits(&self) -> u32 {
        self.value.prec()
    }

    pub fn value(&self) -> &Float {
        &self.value
    }

    pub fn into_inner(self) -> Float {
        self.value
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    /// Rounds (or widens) to `bits`.
    pub fn with_precision(&self, bits: u32) -> Self {
        Self::new(Float::with_val(bits, &self.value))
    }

    /// Orders two values carried at the same precision.
    pub fn try_cmp(&self, other: &Self) -> Result<Ordering> {
        self.same_precision(other)?;
        // NaN never appears: every constructor goes through finite arithmetic.
        Ok(self.value.partial_cmp(&other.value).unwrap_or(Ordering::Equal))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.same_precision(other)?;
        Ok(Self::new(Float::with_val(self.precision_bits(), &self.value - &other.value)))
    }

    fn same_precision(&self, other: &Self) -> Result<()> {
        if self.precision_bits() != other.precision_bits() {
            return Err(Error::PrecisionMismatch(self.precision_bits(), other.precision_bits()));
        }
        Ok(())
    }

    /// Scientific decimal string with exactly `digits` significant digits,
    /// e.g. `5.8578643762690495119831127579e-1`.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        decimal_string(&self.value, digits)
    }
}

impl fmt::Display for PrecReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = ((self.precision_bits() as f64) / LOG2_10).floor().max(1.0) as usize;
        f.write_str(&self.to_decimal_string(digits))
    }
}

pub(crate) fn decimal_string(x: &Float, digits: usize) -> String {
    let digits = digits.max(1);
    let (negative, mantissa, exp) = x.to_sign_string_exp(10, Some(digits));
    let mut out = String::with_capacity(digits + 8);
    if negative {
        out.push('-');
    }
    let (mantissa, exp10) = match exp {
        Some(e) => (mantissa, e - 1),
        None => ("0".repeat(digits), 0),
    };
    out.push_str(&mantissa[..1]);
    if digits > 1 {
        out.push('.');
        out.push_str(&mantissa[1..]);
    }
    out.push('e');
    out.push_str(&exp10.to_string());
    out
}

/// The exponent `p`, stored exactly when it is a ratio of integers.
#[derive(Clone, Debug, PartialEq)]
pub enum Exponent {
    Rational(BigRational),
    Real(PrecReal),
}

/// Hölder-conjugate pair `(p, q)` with `1/p + 1/q = 1`, `p > 1`.
///
/// Every downstream routine branches on [`ExponentPair::is_rational`]: rational
/// `p` takes the exact path (coefficients in `BigRational`), otherwise
/// coefficients are reals at the caller's precision.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentPair {
    p: Exponent,
}

impl ExponentPair {
    pub fn rational(p: BigRational) -> Result<Self> {
        if p <= 1 {
            return Err(Error::ExponentOutOfRange(p.to_string()));
        }
        Ok(Self { p: Exponent::Rational(p) })
    }

    pub fn integer(p: u32) -> Result<Self> {
        Self::rational(BigRational::from(p))
    }

    /// An exponent known only to finite precision (e.g. an irrational `p`).
    pub fn real(p: PrecReal) -> Result<Self> {
        if *p.value() <= 1 || !p.value().is_finite() {
            return Err(Error::ExponentOutOfRange(p.to_string()));
        }
        Ok(Self { p: Exponent::Real(p) })
    }

    /// Parses `"a/b"`, an integer, or a finite decimal (`"2.5"`, `"1e-3"`) as an exact rational.
    pub fn parse(s: &str) -> Result<Self> {
        Self::rational(parse_exact_rational(s)?)
    }

    pub fn exponent(&self) -> &Exponent {
        &self.p
    }

    pub fn is_rational(&self) -> bool {
        matches!(self.p, Exponent::Rational(_))
    }

    pub fn p_rational(&self) -> Option<&BigRational> {
        match &self.p {
            Exponent::Rational(p) => Some(p),
            Exponent::Real(_) => None,
        }
    }

    /// `q = p/(p-1)` exactly, for rational `p`.
    pub fn q_rational(&self) -> Option<BigRational> {
        self.p_rational().map(|p| p / Rational::from(p - 1u32))
    }

    /// `1/q = (p-1)/p` exactly, for rational `p`.
    pub fn inv_q_rational(&self) -> Option<BigRational> {
        self.p_rational().map(|p| Rational::from(p - 1u32) / p)
    }

    /// `p` when it is an integer.
    pub fn as_integer(&self) -> Option<u32> {
        let p = self.p_rational()?;
        if *p.denom() == 1 {
            p.numer().to_u32()
        } else {
            None
        }
    }

    pub fn p_f64(&self) -> f64 {
        match &self.p {
            Exponent::Rational(p) => p.to_f64(),
            Exponent::Real(p) => p.to_f64(),
        }
    }

    pub fn q_f64(&self) -> f64 {
        let p = self.p_f64();
        p / (p - 1.0)
    }

    pub fn p_float(&self, bits: u32) -> Float {
        match &self.p {
            Exponent::Rational(p) => Float::with_val(bits, p),
            Exponent::Real(p) => Float::with_val(bits, p.value()),
        }
    }

    pub fn p_minus_one_float(&self, bits: u32) -> Float {
        match &self.p {
            Exponent::Rational(p) => Float::with_val(bits, Rational::from(p - 1u32)),
            Exponent::Real(p) => Float::with_val(bits, p.value() - 1u32),
        }
    }

    pub fn q_float(&self, bits: u32) -> Float {
        match self.q_rational() {
            Some(q) => Float::with_val(bits, &q),
            None => {
                let p = self.p_float(bits);
                let pm1 = self.p_minus_one_float(bits);
                Float::with_val(bits, &p / &pm1)
            }
        }
    }

    pub fn inv_q_float(&self, bits: u32) -> Float {
        match self.inv_q_rational() {
            Some(r) => Float::with_val(bits, &r),
            None => {
                let p = self.p_float(bits);
                let pm1 = self.p_minus_one_float(bits);
                Float::with_val(bits, &pm1 / &p)
            }
        }
    }

    /// `p - 1` as a ring element (exact when `p` is rational).
    pub fn p_minus_one_scalar(&self, bits: u32) -> Scalar {
        match &self.p {
            Exponent::Rational(p) => Scalar::Exact(Rational::from(p - 1u32)),
            Exponent::Real(_) => Scalar::Real(self.p_minus_one_float(bits)),
        }
    }

    /// `1/q` as a ring element (exact when `p` is rational).
    pub fn inv_q_scalar(&self, bits: u32) -> Scalar {
        match self.inv_q_rational() {
            Some(r) => Scalar::Exact(r),
            None => Scalar::Real(self.inv_q_float(bits)),
        }
    }

    pub fn q_scalar(&self, bits: u32) -> Scalar {
        match self.q_rational() {
            Some(r) => Scalar::Exact(r),
            None => Scalar::Real(self.q_float(bits)),
        }
    }

    pub fn p_scalar(&self, bits: u32) -> Scalar {
        match &self.p {
            Exponent::Rational(p) => Scalar::Exact(p.clone()),
            Exponent::Real(_) => Scalar::Real(self.p_float(bits)),
        }
    }
}

impl fmt::Display for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.p {
            Exponent::Rational(p) => write!(f, "{p}"),
            Exponent::Real(p) => write!(f, "{}", p.to_decimal_string(20)),
        }
    }
}

/// A coefficient: exact rational or real at a fixed precision.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Real(Float),
}

impl Scalar {
    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn to_float(&self, bits: u32) -> Float {
        match self {
            Scalar::Exact(r) => Float::with_val(bits, r),
            Scalar::Real(x) => Float::with_val(bits, x),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => r.to_f64(),
            Scalar::Real(x) => x.to_f64(),
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Real(_) => None,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{r}"),
            Scalar::Real(x) => {
                let digits = ((x.prec() as f64) / LOG2_10).floor().max(1.0) as usize;
                f.write_str(&decimal_string(x, digits))
            }
        }
    }
}

/// Parses `"a/b"`, integers and finite decimals with optional exponent as exact rationals.
pub fn parse_exact_rational(s: &str) -> Result<BigRational> {
    let err = || Error::ParseRational(s.to_string());
    let t = s.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = t.split_once('/') {
        let num: Integer = num.trim().parse().map_err(|_| err())?;
        let den: Integer = den.trim().parse().map_err(|_| err())?;
        if den == 0 {
            return Err(err());
        }
        return Ok(Rational::from((num, den)));
    }

    let (mantissa, exp10) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = t[i + 1..].parse().map_err(|_| err())?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from(all_digits.parse::<Integer>().map_err(|_| err())?);
    let shift = exp10 - frac_part.len() as i32;
    let scale = Integer::from(Integer::u_pow_u(10, shift.unsigned_abs()));
    if shift >= 0 {
        value *= scale;
    } else {
        value /= scale;
    }
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Exact generalized binomial coefficient `alpha (alpha-1) ... (alpha-k+1) / k!`.
pub fn binom_general_rational(alpha: &BigRational, k: u32) -> BigRational {
    let mut acc = Rational::from(1);
    for i in 0..k {
        acc *= Rational::from(alpha - i);
        acc /= i + 1;
    }
    acc
}

/// The same falling-factorial product evaluated at `bits` of precision.
pub fn binom_general_real(alpha: &PrecReal, k: u32, bits: u32) -> Result<PrecReal> {
    check_precision(bits)?;
    Ok(PrecReal::new(binom_float(alpha.value(), k, bits)))
}

pub(crate) fn binom_float(alpha: &Float, k: u32, bits: u32) -> Float {
    let mut acc = Float::with_val(bits, 1);
    for i in 0..k {
        let factor = Float::with_val(bits, alpha - i);
        acc *= factor;
        acc /= i + 1;
    }
    acc
}

/// Generalized binomial coefficient in the ring of `alpha`.
pub fn binom_scalar(alpha: &Scalar, k: u32) -> Scalar {
    match alpha {
        Scalar::Exact(a) => Scalar::Exact(binom_general_rational(a, k)),
        Scalar::Real(a) => Scalar::Real(binom_float(a, k, a.prec())),
    }
}

/// `binom(alpha, k)` for `k = 0..=k_max`, built with the running ratio `(alpha-k+1)/k`.
pub fn binom_sequence(alpha: &Scalar, k_max: u32) -> Vec<Scalar> {
    match alpha {
        Scalar::Exact(a) => {
            let mut out = Vec::with_capacity(k_max as usize + 1);
            let mut acc = Rational::from(1);
            out.push(Scalar::Exact(acc.clone()));
            for k in 1..=k_max {
                acc *= Rational::from(a - (k - 1));
                acc /= k;
                out.push(Scalar::Exact(acc.clone()));
            }
            out
        }
        Scalar::Real(a) => {
            let bits = a.prec();
            let mut out = Vec::with_capacity(k_max as usize + 1);
            let mut acc = Float::with_val(bits, 1);
            out.push(Scalar::Real(acc.clone()));
            for k in 1..=k_max {
                acc *= Float::with_val(bits, a - (k - 1));
                acc /= k;
                out.push(Scalar::Real(acc.clone()));
            }
            out
        }
    }
}

pub(crate) fn check_precision(bits: u32) -> Result<()> {
    if bits < MIN_PRECISION_BITS {
        return Err(Error::PrecisionTooLow { got: bits, min: MIN_PRECISION_BITS });
    }
    if bits > MAX_PRECISION_BITS {
        return Err(Error::PrecisionInfeasible { requested: bits as u64, max: MAX_PRECISION_BITS });
    }
    Ok(())
}

/// Bits needed to carry `digits` significant decimal digits.
pub fn digits_to_bits(digits: u64) -> u64 {
    (digits as f64 * LOG2_10).ceil() as u64
}

/// Working precision for evaluating `w_p(n)` to `target_digits` digits.
///
/// `ceil(d log2 10) + ceil(max(p, 2) log2 n) + 32`. The brackets of `w_p(n)` share
/// about `log2 n` leading bits, and their difference is smaller than either by
/// another factor `n`, so at least `2 log2 n` bits are lost even when `p < 2`.
pub fn required_precision(pair: &ExponentPair, n: u64, target_decimal_digits: u64) -> Result<u32> {
    let n = n.max(1) as f64;
    let spread = (pair.p_f64().max(2.0) * n.log2()).ceil() as u64;
    let bits = digits_to_bits(target_decimal_digits) + spread + GUARD_BITS as u64;
    if bits > MAX_PRECISION_BITS as u64 {
        return Err(Error::PrecisionInfeasible { requested: bits, max: MAX_PRECISION_BITS });
    }
    Ok(bits.max(MIN_PRECISION_BITS as u64) as u32)
}
