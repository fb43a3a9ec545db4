//! Truncated power series in `x = 1/n` with exact or fixed-precision coefficients.
//!
//! Binary operations truncate to the smaller order of their inputs. Rings never
//! mix: an exact series only meets exact series, a real series only meets real
//! series of the same precision.

use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{binom_general_rational, binom_sequence, BigRational, ExponentPair, Scalar};

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ring {
    Exact,
    Real(u32),
}

#[derive(Clone, Debug, PartialEq)]
enum Coeffs {
    Exact(Vec<BigRational>),
    Real(Vec<Float>),
}

/// `Σ_{k=0}^{order} c_k x^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries {
    coeffs: Coeffs,
    bits: u32,
}

/// Minimal ring interface shared by the two coefficient types.
trait Coef: Clone {
    fn zero_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn is_zero(&self) -> bool;
}

impl Coef for Rational {
    fn zero_like(&self) -> Self {
        Rational::new()
    }
    fn add(&self, other: &Self) -> Self {
        Rational::from(self + other)
    }
    fn mul(&self, other: &Self) -> Self {
        Rational::from(self * other)
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
}

impl Coef for Float {
    fn zero_like(&self) -> Self {
        Float::new(self.prec())
    }
    fn add(&self, other: &Self) -> Self {
        Float::with_val(self.prec(), self + other)
    }
    fn mul(&self, other: &Self) -> Self {
        Float::with_val(self.prec(), self * other)
    }
    fn is_zero(&self) -> bool {
        Float::is_zero(self)
    }
}

fn cauchy<T: Coef>(a: &[T], b: &[T]) -> Vec<T> {
    let len = a.len().min(b.len());
    let mut out = vec![a[0].zero_like(); len];
    for (i, ai) in a.iter().enumerate().take(len) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(len - i) {
            out[i + j] = out[i + j].add(&ai.mul(bj));
        }
    }
    out
}

fn pow_binomial<T: Coef>(h: &[T], binoms: &[T]) -> Vec<T> {
    let len = h.len();
    let zero = h[0].zero_like();
    let mut result = vec![zero.clone(); len];
    let mut power = vec![zero; len];
    // h^0 = 1; one = binom(alpha, 0)
    power[0] = binoms[0].clone();
    for (k, b) in binoms.iter().enumerate() {
        if k > 0 {
            power = cauchy(&power, h);
        }
        // h has no constant term, so h^k starts at x^k.
        if k >= len {
            break;
        }
        for (r, pw) in result.iter_mut().zip(&power).skip(k) {
            *r = r.add(&b.mul(pw));
        }
    }
    result
}

impl PowerSeries {
    pub fn exact(coeffs: Vec<BigRational>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Precondition("a series carries at least one coefficient".into()));
        }
        Ok(Self { coeffs: Coeffs::Exact(coeffs), bits: 0 })
    }

    /// Real coefficients, all rounded to `bits`.
    pub fn real(bits: u32, coeffs: Vec<Float>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Precondition("a series carries at least one coefficient".into()));
        }
        let coeffs = coeffs.into_iter().map(|c| Float::with_val(bits, c)).collect();
        Ok(Self { coeffs: Coeffs::Real(coeffs), bits })
    }

    pub fn from_scalars(ring: Ring, coeffs: Vec<Scalar>) -> Result<Self> {
        match ring {
            Ring::Exact => Self::exact(
                coeffs.into_iter().map(|c| c.as_exact().cloned().ok_or(Error::RingMismatch)).collect::<Result<_>>()?,
            ),
            Ring::Real(bits) => Self::real(bits, coeffs.iter().map(|c| c.to_float(bits)).collect()),
        }
    }

    pub fn zero(ring: Ring, order: usize) -> Self {
        match ring {
            Ring::Exact => Self { coeffs: Coeffs::Exact(vec![Rational::new(); order + 1]), bits: 0 },
            Ring::Real(bits) => Self { coeffs: Coeffs::Real(vec![Float::new(bits); order + 1]), bits },
        }
    }

    pub fn one(ring: Ring, order: usize) -> Self {
        let mut s = Self::zero(ring, order);
        match &mut s.coeffs {
            Coeffs::Exact(c) => c[0] = Rational::from(1),
            Coeffs::Real(c) => c[0] = Float::with_val(s.bits, 1),
        }
        s
    }

    pub fn ring(&self) -> Ring {
        match self.coeffs {
            Coeffs::Exact(_) => Ring::Exact,
            Coeffs::Real(_) => Ring::Real(self.bits),
        }
    }

    /// Truncation order (inclusive).
    pub fn order(&self) -> usize {
        self.len() - 1
    }

    fn len(&self) -> usize {
        match &self.coeffs {
            Coeffs::Exact(c) => c.len(),
            Coeffs::Real(c) => c.len(),
        }
    }

    pub fn coeff(&self, k: usize) -> Option<Scalar> {
        match &self.coeffs {
            Coeffs::Exact(c) => c.get(k).cloned().map(Scalar::Exact),
            Coeffs::Real(c) => c.get(k).cloned().map(Scalar::Real),
        }
    }

    pub fn exact_coeffs(&self) -> Option<&[BigRational]> {
        match &self.coeffs {
            Coeffs::Exact(c) => Some(c),
            Coeffs::Real(_) => None,
        }
    }

    /// Coefficients rounded to `bits` regardless of ring.
    pub fn float_coeffs(&self, bits: u32) -> Vec<Float> {
        match &self.coeffs {
            Coeffs::Exact(c) => c.iter().map(|r| Float::with_val(bits, r)).collect(),
            Coeffs::Real(c) => c.iter().map(|r| Float::with_val(bits, r)).collect(),
        }
    }

    pub fn coeff_is_zero(&self, k: usize) -> bool {
        match &self.coeffs {
            Coeffs::Exact(c) => c.get(k).is_none_or(|v| *v == 0),
            Coeffs::Real(c) => c.get(k).is_none_or(|v| v.is_zero()),
        }
    }

    pub fn truncate(&self, order: usize) -> Self {
        let keep = (order + 1).min(self.len());
        let coeffs = match &self.coeffs {
            Coeffs::Exact(c) => Coeffs::Exact(c[..keep].to_vec()),
            Coeffs::Real(c) => Coeffs::Real(c[..keep].to_vec()),
        };
        Self { coeffs, bits: self.bits }
    }

    fn check_ring(&self, other: &Self) -> Result<()> {
        if self.ring() != other.ring() {
            return Err(Error::RingMismatch);
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, negate_other: bool) -> Result<Self> {
        self.check_ring(other)?;
        let len = self.len().min(other.len());
        let coeffs = match (&self.coeffs, &other.coeffs) {
            (Coeffs::Exact(a), Coeffs::Exact(b)) => Coeffs::Exact(
                a.iter()
                    .zip(b)
                    .take(len)
                    .map(|(x, y)| if negate_other { Rational::from(x - y) } else { Rational::from(x + y) })
                    .collect(),
            ),
            (Coeffs::Real(a), Coeffs::Real(b)) => Coeffs::Real(
                a.iter()
                    .zip(b)
                    .take(len)
                    .map(|(x, y)| {
                        if negate_other {
                            Float::with_val(self.bits, x - y)
                        } else {
                            Float::with_val(self.bits, x + y)
                        }
                    })
                    .collect(),
            ),
            _ => return Err(Error::RingMismatch),
        };
        Ok(Self { coeffs, bits: self.bits })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, false)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, true)
    }

    pub fn scale(&self, c: &Scalar) -> Result<Self> {
        let coeffs = match (&self.coeffs, c) {
            (Coeffs::Exact(a), Scalar::Exact(c)) => Coeffs::Exact(a.iter().map(|x| Rational::from(x * c)).collect()),
            (Coeffs::Real(a), Scalar::Real(c)) => {
                Coeffs::Real(a.iter().map(|x| Float::with_val(self.bits, x * c)).collect())
            }
            _ => return Err(Error::RingMismatch),
        };
        Ok(Self { coeffs, bits: self.bits })
    }

    /// `s(-x)`.
    pub fn reflect(&self) -> Self {
        let coeffs = match &self.coeffs {
            Coeffs::Exact(a) => Coeffs::Exact(
                a.iter().enumerate().map(|(k, x)| if k % 2 == 1 { Rational::from(-x) } else { x.clone() }).collect(),
            ),
            Coeffs::Real(a) => Coeffs::Real(
                a.iter()
                    .enumerate()
                    .map(|(k, x)| if k % 2 == 1 { Float::with_val(self.bits, -x) } else { x.clone() })
                    .collect(),
            ),
        };
        Self { coeffs, bits: self.bits }
    }

    /// Divides by `x^k`, which requires the first `k` coefficients to vanish exactly.
    /// The order drops by `k`.
    pub fn shift_down(&self, k: usize) -> Result<Self> {
        if k >= self.len() {
            return Err(Error::Precondition(format!("cannot divide an order-{} series by x^{k}", self.order())));
        }
        if let Some(j) = (0..k).find(|&j| !self.coeff_is_zero(j)) {
            return Err(Error::InvariantViolation(format!("coefficient of x^{j} is nonzero; x^{k} does not divide")));
        }
        let coeffs = match &self.coeffs {
            Coeffs::Exact(a) => Coeffs::Exact(a[k..].to_vec()),
            Coeffs::Real(a) => Coeffs::Real(a[k..].to_vec()),
        };
        Ok(Self { coeffs, bits: self.bits })
    }

    /// Multiplies by `x^k`, keeping the order (the top `k` coefficients fall off).
    pub fn shift_up(&self, k: usize) -> Self {
        let len = self.len();
        let coeffs = match &self.coeffs {
            Coeffs::Exact(a) => {
                let mut v = vec![Rational::new(); k.min(len)];
                v.extend(a.iter().take(len.saturating_sub(k)).cloned());
                Coeffs::Exact(v)
            }
            Coeffs::Real(a) => {
                let mut v = vec![Float::new(self.bits); k.min(len)];
                v.extend(a.iter().take(len.saturating_sub(k)).cloned());
                Coeffs::Real(v)
            }
        };
        Self { coeffs, bits: self.bits }
    }

    pub fn to_strings(&self) -> Vec<String> {
        (0..self.len()).map(|k| self.coeff(k).map(|c| c.to_string()).unwrap_or_default()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn flips(self, k: usize) -> bool {
        self == Sign::Minus && k % 2 == 1
    }
}

fn ring_of(alpha: &Scalar) -> Ring {
    match alpha {
        Scalar::Exact(_) => Ring::Exact,
        Scalar::Real(a) => Ring::Real(a.prec()),
    }
}

/// `(1 ± x)^alpha = Σ binom(alpha, k) (±1)^k x^k`, truncated at `order`.
pub fn binomial_series(alpha: &Scalar, sign: Sign, order: usize) -> PowerSeries {
    let binoms = binom_sequence(alpha, order as u32);
    let coeffs = binoms
        .into_iter()
        .enumerate()
        .map(|(k, b)| {
            if !sign.flips(k) {
                return b;
            }
            match b {
                Scalar::Exact(r) => Scalar::Exact(-r),
                Scalar::Real(x) => Scalar::Real(-x),
            }
        })
        .collect();
    PowerSeries::from_scalars(ring_of(alpha), coeffs).expect("ring follows alpha")
}

/// Cauchy product truncated at `min(a.order, b.order)`.
pub fn series_mul(a: &PowerSeries, b: &PowerSeries) -> Result<PowerSeries> {
    a.check_ring(b)?;
    let coeffs = match (&a.coeffs, &b.coeffs) {
        (Coeffs::Exact(x), Coeffs::Exact(y)) => Coeffs::Exact(cauchy(x, y)),
        (Coeffs::Real(x), Coeffs::Real(y)) => Coeffs::Real(cauchy(x, y)),
        _ => return Err(Error::RingMismatch),
    };
    Ok(PowerSeries { coeffs, bits: a.bits })
}

/// Integer power by repeated multiplication.
pub fn series_powi(s: &PowerSeries, e: u32) -> Result<PowerSeries> {
    let mut acc = PowerSeries::one(s.ring(), s.order());
    for _ in 0..e {
        acc = series_mul(&acc, s)?;
    }
    Ok(acc)
}

/// `(1 + h)^alpha = Σ_k binom(alpha, k) h^k` for `h(0) = 0`, truncated at
/// `min(order, h.order)`.
pub fn series_pow_binomial(h: &PowerSeries, alpha: &Scalar, order: usize) -> Result<PowerSeries> {
    if !h.coeff_is_zero(0) {
        return Err(Error::NonzeroConstantTerm);
    }
    if h.ring() != ring_of(alpha) {
        return Err(Error::RingMismatch);
    }
    let h = h.truncate(order);
    let k_max = h.order() as u32;
    let binoms = binom_sequence(alpha, k_max);
    let coeffs = match &h.coeffs {
        Coeffs::Exact(c) => {
            let b: Vec<Rational> = binoms.into_iter().map(|s| s.as_exact().cloned().expect("exact ring")).collect();
            Coeffs::Exact(pow_binomial(c, &b))
        }
        Coeffs::Real(c) => {
            let b: Vec<Float> = binoms.iter().map(|s| s.to_float(h.bits)).collect();
            Coeffs::Real(pow_binomial(c, &b))
        }
    };
    Ok(PowerSeries { coeffs, bits: h.bits })
}

/// Exact expansion `w_p(n) = Σ_k c_k n^{-p-k}` for integer `p >= 2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightExpansion {
    pub p: u32,
    pub leading_power: u32,
    #[serde(serialize_with = "serialize_rationals", rename = "coefficients")]
    pub c: Vec<BigRational>,
}

fn serialize_rationals<S: serde::Serializer>(c: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(c.iter().map(|r| r.to_string()))
}

impl WeightExpansion {
    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    /// The same expansion as a series in `x`: coefficient `c_k` sits at `x^{p+k}`.
    pub fn to_power_series(&self) -> PowerSeries {
        let mut coeffs = vec![Rational::new(); self.leading_power as usize];
        coeffs.extend(self.c.iter().cloned());
        PowerSeries::exact(coeffs).expect("nonempty")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("expansion serializes")
    }

    /// CSV with columns `k,c_k`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        write_coefficient_csv(out, "c_k", self.c.iter().map(|c| c.to_string()))
    }
}

pub(crate) fn write_coefficient_csv<W: std::io::Write>(
    out: W,
    column: &str,
    values: impl Iterator<Item = String>,
) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["k", column])?;
    for (k, v) in values.enumerate() {
        wtr.write_record([k.to_string(), v])?;
    }
    wtr.flush()
}

/// Series of `(1 - (1-x)^{1/q})^{p-1}` for integer `p`, through `order`.
pub fn plus_bracket_series(p: u32, order: usize) -> Result<PowerSeries> {
    let pair = ExponentPair::integer(p)?;
    let r = Scalar::Exact(pair.inv_q_rational().expect("integer p"));
    let inner = PowerSeries::one(Ring::Exact, order).sub(&binomial_series(&r, Sign::Minus, order))?;
    series_powi(&inner, p - 1)
}

/// Series of `((1+x)^{1/q} - 1)^{p-1}` for integer `p`, through `order`.
pub fn minus_bracket_series(p: u32, order: usize) -> Result<PowerSeries> {
    let pair = ExponentPair::integer(p)?;
    let r = Scalar::Exact(pair.inv_q_rational().expect("integer p"));
    let inner = binomial_series(&r, Sign::Plus, order).sub(&PowerSeries::one(Ring::Exact, order))?;
    series_powi(&inner, p - 1)
}

/// Exact coefficients `c_0..=c_order` of `w_p(n) = Σ c_k n^{-p-k}`, integer `p >= 2`.
///
/// Expands each bracket with the integer binomial theorem,
/// `(1 - (1-x)^{1/q})^{p-1} = Σ_j binom(p-1, j) (-1)^j (1-x)^{j/q}` and
/// `((1+x)^{1/q} - 1)^{p-1} = Σ_j binom(p-1, j) (-1)^{p-1-j} (1+x)^{j/q}`,
/// subtracts, and divides by `x^p`. The vanishing of the first `p`
/// coefficients, the vanishing of odd offsets and the positivity of even
/// offsets are all checked; a failure is reported as an invariant violation.
pub fn expand_w_integer_p(p: u32, order: usize) -> Result<WeightExpansion> {
    if p < 2 {
        return Err(Error::Precondition(format!("integer p >= 2 required (got {p})")));
    }
    let full = order + p as usize;
    let inv_q = Rational::from((p - 1, p));
    let mut w = PowerSeries::zero(Ring::Exact, full);
    for j in 0..p {
        let outer = binom_general_rational(&Rational::from(p - 1), j);
        let alpha = Scalar::Exact(Rational::from(&inv_q * j));
        let plus = binomial_series(&alpha, Sign::Minus, full);
        let minus = binomial_series(&alpha, Sign::Plus, full);
        let plus_sign = if j % 2 == 0 { 1 } else { -1 };
        let minus_sign = if (p - 1 - j).is_multiple_of(2) { 1 } else { -1 };
        let plus = plus.scale(&Scalar::Exact(Rational::from(&outer * plus_sign)))?;
        let minus = minus.scale(&Scalar::Exact(Rational::from(&outer * minus_sign)))?;
        w = w.add(&plus)?.sub(&minus)?;
    }
    let shifted = w.shift_down(p as usize)?;
    let c = shifted.exact_coeffs().expect("exact ring").to_vec();
    for (k, ck) in c.iter().enumerate() {
        if k % 2 == 1 && *ck != 0 {
            return Err(Error::InvariantViolation(format!("odd offset c_{k} = {ck} is not zero (p = {p})")));
        }
        if k % 2 == 0 && *ck <= 0 {
            return Err(Error::InvariantViolation(format!("even offset c_{k} = {ck} is not positive (p = {p})")));
        }
    }
    Ok(WeightExpansion { p, leading_power: p, c })
}

/// Series of `a_p` in `x = 1/n`, where `w_p(n) = ((p-1)/(p n))^p (1 + a_p(n))`.
///
/// Computed as `(q/x) [(1 + g(-x))^{p-1} - (1 + g(x))^{p-1}] - 1` with
/// `g(x) = q Σ_{k>=1} binom(1/q, k+1) x^k`. Exact when `p` is rational; `bits`
/// sets the precision otherwise.
pub fn expand_correction(pair: &ExponentPair, order: usize, bits: u32) -> Result<PowerSeries> {
    let g_order = order + 1;
    let ring = if pair.is_rational() { Ring::Exact } else { Ring::Real(bits) };
    let q = pair.q_scalar(bits);
    let binoms = binom_sequence(&pair.inv_q_scalar(bits), g_order as u32 + 1);
    let mut g = vec![Scalar::Exact(Rational::new())];
    g.extend(binoms.into_iter().skip(2));
    let g_plus = PowerSeries::from_scalars(ring, g)?.scale(&q)?;
    let g_minus = g_plus.reflect();
    let pm1 = pair.p_minus_one_scalar(bits);
    let bracket =
        series_pow_binomial(&g_minus, &pm1, g_order)?.sub(&series_pow_binomial(&g_plus, &pm1, g_order)?)?;
    let scaled = bracket.shift_down(1)?.scale(&q)?;
    let one = PowerSeries::one(ring, scaled.order());
    let correction = scaled.sub(&one)?;
    for k in (1..=correction.order()).step_by(2) {
        if !correction.coeff_is_zero(k)
            && ring == Ring::Exact {
                return Err(Error::InvariantViolation(format!("odd coefficient {k} of a_p is nonzero")));
            }
    }
    if ring == Ring::Exact && !correction.coeff_is_zero(0) {
        return Err(Error::InvariantViolation("a_p has a nonzero constant term".into()));
    }
    Ok(correction)
}

/// Sign census of the even correction coefficients (an exploratory report, never asserted).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjectureProbe {
    pub p: String,
    pub order: usize,
    pub all_even_positive: bool,
    pub first_nonpositive: Option<usize>,
}

pub fn correction_conjecture_probe(pair: &ExponentPair, order: usize, bits: u32) -> Result<ConjectureProbe> {
    let s = expand_correction(pair, order, bits)?;
    let first_nonpositive = (2..=s.order()).step_by(2).find(|&k| match s.coeff(k) {
        Some(Scalar::Exact(r)) => r <= 0,
        Some(Scalar::Real(x)) => x <= 0,
        None => false,
    });
    Ok(ConjectureProbe { p: pair.to_string(), order, all_even_positive: first_nonpositive.is_none(), first_nonpositive })
}

/// A truncated evaluation with its tail estimate.
#[derive(Clone, Debug)]
pub struct SeriesValue {
    pub value: Float,
    pub tail_bound: Float,
}

/// Horner evaluation at `0 <= x <= 1/2`.
///
/// The tail estimate is `|c| x^{order+1} / (1 - x)` with `c` the last nonzero
/// coefficient among the final two of positive degree, so series with
/// vanishing odd or even offsets still get a nonzero estimate. A constant
/// (order 0) series has no tail.
pub fn series_eval(s: &PowerSeries, x: &Float, bits: u32) -> Result<SeriesValue> {
    if *x < 0 || *x > 0.5 {
        return Err(Error::Domain { value: x.to_string(), window: "[0, 1/2]" });
    }
    let coeffs = s.float_coeffs(bits);
    let x = Float::with_val(bits, x);
    let mut acc = Float::new(bits);
    for c in coeffs.iter().rev() {
        acc *= &x;
        acc += c;
    }
    let order = s.order();
    let last = if !coeffs[order].is_zero() || order <= 1 { &coeffs[order] } else { &coeffs[order - 1] };
    let tail_bound = if order == 0 || x.is_zero() || last.is_zero() {
        Float::new(bits)
    } else {
        let xp = Float::with_val(bits, rug::ops::Pow::pow(&x, (order + 1) as u32));
        let denom = Float::with_val(bits, 1u32 - &x);
        Float::with_val(bits, Float::with_val(bits, last.abs_ref()) * xp / denom)
    };
    Ok(SeriesValue { value: acc, tail_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn exact(v: &[(i64, i64)]) -> PowerSeries {
        PowerSeries::exact(v.iter().map(|&(n, d)| q(n, d)).collect()).unwrap()
    }

    #[test]
    fn binomial_series_examples() {
        let s = binomial_series(&Scalar::Exact(q(1, 1)), Sign::Plus, 3);
        assert_eq!(s, exact(&[(1, 1), (1, 1), (0, 1), (0, 1)]));
        let s = binomial_series(&Scalar::Exact(q(1, 2)), Sign::Minus, 2);
        assert_eq!(s, exact(&[(1, 1), (-1, 2), (-1, 8)]));
        for sign in [Sign::Plus, Sign::Minus] {
            let s = binomial_series(&Scalar::Exact(q(0, 1)), sign, 4);
            assert_eq!(s, exact(&[(1, 1), (0, 1), (0, 1), (0, 1), (0, 1)]));
        }
    }

    #[test]
    fn mul_examples() {
        let a = exact(&[(1, 1), (1, 1), (0, 1)]);
        let b = exact(&[(1, 1), (-1, 1), (0, 1)]);
        assert_eq!(series_mul(&a, &b).unwrap(), exact(&[(1, 1), (0, 1), (-1, 1)]));
        let s = exact(&[(3, 7), (-2, 5), (9, 4)]);
        let one = PowerSeries::one(Ring::Exact, 2);
        assert_eq!(series_mul(&s, &one).unwrap(), s);
        let root = binomial_series(&Scalar::Exact(q(1, 2)), Sign::Plus, 8);
        let mut expected = vec![q(1, 1), q(1, 1)];
        expected.extend(std::iter::repeat_n(q(0, 1), 7));
        assert_eq!(series_mul(&root, &root).unwrap(), PowerSeries::exact(expected).unwrap());
    }

    #[test]
    fn mul_truncates_to_shorter_order_and_rejects_mixed_rings() {
        let a = exact(&[(1, 1), (1, 1), (1, 1), (1, 1)]);
        let b = exact(&[(1, 1), (1, 1)]);
        assert_eq!(series_mul(&a, &b).unwrap().order(), 1);
        let r = PowerSeries::real(64, vec![Float::with_val(64, 1)]).unwrap();
        assert!(matches!(series_mul(&a, &r), Err(Error::RingMismatch)));
        let r128 = PowerSeries::real(128, vec![Float::with_val(128, 1)]).unwrap();
        assert!(matches!(series_mul(&r, &r128), Err(Error::RingMismatch)));
    }

    #[test]
    fn pow_binomial_examples() {
        let zero = PowerSeries::zero(Ring::Exact, 3);
        let out = series_pow_binomial(&zero, &Scalar::Exact(q(5, 3)), 3).unwrap();
        assert_eq!(out, PowerSeries::one(Ring::Exact, 3));

        let x = exact(&[(0, 1), (1, 1), (0, 1), (0, 1)]);
        let out = series_pow_binomial(&x, &Scalar::Exact(q(2, 1)), 3).unwrap();
        assert_eq!(out, exact(&[(1, 1), (2, 1), (1, 1), (0, 1)]));

        let out = series_pow_binomial(&x, &Scalar::Exact(q(1, 2)), 2).unwrap();
        assert_eq!(out, exact(&[(1, 1), (1, 2), (-1, 8)]));

        let bad = exact(&[(1, 1), (1, 1)]);
        assert!(matches!(series_pow_binomial(&bad, &Scalar::Exact(q(1, 2)), 1), Err(Error::NonzeroConstantTerm)));
    }

    #[test]
    fn pow_binomial_matches_repeated_multiplication() {
        let h = exact(&[(0, 1), (2, 3), (-1, 5), (7, 2), (1, 9), (-3, 4)]);
        let by_binomial = series_pow_binomial(&h, &Scalar::Exact(q(3, 1)), 5).unwrap();
        let one_plus_h = PowerSeries::one(Ring::Exact, 5).add(&h).unwrap();
        assert_eq!(by_binomial, series_powi(&one_plus_h, 3).unwrap());
    }

    #[test]
    fn expansion_tables() {
        let c = |v: &[(i64, i64)]| v.iter().map(|&(n, d)| q(n, d)).collect::<Vec<_>>();
        assert_eq!(
            expand_w_integer_p(2, 6).unwrap().c,
            c(&[(1, 4), (0, 1), (5, 64), (0, 1), (21, 512), (0, 1), (429, 16384)])
        );
        assert_eq!(expand_w_integer_p(3, 4).unwrap().c, c(&[(8, 27), (0, 1), (8, 81), (0, 1), (112, 2187)]));
        assert_eq!(
            expand_w_integer_p(4, 4).unwrap().c,
            c(&[(81, 256), (0, 1), (891, 8192), (0, 1), (58653, 1048576)])
        );
        assert_eq!(expand_w_integer_p(2, 0).unwrap().c, c(&[(1, 4)]));
        assert!(expand_w_integer_p(1, 4).is_err());
    }

    #[test]
    fn expansion_matches_bracket_products() {
        // Independent route: expand each bracket by repeated multiplication.
        for p in 2..=6u32 {
            let order = 12;
            let full = order + p as usize;
            let diff = plus_bracket_series(p, full).unwrap().sub(&minus_bracket_series(p, full).unwrap()).unwrap();
            let via_products = diff.shift_down(p as usize).unwrap();
            let expansion = expand_w_integer_p(p, order).unwrap();
            assert_eq!(via_products.exact_coeffs().unwrap(), expansion.c.as_slice(), "p = {p}");
        }
    }

    #[test]
    fn correction_spot_values() {
        let pair = |s: &str| ExponentPair::parse(s).unwrap();
        let c = expand_correction(&pair("2"), 4, 0).unwrap();
        assert_eq!(c.coeff(2).unwrap(), Scalar::Exact(q(5, 16)));
        let c = expand_correction(&pair("3"), 4, 0).unwrap();
        assert_eq!(c.coeff(4).unwrap(), Scalar::Exact(q(14, 81)));
        let c = expand_correction(&pair("4"), 4, 0).unwrap();
        assert_eq!(c.coeff(2).unwrap(), Scalar::Exact(q(11, 32)));
        assert_eq!(c.coeff(0).unwrap(), Scalar::Exact(q(0, 1)));
        assert_eq!(c.coeff(1).unwrap(), Scalar::Exact(q(0, 1)));
    }

    #[test]
    fn correction_is_expansion_ratio_for_integer_p() {
        for p in 2..=5u32 {
            let w = expand_w_integer_p(p, 8).unwrap();
            let a = expand_correction(&ExponentPair::integer(p).unwrap(), 8, 0).unwrap();
            for k in 1..=8 {
                let ratio = Rational::from(&w.c[k] / &w.c[0]);
                assert_eq!(a.coeff(k).unwrap(), Scalar::Exact(ratio), "p = {p}, k = {k}");
            }
        }
    }

    #[test]
    fn real_correction_tracks_exact_one() {
        let exact_pair = ExponentPair::parse("7/2").unwrap();
        let real_pair = ExponentPair::real(crate::numerics::PrecReal::from_f64(3.5, 200)).unwrap();
        let e = expand_correction(&exact_pair, 6, 0).unwrap();
        let r = expand_correction(&real_pair, 6, 200).unwrap();
        assert_eq!(r.ring(), Ring::Real(200));
        for k in 0..=6 {
            let diff = Float::with_val(200, e.coeff(k).unwrap().to_float(200) - r.coeff(k).unwrap().to_float(200));
            assert!(diff.abs() < 1e-50, "k = {k}");
        }
    }

    #[test]
    fn series_eval_examples() {
        let bits = 128;
        let c = exact(&[(3, 7)]);
        let v = series_eval(&c, &Float::with_val(bits, 0.3), bits).unwrap();
        assert_eq!(v.value, Float::with_val(bits, &q(3, 7)));
        assert_eq!(v.tail_bound, 0);

        let s = exact(&[(5, 2), (1, 1), (1, 1)]);
        let v = series_eval(&s, &Float::new(bits), bits).unwrap();
        assert_eq!(v.value, 2.5);

        assert!(series_eval(&s, &Float::with_val(bits, 0.6), bits).is_err());
        assert!(series_eval(&s, &Float::with_val(bits, -0.1), bits).is_err());
    }

    #[test]
    fn series_eval_p2_at_half_is_covered_by_tail() {
        let bits = 128;
        let s = expand_w_integer_p(2, 6).unwrap().to_power_series();
        let v = series_eval(&s, &Float::with_val(bits, 0.5), bits).unwrap();
        let truth = 2.0 - 0.5f64.sqrt() - 1.5f64.sqrt();
        assert!((v.value.to_f64() - 0.068126).abs() < 1e-5);
        assert!((truth - v.value.to_f64()).abs() <= v.tail_bound.to_f64());
    }

    #[test]
    fn shift_down_checks_zero_prefix() {
        let s = exact(&[(0, 1), (1, 1), (2, 1)]);
        assert!(matches!(s.shift_down(2), Err(Error::InvariantViolation(_))));
        assert_eq!(s.shift_down(1).unwrap(), exact(&[(1, 1), (2, 1)]));
    }

    #[test]
    fn json_layout() {
        let e = expand_w_integer_p(3, 2).unwrap();
        let j = e.to_json();
        assert_eq!(j["p"], 3);
        assert_eq!(j["leading_power"], 3);
        assert_eq!(j["coefficients"], serde_json::json!(["8/27", "0", "8/81"]));
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,c_k\n0,8/27\n1,0\n2,8/81\n");
    }
}
