//! Combinatorial p-Laplacian on the half-line and the ground-state transform.
//!
//! `Δ_p f(n) = Σ_{m = n±1} sgn(f(n) - f(m)) |f(n) - f(m)|^{p-1}` for `n >= 1`.
//! A positive `u` with `Δ_p u = w u^{p-1}` and `u(0) = 0` makes `w` a Hardy
//! weight; `u(n) = n^{(p-1)/p}` produces exactly `w_p`.

use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::numerics::{check_precision, ExponentPair, PrecReal};

/// Samples `f(0), ..., f(N)` of a real function on `{0, ..., N}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    values: Vec<Float>,
}

impl GridFunction {
    /// Takes ownership of `f(0..=N)`. All samples are widened to the largest precision present.
    pub fn from_values(values: Vec<Float>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Precondition("a grid function needs at least f(0)".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("grid values must be finite".into()));
        }
        let bits = values.iter().map(Float::prec).max().unwrap_or(64);
        let values = values.into_iter().map(|v| Float::with_val(bits, v)).collect();
        Ok(Self { values })
    }

    pub fn from_fn(support: usize, bits: u32, f: impl Fn(usize) -> Float) -> Result<Self> {
        check_precision(bits)?;
        Self::from_values((0..=support).map(|n| Float::with_val(bits, f(n))).collect())
    }

    /// `u(n) = n^{(p-1)/p}` sampled on `{0, ..., support}`.
    pub fn ground_state(pair: &ExponentPair, support: usize, bits: u32) -> Result<Self> {
        check_precision(bits)?;
        let exponent = pair.inv_q_float(bits);
        Self::from_values((0..=support).map(|n| ground_state_value(&exponent, n as u64, bits)).collect())
    }

    pub fn support_bound(&self) -> usize {
        self.values.len() - 1
    }

    pub fn precision_bits(&self) -> u32 {
        self.values[0].prec()
    }

    pub fn get(&self, n: usize) -> Result<&Float> {
        self.values.get(n).ok_or(Error::OutOfGrid { index: n, bound: self.support_bound() })
    }

    pub fn scaled(&self, c: &Float) -> Self {
        let bits = self.precision_bits();
        Self { values: self.values.iter().map(|v| Float::with_val(bits, v * c)).collect() }
    }
}

fn ground_state_value(exponent: &Float, n: u64, bits: u32) -> Float {
    if n == 0 {
        return Float::with_val(bits, 0);
    }
    Float::with_val(bits, Float::with_val(bits, n).pow(exponent))
}

/// `sgn(t) |t|^{p-1}`, exactly zero at `t = 0`.
pub fn signed_power(t: &Float, pair: &ExponentPair) -> Float {
    signed_pow(t, &pair.p_minus_one_float(t.prec()))
}

pub(crate) fn signed_pow(t: &Float, p_minus_one: &Float) -> Float {
    let bits = t.prec();
    if t.is_zero() {
        return Float::with_val(bits, 0);
    }
    let magnitude = Float::with_val(bits, t.abs_ref());
    let m = Float::with_val(bits, magnitude.pow(p_minus_one));
    if t.is_sign_negative() {
        -m
    } else {
        m
    }
}

/// `signed_power` in double precision.
pub fn signed_power_f64(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.signum() * t.abs().powf(p - 1.0)
    }
}

/// `Δ_p f(n)`; both neighbours must lie in the support, so `1 <= n <= N-1`.
pub fn apply_p_laplacian(f: &GridFunction, n: usize, pair: &ExponentPair) -> Result<Float> {
    let pm1 = pair.p_minus_one_float(f.precision_bits());
    p_laplacian_with(f, n, &pm1)
}

fn p_laplacian_with(f: &GridFunction, n: usize, p_minus_one: &Float) -> Result<Float> {
    if n == 0 {
        return Err(Error::Precondition("the p-Laplacian is evaluated at n >= 1".into()));
    }
    let bits = f.precision_bits();
    let centre = f.get(n)?;
    let left = f.get(n - 1)?;
    let right = f.get(n + 1)?;
    let dl = Float::with_val(bits, centre - left);
    let dr = Float::with_val(bits, centre - right);
    Ok(Float::with_val(bits, signed_pow(&dl, p_minus_one) + signed_pow(&dr, p_minus_one)))
}

/// `n^{(p-1)/p}` at `bits`; `0` at `n = 0`.
pub fn hardy_ground_state(pair: &ExponentPair, n: u64, bits: u32) -> Result<PrecReal> {
    check_precision(bits)?;
    Ok(PrecReal::new(ground_state_value(&pair.inv_q_float(bits), n, bits)))
}

/// `Δ_p u(n) / u(n)^{p-1}`, evaluated at `bits`.
pub fn weight_from_supersolution(u: &GridFunction, pair: &ExponentPair, n: usize, bits: u32) -> Result<PrecReal> {
    check_precision(bits)?;
    if n == 0 {
        return Err(Error::Precondition("the p-Laplacian is evaluated at n >= 1".into()));
    }
    let centre = Float::with_val(bits, u.get(n)?);
    if centre <= 0 {
        return Err(Error::NonPositiveSupersolution(n));
    }
    let left = Float::with_val(bits, u.get(n - 1)?);
    let right = Float::with_val(bits, u.get(n + 1)?);
    let pm1 = pair.p_minus_one_float(bits);
    let dl = Float::with_val(bits, &centre - &left);
    let dr = Float::with_val(bits, &centre - &right);
    let lap = Float::with_val(bits, signed_pow(&dl, &pm1) + signed_pow(&dr, &pm1));
    let denom = Float::with_val(bits, centre.pow(&pm1));
    Ok(PrecReal::new(Float::with_val(bits, lap / denom)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::eval_w;

    fn pair(s: &str) -> ExponentPair {
        ExponentPair::parse(s).unwrap()
    }

    #[test]
    fn signed_power_examples() {
        let bits = 64;
        assert_eq!(signed_power(&Float::with_val(bits, 0), &pair("7/3")), 0);
        assert_eq!(signed_power(&Float::with_val(bits, -1), &pair("3")), -1);
        assert_eq!(signed_power(&Float::with_val(bits, 0.5), &pair("2")), 0.5);
        assert_eq!(signed_power(&Float::with_val(bits, -2), &pair("3")), -4);
        assert_eq!(signed_power_f64(0.0, 1.5), 0.0);
        assert_eq!(signed_power_f64(-4.0, 1.5), -2.0);
    }

    #[test]
    fn linear_functions_are_p_harmonic() {
        let f = GridFunction::from_fn(10, 64, |n| Float::with_val(64, n)).unwrap();
        for p in ["2", "3", "3/2", "11/2"] {
            assert_eq!(apply_p_laplacian(&f, 5, &pair(p)).unwrap(), 0, "p = {p}");
        }
    }

    #[test]
    fn neighbours_outside_support_are_errors() {
        let f = GridFunction::from_fn(4, 64, |n| Float::with_val(64, n)).unwrap();
        assert!(matches!(apply_p_laplacian(&f, 4, &pair("2")), Err(Error::OutOfGrid { index: 5, bound: 4 })));
        assert!(apply_p_laplacian(&f, 0, &pair("2")).is_err());
        assert!(apply_p_laplacian(&f, 3, &pair("2")).is_ok());
    }

    #[test]
    fn ground_state_values() {
        let p = pair("2");
        assert_eq!(*hardy_ground_state(&p, 0, 64).unwrap().value(), 0);
        assert_eq!(*hardy_ground_state(&pair("13/4"), 1, 64).unwrap().value(), 1);
        assert_eq!(*hardy_ground_state(&p, 4, 64).unwrap().value(), 2);
    }

    #[test]
    fn ground_state_at_one_for_p2_gives_two_minus_sqrt_two() {
        let p = pair("2");
        let u = GridFunction::ground_state(&p, 4, 200).unwrap();
        let lap = apply_p_laplacian(&u, 1, &p).unwrap();
        let expected = Float::with_val(200, 2u32 - Float::with_val(200, 2).sqrt());
        assert!(Float::with_val(200, lap - &expected).abs() < 1e-55);
        let w = weight_from_supersolution(&u, &p, 1, 200).unwrap();
        assert!(Float::with_val(200, w.value() - &expected).abs() < 1e-55);
    }

    #[test]
    fn ground_state_reproduces_closed_form_at_n2() {
        let p = pair("2");
        let u = GridFunction::ground_state(&p, 5, 256).unwrap();
        let w = weight_from_supersolution(&u, &p, 2, 256).unwrap();
        let closed = eval_w(&p, 2, 50).unwrap();
        let diff = Float::with_val(256, w.value() - closed.value()).abs();
        assert!(diff < 1e-48);
        assert!((w.to_f64() - 0.0681483474218).abs() < 1e-12);
    }

    #[test]
    fn linear_supersolution_gives_zero_weight() {
        let p = pair("2");
        let u = GridFunction::from_fn(6, 64, |n| Float::with_val(64, n)).unwrap();
        for n in 1..6 {
            assert_eq!(*weight_from_supersolution(&u, &p, n, 64).unwrap().value(), 0);
        }
    }

    #[test]
    fn nonpositive_supersolution_is_rejected() {
        let u = GridFunction::from_fn(4, 64, |n| Float::with_val(64, 2.0 - n as f64)).unwrap();
        assert!(matches!(
            weight_from_supersolution(&u, &pair("2"), 3, 64),
            Err(Error::NonPositiveSupersolution(3))
        ));
    }

    #[test]
    fn weight_is_invariant_under_scaling() {
        let p = pair("5/2");
        let u = GridFunction::ground_state(&p, 20, 128).unwrap();
        let cu = u.scaled(&Float::with_val(128, 7.25));
        for n in [1, 5, 19] {
            let a = weight_from_supersolution(&u, &p, n, 128).unwrap();
            let b = weight_from_supersolution(&cu, &p, n, 128).unwrap();
            let rel = Float::with_val(128, a.value() - b.value()).abs() / a.value().clone().abs();
            assert!(rel < 1e-30);
        }
    }

    #[test]
    fn increasing_functions_resolve_both_signs() {
        let p = pair("3");
        let u = GridFunction::from_fn(6, 128, |n| Float::with_val(128, (n * n) as u32)).unwrap();
        // (9 - 4)^2 - (16 - 9)^2
        assert_eq!(apply_p_laplacian(&u, 3, &p).unwrap(), 25 - 49);
    }
}
