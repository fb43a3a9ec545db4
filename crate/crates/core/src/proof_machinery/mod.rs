//! The functions behind the comparison `w_p(n) > w_p^H(n)`.
//!
//! With `x = 1/n` and `1/p + 1/q = 1`,
//!
//! ```text
//! g(x)   = q Σ_{k>=1} binom(1/q, k+1) x^k,          g(-x) = Σ a_k x^k
//! E_p(x) = 2(p-1) Σ_{n>=1} a_{2n+1} x^{2n+1}
//! F_p(x) = Σ_{n>=2} binom(p-1, n) (g(-x)^n - g(x)^n)
//! w(x)   = (x/q)^{p-1} (x/q + E_p(x) + F_p(x))
//! ```
//!
//! where `a_k = q |binom(1/q, k+1)|`. Every evaluation carries a tolerance that
//! bounds series truncation plus a rounding floor.

mod grid;
mod lemmas;

pub use grid::{BoundEntry, Comparison, Failure, Grid, GridCheckReport, GridSpec, Relation, Site};
pub use lemmas::{
    check_ak_lower, check_binom_upper, check_case2_bound, check_case2_polynomial, check_case3_sequence,
    check_case3_terms, check_decomposition_identity, check_ef_positive, check_f_nonnegative, check_pointwise_power_bound,
    check_g_bounds, check_g_linear, check_gpm, check_n1_case, check_pairwise_positivity, run_lemma_suite, LemmaId,
    LemmaSuite,
};

use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::numerics::{binom_sequence, check_precision, BigRational, ExponentPair, Scalar};
use crate::series::{PowerSeries, Ring, Sign};
use crate::weights::w_of_x_float;

/// Working precision of the grid checks.
pub const DEFAULT_BITS: u32 = 128;

/// Hard cap on the outer sum of `F_p`.
const MAX_OUTER_TERMS: usize = 100_000;

/// `value` with an absolute error bound.
#[derive(Clone, Debug)]
pub struct Estimate {
    pub value: Float,
    pub tolerance: Float,
}

/// `F_p(x)` and the number of outer terms summed.
#[derive(Clone, Debug)]
pub struct FEstimate {
    pub value: Float,
    pub tolerance: Float,
    pub outer_terms: usize,
}

/// `|value| 2^{-(bits-8)}`: a few hundred ulps, enough for the short sums here.
pub(crate) fn rounding_floor(magnitude: &Float, bits: u32) -> Float {
    let m = Float::with_val(bits, magnitude.abs_ref());
    Float::with_val(bits, m >> (bits as i32 - 8))
}

pub(crate) fn check_x(x: &Float) -> Result<()> {
    if !(*x > 0 && *x <= 0.5) {
        return Err(Error::Domain { value: x.to_string(), window: "(0, 1/2]" });
    }
    Ok(())
}

/// Coefficients `a_k = q |binom(1/q, k+1)|` for `1 <= k <= order`.
#[derive(Clone, Debug)]
pub struct GSeries {
    pair: ExponentPair,
    order: usize,
    bits: u32,
    exact: Option<Vec<BigRational>>,
    a: Vec<Float>,
    /// `b[k] = binom(1/q, k+1)`.
    b: Vec<Float>,
    p: Float,
    p_minus_one: Float,
    q_minus_one: Float,
}

/// `g` for the exponent `pair`, truncated at `order`.
pub fn g_series(pair: &ExponentPair, order: usize, bits: u32) -> Result<GSeries> {
    if order < 1 {
        return Err(Error::Precondition("g needs order >= 1".into()));
    }
    check_precision(bits)?;
    let binoms = binom_sequence(&pair.inv_q_scalar(bits), order as u32 + 1);
    let exact = match (pair.q_scalar(bits), &binoms[0]) {
        (Scalar::Exact(q), Scalar::Exact(_)) => Some(
            std::iter::once(BigRational::new())
                .chain(binoms.iter().skip(2).map(|b| {
                    let b = b.as_exact().expect("exact binomials");
                    BigRational::from(&q * BigRational::from(b.abs_ref()))
                }))
                .collect::<Vec<_>>(),
        ),
        _ => None,
    };
    let b: Vec<Float> = std::iter::once(Float::new(bits)).chain(binoms.iter().skip(2).map(|b| b.to_float(bits))).collect();
    let a = match &exact {
        Some(ex) => ex.iter().map(|r| Float::with_val(bits, r)).collect(),
        None => {
            let q = pair.q_float(bits);
            b.iter().map(|v| Float::with_val(bits, Float::with_val(bits, v.abs_ref()) * &q)).collect()
        }
    };
    let q = pair.q_float(bits);
    Ok(GSeries {
        pair: pair.clone(),
        order,
        bits,
        exact,
        a,
        b,
        p: pair.p_float(bits),
        p_minus_one: pair.p_minus_one_float(bits),
        q_minus_one: Float::with_val(bits, q - 1u32),
    })
}

/// `g(±x)` at one point with a shared error bound.
#[derive(Clone, Debug)]
pub(crate) struct GPoint {
    pub minus: Float,
    pub plus: Float,
    pub tol: Float,
}

impl GSeries {
    pub fn pair(&self) -> &ExponentPair {
        &self.pair
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn precision_bits(&self) -> u32 {
        self.bits
    }

    /// `a_k`, exact when `p` is rational.
    pub fn a(&self, k: usize) -> Option<Scalar> {
        if k == 0 || k > self.order {
            return None;
        }
        Some(match &self.exact {
            Some(ex) => Scalar::Exact(ex[k].clone()),
            None => Scalar::Real(self.a[k].clone()),
        })
    }

    pub(crate) fn a_float(&self, k: usize) -> &Float {
        &self.a[k]
    }

    /// `[0, a_1, ..., a_order]` when `p` is rational.
    pub fn exact_coeffs(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    /// `g(-x)` for `Sign::Minus`, `g(x)` for `Sign::Plus`.
    pub fn to_power_series(&self, sign: Sign) -> PowerSeries {
        let s = match &self.exact {
            Some(ex) => PowerSeries::exact(ex.clone()),
            None => PowerSeries::real(self.bits, self.a.clone()),
        }
        .expect("nonempty coefficients");
        match sign {
            Sign::Minus => s,
            Sign::Plus => s.reflect(),
        }
    }

    pub(crate) fn p_minus_one(&self) -> &Float {
        &self.p_minus_one
    }

    pub(crate) fn point(&self, x: &Float) -> GPoint {
        let bits = self.bits;
        let x = Float::with_val(bits, x);
        let neg = Float::with_val(bits, -&x);
        let mut minus = Float::new(bits);
        let mut plus = Float::new(bits);
        for a in self.a.iter().rev() {
            minus *= &x;
            minus += a;
            plus *= &neg;
            plus += a;
        }
        // Since a_k decreases, the tail is at most a_order x^{order+1} / (1 - x).
        let xp = Float::with_val(bits, (&x).pow(self.order as u32 + 1));
        let tail = Float::with_val(bits, &self.a[self.order] * xp / Float::with_val(bits, 1u32 - &x));
        let tol = Float::with_val(bits, tail + rounding_floor(&minus, bits));
        GPoint { minus, plus, tol }
    }

    pub fn eval(&self, x: &Float, sign: Sign) -> Result<Estimate> {
        check_x(x)?;
        let pt = self.point(x);
        let value = match sign {
            Sign::Minus => pt.minus,
            Sign::Plus => pt.plus,
        };
        Ok(Estimate { value, tolerance: pt.tol })
    }

    /// `E_p(x)` from the `a_k` form, after checking it against the binomial form.
    pub fn e(&self, x: &Float) -> Result<Estimate> {
        check_x(x)?;
        let bits = self.bits;
        let x = Float::with_val(bits, x);
        let x2 = Float::with_val(bits, x.square_ref());
        let mut xk = Float::with_val(bits, &x * &x2);
        let mut by_a = Float::new(bits);
        let mut by_b = Float::new(bits);
        let mut last_odd = 1;
        for k in (3..=self.order).step_by(2) {
            by_a += Float::with_val(bits, &self.a[k] * &xk);
            by_b += Float::with_val(bits, &self.b[k] * &xk);
            xk *= &x2;
            last_odd = k;
        }
        let by_a = Float::with_val(bits, by_a * &self.p_minus_one * 2u32);
        let by_b = Float::with_val(bits, by_b * &self.p * -2i32);
        let gap = Float::with_val(bits, &by_a - &by_b).abs();
        let scale = Float::with_val(bits, Float::with_val(bits, by_a.abs_ref()) + Float::with_val(bits, by_b.abs_ref()));
        if gap > Float::with_val(bits, rounding_floor(&scale, bits) << 4u32) {
            return Err(Error::InvariantViolation(format!(
                "the two forms of E_p disagree by {} at x = {}",
                gap.to_f64(),
                x.to_f64()
            )));
        }
        // xk is now x^{last_odd + 2}; a_k decreases, so the odd tail is below a_{last_odd} x^{last_odd+2} / (1 - x^2).
        let tail = Float::with_val(
            bits,
            Float::with_val(bits, Float::with_val(bits, &self.a[last_odd] * &xk) * &self.p_minus_one) * 2u32
                / Float::with_val(bits, 1u32 - &x2),
        );
        let tolerance = Float::with_val(bits, tail + rounding_floor(&by_a, bits));
        Ok(Estimate { value: by_a, tolerance })
    }

    /// `F_p(x)`, summed over `n = 2..=outer_terms`, or adaptively when `None`.
    ///
    /// The adaptive sum stops at the first `n > p` with
    /// `(q-1)/4 G^n < 2^{-bits/2}`, `G` an upper bound for `g(-x)`. The
    /// tolerance adds the outer tail, bounded with `|binom(p-1, n)| <= (q-1)/4`
    /// for `n > p` and `|g(±x)| <= G < 1`, and the propagated error of `g`.
    pub fn f(&self, x: &Float, outer_terms: Option<usize>) -> Result<FEstimate> {
        check_x(x)?;
        if let Some(n) = outer_terms {
            if n < 2 {
                return Err(Error::Precondition("F_p needs at least two outer terms".into()));
            }
        }
        let bits = self.bits;
        let pt = self.point(x);
        let big_g = Float::with_val(bits, &pt.minus + &pt.tol);
        if big_g >= 1 {
            return Err(Error::InvariantViolation(format!("g(-x) is not below 1 at x = {}", x.to_f64())));
        }
        let cutoff = Float::with_val(bits, Float::with_val(bits, 1u32) >> (bits as i32 / 2));
        let quarter_q = Float::with_val(bits, &self.q_minus_one / 4u32);

        let mut binom = Float::with_val(bits, 1u32);
        let mut gm_pow = Float::with_val(bits, 1u32);
        let mut gp_pow = Float::with_val(bits, 1u32);
        let mut big_pow = Float::with_val(bits, 1u32);
        let mut value = Float::new(bits);
        let mut abs_sum = Float::new(bits);
        let mut inner = Float::new(bits);
        let mut n = 0usize;
        loop {
            n += 1;
            if n > MAX_OUTER_TERMS {
                return Err(Error::InvariantViolation("F_p outer sum did not settle".into()));
            }
            binom *= Float::with_val(bits, &self.p_minus_one - (n as u64 - 1));
            binom /= n as u64;
            gm_pow *= &pt.minus;
            gp_pow *= &pt.plus;
            let abs_binom = Float::with_val(bits, binom.abs_ref());
            if n >= 2 {
                let diff = Float::with_val(bits, &gm_pow - &gp_pow);
                let term = Float::with_val(bits, &binom * diff);
                abs_sum += Float::with_val(bits, term.abs_ref());
                value += term;
                // |g̃^n - g^n| <= n G^{n-1} δ for both signs
                inner += Float::with_val(bits, Float::with_val(bits, &abs_binom * &big_pow) * &pt.tol) * (2 * n as u64);
            }
            big_pow *= &big_g;
            if n < 2 {
                continue;
            }
            let done = match outer_terms {
                Some(m) => n == m,
                None => Float::with_val(bits, &self.p - n as u64) < 0 && Float::with_val(bits, &quarter_q * &big_pow) < cutoff,
            };
            if done {
                break;
            }
        }
        let used = n;
        // Terms n with used < n <= p are bounded directly.
        let mut tail = Float::new(bits);
        while Float::with_val(bits, &self.p - (n as u64 + 1)) >= 0 {
            n += 1;
            binom *= Float::with_val(bits, &self.p_minus_one - (n as u64 - 1));
            binom /= n as u64;
            big_pow *= &big_g;
            tail += Float::with_val(bits, Float::with_val(bits, binom.abs_ref()) * &big_pow * 2u32);
        }
        // Geometric remainder for all k > n > p.
        big_pow *= &big_g;
        let one_minus = Float::with_val(bits, 1u32 - &big_g);
        tail += Float::with_val(bits, &quarter_q * &big_pow) * 2u32 / one_minus;
        let tolerance = Float::with_val(bits, tail + inner + rounding_floor(&abs_sum, bits));
        Ok(FEstimate { value, tolerance, outer_terms: used })
    }

    /// `binom(p-1, n) (g(-x)^n - g(x)^n) + binom(p-1, n+1) (g(-x)^{n+1} - g(x)^{n+1})` for odd `n`.
    pub fn paired_term(&self, x: &Float, n: u32) -> Result<Estimate> {
        check_x(x)?;
        if n.is_multiple_of(2) {
            return Err(Error::Precondition(format!("paired terms start at odd n, got {n}")));
        }
        let pt = self.point(x);
        Ok(paired_from_point(self, &pt, n))
    }
}

pub(crate) fn paired_from_point(gs: &GSeries, pt: &GPoint, n: u32) -> Estimate {
    let bits = gs.bits;
    let big_g = Float::with_val(bits, &pt.minus + &pt.tol);
    let mut value = Float::new(bits);
    let mut tol = Float::new(bits);
    for m in [n, n + 1] {
        let binom = crate::numerics::binom_float(&gs.p_minus_one, m, bits);
        let diff = Float::with_val(bits, Float::with_val(bits, (&pt.minus).pow(m)) - Float::with_val(bits, (&pt.plus).pow(m)));
        let term = Float::with_val(bits, &binom * diff);
        let propagated =
            Float::with_val(bits, Float::with_val(bits, binom.abs_ref()) * Float::with_val(bits, (&big_g).pow(m - 1)) * &pt.tol * (2 * m));
        tol += propagated;
        tol += rounding_floor(&term, bits);
        value += term;
    }
    Estimate { value, tolerance: tol }
}

/// `g(sign x)` truncated at `order`.
pub fn eval_g(pair: &ExponentPair, x: &Float, sign: Sign, order: usize, bits: u32) -> Result<Estimate> {
    g_series(pair, order, bits)?.eval(x, sign)
}

/// `E_p(x)`; both forms are evaluated and must agree.
pub fn eval_e(pair: &ExponentPair, x: &Float, order: usize, bits: u32) -> Result<Estimate> {
    g_series(pair, order, bits)?.e(x)
}

/// `F_p(x)` over `n = 2..=outer_terms` with the remaining tail folded into the tolerance.
pub fn eval_f(pair: &ExponentPair, x: &Float, outer_terms: usize, series_order: usize, bits: u32) -> Result<FEstimate> {
    g_series(pair, series_order, bits)?.f(x, Some(outer_terms))
}

/// `F_p(x)` with the adaptive outer cut.
pub fn eval_f_adaptive(pair: &ExponentPair, x: &Float, series_order: usize, bits: u32) -> Result<FEstimate> {
    g_series(pair, series_order, bits)?.f(x, None)
}

/// Both sides of `w(x) = (x/q)^{p-1} (x/q + E_p + F_p)` and the combined tolerance.
pub(crate) fn decomposition_sides(gs: &GSeries, x: &Float) -> Result<(Float, Float, Float)> {
    let bits = gs.bits;
    let lhs = w_of_x_float(&gs.pair, x, bits);
    let e = gs.e(x)?;
    let f = gs.f(x, None)?;
    let inv_q = gs.pair.inv_q_float(bits);
    let x_over_q = Float::with_val(bits, x * &inv_q);
    let prefactor = Float::with_val(bits, (&x_over_q).pow(&gs.p_minus_one));
    let inner = Float::with_val(bits, &x_over_q + &e.value) + &f.value;
    let rhs = Float::with_val(bits, &prefactor * &inner);
    let truncation = Float::with_val(bits, &prefactor * Float::with_val(bits, &e.tolerance + &f.tolerance));
    // Each bracket of w loses about log2(q/x) bits to cancellation, amplified by p-1 on powering.
    let amplification = Float::with_val(bits, Float::with_val(bits, &gs.p * gs.pair.q_float(bits)) / x + 4u32);
    let closed_form = Float::with_val(bits, rounding_floor(&prefactor, bits) * amplification * 4u32);
    let tol = Float::with_val(bits, truncation + closed_form + rounding_floor(&rhs, bits));
    Ok((lhs, rhs, tol))
}

/// The ring `GSeries` coefficients live in.
pub fn g_ring(gs: &GSeries) -> Ring {
    if gs.exact.is_some() {
        Ring::Exact
    } else {
        Ring::Real(gs.bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(s: &str) -> ExponentPair {
        ExponentPair::parse(s).unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::from((n, d))
    }

    fn fl(s: &str) -> Float {
        let q = crate::numerics::parse_exact_rational(s).unwrap();
        Float::with_val(DEFAULT_BITS, &q)
    }

    #[test]
    fn a_k_for_p2() {
        let gs = g_series(&pair("2"), 10, 128).unwrap();
        assert_eq!(gs.a(1), Some(Scalar::Exact(r(1, 4))));
        assert_eq!(gs.a(2), Some(Scalar::Exact(r(1, 8))));
        assert_eq!(gs.a(3), Some(Scalar::Exact(r(5, 64))));
        assert_eq!(gs.a(0), None);
        assert_eq!(gs.a(11), None);
    }

    #[test]
    fn a_1_is_one_over_2p() {
        for p in ["3/2", "7/3", "5", "101/100"] {
            let pr = pair(p);
            let gs = g_series(&pr, 3, 128).unwrap();
            let expected = BigRational::from(BigRational::from(1) / (pr.p_rational().unwrap() * BigRational::from(2)));
            assert_eq!(gs.a(1), Some(Scalar::Exact(expected)), "p = {p}");
        }
    }

    #[test]
    fn g_matches_closed_form() {
        // g(-x) = q (1 - (1-x)^{1/q}) / x - 1 and g(x) = q ((1+x)^{1/q} - 1) / x - 1
        let bits = 256;
        for p in ["2", "7/2", "101/100"] {
            let pr = pair(p);
            let gs = g_series(&pr, 200, bits).unwrap();
            let q = pr.q_float(bits);
            let iq = pr.inv_q_float(bits);
            for x in ["1/1000", "1/4", "1/2"] {
                let xf = Float::with_val(bits, &crate::numerics::parse_exact_rational(x).unwrap());
                let below = Float::with_val(bits, Float::with_val(bits, 1u32 - &xf).pow(&iq));
                let above = Float::with_val(bits, Float::with_val(bits, 1u32 + &xf).pow(&iq));
                let gm = Float::with_val(bits, Float::with_val(bits, &q * Float::with_val(bits, 1u32 - below)) / &xf - 1u32);
                let gp = Float::with_val(bits, Float::with_val(bits, &q * Float::with_val(bits, above - 1u32)) / &xf - 1u32);
                let m = gs.eval(&xf, Sign::Minus).unwrap();
                let pl = gs.eval(&xf, Sign::Plus).unwrap();
                // the closed form itself loses about log2(q/x) bits to cancellation
                let oracle = 1e-65;
                assert!(Float::with_val(bits, &m.value - &gm).abs() <= Float::with_val(bits, &m.tolerance + oracle), "p = {p}, x = {x}");
                assert!(Float::with_val(bits, &pl.value - &gp).abs() <= Float::with_val(bits, &pl.tolerance + oracle), "p = {p}, x = {x}");
            }
        }
    }

    #[test]
    fn g_slope_at_zero_is_a1() {
        let x = fl("1e-12");
        let g = eval_g(&pair("2"), &x, Sign::Minus, 40, DEFAULT_BITS).unwrap();
        let slope = Float::with_val(DEFAULT_BITS, &g.value / &x).to_f64();
        assert!((slope - 0.25).abs() < 1e-11);
        assert!(eval_g(&pair("2"), &x, Sign::Plus, 40, DEFAULT_BITS).unwrap().value < 0);
    }

    #[test]
    fn x_outside_window_is_rejected() {
        let p = pair("2");
        for x in ["0", "0.51", "-0.1"] {
            assert!(matches!(eval_g(&p, &fl(x), Sign::Minus, 10, 128), Err(Error::Domain { .. })), "x = {x}");
        }
        assert!(eval_e(&p, &fl("0.5"), 10, 128).is_ok());
    }

    #[test]
    fn e_leading_term_for_p2() {
        let x = fl("1e-6");
        let e = eval_e(&pair("2"), &x, 40, DEFAULT_BITS).unwrap();
        let ratio = Float::with_val(DEFAULT_BITS, &e.value / Float::with_val(DEFAULT_BITS, (&x).pow(3u32))).to_f64();
        assert!((ratio - 5.0 / 32.0).abs() < 1e-9);
    }

    #[test]
    fn f_converges_in_outer_terms() {
        let p = pair("5/2");
        let x = fl("0.5");
        let adaptive = eval_f_adaptive(&p, &x, 40, DEFAULT_BITS).unwrap();
        let short = eval_f(&p, &x, 4, 40, DEFAULT_BITS).unwrap();
        let gap = Float::with_val(DEFAULT_BITS, &adaptive.value - &short.value).abs();
        assert!(gap <= short.tolerance, "short-sum tolerance must cover the rest of the sum");
        assert!(adaptive.outer_terms > 4);
        assert!(eval_f(&p, &x, 1, 40, DEFAULT_BITS).is_err());
    }

    #[test]
    fn f_matches_decomposition_residual_for_p2() {
        // F = w(x) (q/x)^{p-1} - x/q - E, with w from the closed form at 50 digits
        let bits = 200;
        let p = pair("2");
        let x = Float::with_val(bits, 0.25);
        let w = Float::with_val(bits, 2u32 - Float::with_val(bits, 0.75).sqrt() - Float::with_val(bits, 1.25).sqrt());
        let e = eval_e(&p, &x, 200, bits).unwrap();
        let residual = Float::with_val(bits, Float::with_val(bits, &w * 8u32) - 0.125) - &e.value;
        let f = eval_f_adaptive(&p, &x, 200, bits).unwrap();
        let gap = Float::with_val(bits, &f.value - residual).abs();
        assert!(gap < 1e-45, "gap {gap}");
    }

    #[test]
    fn paired_term_rejects_even_n() {
        let gs = g_series(&pair("7/2"), 40, 128).unwrap();
        assert!(gs.paired_term(&fl("0.5"), 2).is_err());
        let v = gs.paired_term(&fl("0.5"), 5).unwrap();
        assert!(v.value >= 0);
    }

    #[test]
    fn power_series_view_matches_coefficients() {
        let gs = g_series(&pair("2"), 4, 128).unwrap();
        let minus = gs.to_power_series(Sign::Minus);
        let plus = gs.to_power_series(Sign::Plus);
        assert_eq!(minus.exact_coeffs().unwrap(), &[r(0, 1), r(1, 4), r(1, 8), r(5, 64), r(7, 128)]);
        assert_eq!(plus.exact_coeffs().unwrap(), &[r(0, 1), r(-1, 4), r(1, 8), r(-5, 64), r(7, 128)]);
        assert_eq!(g_ring(&gs), Ring::Exact);
    }
}
