//! Closed-form evaluation of the improved weight
//!
//! ```text
//! w_p(n) = (1 - (1 - 1/n)^{1/q})^{p-1} - ((1 + 1/n)^{1/q} - 1)^{p-1}
//! ```
//!
//! and the classical weight `((p-1)/p)^p n^{-p}`.
//!
//! Both brackets agree to about `log2 n` leading bits and their difference is
//! of order `n^{-p}`, so every evaluation runs at [`required_precision`] and is
//! rounded to the output precision only at the end.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{digits_to_bits, required_precision, ExponentPair, PrecReal, MAX_PRECISION_BITS};

/// Extra bits carried by returned values beyond the requested digits.
pub const OUTPUT_GUARD_BITS: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    Improved,
    Classical,
}

/// Precision of values returned for a `digits`-digit request.
pub fn output_bits(digits: u64) -> Result<u32> {
    let bits = digits_to_bits(digits) + OUTPUT_GUARD_BITS as u64;
    if bits > MAX_PRECISION_BITS as u64 {
        return Err(Error::PrecisionInfeasible { requested: bits, max: MAX_PRECISION_BITS });
    }
    Ok(bits as u32)
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Precondition("weights are defined for n >= 1".into()));
    }
    Ok(())
}

/// `w_p(1) = 1 - (2^{1/q} - 1)^{p-1}` at `bits`.
pub(crate) fn w1_float(pair: &ExponentPair, bits: u32) -> Float {
    let inv_q = pair.inv_q_float(bits);
    let pm1 = pair.p_minus_one_float(bits);
    let two_pow = Float::with_val(bits, Float::with_val(bits, 2).pow(&inv_q));
    let bracket = Float::with_val(bits, two_pow - 1u32);
    let powered = Float::with_val(bits, bracket.pow(&pm1));
    Float::with_val(bits, 1u32 - powered)
}

/// The two-bracket closed form at `n >= 2`, evaluated at `bits`.
pub(crate) fn w_float(pair: &ExponentPair, n: u64, bits: u32) -> Float {
    if n == 1 {
        return w1_float(pair, bits);
    }
    let below = Float::with_val(bits, &Rational::from((n - 1, n)));
    let above = Float::with_val(bits, &Rational::from((n + 1, n)));
    brackets(pair, &below, &above, bits)
}

/// `w(x) = (1 - (1-x)^{1/q})^{p-1} - ((1+x)^{1/q} - 1)^{p-1}` for `0 < x <= 1`.
pub(crate) fn w_of_x_float(pair: &ExponentPair, x: &Float, bits: u32) -> Float {
    if *x == 1 {
        return w1_float(pair, bits);
    }
    let below = Float::with_val(bits, 1u32 - x);
    let above = Float::with_val(bits, 1u32 + x);
    brackets(pair, &below, &above, bits)
}

fn brackets(pair: &ExponentPair, below: &Float, above: &Float, bits: u32) -> Float {
    let inv_q = pair.inv_q_float(bits);
    let pm1 = pair.p_minus_one_float(bits);
    let lower = Float::with_val(bits, below.pow(&inv_q));
    let lower = Float::with_val(bits, 1u32 - lower);
    let upper = Float::with_val(bits, above.pow(&inv_q));
    let upper = Float::with_val(bits, upper - 1u32);
    let a = Float::with_val(bits, lower.pow(&pm1));
    let b = Float::with_val(bits, upper.pow(&pm1));
    Float::with_val(bits, a - b)
}

/// `((p-1)/(p n))^p` at `bits`.
pub(crate) fn w_classical_float(pair: &ExponentPair, n: u64, bits: u32) -> Float {
    let p = pair.p_float(bits);
    let base = match pair.inv_q_rational() {
        Some(r) => Float::with_val(bits, &(r / n)),
        None => Float::with_val(bits, pair.inv_q_float(bits) / n),
    };
    Float::with_val(bits, base.pow(&p))
}

/// Improved weight `w_p(n)` to `target_digits` significant digits.
pub fn eval_w(pair: &ExponentPair, n: u64, target_digits: u64) -> Result<PrecReal> {
    check_n(n)?;
    if n == 1 {
        return eval_w1_closed(pair, target_digits);
    }
    let bits = required_precision(pair, n, target_digits)?;
    let out = output_bits(target_digits)?;
    Ok(PrecReal::new(Float::with_val(out, w_float(pair, n, bits))))
}

/// Classical weight `((p-1)/p)^p n^{-p}` to `target_digits` significant digits.
pub fn eval_w_classical(pair: &ExponentPair, n: u64, target_digits: u64) -> Result<PrecReal> {
    check_n(n)?;
    let bits = required_precision(pair, 1, target_digits)?;
    let out = output_bits(target_digits)?;
    Ok(PrecReal::new(Float::with_val(out, w_classical_float(pair, n, bits))))
}

/// `w_p(1) = 1 - (2^{1-1/p} - 1)^{p-1}`.
pub fn eval_w1_closed(pair: &ExponentPair, target_digits: u64) -> Result<PrecReal> {
    let bits = required_precision(pair, 1, target_digits)?;
    let out = output_bits(target_digits)?;
    Ok(PrecReal::new(Float::with_val(out, w1_float(pair, bits))))
}

pub fn eval_weight(kind: WeightKind, pair: &ExponentPair, n: u64, target_digits: u64) -> Result<PrecReal> {
    match kind {
        WeightKind::Improved => eval_w(pair, n, target_digits),
        WeightKind::Classical => eval_w_classical(pair, n, target_digits),
    }
}

#[derive(Clone, Debug)]
pub struct WeightRow {
    pub n: u64,
    pub w_improved: PrecReal,
    pub w_classical: PrecReal,
    /// `w_p(n)/w_p^H(n) - 1`.
    pub ratio_minus_one: PrecReal,
    /// `ratio_minus_one` exceeds the evaluation error `10^{-digits}`.
    pub verified_positive: bool,
}

#[derive(Clone, Debug)]
pub struct WeightTable {
    pub pair: ExponentPair,
    pub digits: u64,
    pub precision_bits: u32,
    pub rows: Vec<WeightRow>,
}

#[derive(Serialize)]
struct RowRecord<'a> {
    n: u64,
    w_improved: &'a str,
    w_classical: &'a str,
    ratio_minus_one: &'a str,
    verified_positive: bool,
}

impl WeightTable {
    pub fn all_verified(&self) -> bool {
        self.rows.iter().all(|r| r.verified_positive)
    }

    fn formatted(&self) -> Vec<(u64, [String; 3], bool)> {
        let d = self.digits as usize;
        self.rows
            .iter()
            .map(|r| {
                (
                    r.n,
                    [
                        r.w_improved.to_decimal_string(d),
                        r.w_classical.to_decimal_string(d),
                        r.ratio_minus_one.to_decimal_string(d),
                    ],
                    r.verified_positive,
                )
            })
            .collect()
    }

    /// CSV with header `n,w_improved,w_classical,ratio_minus_one`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["n", "w_improved", "w_classical", "ratio_minus_one"])?;
        for (n, cols, _) in self.formatted() {
            wtr.write_record([n.to_string(), cols[0].clone(), cols[1].clone(), cols[2].clone()])?;
        }
        wtr.flush()
    }

    /// Array of row objects.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = self.formatted();
        let records: Vec<_> = rows
            .iter()
            .map(|(n, c, ok)| RowRecord {
                n: *n,
                w_improved: &c[0],
                w_classical: &c[1],
                ratio_minus_one: &c[2],
                verified_positive: *ok,
            })
            .collect();
        serde_json::to_value(records).expect("row records serialize")
    }
}

/// Tabulates both weights and their relative gap for `n_min..=n_max`.
pub fn compare_weights(pair: &ExponentPair, n_min: u64, n_max: u64, target_digits: u64) -> Result<WeightTable> {
    if n_min < 1 || n_min > n_max {
        return Err(Error::Precondition(format!("need 1 <= n_min <= n_max (got {n_min}..{n_max})")));
    }
    let out = output_bits(target_digits)?;
    // One threshold for every row: the relative error of the evaluation.
    let threshold = Float::with_val(out, Float::with_val(out, 10).pow(-(target_digits as i64)));
    let rows = (n_min..=n_max)
        .into_par_iter()
        .map(|n| {
            let bits = required_precision(pair, n, target_digits)?;
            let w = w_float(pair, n, bits);
            let wh = w_classical_float(pair, n, bits);
            let gap = Float::with_val(bits, &w - &wh);
            let ratio = Float::with_val(bits, gap / &wh);
            let ratio = Float::with_val(out, ratio);
            let verified_positive = ratio > threshold;
            Ok(WeightRow {
                n,
                w_improved: PrecReal::new(Float::with_val(out, w)),
                w_classical: PrecReal::new(Float::with_val(out, wh)),
                ratio_minus_one: PrecReal::new(ratio),
                verified_positive,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightTable { pair: pair.clone(), digits: target_digits, precision_bits: out, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &PrecReal, b: &Float, tol: f64) -> bool {
        let diff = Float::with_val(256, a.value() - b).abs();
        diff < tol
    }

    #[test]
    fn p2_n1_is_two_minus_sqrt_two() {
        let pair = ExponentPair::integer(2).unwrap();
        let w = eval_w(&pair, 1, 30).unwrap();
        let expected = Float::with_val(256, 2u32 - Float::with_val(256, 2).sqrt());
        assert!(close(&w, &expected, 1e-32));
        assert!(w.to_decimal_string(30).starts_with("5.8578643762690495119831127579"));
    }

    #[test]
    fn p2_n2_matches_surd_form() {
        // 2 - sqrt(1/2) - sqrt(3/2)
        let pair = ExponentPair::integer(2).unwrap();
        let w = eval_w(&pair, 2, 30).unwrap();
        let bits = 256;
        let expected = Float::with_val(bits, 2u32)
            - Float::with_val(bits, 0.5).sqrt()
            - Float::with_val(bits, 1.5).sqrt();
        let expected = Float::with_val(bits, expected);
        assert!(close(&w, &expected, 1e-32));
        assert!(w.to_decimal_string(12).starts_with("6.8148347421"));
    }

    #[test]
    fn p3_n1_special_value() {
        let pair = ExponentPair::integer(3).unwrap();
        let w = eval_w(&pair, 1, 30).unwrap();
        let c = Float::with_val(256, Float::with_val(256, 2).pow(Float::with_val(256, &Rational::from((2, 3)))) - 1u32);
        let expected = Float::with_val(256, 1u32 - c.square());
        assert!(close(&w, &expected, 1e-32));
    }

    #[test]
    fn classical_examples() {
        let p2 = ExponentPair::integer(2).unwrap();
        let p3 = ExponentPair::integer(3).unwrap();
        assert_eq!(eval_w_classical(&p2, 1, 20).unwrap().to_f64(), 0.25);
        assert_eq!(eval_w_classical(&p2, 2, 20).unwrap().to_f64(), 0.0625);
        let v = eval_w_classical(&p3, 1, 30).unwrap();
        assert!(close(&v, &Float::with_val(256, &Rational::from((8, 27))), 1e-33));
    }

    #[test]
    fn w1_closed_agrees_with_general_bracket_form() {
        for p in ["11/10", "3/2", "2", "7/3", "4", "19/2"] {
            let pair = ExponentPair::parse(p).unwrap();
            let closed = eval_w1_closed(&pair, 40).unwrap();
            // The generic two-bracket routine evaluated at x = 1 hits 0^{1/q} = 0.
            let bits = 300;
            let inv_q = pair.inv_q_float(bits);
            let pm1 = pair.p_minus_one_float(bits);
            let b = Float::with_val(bits, Float::with_val(bits, 2).pow(&inv_q) - 1u32);
            let general = Float::with_val(bits, 1u32 - Float::with_val(bits, b.pow(&pm1)));
            assert!(close(&closed, &general, 1e-42), "p = {p}");
        }
    }

    #[test]
    fn zero_n_and_huge_precision_are_errors() {
        let pair = ExponentPair::integer(2).unwrap();
        assert!(eval_w(&pair, 0, 20).is_err());
        assert!(matches!(eval_w(&pair, 5, 1 << 40), Err(Error::PrecisionInfeasible { .. })));
        assert!(compare_weights(&pair, 3, 2, 20).is_err());
    }

    #[test]
    fn compare_weights_p2_n2_ratio() {
        let pair = ExponentPair::integer(2).unwrap();
        let table = compare_weights(&pair, 1, 4, 30).unwrap();
        assert_eq!(table.rows.len(), 4);
        assert!(table.all_verified());
        let r = table.rows[1].ratio_minus_one.to_f64();
        // (2 - sqrt(1/2) - sqrt(3/2)) * 16 - 1
        let oracle = (2.0 - 0.5f64.sqrt() - 1.5f64.sqrt()) * 16.0 - 1.0;
        assert!((r - oracle).abs() < 1e-12);
        assert!((r - 0.09037).abs() < 1e-5);
    }

    #[test]
    fn ratio_follows_leading_asymptotics_for_p2() {
        let pair = ExponentPair::integer(2).unwrap();
        let table = compare_weights(&pair, 1000, 1000, 30).unwrap();
        let r = table.rows[0].ratio_minus_one.to_f64();
        let n2 = 1e6;
        assert!((r * n2 - 5.0 / 16.0).abs() < 1e-5);
    }

    #[test]
    fn csv_and_json_layout() {
        let pair = ExponentPair::integer(2).unwrap();
        let table = compare_weights(&pair, 1, 2, 10).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "n,w_improved,w_classical,ratio_minus_one");
        assert_eq!(lines.next().unwrap(), "1,5.857864376e-1,2.500000000e-1,1.343145751e0");
        assert!(!text.contains('\r'));
        let json = table.to_json();
        assert_eq!(json.as_array().unwrap().len(), 2);
        assert_eq!(json[0]["n"], 1);
    }
}
