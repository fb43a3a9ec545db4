use phardy::laplacian::{apply_p_laplacian, signed_power_f64, weight_from_supersolution, GridFunction};
use phardy::numerics::required_precision;
use phardy::series::{expand_correction, expand_w_integer_p, plus_bracket_series, series_eval};
use phardy::weights::{compare_weights, eval_w, eval_w_classical};
use phardy::{BigRational, ExponentPair, Scalar};
use proptest::prelude::*;
use rug::Float;

fn exponent() -> impl Strategy<Value = ExponentPair> {
    (1i64..90, 1i64..10).prop_map(|(extra, d)| ExponentPair::rational(BigRational::from((d + extra, d))).unwrap())
}

fn small_exponent() -> impl Strategy<Value = ExponentPair> {
    (1i64..40, 1i64..8).prop_map(|(extra, d)| ExponentPair::rational(BigRational::from((d + extra, d))).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn improved_weight_is_positive_and_dominates(pair in exponent(), n in 1u64..10_000) {
        let w = eval_w(&pair, n, 30).unwrap();
        let wh = eval_w_classical(&pair, n, 30).unwrap();
        prop_assert!(*w.value() > 0);
        prop_assert!(*w.value() > *wh.value());
    }

    #[test]
    fn ground_state_reproduces_the_weight(pair in exponent(), n in 1usize..1000) {
        let digits = 30;
        let bits = required_precision(&pair, n as u64 + 1, digits).unwrap();
        let u = GridFunction::ground_state(&pair, n + 1, bits).unwrap();
        let lhs = weight_from_supersolution(&u, &pair, n, bits).unwrap();
        let w = eval_w(&pair, n as u64, digits).unwrap();
        let diff = Float::with_val(bits, lhs.value() - w.value()).abs();
        prop_assert!(diff < 1e-28, "residual {diff} at n = {n}");
    }

    #[test]
    fn supersolution_weight_is_scale_invariant(pair in small_exponent(), n in 1usize..50, c in 0.01f64..100.0) {
        let u = GridFunction::ground_state(&pair, n + 1, 160).unwrap();
        let scaled = u.scaled(&Float::with_val(160, c));
        let a = weight_from_supersolution(&u, &pair, n, 160).unwrap();
        let b = weight_from_supersolution(&scaled, &pair, n, 160).unwrap();
        let rel = Float::with_val(160, Float::with_val(160, a.value() - b.value()) / a.value()).abs();
        prop_assert!(rel < 1e-40);
    }

    #[test]
    fn laplacian_of_increasing_function(pair in small_exponent(), vals in prop::collection::vec(0.01f64..3.0, 3..12), n in 1usize..10) {
        let mut acc = 0.0;
        let values: Vec<Float> = std::iter::once(Float::with_val(128, 0))
            .chain(vals.iter().map(|v| { acc += v; Float::with_val(128, acc) }))
            .collect();
        let f = GridFunction::from_values(values).unwrap();
        let n = n.min(f.support_bound() - 1);
        let p = pair.p_f64();
        let left = f.get(n).unwrap().to_f64() - f.get(n - 1).unwrap().to_f64();
        let right = f.get(n + 1).unwrap().to_f64() - f.get(n).unwrap().to_f64();
        let expected = left.powf(p - 1.0) - right.powf(p - 1.0);
        let got = apply_p_laplacian(&f, n, &pair).unwrap().to_f64();
        prop_assert!((got - expected).abs() <= 1e-12 * (1.0 + left.powf(p - 1.0) + right.powf(p - 1.0)));
    }

    #[test]
    fn signed_power_is_odd(t in -5.0f64..5.0, p in 1.01f64..8.0) {
        prop_assert_eq!(signed_power_f64(-t, p), -signed_power_f64(t, p));
        prop_assert_eq!(signed_power_f64(0.0, p), 0.0);
    }

    #[test]
    fn correction_low_coefficients(pair in exponent()) {
        let s = expand_correction(&pair, 4, 128).unwrap();
        let p = pair.p_rational().unwrap().clone();
        let c2 = BigRational::from(BigRational::from(&p * 3u32) - 1u32) / BigRational::from(&p * 8u32);
        let p2 = BigRational::from(&p * &p);
        let p3 = BigRational::from(&p2 * &p);
        let num = BigRational::from(&p3 * 215u32) - BigRational::from(&p2 * 38u32) - BigRational::from(&p * 31u32) + 6u32;
        let c4 = BigRational::from(BigRational::from(num) / BigRational::from(&p3 * 1152u32));
        prop_assert_eq!(s.coeff(2), Some(Scalar::Exact(BigRational::from(c2))));
        prop_assert_eq!(s.coeff(4), Some(Scalar::Exact(c4)));
        prop_assert_eq!(s.coeff(1), Some(Scalar::Exact(BigRational::new())));
        prop_assert_eq!(s.coeff(3), Some(Scalar::Exact(BigRational::new())));
    }
}

#[test]
fn integer_expansion_structure() {
    for p in 2u32..=12 {
        let e = expand_w_integer_p(p, 40).unwrap();
        let leading = BigRational::from(rug::ops::Pow::pow(BigRational::from((p - 1, p)), p));
        assert_eq!(e.c[0], leading, "p = {p}");
        for (k, c) in e.c.iter().enumerate() {
            if k % 2 == 1 {
                assert_eq!(*c, 0, "p = {p}, k = {k}");
            } else {
                assert!(*c > 0, "p = {p}, k = {k}");
            }
        }
    }
}

#[test]
fn plus_bracket_is_absolutely_monotone() {
    for p in 2u32..=8 {
        let s = plus_bracket_series(p, 40).unwrap();
        let c = s.exact_coeffs().unwrap();
        let first = (p - 1) as usize;
        assert!(c[..first].iter().all(|x| *x == 0), "p = {p}");
        assert!(c[first..].iter().all(|x| *x > 0), "p = {p}");
    }
}

#[test]
fn series_agrees_with_closed_form() {
    for p in [2u32, 3, 4, 6] {
        let e = expand_w_integer_p(p, 40).unwrap().to_power_series();
        let pair = ExponentPair::integer(p).unwrap();
        for n in [2u64, 3, 5, 10, 100] {
            let x = Float::with_val(256, Float::with_val(256, 1) / n);
            let v = series_eval(&e, &x, 256).unwrap();
            let w = eval_w(&pair, n, 60).unwrap();
            let diff = Float::with_val(256, &v.value - w.value()).abs();
            let slack = Float::with_val(256, w.value() * Float::with_val(256, Float::i_exp(1, -180)));
            assert!(diff <= Float::with_val(256, &v.tail_bound + &slack), "p = {p}, n = {n}: {diff} vs {}", v.tail_bound);
        }
    }
}

#[test]
fn correction_asymptotics() {
    for p in ["2", "3", "3/2", "5"] {
        let pair = ExponentPair::parse(p).unwrap();
        let pf = pair.p_f64();
        let c2 = 3.0 / 8.0 - 1.0 / (8.0 * pf);
        let c4 = (215.0 * pf.powi(3) - 38.0 * pf * pf - 31.0 * pf + 6.0) / (1152.0 * pf.powi(3));
        for n in [100u64, 1000, 10_000] {
            let t = compare_weights(&pair, n, n, 40).unwrap();
            let a = t.rows[0].ratio_minus_one.value().clone();
            let nf = Float::with_val(256, n);
            let n2 = Float::with_val(256, &nf * &nf);
            let rem = Float::with_val(256, Float::with_val(256, &a * &n2) - c2) * &n2;
            let rem = rem.to_f64();
            assert!((rem - c4).abs() < 2.0 * c4.abs() + 1.0, "p = {p}, n = {n}: {rem}");
        }
    }
}
