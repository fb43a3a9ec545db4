//! Each lemma bound as a check over grids of `p` and `x`.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Integer};
use serde::Serialize;

use super::grid::{BoundEntry, Comparison, Grid, GridCheckReport, GridSpec, Site, Tally};
use super::{decomposition_sides, g_series, paired_from_point, rounding_floor, GSeries, DEFAULT_BITS};
use crate::error::{Error, Result};
use crate::numerics::{binom_general_rational, check_precision, BigRational, ExponentPair};
use crate::series::DEFAULT_ORDER;
use crate::weights::{w1_float, w_classical_float};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaId {
    /// -1 < g(x) < 0 < -g(x) < g(-x) < 1
    GBounds,
    /// w(x) = (x/q)^{p-1} (x/q + E + F)
    Decomposition,
    /// g(-x) + g(x) <= (p+1)/(9p^2)
    Gpm,
    /// a_k >= 1/(p k (k+1))
    AkLower,
    /// |binom(p-1, k)| <= 1/(4(p-1)) for k > p
    BinomUpper,
    /// g(-x) <= (q-1)(5q-1)/(6q^2) x
    GLinear,
    /// paired terms of F are nonnegative for 2k-1 <= p <= 2k
    Pairwise,
    /// F >= 0 for integer p and for p >= 3 with 2k-1 <= p <= 2k
    FNonneg,
    /// E + F >= C(p) Σ a_{2k} x^{2k+1} for 1 < p <= 2
    Case2,
    /// 74p^3 - 55p^2 - 5p - 2 > 0
    Case2Poly,
    /// odd-term estimate for 2k <= p <= 2k+1
    Case3,
    /// 1/(n(n+1)) - 2^{-(n+1)} > 0
    Case3Seq,
    /// E + F > 0
    Ef,
    /// w_p(1) > w_p^H(1)
    N1,
}

impl LemmaId {
    pub const ALL: [LemmaId; 14] = [
        LemmaId::GBounds,
        LemmaId::Decomposition,
        LemmaId::Gpm,
        LemmaId::AkLower,
        LemmaId::BinomUpper,
        LemmaId::GLinear,
        LemmaId::Pairwise,
        LemmaId::FNonneg,
        LemmaId::Case2,
        LemmaId::Case2Poly,
        LemmaId::Case3,
        LemmaId::Case3Seq,
        LemmaId::Ef,
        LemmaId::N1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaId::GBounds => "g-bounds",
            LemmaId::Decomposition => "decomposition",
            LemmaId::Gpm => "gpm",
            LemmaId::AkLower => "ak-lower",
            LemmaId::BinomUpper => "binom-upper",
            LemmaId::GLinear => "g-linear",
            LemmaId::Pairwise => "pairwise",
            LemmaId::FNonneg => "f-nonneg",
            LemmaId::Case2 => "case2",
            LemmaId::Case2Poly => "case2-poly",
            LemmaId::Case3 => "case3",
            LemmaId::Case3Seq => "case3-seq",
            LemmaId::Ef => "ef",
            LemmaId::N1 => "n1",
        }
    }

    /// Whether the check applies at `p`.
    pub fn applies(self, p: &BigRational) -> bool {
        match self {
            LemmaId::Pairwise => odd_even_window(p),
            LemmaId::FNonneg => p.is_integer() || (odd_even_window(p) && *p >= 3),
            LemmaId::Case2 => *p <= 2,
            LemmaId::Case3 => even_odd_window(p),
            _ => true,
        }
    }
}

/// `2k - 1 <= p <= 2k` for some `k >= 1`.
fn odd_even_window(p: &BigRational) -> bool {
    let floor = Integer::from(p.floor_ref());
    floor.is_odd() || (p.is_integer() && floor.is_even())
}

/// `2k <= p <= 2k + 1` for some `k >= 1`.
fn even_odd_window(p: &BigRational) -> bool {
    let floor = Integer::from(p.floor_ref());
    *p >= 2 && (floor.is_even() || p.is_integer())
}

/// Grids and precision for a run of the lemma checks.
#[derive(Clone, Debug)]
pub struct LemmaSuite {
    pub p_grid: Grid,
    pub x_grid: Grid,
    /// p-grid for the `n = 1` comparison.
    pub n1_grid: Grid,
    pub bits: u32,
    pub order: usize,
    /// Largest index for the coefficient lemmas and the paired terms.
    pub k_max: u32,
    /// Checks to run; empty means all.
    pub only: Vec<LemmaId>,
}

impl Default for LemmaSuite {
    fn default() -> Self {
        Self {
            p_grid: Grid::default_p(),
            x_grid: Grid::default_x(),
            n1_grid: Grid::default_n1(),
            bits: DEFAULT_BITS,
            order: DEFAULT_ORDER,
            k_max: DEFAULT_ORDER as u32,
            only: Vec::new(),
        }
    }
}

/// Runs the selected checks in the fixed order of [`LemmaId::ALL`].
///
/// Checks restricted to a range of `p` run on the part of the p-grid inside
/// that range; a check named in `only` with no such `p` is an error, an
/// unnamed one is skipped.
pub fn run_lemma_suite(suite: &LemmaSuite) -> Result<Vec<GridCheckReport>> {
    check_precision(suite.bits)?;
    let mut reports = Vec::new();
    for id in LemmaId::ALL {
        let named = suite.only.contains(&id);
        if !suite.only.is_empty() && !named {
            continue;
        }
        let grid = if id == LemmaId::N1 { &suite.n1_grid } else { &suite.p_grid };
        let Some(ps) = grid.filtered(|p| id.applies(p)) else {
            if named {
                return Err(Error::Precondition(format!("no p in `{}` satisfies the hypotheses of {}", grid, id.name())));
            }
            continue;
        };
        let (x, order, bits, k_max) = (&suite.x_grid, suite.order, suite.bits, suite.k_max);
        reports.push(match id {
            LemmaId::GBounds => check_g_bounds(&ps, x, order, bits)?,
            LemmaId::Decomposition => check_decomposition_identity(&ps, x, order, bits)?,
            LemmaId::Gpm => check_gpm(&ps, x, order, bits)?,
            LemmaId::AkLower => check_ak_lower(&ps, k_max, bits)?,
            LemmaId::BinomUpper => check_binom_upper(&ps, k_max, bits)?,
            LemmaId::GLinear => check_g_linear(&ps, x, order, bits)?,
            LemmaId::Pairwise => check_pairwise_positivity(&ps, x, k_max, order, bits)?,
            LemmaId::FNonneg => check_f_nonnegative(&ps, x, order, bits)?,
            LemmaId::Case2 => check_case2_bound(&ps, x, order, bits)?,
            LemmaId::Case2Poly => check_case2_polynomial(&ps, bits)?,
            LemmaId::Case3 => check_case3_terms(&ps, x, order, bits)?,
            LemmaId::Case3Seq => check_case3_sequence(k_max.max(2) as u64 + 24, bits)?,
            LemmaId::Ef => check_ef_positive(&ps, x, order, bits)?,
            LemmaId::N1 => check_n1_case(&ps, bits)?,
        });
    }
    Ok(reports)
}

fn require(id: LemmaId, p_grid: &Grid) -> Result<()> {
    match p_grid.values().iter().find(|p| !id.applies(p)) {
        Some(p) => Err(Error::Precondition(format!("p = {p} is outside the range of {}", id.name()))),
        None => Ok(()),
    }
}

fn x_points(x_grid: &Grid, bits: u32) -> Result<Vec<(Float, String)>> {
    let half = BigRational::from((1, 2));
    x_grid
        .values()
        .iter()
        .map(|x| {
            if *x <= 0 || *x > half {
                return Err(Error::Domain { value: x.to_string(), window: "(0, 1/2]" });
            }
            Ok((Float::with_val(bits, x), x.to_string()))
        })
        .collect()
}

/// Runs `check` once per p in parallel and merges the tallies in grid order.
fn over_p<F>(p_grid: &Grid, check: F) -> Result<Tally>
where
    F: Fn(&BigRational, &ExponentPair) -> Result<Tally> + Sync,
{
    let parts: Vec<Result<Tally>> = p_grid
        .values()
        .par_iter()
        .map(|p| {
            if *p <= 1 {
                return Err(Error::ExponentOutOfRange(p.to_string()));
            }
            check(p, &ExponentPair::rational(p.clone())?)
        })
        .collect();
    let mut tally = Tally::default();
    for part in parts {
        tally.merge(part?);
    }
    Ok(tally)
}

/// Runs `point` at every x of the grid for every p, with `g` built once per p.
fn over_px<F>(p_grid: &Grid, x_grid: &Grid, order: usize, bits: u32, point: F) -> Result<Tally>
where
    F: Fn(&GSeries, &Float, &mut dyn FnMut(Option<u64>, Comparison)) -> Result<()> + Sync,
{
    check_precision(bits)?;
    let xs = x_points(x_grid, bits)?;
    over_p(p_grid, |p, pair| {
        let gs = g_series(pair, order, bits)?;
        let mut tally = Tally::default();
        for (x, label) in &xs {
            let mut sink = |k: Option<u64>, cmp: Comparison| {
                tally.record(Site { p: p.to_string(), x: Some(label.clone()), k }, &cmp);
            };
            point(&gs, x, &mut sink)?;
        }
        Ok(tally)
    })
}

fn xgrid_spec(p_grid: &Grid, x_grid: &Grid) -> GridSpec {
    GridSpec { p: p_grid.to_string(), x: Some(x_grid.to_string()), k: None, points: 0 }
}

fn kgrid_spec(p_grid: &Grid, k: String) -> GridSpec {
    GridSpec { p: p_grid.to_string(), x: None, k: Some(k), points: 0 }
}

fn exact_bounds(p_grid: &Grid, f: impl Fn(&BigRational) -> BigRational) -> Vec<BoundEntry> {
    p_grid.values().iter().map(|p| BoundEntry { p: p.to_string(), bound: f(p).to_string() }).collect()
}

fn q_of(p: &BigRational) -> BigRational {
    BigRational::from(p / BigRational::from(p - 1u32))
}

fn smallest_margin(cmps: Vec<Comparison>) -> Comparison {
    cmps.into_iter()
        .map(|c| (c.margin(), c))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Less))
        .map(|(_, c)| c)
        .expect("at least one comparison")
}

/// Exact comparison `lhs <= rhs` carried as floats whose difference has the exact sign.
fn exact_weak(lhs: &BigRational, rhs: &BigRational, bits: u32) -> Comparison {
    let l = Float::with_val(bits, lhs);
    let gap = Float::with_val(bits, BigRational::from(rhs - lhs));
    let r = Float::with_val(bits, &l + &gap);
    // Zero tolerance; if rounding of lhs + gap could flip the order, compare the gap itself.
    let (l, r) = if Float::with_val(bits, &r - &l).is_sign_negative() == gap.is_sign_negative() {
        (l, r)
    } else {
        (Float::new(bits), gap)
    };
    Comparison::weak(l, r, Float::new(bits))
}

pub fn check_g_bounds(p_grid: &Grid, x_grid: &Grid, order: usize, bits: u32) -> Result<GridCheckReport> {
    let tally = over_px(p_grid, x_grid, order, bits, |gs, x, sink| {
        let pt = gs.point(x);
        let one = Float::with_val(bits, 1u32);
        let zero = Float::new(bits);
        let twice = Float::with_val(bits, &pt.tol * 2u32);
        let neg_plus = Float::with_val(bits, -&pt.plus);
        sink(
            None,
            smallest_margin(vec![
                Comparison::strict(-one.clone(), pt.plus.clone(), pt.tol.clone()),
                Comparison::strict(pt.plus.clone(), zero, pt.tol.clone()),
                Comparison::strict(neg_plus, pt.minus.clone(), twice),
                Comparison::strict(pt.minus.clone(), one, pt.tol.clone()),
            ]),
        );
        Ok(())
    })?;
    Ok(tally.finish(
        LemmaId::GBounds.name(),
        "-1 < g(x) < 0 < -g(x) < g(-x) < 1; worst of the four gaps at each point",
        xgrid_spec(p_grid, x_grid),
        vec![],
    ))
}

pub fn check_decomposition_identity(p_grid: &Grid, x_grid: &Grid, order: usize, bits: u32) -> Result<GridCheckReport> {
    let tally = over_px(p_grid, x_grid, order, bits, |gs, x, sink| {
        let (lhs, rhs, tol) = decomposition_sides(gs, x)?;
        sink(None, Comparison::close(lhs, rhs, tol));
        Ok(())
    })?;
    Ok(tally.finish(
        LemmaId::Decomposition.name(),
        "w(x) from the closed form (lhs) equals (x/q)^{p-1} (x/q + E_p(x) + F_p(x)) (rhs)",
        xgrid_spec(p_grid, x_grid),
        vec![],
    ))
}

fn gpm_bound(p: &BigRational) -> BigRational {
    BigRational::from(BigRational::from(p + 1u32) / BigRational::from(BigRational::from(p.square_ref()) * 9u32))
}

pub fn check_gpm(p_grid: &Grid, x_grid: &Grid, order: usize, bits: u32) -> Result<GridCheckReport> {
    let tally = over_px(p_grid, x_grid, order, bits, |gs, x, sink| {
        let pt = gs.point(x);
        let p = gs.pair().p_rational().expect("rational grid");
        let bound = Float::with_val(bits, &gpm_bound(p));
        let sum = Float::with_val(bits, &pt.minus + &pt.plus);
        sink(None, Comparison::weak(sum, bound, Float::with_val(bits, &pt.tol * 2u32)));
        Ok(())
    })?;
    Ok(tally.finish(
        LemmaId::Gpm.name(),
        "g(-x) + g(x) <= (p+1)/(9p^2)",
        xgrid_spec(p_grid, x_grid),
        exact_bounds(p_grid, gpm_bound),
    ))
}

/// `a_k >= 1/(p k (k+1))` for `2 <= k <= k_max`, compared exactly.
pub fn check_ak_lower(p_grid: &Grid, k_max: u32, bits: u32) -> Result<GridCheckReport> {
    if k_max < 2 {
        return Err(Error::Precondition("k_max must be at least 2".into()));
    }
    let tally = over_p(p_grid, |p, pair| {
        let gs = g_series(pair, k_max as usize, bits)?;
        let a = gs.exact_coeffs().expect("rational p");
        let mut tally = Tally::default();
        for k in 2..=k_max {
            let bound = BigRational::from((1u32, 1u32)) / BigRational::from(p * (k * (k + 1)));
            let bound = BigRational::from(bound);
            let cmp = exact_weak(&bound, &a[k as usize], bits);
            tally.record(Site { p: p.to_string(), x: None, k: Some(k as u64) }, &cmp);
        }
        Ok(tally)
    })?;
    Ok(tally.finish(
        LemmaId::AkLower.name(),
        "a_k = q|binom(1/q, k+1)| >= 1/(p k (k+1)), exact rational comparison",
        kgrid_spec(p_grid, format!("2..={k_max}")),
        vec![],
    ))
}

fn binom_upper_bound(p: &BigRational) -> BigRational {
    BigRational::from(BigRational::from(1) / BigRational::from(BigRational::from(p - 1u32) * 4u32))
}

/// `|binom(p-1, k)| <= 1/(4(p-1))` for integers `p < k <= k_max`, compared exactly.
pub fn check_binom_upper(p_grid: &Grid, k_max: u32, bits: u32) -> Result<GridCheckReport> {
    let tally = over_p(p_grid, |p, _| {
        let pm1 = BigRational::from(p - 1u32);
        let bound = binom_upper_bound(p);
        let first = Integer::from(p.floor_ref()).to_u32().unwrap_or(u32::MAX).saturating_add(1);
        let mut tally = Tally::default();
        for k in first..=k_max.max(first) {
            let b = binom_general_rational(&pm1, k);
            let cmp = exact_weak(&BigRational::from(b.abs_ref()), &bound, bits);
            tally.record(Site { p: p.to_string(), x: None, k: Some(k as u64) }, &cmp);
        }
        Ok(tally)
    })?;
    Ok(tally.finish(
        LemmaId::BinomUpper.name(),
        "|binom(p-1, k)| <= 1/(4(p-1)) for integer k > p, exact rational comparison",
        kgrid_spec(p_grid, format!("floor(p)+1..={k_max}")),
        exact_bounds(p_grid, binom_upper_bound),
    ))
}

fn g_linear_slope(p: &BigRational) -> BigRational {
    let q = q_of(p);
    let num = BigRational::from(&q - 1u32) * BigRational::from(BigRational::from(&q * 5u32) - 1u32);
    BigRational::from(num / BigRational::from(BigRational::from(q.square_ref()) * 6u32))
}

pub fn check_g_linear(p_grid: &Grid, x_grid: &Grid, order: usize, bits: u32) -> Result<GridCheckReport> {
    let tally = over_px(p_grid, x_grid, order, bits, |gs, x, sink| {
        let pt = gs.point(x);
        let slope = Float::with_val(bits, &g_linear_slope(gs.pair().p_rational().expect("rational grid")));
        let rhs = Float::with_val(bits, slope * x);
        let tol = Float::with_val(bits, &pt.tol + rounding_floor(&rhs, bits));
        sink(None, Comparison::weak(pt.minus, rhs, tol));
        Ok(())
    })?;
    Ok(tally.finish(
        LemmaId::GLinear.name(),
        "g(-x) <= (q-1)(5q-1)/(6q^2) x",
        xgrid_spec(p_grid, x_grid),
        exact_bounds(p_grid, g_linear_slope),
    ))
}

/// Paired terms `n, n+1` of `F_p` for odd `n <= n_max` (`n = 1` included) are nonnegative.
pub fn check_pairwise_positivity(
    p_grid: &Grid,
    x_grid: &Grid,
    n_max: u32,
    order: usize,
    bits: u32,
) -> Result<GridCheckReport> {
    require(LemmaId::Pairwise, p_grid)?;
    let tally = over_px(p_grid, x_grid, order, bits, |gs, x, sink| {
        let pt = gs.point(x);
        let pm1 = BigRational::from(gs.pair().p_rational().expect("rational grid") - 1u32);
        for n in (1..=n_max.max(1)).step_by(2) {
            // Integer p: both coefficients vanish once n >= p, leaving 0 >= 0.
            if binom_general_rational(&pm1, n) == 0 && binom_general_rational(&pm1, n + 1) == 0 {
                continue;
            }
            let v = paired_from_point(gs, &pt, n);
            sink(Some(n as u64), Comparison::weak(Float::new(bits), v.value, v.tolerance));
        }
        Ok(())
    })?;
    Ok(tally.finish(
        LemmaId::Pairwise.name(),
        "binom(p-1,n)(g^n(-x)-g^n(x)) + binom(p-1,n+1)(g^{n+1}(-x)-g^{n+1}(x)) >= 0 for odd n, 2k-1 <= p <= 2k",
        GridSpec { k: Some(format!("odd 1..={n_max}")), ..xgrid_spec(p_grid, x_grid) },
        vec![],
    ))
}

pub fn check_f_nonnegative(p_grid: &Grid, x_grid: &Grid, order: usize, bits: u32) -> Result<GridCheckReport> {
    require(LemmaId::FNonneg, p_grid)?;
    let tally = over_px(p_grid, x_grid, order, bits, |gs, x, sink| {
        let f = gs.f(x, None)?;
        sink(None, Comparison::weak(Float::new(bits), f.value, f.tolerance));
        Ok(())
    })?;
    Ok(tally.finish(
        LemmaId::FNonneg.name(),
        "F_p(x) >= 0 for integer p and for p >= 3 with 2k-1 <= p <= 2k",
        xgrid_spec(p_grid, x_grid),
        vec![],
    ))
}

fn case2_polynomial(p: &BigRational) -> BigRational {
    let p2 = BigRational::from(p.square_ref());
    let p3 = BigRational::from(&p2 * p);
    BigRational::from(p3 * 74u32 - p2 * 55u32 - BigRational::from(p * 5u32) - 2u32)
}

/// `E_p + F_p >= 2(p-1) (74p^3 - 55p^2 - 5p - 2)/(72p^3) Σ_{k>=1} a_{2k} x^{2k+1}` for `1 < p <= 2`.
pub fn check_case2_bound(p_grid: &Grid, x_grid: &Grid, order: usize, bits: u32) -> Result<GridCheckReport> {
    require(LemmaId::Case2, p_grid)?;
    let tally = over_px(p_grid, x_grid, order, bits, |gs, x, sink| {
        let p = gs.pair().p_rational().expect("rational grid");
        let c = BigRational::from(
            BigRational::from(p - 1u32) * case2_polynomial(p) / BigRational::from(BigRational::from(BigRational::from(p.square_ref()) * p) * 36u32),
        );
        let c = Float::with_val(bits, &c);
        let x2 = Float::with_val(bits, x.square_ref());
        let mut xk = Float::with_val(bits, x * &x2);
        let mut sum = Float::new(bits);
        let mut last_even = 2;
        for k in (2..=gs.order()).step_by(2) {
            sum += Float::with_val(bits, gs.a_float(k) * &xk);
            xk *= &x2;
            last_even = k;
        }
        // Truncation only lowers the bound; its missing tail goes into the tolerance.
        let tail = Float::with_val(bits, Float::with_val(bits, gs.a_float(last_even) * &xk) / Float::with_val(bits, 1u32 - &x2));
        let lhs = Float::with_val(bits, &c * &sum);
        let e = gs.e(x)?;
        let f = gs.f(x, None)?;
        let rhs = Float::with_val(bits, &e.value + &f.value);
        let tol = Float::with_val(bits, &e.tolerance + &f.tolerance)
            + Float::with_val(bits, &c * tail)
            + rounding_floor(&lhs, bits);
        sink(None, Comparison::weak(lhs, rhs, Float::with_val(bits, tol)));
        Ok(())
    })?;
    Ok(tally.finish(
        LemmaId::Case2.name(),
        "E_p + F_p >= 2(p-1)(74p^3-55p^2-5p-2)/(72p^3) sum a_{2k} x^{2k+1} for 1 < p <= 2",
        xgrid_spec(p_grid, x_grid),
        vec![],
    ))
}

/// `74p^3 - 55p^2 - 5p - 2 > 0`, exactly.
pub fn check_case2_polynomial(p_grid: &Grid, bits: u32) -> Result<GridCheckReport> {
    let tally = over_p(p_grid, |p, _| {
        let mut tally = Tally::default();
        let v = case2_polynomial(p);
        let cmp = Comparison::strict(Float::new(bits), Float::with_val(bits, &v), Float::new(bits));
        tally.record(Site { p: p.to_string(), x: None, k: None }, &cmp);
        Ok(tally)
    })?;
    Ok(tally.finish(
        LemmaId::Case2Poly.name(),
        "74p^3 - 55p^2 - 5p - 2 > 0, exact",
        GridSpec { p: p_grid.to_string(), x: None, k: None, points: 0 },
        exact_bounds(p_grid, case2_polynomial),
    ))
}

/// For `2k <= p <= 2k+1` and odd `n >= 2k+1` up to the series order:
/// `2(p-1) a_n x^n + 2 binom(p-1, n) g(-x)^n >= (1/(n(n+1)) - 2^{-(n+1)}) x^n`.
pub fn check_case3_terms(p_grid: &Grid, x_grid: &Grid, order: usize, bits: u32) -> Result<GridCheckReport> {
    require(LemmaId::Case3, p_grid)?;
    let tally = over_px(p_grid, x_grid, order, bits, |gs, x, sink| {
        let p = gs.pair().p_rational().expect("rational grid");
        let k = Integer::from(p.floor_ref()) / 2u32;
        let first = 2 * k.to_u32().expect("moderate p") + 1;
        let pt = gs.point(x);
        let big_g = Float::with_val(bits, &pt.minus + &pt.tol);
        for n in (first..=gs.order() as u32).step_by(2) {
            let xn = Float::with_val(bits, x.pow(n));
            let binom = Float::with_val(bits, &binom_general_rational(&BigRational::from(p - 1u32), n));
            let left = Float::with_val(bits, Float::with_val(bits, gs.a_float(n as usize) * &xn) * gs.p_minus_one()) * 2u32;
            let gn = Float::with_val(bits, (&pt.minus).pow(n));
            let right = Float::with_val(bits, &binom * gn * 2u32);
            let term = Float::with_val(bits, &left + &right);
            let seq = BigRational::from((1u32, n * (n + 1))) - BigRational::from((1u32, 1u32)) / BigRational::from(Integer::from(1u32) << (n + 1));
            let lower = Float::with_val(bits, Float::with_val(bits, &BigRational::from(seq)) * &xn);
            let propagated = Float::with_val(
                bits,
                Float::with_val(bits, binom.abs_ref()) * Float::with_val(bits, (&big_g).pow(n - 1)) * &pt.tol * (2 * n),
            );
            let tol = Float::with_val(bits, propagated + rounding_floor(&left, bits) + rounding_floor(&right, bits));
            sink(Some(n as u64), Comparison::weak(lower, term, tol));
        }
        Ok(())
    })?;
    Ok(tally.finish(
        LemmaId::Case3.name(),
        "2(p-1) a_n x^n + 2 binom(p-1,n) g^n(-x) >= (1/(n(n+1)) - 2^{-(n+1)}) x^n for odd n >= 2k+1, 2k <= p <= 2k+1",
        GridSpec { k: Some(format!("odd 2k+1..={order}")), ..xgrid_spec(p_grid, x_grid) },
        vec![],
    ))
}

/// `1/(n(n+1)) - 2^{-(n+1)} > 0` for `2 <= n <= n_max`, exactly.
pub fn check_case3_sequence(n_max: u64, bits: u32) -> Result<GridCheckReport> {
    if n_max < 2 {
        return Err(Error::Precondition("n_max must be at least 2".into()));
    }
    let mut tally = Tally::default();
    for n in 2..=n_max {
        let a = BigRational::from((1u64, n * (n + 1)));
        let b = BigRational::from(BigRational::from(1) / BigRational::from(Integer::from(1u32) << (n as u32 + 1)));
        let gap = Float::with_val(bits, &BigRational::from(&a - &b));
        let cmp = Comparison::strict(Float::new(bits), gap, Float::new(bits));
        tally.record(Site { p: "any".into(), x: None, k: Some(n) }, &cmp);
    }
    Ok(tally.finish(
        LemmaId::Case3Seq.name(),
        "1/(n(n+1)) - 2^{-(n+1)} > 0, exact",
        GridSpec { p: "any".into(), x: None, k: Some(format!("2..={n_max}")), points: 0 },
        vec![],
    ))
}

pub fn check_ef_positive(p_grid: &Grid, x_grid: &Grid, order: usize, bits: u32) -> Result<GridCheckReport> {
    let tally = over_px(p_grid, x_grid, order, bits, |gs, x, sink| {
        let e = gs.e(x)?;
        let f = gs.f(x, None)?;
        let sum = Float::with_val(bits, &e.value + &f.value);
        let tol = Float::with_val(bits, &e.tolerance + &f.tolerance);
        sink(None, Comparison::strict(Float::new(bits), sum, tol));
        Ok(())
    })?;
    Ok(tally.finish(
        LemmaId::Ef.name(),
        "E_p(x) + F_p(x) > 0, beyond the truncation tolerance",
        xgrid_spec(p_grid, x_grid),
        vec![],
    ))
}

/// `w_p(1) > w_p^H(1)` at every `p` of the grid, which must lie in `(1, 20]`.
pub fn check_n1_case(p_grid: &Grid, bits: u32) -> Result<GridCheckReport> {
    check_precision(bits)?;
    if let Some(p) = p_grid.values().iter().find(|p| **p > 20) {
        return Err(Error::Domain { value: p.to_string(), window: "(1, 20]" });
    }
    let tally = over_p(p_grid, |p, pair| {
        let w = w1_float(pair, bits);
        let wh = w_classical_float(pair, 1, bits);
        let tol = rounding_floor(&Float::with_val(bits, 1u32), bits);
        let mut tally = Tally::default();
        tally.record(Site { p: p.to_string(), x: None, k: None }, &Comparison::strict(wh, w, tol));
        Ok(tally)
    })?;
    Ok(tally.finish(
        LemmaId::N1.name(),
        "w_p^H(1) = ((p-1)/p)^p < w_p(1) = 1 - (2^{1-1/p} - 1)^{p-1}",
        GridSpec { p: p_grid.to_string(), x: None, k: None, points: 0 },
        vec![],
    ))
}

/// `|a - t|^p >= (1-t)^{p-1} (|a|^p - t)` for real `a`, `0 <= t <= 1`, `p > 1`.
///
/// Evaluated in double precision with a relative slack of `1e-12`.
pub fn check_pointwise_power_bound(a: f64, t: f64, p: f64) -> bool {
    if !(0.0..=1.0).contains(&t) || p <= 1.0 || !a.is_finite() {
        return false;
    }
    let lhs = (a - t).abs().powf(p);
    let rhs = (1.0 - t).powf(p - 1.0) * (a.abs().powf(p) - t);
    lhs >= rhs - 1e-12 * lhs.abs().max(rhs.abs()).max(1.0)
}
