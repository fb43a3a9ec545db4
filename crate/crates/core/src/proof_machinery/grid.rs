//! Exact rational grids and the reports produced by checking an inequality on them.

use std::fmt;

use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{decimal_string, parse_exact_rational, BigRational};

const MAX_GRID_POINTS: usize = 10_000_000;
const MAX_RECORDED_FAILURES: usize = 64;

/// A finite list of exact rationals, given as `start:stop:step`, a comma list, or one value.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    values: Vec<BigRational>,
    label: String,
}

impl Grid {
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let parts: Vec<&str> = spec.split(':').collect();
        let values = match parts.as_slice() {
            [start, stop, step] => {
                let start = parse_exact_rational(start)?;
                let stop = parse_exact_rational(stop)?;
                let step = parse_exact_rational(step)?;
                range_values(&start, &stop, &step)?
            }
            [_] => spec.split(',').map(parse_exact_rational).collect::<Result<Vec<_>>>()?,
            _ => return Err(Error::Precondition(format!("grid `{spec}` is not start:stop:step or a list"))),
        };
        if values.is_empty() {
            return Err(Error::Precondition(format!("grid `{spec}` is empty")));
        }
        Ok(Self { values, label: spec.to_string() })
    }

    pub fn from_values(values: Vec<BigRational>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Precondition("grid is empty".into()));
        }
        let label = values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        Ok(Self { values, label })
    }

    pub fn single(value: BigRational) -> Self {
        let label = value.to_string();
        Self { values: vec![value], label }
    }

    /// `{1.01, 1.1, 1.25, 1.5, 1.75, 2, 2.25, 2.5, 2.75, 3, 3.5, ..., 10}`.
    pub fn default_p() -> Self {
        let mut values: Vec<BigRational> = ["1.01", "1.1", "1.25", "1.5", "1.75", "2", "2.25", "2.5", "2.75"]
            .iter()
            .map(|s| parse_exact_rational(s).expect("literal"))
            .collect();
        values.extend((6..=20).map(|h| BigRational::from((h, 2))));
        let label = "1.01,1.1,1.25,1.5,1.75,2,2.25,2.5,2.75,3:10:0.5".to_string();
        Self { values, label }
    }

    /// `0.001:0.5:0.001`.
    pub fn default_x() -> Self {
        Self::parse("0.001:0.5:0.001").expect("literal grid")
    }

    /// `1.001:20:0.001`, the p-grid for the `n = 1` comparison.
    pub fn default_n1() -> Self {
        Self::parse("1.001:20:0.001").expect("literal grid")
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Keeps the values accepted by `keep`; `None` if nothing survives.
    pub fn filtered(&self, keep: impl Fn(&BigRational) -> bool) -> Option<Self> {
        let values: Vec<_> = self.values.iter().filter(|v| keep(v)).cloned().collect();
        if values.is_empty() {
            return None;
        }
        let label = if values.len() == self.values.len() {
            self.label.clone()
        } else {
            values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        };
        Some(Self { values, label })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn range_values(start: &BigRational, stop: &BigRational, step: &BigRational) -> Result<Vec<BigRational>> {
    if *step <= 0 {
        return Err(Error::Precondition("grid step must be positive".into()));
    }
    if start > stop {
        return Err(Error::Precondition("grid start exceeds stop".into()));
    }
    let span = BigRational::from(BigRational::from(stop - start) / step);
    let count = span.floor().numer().to_usize().unwrap_or(usize::MAX).saturating_add(1);
    if count > MAX_GRID_POINTS {
        return Err(Error::Precondition(format!("grid has more than {MAX_GRID_POINTS} points")));
    }
    Ok((0..count).map(|i| BigRational::from(start + BigRational::from(step * i as u64))).collect())
}

/// Which grids a report covers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub p: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<String>,
    pub points: usize,
}

/// A grid point where the checked inequality failed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub p: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    pub lhs: String,
    pub rhs: String,
}

/// A per-p constant that the check compares against.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundEntry {
    pub p: String,
    pub bound: String,
}

/// Outcome of one inequality checked over a grid.
///
/// The margin at a point is `rhs - lhs - tol` for a strict inequality
/// `lhs < rhs`, `rhs - lhs + tol` for `lhs <= rhs`, and `tol - |rhs - lhs|` for
/// an identity, so a pass certifies strictness beyond the truncation and
/// rounding tolerance `tol`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridCheckReport {
    pub name: String,
    pub description: String,
    pub grid: GridSpec,
    pub worst_margin: f64,
    /// Largest tolerance used at any point.
    pub tolerance: f64,
    pub pass: bool,
    /// Total number of failing points; at most 64 are listed.
    pub failure_count: usize,
    pub failures: Vec<Failure>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<BoundEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `lhs < rhs`
    Strict,
    /// `lhs <= rhs`
    Weak,
    /// `|lhs - rhs| < tol`
    Close,
}

/// One inequality between two evaluated sides, each known to within `tol`.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub lhs: Float,
    pub rhs: Float,
    pub tol: Float,
    pub relation: Relation,
}

impl Comparison {
    pub fn strict(lhs: Float, rhs: Float, tol: Float) -> Self {
        Self { lhs, rhs, tol, relation: Relation::Strict }
    }

    pub fn weak(lhs: Float, rhs: Float, tol: Float) -> Self {
        Self { lhs, rhs, tol, relation: Relation::Weak }
    }

    pub fn close(lhs: Float, rhs: Float, tol: Float) -> Self {
        Self { lhs, rhs, tol, relation: Relation::Close }
    }

    pub fn margin(&self) -> Float {
        let bits = self.lhs.prec().max(self.rhs.prec());
        let gap = Float::with_val(bits, &self.rhs - &self.lhs);
        match self.relation {
            Relation::Strict => Float::with_val(bits, gap - &self.tol),
            Relation::Weak => Float::with_val(bits, gap + &self.tol),
            Relation::Close => Float::with_val(bits, &self.tol - gap.abs()),
        }
    }
}

/// Where a comparison was made.
#[derive(Clone, Debug)]
pub struct Site {
    pub p: String,
    pub x: Option<String>,
    pub k: Option<u64>,
}

/// Running minimum of margins, merged in grid order.
#[derive(Clone, Debug, Default)]
pub(crate) struct Tally {
    worst: Option<Float>,
    tolerance: f64,
    points: usize,
    failure_count: usize,
    failures: Vec<Failure>,
}

impl Tally {
    pub(crate) fn record(&mut self, site: Site, cmp: &Comparison) {
        let margin = cmp.margin();
        self.points += 1;
        self.tolerance = self.tolerance.max(cmp.tol.to_f64());
        if margin <= 0 || margin.is_nan() {
            self.failure_count += 1;
            if self.failures.len() < MAX_RECORDED_FAILURES {
                self.failures.push(Failure {
                    p: site.p,
                    x: site.x,
                    k: site.k,
                    lhs: decimal_string(&cmp.lhs, 20),
                    rhs: decimal_string(&cmp.rhs, 20),
                });
            }
        }
        let worse = match &self.worst {
            None => true,
            Some(w) => margin < *w || margin.is_nan(),
        };
        if worse {
            self.worst = Some(margin);
        }
    }

    pub(crate) fn merge(&mut self, other: Tally) {
        self.points += other.points;
        self.tolerance = self.tolerance.max(other.tolerance);
        self.failure_count += other.failure_count;
        let room = MAX_RECORDED_FAILURES - self.failures.len();
        self.failures.extend(other.failures.into_iter().take(room));
        if let Some(w) = other.worst {
            let worse = match &self.worst {
                None => true,
                Some(mine) => w < *mine || w.is_nan(),
            };
            if worse {
                self.worst = Some(w);
            }
        }
    }

    pub(crate) fn finish(self, name: &str, description: &str, grid: GridSpec, bounds: Vec<BoundEntry>) -> GridCheckReport {
        let worst_margin = self.worst.as_ref().map_or(f64::NAN, Float::to_f64);
        let pass = self.failure_count == 0 && self.points > 0;
        GridCheckReport {
            name: name.to_string(),
            description: description.to_string(),
            grid: GridSpec { points: self.points, ..grid },
            worst_margin,
            tolerance: self.tolerance,
            pass,
            failure_count: self.failure_count,
            failures: self.failures,
            bounds,
        }
    }
}

impl GridCheckReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    /// Combines two reports of the same check over disjoint parts of a grid.
    pub fn merge(mut self, other: GridCheckReport) -> GridCheckReport {
        self.grid.points += other.grid.points;
        self.grid.p = format!("{},{}", self.grid.p, other.grid.p);
        self.worst_margin = self.worst_margin.min(other.worst_margin);
        self.tolerance = self.tolerance.max(other.tolerance);
        self.failure_count += other.failure_count;
        let room = MAX_RECORDED_FAILURES.saturating_sub(self.failures.len());
        self.failures.extend(other.failures.into_iter().take(room));
        self.bounds.extend(other.bounds);
        self.pass = self.pass && other.pass;
        self
    }
}
