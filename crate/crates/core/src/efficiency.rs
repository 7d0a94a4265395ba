//! Local approximate Bahadur indices over trimming grids, equivalence
//! classes, zero-efficiency trimming levels and the KS/S crossover.

use std::io;

use serde::{Deserialize, Serialize};
use rayon::prelude::*;

use crate::asymptotics::{self, report, AsymptoticReport, FamilyModel, DEGENERATE_VARIANCE};
use crate::distributions::AlternativeFamily;
use crate::error::{Error, Result};
use crate::location::mu_theta_prime;
use crate::statistics::{Family, StatKind, StatisticSpec};

/// Index agreement tolerance for equivalence.
pub const EQUIVALENCE_TOL: f64 = 1e-6;

/// `a_T b'(0, alpha)^2`; NaN for a degenerate pair.
pub fn bahadur_index(kind: StatKind, alt: &AlternativeFamily, alpha: f64) -> Result<f64> {
    Ok(report(&StatisticSpec::new(kind, alpha)?, alt)?.index)
}

/// `points` equally spaced trimming levels from 0 to 1/2 inclusive.
pub fn alpha_grid(points: usize) -> Vec<f64> {
    assert!(points >= 2, "a grid needs both endpoints");
    (0..points).map(|i| 0.5 * i as f64 / (points - 1) as f64).collect()
}

/// The default 101-point grid.
pub fn default_grid() -> Vec<f64> {
    alpha_grid(101)
}

/// Outcome at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointStatus {
    Ok,
    Degenerate,
    NotApplicable,
}

impl PointStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Degenerate => "degenerate",
            Self::NotApplicable => "not-applicable",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(Self::Ok),
            "degenerate" => Ok(Self::Degenerate),
            "not-applicable" => Ok(Self::NotApplicable),
            other => Err(Error::Parse(format!("unknown status '{other}'"))),
        }
    }
}

/// Bahadur indices of one test over a grid of trimming levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexCurve {
    pub test: String,
    pub null: String,
    pub alternative: String,
    pub grid: Vec<f64>,
    /// NaN where the point is degenerate or not applicable.
    pub index: Vec<f64>,
    pub degenerate: Vec<bool>,
    pub status: Vec<PointStatus>,
}

impl IndexCurve {
    pub fn all_not_applicable(&self) -> bool {
        self.status.iter().all(|s| *s == PointStatus::NotApplicable)
    }

    /// CSV with columns `alpha,index,degenerate,status`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha", "index", "degenerate", "status"]).map_err(csv_error)?;
        for i in 0..self.grid.len() {
            w.write_record([
                self.grid[i].to_string(),
                format_value(self.index[i]),
                self.degenerate[i].to_string(),
                self.status[i].as_str().to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

/// Shortest representation that parses back to the same `f64`; empty for NaN.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn parse_value(s: &str) -> Result<f64> {
    if s.is_empty() {
        Ok(f64::NAN)
    } else {
        s.parse().map_err(|_| Error::Parse(format!("bad number '{s}'")))
    }
}

/// Long-format CSV: `test,null,alternative,alpha,index,degenerate,status`.
pub fn write_long_csv<W: io::Write>(curves: &[IndexCurve], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["test", "null", "alternative", "alpha", "index", "degenerate", "status"])
        .map_err(csv_error)?;
    for c in curves {
        for i in 0..c.grid.len() {
            w.write_record([
                c.test.clone(),
                c.null.clone(),
                c.alternative.clone(),
                c.grid[i].to_string(),
                format_value(c.index[i]),
                c.degenerate[i].to_string(),
                c.status[i].as_str().to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parse the output of [`write_long_csv`] back into curves, in file order.
pub fn read_long_csv<R: io::Read>(input: R) -> Result<Vec<IndexCurve>> {
    let mut r = csv::Reader::from_reader(input);
    let mut curves: Vec<IndexCurve> = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_error)?;
        if row.len() != 7 {
            return Err(Error::Parse(format!("expected 7 columns, found {}", row.len())));
        }
        let (test, null, alt) = (&row[0], &row[1], &row[2]);
        let same = curves
            .last()
            .is_some_and(|c| c.test == test && c.null == null && c.alternative == alt);
        if !same {
            curves.push(IndexCurve {
                test: test.to_string(),
                null: null.to_string(),
                alternative: alt.to_string(),
                grid: vec![],
                index: vec![],
                degenerate: vec![],
                status: vec![],
            });
        }
        let c = curves.last_mut().expect("pushed above");
        c.grid.push(parse_value(&row[3])?);
        c.index.push(parse_value(&row[4])?);
        c.degenerate
            .push(row[5].parse().map_err(|_| Error::Parse(format!("bad flag '{}'", &row[5])))?);
        c.status.push(PointStatus::parse(&row[6])?);
    }
    Ok(curves)
}

/// Indices of `kind` over `grid`. Not-applicable points are recorded, other
/// errors propagate.
pub fn index_curve(kind: StatKind, alt: &AlternativeFamily, grid: &[f64]) -> Result<IndexCurve> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("alpha grid must be strictly increasing".into()));
    }
    let mut curve = IndexCurve {
        test: kind.id(),
        null: alt.base.name().to_string(),
        alternative: alt.name(),
        grid: grid.to_vec(),
        index: Vec::with_capacity(grid.len()),
        degenerate: Vec::with_capacity(grid.len()),
        status: Vec::with_capacity(grid.len()),
    };
    // Moment statistics do not depend on alpha.
    let constant = if kind.family() == Family::Moment {
        Some(report(&StatisticSpec::new(kind, 0.0)?, alt))
    } else {
        None
    };
    let reports: Vec<_> = grid
        .par_iter()
        .map(|&alpha| match &constant {
            Some(r) => Ok(r.clone()),
            None => StatisticSpec::new(kind, alpha).map(|spec| report(&spec, alt)),
        })
        .collect::<Result<_>>()?;
    for r in reports {
        match r {
            Ok(r) => {
                curve.index.push(r.index);
                curve.degenerate.push(r.degenerate);
                curve.status.push(if r.degenerate {
                    PointStatus::Degenerate
                } else {
                    PointStatus::Ok
                });
            }
            Err(e) if e.is_not_applicable() => {
                curve.index.push(f64::NAN);
                curve.degenerate.push(false);
                curve.status.push(PointStatus::NotApplicable);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(curve)
}

/// Number of scan cells for [`zero_efficiency_alpha`].
const ROOT_SCAN: usize = 200;

/// An interior trimming level where `b'(0, alpha)` of an integral statistic
/// changes sign, refined by bisection; `None` when the slope keeps its sign
/// on `(0, 1/2)`.
pub fn zero_efficiency_alpha(kind: StatKind, alt: &AlternativeFamily) -> Result<Option<f64>> {
    if kind.family() != Family::Integral {
        return Err(Error::Domain(format!("{kind} is not an integral statistic")));
    }
    let slope = |alpha: f64| asymptotics::slope_deriv(kind, alt, alpha);
    let usable = |alpha: f64| -> Result<bool> {
        match asymptotics::asymptotic_variance(kind, alt.base, alpha) {
            Ok(v) => Ok(v >= DEGENERATE_VARIANCE),
            Err(e) if e.is_not_applicable() => Ok(false),
            Err(e) => Err(e),
        }
    };
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..ROOT_SCAN {
        let alpha = 0.5 * i as f64 / ROOT_SCAN as f64;
        if !usable(alpha)? {
            prev = None;
            continue;
        }
        let b = slope(alpha)?;
        if b == 0.0 && alpha > 0.0 {
            return Ok(Some(alpha));
        }
        if let Some((a0, b0)) = prev {
            if b0 * b < 0.0 {
                return bisect(slope, a0, b0, alpha).map(Some);
            }
        }
        prev = Some((alpha, b));
    }
    Ok(None)
}

fn bisect(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut f_lo: f64, mut hi: f64) -> Result<f64> {
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Where the KS family attains both suprema at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    /// Largest trimming level below which both argmaxes are 0.
    pub alpha: f64,
    /// Whether the condition held on the whole grid.
    pub whole_range: bool,
}

fn argmax_at_origin(alt: &AlternativeFamily, alpha: f64) -> Result<Option<bool>> {
    let model = match FamilyModel::new(StatKind::Ks, alt.base, alpha) {
        Ok(m) => m,
        Err(e) if e.is_not_applicable() => return Ok(None),
        Err(e) => return Err(e),
    };
    let mu = mu_theta_prime(alt, alpha)?;
    Ok(Some(
        model.sup_variance().argmax == 0.0 && model.sup_slope(alt, mu).argmax == 0.0,
    ))
}

/// Scan `grid` for the first trimming level where either KS supremum moves
/// away from `t = 0`, then bisect between it and the last level where both
/// sat at the origin. Inapplicable levels are skipped.
pub fn ks_s_equivalence_crossover(alt: &AlternativeFamily, grid: &[f64]) -> Result<Crossover> {
    let mut last_good: Option<f64> = None;
    for &alpha in grid {
        match argmax_at_origin(alt, alpha)? {
            None => continue,
            Some(true) => last_good = Some(alpha),
            Some(false) => {
                let Some(mut lo) = last_good else {
                    return Ok(Crossover {
                        alpha,
                        whole_range: false,
                    });
                };
                let mut hi = alpha;
                while hi - lo > 1e-6 {
                    let mid = 0.5 * (lo + hi);
                    if argmax_at_origin(alt, mid)? == Some(true) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(Crossover {
                    alpha: lo,
                    whole_range: false,
                });
            }
        }
    }
    Ok(Crossover {
        alpha: last_good.unwrap_or(0.0),
        whole_range: true,
    })
}

/// Tests grouped by equal indices at one trimming level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub alpha: f64,
    /// Classes of test ids with their common index, in increasing index order.
    pub classes: Vec<(f64, Vec<String>)>,
    /// Tests without a defined index, with the reason.
    pub excluded: Vec<(String, String)>,
}

impl EquivalenceReport {
    /// The class containing `test`, if it has an index.
    pub fn class_of(&self, test: &str) -> Option<&Vec<String>> {
        self.classes.iter().map(|(_, c)| c).find(|c| c.iter().any(|t| t == test))
    }
}

/// Group the battery at `alpha` by agreement of indices within
/// [`EQUIVALENCE_TOL`] (single linkage on sorted values).
pub fn equivalence_report(alt: &AlternativeFamily, alpha: f64) -> Result<EquivalenceReport> {
    let mut scored: Vec<(f64, String)> = Vec::new();
    let mut excluded = Vec::new();
    for kind in StatKind::battery() {
        match report(&StatisticSpec::new(kind, alpha)?, alt) {
            Ok(AsymptoticReport { degenerate: true, .. }) => excluded.push((kind.id(), "degenerate".into())),
            Ok(r) => scored.push((r.index, kind.id())),
            Err(e) if e.is_not_applicable() => excluded.push((kind.id(), "not-applicable".into())),
            Err(e) => return Err(e),
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut classes: Vec<(f64, Vec<String>)> = Vec::new();
    let mut last = f64::NAN;
    for (index, id) in scored {
        match classes.last_mut() {
            Some((_, members)) if (index - last).abs() <= EQUIVALENCE_TOL => members.push(id),
            _ => classes.push((index, vec![id])),
        }
        last = index;
    }
    Ok(EquivalenceReport {
        alpha,
        classes,
        excluded,
    })
}
