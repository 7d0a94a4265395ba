//! Finite-sample test statistics for symmetry around an estimated center.
//!
//! Every U-type statistic is computed from integer subset counts, divided
//! once by the number of terms. The fast path ([`evaluate`]) obtains the
//! counts from binomial identities on the sorted centered sample; the
//! enumeration path ([`brute_force_u`]) visits every subset. Both share the
//! centering and the candidate thresholds, so on identical counts they
//! produce identical floating-point values.

mod brute;
mod counting;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::location::{trimmed_mean_sorted, TrimSpec};

pub use brute::{brute_force_u, BRUTE_FORCE_LIMIT};
pub use counting::{counting_tables, CountingTables};

/// Largest subset size supported by the counting path.
pub const MAX_SUBSET: u32 = 24;

/// The statistics of the battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StatKind {
    /// Sign statistic.
    S,
    /// Wilcoxon signed-rank type statistic.
    W,
    /// Kolmogorov-Smirnov type supremum.
    Ks,
    /// Baringhaus-Henze, integral form.
    BhI,
    /// Baringhaus-Henze, supremum form.
    BhK,
    /// Ahsanullah characterization, integral form, subset size `k >= 2`.
    NaI(u32),
    /// Ahsanullah characterization, supremum form.
    NaK(u32),
    /// Milošević-Obradović characterization, integral form, `k >= 1`.
    MoI(u32),
    /// Milošević-Obradović characterization, supremum form.
    MoK(u32),
    /// Mean minus median over the standard deviation.
    Cm,
    /// Twice the mean minus median.
    Gamma,
    /// Mean minus median over the scaled mean absolute deviation.
    Mgg,
    /// Sample skewness.
    SqrtB1,
}

/// How the statistic aggregates its kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// A U-statistic with estimated center; asymptotically normal.
    Integral,
    /// Supremum over `t` of a family of U-statistics.
    Supremum,
    /// Moment-based statistics with their own centering.
    Moment,
}

impl StatKind {
    /// The battery as compared in the efficiency study, with every member of
    /// each equivalence class.
    pub fn battery() -> Vec<StatKind> {
        use StatKind::*;
        vec![
            S,
            W,
            Ks,
            BhI,
            BhK,
            NaI(2),
            NaI(3),
            NaI(4),
            NaK(2),
            NaK(3),
            NaK(4),
            MoI(1),
            MoI(2),
            MoK(1),
            MoK(2),
            Cm,
            Gamma,
            Mgg,
            SqrtB1,
        ]
    }

    pub fn family(&self) -> Family {
        use StatKind::*;
        match self {
            S | W | BhI | NaI(_) | MoI(_) => Family::Integral,
            Ks | BhK | NaK(_) | MoK(_) => Family::Supremum,
            Cm | Gamma | Mgg | SqrtB1 => Family::Moment,
        }
    }

    /// Kernel order `m`: the number of observations one kernel term reads.
    pub fn kernel_order(&self) -> usize {
        use StatKind::*;
        match *self {
            S | Ks => 1,
            W | BhK => 2,
            BhI => 3,
            NaI(k) => k as usize + 1,
            NaK(k) => k as usize,
            MoI(k) => 2 * k as usize + 1,
            MoK(k) => 2 * k as usize,
            Cm | Gamma | Mgg | SqrtB1 => 2,
        }
    }

    /// Whether the statistic is recentred by the trimmed mean (as opposed to
    /// its own mean/median construction).
    pub fn uses_trim(&self) -> bool {
        self.family() != Family::Moment
    }

    pub fn validate(&self) -> Result<()> {
        use StatKind::*;
        let bad = match *self {
            NaI(k) | NaK(k) => !(2..=MAX_SUBSET).contains(&k),
            MoI(k) | MoK(k) => !(1..=MAX_SUBSET / 2).contains(&k),
            _ => false,
        };
        if bad {
            Err(Error::Domain(format!("unsupported subset parameter in {self}")))
        } else {
            Ok(())
        }
    }

    pub fn id(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use StatKind::*;
        match self {
            S => f.write_str("S"),
            W => f.write_str("W"),
            Ks => f.write_str("KS"),
            BhI => f.write_str("BH_I"),
            BhK => f.write_str("BH_K"),
            NaI(k) => write!(f, "NA_I({k})"),
            NaK(k) => write!(f, "NA_K({k})"),
            MoI(k) => write!(f, "MO_I({k})"),
            MoK(k) => write!(f, "MO_K({k})"),
            Cm => f.write_str("CM"),
            Gamma => f.write_str("GAMMA"),
            Mgg => f.write_str("MGG"),
            SqrtB1 => f.write_str("SQRT_B1"),
        }
    }
}

impl FromStr for StatKind {
    type Err = Error;

    /// Accepts `NA_I(4)`, `NA_I_4`, `na-i-4`, `MO_K1` and similar spellings.
    fn from_str(s: &str) -> Result<Self> {
        use StatKind::*;
        let norm: String = s
            .trim()
            .to_ascii_uppercase()
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | '(' | ')' | ' '))
            .collect();
        let split = norm.find(|c: char| c.is_ascii_digit()).unwrap_or(norm.len());
        let (head, digits) = norm.split_at(split);
        let k: Option<u32> = if digits.is_empty() {
            None
        } else {
            Some(
                digits
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad subset size in '{s}'")))?,
            )
        };
        let kind = match (head, k) {
            ("S", None) => S,
            ("W", None) => W,
            ("KS", None) => Ks,
            ("BHI", None) => BhI,
            ("BHK", None) => BhK,
            ("NAI", Some(k)) => NaI(k),
            ("NAK", Some(k)) => NaK(k),
            ("MOI", Some(k)) => MoI(k),
            ("MOK", Some(k)) => MoK(k),
            ("CM", None) => Cm,
            ("GAMMA", None) => Gamma,
            ("MGG", None) => Mgg,
            ("SQRTB", Some(1)) | ("B", Some(1)) => SqrtB1,
            _ => return Err(Error::Parse(format!("unknown statistic '{s}'"))),
        };
        kind.validate().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(kind)
    }
}

/// A statistic together with the trimming used to estimate the center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticSpec {
    pub kind: StatKind,
    pub trim: TrimSpec,
}

impl StatisticSpec {
    pub fn new(kind: StatKind, alpha: f64) -> Result<Self> {
        kind.validate()?;
        Ok(Self {
            kind,
            trim: TrimSpec::new(alpha)?,
        })
    }

    pub fn family(&self) -> Family {
        self.kind.family()
    }

    pub fn kernel_order(&self) -> usize {
        self.kind.kernel_order()
    }
}

impl fmt::Display for StatisticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind.uses_trim() {
            write!(f, "{}[alpha={}]", self.kind, self.trim)
        } else {
            write!(f, "{}", self.kind)
        }
    }
}

/// Value of a statistic on a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticValue {
    pub value: f64,
    /// For supremum statistics, the threshold `t` at which the supremum is
    /// attained (as a right limit when the jump lies there).
    pub sup_argument: Option<f64>,
}

impl StatisticValue {
    fn plain(value: f64) -> Self {
        Self {
            value,
            sup_argument: None,
        }
    }
}

/// Sample sorted ascending and shifted by its trimmed mean.
#[derive(Debug, Clone)]
pub struct CenteredSample {
    /// `X_(i) - mu_hat`, ascending.
    pub(crate) y: Vec<f64>,
    pub(crate) center: f64,
}

impl CenteredSample {
    /// Center a sample that is already sorted ascending.
    pub fn from_sorted(sorted: &[f64], trim: TrimSpec) -> Result<Self> {
        let center = trimmed_mean_sorted(sorted, trim)?;
        Ok(Self {
            y: sorted.iter().map(|x| x - center).collect(),
            center,
        })
    }

    pub fn new(sample: &[f64], trim: TrimSpec) -> Result<Self> {
        Self::from_sorted(&sorted_copy(sample)?, trim)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    /// Evaluate a trimmed-centered statistic by the counting path.
    pub fn evaluate(&self, kind: StatKind) -> Result<StatisticValue> {
        kind.validate()?;
        if kind.family() == Family::Moment {
            return Err(Error::Domain(format!("{kind} does not use the trimmed-mean centering")));
        }
        check_order(kind, self.len())?;
        counting::evaluate(kind, &self.y)
    }

    /// Signed member `U_n(mu_hat; t)` of a supremum family at a fixed `t > 0`;
    /// the statistic itself is the supremum of its absolute value.
    pub fn family_at(&self, kind: StatKind, t: f64) -> Result<f64> {
        kind.validate()?;
        check_order(kind, self.len())?;
        counting::family_at(kind, &self.y, t)
    }
}

pub(crate) fn sorted_copy(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("sample contains a non-finite value".into()));
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

fn check_order(kind: StatKind, n: usize) -> Result<()> {
    let needed = kind.kernel_order();
    if n < needed {
        Err(Error::InsufficientSample { needed, got: n })
    } else {
        Ok(())
    }
}

/// Evaluate a statistic on a raw sample.
pub fn evaluate(spec: &StatisticSpec, sample: &[f64]) -> Result<StatisticValue> {
    let sorted = sorted_copy(sample)?;
    evaluate_sorted(spec, &sorted)
}

/// Evaluate a statistic on a sample already sorted ascending.
pub fn evaluate_sorted(spec: &StatisticSpec, sorted: &[f64]) -> Result<StatisticValue> {
    spec.kind.validate()?;
    check_order(spec.kind, sorted.len())?;
    if spec.kind.family() == Family::Moment {
        return moment_statistic(spec.kind, sorted).map(StatisticValue::plain);
    }
    CenteredSample::from_sorted(sorted, spec.trim)?.evaluate(spec.kind)
}

/// Mean/median based statistics. Standard deviations use the `1/n` convention.
fn moment_statistic(kind: StatKind, sorted: &[f64]) -> Result<f64> {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let m2 = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return Err(Error::DegenerateSample("zero sample variance".into()));
    }
    let s = m2.sqrt();
    let median = trimmed_mean_sorted(sorted, TrimSpec::MEDIAN)?;
    Ok(match kind {
        StatKind::Cm => (mean - median) / s,
        StatKind::Gamma => 2.0 * (mean - median),
        StatKind::Mgg => {
            let mad = sorted.iter().map(|x| (x - median).abs()).sum::<f64>() / n;
            let j = (std::f64::consts::FRAC_PI_2).sqrt() * mad;
            (mean - median) / j
        }
        StatKind::SqrtB1 => {
            let m3 = sorted.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
            m3 / (s * s * s)
        }
        _ => unreachable!("moment_statistic called for {kind}"),
    })
}

/// Side of a jump at which a step function of `t` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    /// The value at `t = c`.
    At,
    /// The limit as `t` decreases to `c`.
    RightOf,
}

/// Candidate thresholds `{0} ∪ {|y_i|}`, ascending and deduplicated.
pub(crate) fn candidates(y: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = std::iter::once(0.0).chain(y.iter().map(|v| v.abs())).collect();
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

/// Maximize `|count(c, side)|` over the candidates; returns the maximal
/// absolute count and the first threshold attaining it. When `include_zero`
/// is false the value at `t = 0` itself is skipped (the `t > 0` families).
pub(crate) fn sup_count(
    cands: &[f64],
    include_zero: bool,
    mut count: impl FnMut(f64, Side) -> Result<i128>,
) -> Result<(i128, f64)> {
    let mut best = (0i128, 0.0f64);
    let mut first = true;
    for &c in cands {
        for side in [Side::At, Side::RightOf] {
            if side == Side::At && c == 0.0 && !include_zero {
                continue;
            }
            let v = count(c, side)?.abs();
            if first || v > best.0 {
                best = (v, c);
                first = false;
            }
        }
    }
    Ok(best)
}

/// Counts are converted to a value by one division, shared by both paths.
#[inline]
pub(crate) fn ratio(count: i128, denominator: i128) -> f64 {
    count as f64 / denominator as f64
}
