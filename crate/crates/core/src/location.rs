//! The alpha-trimmed mean, its influence curve, and the derivative of the
//! population trimmed mean along a close alternative.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distributions::{AlternativeFamily, SymmetricNull};
use crate::error::{Error, Result};
use crate::quadrature::integrate_with_breaks;

/// Trimming coefficient `alpha` in `[0, 1/2]`: 0 is the mean, 1/2 the median.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TrimSpec(f64);

impl TrimSpec {
    pub const MEAN: TrimSpec = TrimSpec(0.0);
    pub const MEDIAN: TrimSpec = TrimSpec(0.5);

    pub fn new(alpha: f64) -> Result<Self> {
        if (0.0..=0.5).contains(&alpha) {
            Ok(Self(alpha))
        } else {
            Err(Error::Domain(format!("trimming coefficient {alpha} outside [0, 1/2]")))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.0
    }

    pub fn is_mean(&self) -> bool {
        self.0 == 0.0
    }

    pub fn is_median(&self) -> bool {
        self.0 == 0.5
    }
}

impl TryFrom<f64> for TrimSpec {
    type Error = Error;

    fn try_from(alpha: f64) -> Result<Self> {
        Self::new(alpha)
    }
}

impl From<TrimSpec> for f64 {
    fn from(t: TrimSpec) -> f64 {
        t.0
    }
}

impl fmt::Display for TrimSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Weights of the order statistics `X_(1) <= ... <= X_(n)` in the trimmed
/// mean. They are nonnegative and sum to one.
///
/// `X_(i)` receives the share of `(alpha, 1 - alpha)` covered by
/// `((i-1)/n, i/n]`, the interval on which the left-continuous empirical
/// quantile equals `X_(i)`. At `alpha = 1/2` this is the median, with the two
/// central order statistics averaged for even `n`.
pub fn trimmed_weights(n: usize, trim: TrimSpec) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for_each_weight(n, trim, |i, wi| w[i] = wi);
    w
}

#[inline]
fn for_each_weight(n: usize, trim: TrimSpec, mut visit: impl FnMut(usize, f64)) {
    if n == 0 {
        return;
    }
    let alpha = trim.alpha();
    if trim.is_median() {
        if n % 2 == 1 {
            visit(n / 2, 1.0);
        } else {
            visit(n / 2 - 1, 0.5);
            visit(n / 2, 0.5);
        }
        return;
    }
    let nf = n as f64;
    let upper = 1.0 - alpha;
    let span = upper - alpha;
    let first = ((alpha * nf).floor() as usize).min(n - 1);
    let last = ((upper * nf).ceil() as usize).clamp(first + 1, n);
    for i in first..last {
        let lo = (i as f64 / nf).max(alpha);
        let hi = ((i + 1) as f64 / nf).min(upper);
        if hi > lo {
            visit(i, (hi - lo) / span);
        }
    }
}

/// Trimmed mean of data already sorted ascending.
pub fn trimmed_mean_sorted(sorted: &[f64], trim: TrimSpec) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::Domain("trimmed mean of an empty sample".into()));
    }
    let mut acc = 0.0;
    for_each_weight(sorted.len(), trim, |i, w| acc += w * sorted[i]);
    Ok(acc)
}

/// The alpha-trimmed sample mean.
pub fn trimmed_mean(sample: &[f64], alpha: f64) -> Result<f64> {
    let trim = TrimSpec::new(alpha)?;
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    trimmed_mean_sorted(&sorted, trim)
}

/// Influence curve of the population trimmed mean under a null, evaluated
/// by quadrature over the quantile level.
pub fn influence_curve(null: SymmetricNull, alpha: f64, x: f64) -> Result<f64> {
    let trim = TrimSpec::new(alpha)?;
    if trim.is_mean() {
        if !null.has_moment(1) {
            return Err(Error::NotApplicable(format!(
                "the mean has no influence curve under the {null} null"
            )));
        }
        return Ok(x);
    }
    if trim.is_median() {
        let sgn = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        };
        return Ok(sgn / (2.0 * null.density(0.0)));
    }
    let jump = null.cdf(x);
    let integrand = |t: f64| {
        let q = null.quantile_unchecked(t);
        let ind = if x < q { 1.0 } else { 0.0 };
        (t - ind) / null.density(q)
    };
    let v = integrate_with_breaks(integrand, alpha, 1.0 - alpha, &[jump, 0.5])?;
    Ok(v / (1.0 - 2.0 * alpha))
}

/// Derivative in `theta`, at zero, of the population trimmed mean under the
/// alternative family.
pub fn mu_theta_prime(alt: &AlternativeFamily, alpha: f64) -> Result<f64> {
    let trim = TrimSpec::new(alpha)?;
    let f = alt.base;
    let breaks = [0.0, 1.0];
    if trim.is_median() {
        return Ok(-alt.score_integral(0.0) / f.density(0.0));
    }
    if trim.is_mean() {
        if !f.has_moment(1) {
            return Err(Error::NotApplicable(format!(
                "the mean is undefined under the {} null",
                f.name()
            )));
        }
        return integrate_with_breaks(|x| x * alt.score(x), f64::NEG_INFINITY, f64::INFINITY, &breaks);
    }
    let q = f.quantile_unchecked(1.0 - alpha);
    let boundary = -q * (alt.score_integral(q) + alt.score_integral(-q));
    let inner = integrate_with_breaks(|x| x * alt.score(x), -q, q, &breaks)?;
    Ok((boundary + inner) / (1.0 - 2.0 * alpha))
}
