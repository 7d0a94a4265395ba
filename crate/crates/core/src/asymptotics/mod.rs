//! Limiting null variances and local slopes.
//!
//! For a U-type statistic centered by the trimmed mean, `sqrt(n) U_n` is
//! asymptotically normal with variance `Var(m phi(X) + A psi(X))`, where
//! `A = int m phi f'` and `psi` is the influence curve of the trimmed mean;
//! under a close alternative the limit in probability has derivative
//! `b'(0, alpha) = int m phi (h + mu' f')`. Supremum families apply both
//! pointwise in `t`. Every projection is odd, so all integrals reduce to the
//! half line.

mod projection;
mod supremum;

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::distributions::{AlternativeFamily, SymmetricNull};
use crate::error::{Error, Result};
use crate::location::{mu_theta_prime, TrimSpec};
use crate::quadrature::{integrate, integrate_with_breaks};
use crate::statistics::{Family, StatKind, StatisticSpec};

pub use projection::{kernel, Projection};
pub use supremum::{maximize, SupValue, SEARCH_GRID};

/// Variances below this are treated as zero.
pub const DEGENERATE_VARIANCE: f64 = 1e-10;

/// Upper end of the `t` search: `F^-1(0.999)`.
pub fn search_upper(null: SymmetricNull) -> f64 {
    null.quantile_unchecked(0.999)
}

fn not_applicable_cauchy(what: &str) -> Error {
    Error::NotApplicable(format!("{what} is not applicable under the cauchy null"))
}

/// The trimmed-mean influence curve, reduced to what the limiting
/// variances need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Centering {
    /// `second = int_0^inf x^2 f`.
    Mean { second: f64 },
    /// `spread = int_0^q x^2 f + alpha q^2` with `q = F^-1(1 - alpha)`.
    Trimmed { alpha: f64, q: f64, spread: f64 },
    Median { f0: f64 },
}

impl Centering {
    pub(crate) fn new(null: SymmetricNull, alpha: f64) -> Result<Self> {
        let trim = TrimSpec::new(alpha)?;
        if trim.is_median() {
            Ok(Self::Median { f0: null.density(0.0) })
        } else if trim.is_mean() {
            if !null.has_moment(2) {
                return Err(not_applicable_cauchy("centering by the sample mean"));
            }
            Ok(Self::Mean {
                second: 0.5 * null.central_moment(2)?,
            })
        } else {
            let q = null.quantile(1.0 - alpha)?;
            let spread = integrate(|x| x * x * null.density(x), 0.0, q)? + alpha * q * q;
            Ok(Self::Trimmed { alpha, q, spread })
        }
    }

    /// The variance from `i2 = int (m phi)^2 f`, `a = int m phi f'` and the
    /// cross integral returned by [`cross`](Self::cross).
    fn variance(&self, i2: f64, a: f64, cross: f64) -> f64 {
        match *self {
            Self::Mean { second } => i2 + 2.0 * a * a * second + 4.0 * a * cross,
            Self::Trimmed { alpha, spread, .. } => {
                let d = 1.0 - 2.0 * alpha;
                i2 + 2.0 / (d * d) * a * a * spread + 4.0 / d * a * cross
            }
            Self::Median { f0 } => i2 + a * a / (4.0 * f0 * f0) + 2.0 / f0 * a * cross,
        }
    }

    /// Cross integral for an odd projection with half-line profile `g`:
    /// `int_0^inf g x f` (mean), `int_0^q g x f + q int_q^inf g f` (trimmed),
    /// `int_0^inf g f` (median).
    fn cross(&self, null: SymmetricNull, g: impl Fn(f64) -> f64, breaks: &[f64]) -> Result<f64> {
        let f = |x: f64| null.density(x);
        let inf = f64::INFINITY;
        match *self {
            Self::Mean { .. } => integrate_with_breaks(|x| g(x) * x * f(x), 0.0, inf, breaks),
            Self::Trimmed { q, .. } => Ok(integrate_with_breaks(|x| g(x) * x * f(x), 0.0, q, breaks)?
                + q * integrate_with_breaks(|x| g(x) * f(x), q, inf, breaks)?),
            Self::Median { .. } => integrate_with_breaks(|x| g(x) * f(x), 0.0, inf, breaks),
        }
    }

    /// Cross integral for the step profile `1{x >= t}`, in closed form.
    fn cross_step(&self, null: SymmetricNull, t: f64) -> f64 {
        match *self {
            Self::Mean { .. } => null.upper_partial_mean(t),
            Self::Trimmed { q, .. } => {
                let inner = if t < q { null.partial_mean(t, q) } else { 0.0 };
                inner + q * null.cdf(-q.max(t))
            }
            Self::Median { .. } => null.cdf(-t),
        }
    }
}

fn require_kind(kind: StatKind, family: Family) -> Result<()> {
    if kind.family() == family {
        Ok(())
    } else {
        Err(Error::Domain(format!("{kind} is not a {family:?} statistic")))
    }
}

/// `(int (m phi)^2 f, int m phi f')` for an integral statistic.
fn integral_parts(p: &Projection) -> Result<(f64, f64)> {
    let null = p.null();
    let i2 = 2.0 * integrate(|x| p.profile(x).powi(2) * null.density(x), 0.0, f64::INFINITY)?;
    let a = 2.0 * integrate(|x| p.profile(x) * null.density_derivative(x), 0.0, f64::INFINITY)?;
    Ok((i2, a))
}

/// Limiting variance of `sqrt(n) T_n` under the null (for the
/// integral statistics, the moment statistics' own delta-method variances
/// otherwise). Supremum families use [`sup_variance`].
pub fn asymptotic_variance(kind: StatKind, null: SymmetricNull, alpha: f64) -> Result<f64> {
    kind.validate()?;
    match kind.family() {
        Family::Moment => Ok(moment_parts(kind, null)?.variance),
        Family::Supremum => Err(Error::Domain(format!(
            "{kind} is a supremum family; use the variance function"
        ))),
        Family::Integral => {
            let p = Projection::new(kind, null)?;
            let centering = Centering::new(null, alpha)?;
            let (i2, a) = integral_parts(&p)?;
            let cross = centering.cross(null, |x| p.profile(x), &[])?;
            Ok(centering.variance(i2, a, cross))
        }
    }
}

/// A supremum family prepared for evaluation at many thresholds.
#[derive(Debug, Clone, Copy)]
pub struct FamilyModel {
    projection: Projection,
    centering: Centering,
}

impl FamilyModel {
    pub fn new(kind: StatKind, null: SymmetricNull, alpha: f64) -> Result<Self> {
        kind.validate()?;
        require_kind(kind, Family::Supremum)?;
        Ok(Self {
            projection: Projection::new(kind, null)?,
            centering: Centering::new(null, alpha)?,
        })
    }

    /// Variance function `sigma^2(alpha; t)`.
    pub fn variance(&self, t: f64) -> f64 {
        let null = self.projection.null();
        let c = self.projection.coefficient(t);
        let i2 = 2.0 * c * c * null.cdf(-t);
        let a = -2.0 * c * null.density(t);
        let cross = c * self.centering.cross_step(null, t);
        self.centering.variance(i2, a, cross)
    }

    /// `b'(0, alpha; t) = int m phi(x; t) (h + mu' f')` given `mu'`.
    pub fn slope(&self, alt: &AlternativeFamily, mu_prime: f64, t: f64) -> f64 {
        let null = self.projection.null();
        let c = self.projection.coefficient(t);
        -c * (alt.score_integral(t) + alt.score_integral(-t) + 2.0 * mu_prime * null.density(t))
    }

    pub fn sup_variance(&self) -> SupValue {
        maximize(|t| self.variance(t), search_upper(self.projection.null()))
    }

    pub fn sup_slope(&self, alt: &AlternativeFamily, mu_prime: f64) -> SupValue {
        maximize(|t| self.slope(alt, mu_prime, t).abs(), search_upper(self.projection.null()))
    }
}

/// Variance function at one threshold.
pub fn variance_function(kind: StatKind, null: SymmetricNull, alpha: f64, t: f64) -> Result<f64> {
    Ok(FamilyModel::new(kind, null, alpha)?.variance(t))
}

/// `sup_t sigma^2(alpha; t)` and its argmax.
pub fn sup_variance(kind: StatKind, null: SymmetricNull, alpha: f64) -> Result<SupValue> {
    Ok(FamilyModel::new(kind, null, alpha)?.sup_variance())
}

/// `b'(0, alpha)` of an integral statistic.
pub fn slope_deriv(kind: StatKind, alt: &AlternativeFamily, alpha: f64) -> Result<f64> {
    kind.validate()?;
    require_kind(kind, Family::Integral)?;
    let p = Projection::new(kind, alt.base)?;
    let mu = mu_theta_prime(alt, alpha)?;
    let f = alt.base;
    let scored = integrate_with_breaks(
        |x| p.profile(x) * (alt.score(x) - alt.score(-x)),
        0.0,
        f64::INFINITY,
        &[1.0],
    )?;
    let a = 2.0 * integrate(|x| p.profile(x) * f.density_derivative(x), 0.0, f64::INFINITY)?;
    Ok(scored + mu * a)
}

/// Slope function `b'(0, alpha; t)` of a supremum family.
pub fn slope_function(kind: StatKind, alt: &AlternativeFamily, alpha: f64, t: f64) -> Result<f64> {
    let model = FamilyModel::new(kind, alt.base, alpha)?;
    Ok(model.slope(alt, mu_theta_prime(alt, alpha)?, t))
}

/// `sup_t |b'(0, alpha; t)|` and its argmax.
pub fn sup_slope(kind: StatKind, alt: &AlternativeFamily, alpha: f64) -> Result<SupValue> {
    let model = FamilyModel::new(kind, alt.base, alpha)?;
    Ok(model.sup_slope(alt, mu_theta_prime(alt, alpha)?))
}

/// Null quantities shared by the moment statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullMoments {
    /// `sigma^2 = int x^2 f`.
    pub sigma2: f64,
    /// `tau = 2 int_0^inf x f = E|X|`.
    pub tau: f64,
    pub f0: f64,
    pub m4: f64,
    pub m6: f64,
}

impl NullMoments {
    pub fn new(null: SymmetricNull) -> Result<Self> {
        if !null.has_moment(2) {
            return Err(not_applicable_cauchy("a moment statistic"));
        }
        Ok(Self {
            sigma2: null.central_moment(2)?,
            tau: 2.0 * null.upper_partial_mean(0.0),
            f0: null.density(0.0),
            m4: null.central_moment(4)?,
            m6: null.central_moment(6)?,
        })
    }

    /// `Var(X - sgn(X) / (2 f(0)))`, the null variance of
    /// `sqrt(n) (mean - median)`.
    pub fn mean_median_variance(&self) -> f64 {
        self.sigma2 + 1.0 / (4.0 * self.f0 * self.f0) - self.tau / self.f0
    }

    /// Null variance of `sqrt(n) sqrt(b1)`.
    pub fn skewness_variance(&self) -> f64 {
        let s2 = self.sigma2;
        (self.m6 - 6.0 * s2 * self.m4 + 9.0 * s2 * s2 * s2) / (s2 * s2 * s2)
    }
}

/// Null variance and local slope of a moment statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentParts {
    pub variance: f64,
    /// Filled by [`moment_slope`]; zero from [`moment_parts`].
    pub slope_deriv: f64,
}

/// Scale by which the statistic divides `mean - median`, per kind.
fn moment_scale(kind: StatKind, m: &NullMoments) -> f64 {
    match kind {
        StatKind::Cm => m.sigma2.sqrt(),
        StatKind::Gamma => 0.5,
        StatKind::Mgg => (FRAC_PI_2).sqrt() * m.tau,
        _ => 1.0,
    }
}

pub fn moment_parts(kind: StatKind, null: SymmetricNull) -> Result<MomentParts> {
    require_kind(kind, Family::Moment)?;
    let m = NullMoments::new(null)?;
    let variance = match kind {
        StatKind::SqrtB1 => m.skewness_variance(),
        _ => m.mean_median_variance() / moment_scale(kind, &m).powi(2),
    };
    Ok(MomentParts {
        variance,
        slope_deriv: 0.0,
    })
}

/// `d/dtheta (mean - median)` at 0: `int x h + H(0) / f(0)`.
pub fn mean_median_slope(alt: &AlternativeFamily) -> Result<f64> {
    let null = alt.base;
    if !null.has_moment(2) {
        return Err(not_applicable_cauchy("mean minus median"));
    }
    let mean = integrate_with_breaks(|x| x * alt.score(x), f64::NEG_INFINITY, f64::INFINITY, &[0.0, 1.0])?;
    Ok(mean + alt.score_integral(0.0) / null.density(0.0))
}

/// `int x^3 h - 3 sigma^2 int x h`, the derivative of the third central moment.
pub fn skewness_numerator(alt: &AlternativeFamily) -> Result<f64> {
    let m = NullMoments::new(alt.base)?;
    let breaks = [0.0, 1.0];
    let x3 = integrate_with_breaks(|x| x.powi(3) * alt.score(x), f64::NEG_INFINITY, f64::INFINITY, &breaks)?;
    let x1 = integrate_with_breaks(|x| x * alt.score(x), f64::NEG_INFINITY, f64::INFINITY, &breaks)?;
    Ok(x3 - 3.0 * m.sigma2 * x1)
}

/// Variance and slope derivative of a moment statistic.
pub fn moment_slope(kind: StatKind, alt: &AlternativeFamily) -> Result<MomentParts> {
    let parts = moment_parts(kind, alt.base)?;
    let m = NullMoments::new(alt.base)?;
    let slope_deriv = match kind {
        StatKind::SqrtB1 => skewness_numerator(alt)? / m.sigma2.powf(1.5),
        _ => mean_median_slope(alt)? / moment_scale(kind, &m),
    };
    Ok(MomentParts { slope_deriv, ..parts })
}

/// Local index of CM, GAMMA and MGG,
/// `(int x h + H(0)/f(0))^2 / (sigma^2 + 1/(4 f(0)^2) - tau / f(0))`.
pub fn cm_family_slope(alt: &AlternativeFamily) -> Result<f64> {
    let m = NullMoments::new(alt.base)?;
    Ok(mean_median_slope(alt)?.powi(2) / m.mean_median_variance())
}

/// Local index of `sqrt(b1)`,
/// `(int x^3 h - 3 sigma^2 int x h)^2 / (m6 - 6 sigma^2 m4 + 9 sigma^6)`.
pub fn sqrtb1_slope(alt: &AlternativeFamily) -> Result<f64> {
    let m = NullMoments::new(alt.base)?;
    let s2 = m.sigma2;
    Ok(skewness_numerator(alt)?.powi(2) / (m.m6 - 6.0 * s2 * m.m4 + 9.0 * s2 * s2 * s2))
}

/// Variance, slope and local approximate Bahadur index of one test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub test: String,
    pub alpha: Option<f64>,
    /// `sigma^2(alpha)`, or `sup_t sigma^2(alpha; t)`.
    pub sigma2: f64,
    pub sigma2_argmax: Option<f64>,
    /// `b'(0, alpha)`, or `sup_t |b'(0, alpha; t)|`.
    pub slope_deriv: f64,
    pub slope_argmax: Option<f64>,
    /// `1 / sigma2`.
    pub a_t: f64,
    /// `a_T b'^2`; NaN when degenerate.
    pub index: f64,
    pub degenerate: bool,
}

impl AsymptoticReport {
    fn assemble(spec: &StatisticSpec, sigma2: SupValue, slope: SupValue, family: bool) -> Self {
        let degenerate = sigma2.value < DEGENERATE_VARIANCE;
        let index = if degenerate {
            f64::NAN
        } else {
            slope.value * slope.value / sigma2.value
        };
        Self {
            test: spec.kind.id(),
            alpha: spec.kind.uses_trim().then(|| spec.trim.alpha()),
            sigma2: sigma2.value,
            sigma2_argmax: family.then_some(sigma2.argmax),
            slope_deriv: slope.value,
            slope_argmax: family.then_some(slope.argmax),
            a_t: 1.0 / sigma2.value,
            index,
            degenerate,
        }
    }
}

/// Full asymptotic report of `spec` against the close alternative `alt`
/// (whose base is the null).
pub fn report(spec: &StatisticSpec, alt: &AlternativeFamily) -> Result<AsymptoticReport> {
    let kind = spec.kind;
    kind.validate()?;
    let alpha = spec.trim.alpha();
    let plain = |value| SupValue { value, argmax: 0.0 };
    Ok(match kind.family() {
        Family::Integral => AsymptoticReport::assemble(
            spec,
            plain(asymptotic_variance(kind, alt.base, alpha)?),
            plain(slope_deriv(kind, alt, alpha)?),
            false,
        ),
        Family::Supremum => {
            let model = FamilyModel::new(kind, alt.base, alpha)?;
            let mu = mu_theta_prime(alt, alpha)?;
            AsymptoticReport::assemble(spec, model.sup_variance(), model.sup_slope(alt, mu), true)
        }
        Family::Moment => {
            let parts = moment_slope(kind, alt)?;
            AsymptoticReport::assemble(spec, plain(parts.variance), plain(parts.slope_deriv), false)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::AltKind;
    use std::f64::consts::PI;

    const NORMAL: SymmetricNull = SymmetricNull::Normal;

    fn phi0() -> f64 {
        NORMAL.density(0.0)
    }

    #[test]
    fn sign_statistic_closed_forms() {
        let v0 = asymptotic_variance(StatKind::S, NORMAL, 0.0).unwrap();
        assert!((v0 - (0.25 - 1.0 / (2.0 * PI))).abs() < 1e-9);
        for null in SymmetricNull::ALL {
            assert!(asymptotic_variance(StatKind::S, null, 0.5).unwrap().abs() < 1e-12);
        }
        let contam = AlternativeFamily::contamination(NORMAL);
        let b0 = slope_deriv(StatKind::S, &contam, 0.0).unwrap();
        assert!((b0 - (NORMAL.cdf(1.0) - 0.5 - phi0())).abs() < 1e-9);
        assert!((b0 + 0.05760).abs() < 1e-5);
        assert!(slope_deriv(StatKind::S, &contam, 0.5).unwrap().abs() < 1e-10);
    }

    #[test]
    fn wilcoxon_mean_centering() {
        // int (m phi)^2 f = 1/3 and A = -1/sqrt(pi) give 1/3 - 1/pi.
        let v = asymptotic_variance(StatKind::W, NORMAL, 0.0).unwrap();
        assert!((v - (1.0 / 3.0 - 1.0 / PI)).abs() < 1e-9);
    }

    #[test]
    fn trimmed_branch_approaches_the_endpoints() {
        for kind in [StatKind::S, StatKind::W, StatKind::NaI(4), StatKind::MoI(2)] {
            let at0 = asymptotic_variance(kind, SymmetricNull::Logistic, 0.0).unwrap();
            let near0 = asymptotic_variance(kind, SymmetricNull::Logistic, 1e-7).unwrap();
            assert!((at0 - near0).abs() < 1e-5, "{kind}");
            let at_half = asymptotic_variance(kind, SymmetricNull::Logistic, 0.5).unwrap();
            let near_half = asymptotic_variance(kind, SymmetricNull::Logistic, 0.5 - 1e-7).unwrap();
            assert!((at_half - near_half).abs() < 1e-3, "{kind}");
        }
    }

    #[test]
    fn ks_at_origin_is_twice_sign() {
        for null in SymmetricNull::ALL {
            for alpha in [0.05, 0.2, 0.5] {
                let ks = variance_function(StatKind::Ks, null, alpha, 0.0).unwrap();
                let s = asymptotic_variance(StatKind::S, null, alpha).unwrap();
                assert!((ks - 4.0 * s).abs() < 1e-9, "{null} {alpha}");
            }
        }
        assert!(variance_function(StatKind::Ks, NORMAL, 0.2, 40.0).unwrap().abs() < 1e-12);
    }

    /// The closed forms for the step projections against direct quadrature
    /// of the general formulas.
    #[test]
    fn family_closed_forms_match_quadrature() {
        for null in SymmetricNull::ALL {
            let alt = AlternativeFamily::fernandez_steel(null);
            for kind in [StatKind::Ks, StatKind::BhK, StatKind::NaK(4), StatKind::MoK(2)] {
                for alpha in [0.0, 0.15, 0.5] {
                    if null == SymmetricNull::Cauchy && alpha == 0.0 {
                        continue;
                    }
                    let model = FamilyModel::new(kind, null, alpha).unwrap();
                    let p = Projection::new(kind, null).unwrap();
                    let centering = Centering::new(null, alpha).unwrap();
                    let mu = mu_theta_prime(&alt, alpha).unwrap();
                    for t in [0.3, 1.1, 2.7] {
                        let step = |x: f64| p.scaled_at(x, t);
                        let i2 = 2.0 * integrate(|x| step(x).powi(2) * null.density(x), t, f64::INFINITY).unwrap();
                        let a = 2.0 * integrate(|x| step(x) * null.density_derivative(x), t, f64::INFINITY).unwrap();
                        let cross = centering
                            .cross(null, |x| if x >= t { p.coefficient(t) } else { 0.0 }, &[t])
                            .unwrap();
                        let v = centering.variance(i2, a, cross);
                        assert!((v - model.variance(t)).abs() < 1e-7, "{kind} {null} {alpha} {t}");
                        let scored = integrate_with_breaks(
                            |x| step(x) * (alt.score(x) - alt.score(-x)),
                            t,
                            f64::INFINITY,
                            &[1.0],
                        )
                        .unwrap();
                        assert!((scored + mu * a - model.slope(&alt, mu, t)).abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn moment_family_constants() {
        let m = NullMoments::new(NORMAL).unwrap();
        assert!((m.mean_median_variance() - (FRAC_PI_2 - 1.0)).abs() < 1e-12);
        assert_eq!(m.m6 - 6.0 * m.sigma2 * m.m4 + 9.0 * m.sigma2.powi(3), 6.0);
        let logistic = NullMoments::new(SymmetricNull::Logistic).unwrap();
        assert!((logistic.tau - 2.0 * 2f64.ln()).abs() < 1e-14);
        for kind in [StatKind::Cm, StatKind::Gamma, StatKind::Mgg, StatKind::SqrtB1] {
            assert!(moment_parts(kind, SymmetricNull::Cauchy).unwrap_err().is_not_applicable());
        }
    }

    #[test]
    fn sign_at_mean_matches_cm_family() {
        for null in [NORMAL, SymmetricNull::Logistic] {
            for kind in AltKind::ALL {
                let alt = AlternativeFamily::new(kind, null);
                let s = report(&StatisticSpec::new(StatKind::S, 0.0).unwrap(), &alt).unwrap();
                for k in [StatKind::Cm, StatKind::Gamma, StatKind::Mgg] {
                    let r = report(&StatisticSpec::new(k, 0.0).unwrap(), &alt).unwrap();
                    assert!((r.index - s.index).abs() < 1e-9, "{k} {null} {kind}");
                }
                assert!((cm_family_slope(&alt).unwrap() - s.index).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cauchy_wall() {
        let alt = AlternativeFamily::contamination(SymmetricNull::Cauchy);
        for kind in StatKind::battery() {
            let spec = StatisticSpec::new(kind, 0.0).unwrap();
            assert!(report(&spec, &alt).unwrap_err().is_not_applicable(), "{kind}");
        }
        assert!(report(&StatisticSpec::new(StatKind::W, 0.1).unwrap(), &alt).is_ok());
    }

    #[test]
    fn degenerate_sign_at_median() {
        let alt = AlternativeFamily::fernandez_steel(SymmetricNull::Logistic);
        let r = report(&StatisticSpec::new(StatKind::S, 0.5).unwrap(), &alt).unwrap();
        assert!(r.degenerate);
        assert!(r.index.is_nan());
    }
}
