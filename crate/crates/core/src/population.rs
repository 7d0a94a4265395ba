//! Population limits of the statistics under `g(.; theta)`, computed by
//! quadrature directly from the alternative density, and their numerical
//! derivatives in `theta`. Independent of the projection formulas, so it
//! serves as an oracle for the local slopes.

use std::f64::consts::FRAC_PI_2;

use crate::asymptotics::{maximize, search_upper, SupValue};
use crate::distributions::{AltKind, AlternativeFamily};
use crate::error::{Error, Result};
use crate::location::TrimSpec;
use crate::quadrature::integrate_with_breaks;
use crate::statistics::{Family, StatKind};

/// Step of the finite differences in `theta`.
pub const FD_STEP: f64 = 1e-3;

fn breaks(mu: f64) -> Vec<f64> {
    vec![0.0, 1.0, mu, 2.0 * mu, mu + 1.0, mu - 1.0]
}

/// Trimmed population location `mu(theta, alpha)` of `g(.; theta)`.
pub fn location(alt: &AlternativeFamily, alpha: f64, theta: f64) -> Result<f64> {
    let trim = TrimSpec::new(alpha)?;
    alt.check_theta(theta)?;
    if trim.is_median() {
        return alt.quantile(0.5, theta);
    }
    let g = |x: f64| alt.density(x, theta).expect("theta checked");
    if trim.is_mean() {
        if !alt.base.has_moment(1) {
            return Err(Error::NotApplicable(format!(
                "the mean of {} does not exist",
                alt.base
            )));
        }
        return integrate_with_breaks(|x| x * g(x), f64::NEG_INFINITY, f64::INFINITY, &[0.0, 1.0]);
    }
    let lo = alt.quantile(alpha, theta)?;
    let hi = alt.quantile(1.0 - alpha, theta)?;
    Ok(integrate_with_breaks(|x| x * g(x), lo, hi, &[0.0, 1.0])? / (1.0 - 2.0 * alpha))
}

/// Limit of a threshold family at `t`, from `A = G(mu - t)` and `B = G(mu + t)`.
fn bracket(kind: StatKind, a: f64, b: f64) -> f64 {
    match kind {
        StatKind::Ks => a + b - 1.0,
        StatKind::BhI | StatKind::BhK => (b - a) - (b * b - a * a),
        StatKind::NaI(k) | StatKind::NaK(k) => {
            let k = k as i32;
            ((1.0 - a).powi(k) - (1.0 - b).powi(k)) - (b.powi(k) - a.powi(k))
        }
        StatKind::MoI(k) | StatKind::MoK(k) => {
            let c = (0..k).fold(1.0, |acc, i| acc * (2 * k - i) as f64 / (i + 1) as f64);
            let ki = k as i32;
            c * ((b * (1.0 - b)).powi(ki) - (a * (1.0 - a)).powi(ki))
        }
        other => unreachable!("{other} has no threshold bracket"),
    }
}

/// Population value of an integral or moment statistic under `g(.; theta)`.
pub fn limit(kind: StatKind, alt: &AlternativeFamily, alpha: f64, theta: f64) -> Result<f64> {
    kind.validate()?;
    match kind.family() {
        Family::Moment => return moment_limit(kind, alt, theta),
        Family::Supremum => {
            return Err(Error::Domain(format!("{kind} is a supremum family; use family_limit")))
        }
        Family::Integral => {}
    }
    let mu = location(alt, alpha, theta)?;
    let g = |x: f64| alt.density(x, theta).expect("theta checked");
    let cdf = |x: f64| alt.cdf(x, theta).expect("theta checked");
    let inf = f64::INFINITY;
    match kind {
        StatKind::S => Ok(0.5 - cdf(mu)),
        StatKind::W => {
            let v = integrate_with_breaks(|x| g(x) * (1.0 - cdf(2.0 * mu - x)), -inf, inf, &breaks(mu))?;
            Ok(v - 0.5)
        }
        _ => integrate_with_breaks(
            |x| {
                let s = (x - mu).abs();
                if s == 0.0 {
                    0.0
                } else {
                    g(x) * bracket(kind, cdf(mu - s), cdf(mu + s))
                }
            },
            -inf,
            inf,
            &breaks(mu),
        ),
    }
}

/// Population value of a supremum family member at threshold `t`, with the
/// location already computed.
fn family_value(kind: StatKind, alt: &AlternativeFamily, mu: f64, theta: f64, t: f64) -> Result<f64> {
    Ok(bracket(kind, alt.cdf(mu - t, theta)?, alt.cdf(mu + t, theta)?))
}

/// Population value of the family member of `kind` at threshold `t`.
pub fn family_limit(kind: StatKind, alt: &AlternativeFamily, alpha: f64, theta: f64, t: f64) -> Result<f64> {
    kind.validate()?;
    if kind.family() != Family::Supremum {
        return Err(Error::Domain(format!("{kind} is not a supremum family")));
    }
    family_value(kind, alt, location(alt, alpha, theta)?, theta, t)
}

fn moment_limit(kind: StatKind, alt: &AlternativeFamily, theta: f64) -> Result<f64> {
    if !alt.base.has_moment(2) {
        return Err(Error::NotApplicable(format!(
            "{kind} is not applicable under the {} null",
            alt.base
        )));
    }
    let g = |x: f64| alt.density(x, theta).expect("theta checked");
    let inf = f64::INFINITY;
    let mean = location(alt, 0.0, theta)?;
    let median = location(alt, 0.5, theta)?;
    let b = breaks(mean);
    let central = |p: i32| integrate_with_breaks(|x| (x - mean).powi(p) * g(x), -inf, inf, &b);
    Ok(match kind {
        StatKind::Cm => (mean - median) / central(2)?.sqrt(),
        StatKind::Gamma => 2.0 * (mean - median),
        StatKind::Mgg => {
            let mad = integrate_with_breaks(|x| (x - median).abs() * g(x), -inf, inf, &[median, 0.0, 1.0])?;
            (mean - median) / (FRAC_PI_2.sqrt() * mad)
        }
        StatKind::SqrtB1 => central(3)? / central(2)?.powf(1.5),
        other => unreachable!("{other} is not a moment statistic"),
    })
}

/// `d/dtheta` at 0 of `f(theta)`: central for the Fernandez-Steel family,
/// one-sided three-point where `theta` must stay nonnegative.
pub fn derivative(alt: &AlternativeFamily, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let h = FD_STEP;
    match alt.kind {
        AltKind::FernandezSteel => Ok((f(h)? - f(-h)?) / (2.0 * h)),
        AltKind::Contamination => Ok((-3.0 * f(0.0)? + 4.0 * f(h)? - f(2.0 * h)?) / (2.0 * h)),
    }
}

fn steps(alt: &AlternativeFamily) -> [(f64, f64); 3] {
    let h = FD_STEP;
    match alt.kind {
        AltKind::FernandezSteel => [(h, 0.5 / h), (-h, -0.5 / h), (0.0, 0.0)],
        AltKind::Contamination => [(0.0, -1.5 / h), (h, 2.0 / h), (2.0 * h, -0.5 / h)],
    }
}

/// Finite-difference `mu'(0, alpha)`.
pub fn fd_mu_prime(alt: &AlternativeFamily, alpha: f64) -> Result<f64> {
    derivative(alt, |theta| location(alt, alpha, theta))
}

/// Finite-difference `b'(0, alpha)`: the derivative of the limit for
/// integral and moment statistics, `sup_t` of the absolute derivative of the
/// family member for supremum families.
pub fn fd_slope(kind: StatKind, alt: &AlternativeFamily, alpha: f64) -> Result<SupValue> {
    if kind.family() != Family::Supremum {
        let value = derivative(alt, |theta| limit(kind, alt, alpha, theta))?;
        return Ok(SupValue { value, argmax: 0.0 });
    }
    kind.validate()?;
    let mut nodes = Vec::with_capacity(3);
    for (theta, weight) in steps(alt) {
        if weight != 0.0 {
            nodes.push((theta, weight, location(alt, alpha, theta)?));
        }
    }
    let slope_at = |t: f64| -> f64 {
        nodes
            .iter()
            .map(|&(theta, w, mu)| w * family_value(kind, alt, mu, theta, t).expect("theta checked"))
            .sum()
    };
    Ok(maximize(|t| slope_at(t).abs(), search_upper(alt.base)))
}

/// Finite-difference slope of the family member at a fixed threshold.
pub fn fd_slope_at(kind: StatKind, alt: &AlternativeFamily, alpha: f64, t: f64) -> Result<f64> {
    derivative(alt, |theta| family_limit(kind, alt, alpha, theta, t))
}
