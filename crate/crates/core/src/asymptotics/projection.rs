use crate::distributions::SymmetricNull;
use crate::error::{Error, Result};
use crate::statistics::{Family, StatKind};

/// First projection of a U-type kernel under a symmetric null centered at 0.
///
/// Every projection in the battery is odd. [`scaled`](Self::scaled) returns
/// `m phi(x)`, the quantity that enters the variance and slope integrals;
/// [`phi`](Self::phi) divides by the kernel order `m`.
///
/// | kind      | `m phi(x)`, `P = F(abs x)`, `Q = 1 - P`            |
/// |-----------|-----------------------------------------------------|
/// | S         | `sgn(x) / 2`                                        |
/// | W         | `sgn(x) (P - Q)`                                    |
/// | BH_I      | `sgn(x) (P - Q)^2 / 2`                              |
/// | NA_I(k)   | `sgn(x) 2 (P^k + Q^k - 2^(1-k))`                    |
/// | MO_I(k)   | `sgn(x) 4 C(2k-1, k) (4^-k - (PQ)^k)`               |
///
/// Supremum families read `c(t) sgn(x) 1{|x| >= t}` with `P = F(t)`:
/// KS `-1`, BH_K `P - Q`, NA_K(k) `k (P^(k-1) - Q^(k-1))`,
/// MO_K(k) `2k C(2k-1, k) (PQ)^(k-1) (P - Q)`.
///
/// The outer coordinate of the integral forms contributes nothing: under
/// symmetry `|min|` and `|max|` of `k` observations (and the two central
/// order statistics of `2k`) have the same law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    kind: StatKind,
    null: SymmetricNull,
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Projection {
    pub fn new(kind: StatKind, null: SymmetricNull) -> Result<Self> {
        kind.validate()?;
        if kind.family() == Family::Moment {
            return Err(Error::Domain(format!("{kind} is not a U-statistic and has no kernel projection")));
        }
        Ok(Self { kind, null })
    }

    pub fn kind(&self) -> StatKind {
        self.kind
    }

    pub fn null(&self) -> SymmetricNull {
        self.null
    }

    pub fn order(&self) -> usize {
        self.kind.kernel_order()
    }

    /// Whether this is the projection of a supremum family, indexed by `t`.
    pub fn is_family(&self) -> bool {
        self.kind.family() == Family::Supremum
    }

    /// `m phi(x)` for an integral statistic.
    pub fn scaled(&self, x: f64) -> f64 {
        debug_assert!(!self.is_family());
        sign(x) * self.profile(x.abs())
    }

    /// `m phi(x; t)` for a member of a supremum family.
    pub fn scaled_at(&self, x: f64, t: f64) -> f64 {
        debug_assert!(self.is_family());
        if x.abs() >= t {
            sign(x) * self.coefficient(t)
        } else {
            0.0
        }
    }

    pub fn phi(&self, x: f64) -> f64 {
        self.scaled(x) / self.order() as f64
    }

    pub fn phi_at(&self, x: f64, t: f64) -> f64 {
        self.scaled_at(x, t) / self.order() as f64
    }

    /// `g(F(x))` for `x >= 0`, so that `m phi(x) = sgn(x) g(F(|x|))`.
    pub(crate) fn profile(&self, x: f64) -> f64 {
        let (p, q) = (self.null.cdf(x), self.null.cdf(-x));
        match self.kind {
            StatKind::S => 0.5,
            StatKind::W => p - q,
            StatKind::BhI => 0.5 * (p - q) * (p - q),
            StatKind::NaI(k) => 2.0 * (p.powi(k as i32) + q.powi(k as i32) - 2f64.powi(1 - k as i32)),
            StatKind::MoI(k) => {
                4.0 * binomial(2 * k - 1, k) * (0.25f64.powi(k as i32) - (p * q).powi(k as i32))
            }
            other => unreachable!("{other} has no single projection"),
        }
    }

    /// `c(t)` of a supremum family.
    pub(crate) fn coefficient(&self, t: f64) -> f64 {
        let (p, q) = (self.null.cdf(t), self.null.cdf(-t));
        match self.kind {
            StatKind::Ks => -1.0,
            StatKind::BhK => p - q,
            StatKind::NaK(k) => k as f64 * (p.powi(k as i32 - 1) - q.powi(k as i32 - 1)),
            StatKind::MoK(k) => {
                2.0 * k as f64 * binomial(2 * k - 1, k) * (p * q).powi(k as i32 - 1) * (p - q)
            }
            other => unreachable!("{other} is not a supremum family"),
        }
    }
}

/// The symmetric kernel of `kind` at `args` (`m` values around center 0),
/// with `t` the threshold of a supremum family. The integral forms average
/// over which argument plays the outer role; BH counts are halved back.
pub fn kernel(kind: StatKind, args: &[f64], t: Option<f64>) -> f64 {
    let m = args.len();
    debug_assert_eq!(m, kind.kernel_order());
    let below = |v: f64, bound: f64| (v.abs() < bound) as i32 as f64;
    // Order-statistic term of a subset against a bound.
    let inner = |sub: &mut Vec<f64>, bound: f64| -> f64 {
        sub.sort_by(f64::total_cmp);
        let r = sub.len();
        match kind {
            StatKind::BhI | StatKind::BhK => 0.5 * below(sub[0], bound) + 0.5 * below(sub[1], bound) - below(sub[1], bound),
            StatKind::NaI(_) | StatKind::NaK(_) => below(sub[0], bound) - below(sub[r - 1], bound),
            StatKind::MoI(_) | StatKind::MoK(_) => below(sub[r / 2 - 1], bound) - below(sub[r / 2], bound),
            _ => unreachable!(),
        }
    };
    match kind {
        StatKind::S => (args[0] > 0.0) as i32 as f64 - 0.5,
        StatKind::W => (args[0] + args[1] > 0.0) as i32 as f64 - 0.5,
        StatKind::Ks => {
            let t = t.expect("threshold");
            (args[0] <= t) as i32 as f64 + (args[0] <= -t) as i32 as f64 - 1.0
        }
        StatKind::BhK | StatKind::NaK(_) | StatKind::MoK(_) => inner(&mut args.to_vec(), t.expect("threshold")),
        StatKind::BhI | StatKind::NaI(_) | StatKind::MoI(_) => {
            let mut total = 0.0;
            let mut sub = Vec::with_capacity(m - 1);
            for j in 0..m {
                sub.clear();
                sub.extend(args.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, v)| *v));
                total += inner(&mut sub, args[j].abs());
            }
            total / m as f64
        }
        other => unreachable!("{other} has no kernel"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_with_breaks;

    fn integral_kinds() -> Vec<StatKind> {
        StatKind::battery()
            .into_iter()
            .filter(|k| k.family() == Family::Integral)
            .collect()
    }

    #[test]
    fn simple_values() {
        let s = Projection::new(StatKind::S, SymmetricNull::Logistic).unwrap();
        assert_eq!(s.phi(1.0), 0.5);
        let w = Projection::new(StatKind::W, SymmetricNull::Normal).unwrap();
        assert_eq!(w.phi(0.0), 0.0);
        // NA_I(2), NA_I(3), MO_I(1) and BH_I are proportional.
        let x = 0.83;
        let na2 = Projection::new(StatKind::NaI(2), SymmetricNull::Cauchy).unwrap().scaled(x);
        let na3 = Projection::new(StatKind::NaI(3), SymmetricNull::Cauchy).unwrap().scaled(x);
        let mo1 = Projection::new(StatKind::MoI(1), SymmetricNull::Cauchy).unwrap().scaled(x);
        let bh = Projection::new(StatKind::BhI, SymmetricNull::Cauchy).unwrap().scaled(x);
        assert!((na3 - 1.5 * na2).abs() < 1e-15);
        assert!((mo1 - na2).abs() < 1e-15);
        assert!((2.0 * bh - na2).abs() < 1e-15);
        assert!(Projection::new(StatKind::Cm, SymmetricNull::Normal).is_err());
    }

    #[test]
    fn centered_and_bounded() {
        for null in SymmetricNull::ALL {
            for kind in integral_kinds() {
                let p = Projection::new(kind, null).unwrap();
                let mean =
                    integrate_with_breaks(|x| p.phi(x) * null.density(x), f64::NEG_INFINITY, f64::INFINITY, &[0.0])
                        .unwrap();
                assert!(mean.abs() < 1e-8, "{kind} {null}");
                for x in [-30.0, -2.0, -0.1, 0.0, 0.4, 3.0, 1e3] {
                    assert!(p.phi(x).abs() <= 1.0);
                }
            }
            for kind in [StatKind::Ks, StatKind::BhK, StatKind::NaK(3), StatKind::MoK(2)] {
                let p = Projection::new(kind, null).unwrap();
                for t in [0.0, 0.5, 2.0] {
                    for x in [-3.0, -0.2, 0.7, 9.0] {
                        assert!(p.phi_at(x, t).abs() <= 1.0);
                        assert_eq!(p.phi_at(x, t), -p.phi_at(-x, t));
                    }
                }
            }
        }
    }
}
