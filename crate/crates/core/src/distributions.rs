//! Symmetric null models and the two families of close alternatives.
//!
//! Nulls are centered at zero with unit scale: standard normal, logistic
//! with `F(x) = 1 / (1 + e^-x)` and Cauchy with `f(x) = 1 / (pi (1 + x^2))`.

use std::f64::consts::{FRAC_1_PI, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::rng::{open_unit, Purpose, StreamFactory};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// A symmetric, absolutely continuous null model centered at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetricNull {
    Normal,
    Logistic,
    Cauchy,
}

impl SymmetricNull {
    pub const ALL: [SymmetricNull; 3] = [Self::Normal, Self::Logistic, Self::Cauchy];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::Logistic => "logistic",
            Self::Cauchy => "cauchy",
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match self {
            Self::Normal => FRAC_1_SQRT_2PI * (-0.5 * x * x).exp(),
            Self::Logistic => {
                let e = (-x.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            Self::Cauchy => FRAC_1_PI / (1.0 + x * x),
        }
    }

    pub fn density_derivative(&self, x: f64) -> f64 {
        match self {
            Self::Normal => -x * self.density(x),
            Self::Logistic => {
                // f' = f (1 - 2F) = -f tanh(x / 2)
                -self.density(x) * (0.5 * x).tanh()
            }
            Self::Cauchy => {
                let d = 1.0 + x * x;
                -2.0 * FRAC_1_PI * x / (d * d)
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Normal => 0.5 * erfc(-x / SQRT_2),
            Self::Logistic => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            Self::Cauchy => {
                // Written via the upper tail to keep precision for large |x|.
                if x < 0.0 {
                    (-1.0 / x).atan() * FRAC_1_PI
                } else if x > 0.0 {
                    1.0 - (1.0 / x).atan() * FRAC_1_PI
                } else if x == 0.0 {
                    0.5
                } else {
                    f64::NAN
                }
            }
        }
    }

    /// Inverse of [`cdf`](Self::cdf) on the open interval `(0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level {u} outside (0, 1)")));
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        match self {
            Self::Normal => -SQRT_2 * erfc_inv(2.0 * u),
            Self::Logistic => (u / (1.0 - u)).ln(),
            Self::Cauchy => (PI * (u - 0.5)).tan(),
        }
    }

    /// Upper partial first moment `int_t^inf x f(x) dx` for `t >= 0`;
    /// infinite for the Cauchy null.
    pub fn upper_partial_mean(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self {
            Self::Normal => self.density(t),
            Self::Logistic => t * self.cdf(-t) + (-t).exp().ln_1p(),
            Self::Cauchy => f64::INFINITY,
        }
    }

    /// Partial first moment `int_a^b x f(x) dx` for `0 <= a <= b`.
    pub fn partial_mean(&self, a: f64, b: f64) -> f64 {
        debug_assert!(0.0 <= a && a <= b);
        match self {
            Self::Cauchy if b.is_finite() => ((1.0 + b * b) / (1.0 + a * a)).ln() * 0.5 * FRAC_1_PI,
            _ if b.is_infinite() => self.upper_partial_mean(a),
            _ => self.upper_partial_mean(a) - self.upper_partial_mean(b),
        }
    }

    /// Whether `E|X|^k` is finite.
    pub fn has_moment(&self, k: u32) -> bool {
        match self {
            Self::Normal | Self::Logistic => true,
            Self::Cauchy => k == 0,
        }
    }

    /// Central moment `E X^k` (the center is zero), closed form for `k <= 10`.
    pub fn central_moment(&self, k: u32) -> Result<f64> {
        if !self.has_moment(k) {
            return Err(Error::NotApplicable(format!(
                "moment of order {k} does not exist for the {} null",
                self.name()
            )));
        }
        if k % 2 == 1 {
            return Ok(0.0);
        }
        if k > 10 {
            return Err(Error::Domain(format!("moment order {k} not tabulated")));
        }
        Ok(match self {
            Self::Normal => (1..k).step_by(2).map(|j| j as f64).product(),
            Self::Logistic => {
                // E X^{2r} = (2^{2r} - 2) pi^{2r} |B_{2r}|
                const BERNOULLI: [f64; 6] = [1.0, 1.0 / 6.0, 1.0 / 30.0, 1.0 / 42.0, 1.0 / 30.0, 5.0 / 66.0];
                let r = (k / 2) as usize;
                if r == 0 {
                    1.0
                } else {
                    (2f64.powi(2 * r as i32) - 2.0) * PI.powi(2 * r as i32) * BERNOULLI[r]
                }
            }
            Self::Cauchy => 1.0,
        })
    }

    /// Draw one observation by inversion.
    #[inline]
    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile_unchecked(open_unit(rng))
    }

    /// Draw `|X|`.
    #[inline]
    fn draw_half<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = open_unit(rng);
        match self {
            Self::Normal => SQRT_2 * erfc_inv(u),
            Self::Logistic => ((1.0 + u) / (1.0 - u)).ln(),
            Self::Cauchy => (0.5 * PI * u).tan(),
        }
    }
}

impl fmt::Display for SymmetricNull {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SymmetricNull {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "gauss" | "gaussian" => Ok(Self::Normal),
            "logistic" => Ok(Self::Logistic),
            "cauchy" => Ok(Self::Cauchy),
            other => Err(Error::Parse(format!("unknown null distribution '{other}'"))),
        }
    }
}

/// Kind of close alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AltKind {
    /// Two-piece scaling: `f(x / (1+theta))` on the left, `f((1+theta) x)` on the right.
    FernandezSteel,
    /// Mixture `(1 - theta) f(x) + theta f(x - 1)`.
    Contamination,
}

impl AltKind {
    pub const ALL: [AltKind; 2] = [Self::FernandezSteel, Self::Contamination];

    pub fn name(&self) -> &'static str {
        match self {
            Self::FernandezSteel => "fs",
            Self::Contamination => "contam",
        }
    }
}

impl fmt::Display for AltKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AltKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "fs" | "fernandez-steel" | "skew" => Ok(Self::FernandezSteel),
            "contam" | "contamination" => Ok(Self::Contamination),
            other => Err(Error::Parse(format!("unknown alternative '{other}'"))),
        }
    }
}

/// A one-parameter family `g(x; theta)` around a symmetric null, with
/// `g(x; 0) = f(x)`.
///
/// `scale` reparameterizes the family as `theta -> scale * theta`; it is 1
/// for the families as usually written.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlternativeFamily {
    pub kind: AltKind,
    pub base: SymmetricNull,
    pub scale: f64,
}

impl AlternativeFamily {
    pub fn new(kind: AltKind, base: SymmetricNull) -> Self {
        Self {
            kind,
            base,
            scale: 1.0,
        }
    }

    pub fn fernandez_steel(base: SymmetricNull) -> Self {
        Self::new(AltKind::FernandezSteel, base)
    }

    pub fn contamination(base: SymmetricNull) -> Self {
        Self::new(AltKind::Contamination, base)
    }

    /// The same family traversed at speed `c`: `g_c(x; theta) = g(x; c theta)`.
    pub fn reparameterized(self, c: f64) -> Self {
        Self {
            scale: self.scale * c,
            ..self
        }
    }

    pub fn name(&self) -> String {
        format!("{}-{}", self.kind.name(), self.base.name())
    }

    fn effective(&self, theta: f64) -> Result<f64> {
        let s = self.scale * theta;
        let ok = match self.kind {
            AltKind::FernandezSteel => s > -1.0 && s.is_finite(),
            AltKind::Contamination => (0.0..=1.0).contains(&s),
        };
        if ok {
            Ok(s)
        } else {
            Err(Error::Domain(format!(
                "theta = {theta} outside the valid range of the {} family",
                self.kind.name()
            )))
        }
    }

    /// Validate `theta` against the family's range.
    pub fn check_theta(&self, theta: f64) -> Result<()> {
        self.effective(theta).map(|_| ())
    }

    pub fn density(&self, x: f64, theta: f64) -> Result<f64> {
        let s = self.effective(theta)?;
        let f = &self.base;
        Ok(match self.kind {
            AltKind::FernandezSteel => {
                let c = 1.0 + s;
                let norm = 2.0 / (c + 1.0 / c);
                if x < 0.0 {
                    norm * f.density(x / c)
                } else {
                    norm * f.density(c * x)
                }
            }
            AltKind::Contamination => (1.0 - s) * f.density(x) + s * f.density(x - 1.0),
        })
    }

    pub fn cdf(&self, x: f64, theta: f64) -> Result<f64> {
        let s = self.effective(theta)?;
        let f = &self.base;
        Ok(match self.kind {
            AltKind::FernandezSteel => {
                let c = 1.0 + s;
                let c2 = c * c;
                if x < 0.0 {
                    // norm * c * F(x / c)
                    2.0 * c2 / (c2 + 1.0) * f.cdf(x / c)
                } else {
                    // left mass + norm / c * (F(c x) - 1/2)
                    1.0 - 2.0 / (c2 + 1.0) * f.cdf(-c * x)
                }
            }
            AltKind::Contamination => (1.0 - s) * f.cdf(x) + s * f.cdf(x - 1.0),
        })
    }

    /// Quantile of `G(.; theta)` by bracketing and bisection.
    pub fn quantile(&self, u: f64, theta: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level {u} outside (0, 1)")));
        }
        self.check_theta(theta)?;
        let start = self.base.quantile_unchecked(u);
        let mut lo = start - 1.0;
        let mut hi = start + 1.0;
        let mut width = 1.0;
        while self.cdf(lo, theta)? > u {
            width *= 2.0;
            lo = start - width;
        }
        width = 1.0;
        while self.cdf(hi, theta)? < u {
            width *= 2.0;
            hi = start + width;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid, theta)? < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Score `h(x)`: the derivative of `g(x; theta)` in `theta` at zero.
    pub fn score(&self, x: f64) -> f64 {
        let f = &self.base;
        self.scale
            * match self.kind {
                AltKind::FernandezSteel => x.abs() * f.density_derivative(x),
                AltKind::Contamination => f.density(x - 1.0) - f.density(x),
            }
    }

    /// `H(x)`, the antiderivative of the score with `H(-inf) = 0`.
    pub fn score_integral(&self, x: f64) -> f64 {
        let f = &self.base;
        self.scale
            * match self.kind {
                AltKind::FernandezSteel => f.cdf(-x.abs()) + x.abs() * f.density(x),
                AltKind::Contamination => f.cdf(x - 1.0) - f.cdf(x),
            }
    }

    /// One draw from `g(.; theta)`; `theta` must already be validated.
    #[inline]
    pub fn draw<R: RngCore + ?Sized>(&self, theta: f64, rng: &mut R) -> f64 {
        let s = self.scale * theta;
        match self.kind {
            AltKind::FernandezSteel => {
                let c = 1.0 + s;
                let c2 = c * c;
                let left = open_unit(rng) < c2 / (1.0 + c2);
                let r = self.base.draw_half(rng);
                if left {
                    -c * r
                } else {
                    r / c
                }
            }
            AltKind::Contamination => {
                let shifted = open_unit(rng) < s;
                let x = self.base.draw(rng);
                if shifted {
                    x + 1.0
                } else {
                    x
                }
            }
        }
    }
}

/// A sampling model: a null, or an alternative at a fixed `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Null(SymmetricNull),
    Alternative { family: AlternativeFamily, theta: f64 },
}

impl Model {
    pub fn alternative(family: AlternativeFamily, theta: f64) -> Result<Self> {
        family.check_theta(theta)?;
        Ok(Self::Alternative { family, theta })
    }

    #[inline]
    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Model::Null(null) => null.draw(rng),
            Model::Alternative { family, theta } => family.draw(*theta, rng),
        }
    }

    pub fn fill<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.draw(rng);
        }
    }

    /// `n` i.i.d. draws, determined entirely by `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::InsufficientSample { needed: 1, got: 0 });
        }
        let mut rng = StreamFactory::new(seed).stream(Purpose::Sample, 0);
        let mut out = vec![0.0; n];
        self.fill(&mut rng, &mut out);
        Ok(out)
    }
}

/// Draw `n` observations from a null.
pub fn sample_null(null: SymmetricNull, n: usize, seed: u64) -> Result<Vec<f64>> {
    Model::Null(null).sample(n, seed)
}

/// Draw `n` observations from an alternative at `theta`.
pub fn sample_alternative(family: AlternativeFamily, theta: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    Model::alternative(family, theta)?.sample(n, seed)
}
