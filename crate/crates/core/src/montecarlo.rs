//! Seeded simulation: null distributions, MC p-values and critical values,
//! size and power, and empirical variances of `sqrt(n) U_n`.
//!
//! Replication `i` draws from stream `i` of its purpose, so results are
//! identical for any thread count. Critical values come from
//! [`Purpose::Calibration`] draws and are applied to [`Purpose::Evaluation`]
//! draws; ties at the critical value are broken with [`Purpose::TieBreak`].

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{AlternativeFamily, Model, SymmetricNull};
use crate::error::{Error, Result};
use crate::rng::{open_unit, Purpose, StreamFactory};
use crate::statistics::{evaluate_sorted, CenteredSample, Family, StatKind, StatisticSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub level: f64,
}

impl McConfig {
    pub fn new(n: usize, reps: usize, seed: u64, level: f64) -> Result<Self> {
        let cfg = Self { n, reps, seed, level };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 100 {
            return Err(Error::Domain(format!("reps = {} is below the minimum of 100", self.reps)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Domain(format!("level {} outside (0, 1)", self.level)));
        }
        if self.n == 0 {
            return Err(Error::InsufficientSample { needed: 1, got: 0 });
        }
        Ok(())
    }
}

/// Refuse combinations whose population quantities do not exist: moment
/// statistics, and centering by the sample mean, under a null without a mean.
pub fn check_applicable(spec: &StatisticSpec, null: SymmetricNull) -> Result<()> {
    let mean_free = !null.has_moment(1);
    if spec.family() == Family::Moment && mean_free {
        return Err(Error::NotApplicable(format!("{} is not applicable under the {null} null", spec.kind)));
    }
    if spec.kind.uses_trim() && spec.trim.is_mean() && mean_free {
        return Err(Error::NotApplicable(format!(
            "centering by the sample mean is not applicable under the {null} null"
        )));
    }
    Ok(())
}

/// The quantity whose large values are significant: the statistic itself
/// for supremum families, its absolute value otherwise.
pub fn score(kind: StatKind, value: f64) -> f64 {
    if kind.family() == Family::Supremum {
        value
    } else {
        value.abs()
    }
}

fn draw_sorted(model: &Model, rng: &mut impl RngCore, n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    model.fill(rng, &mut x);
    x.sort_by(f64::total_cmp);
    x
}

/// Evaluate every spec on each of `reps` samples from `model`. Failed
/// evaluations on degenerate samples are `None`; other errors propagate.
fn simulate(
    specs: &[StatisticSpec],
    model: &Model,
    n: usize,
    reps: usize,
    streams: StreamFactory,
    purpose: Purpose,
) -> Result<Vec<Vec<Option<f64>>>> {
    (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.stream(purpose, i as u64);
            let sorted = draw_sorted(model, &mut rng, n);
            specs
                .iter()
                .map(|spec| match evaluate_sorted(spec, &sorted) {
                    Ok(v) => Ok(Some(v.value)),
                    Err(Error::DegenerateSample(_)) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect()
        })
        .collect()
}

/// Empirical null distribution of one statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullDistribution {
    pub spec: StatisticSpec,
    pub null: SymmetricNull,
    /// Statistic values in replication order, failures omitted.
    pub values: Vec<f64>,
    /// Replications whose sample was degenerate for the statistic.
    pub failures: usize,
    /// Scores sorted ascending.
    scores: Vec<f64>,
}

impl NullDistribution {
    fn from_values(spec: StatisticSpec, null: SymmetricNull, raw: Vec<Option<f64>>) -> Self {
        let failures = raw.iter().filter(|v| v.is_none()).count();
        let values: Vec<f64> = raw.into_iter().flatten().collect();
        let mut scores: Vec<f64> = values.iter().map(|&v| score(spec.kind, v)).collect();
        scores.sort_by(f64::total_cmp);
        Self {
            spec,
            null,
            values,
            failures,
            scores,
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// `(1 + #{score >= observed}) / (reps + 1)`.
    pub fn p_value(&self, value: f64) -> f64 {
        let s = score(self.spec.kind, value);
        let below = self.scores.partition_point(|&v| v < s);
        (1 + self.scores.len() - below) as f64 / (self.scores.len() + 1) as f64
    }

    /// Randomized critical value at `level`: reject when the score exceeds
    /// `value`, and with probability `randomization` when it equals it.
    pub fn critical_value(&self, level: f64) -> CriticalValue {
        let r = self.scores.len();
        let allowed = level * r as f64;
        // The smallest observed score c with #{score > c} <= allowed.
        let mut idx = r - 1;
        loop {
            let c = self.scores[idx];
            let first = self.scores.partition_point(|&v| v < c);
            if first == 0 {
                idx = 0;
                break;
            }
            let above_prev = r - first;
            if above_prev as f64 > allowed {
                idx = first;
                break;
            }
            idx = first - 1;
        }
        let c = self.scores[idx];
        let first = self.scores.partition_point(|&v| v < c);
        let last = self.scores.partition_point(|&v| v <= c);
        let above = r - last;
        let ties = last - first;
        CriticalValue {
            value: c,
            randomization: ((allowed - above as f64) / ties as f64).clamp(0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub value: f64,
    pub randomization: f64,
}

impl CriticalValue {
    /// Decision for one score given a uniform draw `u` in (0, 1).
    pub fn rejects(&self, score: f64, u: f64) -> bool {
        score > self.value || (score == self.value && u < self.randomization)
    }
}

/// `cfg.reps` values of `spec` on samples of size `cfg.n` from `null`,
/// drawn from the calibration streams.
pub fn null_distribution(spec: &StatisticSpec, null: SymmetricNull, cfg: &McConfig) -> Result<NullDistribution> {
    Ok(null_distributions(std::slice::from_ref(spec), null, cfg)?.remove(0))
}

/// Null distributions of several statistics on shared calibration samples.
pub fn null_distributions(
    specs: &[StatisticSpec],
    null: SymmetricNull,
    cfg: &McConfig,
) -> Result<Vec<NullDistribution>> {
    cfg.validate()?;
    for spec in specs {
        check_applicable(spec, null)?;
    }
    let rows = simulate(
        specs,
        &Model::Null(null),
        cfg.n,
        cfg.reps,
        StreamFactory::new(cfg.seed),
        Purpose::Calibration,
    )?;
    Ok(specs
        .iter()
        .enumerate()
        .map(|(j, spec)| NullDistribution::from_values(*spec, null, rows.iter().map(|r| r[j]).collect()))
        .collect())
}

/// MC p-value of `sample` against the simulated null at the sample's size.
pub fn p_value(spec: &StatisticSpec, null: SymmetricNull, sample: &[f64], cfg: &McConfig) -> Result<f64> {
    let value = crate::statistics::evaluate(spec, sample)?.value;
    let cfg = McConfig { n: sample.len(), ..*cfg };
    Ok(null_distribution(spec, null, &cfg)?.p_value(value))
}

pub fn critical_value(spec: &StatisticSpec, null: SymmetricNull, cfg: &McConfig) -> Result<CriticalValue> {
    Ok(null_distribution(spec, null, cfg)?.critical_value(cfg.level))
}

/// Rejection frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionRate {
    pub rate: f64,
    pub se: f64,
    /// Replications that produced a value.
    pub reps: usize,
    pub failures: usize,
}

impl RejectionRate {
    fn new(rejections: usize, reps: usize, failures: usize) -> Self {
        let rate = rejections as f64 / reps as f64;
        Self {
            rate,
            se: (rate * (1.0 - rate) / reps as f64).sqrt(),
            reps,
            failures,
        }
    }
}

/// Rejection frequencies of several tests on shared evaluation samples from
/// `model`, against critical values calibrated under `null`.
pub fn rejection_rates(
    specs: &[StatisticSpec],
    null: SymmetricNull,
    model: &Model,
    cfg: &McConfig,
) -> Result<Vec<RejectionRate>> {
    let dists = null_distributions(specs, null, cfg)?;
    let crit: Vec<CriticalValue> = dists.iter().map(|d| d.critical_value(cfg.level)).collect();
    let streams = StreamFactory::new(cfg.seed);
    let rows = simulate(specs, model, cfg.n, cfg.reps, streams, Purpose::Evaluation)?;
    let mut out = Vec::with_capacity(specs.len());
    for (j, spec) in specs.iter().enumerate() {
        let (mut rejections, mut failures) = (0, 0);
        for (i, row) in rows.iter().enumerate() {
            match row[j] {
                None => failures += 1,
                Some(v) => {
                    let mut rng = streams.stream(Purpose::TieBreak, i as u64);
                    // One uniform per test, in spec order.
                    let mut u = 0.0;
                    for _ in 0..=j {
                        u = open_unit(&mut rng);
                    }
                    if crit[j].rejects(score(spec.kind, v), u) {
                        rejections += 1;
                    }
                }
            }
        }
        out.push(RejectionRate::new(rejections, cfg.reps - failures, failures));
    }
    Ok(out)
}

/// Empirical size under `null`.
pub fn size(spec: &StatisticSpec, null: SymmetricNull, cfg: &McConfig) -> Result<RejectionRate> {
    Ok(rejection_rates(std::slice::from_ref(spec), null, &Model::Null(null), cfg)?.remove(0))
}

/// Empirical power against `g(.; theta)`, calibrated under the family's null.
pub fn power(spec: &StatisticSpec, alt: &AlternativeFamily, theta: f64, cfg: &McConfig) -> Result<RejectionRate> {
    let model = Model::alternative(*alt, theta)?;
    Ok(rejection_rates(std::slice::from_ref(spec), alt.base, &model, cfg)?.remove(0))
}

/// What to record from each simulated sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Probe {
    Statistic(StatisticSpec),
    /// Signed supremum family member at a fixed threshold.
    FamilyAt { spec: StatisticSpec, t: f64 },
}

impl Probe {
    fn spec(&self) -> &StatisticSpec {
        match self {
            Probe::Statistic(s) | Probe::FamilyAt { spec: s, .. } => s,
        }
    }

    fn eval(&self, sorted: &[f64]) -> Result<f64> {
        match self {
            Probe::Statistic(spec) => Ok(evaluate_sorted(spec, sorted)?.value),
            Probe::FamilyAt { spec, t } => CenteredSample::from_sorted(sorted, spec.trim)?.family_at(spec.kind, *t),
        }
    }
}

/// Mean and variance of `sqrt(n)` times a probe over replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledMoments {
    pub mean: f64,
    pub variance: f64,
    pub reps: usize,
}

/// Empirical moments of `sqrt(n) U_n` for each probe on shared samples from
/// `model`. Uses the sample streams of `cfg.seed`.
pub fn scaled_moments(probes: &[Probe], model: &Model, cfg: &McConfig) -> Result<Vec<ScaledMoments>> {
    cfg.validate()?;
    let base = match model {
        Model::Null(null) => *null,
        Model::Alternative { family, .. } => family.base,
    };
    for p in probes {
        check_applicable(p.spec(), base)?;
    }
    let streams = StreamFactory::new(cfg.seed);
    let root_n = (cfg.n as f64).sqrt();
    let rows: Vec<Vec<f64>> = (0..cfg.reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.stream(Purpose::Sample, i as u64);
            let sorted = draw_sorted(model, &mut rng, cfg.n);
            probes.iter().map(|p| p.eval(&sorted).map(|v| root_n * v)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let r = rows.len() as f64;
    Ok((0..probes.len())
        .map(|j| {
            let mean = rows.iter().map(|row| row[j]).sum::<f64>() / r;
            let variance = rows.iter().map(|row| (row[j] - mean).powi(2)).sum::<f64>() / (r - 1.0);
            ScaledMoments {
                mean,
                variance,
                reps: rows.len(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, reps: usize) -> McConfig {
        McConfig::new(n, reps, 11, 0.05).unwrap()
    }

    #[test]
    fn config_contract() {
        assert!(McConfig::new(10, 99, 0, 0.05).is_err());
        assert!(McConfig::new(10, 100, 0, 1.0).is_err());
        assert!(McConfig::new(10, 100, 0, 0.05).is_ok());
    }

    #[test]
    fn deterministic() {
        let spec = StatisticSpec::new(StatKind::W, 0.2).unwrap();
        let a = null_distribution(&spec, SymmetricNull::Logistic, &cfg(30, 200)).unwrap();
        let b = null_distribution(&spec, SymmetricNull::Logistic, &cfg(30, 200)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sign_statistic_centered_under_null() {
        let spec = StatisticSpec::new(StatKind::S, 0.1).unwrap();
        let d = null_distribution(&spec, SymmetricNull::Normal, &cfg(41, 2000)).unwrap();
        let m = d.values.iter().sum::<f64>() / d.len() as f64;
        let sd = (d.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (d.len() - 1) as f64).sqrt();
        assert!(m.abs() < 3.0 * sd / (d.len() as f64).sqrt());
    }

    #[test]
    fn p_values_are_monotone_in_score() {
        let spec = StatisticSpec::new(StatKind::W, 0.0).unwrap();
        let d = null_distribution(&spec, SymmetricNull::Normal, &cfg(20, 500)).unwrap();
        let mut sorted = d.values.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2].abs().min(1e-3);
        assert!(d.p_value(median) > 0.9);
        let mut last = 1.0;
        for v in [0.0, 0.02, 0.05, 0.1, 0.2, 0.4] {
            assert_eq!(d.p_value(v), d.p_value(-v));
            assert!(d.p_value(v) <= last);
            last = d.p_value(v);
        }
        let ks = StatisticSpec::new(StatKind::Ks, 0.0).unwrap();
        let d = null_distribution(&ks, SymmetricNull::Normal, &cfg(20, 500)).unwrap();
        assert!(d.p_value(0.5) <= d.p_value(0.1));
        assert_eq!(d.p_value(10.0), 1.0 / 501.0);
    }

    #[test]
    fn randomized_critical_value_has_exact_calibration_size() {
        // With the randomization the expected rejection count on the
        // calibration sample itself is exactly level * reps.
        for kind in [StatKind::S, StatKind::Ks, StatKind::W] {
            let spec = StatisticSpec::new(kind, 0.25).unwrap();
            let d = null_distribution(&spec, SymmetricNull::Normal, &cfg(15, 1000)).unwrap();
            let c = d.critical_value(0.05);
            let above = d.scores.iter().filter(|&&s| s > c.value).count() as f64;
            let ties = d.scores.iter().filter(|&&s| s == c.value).count() as f64;
            assert!((above + c.randomization * ties - 50.0).abs() < 1e-9, "{kind}");
        }
    }

    #[test]
    fn cauchy_wall() {
        let c = cfg(20, 100);
        let cm = StatisticSpec::new(StatKind::Cm, 0.0).unwrap();
        assert!(null_distribution(&cm, SymmetricNull::Cauchy, &c).unwrap_err().is_not_applicable());
        let w0 = StatisticSpec::new(StatKind::W, 0.0).unwrap();
        assert!(null_distribution(&w0, SymmetricNull::Cauchy, &c).unwrap_err().is_not_applicable());
        let w1 = StatisticSpec::new(StatKind::W, 0.1).unwrap();
        assert!(null_distribution(&w1, SymmetricNull::Cauchy, &c).is_ok());
    }

    #[test]
    fn power_grows_with_theta_and_n() {
        let spec = StatisticSpec::new(StatKind::W, 0.0).unwrap();
        let alt = AlternativeFamily::contamination(SymmetricNull::Normal);
        let c = cfg(100, 1000);
        // The mixture at theta = 1/2 is symmetric about 1/2, so stay below it.
        let p: Vec<RejectionRate> = [0.0, 0.1, 0.2].iter().map(|&th| power(&spec, &alt, th, &c).unwrap()).collect();
        // Calibration noise adds to the evaluation noise.
        assert!((p[0].rate - 0.05).abs() < 2.0 * 2f64.sqrt() * p[0].se);
        for w in p.windows(2) {
            assert!(w[1].rate + 2.0 * w[1].se >= w[0].rate);
        }
        let big = power(&spec, &alt, 0.2, &cfg(800, 1000)).unwrap();
        assert!(big.rate > p[2].rate);
    }
}
