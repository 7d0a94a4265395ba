//! Acceptance suites: each criterion recomputes its quantities from the
//! library and compares them with an exact identity or an independent
//! oracle at a fixed tolerance.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, moment_parts, report, FamilyModel, NullMoments, DEGENERATE_VARIANCE};
use crate::distributions::{AltKind, AlternativeFamily, Model, SymmetricNull};
use crate::efficiency::{self, alpha_grid, EQUIVALENCE_TOL};
use crate::error::{Error, Result};
use crate::montecarlo::{self, McConfig, Probe};
use crate::population;
use crate::rng::{Purpose, StreamFactory};
use crate::statistics::{brute_force_u, evaluate, Family, StatKind, StatisticSpec};

/// Root seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_261_016;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Quick,
    Full,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "quick" => Ok(Suite::Quick),
            "full" => Ok(Suite::Full),
            other => Err(Error::Parse(format!("unknown suite '{other}'"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Quick => "quick",
            Suite::Full => "full",
        })
    }
}

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} [{}] {}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail
        )
    }
}

pub const CRITERIA: [(u8, &str); 10] = [
    (1, "oracle equivalence"),
    (2, "equivalence classes"),
    (3, "degeneracy"),
    (4, "limiting variance vs Monte Carlo"),
    (5, "slopes vs finite differences"),
    (6, "closed-form checkpoints"),
    (7, "zero-efficiency roots"),
    (8, "not-applicable wall"),
    (9, "KS variance argmax shape"),
    (10, "size calibration"),
];

/// Run one criterion. Errors inside a check count as failures.
pub fn run(id: u8, suite: Suite, seed: u64) -> Outcome {
    let title = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, t)| t.to_string())
        .unwrap_or_else(|| format!("unknown criterion {id}"));
    let result = match id {
        1 => oracle_equivalence(seed),
        2 => equivalence_classes(),
        3 => degeneracy(),
        4 => variance_monte_carlo(suite, seed),
        5 => finite_differences(),
        6 => closed_forms(),
        7 => zero_roots(),
        8 => not_applicable_wall(seed),
        9 => ks_argmax_shape(),
        10 => size_calibration(suite, seed),
        _ => Err(Error::Domain(format!("no criterion {id}"))),
    };
    let (passed, detail) = match result {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Outcome {
        id,
        title,
        passed,
        detail,
    }
}

pub fn run_all(suite: Suite, seed: u64) -> Vec<Outcome> {
    CRITERIA.iter().map(|(id, _)| run(*id, suite, seed)).collect()
}

type Check = Result<(bool, String)>;

fn u_kinds() -> Vec<StatKind> {
    StatKind::battery().into_iter().filter(|k| k.family() != Family::Moment).collect()
}

fn all_alternatives() -> Vec<AlternativeFamily> {
    SymmetricNull::ALL
        .iter()
        .flat_map(|&null| AltKind::ALL.map(|kind| AlternativeFamily::new(kind, null)))
        .collect()
}

/// `Ok(None)` for a not-applicable combination.
fn applicable<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_not_applicable() => Ok(None),
        Err(e) => Err(e),
    }
}

fn oracle_equivalence(seed: u64) -> Check {
    const PER_SIZE: usize = 200;
    let alphas = [0.0, 0.1, 0.25, 0.4, 0.5];
    let streams = StreamFactory::new(seed);
    let (mut evaluations, mut mismatches) = (0usize, 0usize);
    let mut first = String::new();
    for n in 5..=12 {
        for rep in 0..PER_SIZE {
            let mut rng = streams.stream(Purpose::Oracle, (n * PER_SIZE + rep) as u64);
            let mut x = vec![0.0; n];
            loop {
                Model::Null(SymmetricNull::Logistic).fill(&mut rng, &mut x);
                let mut s = x.clone();
                s.sort_by(f64::total_cmp);
                if s.windows(2).all(|w| w[0] < w[1]) {
                    break;
                }
            }
            let alpha = alphas[rep % alphas.len()];
            for kind in u_kinds() {
                if kind.kernel_order() > n {
                    continue;
                }
                let spec = StatisticSpec::new(kind, alpha)?;
                let fast = evaluate(&spec, &x)?;
                let brute = brute_force_u(&spec, &x)?;
                evaluations += 1;
                if fast.value.to_bits() != brute.value.to_bits() {
                    mismatches += 1;
                    if first.is_empty() {
                        first = format!("; first: {spec} n={n}: {} vs {}", fast.value, brute.value);
                    }
                }
            }
        }
    }
    Ok((mismatches == 0, format!("{mismatches} mismatches in {evaluations} evaluations{first}")))
}

const CLASSES: [&[StatKind]; 2] = [
    &[StatKind::BhI, StatKind::MoI(1), StatKind::NaI(2), StatKind::NaI(3)],
    &[StatKind::BhK, StatKind::MoK(1), StatKind::NaK(2), StatKind::NaK(3)],
];

fn equivalence_classes() -> Check {
    let grid = alpha_grid(21);
    let mut worst: f64 = 0.0;
    let mut compared = 0usize;
    let mut ks_points = 0usize;
    let mut crossovers = Vec::new();
    for alt in all_alternatives() {
        for &alpha in &grid {
            for class in CLASSES {
                let mut vals = Vec::new();
                for &kind in class {
                    if let Some(v) = applicable(efficiency::bahadur_index(kind, &alt, alpha))? {
                        vals.push(v);
                    }
                }
                for v in &vals[1.min(vals.len())..] {
                    worst = worst.max((v - vals[0]).abs());
                    compared += 1;
                }
            }
        }
        if let Some(s0) = applicable(efficiency::bahadur_index(StatKind::S, &alt, 0.0))? {
            for kind in [StatKind::Cm, StatKind::Gamma, StatKind::Mgg] {
                let v = efficiency::bahadur_index(kind, &alt, 0.0)?;
                worst = worst.max((v - s0).abs());
                compared += 1;
            }
        }
        let cross = efficiency::ks_s_equivalence_crossover(&alt, &grid)?;
        crossovers.push(format!("{} {:.4}", alt.name(), cross.alpha));
        for &alpha in grid.iter().filter(|&&a| a < cross.alpha || (cross.whole_range && a <= cross.alpha)) {
            let (Some(ks), Some(s)) = (
                applicable(efficiency::bahadur_index(StatKind::Ks, &alt, alpha))?,
                applicable(efficiency::bahadur_index(StatKind::S, &alt, alpha))?,
            ) else {
                continue;
            };
            worst = worst.max((ks - s).abs());
            ks_points += 1;
        }
    }
    Ok((
        worst <= EQUIVALENCE_TOL,
        format!(
            "max index gap {worst:.2e} over {compared} class pairs and {ks_points} KS/S points; crossovers: {}",
            crossovers.join(", ")
        ),
    ))
}

fn degeneracy() -> Check {
    let mut worst_var: f64 = 0.0;
    let mut worst_slope: f64 = 0.0;
    let mut ks = Vec::new();
    let mut ks_ok = true;
    for alt in all_alternatives() {
        worst_var = worst_var.max(asymptotics::asymptotic_variance(StatKind::S, alt.base, 0.5)?.abs());
        worst_slope = worst_slope.max(asymptotics::slope_deriv(StatKind::S, &alt, 0.5)?.abs());
        let r = report(&StatisticSpec::new(StatKind::Ks, 0.5)?, &alt)?;
        ks_ok &= r.degenerate;
        if !r.degenerate {
            ks.push(format!(
                "{} index {:.4} (sup var {:.4} at t={:.3})",
                alt.name(),
                r.index,
                r.sigma2,
                r.sigma2_argmax.unwrap_or(f64::NAN)
            ));
        }
    }
    let s_ok = worst_var <= 1e-8 && worst_slope <= 1e-8;
    let mut detail = format!("S at 1/2: max |sigma^2| {worst_var:.1e}, max |b'| {worst_slope:.1e}");
    if ks_ok {
        detail.push_str("; KS at 1/2 degenerate everywhere");
    } else {
        detail.push_str(&format!("; KS at 1/2 not degenerate: {}", ks.join("; ")));
    }
    Ok((s_ok && ks_ok, detail))
}

/// Analytic limiting variance of the probe under `null`: the variance of
/// integral and moment statistics, the variance function at its argmax for
/// supremum families.
fn variance_probe(kind: StatKind, null: SymmetricNull, alpha: f64) -> Result<(Probe, f64)> {
    let spec = StatisticSpec::new(kind, alpha)?;
    Ok(match kind.family() {
        Family::Integral => (Probe::Statistic(spec), asymptotics::asymptotic_variance(kind, null, alpha)?),
        Family::Moment => (Probe::Statistic(spec), moment_parts(kind, null)?.variance),
        Family::Supremum => {
            let sup = FamilyModel::new(kind, null, alpha)?.sup_variance();
            (Probe::FamilyAt { spec, t: sup.argmax }, sup.value)
        }
    })
}

fn variance_monte_carlo(suite: Suite, seed: u64) -> Check {
    const N: usize = 2000;
    const REPS: usize = 10_000;
    let alphas = [0.0, 0.1, 0.25, 0.4, 0.5];
    let nulls = [SymmetricNull::Normal, SymmetricNull::Logistic];
    let cells: Vec<(SymmetricNull, f64, Vec<StatKind>)> = match suite {
        Suite::Full => nulls
            .iter()
            .flat_map(|&null| alphas.iter().map(move |&a| (null, a, StatKind::battery())))
            .collect(),
        Suite::Quick => vec![
            (SymmetricNull::Normal, 0.0, vec![StatKind::W, StatKind::S, StatKind::Cm]),
            (SymmetricNull::Normal, 0.1, vec![StatKind::Ks]),
            (SymmetricNull::Logistic, 0.25, vec![StatKind::NaI(3)]),
            (SymmetricNull::Logistic, 0.4, vec![StatKind::MoK(2)]),
        ],
    };
    let (mut checked, mut failed) = (0usize, Vec::new());
    let mut worst: f64 = 0.0;
    for (cell, (null, alpha, kinds)) in cells.iter().enumerate() {
        let mut probes = Vec::new();
        let mut analytic = Vec::new();
        for &kind in kinds {
            if let Some((p, v)) = applicable(variance_probe(kind, *null, *alpha))? {
                probes.push((kind, p));
                analytic.push(v);
            }
        }
        let cfg = McConfig::new(N, REPS, seed.wrapping_add(1000 + cell as u64), 0.05)?;
        let list: Vec<Probe> = probes.iter().map(|(_, p)| *p).collect();
        let moments = montecarlo::scaled_moments(&list, &Model::Null(*null), &cfg)?;
        for (((kind, _), a), m) in probes.iter().zip(&analytic).zip(&moments) {
            checked += 1;
            let ok = if *a < DEGENERATE_VARIANCE {
                m.variance <= DEGENERATE_VARIANCE
            } else {
                let rel = (m.variance / a - 1.0).abs();
                worst = worst.max(rel);
                rel <= 0.05
            };
            if !ok {
                failed.push(format!("{kind} {null} alpha={alpha}: MC {:.5} vs {:.5}", m.variance, a));
            }
        }
    }
    let mut detail = format!("{checked} cells, worst relative gap {:.2}%", 100.0 * worst);
    if !failed.is_empty() {
        detail.push_str(&format!("; outside 5%: {}", failed.join("; ")));
    }
    Ok((failed.is_empty(), detail))
}

fn finite_differences() -> Check {
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    let mut where_worst = String::new();
    for alt in all_alternatives() {
        for alpha in [0.0, 0.1, 0.25, 0.4, 0.5] {
            for kind in StatKind::battery() {
                if kind.family() == Family::Moment && alpha > 0.0 {
                    continue;
                }
                let Some(r) = applicable(report(&StatisticSpec::new(kind, alpha)?, &alt))? else {
                    continue;
                };
                let fd = population::fd_slope(kind, &alt, alpha)?.value;
                let gap = (fd - r.slope_deriv).abs();
                checked += 1;
                if gap > worst {
                    worst = gap;
                    where_worst = format!("{kind} {} alpha={alpha}", alt.name());
                }
            }
        }
    }
    let denom = NullMoments::new(SymmetricNull::Normal)?.skewness_variance();
    Ok((
        worst <= 1e-4 && denom == 6.0,
        format!("{checked} slopes, max gap {worst:.2e} ({where_worst}); sqrt(b1) normal denominator {denom}"),
    ))
}

fn closed_forms() -> Check {
    let normal = SymmetricNull::Normal;
    let s_var = asymptotics::asymptotic_variance(StatKind::S, normal, 0.0)?;
    let s_var_exact = 0.25 - 1.0 / (2.0 * PI);
    let cm = NullMoments::new(normal)?.mean_median_variance();
    let cm_exact = PI / 2.0 - 1.0;
    let slope = asymptotics::slope_deriv(StatKind::S, &AlternativeFamily::contamination(normal), 0.0)?;
    let slope_exact = normal.cdf(1.0) - 0.5 - normal.density(0.0);
    let gaps = [
        (s_var - s_var_exact).abs(),
        (cm - cm_exact).abs(),
        (slope - slope_exact).abs(),
    ];
    Ok((
        gaps.iter().all(|g| *g <= 1e-9),
        format!(
            "sigma^2_S {s_var:.12} (gap {:.1e}), CM denominator {cm:.12} (gap {:.1e}), S slope {slope:.12} (gap {:.1e})",
            gaps[0], gaps[1], gaps[2]
        ),
    ))
}

fn zero_roots() -> Check {
    let mut found = Vec::new();
    let mut missing = Vec::new();
    let mut ok = true;
    for kind in AltKind::ALL {
        let alt = AlternativeFamily::new(kind, SymmetricNull::Normal);
        for test in StatKind::battery().into_iter().filter(|k| k.family() == Family::Integral) {
            match efficiency::zero_efficiency_alpha(test, &alt)? {
                Some(root) => {
                    let idx = efficiency::bahadur_index(test, &alt, root)?;
                    let good = root > 0.0 && root < 0.5 && idx.abs() < 1e-10;
                    ok &= good;
                    found.push(format!("{test}/{} {root:.6}{}", kind.name(), if good { "" } else { " (index too large)" }));
                }
                None => {
                    ok = false;
                    missing.push(format!("{test}/{}", kind.name()));
                }
            }
        }
    }
    let mut detail = format!("roots: {}", found.join(", "));
    if !missing.is_empty() {
        detail.push_str(&format!("; no sign change of b' on (0, 1/2): {}", missing.join(", ")));
    }
    Ok((ok, detail))
}

fn not_applicable_wall(seed: u64) -> Check {
    let cauchy = SymmetricNull::Cauchy;
    let mut probes = 0usize;
    let mut leaks = Vec::new();
    let mut expect = |what: String, r: Result<()>| {
        probes += 1;
        match r {
            Err(e) if e.is_not_applicable() => {}
            Err(e) => leaks.push(format!("{what}: {e}")),
            Ok(()) => leaks.push(format!("{what}: returned a number")),
        }
    };
    let cfg = McConfig::new(20, 100, seed, 0.05)?;
    for alt in AltKind::ALL.map(|k| AlternativeFamily::new(k, cauchy)) {
        for kind in StatKind::battery() {
            let moment = kind.family() == Family::Moment;
            let alphas: &[f64] = if moment { &[0.0, 0.25, 0.5] } else { &[0.0] };
            for &alpha in alphas {
                let spec = StatisticSpec::new(kind, alpha)?;
                let tag = format!("{spec} {}", alt.name());
                expect(format!("index {tag}"), report(&spec, &alt).map(drop));
                expect(format!("MC {tag}"), montecarlo::null_distribution(&spec, cauchy, &cfg).map(drop));
                match kind.family() {
                    Family::Supremum => {
                        expect(format!("variance {tag}"), asymptotics::sup_variance(kind, cauchy, alpha).map(drop))
                    }
                    Family::Moment => expect(format!("variance {tag}"), moment_parts(kind, cauchy).map(drop)),
                    Family::Integral => expect(
                        format!("variance {tag}"),
                        asymptotics::asymptotic_variance(kind, cauchy, alpha).map(drop),
                    ),
                }
                if kind.family() != Family::Supremum {
                    expect(format!("population {tag}"), population::limit(kind, &alt, alpha, 0.1).map(drop));
                }
            }
        }
    }
    let ok = leaks.is_empty();
    let mut detail = format!("{probes} requests");
    if ok {
        detail.push_str(", all not-applicable");
    } else {
        detail.push_str(&format!("; leaks: {}", leaks.join("; ")));
    }
    Ok((ok, detail))
}

fn ks_argmax_shape() -> Check {
    let at = |alpha| asymptotics::sup_variance(StatKind::Ks, SymmetricNull::Normal, alpha);
    let (low, high) = (at(0.1)?, at(0.4)?);
    Ok((
        low.argmax == 0.0 && high.argmax > 0.0,
        format!("argmax at alpha=0.1: {}, at alpha=0.4: {:.4}", low.argmax, high.argmax),
    ))
}

fn size_calibration(suite: Suite, seed: u64) -> Check {
    const N: usize = 100;
    const REPS: usize = 10_000;
    let kinds: Vec<StatKind> = match suite {
        Suite::Full => StatKind::battery(),
        Suite::Quick => vec![StatKind::S, StatKind::W, StatKind::Ks, StatKind::NaK(3), StatKind::SqrtB1],
    };
    let (mut checked, mut worst, mut bad) = (0usize, 0.0f64, Vec::new());
    for (ni, &null) in SymmetricNull::ALL.iter().enumerate() {
        for (ai, &alpha) in [0.0, 0.25, 0.5].iter().enumerate() {
            let mut specs = Vec::new();
            for &kind in &kinds {
                let spec = StatisticSpec::new(kind, alpha)?;
                if kind.family() == Family::Moment && alpha > 0.0 {
                    continue;
                }
                if montecarlo::check_applicable(&spec, null).is_ok() {
                    specs.push(spec);
                }
            }
            if specs.is_empty() {
                continue;
            }
            let cfg = McConfig::new(N, REPS, seed.wrapping_add(100 * ni as u64 + ai as u64), 0.05)?;
            let rates = montecarlo::rejection_rates(&specs, null, &Model::Null(null), &cfg)?;
            for (spec, r) in specs.iter().zip(&rates) {
                checked += 1;
                let gap = (r.rate - 0.05).abs();
                worst = worst.max(gap);
                if gap > 0.01 {
                    bad.push(format!("{spec} {null}: {:.4}", r.rate));
                }
            }
        }
    }
    let mut detail = format!("{checked} tests, worst |size - 0.05| = {worst:.4}");
    if !bad.is_empty() {
        detail.push_str(&format!("; outside 0.05 +/- 0.01: {}", bad.join(", ")));
    }
    Ok((bad.is_empty(), detail))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_criteria_run() {
        for id in [3, 6, 9] {
            let o = run(id, Suite::Quick, 1);
            assert!(!o.detail.is_empty());
            assert!(o.to_string().contains(&format!("criterion  {id}")));
        }
        assert!(run(6, Suite::Quick, 1).passed);
        assert!(run(9, Suite::Quick, 1).passed);
        assert!(!run(11, Suite::Quick, 1).passed);
    }

    #[test]
    fn suite_names() {
        assert_eq!("quick".parse::<Suite>().unwrap(), Suite::Quick);
        assert_eq!("FULL".parse::<Suite>().unwrap(), Suite::Full);
        assert!("medium".parse::<Suite>().is_err());
    }
}
