use symlab::asymptotics::{self, report};
use symlab::efficiency::{self, alpha_grid, index_curve, PointStatus};
use symlab::{AltKind, AlternativeFamily, Family, StatKind, StatisticSpec, SymmetricNull};

fn alternatives() -> Vec<AlternativeFamily> {
    SymmetricNull::ALL
        .iter()
        .flat_map(|&n| AltKind::ALL.map(|k| AlternativeFamily::new(k, n)))
        .collect()
}

#[test]
fn indices_are_finite_and_nonnegative() {
    let grid = alpha_grid(21);
    for alt in alternatives() {
        for kind in StatKind::battery() {
            let c = index_curve(kind, &alt, &grid).unwrap();
            for (i, s) in c.status.iter().enumerate() {
                if *s == PointStatus::Ok {
                    assert!(c.index[i].is_finite() && c.index[i] >= 0.0, "{kind} {}", alt.name());
                } else {
                    assert!(c.index[i].is_nan());
                }
            }
        }
    }
}

#[test]
fn positive_variances_up_to_045() {
    for null in SymmetricNull::ALL {
        for kind in StatKind::battery() {
            for i in 0..=9 {
                let alpha = 0.05 * i as f64;
                let alt = AlternativeFamily::contamination(null);
                match report(&StatisticSpec::new(kind, alpha).unwrap(), &alt) {
                    Ok(r) => assert!(r.sigma2 > 1e-4, "{kind} {null} {alpha}: {}", r.sigma2),
                    Err(e) => assert!(e.is_not_applicable()),
                }
            }
        }
    }
}

#[test]
fn moment_curves_are_flat() {
    let grid = alpha_grid(11);
    for kind in [StatKind::Cm, StatKind::SqrtB1] {
        let c = index_curve(kind, &AlternativeFamily::fernandez_steel(SymmetricNull::Logistic), &grid).unwrap();
        assert!(c.index.iter().all(|v| *v == c.index[0]));
    }
}

/// Variances of an integral statistic under the three nulls come closer
/// to each other at some interior trimming level than near the mean.
/// The Cauchy variance does not exist at 0, so the baseline is the first
/// positive grid point.
#[test]
fn null_variance_curves_approach_each_other() {
    let grid = alpha_grid(101);
    let spread = |kind, alpha| {
        let v: Vec<f64> = SymmetricNull::ALL
            .iter()
            .map(|&n| asymptotics::asymptotic_variance(kind, n, alpha).unwrap())
            .collect();
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        let min = v.iter().cloned().fold(f64::MAX, f64::min);
        (max - min) / max
    };
    for kind in StatKind::battery().into_iter().filter(|k| k.family() == Family::Integral) {
        let base = spread(kind, grid[1]);
        let best = grid[2..100].iter().map(|&a| spread(kind, a)).fold(f64::MAX, f64::min);
        assert!(best < base, "{kind}: {best} vs {base}");
    }
}

/// Under the normal null the largest index over the battery and the grid
/// belongs to sqrt(b1) or to W at alpha = 0.
#[test]
fn normal_leaders() {
    let grid = alpha_grid(21);
    for kind in AltKind::ALL {
        let alt = AlternativeFamily::new(kind, SymmetricNull::Normal);
        let mut best = (f64::MIN, String::new());
        for test in StatKind::battery() {
            let c = index_curve(test, &alt, &grid).unwrap();
            for (a, v) in c.grid.iter().zip(&c.index) {
                if *v > best.0 {
                    best = (*v, format!("{test}@{a}"));
                }
            }
        }
        assert!(best.1 == "SQRT_B1@0" || best.1 == "W@0", "{}: {}", alt.name(), best.1);
    }
}

#[test]
fn equivalence_report_groups() {
    let alt = AlternativeFamily::contamination(SymmetricNull::Normal);
    let r = efficiency::equivalence_report(&alt, 0.0).unwrap();
    let class = r.class_of("CM").unwrap();
    for id in ["GAMMA", "MGG", "S"] {
        assert!(class.iter().any(|t| t == id), "{class:?}");
    }
    let bh = r.class_of("BH_I").unwrap();
    assert!(!bh.iter().any(|t| t == "NA_I(4)"));
    let r = efficiency::equivalence_report(&AlternativeFamily::fernandez_steel(SymmetricNull::Cauchy), 0.3).unwrap();
    let k = r.class_of("BH_K").unwrap();
    for id in ["MO_K(1)", "NA_K(2)", "NA_K(3)"] {
        assert!(k.iter().any(|t| t == id), "{k:?}");
    }
    assert!(r.excluded.iter().any(|(t, why)| t == "CM" && why == "not-applicable"));
}
