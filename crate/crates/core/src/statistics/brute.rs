//! Enumeration oracle: every statistic evaluated by visiting all subsets,
//! literally as the defining sums are written.

use itertools::Itertools;

use super::{
    candidates, check_order, ratio, sorted_copy, sup_count, CenteredSample, Family, Side, StatKind, StatisticSpec,
    StatisticValue,
};
use crate::error::{Error, Result};

/// Largest sample accepted by [`brute_force_u`].
pub const BRUTE_FORCE_LIMIT: usize = 14;

/// Evaluate a U-type statistic by exhaustive enumeration (`n <= 14`).
pub fn brute_force_u(spec: &StatisticSpec, sample: &[f64]) -> Result<StatisticValue> {
    let kind = spec.kind;
    kind.validate()?;
    if kind.family() == Family::Moment {
        return Err(Error::Domain(format!("{kind} is not a U-statistic")));
    }
    let n = sample.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    check_order(kind, n)?;
    let centered = CenteredSample::from_sorted(&sorted_copy(sample)?, spec.trim)?;
    let y = centered.values();
    let idx: Vec<usize> = (0..n).collect();

    let subsets = |m: usize| idx.iter().copied().combinations(m);
    let lt = |z: f64, t: f64, side: Side| match side {
        Side::At => z.abs() < t,
        Side::RightOf => z.abs() <= t,
    };
    let ind = |b: bool| b as i128;

    // One kernel term of a threshold family at threshold t.
    let term = |subset: &[usize], t: f64, side: Side| -> i128 {
        match kind {
            StatKind::BhI | StatKind::BhK => {
                let (u, v) = (y[subset[0]], y[subset[1]]);
                ind(lt(u, t, side)) + ind(lt(v, t, side)) - 2 * ind(lt(u.max(v), t, side))
            }
            StatKind::NaI(_) | StatKind::NaK(_) => {
                let vals = subset.iter().map(|&i| y[i]);
                let (lo, hi) = vals.minmax().into_option().expect("nonempty subset");
                ind(lt(lo, t, side)) - ind(lt(hi, t, side))
            }
            StatKind::MoI(k) | StatKind::MoK(k) => {
                let mut vals: Vec<f64> = subset.iter().map(|&i| y[i]).collect();
                vals.sort_by(f64::total_cmp);
                let k = k as usize;
                ind(lt(vals[k - 1], t, side)) - ind(lt(vals[k], t, side))
            }
            _ => unreachable!(),
        }
    };

    match kind {
        StatKind::S => {
            let pos = y.iter().map(|&v| ind(v > 0.0)).sum::<i128>();
            Ok(plain(ratio(2 * pos - n as i128, 2 * n as i128)))
        }
        StatKind::W => {
            let pos: i128 = subsets(2).map(|p| ind(y[p[0]] + y[p[1]] > 0.0)).sum();
            let pairs = (n * (n - 1) / 2) as i128;
            Ok(plain(ratio(2 * pos - pairs, 2 * pairs)))
        }
        StatKind::Ks => {
            let cands = candidates(y);
            let (best, arg) = sup_count(&cands, true, |c, side| {
                let mut d = -(n as i128);
                for &v in y {
                    d += ind(v <= c);
                    d += match side {
                        Side::At => ind(v <= -c),
                        Side::RightOf => ind(v < -c),
                    };
                }
                Ok(d)
            })?;
            Ok(StatisticValue {
                value: ratio(best, n as i128),
                sup_argument: Some(arg),
            })
        }
        StatKind::BhI | StatKind::NaI(_) | StatKind::MoI(_) => {
            let m = subset_size(kind);
            let mut total = 0i128;
            let mut terms = 0i128;
            for &l in &idx {
                let t = y[l].abs();
                for s in subsets(m) {
                    total += term(&s, t, Side::At);
                    terms += 1;
                }
            }
            if matches!(kind, StatKind::BhI) {
                terms *= 2;
            }
            Ok(plain(ratio(total, terms)))
        }
        StatKind::BhK | StatKind::NaK(_) | StatKind::MoK(_) => {
            let m = subset_size(kind);
            let mut terms = subsets(m).count() as i128;
            if matches!(kind, StatKind::BhK) {
                terms *= 2;
            }
            let cands = candidates(y);
            let (best, arg) = sup_count(&cands, false, |c, side| Ok(subsets(m).map(|s| term(&s, c, side)).sum()))?;
            Ok(StatisticValue {
                value: ratio(best, terms),
                sup_argument: Some(arg),
            })
        }
        _ => unreachable!(),
    }
}

fn subset_size(kind: StatKind) -> usize {
    match kind {
        StatKind::BhI | StatKind::BhK => 2,
        StatKind::NaI(k) | StatKind::NaK(k) => k as usize,
        StatKind::MoI(k) | StatKind::MoK(k) => 2 * k as usize,
        _ => 0,
    }
}

fn plain(value: f64) -> StatisticValue {
    StatisticValue {
        value,
        sup_argument: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{sample_null, SymmetricNull};
    use crate::statistics::evaluate;

    #[test]
    fn refuses_large_samples() {
        let spec = StatisticSpec::new(StatKind::W, 0.0).unwrap();
        let xs: Vec<f64> = (0..15).map(|i| i as f64).collect();
        assert!(matches!(brute_force_u(&spec, &xs), Err(Error::TooLarge { .. })));
        let cm = StatisticSpec::new(StatKind::Cm, 0.0).unwrap();
        assert!(brute_force_u(&cm, &xs[..5]).is_err());
    }

    #[test]
    fn hand_enumeration_wilcoxon() {
        let spec = StatisticSpec::new(StatKind::W, 0.0).unwrap();
        let v = brute_force_u(&spec, &[1.0, 2.0, 3.0]).unwrap().value;
        assert!((v + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn na2_and_mo1_coincide_by_enumeration() {
        for seed in 0..200u64 {
            let xs = sample_null(SymmetricNull::Logistic, 8, seed).unwrap();
            for (a, b) in [(StatKind::NaI(2), StatKind::MoI(1)), (StatKind::NaK(2), StatKind::MoK(1))] {
                let alpha = (seed % 6) as f64 / 10.0;
                let va = brute_force_u(&StatisticSpec::new(a, alpha).unwrap(), &xs).unwrap();
                let vb = brute_force_u(&StatisticSpec::new(b, alpha).unwrap(), &xs).unwrap();
                assert_eq!(va, vb);
            }
            let mo = brute_force_u(&StatisticSpec::new(StatKind::MoK(1), 0.3).unwrap(), &xs).unwrap();
            assert!(mo.value >= 0.0);
        }
    }

    #[test]
    fn counting_matches_enumeration_including_center_ties() {
        // Odd n with median centering puts one observation exactly at the center.
        let xs = [0.7, -1.3, 2.2, 0.1, -0.4, 1.9, -2.6];
        for kind in StatKind::battery().into_iter().filter(|k| k.family() != Family::Moment) {
            if kind.kernel_order() > xs.len() {
                continue;
            }
            let spec = StatisticSpec::new(kind, 0.5).unwrap();
            assert_eq!(brute_force_u(&spec, &xs).unwrap(), evaluate(&spec, &xs).unwrap(), "{kind}");
        }
    }

    #[test]
    fn counting_matches_enumeration_with_duplicates() {
        let xs = [1.0, 1.0, 2.0, 3.0, 3.0, 5.0, -1.0, 0.0, 2.0];
        for kind in StatKind::battery().into_iter().filter(|k| k.family() != Family::Moment) {
            for alpha in [0.0, 0.25, 0.5] {
                let spec = StatisticSpec::new(kind, alpha).unwrap();
                assert_eq!(brute_force_u(&spec, &xs).unwrap(), evaluate(&spec, &xs).unwrap(), "{kind} {alpha}");
            }
        }
    }
}
