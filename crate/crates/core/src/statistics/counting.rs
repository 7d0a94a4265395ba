//! Counting path: subset counts from binomial identities on the sorted,
//! centered sample. Cost is `O(n log n)` per statistic.

use super::{candidates, ratio, sup_count, Side, StatKind, StatisticValue};
use crate::error::{Error, Result};

/// Threshold counts for a sorted centered sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountingTables {
    /// `#{y <= -t}`
    pub a: usize,
    /// `#{y < t}`
    pub b: usize,
}

/// Counts `a = #{y <= -t}` and `b = #{y < t}` on sorted input.
///
/// For `t > 0` the number of `k`-subsets whose minimum lies in `(-t, t)` is
/// `C(n - a, k) - C(n - b, k)` and the number whose maximum lies there is
/// `C(b, k) - C(a, k)`.
pub fn counting_tables(centered: &[f64], t: f64) -> CountingTables {
    CountingTables {
        a: centered.partition_point(|&y| y <= -t),
        b: centered.partition_point(|&y| y < t),
    }
}

/// Counts for the right limit at `t`: `#{y < -t}` and `#{y <= t}`.
fn right_tables(centered: &[f64], t: f64) -> CountingTables {
    CountingTables {
        a: centered.partition_point(|&y| y < -t),
        b: centered.partition_point(|&y| y <= t),
    }
}

fn tables(centered: &[f64], t: f64, side: Side) -> CountingTables {
    match side {
        Side::At => counting_tables(centered, t),
        Side::RightOf => right_tables(centered, t),
    }
}

/// `C(j, r)` for `j <= n`, `r <= r_max`, built by Pascal's rule.
pub(crate) struct Binomials {
    r_max: usize,
    table: Vec<i128>,
}

impl Binomials {
    pub(crate) fn new(n: usize, r_max: usize) -> Result<Self> {
        let width = r_max + 1;
        let mut table = vec![0i128; (n + 1) * width];
        for j in 0..=n {
            table[j * width] = 1;
            for r in 1..=r_max.min(j) {
                let v = table[(j - 1) * width + r - 1]
                    .checked_add(table[(j - 1) * width + r])
                    .ok_or(Error::CountOverflow { n, k: r_max })?;
                table[j * width + r] = v;
            }
        }
        Ok(Self { r_max, table })
    }

    #[inline]
    pub(crate) fn get(&self, j: usize, r: usize) -> i128 {
        debug_assert!(r <= self.r_max);
        self.table[j * (self.r_max + 1) + r]
    }
}

fn overflow(n: usize, k: usize) -> Error {
    Error::CountOverflow { n, k }
}

/// Kernel counts of the threshold families at one threshold.
struct Kernel<'a> {
    kind: StatKind,
    n: usize,
    binom: &'a Binomials,
}

impl Kernel<'_> {
    /// Count for threshold family member `t`, from the threshold tables.
    ///
    /// * NA(k): subsets with `|min| < t` minus subsets with `|max| < t`.
    /// * MO(k): 2k-subsets with `|Y_(k)| < t` minus those with `|Y_(k+1)| < t`,
    ///   which telescopes to `C(b,k) C(n-b,k) - C(a,k) C(n-a,k)`.
    /// * BH, doubled to stay integral: pairs contribute
    ///   `1{|y1|<t} + 1{|y2|<t} - 2 * 1{|max|<t}`.
    fn count(&self, ct: CountingTables) -> Result<i128> {
        let (n, a, b) = (self.n, ct.a, ct.b);
        let c = |j: usize, r: usize| self.binom.get(j, r);
        match self.kind {
            StatKind::NaI(k) | StatKind::NaK(k) => {
                let k = k as usize;
                Ok((c(n - a, k) - c(n - b, k)) - (c(b, k) - c(a, k)))
            }
            StatKind::MoI(k) | StatKind::MoK(k) => {
                let k = k as usize;
                let upper = c(b, k).checked_mul(c(n - b, k)).ok_or_else(|| overflow(n, 2 * k))?;
                let lower = c(a, k).checked_mul(c(n - a, k)).ok_or_else(|| overflow(n, 2 * k))?;
                Ok(upper - lower)
            }
            StatKind::BhI | StatKind::BhK => {
                let inside = (b - a) as i128;
                Ok((n as i128 - 1) * inside - 2 * (c(b, 2) - c(a, 2)))
            }
            other => unreachable!("{other} is not a threshold family"),
        }
    }

    fn subset_size(kind: StatKind) -> usize {
        match kind {
            StatKind::NaI(k) | StatKind::NaK(k) => k as usize,
            StatKind::MoI(k) | StatKind::MoK(k) => 2 * k as usize,
            StatKind::BhI | StatKind::BhK => 2,
            _ => 0,
        }
    }

    /// Number of kernel terms of the supremum family (BH doubled).
    fn denominator(&self) -> i128 {
        let m = Self::subset_size(self.kind);
        let d = self.binom.get(self.n, m);
        match self.kind {
            StatKind::BhI | StatKind::BhK => 2 * d,
            _ => d,
        }
    }
}

pub(super) fn evaluate(kind: StatKind, y: &[f64]) -> Result<StatisticValue> {
    let n = y.len();
    match kind {
        StatKind::S => {
            let pos = y.iter().filter(|&&v| v > 0.0).count() as i128;
            Ok(plain(ratio(2 * pos - n as i128, 2 * n as i128)))
        }
        StatKind::W => {
            let mut pos = 0i128;
            for (i, &yi) in y.iter().enumerate() {
                let rest = &y[i + 1..];
                pos += (rest.len() - rest.partition_point(|&yj| yj <= -yi)) as i128;
            }
            let pairs = (n * (n - 1) / 2) as i128;
            Ok(plain(ratio(2 * pos - pairs, 2 * pairs)))
        }
        StatKind::Ks => {
            let cands = candidates(y);
            let (best, arg) = sup_count(&cands, true, |c, side| {
                let le_pos = y.partition_point(|&v| v <= c);
                let le_neg = match side {
                    Side::At => y.partition_point(|&v| v <= -c),
                    Side::RightOf => y.partition_point(|&v| v < -c),
                };
                Ok(le_pos as i128 + le_neg as i128 - n as i128)
            })?;
            Ok(StatisticValue {
                value: ratio(best, n as i128),
                sup_argument: Some(arg),
            })
        }
        StatKind::BhI | StatKind::NaI(_) | StatKind::MoI(_) => {
            let binom = Binomials::new(n, Kernel::subset_size(kind))?;
            let kernel = Kernel { kind, n, binom: &binom };
            let mut total = 0i128;
            for &yl in y {
                let t = yl.abs();
                if t > 0.0 {
                    let v = kernel.count(counting_tables(y, t))?;
                    total = total.checked_add(v).ok_or_else(|| overflow(n, Kernel::subset_size(kind)))?;
                }
            }
            let denom = kernel
                .denominator()
                .checked_mul(n as i128)
                .ok_or_else(|| overflow(n, Kernel::subset_size(kind)))?;
            Ok(plain(ratio(total, denom)))
        }
        StatKind::BhK | StatKind::NaK(_) | StatKind::MoK(_) => {
            let binom = Binomials::new(n, Kernel::subset_size(kind))?;
            let kernel = Kernel { kind, n, binom: &binom };
            let cands = candidates(y);
            let (best, arg) = sup_count(&cands, false, |c, side| kernel.count(tables(y, c, side)))?;
            Ok(StatisticValue {
                value: ratio(best, kernel.denominator()),
                sup_argument: Some(arg),
            })
        }
        StatKind::Cm | StatKind::Gamma | StatKind::Mgg | StatKind::SqrtB1 => {
            Err(Error::Domain(format!("{kind} is not a counting statistic")))
        }
    }
}

/// Signed value of a supremum family member at the fixed threshold `t`.
pub(super) fn family_at(kind: StatKind, y: &[f64], t: f64) -> Result<f64> {
    let n = y.len();
    match kind {
        StatKind::Ks => {
            let d = y.partition_point(|&v| v <= t) as i128 + y.partition_point(|&v| v <= -t) as i128 - n as i128;
            Ok(ratio(d, n as i128))
        }
        StatKind::BhK | StatKind::NaK(_) | StatKind::MoK(_) => {
            let binom = Binomials::new(n, Kernel::subset_size(kind))?;
            let kernel = Kernel { kind, n, binom: &binom };
            Ok(ratio(kernel.count(counting_tables(y, t))?, kernel.denominator()))
        }
        other => Err(Error::Domain(format!("{other} is not a supremum family"))),
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

    #[test]
    fn table_examples() {
        let y = [-3.0, -1.0, 2.0];
        assert_eq!(counting_tables(&y, 2.5), CountingTables { a: 1, b: 3 });
        assert_eq!(counting_tables(&y, 1.0), CountingTables { a: 2, b: 2 });
    }

    #[test]
    fn binomials() {
        let b = Binomials::new(30, 6).unwrap();
        assert_eq!(b.get(30, 6), 593_775);
        assert_eq!(b.get(5, 6), 0);
        assert_eq!(b.get(0, 0), 1);
        assert_eq!(b.get(7, 3), 35);
    }
}
