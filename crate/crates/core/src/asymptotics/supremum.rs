use serde::{Deserialize, Serialize};

/// A maximum over `t >= 0` and the threshold attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupValue {
    pub value: f64,
    pub argmax: f64,
}

/// Number of log-spaced grid points in the coarse search.
pub const SEARCH_GRID: usize = 512;

/// Maximize `f` over `[0, upper]`.
///
/// `t = 0` and [`SEARCH_GRID`] log-spaced points in `[1e-6 upper, upper]` are
/// scanned; the best bracket is then refined by golden-section search. Ties
/// keep the smallest `t`, so a maximum at the origin is reported as exactly 0;
/// values within a relative `1e-12` count as ties.
pub fn maximize(f: impl Fn(f64) -> f64, upper: f64) -> SupValue {
    let lower = upper * 1e-6;
    let step = (upper / lower).ln() / (SEARCH_GRID - 1) as f64;
    let ts: Vec<f64> = std::iter::once(0.0)
        .chain((0..SEARCH_GRID).map(|i| lower * (step * i as f64).exp()))
        .collect();
    let vals: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let mut best = 0;
    for i in 1..ts.len() {
        if exceeds(vals[i], vals[best]) {
            best = i;
        }
    }
    let lo = ts[best.saturating_sub(1)];
    let hi = ts[(best + 1).min(ts.len() - 1)];
    let (t, v) = golden(&f, lo, hi);
    if exceeds(v, vals[best]) {
        SupValue { value: v, argmax: t }
    } else {
        SupValue {
            value: vals[best],
            argmax: ts[best],
        }
    }
}

fn exceeds(v: f64, best: f64) -> bool {
    v > best + 1e-12 * best.abs().max(1e-300)
}

fn golden(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a <= 1e-10 * (1.0 + b.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
