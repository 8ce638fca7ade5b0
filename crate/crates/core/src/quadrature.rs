//! Adaptive Gauss–Kronrod quadrature and iterated (tensor) integration over
//! regions described by nested coordinate intervals.
//!
//! A region is given by a `limits` callback: for a prefix `(y_0, …, y_{m-1})`
//! it returns the interval of `y_m` over which the integrand can be nonzero.
//! When the callback returns exact sections the iterated rule never integrates
//! across a boundary; when it returns supersets the integrand itself is
//! expected to vanish outside and the bisection localizes the jump.

use crate::par::map_indexed;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd-indexed Kronrod abscissae XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Maximum bisection depth per coordinate.
pub const MAX_DEPTH: u32 = 40;

/// Integral estimate with an error estimate and a convergence flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate {
        value: 0.0,
        error: 0.0,
        converged: true,
    };

    fn merge(self, other: Estimate) -> Estimate {
        Estimate {
            value: self.value + other.value,
            error: self.error + other.error,
            converged: self.converged && other.converged,
        }
    }
}

/// The 15 Kronrod abscissae of [a, b], in a fixed order.
fn nodes(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = [c; 15];
    for i in 0..7 {
        out[2 * i] = c - h * XGK[i];
        out[2 * i + 1] = c + h * XGK[i];
    }
    out
}

fn kronrod_rule(a: f64, b: f64, vals: &[Estimate; 15]) -> Estimate {
    let h = 0.5 * (b - a);
    let mut k = WGK[7] * vals[14].value;
    let mut g = WG[3] * vals[14].value;
    let mut inner_err = WGK[7] * vals[14].error;
    let mut converged = vals[14].converged;
    for i in 0..7 {
        let pair = vals[2 * i].value + vals[2 * i + 1].value;
        k += WGK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
        inner_err += WGK[i] * (vals[2 * i].error + vals[2 * i + 1].error);
        converged &= vals[2 * i].converged && vals[2 * i + 1].converged;
    }
    Estimate {
        value: k * h,
        error: ((k - g) * h).abs() + inner_err * h.abs(),
        converged,
    }
}

fn adapt<F>(f: &F, a: f64, b: f64, tol: f64, depth: u32, parallel: bool) -> Estimate
where
    F: Fn(f64) -> Estimate + Sync + Send,
{
    let xs = nodes(a, b);
    let vals: [Estimate; 15] = if parallel {
        map_indexed(15, |i| f(xs[i])).try_into().expect("15 nodes")
    } else {
        xs.map(f)
    };
    let est = kronrod_rule(a, b, &vals);
    if est.error <= tol || !est.error.is_finite() {
        return est;
    }
    if depth == 0 || (b - a).abs() <= 1e-14 * a.abs().max(b.abs()).max(1e-300) {
        return Estimate {
            converged: false,
            ..est
        };
    }
    let mid = 0.5 * (a + b);
    let left = adapt(f, a, mid, 0.5 * tol, depth - 1, parallel);
    let right = adapt(f, mid, b, 0.5 * tol, depth - 1, parallel);
    left.merge(right)
}

/// Adaptive integral of `f` over [a, b] to absolute tolerance `tol`.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64) -> Estimate
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    if a == b {
        return Estimate::ZERO;
    }
    let g = |x: f64| Estimate {
        value: f(x),
        error: 0.0,
        converged: true,
    };
    adapt(&g, a, b, tol, MAX_DEPTH, false)
}

/// Iterated adaptive integral over a `d`-dimensional region.
///
/// `limits(prefix)` returns the interval of coordinate `prefix.len()`, or
/// `None` when the section is empty. The outermost coordinate's nodes are
/// evaluated in parallel; summation order is fixed.
pub fn integrate_nested<L, F>(d: usize, limits: &L, integrand: &F, tol: f64) -> Estimate
where
    L: Fn(&[f64]) -> Option<(f64, f64)> + Sync + Send,
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let pieces = |p: &[f64]| limits(p).into_iter().collect::<Vec<_>>();
    integrate_nested_pieces(d, &pieces, integrand, tol)
}

/// Like [`integrate_nested`], but each section is a list of consecutive or
/// disjoint intervals. Splitting a section where the inner integral has a
/// kink (for instance where an excluded hole begins) keeps every piece smooth.
pub fn integrate_nested_pieces<L, F>(d: usize, limits: &L, integrand: &F, tol: f64) -> Estimate
where
    L: Fn(&[f64]) -> Vec<(f64, f64)> + Sync + Send,
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    assert!(d >= 1);
    nested_level(d, limits, integrand, tol, &[], true)
}

fn nested_level<L, F>(
    d: usize,
    limits: &L,
    integrand: &F,
    tol: f64,
    prefix: &[f64],
    parallel: bool,
) -> Estimate
where
    L: Fn(&[f64]) -> Vec<(f64, f64)> + Sync + Send,
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let pieces: Vec<(f64, f64)> = limits(prefix).into_iter().filter(|(a, b)| b > a).collect();
    let total: f64 = pieces.iter().map(|(a, b)| b - a).sum();
    let level = prefix.len();
    let mut out = Estimate::ZERO;
    for (a, b) in pieces {
        let share = tol * (b - a) / total;
        let inner_tol = 0.5 * share / (b - a);
        let f = |s: f64| {
            let mut p = Vec::with_capacity(d);
            p.extend_from_slice(prefix);
            p.push(s);
            if level + 1 == d {
                Estimate {
                    value: integrand(&p),
                    error: 0.0,
                    converged: true,
                }
            } else {
                nested_level(d, limits, integrand, inner_tol, &p, false)
            }
        };
        out = out.merge(adapt(&f, a, b, 0.5 * share, MAX_DEPTH, parallel));
    }
    out
}
