//! Adaptive Gauss–Kronrod (G7/K15) quadrature for vector-valued integrands.
//!
//! All components share one set of nodes, so linear identities between
//! integrands (e.g. `∫(f+g) = ∫f + ∫g`) hold to rounding error in the
//! results.

use crate::scalar::{lit, Real};

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance<T> {
    pub rel: T,
    pub abs: T,
}

impl<T: Real> Tolerance<T> {
    pub fn new(rel: f64, abs: f64) -> Self {
        Self { rel: lit(rel), abs: lit(abs) }
    }
}

fn kronrod<T: Real, const N: usize, F>(f: &F, a: T, b: T) -> ([T; N], [T; N])
where
    F: Fn(T) -> [T; N],
{
    let half = (b - a) * lit(0.5);
    let mid = (a + b) * lit(0.5);
    let mut k = [T::zero(); N];
    let mut g = [T::zero(); N];
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let dx = half * lit(x);
        let wk: T = lit(w);
        let pts: &[T] = if i == 7 { &[T::zero()] } else { &[-dx, dx] };
        for &d in pts {
            let v = f(mid + d);
            for c in 0..N {
                k[c] += wk * v[c];
                if i % 2 == 1 {
                    g[c] += lit::<T>(WG[i / 2]) * v[c];
                }
            }
        }
    }
    let mut err = [T::zero(); N];
    for c in 0..N {
        k[c] *= half;
        g[c] *= half;
        err[c] = (k[c] - g[c]).abs();
    }
    (k, err)
}

fn recurse<T: Real, const N: usize, F>(
    f: &F,
    a: T,
    b: T,
    whole: [T; N],
    err: [T; N],
    tol: [T; N],
    depth: u32,
) -> [T; N]
where
    F: Fn(T) -> [T; N],
{
    if depth >= MAX_DEPTH || err.iter().zip(tol.iter()).all(|(e, t)| e <= t) {
        return whole;
    }
    let m = (a + b) * lit(0.5);
    let (l, el) = kronrod(f, a, m);
    let (r, er) = kronrod(f, m, b);
    let sub_tol = tol.map(|t| t * T::FRAC_1_SQRT_2());
    let l = recurse(f, a, m, l, el, sub_tol, depth + 1);
    let r = recurse(f, m, b, r, er, sub_tol, depth + 1);
    let mut out = [T::zero(); N];
    for c in 0..N {
        out[c] = l[c] + r[c];
    }
    out
}

/// Integrates every component of `f` over `[a, b]`.
///
/// Subdivision stops once each component's Kronrod–Gauss difference is
/// below `max(tol.abs, tol.rel·|I_c|)`, with `I_c` the first whole-interval
/// estimate of that component.
pub fn integrate<T: Real, const N: usize, F>(f: F, a: T, b: T, tol: Tolerance<T>) -> [T; N]
where
    F: Fn(T) -> [T; N],
{
    let (whole, err) = kronrod(&f, a, b);
    let target = whole.map(|v| tol.abs.max(tol.rel * v.abs()));
    recurse(&f, a, b, whole, err, target, 0)
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<T: Real, F>(f: F, a: T, b: T, tol: Tolerance<T>) -> T
where
    F: Fn(T) -> T,
{
    integrate(|x| [f(x)], a, b, tol)[0]
}
