//! Adaptive Gauss–Kronrod integration with square-root edge substitution.
//!
//! Each interval `[lo, hi]` is split at its midpoint and each half is mapped
//! as `x = lo + u²` (resp. `x = hi - u²`). The substitution absorbs the
//! `x^{-1/2}` and logarithmic endpoint singularities of the catalog
//! densities. The integrand receives the distance to both interval ends,
//! computed from `u²` directly, so that it can be evaluated accurately
//! arbitrarily close to an endpoint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

/// An abscissa with its exact offsets from the ends of the interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub from_lo: f64,
    pub from_hi: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 1e-10,
            max_intervals: 4000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

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
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Lo,
    Hi,
}

struct Segment {
    side: Side,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

struct Mapped<'a, F> {
    f: &'a F,
    lo: f64,
    hi: f64,
    width: f64,
}

impl<F: Fn(Point) -> f64> Mapped<'_, F> {
    fn eval(&self, side: Side, u: f64) -> Result<f64> {
        let t = u * u;
        let p = match side {
            Side::Lo => Point {
                x: self.lo + t,
                from_lo: t,
                from_hi: self.width - t,
            },
            Side::Hi => Point {
                x: self.hi - t,
                from_lo: self.width - t,
                from_hi: t,
            },
        };
        let v = (self.f)(p) * 2.0 * u;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Diverged(format!(
                "integrand is not finite at x = {} (offset {t:e})",
                p.x
            )))
        }
    }

    fn rule(&self, side: Side, a: f64, b: f64) -> Result<Segment> {
        let center = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let fc = self.eval(side, center)?;
        let mut gauss = fc * WG[3];
        let mut kronrod = fc * WGK[7];
        let mut res_abs = kronrod.abs();
        let mut fv = [(0.0, 0.0); 7];
        for (j, slot) in fv.iter_mut().enumerate() {
            let dx = half * XGK[j];
            let f1 = self.eval(side, center - dx)?;
            let f2 = self.eval(side, center + dx)?;
            *slot = (f1, f2);
            kronrod += WGK[j] * (f1 + f2);
            res_abs += WGK[j] * (f1.abs() + f2.abs());
            if j % 2 == 1 {
                gauss += WG[j / 2] * (f1 + f2);
            }
        }
        let mean = 0.5 * kronrod;
        let mut res_asc = WGK[7] * (fc - mean).abs();
        for (j, (f1, f2)) in fv.iter().enumerate() {
            res_asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
        }
        let value = kronrod * half;
        let res_abs = res_abs * half.abs();
        let res_asc = res_asc * half.abs();
        let mut error = ((kronrod - gauss) * half).abs();
        if res_asc != 0.0 && error != 0.0 {
            error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
        }
        if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            error = error.max(50.0 * f64::EPSILON * res_abs);
        }
        Ok(Segment {
            side,
            a,
            b,
            value,
            error,
        })
    }
}

/// Integrates `f` over `[lo, hi]`.
///
/// Fails with [`Error::Diverged`] when the tolerance is not reached within
/// `tol.max_intervals` subdivisions or when the integrand is not finite at
/// some node; both are how a divergent integral shows up.
pub fn integrate<F>(f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<Integral>
where
    F: Fn(Point) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::domain(format!("bad integration interval [{lo}, {hi}]")));
    }
    if hi == lo {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let width = hi - lo;
    let mapped = Mapped {
        f: &f,
        lo,
        hi,
        width,
    };
    let u_max = (0.5 * width).sqrt();
    let mut heap = BinaryHeap::new();
    heap.push(mapped.rule(Side::Lo, 0.0, u_max)?);
    heap.push(mapped.rule(Side::Hi, 0.0, u_max)?);

    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if error <= tol.abs.max(tol.rel * value.abs()) {
            return Ok(Integral {
                value,
                error,
                intervals: heap.len(),
            });
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Diverged(format!(
                "no convergence after {} intervals on [{lo}, {hi}]: value {value:e}, error {error:e}",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::Diverged(format!(
                "interval collapsed near x = {} with error {:e}",
                match worst.side {
                    Side::Lo => lo + worst.a * worst.a,
                    Side::Hi => hi - worst.a * worst.a,
                },
                worst.error
            )));
        }
        heap.push(mapped.rule(worst.side, worst.a, mid)?);
        heap.push(mapped.rule(worst.side, mid, worst.b)?);
    }
}

/// Integrates over consecutive pieces `[breaks[i], breaks[i+1]]`, so that
/// known kinks or singular points are always interval ends.
///
/// The integrand also receives the piece index.
pub fn integrate_pieces<F>(f: F, breaks: &[f64], tol: Tolerance) -> Result<Integral>
where
    F: Fn(usize, Point) -> f64,
{
    let pieces = breaks.len().saturating_sub(1).max(1);
    let piece_tol = Tolerance {
        abs: tol.abs / pieces as f64,
        ..tol
    };
    let mut total = Integral {
        value: 0.0,
        error: 0.0,
        intervals: 0,
    };
    for (i, w) in breaks.windows(2).enumerate() {
        let part = integrate(|p| f(i, p), w[0], w[1], piece_tol)?;
        total.value += part.value;
        total.error += part.error;
        total.intervals += part.intervals;
    }
    Ok(total)
}
