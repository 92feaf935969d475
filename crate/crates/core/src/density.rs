//! Target densities on bounded intervals and the integral functionals the
//! risk computations and checks need.
//!
//! New densities plug in through the [`Density`] trait; the catalog is
//! addressable by string id through [`lookup`].

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::histogram::HistogramDensity;
use crate::quadrature::{self, Point, Tolerance};
use crate::rng::UniformStream;
use crate::{Error, Result};

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::domain(format!("invalid support [{lo}, {hi}]")))
        }
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// A probability density with respect to Lebesgue measure on its support.
pub trait Density: Send + Sync + fmt::Debug {
    fn id(&self) -> &str;
    fn description(&self) -> &str;
    fn support(&self) -> Support;
    fn pdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;

    /// Evaluates the pdf given the exact distances to both support ends.
    /// Densities that vanish or blow up at an end should override this so
    /// quadrature near the edges does not lose the offset to rounding.
    fn pdf_edge(&self, x: f64, _from_lo: f64, _from_hi: f64) -> f64 {
        self.pdf(x)
    }

    /// Inverse cdf; defaults to bisection.
    fn quantile(&self, u: f64) -> f64 {
        invert_cdf(|x| self.cdf(x), self.support(), u)
    }

    /// Positive infimum of the pdf on the support, when there is one.
    fn lower_bound(&self) -> Option<f64> {
        None
    }

    /// Interior points where the pdf is not smooth.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Inverts a continuous cdf by bisection to an absolute width of 1e-12.
pub fn invert_cdf(cdf: impl Fn(f64) -> f64, support: Support, u: f64) -> f64 {
    let (mut lo, mut hi) = (support.lo, support.hi);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug)]
struct Uniform;

impl Density for Uniform {
    fn id(&self) -> &str {
        "uniform"
    }
    fn description(&self) -> &str {
        "uniform on [0,1]"
    }
    fn support(&self) -> Support {
        Support::unit()
    }
    fn pdf(&self, _x: f64) -> f64 {
        1.0
    }
    fn cdf(&self, x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }
    fn quantile(&self, u: f64) -> f64 {
        u
    }
    fn lower_bound(&self) -> Option<f64> {
        Some(1.0)
    }
}

#[derive(Debug)]
struct Triangle;

impl Density for Triangle {
    fn id(&self) -> &str {
        "triangle"
    }
    fn description(&self) -> &str {
        "isosceles triangle 1-|x| on [-1,1]"
    }
    fn support(&self) -> Support {
        Support { lo: -1.0, hi: 1.0 }
    }
    fn pdf(&self, x: f64) -> f64 {
        (1.0 - x.abs()).max(0.0)
    }
    fn pdf_edge(&self, x: f64, from_lo: f64, from_hi: f64) -> f64 {
        if x < 0.0 {
            from_lo.min(1.0)
        } else {
            from_hi.min(1.0)
        }
    }
    fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(-1.0, 1.0);
        if x < 0.0 {
            0.5 * (1.0 + x) * (1.0 + x)
        } else {
            1.0 - 0.5 * (1.0 - x) * (1.0 - x)
        }
    }
    fn quantile(&self, u: f64) -> f64 {
        if u < 0.5 {
            -1.0 + (2.0 * u).sqrt()
        } else {
            1.0 - (2.0 * (1.0 - u)).sqrt()
        }
    }
    fn kinks(&self) -> Vec<f64> {
        vec![0.0]
    }
}

#[derive(Debug)]
struct Beta22;

impl Density for Beta22 {
    fn id(&self) -> &str {
        "beta22"
    }
    fn description(&self) -> &str {
        "Beta(2,2), 6x(1-x) on [0,1]"
    }
    fn support(&self) -> Support {
        Support::unit()
    }
    fn pdf(&self, x: f64) -> f64 {
        6.0 * x * (1.0 - x)
    }
    fn pdf_edge(&self, _x: f64, from_lo: f64, from_hi: f64) -> f64 {
        6.0 * from_lo * from_hi
    }
    fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        x * x * (3.0 - 2.0 * x)
    }
    fn quantile(&self, u: f64) -> f64 {
        // trigonometric root of the cubic x²(3 - 2x) = u lying in [0, 1]
        let t = ((1.0 - 2.0 * u).acos() + 4.0 * std::f64::consts::PI) / 3.0;
        (0.5 + t.cos()).clamp(0.0, 1.0)
    }
}

/// Logarithmic singularities at both ends: `-(ln x + ln(1-x))/2`.
#[derive(Debug)]
struct BilogPeak;

impl Density for BilogPeak {
    fn id(&self) -> &str {
        "bilog_peak"
    }
    fn description(&self) -> &str {
        "bilogarithmic peak -(ln x + ln(1-x))/2 on [0,1]"
    }
    fn support(&self) -> Support {
        Support::unit()
    }
    fn pdf(&self, x: f64) -> f64 {
        -0.5 * (x.ln() + (1.0 - x).ln())
    }
    fn pdf_edge(&self, _x: f64, from_lo: f64, from_hi: f64) -> f64 {
        -0.5 * (from_lo.ln() + from_hi.ln())
    }
    fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let xlnx = |t: f64| if t > 0.0 { t * t.ln() } else { 0.0 };
        (0.5 * (2.0 * x - xlnx(x) + xlnx(1.0 - x))).clamp(0.0, 1.0)
    }
    fn lower_bound(&self) -> Option<f64> {
        Some(std::f64::consts::LN_2)
    }
}

/// `1/(2√x)` on `[0,1]`, unbounded at the origin.
#[derive(Debug)]
struct InfinitePeak;

impl Density for InfinitePeak {
    fn id(&self) -> &str {
        "inf_peak"
    }
    fn description(&self) -> &str {
        "infinite peak 1/(2 sqrt x) on [0,1]"
    }
    fn support(&self) -> Support {
        Support::unit()
    }
    fn pdf(&self, x: f64) -> f64 {
        0.5 / x.sqrt()
    }
    fn pdf_edge(&self, _x: f64, from_lo: f64, _from_hi: f64) -> f64 {
        0.5 / from_lo.sqrt()
    }
    fn cdf(&self, x: f64) -> f64 {
        x.clamp(0.0, 1.0).sqrt()
    }
    fn quantile(&self, u: f64) -> f64 {
        u * u
    }
    fn lower_bound(&self) -> Option<f64> {
        Some(0.5)
    }
}

#[derive(Debug)]
struct Tilted;

impl Density for Tilted {
    fn id(&self) -> &str {
        "tilted"
    }
    fn description(&self) -> &str {
        "tilted uniform 0.5+x on [0,1]"
    }
    fn support(&self) -> Support {
        Support::unit()
    }
    fn pdf(&self, x: f64) -> f64 {
        0.5 + x
    }
    fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        0.5 * x + 0.5 * x * x
    }
    fn quantile(&self, u: f64) -> f64 {
        (-0.5 + (0.25 + 2.0 * u).sqrt()).clamp(0.0, 1.0)
    }
    fn lower_bound(&self) -> Option<f64> {
        Some(0.5)
    }
}

/// Ids of every catalog density.
pub const CATALOG_IDS: [&str; 6] = ["uniform", "triangle", "beta22", "bilog_peak", "inf_peak", "tilted"];

/// The four densities of the reference benchmark.
pub const BENCHMARK_IDS: [&str; 4] = ["triangle", "bilog_peak", "beta22", "inf_peak"];

pub fn lookup(id: &str) -> Result<TargetDensity> {
    let shape: Arc<dyn Density> = match id {
        "uniform" => Arc::new(Uniform),
        "triangle" => Arc::new(Triangle),
        "beta22" => Arc::new(Beta22),
        "bilog_peak" => Arc::new(BilogPeak),
        "inf_peak" => Arc::new(InfinitePeak),
        "tilted" => Arc::new(Tilted),
        other => {
            return Err(Error::domain(format!(
                "unknown density '{other}' (known: {})",
                CATALOG_IDS.join(", ")
            )))
        }
    };
    Ok(TargetDensity::new(shape))
}

pub fn catalog() -> Vec<TargetDensity> {
    CATALOG_IDS
        .iter()
        .map(|id| lookup(id).expect("catalog ids are registered"))
        .collect()
}

/// Moment integrals `J = ∫ f^p ((ln f)² ∨ 1)` and `Q = ∫ ((ln f)² ∨ 1) / f^{p-1}`.
/// A divergent integral is stored as `+∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentConstants {
    pub p: f64,
    pub j: f64,
    pub q: f64,
}

impl MomentConstants {
    pub fn j_finite(&self) -> bool {
        self.j.is_finite()
    }

    pub fn q_finite(&self) -> bool {
        self.q.is_finite()
    }
}

/// Quadrature settings for density functionals.
const ENTROPY_TOL: Tolerance = Tolerance {
    abs: 1e-11,
    rel: 1e-12,
    max_intervals: 4000,
};
const MOMENT_TOL: Tolerance = Tolerance {
    abs: 1e-9,
    rel: 1e-7,
    max_intervals: 4000,
};

fn log_sq_or_one(f: f64) -> f64 {
    let l = f.ln();
    (l * l).max(1.0)
}

/// A target density together with cached functionals.
#[derive(Clone)]
pub struct TargetDensity {
    shape: Arc<dyn Density>,
    entropy: Arc<OnceLock<std::result::Result<f64, String>>>,
}

impl fmt::Debug for TargetDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetDensity")
            .field("id", &self.id())
            .field("support", &self.support())
            .finish()
    }
}

impl TargetDensity {
    pub fn new(shape: Arc<dyn Density>) -> Self {
        Self {
            shape,
            entropy: Arc::new(OnceLock::new()),
        }
    }

    pub fn id(&self) -> &str {
        self.shape.id()
    }

    pub fn description(&self) -> &str {
        self.shape.description()
    }

    pub fn support(&self) -> Support {
        self.shape.support()
    }

    pub fn lower_bound(&self) -> Option<f64> {
        self.shape.lower_bound()
    }

    pub fn shape(&self) -> &dyn Density {
        self.shape.as_ref()
    }

    pub fn pdf_at(&self, x: f64) -> Result<f64> {
        if !self.support().contains(x) {
            return Err(Error::domain(format!(
                "{x} is outside the support {} of '{}'",
                self.support(),
                self.id()
            )));
        }
        Ok(self.shape.pdf(x))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.shape.cdf(x)
    }

    /// `P([x, y]) = cdf(y) - cdf(x)`.
    pub fn cell_probability(&self, x: f64, y: f64) -> Result<f64> {
        let s = self.support();
        if !(s.contains(x) && s.contains(y)) || x > y {
            return Err(Error::domain(format!(
                "interval [{x}, {y}] is inverted or leaves the support {s}"
            )));
        }
        Ok((self.shape.cdf(y) - self.shape.cdf(x)).max(0.0))
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.shape.quantile(u)
    }

    /// Breakpoints splitting the support at the density's kinks.
    fn pieces(&self) -> Vec<f64> {
        let s = self.support();
        let mut b = vec![s.lo];
        b.extend(self.shape.kinks().into_iter().filter(|&k| k > s.lo && k < s.hi));
        b.push(s.hi);
        b
    }

    /// Integrates `g(pdf(x))` over the support with edge-aware evaluation.
    fn integrate_of_pdf(&self, g: impl Fn(f64) -> f64, tol: Tolerance) -> Result<f64> {
        let breaks = self.pieces();
        let s = self.support();
        let last = breaks.len() - 2;
        quadrature::integrate_pieces(
            |i, p| {
                let from_lo = if i == 0 { p.from_lo } else { p.x - s.lo };
                let from_hi = if i == last { p.from_hi } else { s.hi - p.x };
                g(self.shape.pdf_edge(p.x, from_lo, from_hi))
            },
            &breaks,
            tol,
        )
        .map(|r| r.value)
    }

    /// `∫ f* ln f* dμ`, computed once and cached.
    pub fn entropy_term(&self) -> Result<f64> {
        self.entropy
            .get_or_init(|| {
                self.integrate_of_pdf(|f| if f > 0.0 { f * f.ln() } else { 0.0 }, ENTROPY_TOL)
                    .map_err(|e| format!("entropy of '{}': {e}", self.id()))
            })
            .clone()
            .map_err(Error::Diverged)
    }

    /// Total mass by quadrature; used to validate catalog entries.
    pub fn mass(&self) -> Result<f64> {
        self.integrate_of_pdf(|f| f, ENTROPY_TOL)
    }

    pub fn moment_constants(&self, p: f64) -> Result<MomentConstants> {
        if !(p > 1.0) {
            return Err(Error::domain(format!("moment order p must exceed 1, got {p}")));
        }
        let j = self
            .integrate_of_pdf(|f| if f > 0.0 { f.powf(p) * log_sq_or_one(f) } else { 0.0 }, MOMENT_TOL)
            .unwrap_or(f64::INFINITY);
        let q = self
            .integrate_of_pdf(|f| log_sq_or_one(f) / f.powf(p - 1.0), MOMENT_TOL)
            .unwrap_or(f64::INFINITY);
        Ok(MomentConstants { p, j, q })
    }

    /// Integrates `g(f*(x), f(x))` over the support, cell by cell, where `f`
    /// is a histogram on the same support.
    pub fn integrate_against(
        &self,
        hist: &HistogramDensity,
        g: impl Fn(f64, f64) -> f64,
    ) -> Result<f64> {
        let s = self.support();
        if hist.model().support() != s {
            return Err(Error::domain(format!(
                "histogram support {} differs from target support {s}",
                hist.model().support()
            )));
        }
        let kinks = self.shape.kinks();
        let mut total = 0.0;
        for (i, (&h, w)) in hist
            .heights()
            .iter()
            .zip(hist.model().breakpoints().windows(2))
            .enumerate()
        {
            let mut breaks = vec![w[0]];
            breaks.extend(kinks.iter().copied().filter(|&k| k > w[0] && k < w[1]));
            breaks.push(w[1]);
            let first_cell = i == 0;
            let last_cell = i == hist.heights().len() - 1;
            let last_piece = breaks.len() - 2;
            let part = quadrature::integrate_pieces(
                |j, p: Point| {
                    let from_lo = if first_cell && j == 0 { p.from_lo } else { p.x - s.lo };
                    let from_hi = if last_cell && j == last_piece { p.from_hi } else { s.hi - p.x };
                    g(self.shape.pdf_edge(p.x, from_lo, from_hi), h)
                },
                &breaks,
                Tolerance::new(1e-11, 1e-10),
            )?;
            total += part.value;
        }
        Ok(total)
    }

    /// Variance proxies `v = ∫ (f ∨ f*)(ln(f/f*))²` and
    /// `w_r = ∫ ((f*^{r+1}/f^r) ∨ f*)(ln(f/f*))²`.
    pub fn variance_proxies(&self, f: &HistogramDensity, r: f64) -> Result<(f64, f64)> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("r must be positive, got {r}")));
        }
        if let Some(i) = f.heights().iter().position(|&h| !(h > 0.0)) {
            return Err(Error::domain(format!("histogram has a zero-height cell at index {i}")));
        }
        let v = self.integrate_against(f, |fs, h| {
            if fs == 0.0 {
                return 0.0;
            }
            let l = (h / fs).ln();
            h.max(fs) * l * l
        })?;
        let w = self.integrate_against(f, |fs, h| {
            if fs == 0.0 {
                return 0.0;
            }
            let l = (h / fs).ln();
            (fs * (fs / h).powf(r)).max(fs) * l * l
        })?;
        Ok((v, w))
    }
}

/// Draws `n` i.i.d. samples by inverse cdf from the seeded stream.
/// The output for `(seed, n)` is a prefix of the output for `(seed, n + k)`.
pub fn draw_samples(target: &TargetDensity, seed: u64, n: usize) -> Vec<f64> {
    let mut stream = UniformStream::new(seed);
    let s = target.support();
    (0..n)
        .map(|_| target.quantile(stream.next_uniform()).clamp(s.lo, s.hi))
        .collect()
}
