//! Partitions, frequencies histograms, KL projections and the risks built
//! from cell probabilities.
//!
//! Cells are half-open `[t_i, t_{i+1})` except the last, which is closed.
//! The dimension of a model with `K` cells is `K - 1`.

use serde::{Deserialize, Serialize};

use crate::density::{Support, TargetDensity};
use crate::{Error, Result};

/// `0 ln 0 = 0`, `a ln(a/0) = +∞` for `a > 0`.
fn xlogx_over(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a * (a / b).ln()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramModel {
    breakpoints: Vec<f64>,
}

impl HistogramModel {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::domain("a partition needs at least two breakpoints"));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::domain("breakpoints must be finite"));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::domain(format!(
                "breakpoints must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { breakpoints })
    }

    /// `cells` equal-width cells over `support`.
    pub fn regular(support: Support, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::domain("a regular model needs at least one cell"));
        }
        let w = support.length() / cells as f64;
        let mut b: Vec<f64> = (0..cells).map(|i| support.lo + w * i as f64).collect();
        b.push(support.hi);
        Self::new(b)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn cells(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.cells() - 1
    }

    pub fn support(&self) -> Support {
        Support {
            lo: self.breakpoints[0],
            hi: *self.breakpoints.last().expect("at least two breakpoints"),
        }
    }

    pub fn cell_measure(&self, i: usize) -> f64 {
        self.breakpoints[i + 1] - self.breakpoints[i]
    }

    pub fn cell_measures(&self) -> Vec<f64> {
        self.breakpoints.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Index of the cell containing `x`, or `None` outside the support.
    pub fn cell_index(&self, x: f64) -> Option<usize> {
        if !self.support().contains(x) {
            return None;
        }
        let k = self.breakpoints.partition_point(|&b| b <= x);
        Some((k - 1).min(self.cells() - 1))
    }

    /// Per-cell sample counts.
    pub fn counts(&self, samples: &[f64]) -> Result<Vec<usize>> {
        let mut counts = vec![0usize; self.cells()];
        for &x in samples {
            let i = self.cell_index(x).ok_or_else(|| {
                Error::domain(format!("sample {x} is outside the support {}", self.support()))
            })?;
            counts[i] += 1;
        }
        Ok(counts)
    }

    /// Counts from samples already sorted in increasing order.
    pub fn counts_sorted(&self, sorted: &[f64]) -> Result<Vec<usize>> {
        let s = self.support();
        if let (Some(&first), Some(&last)) = (sorted.first(), sorted.last()) {
            if !s.contains(first) || !s.contains(last) {
                let bad = if s.contains(first) { last } else { first };
                return Err(Error::domain(format!("sample {bad} is outside the support {s}")));
            }
        }
        let inner = &self.breakpoints[1..self.cells()];
        let mut counts = Vec::with_capacity(self.cells());
        let mut start = 0;
        for &b in inner {
            let end = sorted.partition_point(|&x| x < b);
            counts.push(end - start);
            start = end;
        }
        counts.push(sorted.len() - start);
        Ok(counts)
    }

    /// `P(I)` for every cell.
    pub fn cell_probabilities(&self, target: &TargetDensity) -> Result<Vec<f64>> {
        self.check_support(target)?;
        let cdf: Vec<f64> = self.breakpoints.iter().map(|&b| target.cdf(b)).collect();
        Ok(cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect())
    }

    fn check_support(&self, target: &TargetDensity) -> Result<()> {
        if self.support() != target.support() {
            return Err(Error::domain(format!(
                "model support {} differs from target support {}",
                self.support(),
                target.support()
            )));
        }
        Ok(())
    }
}

/// A piecewise-constant density on a [`HistogramModel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramDensity {
    model: HistogramModel,
    heights: Vec<f64>,
}

impl HistogramDensity {
    pub fn new(model: HistogramModel, heights: Vec<f64>) -> Result<Self> {
        if heights.len() != model.cells() {
            return Err(Error::domain(format!(
                "{} heights for {} cells",
                heights.len(),
                model.cells()
            )));
        }
        if let Some(h) = heights.iter().find(|h| !(h.is_finite() && **h >= 0.0)) {
            return Err(Error::domain(format!("invalid height {h}")));
        }
        let mass: f64 = heights.iter().zip(model.cell_measures()).map(|(h, m)| h * m).sum();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("heights integrate to {mass}, not 1")));
        }
        Ok(Self { model, heights })
    }

    /// Skips the unit-mass check; used to build corrupted inputs for
    /// negative controls.
    pub(crate) fn new_unchecked(model: HistogramModel, heights: Vec<f64>) -> Self {
        Self { model, heights }
    }

    /// Heights `p_I / μ(I)` from cell masses summing to one.
    pub fn from_masses(model: HistogramModel, masses: &[f64]) -> Result<Self> {
        let heights = masses
            .iter()
            .zip(model.cell_measures())
            .map(|(p, m)| p / m)
            .collect();
        Self::new(model, heights)
    }

    pub fn model(&self) -> &HistogramModel {
        &self.model
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    /// Value at `x`; zero outside the support.
    pub fn eval(&self, x: f64) -> f64 {
        self.model.cell_index(x).map_or(0.0, |i| self.heights[i])
    }

    pub fn cell_masses(&self) -> Vec<f64> {
        self.heights
            .iter()
            .zip(self.model.cell_measures())
            .map(|(h, m)| h * m)
            .collect()
    }
}

/// The frequencies histogram: heights `P_n(I) / μ(I)`.
pub fn fit_mle(model: &HistogramModel, samples: &[f64]) -> Result<HistogramDensity> {
    if samples.is_empty() {
        return Err(Error::domain("cannot fit a histogram to an empty sample"));
    }
    let counts = model.counts(samples)?;
    let n = samples.len() as f64;
    let masses: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    HistogramDensity::from_masses(model.clone(), &masses)
}

/// The KL projection of `target` onto `model`: heights `P(I) / μ(I)`.
pub fn project_target(model: &HistogramModel, target: &TargetDensity) -> Result<HistogramDensity> {
    let probs = model.cell_probabilities(target)?;
    HistogramDensity::from_masses(model.clone(), &probs)
}

/// `P_n γ(f) = -(1/n) Σ ln f(ξ_i)`; `+∞` when a sample hits a zero cell.
pub fn empirical_risk(hist: &HistogramDensity, samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("empirical risk of an empty sample"));
    }
    let counts = hist.model().counts(samples)?;
    let n = samples.len() as f64;
    let mut risk = 0.0;
    for (&c, &h) in counts.iter().zip(hist.heights()) {
        if c == 0 {
            continue;
        }
        if h == 0.0 {
            return Ok(f64::INFINITY);
        }
        risk -= c as f64 * h.ln();
    }
    Ok(risk / n)
}

/// Empirical risk of the frequencies histogram in closed form,
/// `-Σ P_n(I) ln(P_n(I)/μ(I))`.
pub fn mle_empirical_risk(counts: &[usize], measures: &[f64]) -> f64 {
    let n: usize = counts.iter().sum();
    let n = n as f64;
    -counts
        .iter()
        .zip(measures)
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &m)| {
            let p = c as f64 / n;
            p * (p / m).ln()
        })
        .sum::<f64>()
}

/// `K(f, g) = Σ μ(I) f_I ln(f_I / g_I)` for histograms on one partition.
pub fn kl_between(f: &HistogramDensity, g: &HistogramDensity) -> Result<f64> {
    if f.model() != g.model() {
        return Err(Error::domain("histograms are defined on different partitions"));
    }
    Ok(f.heights()
        .iter()
        .zip(g.heights())
        .zip(f.model().cell_measures())
        .map(|((&a, &b), m)| m * xlogx_over(a, b))
        .sum())
}

/// `K(f*, f) = ∫ f* ln f* - Σ P(I) ln β_I`.
pub fn kl_target_to_histogram(target: &TargetDensity, hist: &HistogramDensity) -> Result<f64> {
    let probs = hist.model().cell_probabilities(target)?;
    let entropy = target.entropy_term()?;
    let mut cross = 0.0;
    for (&p, &h) in probs.iter().zip(hist.heights()) {
        if p == 0.0 {
            continue;
        }
        if h == 0.0 {
            return Ok(f64::INFINITY);
        }
        cross += p * h.ln();
    }
    Ok(entropy - cross)
}

/// Risks of the frequencies histogram on one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    /// `P_n γ(f̂_m)`.
    pub emp_risk: f64,
    /// `p₁ = K(f_m, f̂_m)`, possibly infinite.
    pub true_excess: f64,
    /// `p₂ = K(f̂_m, f_m)`.
    pub emp_excess: f64,
    /// `K(f*, f_m)`.
    pub bias: f64,
    /// `K(f*, f̂_m) = bias + p₁`.
    pub total_kl: f64,
    pub chi_sq: f64,
    /// `max_I |P_n(I) - P(I)| / P(I)`.
    pub sup_ratio: f64,
}

/// Cell-level summary of a model against a target: probabilities,
/// measures and the model bias. Reused across samples.
#[derive(Clone, Debug)]
pub struct ModelTarget {
    pub probs: Vec<f64>,
    pub measures: Vec<f64>,
    pub bias: f64,
}

impl ModelTarget {
    pub fn new(model: &HistogramModel, target: &TargetDensity) -> Result<Self> {
        let probs = model.cell_probabilities(target)?;
        let measures = model.cell_measures();
        let entropy = target.entropy_term()?;
        let cross: f64 = probs
            .iter()
            .zip(&measures)
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &m)| p * (p / m).ln())
            .sum();
        // rounding can push a zero bias slightly negative
        let bias = (entropy - cross).max(0.0);
        Ok(Self {
            probs,
            measures,
            bias,
        })
    }

    /// Builds the risk report from per-cell counts.
    pub fn report(&self, counts: &[usize]) -> Result<RiskReport> {
        let n: usize = counts.iter().sum();
        if n == 0 {
            return Err(Error::domain("risk report of an empty sample"));
        }
        let n = n as f64;
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        let mut chi = 0.0;
        let mut sup = 0.0f64;
        for (i, (&c, &p)) in counts.iter().zip(&self.probs).enumerate() {
            let pn = c as f64 / n;
            if p == 0.0 {
                if c > 0 {
                    return Err(Error::Degenerate(format!(
                        "cell {i} has zero target mass but holds {c} samples"
                    )));
                }
                continue;
            }
            p1 += xlogx_over(p, pn);
            p2 += xlogx_over(pn, p);
            let d = pn - p;
            chi += d * d / p;
            sup = sup.max(d.abs() / p);
        }
        Ok(RiskReport {
            emp_risk: mle_empirical_risk(counts, &self.measures),
            true_excess: p1,
            emp_excess: p2,
            bias: self.bias,
            total_kl: self.bias + p1,
            chi_sq: chi,
            sup_ratio: sup,
        })
    }
}

pub fn excess_risks(model: &HistogramModel, samples: &[f64], target: &TargetDensity) -> Result<RiskReport> {
    if samples.is_empty() {
        return Err(Error::domain("risk report of an empty sample"));
    }
    let counts = model.counts(samples)?;
    ModelTarget::new(model, target)?.report(&counts)
}

/// A collection of models ordered by increasing dimension, sharing one support.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelCollection {
    models: Vec<HistogramModel>,
}

impl ModelCollection {
    pub fn new(mut models: Vec<HistogramModel>) -> Result<Self> {
        let first = models
            .first()
            .ok_or_else(|| Error::domain("empty model collection"))?
            .support();
        if models.iter().any(|m| m.support() != first) {
            return Err(Error::domain("models of a collection must share one support"));
        }
        models.sort_by_key(HistogramModel::dim);
        Ok(Self { models })
    }

    /// Regular partitions with `1..=max_cells` cells.
    pub fn regular(support: Support, max_cells: usize) -> Result<Self> {
        let models = (1..=max_cells)
            .map(|k| HistogramModel::regular(support, k))
            .collect::<Result<Vec<_>>>()?;
        Self::new(models)
    }

    /// Default largest cell count `max(2, ⌊n / ln(n+1)⌋)`.
    pub fn default_max_cells(n: usize) -> usize {
        let n = n as f64;
        ((n / (n + 1.0).ln()).floor() as usize).max(2)
    }

    pub fn models(&self) -> &[HistogramModel] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.models.iter().map(HistogramModel::dim).collect()
    }

    pub fn support(&self) -> Support {
        self.models[0].support()
    }

    /// Counts of every model, sorting the sample once.
    pub fn counts(&self, samples: &[f64]) -> Result<Vec<Vec<usize>>> {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        self.models.iter().map(|m| m.counts_sorted(&sorted)).collect()
    }
}

/// JSON form `{support, breakpoints, heights}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramJson {
    pub support: [f64; 2],
    pub breakpoints: Vec<f64>,
    pub heights: Vec<f64>,
}

impl From<&HistogramDensity> for HistogramJson {
    fn from(h: &HistogramDensity) -> Self {
        let s = h.model().support();
        Self {
            support: [s.lo, s.hi],
            breakpoints: h.model().breakpoints().to_vec(),
            heights: h.heights().to_vec(),
        }
    }
}

impl TryFrom<HistogramJson> for HistogramDensity {
    type Error = Error;

    fn try_from(j: HistogramJson) -> Result<Self> {
        let model = HistogramModel::new(j.breakpoints)?;
        let s = model.support();
        if s.lo != j.support[0] || s.hi != j.support[1] {
            return Err(Error::domain("support does not match the outer breakpoints"));
        }
        HistogramDensity::new(model, j.heights)
    }
}
