//! Penalties, penalized criteria and the data-driven over-penalization
//! constant.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::histogram::{mle_empirical_risk, HistogramModel, ModelCollection};
use crate::{Error, Result};

/// `(ε⁺, ε⁻)` for dimension `d` and sample size `n`.
///
/// `ε⁺ = max{√(D ln(n+1)/n), √(ln(n+1)/D), ln(n+1)/D}`; `ε⁻` drops the last term.
pub fn epsilon_terms(d: usize, n: usize) -> Result<(f64, f64)> {
    if d == 0 {
        return Err(Error::domain("deviation terms are undefined for D = 0"));
    }
    if n == 0 {
        return Err(Error::domain("sample size must be positive"));
    }
    let (d, n) = (d as f64, n as f64);
    let l = (n + 1.0).ln();
    let minus = (d * l / n).sqrt().max((l / d).sqrt());
    Ok((minus.max(l / d), minus))
}

/// Constant in front of `C ε⁺` in the over-penalized penalty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Base {
    /// `(1 + C ε⁺) D/n`.
    #[default]
    One,
    /// `C ε⁺ D/n`.
    Zero,
}

impl Base {
    fn value(self) -> f64 {
        match self {
            Base::One => 1.0,
            Base::Zero => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum BrVariant {
    /// `(ln D)^2.5 / n`.
    #[default]
    Paper,
    /// `D/n + (ln D)^2.5 / n`.
    Classic,
}

/// Normalization of the per-model constants `Ĉ_m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CHatScale {
    /// `Δ_m / (max{√(D/n), √(1/D)} · D/2)`.
    #[default]
    Literal,
    /// `Δ_m / (max{√(D/n), √(1/D)} · D/(2n))`.
    PerSample,
}

/// Increasing proportions in `(0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid(Vec<f64>);

impl AlphaGrid {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() < 2 {
            return Err(Error::domain("the proportion grid needs at least two values"));
        }
        if alphas.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return Err(Error::domain("proportions must lie in (0, 1]"));
        }
        if alphas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("proportions must be strictly increasing"));
        }
        Ok(Self(alphas))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Default for AlphaGrid {
    /// `0.05, 0.10, …, 0.95`.
    fn default() -> Self {
        Self((1..20).map(|k| k as f64 / 20.0).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct AdaptiveSpec {
    pub grid: AlphaGrid,
    pub scale: CHatScale,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Criterion {
    Aic,
    Aicc,
    Br(BrVariant),
    OverPen { c: f64, base: Base },
    ThetaDelta { theta: f64, delta: f64 },
    Adaptive { spec: AdaptiveSpec, base: Base },
}

impl Criterion {
    /// AIC₁: the over-penalized criterion with `C = 1`.
    pub fn aic1() -> Self {
        Criterion::OverPen {
            c: 1.0,
            base: Base::One,
        }
    }

    pub fn over_pen(c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::domain(format!("over-penalization constant must be finite and >= 0, got {c}")));
        }
        Ok(Criterion::OverPen { c, base: Base::One })
    }

    pub fn theta_delta(theta: f64, delta: f64) -> Result<Self> {
        if !theta.is_finite() || !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::domain(format!(
                "thetadelta needs finite theta and finite delta >= 0, got {theta},{delta}"
            )));
        }
        Ok(Criterion::ThetaDelta { theta, delta })
    }

    /// Replaces the base of over-penalized criteria; others are unchanged.
    pub fn with_base(self, new: Base) -> Self {
        match self {
            Criterion::OverPen { c, .. } => Criterion::OverPen { c, base: new },
            Criterion::Adaptive { spec, .. } => Criterion::Adaptive { spec, base: new },
            other => other,
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, Criterion::Adaptive { .. })
    }

    /// `pen(D)` for sample size `n`. `Ok(None)` marks an infeasible model.
    pub fn penalty(&self, d: usize, n: usize) -> Result<Option<f64>> {
        if n == 0 {
            return Err(Error::domain("sample size must be positive"));
        }
        let (df, nf) = (d as f64, n as f64);
        let eps = || epsilon_terms(d, n).map(|e| e.0);
        let pen = match self {
            Criterion::Aic => df / nf,
            Criterion::Aicc => {
                if d + 1 >= n {
                    return Ok(None);
                }
                df / (nf - df - 1.0)
            }
            Criterion::Br(variant) => {
                let br = if d < 2 { 0.0 } else { df.ln().powf(2.5) / nf };
                match variant {
                    BrVariant::Paper => br,
                    BrVariant::Classic => df / nf + br,
                }
            }
            Criterion::OverPen { c, base } => {
                if d == 0 {
                    0.0
                } else {
                    (base.value() + c * eps()?) * df / nf
                }
            }
            Criterion::ThetaDelta { theta, delta } => {
                if d == 0 {
                    0.0
                } else {
                    (theta + delta * eps()?) * df / nf
                }
            }
            Criterion::Adaptive { .. } => {
                return Err(Error::domain(
                    "the adaptive penalty needs a model collection; resolve the constant first",
                ))
            }
        };
        Ok(Some(pen))
    }

    /// Replaces an adaptive criterion by the over-penalized one with the
    /// calibrated constant. Other criteria are returned unchanged.
    pub fn resolve(&self, dims: &[usize], emp_risks: &[f64], n: usize) -> Result<(Criterion, Option<AdaptiveTrace>)> {
        match self {
            Criterion::Adaptive { spec, base } => {
                let trace = adaptive_constant_from_risks(dims, emp_risks, n, spec, *base)?;
                let c = Criterion::OverPen { c: trace.c_hat, base: *base };
                Ok((c, Some(trace)))
            }
            other => Ok((other.clone(), None)),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base_suffix = |b: &Base| if *b == Base::Zero { "@base0" } else { "" };
        match self {
            Criterion::Aic => write!(f, "aic"),
            Criterion::Aicc => write!(f, "aicc"),
            Criterion::Br(BrVariant::Paper) => write!(f, "br"),
            Criterion::Br(BrVariant::Classic) => write!(f, "br:classic"),
            Criterion::OverPen { c, base } if *c == 1.0 => write!(f, "aic1{}", base_suffix(base)),
            Criterion::OverPen { c, base } => write!(f, "overpen:{c}{}", base_suffix(base)),
            Criterion::ThetaDelta { theta, delta } => write!(f, "thetadelta:{theta},{delta}"),
            Criterion::Adaptive { spec, base } => {
                let scale = if spec.scale == CHatScale::PerSample { ":n" } else { "" };
                write!(f, "adaptive{scale}{}", base_suffix(base))
            }
        }
    }
}

impl FromStr for Criterion {
    type Err = Error;

    /// `aic | aicc | br | br:classic | aic1 | overpen:C | thetadelta:T,D |
    /// adaptive | adaptive:n`, optionally followed by `@base0`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown criterion '{s}'"));
        let lower = s.trim().to_ascii_lowercase();
        let (body, base) = match lower.strip_suffix("@base0") {
            Some(b) => (b, Base::Zero),
            None => (lower.as_str(), Base::One),
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let (head, arg) = match body.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (body, None),
        };
        let c = match (head, arg) {
            ("aic", None) => Criterion::Aic,
            ("aicc", None) => Criterion::Aicc,
            ("br", None) => Criterion::Br(BrVariant::Paper),
            ("br", Some("classic")) => Criterion::Br(BrVariant::Classic),
            ("aic1", None) => Criterion::aic1(),
            ("overpen", Some(a)) => Criterion::over_pen(num(a)?)?,
            ("thetadelta", Some(a)) => {
                let (t, d) = a.split_once(',').ok_or_else(bad)?;
                Criterion::theta_delta(num(t)?, num(d)?)?
            }
            ("adaptive", None) => Criterion::Adaptive {
                spec: AdaptiveSpec::default(),
                base: Base::One,
            },
            ("adaptive", Some("n")) => Criterion::Adaptive {
                spec: AdaptiveSpec {
                    scale: CHatScale::PerSample,
                    ..AdaptiveSpec::default()
                },
                base: Base::One,
            },
            _ => return Err(bad()),
        };
        if base == Base::Zero && !matches!(c, Criterion::OverPen { .. } | Criterion::Adaptive { .. }) {
            return Err(bad());
        }
        Ok(c.with_base(base))
    }
}

/// Median with the two middle values averaged for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}

/// One proportion of the plateau search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaStep {
    pub alpha: f64,
    /// Indices of the models of `M_α` used in the fit (`D ≥ 1`).
    pub models: Vec<usize>,
    pub intercept: f64,
    pub deltas: Vec<f64>,
    pub c_hat_m: Vec<f64>,
    pub c_hat_alpha: f64,
    pub selected: usize,
    pub selected_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveTrace {
    pub n: usize,
    pub dims: Vec<usize>,
    pub steps: Vec<AlphaStep>,
    /// Inclusive range of step indices forming the plateau.
    pub plateau: (usize, usize),
    pub c_hat: f64,
}

impl AdaptiveTrace {
    pub fn c_hat_alpha(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.c_hat_alpha).collect()
    }

    pub fn selected_dims(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.selected_dim).collect()
    }
}

/// Runs the plateau heuristic on a collection and a sample.
pub fn adaptive_constant(models: &ModelCollection, samples: &[f64], spec: &AdaptiveSpec, base: Base) -> Result<AdaptiveTrace> {
    if samples.is_empty() {
        return Err(Error::domain("empty sample"));
    }
    let counts = models.counts(samples)?;
    let risks: Vec<f64> = counts
        .iter()
        .zip(models.models())
        .map(|(c, m)| mle_empirical_risk(c, &m.cell_measures()))
        .collect();
    adaptive_constant_from_risks(&models.dims(), &risks, samples.len(), spec, base)
}

/// The plateau heuristic from model dimensions (increasing) and the
/// empirical risks of the frequencies histograms.
pub fn adaptive_constant_from_risks(
    dims: &[usize],
    emp_risks: &[f64],
    n: usize,
    spec: &AdaptiveSpec,
    base: Base,
) -> Result<AdaptiveTrace> {
    if dims.len() != emp_risks.len() {
        return Err(Error::domain("one empirical risk per model is required"));
    }
    if n == 0 {
        return Err(Error::domain("sample size must be positive"));
    }
    if dims.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("models must be ordered by increasing dimension"));
    }
    if dims.first() == dims.last() {
        return Err(Error::Degenerate("all models have the same dimension".into()));
    }
    if emp_risks.iter().any(|r| !r.is_finite()) {
        return Err(Error::domain("empirical risks must be finite"));
    }
    let nf = n as f64;
    let total = dims.len();
    let mut steps = Vec::with_capacity(spec.grid.values().len());
    for &alpha in spec.grid.values() {
        let size = ((alpha * total as f64 - 1e-9).ceil() as usize).clamp(1, total);
        let members: Vec<usize> = (total - size..total).filter(|&i| dims[i] > 0).collect();
        let residual = |i: usize| -emp_risks[i] - dims[i] as f64 / nf;
        let intercept = members.iter().map(|&i| residual(i)).sum::<f64>() / members.len() as f64;
        let deltas: Vec<f64> = members.iter().map(|&i| (residual(i) - intercept).abs()).collect();
        let c_hat_m: Vec<f64> = members
            .iter()
            .zip(&deltas)
            .map(|(&i, &delta)| {
                let d = dims[i] as f64;
                let half = match spec.scale {
                    CHatScale::Literal => d / 2.0,
                    CHatScale::PerSample => d / (2.0 * nf),
                };
                delta / ((d / nf).sqrt().max((1.0 / d).sqrt()) * half)
            })
            .collect();
        let abs: Vec<f64> = c_hat_m.iter().map(|c| c.abs()).collect();
        let c_hat_alpha = median(&abs).expect("M_alpha holds a model of positive dimension");
        let crit = Criterion::OverPen { c: c_hat_alpha, base };
        let mut selected = 0;
        let mut best = f64::INFINITY;
        for (i, (&d, &r)) in dims.iter().zip(emp_risks).enumerate() {
            let value = r + crit.penalty(d, n)?.expect("over-penalization is always feasible");
            if value < best {
                best = value;
                selected = i;
            }
        }
        steps.push(AlphaStep {
            alpha,
            models: members,
            intercept,
            deltas,
            c_hat_m,
            c_hat_alpha,
            selected,
            selected_dim: dims[selected],
        });
    }
    let selected: Vec<usize> = steps.iter().map(|s| s.selected).collect();
    let plateau = longest_run(&selected);
    let c_hat = median(
        &steps[plateau.0..=plateau.1]
            .iter()
            .map(|s| s.c_hat_alpha)
            .collect::<Vec<_>>(),
    )
    .expect("plateau is nonempty");
    Ok(AdaptiveTrace {
        n,
        dims: dims.to_vec(),
        steps,
        plateau,
        c_hat,
    })
}

/// Inclusive bounds of the longest run of equal values; earliest on ties.
pub fn longest_run<T: PartialEq>(values: &[T]) -> (usize, usize) {
    let mut best = (0, 0);
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] != values[start] {
            if i - 1 - start > best.1 - best.0 {
                best = (start, i - 1);
            }
            start = i;
        }
    }
    best
}

/// `P_n γ(f̂_m) + pen(m)` for a single model. `Ok(None)` when infeasible.
pub fn criterion_value(criterion: &Criterion, model: &HistogramModel, samples: &[f64]) -> Result<Option<f64>> {
    if samples.is_empty() {
        return Err(Error::domain("empty sample"));
    }
    let counts = model.counts(samples)?;
    let risk = mle_empirical_risk(&counts, &model.cell_measures());
    Ok(criterion.penalty(model.dim(), samples.len())?.map(|p| risk + p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Support;
    use approx::assert_abs_diff_eq;

    fn pen(c: &str, d: usize, n: usize) -> Option<f64> {
        c.parse::<Criterion>().unwrap().penalty(d, n).unwrap()
    }

    #[test]
    fn epsilon_examples() {
        let (p, m) = epsilon_terms(10, 100).unwrap();
        assert_abs_diff_eq!(p, 0.67935, epsilon = 5e-6);
        assert_abs_diff_eq!(m, 0.67935, epsilon = 5e-6);
        let (p, m) = epsilon_terms(1, 1).unwrap();
        let root = std::f64::consts::LN_2.sqrt();
        assert_abs_diff_eq!(p, root, epsilon = 1e-15);
        assert_abs_diff_eq!(m, root, epsilon = 1e-15);
        assert!(epsilon_terms(4, 10_000).unwrap().0 > epsilon_terms(4, 1000).unwrap().0);
        assert!(epsilon_terms(0, 10).is_err());
    }

    #[test]
    fn penalty_examples() {
        assert_abs_diff_eq!(pen("aic", 5, 100).unwrap(), 0.05, epsilon = 1e-16);
        assert_abs_diff_eq!(pen("aicc", 5, 100).unwrap(), 5.0 / 94.0, epsilon = 1e-16);
        assert_abs_diff_eq!(pen("aicc", 5, 100).unwrap(), 0.0531915, epsilon = 1e-7);
        assert_abs_diff_eq!(pen("aic1", 10, 100).unwrap(), 0.167935, epsilon = 1e-6);
        assert_abs_diff_eq!(pen("br", 8, 100).unwrap(), 8f64.ln().powf(2.5) / 100.0, epsilon = 1e-16);
        assert_abs_diff_eq!(pen("br", 8, 100).unwrap(), 0.0623544, epsilon = 1e-7);
        assert_abs_diff_eq!(pen("br:classic", 8, 100).unwrap(), 0.08 + 0.0623544, epsilon = 1e-7);
        assert_eq!(pen("br", 1, 100), Some(0.0));
        assert_eq!(pen("aicc", 99, 100), None);
        assert_eq!(pen("aicc", 98, 100), Some(98.0));
        assert_eq!(pen("aic1", 0, 100), Some(0.0));
        assert_abs_diff_eq!(pen("aic1@base0", 10, 100).unwrap(), 0.067935, epsilon = 1e-6);
        assert!(Criterion::Aic.penalty(1, 0).is_err());
    }

    #[test]
    fn parse_and_display() {
        for s in ["aic", "aicc", "br", "br:classic", "aic1", "overpen:2.5", "thetadelta:1,0.5", "adaptive", "adaptive:n", "aic1@base0", "adaptive@base0"] {
            let c: Criterion = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert_eq!("overpen:1.0".parse::<Criterion>().unwrap(), Criterion::aic1());
        assert_eq!("AIC".parse::<Criterion>().unwrap(), Criterion::Aic);
        for s in ["bic", "overpen:-1", "overpen:x", "thetadelta:1", "aic@base0", ""] {
            assert!(s.parse::<Criterion>().is_err(), "{s}");
        }
    }

    #[test]
    fn overpen_zero_is_aic_and_thetadelta_matches() {
        for n in [1, 10, 100, 1000] {
            for d in 0..60 {
                let aic = pen("aic", d, n).unwrap();
                assert_eq!(pen("overpen:0", d, n).unwrap(), aic);
                for c in [0.0, 0.5, 1.0, 3.0] {
                    let op = Criterion::over_pen(c).unwrap().penalty(d, n).unwrap().unwrap();
                    let td = Criterion::theta_delta(1.0, c).unwrap().penalty(d, n).unwrap().unwrap();
                    assert_eq!(op, td);
                    assert!(op >= aic);
                    if c > 0.0 && d >= 1 {
                        assert!(op > aic);
                    }
                }
            }
        }
    }

    #[test]
    fn aic_and_aicc_nondecreasing() {
        for n in [5, 50, 500] {
            for name in ["aic", "aicc"] {
                let vals: Vec<f64> = (0..n).map_while(|d| pen(name, d, n)).collect();
                assert!(vals.windows(2).all(|w| w[1] >= w[0]), "{name} n={n}");
            }
        }
    }

    #[test]
    fn criterion_value_examples() {
        let one = HistogramModel::regular(Support::unit(), 1).unwrap();
        for c in ["aic", "aicc", "br", "aic1"] {
            let v = criterion_value(&c.parse().unwrap(), &one, &[0.1, 0.5, 0.9]).unwrap();
            assert_eq!(v, Some(0.0));
        }
        let two = HistogramModel::regular(Support::unit(), 2).unwrap();
        let v = criterion_value(&Criterion::Aic, &two, &[0.1, 0.2, 0.3, 0.8]).unwrap().unwrap();
        assert_abs_diff_eq!(v, 0.119188, epsilon = 1e-6);
        assert_eq!(criterion_value(&Criterion::Aicc, &two, &[0.1, 0.2]).unwrap(), None);
    }

    #[test]
    fn runs_and_medians() {
        assert_eq!(longest_run(&[1, 1, 2, 2, 2, 3]), (2, 4));
        assert_eq!(longest_run(&[1, 1, 2, 2]), (0, 1));
        assert_eq!(longest_run(&[7]), (0, 0));
        assert_eq!(longest_run(&[1, 2, 3]), (0, 0));
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn perfect_fit_gives_zero_constant() {
        let n = 200;
        let dims: Vec<usize> = (0..30).collect();
        let risks: Vec<f64> = dims.iter().map(|&d| -(d as f64 / n as f64 + 0.3)).collect();
        let trace = adaptive_constant_from_risks(&dims, &risks, n, &AdaptiveSpec::default(), Base::One).unwrap();
        assert!(trace.steps.iter().all(|s| s.deltas.iter().all(|d| d.abs() < 1e-12)));
        assert!(trace.c_hat.abs() < 1e-9);
    }

    #[test]
    fn adaptive_rejects_degenerate_input() {
        let spec = AdaptiveSpec::default();
        assert!(matches!(
            adaptive_constant_from_risks(&[3, 3, 3], &[0.0; 3], 10, &spec, Base::One),
            Err(Error::Degenerate(_))
        ));
        assert!(AlphaGrid::new(vec![0.5]).is_err());
        assert!(AlphaGrid::new(vec![0.5, 0.4]).is_err());
        assert!(AlphaGrid::new(vec![0.0, 0.4]).is_err());
    }

    #[test]
    fn plateau_median_of_pair() {
        // Three proportions; the last two pick the same model.
        let n = 100;
        let dims = vec![0, 1, 2, 3];
        let risks = vec![0.0, -0.05, -0.052, -0.3];
        let spec = AdaptiveSpec {
            grid: AlphaGrid::new(vec![0.25, 0.5, 0.75]).unwrap(),
            scale: CHatScale::Literal,
        };
        let trace = adaptive_constant_from_risks(&dims, &risks, n, &spec, Base::One).unwrap();
        let sel = trace.selected_dims();
        let (a, b) = trace.plateau;
        assert!(sel[a..=b].iter().all(|&d| d == sel[a]));
        let expected = median(&trace.c_hat_alpha()[a..=b]).unwrap();
        assert_eq!(trace.c_hat, expected);
    }

    #[test]
    fn adaptive_constant_ignores_risk_shifts() {
        let n = 150;
        let dims: Vec<usize> = (0..25).collect();
        let risks: Vec<f64> = dims
            .iter()
            .map(|&d| -(d as f64) / n as f64 * 1.2 + 0.01 * ((d * 7 % 5) as f64))
            .collect();
        let shifted: Vec<f64> = risks.iter().map(|r| r + 0.5).collect();
        let spec = AdaptiveSpec::default();
        let a = adaptive_constant_from_risks(&dims, &risks, n, &spec, Base::One).unwrap();
        let b = adaptive_constant_from_risks(&dims, &shifted, n, &spec, Base::One).unwrap();
        assert_abs_diff_eq!(a.c_hat, b.c_hat, epsilon = 1e-9);
        assert_eq!(a.selected_dims(), b.selected_dims());
    }

    #[test]
    fn resolve_adaptive() {
        let dims: Vec<usize> = (0..10).collect();
        let risks: Vec<f64> = dims.iter().map(|&d| -(d as f64) * 0.011).collect();
        let adaptive: Criterion = "adaptive".parse().unwrap();
        let (c, trace) = adaptive.resolve(&dims, &risks, 100).unwrap();
        let trace = trace.unwrap();
        assert_eq!(c, Criterion::OverPen { c: trace.c_hat, base: Base::One });
        assert!(adaptive.penalty(3, 100).is_err());
        let (c, t) = Criterion::Aic.resolve(&dims, &risks, 100).unwrap();
        assert_eq!((c, t), (Criterion::Aic, None));
    }
}
