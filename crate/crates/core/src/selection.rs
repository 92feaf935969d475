//! Penalized model selection by argmin or by iterated pseudo-tests, and the
//! oracle model when the target is known.

use serde::{Deserialize, Serialize};

use crate::criteria::{AdaptiveTrace, Criterion};
use crate::density::TargetDensity;
use crate::histogram::{mle_empirical_risk, ModelCollection, ModelTarget};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub criterion: String,
    pub n: usize,
    pub selected: usize,
    pub selected_dim: usize,
    /// `None` for infeasible models.
    pub crit_values: Vec<Option<f64>>,
    pub excluded: Vec<usize>,
    /// Calibrated constant and trace for the adaptive criterion.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub adaptive: Option<AdaptiveTrace>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Argmin,
    PseudoTests,
}

/// Index of the smallest value; ties go to the smallest dimension, then the
/// smallest index.
pub fn argmin_index(dims: &[usize], values: &[Option<f64>]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.iter().enumerate() {
        let Some(v) = *v else { continue };
        best = match best {
            None => Some((i, v)),
            Some((j, b)) if v < b || (v == b && dims[i] < dims[j]) => Some((i, v)),
            keep => keep,
        };
    }
    best.map(|(i, _)| i).ok_or(Error::NoFeasibleModel)
}

/// The pseudo-test `T(m, m') = 1{crit(m) ≤ crit(m')}`.
pub fn pseudo_test(a: f64, b: f64) -> bool {
    a <= b
}

/// Iterated pseudo-tests: the candidate is challenged by every later model
/// in turn and replaced by the first challenger it fails against.
pub fn pseudo_test_index(values: &[Option<f64>]) -> Result<usize> {
    let mut feasible = values.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v)));
    let (mut cand, mut cv) = feasible.next().ok_or(Error::NoFeasibleModel)?;
    for (j, v) in feasible {
        if !pseudo_test(cv, v) {
            cand = j;
            cv = v;
        }
    }
    Ok(cand)
}

/// Per-model quantities of one sample that every criterion reuses.
#[derive(Clone, Debug)]
pub struct SampleFit {
    pub n: usize,
    pub dims: Vec<usize>,
    pub counts: Vec<Vec<usize>>,
    pub emp_risks: Vec<f64>,
}

impl SampleFit {
    pub fn new(models: &ModelCollection, samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("empty sample"));
        }
        let counts = models.counts(samples)?;
        let emp_risks = counts
            .iter()
            .zip(models.models())
            .map(|(c, m)| mle_empirical_risk(c, &m.cell_measures()))
            .collect();
        Ok(Self {
            n: samples.len(),
            dims: models.dims(),
            counts,
            emp_risks,
        })
    }

    /// Criterion values, resolving the adaptive constant if needed.
    pub fn criterion_values(&self, criterion: &Criterion) -> Result<(Vec<Option<f64>>, Option<AdaptiveTrace>)> {
        let (resolved, trace) = criterion.resolve(&self.dims, &self.emp_risks, self.n)?;
        let values = self
            .dims
            .iter()
            .zip(&self.emp_risks)
            .map(|(&d, &r)| Ok(resolved.penalty(d, self.n)?.map(|p| r + p)))
            .collect::<Result<Vec<_>>>()?;
        Ok((values, trace))
    }

    pub fn select(&self, criterion: &Criterion, method: Method) -> Result<SelectionResult> {
        let (crit_values, adaptive) = self.criterion_values(criterion)?;
        let selected = match method {
            Method::Argmin => argmin_index(&self.dims, &crit_values)?,
            Method::PseudoTests => pseudo_test_index(&crit_values)?,
        };
        let excluded = crit_values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(i, _)| i)
            .collect();
        Ok(SelectionResult {
            criterion: criterion.to_string(),
            n: self.n,
            selected,
            selected_dim: self.dims[selected],
            crit_values,
            excluded,
            adaptive,
        })
    }
}

pub fn select_argmin(models: &ModelCollection, samples: &[f64], criterion: &Criterion) -> Result<SelectionResult> {
    SampleFit::new(models, samples)?.select(criterion, Method::Argmin)
}

pub fn select_by_pseudo_tests(models: &ModelCollection, samples: &[f64], criterion: &Criterion) -> Result<SelectionResult> {
    SampleFit::new(models, samples)?.select(criterion, Method::PseudoTests)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub oracle: usize,
    pub oracle_dim: usize,
    /// `K(f*, f̂_m)` per model, possibly infinite.
    pub kl_values: Vec<f64>,
}

impl OracleResult {
    pub fn from_kl(dims: &[usize], kl_values: Vec<f64>) -> Result<Self> {
        let opts: Vec<Option<f64>> = kl_values.iter().map(|&v| Some(v)).collect();
        let mut oracle = argmin_index(dims, &opts)?;
        // all infinite: keep the smallest model
        if kl_values[oracle].is_infinite() {
            oracle = 0;
        }
        Ok(Self {
            oracle,
            oracle_dim: dims[oracle],
            kl_values,
        })
    }
}

/// Cell-level target data for every model of a collection.
pub fn model_targets(models: &ModelCollection, target: &TargetDensity) -> Result<Vec<ModelTarget>> {
    models.models().iter().map(|m| ModelTarget::new(m, target)).collect()
}

pub fn oracle_model(models: &ModelCollection, samples: &[f64], target: &TargetDensity) -> Result<OracleResult> {
    let fit = SampleFit::new(models, samples)?;
    let targets = model_targets(models, target)?;
    let kl = fit
        .counts
        .iter()
        .zip(&targets)
        .map(|(c, t)| Ok(t.report(c)?.total_kl))
        .collect::<Result<Vec<_>>>()?;
    OracleResult::from_kl(&fit.dims, kl)
}
