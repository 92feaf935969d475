//! Browser bindings. Every export takes plain numbers and strings and
//! returns a JSON string, so the page needs no generated type glue.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use overpen::criteria::Criterion;
use overpen::density::{self, TargetDensity};
use overpen::histogram::{fit_mle, ModelCollection};
use overpen::selection::{model_targets, Method, OracleResult, SampleFit};

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsValue> {
    serde_json::to_string(v).map_err(js_err)
}

/// `max_cells == 0` selects the default grid for `n`.
fn setup(density_id: &str, n: usize, seed: u64, max_cells: usize) -> overpen::Result<(TargetDensity, Vec<f64>, ModelCollection)> {
    let target = density::lookup(density_id)?;
    let samples = density::draw_samples(&target, seed, n);
    let k = if max_cells == 0 { ModelCollection::default_max_cells(n) } else { max_cells };
    let models = ModelCollection::regular(target.support(), k)?;
    Ok((target, samples, models))
}

fn pdf_curve(target: &TargetDensity, points: usize) -> Vec<[f64; 2]> {
    let s = target.support();
    (0..=points)
        .map(|i| {
            // stay off the endpoints, where some catalog densities blow up
            let t = (i as f64 + 0.5) / (points as f64 + 1.0);
            let x = s.lo + t * s.length();
            [x, target.pdf_at(x).unwrap_or(f64::NAN)]
        })
        .collect()
}

#[derive(Serialize)]
struct DensityInfo {
    id: String,
    support: [f64; 2],
    description: String,
}

#[wasm_bindgen]
pub fn list_densities() -> Result<String, JsValue> {
    let list: Vec<DensityInfo> = density::catalog()
        .iter()
        .map(|t| DensityInfo {
            id: t.id().to_string(),
            support: [t.support().lo, t.support().hi],
            description: t.description().to_string(),
        })
        .collect();
    to_json(&list)
}

#[derive(Serialize)]
struct SelectView {
    criterion: String,
    n: usize,
    support: [f64; 2],
    cells: Vec<usize>,
    emp_risks: Vec<f64>,
    crit_values: Vec<Option<f64>>,
    selected_cells: usize,
    oracle_cells: usize,
    breakpoints: Vec<f64>,
    heights: Vec<f64>,
    /// KL divergence from the target to the selected histogram; `null` when infinite.
    kl: Option<f64>,
    pdf: Vec<[f64; 2]>,
    c_hat: Option<f64>,
}

/// Draws a sample and selects a histogram with the given criterion string.
#[wasm_bindgen]
pub fn sample_and_select(density_id: &str, n: usize, seed: u64, criterion: &str, max_cells: usize) -> Result<String, JsValue> {
    let crit: Criterion = criterion.parse().map_err(js_err)?;
    let (target, samples, models) = setup(density_id, n, seed, max_cells).map_err(js_err)?;
    let fit = SampleFit::new(&models, &samples).map_err(js_err)?;
    let result = fit.select(&crit, Method::Argmin).map_err(js_err)?;
    let targets = model_targets(&models, &target).map_err(js_err)?;
    let kl: Vec<f64> = targets
        .iter()
        .zip(&fit.counts)
        .map(|(t, c)| t.report(c).map(|r| r.total_kl))
        .collect::<overpen::Result<_>>()
        .map_err(js_err)?;
    let oracle = OracleResult::from_kl(&fit.dims, kl.clone()).map_err(js_err)?;
    let hist = fit_mle(&models.models()[result.selected], &samples).map_err(js_err)?;
    let s = models.support();
    to_json(&SelectView {
        criterion: result.criterion.clone(),
        n,
        support: [s.lo, s.hi],
        cells: fit.dims.iter().map(|d| d + 1).collect(),
        emp_risks: fit.emp_risks.clone(),
        crit_values: result.crit_values.clone(),
        selected_cells: result.selected_dim + 1,
        oracle_cells: oracle.oracle_dim + 1,
        breakpoints: hist.model().breakpoints().to_vec(),
        heights: hist.heights().to_vec(),
        kl: Some(kl[result.selected]).filter(|v| v.is_finite()),
        pdf: pdf_curve(&target, 200),
        c_hat: result.adaptive.as_ref().map(|t| t.c_hat),
    })
}

#[derive(Serialize)]
struct TraceView {
    alphas: Vec<f64>,
    c_hat_alpha: Vec<f64>,
    selected_cells: Vec<usize>,
    plateau: [usize; 2],
    c_hat: f64,
}

/// The data-driven constant as a function of the fraction of models used.
#[wasm_bindgen]
pub fn adaptive_trace(density_id: &str, n: usize, seed: u64, max_cells: usize, per_sample: bool) -> Result<String, JsValue> {
    let crit: Criterion = if per_sample { "adaptive:n" } else { "adaptive" }.parse().map_err(js_err)?;
    let (_, samples, models) = setup(density_id, n, seed, max_cells).map_err(js_err)?;
    let fit = SampleFit::new(&models, &samples).map_err(js_err)?;
    let (_, trace) = fit.criterion_values(&crit).map_err(js_err)?;
    let trace = trace.ok_or_else(|| js_err("no adaptive trace"))?;
    to_json(&TraceView {
        alphas: trace.steps.iter().map(|s| s.alpha).collect(),
        c_hat_alpha: trace.c_hat_alpha(),
        selected_cells: trace.selected_dims().iter().map(|d| d + 1).collect(),
        plateau: [trace.plateau.0, trace.plateau.1],
        c_hat: trace.c_hat,
    })
}

#[derive(Serialize)]
struct RiskView {
    cells: Vec<usize>,
    bias: Vec<f64>,
    /// Infinite values are sent as `null`.
    true_excess: Vec<Option<f64>>,
    emp_excess: Vec<f64>,
    half_dim_over_n: Vec<f64>,
    pen_aic: Vec<f64>,
    pen_aic1: Vec<f64>,
}

/// Bias, true and empirical excess risks of every model on one sample,
/// next to the AIC and AIC₁ penalties.
#[wasm_bindgen]
pub fn risk_curves(density_id: &str, n: usize, seed: u64, max_cells: usize) -> Result<String, JsValue> {
    let (target, samples, models) = setup(density_id, n, seed, max_cells).map_err(js_err)?;
    let targets = model_targets(&models, &target).map_err(js_err)?;
    let counts = models.counts(&samples).map_err(js_err)?;
    let aic1 = Criterion::aic1();
    let mut v = RiskView {
        cells: Vec::new(),
        bias: Vec::new(),
        true_excess: Vec::new(),
        emp_excess: Vec::new(),
        half_dim_over_n: Vec::new(),
        pen_aic: Vec::new(),
        pen_aic1: Vec::new(),
    };
    for ((m, t), c) in models.models().iter().zip(&targets).zip(&counts) {
        let r = t.report(c).map_err(js_err)?;
        let d = m.dim();
        v.cells.push(d + 1);
        v.bias.push(r.bias);
        v.true_excess.push(Some(r.true_excess).filter(|x| x.is_finite()));
        v.emp_excess.push(r.emp_excess);
        v.half_dim_over_n.push(d as f64 / (2.0 * n as f64));
        v.pen_aic.push(d as f64 / n as f64);
        v.pen_aic1.push(aic1.penalty(d, n).map_err(js_err)?.unwrap_or(f64::NAN));
    }
    to_json(&v)
}
