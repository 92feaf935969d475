//! Seeded Monte Carlo benchmark: trials over densities, sample sizes and
//! criteria, quantile summaries with infinite-risk counts, CSV output.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::criteria::Criterion;
use crate::density::{self, draw_samples, TargetDensity, BENCHMARK_IDS};
use crate::histogram::{ModelCollection, ModelTarget};
use crate::par;
use crate::rng;
use crate::selection::{self, Method, OracleResult, SampleFit};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum GridRule {
    /// `K = 1..max(2, ⌊n / ln(n+1)⌋)`.
    #[default]
    Default,
    /// `K = 1..k`.
    MaxCells(usize),
}

impl GridRule {
    pub fn max_cells(self, n: usize) -> usize {
        match self {
            GridRule::Default => ModelCollection::default_max_cells(n),
            GridRule::MaxCells(k) => k,
        }
    }
}

pub const DEFAULT_SAMPLE_SIZES: [usize; 5] = [50, 100, 200, 500, 1000];
pub const DEFAULT_LEVELS: [f64; 5] = [5.0, 25.0, 50.0, 75.0, 95.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub densities: Vec<String>,
    pub sample_sizes: Vec<usize>,
    pub trials: usize,
    pub criteria: Vec<Criterion>,
    pub grid: GridRule,
    pub master_seed: u64,
    /// Quantile levels in percent.
    pub levels: Vec<f64>,
    /// Fill `runtime_ms`; off by default so reruns give identical files.
    pub record_runtime: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            densities: BENCHMARK_IDS.iter().map(|s| s.to_string()).collect(),
            sample_sizes: DEFAULT_SAMPLE_SIZES.to_vec(),
            trials: 100,
            criteria: default_criteria(),
            grid: GridRule::Default,
            master_seed: 1,
            levels: DEFAULT_LEVELS.to_vec(),
            record_runtime: false,
        }
    }
}

/// AIC, AICc, BR, AIC₁ and AIC_a.
pub fn default_criteria() -> Vec<Criterion> {
    ["aic", "aicc", "br", "aic1", "adaptive"]
        .iter()
        .map(|s| s.parse().expect("built-in criterion"))
        .collect()
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        if self.densities.is_empty() || self.sample_sizes.is_empty() || self.criteria.is_empty() {
            return Err(Error::domain("densities, sample sizes and criteria must be nonempty"));
        }
        if self.sample_sizes.contains(&0) {
            return Err(Error::domain("sample sizes must be positive"));
        }
        if let GridRule::MaxCells(0) = self.grid {
            return Err(Error::domain("the model grid needs at least one cell"));
        }
        if self.levels.is_empty()
            || self.levels.iter().any(|l| !(*l > 0.0 && *l < 100.0))
            || self.levels.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::domain("quantile levels must be strictly increasing in (0, 100)"));
        }
        for d in &self.densities {
            density::lookup(d)?;
        }
        Ok(())
    }

    /// Seed of the sample for one `(density, n, trial)`; shared by all criteria.
    pub fn trial_seed(&self, density: &str, n: usize, trial: usize) -> u64 {
        rng::split(self.master_seed, &[rng::hash_str(density), n as u64, trial as u64])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub density: String,
    pub n: usize,
    pub criterion: String,
    pub trial: usize,
    pub seed: u64,
    /// `None` for a failed trial.
    pub selected_dim: Option<usize>,
    /// `K(f*, f̂_m̂)`; `None` for a failed trial.
    pub kl: Option<f64>,
    pub oracle_dim: usize,
    pub oracle_kl: f64,
    pub runtime_ms: Option<f64>,
    #[serde(skip)]
    pub error: Option<String>,
}

/// One `(density, n)` block: target, models and per-model target data.
struct Cell {
    target: TargetDensity,
    n: usize,
    models: ModelCollection,
    targets: Vec<ModelTarget>,
}

impl Cell {
    fn new(config: &ExperimentConfig, density: &str, n: usize) -> Result<Self> {
        let target = density::lookup(density)?;
        let models = ModelCollection::regular(target.support(), config.grid.max_cells(n))?;
        let targets = selection::model_targets(&models, &target)?;
        Ok(Self { target, n, models, targets })
    }

    /// Records of one trial, one per criterion in `criteria` order.
    fn trial(&self, config: &ExperimentConfig, criteria: &[Criterion], trial: usize) -> Result<Vec<TrialRecord>> {
        let id = self.target.id().to_string();
        let seed = config.trial_seed(&id, self.n, trial);
        let samples = draw_samples(&self.target, seed, self.n);
        let fit = SampleFit::new(&self.models, &samples)?;
        let kl = fit
            .counts
            .iter()
            .zip(&self.targets)
            .map(|(c, t)| Ok(t.report(c)?.total_kl))
            .collect::<Result<Vec<_>>>()?;
        let oracle = OracleResult::from_kl(&fit.dims, kl)?;
        Ok(criteria
            .iter()
            .map(|c| {
                let start = config.record_runtime.then(std::time::Instant::now);
                let sel = fit.select(c, Method::Argmin);
                let runtime_ms = start.map(|s| s.elapsed().as_secs_f64() * 1e3);
                let mut rec = TrialRecord {
                    density: id.clone(),
                    n: self.n,
                    criterion: c.to_string(),
                    trial,
                    seed,
                    selected_dim: None,
                    kl: None,
                    oracle_dim: oracle.oracle_dim,
                    oracle_kl: oracle.kl_values[oracle.oracle],
                    runtime_ms,
                    error: None,
                };
                match sel {
                    Ok(s) => {
                        rec.selected_dim = Some(s.selected_dim);
                        rec.kl = Some(oracle.kl_values[s.selected]);
                    }
                    Err(e) => rec.error = Some(e.to_string()),
                }
                rec
            })
            .collect())
    }
}

/// A single trial for one criterion.
pub fn run_trial(config: &ExperimentConfig, density: &str, n: usize, criterion: &Criterion, trial: usize) -> Result<TrialRecord> {
    let cell = Cell::new(config, density, n)?;
    let mut recs = cell.trial(config, std::slice::from_ref(criterion), trial)?;
    Ok(recs.remove(0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub density: String,
    pub n: usize,
    pub criterion: String,
    /// One value per level; `inf` sorts above every finite value.
    pub quantiles: Vec<f64>,
    pub inf_count: usize,
    pub mean_finite: Option<f64>,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub levels: Vec<f64>,
    pub cells: Vec<SummaryCell>,
    pub warnings: Vec<String>,
}

impl ExperimentSummary {
    pub fn cell(&self, density: &str, n: usize, criterion: &str) -> Option<&SummaryCell> {
        self.cells
            .iter()
            .find(|c| c.density == density && c.n == n && c.criterion == criterion)
    }

    /// Position of `level` (percent) among the summary levels.
    pub fn level_index(&self, level: f64) -> Option<usize> {
        self.levels.iter().position(|&l| l == level)
    }
}

/// Order statistic at index `⌈qN⌉ − 1` of an ascending list; `level` in percent.
pub fn order_quantile(sorted: &[f64], level: f64) -> f64 {
    let k = (level * sorted.len() as f64 / 100.0 - 1e-9).ceil() as usize;
    sorted[k.clamp(1, sorted.len()) - 1]
}

/// Quantile summaries per `(density, n, criterion)` in first-seen order.
pub fn aggregate(records: &[TrialRecord], levels: &[f64]) -> ExperimentSummary {
    let mut keys: Vec<(String, usize, String)> = Vec::new();
    for r in records {
        let key = (r.density.clone(), r.n, r.criterion.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for (density, n, criterion) in keys {
        let group: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.density == density && r.n == n && r.criterion == criterion)
            .collect();
        let mut kl: Vec<f64> = group.iter().filter_map(|r| r.kl).collect();
        let failed = group.len() - kl.len();
        if failed > 0 {
            warnings.push(format!("{density} n={n} {criterion}: {failed} failed trial(s) left out"));
        }
        if kl.is_empty() {
            warnings.push(format!("{density} n={n} {criterion}: no successful trial, cell omitted"));
            continue;
        }
        kl.sort_by(f64::total_cmp);
        let finite: Vec<f64> = kl.iter().copied().filter(|v| v.is_finite()).collect();
        cells.push(SummaryCell {
            quantiles: levels.iter().map(|&l| order_quantile(&kl, l)).collect(),
            inf_count: kl.len() - finite.len(),
            mean_finite: (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64),
            trials: kl.len(),
            density,
            n,
            criterion,
        });
    }
    ExperimentSummary {
        levels: levels.to_vec(),
        cells,
        warnings,
    }
}

#[derive(Clone, Debug)]
pub struct BenchmarkOutput {
    pub records: Vec<TrialRecord>,
    pub summary: ExperimentSummary,
}

/// Runs the full sweep. Records come out ordered by density, n, criterion
/// and trial, whatever the scheduling.
pub fn run_benchmark(config: &ExperimentConfig) -> Result<BenchmarkOutput> {
    run_benchmark_with_progress(config, |_| {})
}

pub fn run_benchmark_with_progress(config: &ExperimentConfig, progress: impl Fn(&str)) -> Result<BenchmarkOutput> {
    config.validate()?;
    let mut records = Vec::new();
    for density in &config.densities {
        for &n in &config.sample_sizes {
            let cell = Cell::new(config, density, n)?;
            let per_trial = par::map_range(config.trials, |t| {
                cell.trial(config, &config.criteria, t).unwrap_or_else(|e| {
                    let seed = config.trial_seed(density, n, t);
                    config
                        .criteria
                        .iter()
                        .map(|c| failed_record(density, n, c, t, seed, &e))
                        .collect()
                })
            });
            for k in 0..config.criteria.len() {
                records.extend(per_trial.iter().map(|recs| recs[k].clone()));
            }
            progress(&format!("{density} n={n}: {} trials done", config.trials));
        }
    }
    let summary = aggregate(&records, &config.levels);
    Ok(BenchmarkOutput { records, summary })
}

fn failed_record(density: &str, n: usize, c: &Criterion, trial: usize, seed: u64, e: &Error) -> TrialRecord {
    TrialRecord {
        density: density.to_string(),
        n,
        criterion: c.to_string(),
        trial,
        seed,
        selected_dim: None,
        kl: None,
        oracle_dim: 0,
        oracle_kl: f64::NAN,
        runtime_ms: None,
        error: Some(e.to_string()),
    }
}

pub const TRIALS_HEADER: [&str; 10] = [
    "density", "n", "criterion", "trial", "seed", "selected_dim", "kl", "oracle_dim", "oracle_kl", "runtime_ms",
];

fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else {
        format!("{x}")
    }
}

fn fmt_opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn trials_csv(records: &[TrialRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRIALS_HEADER)?;
    for r in records {
        w.write_record([
            r.density.clone(),
            r.n.to_string(),
            r.criterion.clone(),
            r.trial.to_string(),
            r.seed.to_string(),
            fmt_opt(r.selected_dim),
            r.kl.map(fmt_f64).unwrap_or_default(),
            r.oracle_dim.to_string(),
            fmt_f64(r.oracle_kl),
            r.runtime_ms.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    into_string(w)
}

fn level_name(l: f64) -> String {
    if l.fract() == 0.0 {
        format!("q{:02}", l as u32)
    } else {
        format!("q{l}")
    }
}

pub fn summary_csv(summary: &ExperimentSummary) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["density".to_string(), "n".into(), "criterion".into()];
    header.extend(summary.levels.iter().map(|&l| level_name(l)));
    header.extend(["inf_count".into(), "mean_finite".into(), "trials".into()]);
    w.write_record(&header)?;
    for c in &summary.cells {
        let mut row = vec![c.density.clone(), c.n.to_string(), c.criterion.clone()];
        row.extend(c.quantiles.iter().map(|&q| fmt_f64(q)));
        row.extend([c.inf_count.to_string(), c.mean_finite.map(fmt_f64).unwrap_or_default(), c.trials.to_string()]);
        w.write_record(&row)?;
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `trials.csv`, `summary.csv` and `summary.json`, overwriting.
pub fn write_records(records: &[TrialRecord], summary: &ExperimentSummary, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("trials.csv"), trials_csv(records)?)?;
    fs::write(out_dir.join("summary.csv"), summary_csv(summary)?)?;
    crate::io::write_json(&out_dir.join("summary.json"), summary)?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str, row: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("trials row {row}: bad {what} '{s}'")))
}

fn parse_opt<T: std::str::FromStr>(s: &str, what: &str, row: usize) -> Result<Option<T>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_field(s, what, row).map(Some)
    }
}

pub fn read_trials_str(text: &str) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != TRIALS_HEADER {
        return Err(Error::Parse(format!("unexpected trials header {header:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        out.push(TrialRecord {
            density: rec[0].to_string(),
            n: parse_field(&rec[1], "n", row)?,
            criterion: rec[2].to_string(),
            trial: parse_field(&rec[3], "trial", row)?,
            seed: parse_field(&rec[4], "seed", row)?,
            selected_dim: parse_opt(&rec[5], "selected_dim", row)?,
            kl: parse_opt(&rec[6], "kl", row)?,
            oracle_dim: parse_field(&rec[7], "oracle_dim", row)?,
            oracle_kl: parse_field(&rec[8], "oracle_kl", row)?,
            runtime_ms: parse_opt(&rec[9], "runtime_ms", row)?,
            error: None,
        });
    }
    Ok(out)
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>> {
    read_trials_str(&fs::read_to_string(path)?)
}

/// Long-format data for KL boxplots: one row per record.
pub fn plotdata_kl(records: &[TrialRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["density", "n", "criterion", "trial", "kl", "is_inf", "oracle_kl", "selected_dim", "oracle_dim"])?;
    for r in records {
        let Some(kl) = r.kl else { continue };
        w.write_record([
            r.density.clone(),
            r.n.to_string(),
            r.criterion.clone(),
            r.trial.to_string(),
            fmt_f64(kl),
            u8::from(kl.is_infinite()).to_string(),
            fmt_f64(r.oracle_kl),
            fmt_opt(r.selected_dim),
            r.oracle_dim.to_string(),
        ])?;
    }
    into_string(w)
}

/// Long-format data for the plateau plot of an adaptive trace.
pub fn plotdata_adaptive(trace: &crate::criteria::AdaptiveTrace) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["alpha", "c_hat_alpha", "selected_dim", "in_plateau", "c_hat"])?;
    for (i, s) in trace.steps.iter().enumerate() {
        let inside = i >= trace.plateau.0 && i <= trace.plateau.1;
        w.write_record([
            format!("{}", s.alpha),
            fmt_f64(s.c_hat_alpha),
            s.selected_dim.to_string(),
            u8::from(inside).to_string(),
            fmt_f64(trace.c_hat),
        ])?;
    }
    into_string(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            densities: vec!["beta22".into()],
            sample_sizes: vec![50],
            trials: 3,
            criteria: vec![Criterion::Aic, Criterion::aic1()],
            ..ExperimentConfig::default()
        }
    }

    fn rec(kl: Option<f64>) -> TrialRecord {
        TrialRecord {
            density: "d".into(),
            n: 10,
            criterion: "aic".into(),
            trial: 0,
            seed: 0,
            selected_dim: Some(1),
            kl,
            oracle_dim: 1,
            oracle_kl: 0.0,
            runtime_ms: None,
            error: None,
        }
    }

    #[test]
    fn quantile_examples() {
        let v = [1.0, 2.0, 3.0, 4.0, f64::INFINITY];
        assert_eq!(order_quantile(&v, 50.0), 3.0);
        assert_eq!(order_quantile(&v, 95.0), f64::INFINITY);
        assert_eq!(order_quantile(&v, 5.0), 1.0);
        let s = aggregate(&[rec(Some(0.7)), rec(Some(0.7))], &DEFAULT_LEVELS);
        assert!(s.cells[0].quantiles.iter().all(|&q| q == 0.7));
        let s = aggregate(&[rec(Some(f64::INFINITY)), rec(Some(f64::INFINITY)), rec(Some(1.0))], &DEFAULT_LEVELS);
        assert_eq!(s.cells[0].inf_count, 2);
        assert_eq!(s.cells[0].mean_finite, Some(1.0));
        let s = aggregate(&[rec(None)], &DEFAULT_LEVELS);
        assert!(s.cells.is_empty());
        assert_eq!(s.warnings.len(), 2);
    }

    #[test]
    fn hundred_percent_levels_use_inclusive_index() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(order_quantile(&v, 5.0), 5.0);
        assert_eq!(order_quantile(&v, 7.0), 7.0);
        assert_eq!(order_quantile(&v, 95.0), 95.0);
    }

    #[test]
    fn one_cell_grid_gives_zero_risk_on_uniform() {
        let config = ExperimentConfig {
            densities: vec!["uniform".into()],
            grid: GridRule::MaxCells(1),
            ..small_config()
        };
        let out = run_benchmark(&config).unwrap();
        assert!(out.records.iter().all(|r| r.kl == Some(0.0)));
    }

    #[test]
    fn record_counts_and_shared_seeds() {
        let config = small_config();
        let out = run_benchmark(&config).unwrap();
        assert_eq!(out.records.len(), 6);
        for t in 0..3 {
            let seeds: Vec<u64> = out.records.iter().filter(|r| r.trial == t).map(|r| r.seed).collect();
            assert_eq!(seeds.len(), 2);
            assert_eq!(seeds[0], seeds[1]);
        }
        for r in &out.records {
            let kl = r.kl.unwrap();
            if kl.is_finite() {
                assert!(r.oracle_kl <= kl + 1e-12);
            }
        }
        let single = run_trial(&config, "beta22", 50, &Criterion::aic1(), 2).unwrap();
        assert_eq!(&single, out.records.iter().find(|r| r.criterion == "aic1" && r.trial == 2).unwrap());
        assert_eq!(single, run_trial(&config, "beta22", 50, &Criterion::aic1(), 2).unwrap());
    }

    #[test]
    fn criterion_order_does_not_change_records() {
        let a = run_benchmark(&small_config()).unwrap().records;
        let mut config = small_config();
        config.criteria.reverse();
        let mut b = run_benchmark(&config).unwrap().records;
        b.sort_by_key(|r| r.criterion != "aic");
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip() {
        let out = run_benchmark(&small_config()).unwrap();
        let mut records = out.records.clone();
        records[0].kl = Some(f64::INFINITY);
        records[1].runtime_ms = Some(1.25);
        let text = trials_csv(&records).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.lines().next().unwrap() == TRIALS_HEADER.join(","));
        assert!(text.lines().nth(1).unwrap().contains(",inf,"));
        assert_eq!(read_trials_str(&text).unwrap(), records);

        let summary = summary_csv(&out.summary).unwrap();
        assert_eq!(summary.lines().count(), 3);
        assert_eq!(
            summary.lines().next().unwrap(),
            "density,n,criterion,q05,q25,q50,q75,q95,inf_count,mean_finite,trials"
        );
    }

    #[test]
    fn write_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_benchmark(&small_config()).unwrap();
        write_records(&out.records, &out.summary, dir.path()).unwrap();
        write_records(&out.records, &out.summary, dir.path()).unwrap();
        assert_eq!(read_trials(&dir.path().join("trials.csv")).unwrap(), out.records);
        assert!(dir.path().join("summary.json").exists());
    }

    #[test]
    fn config_validation() {
        let mut c = small_config();
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.levels = vec![50.0, 25.0];
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.densities = vec!["nope".into()];
        assert!(c.validate().is_err());
        assert!(small_config().validate().is_ok());
    }
}
