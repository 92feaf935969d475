mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use overpen::criteria::{Base, Criterion};
use overpen::density::{self, Support};
use overpen::experiments::{self, ExperimentConfig, GridRule};
use overpen::histogram::{fit_mle, ModelCollection};
use overpen::selection::{self, Method, SampleFit, SelectionResult};
use overpen::{io, par, verify};

/// Histogram bin-count selection by penalized maximum likelihood.
#[derive(Parser, Debug)]
#[command(
    name = "overpen",
    version,
    about,
    after_help = "Every subcommand also accepts --config FILE: a text file of `key = value` lines\nmirroring the long flags. Flags given on the command line win over the file."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Select a regular histogram for a sample file.
    Select(SelectArgs),
    /// Run the Monte Carlo benchmark and write CSV/JSON results.
    Benchmark(BenchmarkArgs),
    /// Run numerical checks of the concentration inequalities.
    Verify(VerifyArgs),
    /// List or sample the built-in target densities.
    #[command(subcommand)]
    Densities(DensitiesCommand),
    /// Emit plotting data.
    #[command(subcommand)]
    Plotdata(PlotCommand),
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct SelectArgs {
    /// Sample file: one value per line, or a CSV file with --column.
    #[arg(long)]
    input: PathBuf,
    /// CSV column holding the sample.
    #[arg(long)]
    column: Option<String>,
    /// Support as `lo,hi`; defaults to the density's support or [0, 1].
    #[arg(long, value_parser = parse_support, allow_hyphen_values = true)]
    support: Option<Support>,
    /// Catalog density: fixes the support and adds the oracle model to the output.
    #[arg(long)]
    density: Option<String>,
    /// aic, aicc, br, br:classic, aic1, overpen:C, thetadelta:T,D, adaptive, adaptive:n.
    #[arg(long, default_value = "aic1")]
    criterion: String,
    /// Largest number of cells; defaults to max(2, ⌊n / ln(n+1)⌋).
    #[arg(long)]
    max_cells: Option<usize>,
    /// Leading term of the over-penalized family.
    #[arg(long, value_enum)]
    base: Option<BaseArg>,
    #[arg(long, value_enum, default_value = "argmin")]
    method: MethodArg,
    /// Write the selected histogram as JSON.
    #[arg(long)]
    histogram_out: Option<PathBuf>,
    /// Do not print the criterion table on standard error.
    #[arg(long)]
    quiet: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BaseArg {
    One,
    Zero,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Argmin,
    PseudoTests,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct BenchmarkArgs {
    /// Comma-separated density ids.
    #[arg(long, value_delimiter = ',', default_values_t = density::BENCHMARK_IDS.map(String::from))]
    densities: Vec<String>,
    /// Comma-separated sample sizes.
    #[arg(long = "n", value_delimiter = ',', default_values_t = experiments::DEFAULT_SAMPLE_SIZES)]
    sample_sizes: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Comma-separated criterion strings.
    #[arg(long, value_delimiter = ',', default_value = "aic,aicc,br,aic1,adaptive")]
    criteria: Vec<String>,
    #[arg(long, env = "OVERPEN_SEED", default_value_t = 1)]
    seed: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "overpen_out")]
    out: PathBuf,
    /// Record per-trial wall time (makes trials.csv run-dependent).
    #[arg(long)]
    record_runtime: bool,
    /// Fixed largest cell count instead of the default grid rule.
    #[arg(long)]
    max_cells: Option<usize>,
    /// Do not print progress on standard error.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct VerifyArgs {
    /// identities, chi, tails, margin, concentration, penopt or all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Replicates; defaults to each suite's own setting.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, env = "OVERPEN_SEED", default_value_t = 1)]
    seed: u64,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Self-test: tighten every bound so that the checks must fail.
    #[arg(long)]
    falsify: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum DensitiesCommand {
    /// Print the catalog.
    List(ListArgs),
    /// Draw a sample, one value per line with 17 significant digits.
    Sample(SampleArgs),
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct ListArgs {
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct SampleArgs {
    #[arg(long)]
    id: String,
    #[arg(long)]
    n: usize,
    #[arg(long, env = "OVERPEN_SEED", default_value_t = 1)]
    seed: u64,
    /// Output file; standard output by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum PlotCommand {
    /// Long-format KL values per trial, from a trials.csv file.
    Kl(PlotKlArgs),
    /// The plateau trace of the adaptive criterion on a sample file.
    Adaptive(PlotAdaptiveArgs),
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct PlotKlArgs {
    #[arg(long)]
    trials: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct PlotAdaptiveArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    column: Option<String>,
    #[arg(long, value_parser = parse_support, allow_hyphen_values = true)]
    support: Option<Support>,
    #[arg(long)]
    density: Option<String>,
    #[arg(long)]
    max_cells: Option<usize>,
    /// `adaptive` or `adaptive:n`.
    #[arg(long, default_value = "adaptive")]
    criterion: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Errors split by exit code: 2 for bad input, 1 for everything else.
enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<overpen::Error> for Failure {
    fn from(e: overpen::Error) -> Self {
        use overpen::Error as E;
        match e {
            E::Domain(_) | E::Parse(_) | E::NoFeasibleModel | E::Csv(_) | E::Json(_) => Failure::Validation(e.to_string()),
            E::Diverged(_) | E::Degenerate(_) | E::Io(_) => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn parse_support(s: &str) -> Result<Support, String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound '{lo}'"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound '{hi}'"))?;
    Support::new(lo, hi).map_err(|e| e.to_string())
}

fn parse_criterion(s: &str) -> Result<Criterion, Failure> {
    s.parse::<Criterion>()
        .map_err(|e| Failure::Validation(format!("criterion '{s}': {e}")))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn resolve_support(support: Option<Support>, density_id: Option<&str>) -> Result<Support, Failure> {
    match (support, density_id) {
        (Some(s), _) => Ok(s),
        (None, Some(id)) => Ok(density::lookup(id)?.support()),
        (None, None) => Ok(Support::unit()),
    }
}

fn collection(support: Support, max_cells: Option<usize>, n: usize) -> Result<ModelCollection, Failure> {
    let k = max_cells.unwrap_or_else(|| ModelCollection::default_max_cells(n));
    if k == 0 {
        return Err(Failure::Validation("--max-cells must be at least 1".into()));
    }
    Ok(ModelCollection::regular(support, k)?)
}

fn load_samples(input: &Path, column: Option<&str>) -> Result<Vec<f64>, Failure> {
    if !input.exists() {
        return Err(Failure::Validation(format!("input file {} not found", input.display())));
    }
    let samples = io::read_samples(input, column)?;
    if samples.is_empty() {
        return Err(Failure::Validation(format!("{} holds no samples", input.display())));
    }
    Ok(samples)
}

#[derive(Serialize)]
struct SelectOutput {
    #[serde(flatten)]
    result: SelectionResult,
    support: [f64; 2],
    selected_cells: usize,
    /// Penalty of the selected model under the resolved criterion.
    penalty: Option<f64>,
    emp_risks: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_dim: Option<usize>,
}

fn cmd_select(a: SelectArgs) -> CmdResult {
    let mut criterion = parse_criterion(&a.criterion)?;
    if let Some(b) = a.base {
        criterion = criterion.with_base(match b {
            BaseArg::One => Base::One,
            BaseArg::Zero => Base::Zero,
        });
    }
    let support = resolve_support(a.support, a.density.as_deref())?;
    let samples = load_samples(&a.input, a.column.as_deref())?;
    let models = collection(support, a.max_cells, samples.len())?;
    let fit = SampleFit::new(&models, &samples)?;
    let method = match a.method {
        MethodArg::Argmin => Method::Argmin,
        MethodArg::PseudoTests => Method::PseudoTests,
    };
    let result = fit.select(&criterion, method)?;
    let penalty = result.crit_values[result.selected].map(|v| v - fit.emp_risks[result.selected]);
    let oracle_dim = match &a.density {
        Some(id) => Some(selection::oracle_model(&models, &samples, &density::lookup(id)?)?.oracle_dim),
        None => None,
    };

    if !a.quiet {
        let mut err = std::io::stderr().lock();
        writeln!(err, "{:>6} {:>14} {:>14} {:>14}", "cells", "emp_risk", "penalty", "criterion")?;
        for (i, (v, r)) in result.crit_values.iter().zip(&fit.emp_risks).enumerate() {
            let mark = if i == result.selected { " *" } else { "" };
            match v {
                Some(v) => writeln!(err, "{:>6} {:>14.6} {:>14.6} {:>14.6}{mark}", fit.dims[i] + 1, r + 0.0, v - r + 0.0, v + 0.0)?,
                None => writeln!(err, "{:>6} {:>14.6} {:>14} {:>14}", fit.dims[i] + 1, r + 0.0, "-", "excluded")?,
            }
        }
        write!(err, "selected {} cells under {}", result.selected_dim + 1, result.criterion)?;
        if let Some(t) = &result.adaptive {
            write!(err, " (calibrated C = {:.6})", t.c_hat)?;
        }
        writeln!(err)?;
    }

    if let Some(path) = &a.histogram_out {
        let hist = fit_mle(&models.models()[result.selected], &samples)?;
        fs::write(path, io::histogram_to_json(&hist)? + "\n")?;
    }

    let out = SelectOutput {
        support: [support.lo, support.hi],
        selected_cells: result.selected_dim + 1,
        penalty,
        emp_risks: fit.emp_risks.clone(),
        oracle_dim,
        result,
    };
    let text = serde_json::to_string_pretty(&out).map_err(|e| Failure::Runtime(e.to_string()))?;
    emit(None, &(text + "\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_benchmark(a: BenchmarkArgs) -> CmdResult {
    let criteria = a.criteria.iter().map(|s| parse_criterion(s)).collect::<Result<Vec<_>, _>>()?;
    let config = ExperimentConfig {
        densities: a.densities.clone(),
        sample_sizes: a.sample_sizes.clone(),
        trials: a.trials,
        criteria,
        grid: a.max_cells.map_or(GridRule::Default, GridRule::MaxCells),
        master_seed: a.seed,
        record_runtime: a.record_runtime,
        ..ExperimentConfig::default()
    };
    config.validate()?;
    if a.threads == Some(0) {
        return Err(Failure::Validation("--threads must be at least 1".into()));
    }
    let quiet = a.quiet;
    let out = par::with_threads(a.threads, || {
        experiments::run_benchmark_with_progress(&config, |msg| {
            if !quiet {
                eprintln!("{msg}");
            }
        })
    })??;

    fs::create_dir_all(&a.out)?;
    experiments::write_records(&out.records, &out.summary, &a.out)?;
    fs::write(a.out.join("plotdata_kl.csv"), experiments::plotdata_kl(&out.records)?)?;
    for w in &out.summary.warnings {
        eprintln!("warning: {w}");
    }
    let failed = out.records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("warning: {failed} record(s) failed; see the empty kl fields in trials.csv");
    }
    println!(
        "{}",
        serde_json::json!({
            "out": a.out.display().to_string(),
            "records": out.records.len(),
            "failed": failed,
            "warnings": out.summary.warnings.len(),
        })
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let suite: verify::Suite = a.suite.parse()?;
    if a.reps == Some(0) {
        return Err(Failure::Validation("--reps must be at least 1".into()));
    }
    let opts = verify::Options {
        reps: a.reps,
        seed: a.seed,
        falsify: a.falsify,
    };
    let report = par::with_threads(a.threads, || verify::run_suite(suite, opts))??;
    if !a.quiet {
        for c in &report.checks {
            let verdict = match c.pass {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "info",
            };
            eprintln!("{verdict:4} {:<50} empirical={:<12.6} bound={:.6}", c.id, c.empirical, c.bound);
        }
    }
    let text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.to_string()))? + "\n";
    emit(a.report.as_deref(), &text)?;
    let failures = report.failures().len();
    if failures > 0 {
        eprintln!("{failures} check(s) failed");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_densities(c: DensitiesCommand) -> CmdResult {
    match c {
        DensitiesCommand::List(a) => {
            let cat = density::catalog();
            if a.json {
                let rows: Vec<_> = cat
                    .iter()
                    .map(|t| {
                        let s = t.support();
                        serde_json::json!({"id": t.id(), "support": [s.lo, s.hi], "description": t.description()})
                    })
                    .collect();
                println!("{}", serde_json::to_string_pretty(&rows).map_err(|e| Failure::Runtime(e.to_string()))?);
            } else {
                for t in &cat {
                    let s = t.support();
                    println!("{:<12} [{}, {}]  {}", t.id(), s.lo, s.hi, t.description());
                }
            }
        }
        DensitiesCommand::Sample(a) => {
            let target = density::lookup(&a.id)?;
            let values = density::draw_samples(&target, a.seed, a.n);
            let mut buf = Vec::new();
            io::write_samples(&mut buf, &values)?;
            emit(a.out.as_deref(), &String::from_utf8_lossy(&buf))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_plotdata(c: PlotCommand) -> CmdResult {
    match c {
        PlotCommand::Kl(a) => {
            let records = experiments::read_trials(&a.trials)?;
            emit(a.out.as_deref(), &experiments::plotdata_kl(&records)?)?;
        }
        PlotCommand::Adaptive(a) => {
            let criterion = parse_criterion(&a.criterion)?;
            if !criterion.is_adaptive() {
                return Err(Failure::Validation(format!("'{}' is not an adaptive criterion", a.criterion)));
            }
            let support = resolve_support(a.support, a.density.as_deref())?;
            let samples = load_samples(&a.input, a.column.as_deref())?;
            let models = collection(support, a.max_cells, samples.len())?;
            let fit = SampleFit::new(&models, &samples)?;
            let (_, trace) = fit.criterion_values(&criterion)?;
            let trace = trace.ok_or_else(|| Failure::Runtime("adaptive criterion produced no trace".into()))?;
            emit(a.out.as_deref(), &experiments::plotdata_adaptive(&trace)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(argv);
    let result = match cli.command {
        Command::Select(a) => cmd_select(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Densities(c) => cmd_densities(c),
        Command::Plotdata(c) => cmd_plotdata(c),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
