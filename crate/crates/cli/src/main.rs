//! `sme`: fit, search and check Gaussian linear concentration models by
//! score matching.

mod io;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sme_core::data::{center_columns, scatter_matrix};
use sme_core::estimability::{dimension_bound, dimension_bound_check};
use sme_core::search::{search_with, SearchData};
use sme_core::simulation::{
    curve_tsv, experiment_tsv, lattice_concentration, run_lattice_experiment, sample_gaussian,
    sme_vs_mle_curve,
};
use sme_core::{
    check_estimability, jordan_fit, mle_fit, sandwich_covariance, sme_fit, Error, FitResult,
    GaussianConcentrationFamily, Lambda, MleOptions, ModelSpace, SearchConfig,
};

use crate::io::{open_output, parse_usize_list, read_dataset, read_model, write_dataset, ModelFile};

const FIT_SCHEMA: &str = "sme-fit/1";
const SEARCH_SCHEMA: &str = "sme-search/1";
const ESTIMABILITY_SCHEMA: &str = "sme-estimability/1";

#[derive(Parser)]
#[command(name = "sme", version, about = "Score matching estimation for Gaussian linear concentration models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FitMethod {
    Sme,
    Mle,
    /// Closed form when the model is a Jordan algebra, otherwise SME.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BackwardSweeps {
    FixedPoint,
    Single,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a dataset.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Model file (JSON) or builtin:NAME.
        #[arg(long)]
        model: String,
        #[arg(long, value_enum, default_value_t = FitMethod::Auto)]
        method: FitMethod,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        center: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy penalized search over uncoloured graphs.
    Search {
        #[arg(long)]
        data: PathBuf,
        /// `auto` or a non-negative number.
        #[arg(long, default_value = "auto")]
        lambda: String,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        center: bool,
        #[arg(long, value_enum, default_value_t = BackwardSweeps::FixedPoint)]
        backward: BackwardSweeps,
        /// Selected graph as a model file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Move trace as TSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Dimension bound and randomized rank test for n observations.
    Estimability {
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = sme_core::estimability::DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sample a lattice model dataset as CSV.
    Simulate {
        #[arg(long)]
        lattice_s: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lattice recovery experiment over trials and sample sizes.
    Experiment {
        #[arg(long)]
        s: usize,
        /// Multiples of p, e.g. `1..10` or `1,5,10`.
        #[arg(long, default_value = "1..10")]
        n_over_p: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scaled SME–MLE distance on growing prefixes of a dataset.
    Compare {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: String,
        /// Prefix sizes, e.g. `10,20,40` or `10..20`.
        #[arg(long)]
        n_grid: String,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        center: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::NotEstimable { .. }) => 3,
        Some(Error::NonConvergence { .. }) | Some(Error::MleNonexistent { .. }) => 4,
        _ => 2,
    }
}

fn error_document(err: &anyhow::Error) -> Value {
    let kind = err.downcast_ref::<Error>().map(Error::kind).unwrap_or("InvalidInput");
    let mut doc = json!({ "error": { "kind": kind, "message": format!("{err:#}") } });
    match err.downcast_ref::<Error>() {
        Some(Error::NotEstimable { rank, dim, condition }) => {
            doc["error"]["rank"] = json!(rank);
            doc["error"]["dim"] = json!(dim);
            doc["error"]["condition"] = finite_or_null(*condition);
        }
        Some(Error::NonConvergence { iterations, gradient_norm, .. }) => {
            doc["error"]["iterations"] = json!(iterations);
            doc["error"]["gradient_norm"] = finite_or_null(*gradient_norm);
        }
        _ => {}
    }
    doc
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn write_json(out: Option<&std::path::Path>, doc: &Value) -> Result<()> {
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, doc)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Coefficient<'a> {
    label: &'a str,
    value: f64,
    std_error: Option<f64>,
}

fn fit_document(
    l: &ModelSpace,
    fit: &FitResult,
    requested: FitMethod,
    center: bool,
    std_errors: Option<Vec<f64>>,
) -> Value {
    let theta: Vec<Coefficient> = l
        .labels()
        .iter()
        .zip(&fit.theta.0)
        .enumerate()
        .map(|(u, (label, &value))| Coefficient {
            label,
            value,
            std_error: std_errors.as_ref().map(|s| s[u]),
        })
        .collect();
    json!({
        "schema": FIT_SCHEMA,
        "method": fit.method.as_str(),
        "requested_method": format!("{requested:?}").to_lowercase(),
        "p": l.p(),
        "n": fit.n,
        "d": l.dim(),
        "center": center,
        "jordan": l.is_jordan_subalgebra(),
        "theta": theta,
        "K": fit.k.lower_triangle_rows(),
        "j2": fit.j2,
        "positive_definite": fit.positive_definite,
        "estimable": true,
        "diagnostics": {
            "iterations": fit.iterations,
            "gradient_norm": finite_or_null(fit.gradient_norm),
            "equation_residual": finite_or_null(fit.equation_residual),
            "gram_condition": fit.gram_condition.map(finite_or_null),
        },
    })
}

fn cmd_fit(data: PathBuf, model: String, method: FitMethod, center: bool, out: Option<PathBuf>) -> Result<()> {
    let mut x = read_dataset(&data)?;
    let l = read_model(&model)?.space();
    if x.ncols() != l.p() {
        bail!(Error::DimensionMismatch { expected: l.p(), found: x.ncols() });
    }
    if center {
        center_columns(&mut x);
    }
    let n = x.nrows();
    let w = scatter_matrix(&x, false)?;
    let fit = match method {
        FitMethod::Sme => sme_fit(&l, &w, n)?,
        FitMethod::Mle => mle_fit(&l, &w, n, &MleOptions::default())?,
        FitMethod::Auto if l.is_jordan_subalgebra() => jordan_fit(&l, &w, n)?,
        FitMethod::Auto => sme_fit(&l, &w, n)?,
    };
    // the sandwich describes the score matching estimator only
    let std_errors = if method != FitMethod::Mle && n >= 2 {
        let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
        sandwich_covariance(&GaussianConcentrationFamily::new(&l), &rows, &fit.theta)
            .ok()
            .map(|s| s.standard_errors())
    } else {
        None
    };
    write_json(out.as_deref(), &fit_document(&l, &fit, method, center, std_errors))
}

fn parse_lambda(s: &str) -> Result<Lambda> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Lambda::Auto);
    }
    let v: f64 = s.parse().with_context(|| format!("--lambda must be `auto` or a number, got {s:?}"))?;
    if !(v >= 0.0 && v.is_finite()) {
        bail!("--lambda must be a finite non-negative number, got {v}");
    }
    Ok(Lambda::Fixed(v))
}

fn cmd_search(
    data: PathBuf,
    lambda: String,
    center: bool,
    backward: BackwardSweeps,
    out: Option<PathBuf>,
    trace: Option<PathBuf>,
) -> Result<()> {
    let x = read_dataset(&data)?;
    let config = SearchConfig {
        lambda: parse_lambda(&lambda)?,
        center,
        backward_fixed_point: backward == BackwardSweeps::FixedPoint,
        ..SearchConfig::default()
    };
    let summary = SearchData::from_data(&x, &config)?;
    let res = search_with(&summary, &config)?;
    let p = x.ncols();
    if let Some(path) = &trace {
        let mut w = open_output(Some(path))?;
        writeln!(w, "step\tmove\tedge\tsweep\tbefore\tafter\taccepted")?;
        for (i, t) in res.trace.iter().enumerate() {
            let edge = t.edge.map(|(a, b)| format!("{a}-{b}")).unwrap_or_else(|| "-".into());
            let num = |v: f64| if v.is_finite() { v.to_string() } else { "NA".into() };
            writeln!(w, "{i}\t{}\t{edge}\t{}\t{}\t{}\t{}", t.mv.as_str(), t.sweep, num(t.before), num(t.after), t.accepted)?;
        }
        w.flush()?;
    }
    if let Some(path) = &out {
        let doc = serde_json::to_value(ModelFile::from_graph(&res.graph(p)))?;
        write_json(Some(path), &doc)?;
    }
    let summary_doc = json!({
        "schema": SEARCH_SCHEMA,
        "p": p,
        "n": x.nrows(),
        "lambda": res.lambda,
        "objective": res.objective,
        "edges": res.edges,
        "fits_evaluated": res.fits_evaluated,
    });
    write_json(None, &summary_doc)
}

fn cmd_estimability(model: String, n: usize, trials: usize, seed: u64) -> Result<bool> {
    if n == 0 || trials == 0 {
        bail!("--n and --trials must be positive");
    }
    let l = read_model(&model)?.space();
    let report = check_estimability(&l, n, seed, trials);
    let doc = json!({
        "schema": ESTIMABILITY_SCHEMA,
        "p": l.p(),
        "n": n,
        "d": l.dim(),
        "dimension_bound": dimension_bound(l.p(), n),
        "bound_satisfied": dimension_bound_check(l.dim(), l.p(), n),
        "estimable": report.estimable,
        "trials": report.trials,
        "seed": seed,
        "min_singular_value": report.min_singular_value,
        "best_relative_singular_value": report.best_relative_singular_value,
    });
    write_json(None, &doc)?;
    Ok(report.estimable)
}

fn cmd_simulate(s: usize, n: usize, seed: u64, out: Option<PathBuf>) -> Result<()> {
    if n == 0 {
        bail!("--n must be positive");
    }
    let k = lattice_concentration(s)?;
    let x = sample_gaussian(&k, n, seed)?;
    let mut w = open_output(out.as_deref())?;
    write_dataset(&x, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_experiment(s: usize, n_over_p: String, trials: usize, seed: u64, out: Option<PathBuf>) -> Result<()> {
    let grid = parse_usize_list(&n_over_p).context("--n-over-p")?;
    if trials == 0 {
        bail!("--trials must be positive");
    }
    let reports = run_lattice_experiment(s, &grid, trials, seed, &SearchConfig::default())?;
    let mut w = open_output(out.as_deref())?;
    w.write_all(experiment_tsv(&reports).as_bytes())?;
    w.flush()?;
    Ok(())
}

fn cmd_compare(data: PathBuf, model: String, n_grid: String, center: bool, out: Option<PathBuf>) -> Result<()> {
    let x = read_dataset(&data)?;
    let l = read_model(&model)?.space();
    let grid = parse_usize_list(&n_grid).context("--n-grid")?;
    let curve = sme_vs_mle_curve(&l, &x, &grid, center)?;
    let mut w = open_output(out.as_deref())?;
    w.write_all(curve_tsv(&curve).as_bytes())?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Fit { data, model, method, center, out } => cmd_fit(data, model, method, center, out)?,
        Command::Search { data, lambda, center, backward, out, trace } => {
            cmd_search(data, lambda, center, backward, out, trace)?
        }
        Command::Estimability { model, n, trials, seed } => {
            return Ok(if cmd_estimability(model, n, trials, seed)? { ExitCode::SUCCESS } else { ExitCode::from(3) });
        }
        Command::Simulate { lattice_s, n, seed, out } => cmd_simulate(lattice_s, n, seed, out)?,
        Command::Experiment { s, n_over_p, trials, seed, out } => cmd_experiment(s, n_over_p, trials, seed, out)?,
        Command::Compare { data, model, n_grid, center, out } => cmd_compare(data, model, n_grid, center, out)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{}", error_document(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
