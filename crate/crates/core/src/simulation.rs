//! Ground-truth lattice models, Gaussian sampling by precision matrix and
//! the metrics used to score recovered graphs.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::concentration::{sme_then_mle, MleOptions};
use crate::data::scatter_matrix;
use crate::error::{check_dim, Error, Result};
use crate::model_space::{lattice_edges, ModelSpace};
use crate::rng;
use crate::search::{search_with, Edge, SearchConfig, SearchData};
use crate::sym::{spd_factorize, SymMatrix};

/// Lattice concentration matrix on `p = s²` vertices: unit diagonal and
/// `0.2` on every lattice edge.
pub fn lattice_concentration(s: usize) -> Result<SymMatrix> {
    if s < 2 {
        return Err(Error::InvalidArgument(format!("lattice side must be at least 2, got {s}")));
    }
    let p = s * s;
    let mut k = SymMatrix::identity(p);
    for (i, j) in lattice_edges(s) {
        k.set(i, j, 0.2);
    }
    spd_factorize(&k)?;
    Ok(k)
}

/// `n` rows drawn i.i.d. from `N(0, K⁻¹)`: with `K = C Cᵀ`, each row
/// solves `Cᵀ x = z` for `z ~ N(0, I)`.
pub fn sample_gaussian(k: &SymMatrix, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    let chol = spd_factorize(k)?;
    let p = k.dim();
    let mut r = rng::seeded(seed);
    let mut out = DMatrix::zeros(n, p);
    let mut z = vec![0.0; p];
    for i in 0..n {
        for v in z.iter_mut() {
            *v = r.sample(StandardNormal);
        }
        let x = chol.solve_upper(&z);
        for (j, v) in x.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Off-diagonal support `{(i, j) : i < j, K_ij ≠ 0}`.
pub fn support(k: &SymMatrix) -> Vec<Edge> {
    let p = k.dim();
    (0..p)
        .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
        .filter(|&(i, j)| k.get(i, j) != 0.0)
        .collect()
}

/// `(missing, extra)`: true edges absent from `fitted`, and fitted edges
/// whose true entry is zero.
pub fn edge_errors(true_k: &SymMatrix, fitted: &[Edge]) -> (usize, usize) {
    let truth: BTreeSet<Edge> = support(true_k).into_iter().collect();
    let fit: BTreeSet<Edge> = fitted.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    (truth.difference(&fit).count(), fit.difference(&truth).count())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub n: usize,
    /// `√n ‖Ǩ − K̂‖_F`, or `None` when a fit failed.
    pub scaled_frobenius: Option<f64>,
    /// Error kind when a fit failed.
    pub failure: Option<&'static str>,
}

/// Distance between SME and MLE on growing prefixes of `data`.
pub fn sme_vs_mle_curve(
    l: &ModelSpace,
    data: &DMatrix<f64>,
    n_grid: &[usize],
    center: bool,
) -> Result<Vec<CurvePoint>> {
    check_dim(l.p(), data.ncols())?;
    if let Some(&n) = n_grid.iter().find(|&&n| n == 0 || n > data.nrows()) {
        return Err(Error::InvalidArgument(format!("grid size {n} outside 1..={}", data.nrows())));
    }
    Ok(n_grid
        .iter()
        .map(|&n| {
            let prefix = data.rows(0, n).into_owned();
            let outcome = scatter_matrix(&prefix, center)
                .and_then(|w| sme_then_mle(l, &w, n, &MleOptions::default()))
                .and_then(|ws| Ok((n as f64).sqrt() * ws.sme.k.sub(&ws.fit.k)?.frobenius_norm()));
            match outcome {
                Ok(v) => CurvePoint { n, scaled_frobenius: Some(v), failure: None },
                Err(e) => CurvePoint { n, scaled_frobenius: None, failure: Some(e.kind()) },
            }
        })
        .collect())
}

pub fn curve_tsv(points: &[CurvePoint]) -> String {
    let mut out = String::from("n\tscaled_frobenius\tstatus\n");
    for pt in points {
        match pt.scaled_frobenius {
            Some(v) => writeln!(out, "{}\t{}\tok", pt.n, v).unwrap(),
            None => writeln!(out, "{}\tNA\t{}", pt.n, pt.failure.unwrap_or("error")).unwrap(),
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageTimes {
    pub simulate: Duration,
    pub search: Duration,
    pub compare: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub trial: usize,
    pub seed: u64,
    pub s: usize,
    pub p: usize,
    pub n: usize,
    pub missing_edges: usize,
    pub extra_edges: usize,
    /// `√n ‖Ǩ − K̂‖_F` on the selected graph; `NaN` if either fit failed.
    pub frob_sme_mle: f64,
    pub fits_evaluated: usize,
    pub times: StageTimes,
}

/// Simulates lattice data per trial and runs the search at
/// `n = m·p` for each `m` in `n_over_p`, using prefixes of one dataset of
/// the largest size. Trial `t` uses seed `derive_seed(seed, t)`.
pub fn run_lattice_experiment(
    s: usize,
    n_over_p: &[usize],
    trials: usize,
    seed: u64,
    config: &SearchConfig,
) -> Result<Vec<ExperimentReport>> {
    let k = lattice_concentration(s)?;
    let p = s * s;
    let max_n = n_over_p.iter().copied().max().unwrap_or(0) * p;
    if max_n == 0 {
        return Err(Error::InvalidArgument("n/p grid must contain a positive multiple".into()));
    }
    let per_trial: Vec<Result<Vec<ExperimentReport>>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let trial_seed = rng::derive_seed(seed, trial as u64);
            let t0 = Instant::now();
            let data = sample_gaussian(&k, max_n, trial_seed)?;
            let simulate = t0.elapsed();
            n_over_p
                .iter()
                .map(|&m| {
                    let n = m * p;
                    let prefix = data.rows(0, n).into_owned();
                    let t1 = Instant::now();
                    let summary = SearchData::from_data(&prefix, config)?;
                    let res = search_with(&summary, config)?;
                    let search_time = t1.elapsed();
                    let (missing, extra) = edge_errors(&k, &res.edges);
                    let t2 = Instant::now();
                    let l = ModelSpace::from_graph(&res.graph(p));
                    let frob = sme_then_mle(&l, &summary.w, n, &MleOptions::default())
                        .and_then(|ws| Ok((n as f64).sqrt() * ws.sme.k.sub(&ws.fit.k)?.frobenius_norm()))
                        .unwrap_or(f64::NAN);
                    Ok(ExperimentReport {
                        trial,
                        seed: trial_seed,
                        s,
                        p,
                        n,
                        missing_edges: missing,
                        extra_edges: extra,
                        frob_sme_mle: frob,
                        fits_evaluated: res.fits_evaluated,
                        times: StageTimes { simulate, search: search_time, compare: t2.elapsed() },
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(trials * n_over_p.len());
    for r in per_trial {
        out.extend(r?);
    }
    Ok(out)
}

pub const EXPERIMENT_TSV_HEADER: &str = "seed\ts\tp\tn\tmissing\textra\tfrob_sme_mle\tfits_evaluated";

pub fn experiment_tsv(reports: &[ExperimentReport]) -> String {
    let mut out = String::from(EXPERIMENT_TSV_HEADER);
    out.push('\n');
    for r in reports {
        let frob = if r.frob_sme_mle.is_finite() { r.frob_sme_mle.to_string() } else { "NA".into() };
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.seed, r.s, r.p, r.n, r.missing_edges, r.extra_edges, frob, r.fits_evaluated
        )
        .unwrap();
    }
    out
}
