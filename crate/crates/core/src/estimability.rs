//! Existence of the score matching estimator: the Gram system of the
//! estimating equations, the triangular-number dimension bound and a
//! randomized rank certificate.
//!
//! `det M(x)` is a polynomial in the data, so a model space either admits
//! a nonsingular Gram matrix for almost every sample of size `n` or for
//! none. One full-rank random draw therefore certifies estimability.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{check_dim, Result};
use crate::linalg::{self, spectrum, Spectrum, RANK_TOL};
use crate::model_space::ModelSpace;
use crate::rng;
use crate::sym::SymMatrix;

pub const DEFAULT_TRIALS: usize = 3;

/// `m_uv = n tr(e^u W e^v)` and `rhs_u = tr(e^u)`.
#[derive(Debug, Clone)]
pub struct GramSystem {
    pub m: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub n: usize,
    pub rank_estimate: usize,
    pub condition_estimate: f64,
}

/// `tr(A W B)` for sparse generators given as full-matrix entry lists.
///
/// This is the single routine that evaluates Gram entries; incremental and
/// from-scratch builds both go through it so they agree bitwise.
pub fn trace_awb(a: &[(usize, usize, f64)], w: &SymMatrix, b: &[(usize, usize, f64)]) -> f64 {
    let mut acc = 0.0;
    for &(i, j, av) in a {
        for &(k, l, bv) in b {
            if l == i {
                acc += av * bv * w.get(j, k);
            }
        }
    }
    acc
}

/// Gram entry `n tr(e^u W e^v)`.
#[inline]
pub fn gram_entry(a: &[(usize, usize, f64)], w: &SymMatrix, b: &[(usize, usize, f64)], n: usize) -> f64 {
    n as f64 * trace_awb(a, w, b)
}

pub fn build_gram(l: &ModelSpace, w: &SymMatrix, n: usize) -> Result<GramSystem> {
    check_dim(l.p(), w.dim())?;
    let d = l.dim();
    let mut m = DMatrix::zeros(d, d);
    for u in 0..d {
        for v in u..d {
            let e = gram_entry(l.generator_entries(u), w, l.generator_entries(v), n);
            m[(u, v)] = e;
            m[(v, u)] = e;
        }
    }
    let rhs = DVector::from_column_slice(l.generator_traces());
    Ok(GramSystem::new(m, rhs, n))
}

impl GramSystem {
    pub fn new(m: DMatrix<f64>, rhs: DVector<f64>, n: usize) -> Self {
        let Spectrum { rank, condition, .. } = spectrum(&m);
        GramSystem { m, rhs, n, rank_estimate: rank, condition_estimate: condition }
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank_estimate == self.dim()
    }

    /// Solves `m θ = n · rhs`, i.e. `Σ_v θ_v tr(e^u W e^v) = tr(e^u)`.
    pub fn solve(&self) -> Result<DVector<f64>> {
        linalg::solve_symmetric(&self.m, &(&self.rhs * self.n as f64))
    }
}

/// Triangular number `k(k+1)/2`.
pub fn triangular(k: usize) -> usize {
    k * (k + 1) / 2
}

/// Largest `d` allowed by the necessary condition `d <= T_p - T_{p-n}`.
pub fn dimension_bound(p: usize, n: usize) -> usize {
    triangular(p) - triangular(p.saturating_sub(n))
}

/// Necessary condition for `n`-estimability. `true` does not certify it.
pub fn dimension_bound_check(d: usize, p: usize, n: usize) -> bool {
    d <= dimension_bound(p, n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimabilityReport {
    pub estimable: bool,
    pub trials: usize,
    /// Largest `σ_min / σ_max` over trials; the verdict threshold is `1e-10`.
    pub best_relative_singular_value: f64,
    /// Smallest absolute singular value seen over all trials.
    pub min_singular_value: f64,
}

/// Randomized test: draws `trials` datasets of `n` standard normal vectors
/// and reports whether any yields a full-rank Gram matrix.
pub fn check_estimability(l: &ModelSpace, n: usize, seed: u64, trials: usize) -> EstimabilityReport {
    let trials = trials.max(1);
    let spectra: Vec<Spectrum> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::trial_rng(seed, t as u64);
            let x = rng::standard_normal_matrix(&mut r, n, l.p());
            let w = SymMatrix::from_dense(&(x.transpose() * &x / n as f64)).expect("finite draws");
            let sys = build_gram(l, &w, n).expect("dimensions agree");
            spectrum(&sys.m)
        })
        .collect();
    let rel = |s: &Spectrum| if s.max_abs > 0.0 { s.min_abs / s.max_abs } else { 0.0 };
    let best = spectra.iter().map(rel).fold(0.0, f64::max);
    let min_sv = spectra.iter().map(|s| s.min_abs).fold(f64::INFINITY, f64::min);
    EstimabilityReport {
        estimable: l.dim() > 0 && best > RANK_TOL,
        trials,
        best_relative_singular_value: best,
        min_singular_value: min_sv,
    }
}

pub fn is_n_estimable(l: &ModelSpace, n: usize, seed: u64, trials: usize) -> bool {
    check_estimability(l, n, seed, trials).estimable
}
