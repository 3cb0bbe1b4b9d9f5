//! Score matching for exponential families `log g(x|θ) = ⟨θ, t(x)⟩ − a(θ) + b(x)`.
//!
//! A family is described only through two per-observation quantities in
//! basis coordinates: the Gram term `D(x)* D(x)` and the drift term
//! `D(x)* ∇b(x) + Δt(x)`. The normalizer `a(θ)` never appears.
//!
//! No standardization of `x` is performed. The estimator is not invariant
//! under transformations of the data or a change of base measure, so the
//! caller decides the scale on which observations are presented.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::model_space::{Coefficients, ModelSpace};

pub trait ExponentialFamily {
    type Observation;

    /// Parameter dimension `d`.
    fn dim(&self) -> usize;

    /// `D(x)* D(x)` as a symmetric PSD `d × d` matrix.
    fn gram_term(&self, x: &Self::Observation) -> DMatrix<f64>;

    /// `D(x)* ∇b(x) + Δt(x)` as a length-`d` vector.
    fn drift_term(&self, x: &Self::Observation) -> DVector<f64>;
}

fn accumulate<F: ExponentialFamily>(
    family: &F,
    samples: &[F::Observation],
) -> (DMatrix<f64>, DVector<f64>) {
    let d = family.dim();
    let mut gram = DMatrix::zeros(d, d);
    let mut drift = DVector::zeros(d);
    for x in samples {
        gram += family.gram_term(x);
        drift += family.drift_term(x);
    }
    (gram, drift)
}

/// `θ̌ = −(Σ D*D)⁻¹ Σ (D*∇b + Δt)`.
pub fn solve_generic_sme<F: ExponentialFamily>(
    family: &F,
    samples: &[F::Observation],
) -> Result<Coefficients> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    let (gram, drift) = accumulate(family, samples);
    let theta = linalg::solve_symmetric(&gram, &(-drift))?;
    Ok(Coefficients(theta.iter().copied().collect()))
}

/// `Σᵢ (gram_term(xⁱ) θ + drift_term(xⁱ))`, zero at the estimate.
pub fn estimating_equation<F: ExponentialFamily>(
    family: &F,
    samples: &[F::Observation],
    theta: &Coefficients,
) -> Result<DVector<f64>> {
    check_dim(family.dim(), theta.len())?;
    let (gram, drift) = accumulate(family, samples);
    Ok(gram * DVector::from_column_slice(theta.as_slice()) + drift)
}

/// Minimized objective `Σᵢ ⟨θ̌, drift_term(xⁱ)⟩ / 2`, with the terms that
/// depend on `x` alone dropped.
pub fn minimal_score<F: ExponentialFamily>(
    family: &F,
    samples: &[F::Observation],
    theta: &Coefficients,
) -> Result<f64> {
    check_dim(family.dim(), theta.len())?;
    let (_, drift) = accumulate(family, samples);
    Ok(drift.dot(&DVector::from_column_slice(theta.as_slice())) / 2.0)
}

/// Plug-in Godambe (sandwich) covariance of `θ̌`.
#[derive(Debug, Clone)]
pub struct SandwichEstimate {
    /// `Ψ_n = n⁻¹ Σ D*D`.
    pub psi_hat: DMatrix<f64>,
    /// Covariance of the per-sample estimating function, divisor `n`.
    pub h_hat: DMatrix<f64>,
    /// `Ψ_n⁻¹ H_n Ψ_n⁻¹ / n`.
    pub cov_theta: DMatrix<f64>,
    /// Mean of the per-sample estimating function (zero at `θ̌`).
    pub score_mean: DVector<f64>,
}

impl SandwichEstimate {
    pub fn standard_errors(&self) -> Vec<f64> {
        self.cov_theta.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect()
    }
}

pub fn sandwich_covariance<F: ExponentialFamily>(
    family: &F,
    samples: &[F::Observation],
    theta: &Coefficients,
) -> Result<SandwichEstimate> {
    let d = family.dim();
    check_dim(d, theta.len())?;
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidArgument("sandwich covariance needs at least two samples".into()));
    }
    let th = DVector::from_column_slice(theta.as_slice());
    let mut psi = DMatrix::zeros(d, d);
    let mut scores = Vec::with_capacity(n);
    for x in samples {
        let g = family.gram_term(x);
        scores.push(&g * &th + family.drift_term(x));
        psi += g;
    }
    let nf = n as f64;
    psi /= nf;
    let mean = scores.iter().fold(DVector::zeros(d), |acc, s| acc + s) / nf;
    let mut h = DMatrix::zeros(d, d);
    for s in &scores {
        let c = s - &mean;
        h += &c * c.transpose();
    }
    h /= nf;
    let psi_inv = linalg::inverse_symmetric(&psi)?;
    let cov = &psi_inv * &h * &psi_inv / nf;
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(SandwichEstimate { psi_hat: psi, h_hat: h, cov_theta: cov, score_mean: mean })
}

/// Univariate centred Gaussian with precision `θ`: `t(x) = −x²/2`, so the
/// Gram term is `x²` and the drift term is `−1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PrecisionFamily1d;

impl ExponentialFamily for PrecisionFamily1d {
    type Observation = f64;

    fn dim(&self) -> usize {
        1
    }

    fn gram_term(&self, x: &f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x * x)
    }

    fn drift_term(&self, _x: &f64) -> DVector<f64> {
        DVector::from_element(1, -1.0)
    }
}

/// Gaussian linear concentration model over a [`ModelSpace`]:
/// Gram term `(e^u x)·(e^v x)` and drift term `−tr(e^u)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianConcentrationFamily<'a> {
    space: &'a ModelSpace,
}

impl<'a> GaussianConcentrationFamily<'a> {
    pub fn new(space: &'a ModelSpace) -> Self {
        GaussianConcentrationFamily { space }
    }

    fn apply(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let p = self.space.p();
        (0..self.space.dim())
            .map(|u| {
                let mut y = vec![0.0; p];
                for &(i, j, a) in self.space.generator_entries(u) {
                    y[i] += a * x[j];
                }
                y
            })
            .collect()
    }
}

impl ExponentialFamily for GaussianConcentrationFamily<'_> {
    type Observation = Vec<f64>;

    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn gram_term(&self, x: &Vec<f64>) -> DMatrix<f64> {
        let ex = self.apply(x);
        let d = ex.len();
        let mut g = DMatrix::zeros(d, d);
        for u in 0..d {
            for v in u..d {
                let e: f64 = ex[u].iter().zip(&ex[v]).map(|(a, b)| a * b).sum();
                g[(u, v)] = e;
                g[(v, u)] = e;
            }
        }
        g
    }

    fn drift_term(&self, _x: &Vec<f64>) -> DVector<f64> {
        -DVector::from_column_slice(self.space.generator_traces())
    }
}
