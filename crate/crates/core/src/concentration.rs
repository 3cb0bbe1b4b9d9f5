//! Estimators for Gaussian linear concentration models `K ∈ L`.
//!
//! * [`sme_fit`] solves the linear score matching equations
//!   `Σ_v θ_v tr(e^u W e^v) = tr(e^u)`.
//! * [`jordan_fit`] is the closed form `(Π_L W)⁻¹`, valid when `L` is a
//!   Jordan subalgebra containing the identity; there SME and MLE agree.
//! * [`mle_fit`] maximizes `log det K − tr(KW)` over `L` by damped Newton.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::estimability::build_gram;
use crate::linalg;
use crate::model_space::{Coefficients, ModelSpace};
use crate::sym::{spd_factorize, trace_inner, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Sme,
    Mle,
    Jordan,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sme => "sme",
            Method::Mle => "mle",
            Method::Jordan => "jordan",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub k: SymMatrix,
    pub theta: Coefficients,
    /// Minimized score `−n tr(K)/2` for SME and Jordan fits. For MLE fits
    /// the same expression evaluated at `K̂`.
    pub j2: f64,
    pub positive_definite: bool,
    pub method: Method,
    pub n: usize,
    /// Newton iterations; 0 for linear and closed-form fits.
    pub iterations: usize,
    /// `‖g‖∞` at the returned iterate (MLE only, 0 otherwise).
    pub gradient_norm: f64,
    /// `max_u |tr(e^u W K) − tr(e^u)|` for SME fits,
    /// `max_u |tr(e^u W) − tr(e^u K⁻¹)|` for MLE and Jordan fits.
    pub equation_residual: f64,
    /// Condition estimate of the Gram system (SME only).
    pub gram_condition: Option<f64>,
}

impl FitResult {
    fn new(l: &ModelSpace, theta: Coefficients, method: Method, n: usize) -> Result<Self> {
        let k = l.to_matrix(&theta)?;
        let positive_definite = spd_factorize(&k).is_ok();
        Ok(FitResult {
            j2: -(n as f64) * k.trace() / 2.0,
            k,
            theta,
            positive_definite,
            method,
            n,
            iterations: 0,
            gradient_norm: 0.0,
            equation_residual: 0.0,
            gram_condition: None,
        })
    }
}

/// `tr(e^u M)` for every generator, with `M` a general dense matrix.
fn generator_traces_of(l: &ModelSpace, m: &DMatrix<f64>) -> Vec<f64> {
    (0..l.dim())
        .map(|u| l.generator_entries(u).iter().map(|&(i, j, a)| a * m[(j, i)]).sum())
        .collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Largest violation of the score matching equations at `k`.
pub fn sme_residual(l: &ModelSpace, w: &SymMatrix, k: &SymMatrix) -> Result<f64> {
    check_dim(l.p(), w.dim())?;
    let wk = w.matmul(k)?;
    let lhs = generator_traces_of(l, &wk);
    Ok(lhs
        .iter()
        .zip(l.generator_traces())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
}

/// Largest violation of the likelihood equations `tr(e^u W) = tr(e^u K⁻¹)`.
pub fn likelihood_residual(l: &ModelSpace, w: &SymMatrix, k: &SymMatrix) -> Result<f64> {
    let s = spd_factorize(k)?.inverse();
    let diff = s.sub(w)?;
    check_dim(l.p(), diff.dim())?;
    Ok(inf_norm(&generator_traces_of(l, &diff.to_dense())))
}

/// Score matching estimate. The fit is returned even when `Ǩ` is not
/// positive definite; check [`FitResult::positive_definite`].
pub fn sme_fit(l: &ModelSpace, w: &SymMatrix, n: usize) -> Result<FitResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let sys = build_gram(l, w, n)?;
    let theta = sys.solve()?;
    let mut fit = FitResult::new(l, Coefficients(theta.iter().copied().collect()), Method::Sme, n)?;
    fit.equation_residual = sme_residual(l, w, &fit.k)?;
    fit.gram_condition = Some(sys.condition_estimate);
    Ok(fit)
}

/// Closed form `(Π_L W)⁻¹` for Jordan subalgebras containing `I_p`.
pub fn jordan_fit(l: &ModelSpace, w: &SymMatrix, n: usize) -> Result<FitResult> {
    check_dim(l.p(), w.dim())?;
    if !l.contains_identity() || !l.is_jordan_subalgebra() {
        return Err(Error::NotJordan);
    }
    let pw = l.project(w)?;
    let chol = spd_factorize(&pw).map_err(|_| {
        let spec = linalg::spectrum(&pw.to_dense());
        Error::NotEstimable { rank: spec.rank, dim: l.p(), condition: spec.condition }
    })?;
    let inv = chol.inverse();
    let theta = Coefficients(l.coordinates(&inv)?);
    let residual = inv.sub(&l.to_matrix(&theta)?)?.frobenius_norm();
    if residual > 1e-8 * inv.frobenius_norm() {
        return Err(Error::NotInModelSpace { residual });
    }
    let mut fit = FitResult::new(l, theta, Method::Jordan, n)?;
    fit.equation_residual = likelihood_residual(l, w, &fit.k)?;
    Ok(fit)
}

#[derive(Debug, Clone, Copy)]
pub struct MleOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub max_halvings: usize,
    pub armijo: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions { max_iter: 200, grad_tol: 1e-10, max_halvings: 60, armijo: 1e-4 }
    }
}

/// Consecutive growth steps along a `W`-null direction before the
/// likelihood is declared unbounded.
const UNBOUNDED_STREAK: usize = 10;

/// Relative size of a Newton decrement treated as below the rounding
/// level of the log-likelihood.
const NEWTON_RESOLUTION: f64 = 1e-10;

/// `tr(A S B S)` for sparse `A`, `B`.
fn trace_asbs(a: &[(usize, usize, f64)], s: &SymMatrix, b: &[(usize, usize, f64)]) -> f64 {
    let mut acc = 0.0;
    for &(i, j, av) in a {
        for &(k, l, bv) in b {
            acc += av * bv * s.get(j, k) * s.get(l, i);
        }
    }
    acc
}

fn log_likelihood(k: &SymMatrix, w: &SymMatrix) -> Option<f64> {
    let chol = spd_factorize(k).ok()?;
    Some(chol.log_det() - trace_inner(k, w).expect("dimensions checked"))
}

/// Maximum likelihood estimate by damped Newton, started at `I_p`.
pub fn mle_fit(l: &ModelSpace, w: &SymMatrix, n: usize, opts: &MleOptions) -> Result<FitResult> {
    if !l.contains_identity() {
        return Err(Error::InvalidArgument(
            "default Newton start I_p is not in the model space; use mle_fit_from".into(),
        ));
    }
    let start = l.from_matrix(&SymMatrix::identity(l.p()))?;
    mle_fit_from(l, w, n, &start, opts)
}

/// Damped Newton from an explicit positive definite starting point.
///
/// Gradient `g_u = tr(e^u (K⁻¹ − W))`, Hessian `h_uv = −tr(e^u K⁻¹ e^v K⁻¹)`.
/// Steps are halved until `K` stays positive definite and the Armijo
/// condition holds. Stops once `‖g‖∞ ≤ grad_tol (1 + max_u |tr(e^u W)|)`.
///
/// An unbounded likelihood is reported when [`UNBOUNDED_STREAK`]
/// consecutive accepted steps each grow `‖K‖_F` by at least half while the
/// change in `tr(KW)` is negligible against the gain in `ℓ`. This is a
/// heuristic.
pub fn mle_fit_from(
    l: &ModelSpace,
    w: &SymMatrix,
    n: usize,
    start: &Coefficients,
    opts: &MleOptions,
) -> Result<FitResult> {
    check_dim(l.p(), w.dim())?;
    check_dim(l.dim(), start.len())?;
    let d = l.dim();
    let mut theta = start.0.clone();
    let mut k = l.to_matrix(start)?;
    let mut ll = log_likelihood(&k, w)
        .ok_or_else(|| Error::InvalidArgument("Newton start is not positive definite".into()))?;
    let tw: Vec<f64> = generator_traces_of(l, &w.to_dense());
    let tol = opts.grad_tol * (1.0 + inf_norm(&tw));

    let mut streak = 0usize;
    let mut gnorm = f64::INFINITY;
    for iter in 0..=opts.max_iter {
        let s = spd_factorize(&k)?.inverse();
        let ts = generator_traces_of(l, &s.to_dense());
        let g: Vec<f64> = ts.iter().zip(&tw).map(|(a, b)| a - b).collect();
        gnorm = inf_norm(&g);
        if gnorm <= tol {
            let mut fit = FitResult::new(l, Coefficients(theta), Method::Mle, n)?;
            fit.iterations = iter;
            fit.gradient_norm = gnorm;
            fit.equation_residual = gnorm;
            return Ok(fit);
        }
        if iter == opts.max_iter {
            break;
        }

        let mut h = DMatrix::zeros(d, d);
        for u in 0..d {
            for v in u..d {
                let e = -trace_asbs(l.generator_entries(u), &s, l.generator_entries(v));
                h[(u, v)] = e;
                h[(v, u)] = e;
            }
        }
        let gv = DVector::from_vec(g.clone());
        let dir = match linalg::solve_symmetric(&h, &(-&gv)) {
            Ok(x) if gv.dot(&x) > 0.0 => x,
            _ => gv.clone(),
        };
        let slope = gv.dot(&dir);
        // Once the predicted gain is below the resolution of ℓ the Armijo
        // test is noise; take the step if it does not lose more than that.
        let resolution = NEWTON_RESOLUTION * (1.0 + ll.abs());
        let floor = if slope <= resolution { -resolution } else { 0.0 };

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand: Vec<f64> = theta.iter().zip(dir.iter()).map(|(t, dt)| t + step * dt).collect();
            let kc = l.to_matrix(&Coefficients(cand.clone()))?;
            if let Some(llc) = log_likelihood(&kc, w) {
                if llc >= ll + opts.armijo * step * slope + floor {
                    accepted = Some((cand, kc, llc));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((cand, kc, llc)) = accepted else {
            break;
        };

        let grew = kc.frobenius_norm() >= 1.5 * k.frobenius_norm();
        let w_change = (trace_inner(&kc, w)? - trace_inner(&k, w)?).abs();
        let gain = llc - ll;
        if grew && gain > 0.0 && w_change <= 1e-6 * gain {
            streak += 1;
            if streak >= UNBOUNDED_STREAK {
                return Err(Error::MleNonexistent { iterations: iter + 1 });
            }
        } else {
            streak = 0;
        }
        theta = cand;
        k = kc;
        ll = llc;
    }

    let mut best = FitResult::new(l, Coefficients(theta), Method::Mle, n)?;
    best.iterations = opts.max_iter;
    best.gradient_norm = gnorm;
    best.equation_residual = gnorm;
    Err(Error::NonConvergence { iterations: opts.max_iter, gradient_norm: gnorm, best: Box::new(best) })
}

#[derive(Debug, Clone)]
pub struct WarmStartFit {
    pub fit: FitResult,
    pub sme: FitResult,
    pub started_from_sme: bool,
    /// Newton iterations from `I_p` minus iterations from the SME start,
    /// when the `I_p` run converged.
    pub iterations_saved: Option<i64>,
}

/// MLE started at the score matching estimate when that is positive
/// definite, otherwise at `I_p`.
pub fn sme_then_mle(l: &ModelSpace, w: &SymMatrix, n: usize, opts: &MleOptions) -> Result<WarmStartFit> {
    let sme = sme_fit(l, w, n)?;
    let cold = if l.contains_identity() { mle_fit(l, w, n, opts).ok() } else { None };
    let (fit, started_from_sme) = if sme.positive_definite {
        (mle_fit_from(l, w, n, &sme.theta, opts)?, true)
    } else {
        (mle_fit(l, w, n, opts)?, false)
    };
    let iterations_saved = cold.map(|c| c.iterations as i64 - fit.iterations as i64);
    Ok(WarmStartFit { fit, sme, started_from_sme, iterations_saved })
}
