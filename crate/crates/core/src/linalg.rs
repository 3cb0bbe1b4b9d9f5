//! Dense solves for the small `d × d` systems (Gram matrices, Newton
//! Hessians) that sit behind every estimator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Systems whose condition estimate exceeds this are treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Relative eigenvalue threshold used for rank estimates.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    pub max_abs: f64,
    pub min_abs: f64,
    pub rank: usize,
    /// `max |λ| / min |λ|`; infinite for an exactly singular matrix.
    pub condition: f64,
}

/// Eigenvalue summary of a symmetric matrix. For a PSD matrix the
/// absolute eigenvalues are its singular values.
pub fn spectrum(m: &DMatrix<f64>) -> Spectrum {
    let d = m.nrows();
    if d == 0 {
        return Spectrum { max_abs: 0.0, min_abs: 0.0, rank: 0, condition: 1.0 };
    }
    let eig = SymmetricEigen::new(m.clone());
    let abs: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
    let max_abs = abs.iter().cloned().fold(0.0, f64::max);
    let min_abs = abs.iter().cloned().fold(f64::INFINITY, f64::min);
    let rank = abs.iter().filter(|&&v| v > RANK_TOL * max_abs).count();
    let condition = if min_abs > 0.0 { max_abs / min_abs } else { f64::INFINITY };
    Spectrum { max_abs, min_abs, rank, condition }
}

/// Solves `m x = rhs` for symmetric `m` (definite or not) by LU with two
/// steps of iterative refinement.
pub fn solve_symmetric(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let d = m.nrows();
    let spec = spectrum(m);
    if !(spec.condition <= CONDITION_LIMIT) {
        return Err(Error::NotEstimable { rank: spec.rank, dim: d, condition: spec.condition });
    }
    let lu = m.clone().lu();
    let mut x = lu
        .solve(rhs)
        .ok_or(Error::NotEstimable { rank: spec.rank, dim: d, condition: spec.condition })?;
    for _ in 0..2 {
        let r = rhs - m * &x;
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("linear solve produced non-finite values".into()));
    }
    Ok(x)
}

/// Inverse of a well-conditioned symmetric matrix.
pub fn inverse_symmetric(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = m.nrows();
    let spec = spectrum(m);
    if !(spec.condition <= CONDITION_LIMIT) {
        return Err(Error::NotEstimable { rank: spec.rank, dim: d, condition: spec.condition });
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or(Error::NotEstimable { rank: spec.rank, dim: d, condition: spec.condition })?;
    Ok((&inv + inv.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_indefinite_system() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let x = solve_symmetric(&m, &DVector::from_vec(vec![3.0, 3.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_system_reports_rank() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        match solve_symmetric(&m, &DVector::from_element(3, 1.0)) {
            Err(Error::NotEstimable { rank, dim, .. }) => assert_eq!((rank, dim), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
