//! Data summaries: centering, the `n`-divisor scatter matrix and squared
//! correlations.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sym::SymMatrix;

/// Subtracts column means in place.
pub fn center_columns(data: &mut DMatrix<f64>) {
    let n = data.nrows() as f64;
    for mut col in data.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
}

/// `W = n⁻¹ Σ xⁱ xⁱᵀ` over the rows of `data`, optionally after centering.
/// The divisor is `n` in both cases.
pub fn scatter_matrix(data: &DMatrix<f64>, center: bool) -> Result<SymMatrix> {
    let n = data.nrows();
    if n == 0 || data.ncols() == 0 {
        return Err(Error::InvalidArgument("data must have at least one row and one column".into()));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("data matrix".into()));
    }
    let gram = if center {
        let mut c = data.clone();
        center_columns(&mut c);
        c.transpose() * &c
    } else {
        data.transpose() * data
    };
    SymMatrix::from_dense(&(gram / n as f64))
}

/// Squared correlations `W_ij² / (W_ii W_jj)`, with unit diagonal.
pub fn squared_correlations(w: &SymMatrix) -> Result<SymMatrix> {
    let p = w.dim();
    if let Some(column) = (0..p).find(|&i| !(w.get(i, i) > 0.0)) {
        return Err(Error::DegenerateColumn { column });
    }
    SymMatrix::from_upper_fn(p, |i, j| {
        if i == j {
            1.0
        } else {
            w.get(i, j).powi(2) / (w.get(i, i) * w.get(j, j))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_of_toy_data() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 0.0]);
        let w = scatter_matrix(&x, false).unwrap();
        assert_eq!(w, SymMatrix::from_rows(&[&[5.0, 1.0], &[1.0, 2.0]]).unwrap());
        let wc = scatter_matrix(&x, true).unwrap();
        // centred rows (-1, 1), (1, -1)
        assert_eq!(wc, SymMatrix::from_rows(&[&[1.0, -1.0], &[-1.0, 1.0]]).unwrap());
    }

    #[test]
    fn zero_variance_column_is_named() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let w = scatter_matrix(&x, true).unwrap();
        assert!(matches!(squared_correlations(&w), Err(Error::DegenerateColumn { column: 1 })));
    }
}
