//! Dense symmetric matrices in packed upper-triangle storage.
//!
//! Every model quantity in this crate (scatter matrices, concentration
//! matrices, basis generators, projections) is a [`SymMatrix`]. Only one
//! triangle is stored, so a value of this type is symmetric by construction.

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    p: usize,
    data: Vec<f64>,
}

#[inline]
fn packed_index(p: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * (2 * p - i + 1) / 2 + (j - i)
}

impl SymMatrix {
    pub fn zeros(p: usize) -> Self {
        SymMatrix { p, data: vec![0.0; p * (p + 1) / 2] }
    }

    pub fn identity(p: usize) -> Self {
        let mut m = SymMatrix::zeros(p);
        for i in 0..p {
            m.data[packed_index(p, i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_upper_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    /// Builds a matrix by evaluating `f(i, j)` for `i <= j` only.
    pub fn from_upper_fn(p: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(p * (p + 1) / 2);
        for i in 0..p {
            for j in i..p {
                let v = f(i, j);
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("entry ({i}, {j}) = {v}")));
                }
                data.push(v);
            }
        }
        Ok(SymMatrix { p, data })
    }

    /// Builds a matrix from full rows, symmetrizing as `(a_ij + a_ji) / 2`.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let p = rows.len();
        for row in rows {
            check_dim(p, row.len())?;
        }
        Self::from_upper_fn(p, |i, j| 0.5 * (rows[i][j] + rows[j][i]))
    }

    /// Symmetrizing conversion from a dense square matrix.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        check_dim(m.nrows(), m.ncols())?;
        Self::from_upper_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.p, |i, j| self.get(i, j))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed_index(self.p, i, j)]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    ///
    /// Panics if `value` is not finite.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(value.is_finite(), "SymMatrix entries must be finite");
        let idx = packed_index(self.p, i, j);
        self.data[idx] = value;
    }

    /// Packed upper triangle, row-major.
    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    /// Lower triangle in row-major order: (0,0), (1,0), (1,1), (2,0), ...
    pub fn lower_triangle_rows(&self) -> Vec<Vec<f64>> {
        (0..self.p).map(|i| (0..=i).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.p).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        trace_inner_unchecked(self, self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Nonzero entries of the full matrix (both triangles) as `(row, col, value)`.
    pub fn nonzeros(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.p {
            for j in 0..self.p {
                let v = self.get(i, j);
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix { p: self.p, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &SymMatrix) -> Result<SymMatrix> {
        self.zip_with(other, |a, b| a + s * b)
    }

    fn zip_with(&self, other: &SymMatrix, f: impl Fn(f64, f64) -> f64) -> Result<SymMatrix> {
        check_dim(self.p, other.p)?;
        Ok(SymMatrix {
            p: self.p,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Ordinary matrix product; the result is not symmetric in general.
    pub fn matmul(&self, other: &SymMatrix) -> Result<DMatrix<f64>> {
        check_dim(self.p, other.p)?;
        Ok(self.to_dense() * other.to_dense())
    }

    /// `self * x` for a vector `x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.p).map(|i| (0..self.p).map(|j| self.get(i, j) * x[j]).sum()).collect()
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.p, other.p);
        self.data.iter().zip(&other.data).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

fn trace_inner_unchecked(a: &SymMatrix, b: &SymMatrix) -> f64 {
    let p = a.p;
    let mut diag = 0.0;
    let mut off = 0.0;
    let mut idx = 0;
    for i in 0..p {
        diag += a.data[idx] * b.data[idx];
        idx += 1;
        for _ in (i + 1)..p {
            off += a.data[idx] * b.data[idx];
            idx += 1;
        }
    }
    diag + 2.0 * off
}

/// Trace inner product `tr(AB)`.
pub fn trace_inner(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    check_dim(a.p, b.p)?;
    Ok(trace_inner_unchecked(a, b))
}

/// Jordan product `(AB + BA) / 2`.
pub fn jordan_product(a: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix> {
    let ab = a.matmul(b)?;
    // (BA)_ij = (AB)_ji for symmetric A, B
    SymMatrix::from_upper_fn(a.p, |i, j| 0.5 * (ab[(i, j)] + ab[(j, i)]))
}

/// Cholesky factorization `A = C Cᵀ` of a positive definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactorization {
    p: usize,
    /// Lower factor, dense row-major.
    lower: Vec<f64>,
}

/// Factorizes `a`, failing with the 1-based index of the first leading
/// minor whose pivot is not strictly positive.
pub fn spd_factorize(a: &SymMatrix) -> Result<SpdFactorization> {
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix passed to spd_factorize".into()));
    }
    let p = a.p;
    let mut l = vec![0.0; p * p];
    for j in 0..p {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l[j * p + k] * l[j * p + k];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { minor: j + 1 });
        }
        let djj = d.sqrt();
        l[j * p + j] = djj;
        for i in (j + 1)..p {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = s / djj;
        }
    }
    Ok(SpdFactorization { p, lower: l })
}

pub fn is_positive_definite(a: &SymMatrix) -> bool {
    spd_factorize(a).is_ok()
}

impl SpdFactorization {
    pub fn dim(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn lower(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.p + j]
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.p).map(|i| self.lower(i, i).ln()).sum::<f64>()
    }

    /// Solves `C y = b` with `C` the lower factor.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let p = self.p;
        let mut y = b.to_vec();
        for i in 0..p {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lower(i, k) * y[k];
            }
            y[i] = s / self.lower(i, i);
        }
        y
    }

    /// Solves `Cᵀ x = y`.
    pub fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        let p = self.p;
        let mut x = y.to_vec();
        for i in (0..p).rev() {
            let mut s = x[i];
            for k in (i + 1)..p {
                s -= self.lower(k, i) * x[k];
            }
            x[i] = s / self.lower(i, i);
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    pub fn inverse(&self) -> SymMatrix {
        let p = self.p;
        let mut cols = Vec::with_capacity(p);
        let mut e = vec![0.0; p];
        for j in 0..p {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            cols.push(self.solve(&e));
        }
        SymMatrix::from_upper_fn(p, |i, j| 0.5 * (cols[j][i] + cols[i][j]))
            .expect("inverse of a positive definite matrix is finite")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> SymMatrix {
        SymMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn trace_inner_examples() {
        let i3 = SymMatrix::identity(3);
        assert_eq!(trace_inner(&i3, &i3).unwrap(), 3.0);
        let e = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(trace_inner(&e, &e).unwrap(), 2.0);
        let a = m(&[&[1.0, 2.0], &[2.0, 3.0]]);
        // AB = [[2,1],[3,2]], trace 4
        assert_eq!(trace_inner(&a, &e).unwrap(), 4.0);
        assert!(matches!(
            trace_inner(&a, &i3),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn jordan_product_examples() {
        let a = m(&[&[1.0, 2.0, 0.5], &[2.0, -3.0, 1.0], &[0.5, 1.0, 4.0]]);
        assert_eq!(jordan_product(&a, &SymMatrix::identity(3)).unwrap(), a);

        let x = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let z = m(&[&[1.0, 0.0], &[0.0, -1.0]]);
        assert_eq!(jordan_product(&x, &z).unwrap(), SymMatrix::zeros(2));

        let d = SymMatrix::from_diagonal(&[1.0, 2.0]).unwrap();
        assert_eq!(jordan_product(&d, &x).unwrap(), m(&[&[0.0, 1.5], &[1.5, 0.0]]));
        assert!(jordan_product(&d, &a).is_err());
    }

    #[test]
    fn factorization_examples() {
        let f = spd_factorize(&SymMatrix::identity(4)).unwrap();
        assert_eq!(f.log_det(), 0.0);
        assert_eq!(f.inverse(), SymMatrix::identity(4));

        let f = spd_factorize(&SymMatrix::from_diagonal(&[2.0, 0.5]).unwrap()).unwrap();
        assert!(f.log_det().abs() < 1e-15);
        assert!(f.inverse().max_abs_diff(&SymMatrix::from_diagonal(&[0.5, 2.0]).unwrap()) < 1e-15);

        let bad = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(spd_factorize(&bad), Err(Error::NotPositiveDefinite { minor: 2 })));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(SymMatrix::from_diagonal(&[1.0, f64::NAN]).is_err());
        assert!(SymMatrix::from_upper_fn(2, |_, _| f64::INFINITY).is_err());
    }

    #[test]
    fn lower_triangle_layout() {
        let a = m(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 5.0], &[3.0, 5.0, 6.0]]);
        assert_eq!(a.lower_triangle_rows(), vec![vec![1.0], vec![2.0, 4.0], vec![3.0, 5.0, 6.0]]);
    }

    // Cofactor expansion, independent of the factorization path.
    fn cofactor_det(a: &[Vec<f64>]) -> f64 {
        let n = a.len();
        if n == 1 {
            return a[0][0];
        }
        (0..n)
            .map(|c| {
                let minor: Vec<Vec<f64>> = a[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|&(k, _)| k != c).map(|(_, &v)| v).collect())
                    .collect();
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[0][c] * cofactor_det(&minor)
            })
            .sum()
    }

    fn sym_strategy(p: usize) -> impl Strategy<Value = SymMatrix> {
        proptest::collection::vec(-3.0..3.0_f64, p * (p + 1) / 2)
            .prop_map(move |v| SymMatrix { p, data: v })
    }

    fn spd_strategy(p: usize) -> impl Strategy<Value = SymMatrix> {
        proptest::collection::vec(-1.0..1.0_f64, p * p).prop_map(move |v| {
            let b = DMatrix::from_vec(p, p, v);
            let a = &b * b.transpose() + DMatrix::identity(p, p) * 0.5;
            SymMatrix::from_dense(&a).unwrap()
        })
    }

    proptest! {
        #[test]
        fn trace_inner_is_exactly_symmetric(a in sym_strategy(4), b in sym_strategy(4)) {
            prop_assert_eq!(trace_inner(&a, &b).unwrap(), trace_inner(&b, &a).unwrap());
        }

        #[test]
        fn trace_form_is_associative(a in sym_strategy(4), b in sym_strategy(4), c in sym_strategy(4)) {
            let lhs = trace_inner(&a, &jordan_product(&b, &c).unwrap()).unwrap();
            let rhs = trace_inner(&jordan_product(&a, &b).unwrap(), &c).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())));
        }

        #[test]
        fn jordan_square_is_matrix_square(a in sym_strategy(5)) {
            let sq = a.matmul(&a).unwrap();
            let j = jordan_product(&a, &a).unwrap();
            for i in 0..5 {
                for k in 0..5 {
                    prop_assert!((j.get(i, k) - sq[(i, k)]).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn inverse_and_log_det(a in spd_strategy(4)) {
            let f = spd_factorize(&a).unwrap();
            let prod = f.inverse().matmul(&a).unwrap();
            let err = (prod - DMatrix::identity(4, 4)).amax();
            prop_assert!(err <= 1e-10);
            let rows: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| a.get(i, j)).collect()).collect();
            let det = cofactor_det(&rows);
            prop_assert!((f.log_det().exp() - det).abs() <= 1e-10 * det.abs().max(1.0));
        }
    }
}
