//! Dense matrices over a [`Field`], with exact elimination routines and a
//! bridge to `nalgebra` for the float-only factorizations.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{Complex64, Field};

#[derive(Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: fmt::Debug> fmt::Debug for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for r in 0..self.rows {
            if r > 0 {
                f.write_str(", ")?;
            }
            f.debug_list().entries(&self.data[r * self.cols..(r + 1) * self.cols]).finish()?;
        }
        f.write_str("]")
    }
}

impl<F> Index<(usize, usize)> for Matrix<F> {
    type Output = F;
    fn index(&self, (r, c): (usize, usize)) -> &F {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<F> IndexMut<(usize, usize)> for Matrix<F> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut F {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl<F: Field> Matrix<F> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| F::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { F::one() } else { F::zero() })
    }

    pub fn diag(v: &[F]) -> Self {
        Self::from_fn(v.len(), v.len(), |r, c| if r == c { v[r].clone() } else { F::zero() })
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        Ok(Matrix { rows: nrows, cols: ncols, data: rows.into_iter().flatten().collect() })
    }

    /// Convenience constructor from small integers.
    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&v| F::from_i64(v)).collect()).collect())
            .expect("rectangular literal")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, r: usize) -> Vec<F> {
        self.data[r * self.cols..(r + 1) * self.cols].to_vec()
    }

    pub fn col(&self, c: usize) -> Vec<F> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn entries(&self) -> &[F] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<F>> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    pub fn conj(&self) -> Self {
        self.map(|x| x.conj())
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Matrix<G> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn scale(&self, s: &F) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn mul_vec(&self, v: &[F]) -> Result<Vec<F>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!("{}x{} times vector of length {}", self.rows, self.cols, v.len())));
        }
        Ok((0..self.rows)
            .map(|r| {
                let mut acc = F::zero();
                for c in 0..self.cols {
                    acc = acc + self[(r, c)].clone() * v[c].clone();
                }
                acc
            })
            .collect())
    }

    pub fn try_mul(&self, other: &Matrix<F>) -> Result<Matrix<F>> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::<F>::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let b = &other[(k, c)];
                    if !b.is_zero() {
                        out[(r, c)] = out[(r, c)].clone() + a.clone() * b.clone();
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |r, c| self[(rows[r], cols[c])].clone())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.abs_f64().powi(2)).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs_f64()).fold(0.0, f64::max)
    }

    /// Index of the pivot row for column `col` among rows `from..`.
    fn pivot_row(&self, col: usize, from: usize) -> Option<usize> {
        if F::EXACT {
            (from..self.rows).find(|&r| !self[(r, col)].is_zero())
        } else {
            let best = (from..self.rows).max_by(|&a, &b| {
                self[(a, col)].abs_f64().partial_cmp(&self[(b, col)].abs_f64()).unwrap()
            })?;
            (!self[(best, col)].is_zero()).then_some(best)
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    /// Determinant by Gaussian elimination (partial pivoting on float fields).
    pub fn det(&self) -> Result<F> {
        if !self.is_square() {
            return Err(Error::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let mut m = self.clone();
        let mut det = F::one();
        for k in 0..n {
            let Some(p) = m.pivot_row(k, k) else {
                return Ok(F::zero());
            };
            if p != k {
                m.swap_rows(p, k);
                det = -det;
            }
            let pivot = m[(k, k)].clone();
            det = det * pivot.clone();
            for r in k + 1..n {
                if m[(r, k)].is_zero() {
                    continue;
                }
                let factor = m[(r, k)].clone() / pivot.clone();
                for c in k..n {
                    let v = m[(r, c)].clone() - factor.clone() * m[(k, c)].clone();
                    m[(r, c)] = v;
                }
            }
        }
        Ok(det)
    }

    /// Reduced row echelon form; returns the pivot columns. Float entries with
    /// magnitude at most `tol` are treated as zero.
    pub fn rref(&self, tol: f64) -> (Matrix<F>, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let p = if F::EXACT {
                m.pivot_row(col, row)
            } else {
                m.pivot_row(col, row).filter(|&p| m[(p, col)].abs_f64() > tol)
            };
            let Some(p) = p else { continue };
            m.swap_rows(p, row);
            let inv = F::one() / m[(row, col)].clone();
            for c in 0..m.cols {
                m[(row, c)] = m[(row, c)].clone() * inv.clone();
            }
            for r in 0..m.rows {
                if r == row || m[(r, col)].is_zero() {
                    continue;
                }
                let factor = m[(r, col)].clone();
                for c in 0..m.cols {
                    let v = m[(r, c)].clone() - factor.clone() * m[(row, c)].clone();
                    m[(r, c)] = v;
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    /// Rank by elimination; exact on exact fields.
    pub fn rank_exact(&self) -> usize {
        self.rref(0.0).1.len()
    }

    /// Basis of the right null space (as columns of the returned matrix).
    pub fn kernel(&self) -> Matrix<F> {
        let (r, pivots) = self.rref(0.0);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Matrix::zeros(self.cols, free.len());
        for (j, &f) in free.iter().enumerate() {
            basis[(f, j)] = F::one();
            for (i, &p) in pivots.iter().enumerate() {
                basis[(p, j)] = -r[(i, f)].clone();
            }
        }
        basis
    }

    pub fn inverse(&self) -> Result<Matrix<F>> {
        if !self.is_square() {
            return Err(Error::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let aug = Matrix::from_fn(n, 2 * n, |r, c| {
            if c < n {
                self[(r, c)].clone()
            } else if c - n == r {
                F::one()
            } else {
                F::zero()
            }
        });
        let (red, pivots) = aug.rref(0.0);
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(Error::NotInvertible(format!("{n}x{n} matrix is singular")));
        }
        Ok(Matrix::from_fn(n, n, |r, c| red[(r, c + n)].clone()))
    }

    /// Classical adjoint (transpose of the cofactor matrix).
    pub fn adjugate(&self) -> Result<Matrix<F>> {
        if !self.is_square() {
            return Err(Error::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        if n == 1 {
            return Ok(Matrix::identity(1));
        }
        let mut out = Matrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let rows: Vec<usize> = (0..n).filter(|&i| i != c).collect();
                let cols: Vec<usize> = (0..n).filter(|&j| j != r).collect();
                let minor = self.submatrix(&rows, &cols).det()?;
                out[(r, c)] = if (r + c) % 2 == 0 { minor } else { -minor };
            }
        }
        Ok(out)
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.rows).all(|r| (0..r.min(self.cols)).all(|c| self[(r, c)].is_zero()))
    }

    /// Largest strictly-lower-triangular magnitude.
    pub fn lower_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.rows {
            for c in 0..r.min(self.cols) {
                worst = worst.max(self[(r, c)].abs_f64());
            }
        }
        worst
    }

    pub fn diagonal(&self) -> Vec<F> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].clone()).collect()
    }

    pub fn to_complex64(&self) -> Matrix<Complex64> {
        self.map(|x| x.to_complex64())
    }

    pub fn to_dmatrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |r, c| self[(r, c)].to_complex64())
    }
}

impl Matrix<Complex64> {
    pub fn from_dmatrix(m: &DMatrix<Complex64>) -> Self {
        Matrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.rows == 0 || self.cols == 0 {
            return Vec::new();
        }
        let mut s: Vec<f64> = self.to_dmatrix().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        s
    }

    /// Numerical rank: singular values above `tol * sigma_max`.
    pub fn numerical_rank(&self, tol: f64) -> usize {
        let s = self.singular_values();
        let Some(&max) = s.first() else { return 0 };
        if max == 0.0 {
            return 0;
        }
        s.iter().filter(|&&v| v > tol * max).count()
    }

    /// Ratio of smallest to largest singular value (0 for singular input).
    pub fn inverse_condition(&self) -> f64 {
        let s = self.singular_values();
        match (s.first(), s.last()) {
            (Some(&max), Some(&min)) if max > 0.0 => min / max,
            _ => 0.0,
        }
    }

    /// Complex Schur form `self = q t q^*` with `t` upper triangular.
    pub fn schur(&self) -> (Matrix<Complex64>, Matrix<Complex64>) {
        let (q, t) = nalgebra::Schur::new(self.to_dmatrix()).unpack();
        (Matrix::from_dmatrix(&q), Matrix::from_dmatrix(&t))
    }

    pub fn adjoint(&self) -> Matrix<Complex64> {
        self.transpose().conj()
    }
}

impl<F: Field> Mul for &Matrix<F> {
    type Output = Matrix<F>;
    fn mul(self, rhs: &Matrix<F>) -> Matrix<F> {
        self.try_mul(rhs).expect("matrix dimensions agree")
    }
}

impl<F: Field> Add for &Matrix<F> {
    type Output = Matrix<F>;
    fn add(self, rhs: &Matrix<F>) -> Matrix<F> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(self.rows, self.cols, |r, c| self[(r, c)].clone() + rhs[(r, c)].clone())
    }
}

impl<F: Field> Sub for &Matrix<F> {
    type Output = Matrix<F>;
    fn sub(self, rhs: &Matrix<F>) -> Matrix<F> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(self.rows, self.cols, |r, c| self[(r, c)].clone() - rhs[(r, c)].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(v: i64) -> Rational {
        Rational::from_i64(v)
    }

    #[test]
    fn det_inverse_adjugate_agree() {
        let m = Matrix::<Rational>::from_i64_rows(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 4]]);
        let det = m.det().unwrap();
        assert_eq!(det, q(18));
        let inv = m.inverse().unwrap();
        assert_eq!(&m * &inv, Matrix::identity(3));
        assert_eq!(m.adjugate().unwrap(), inv.scale(&det));
    }

    #[test]
    fn singular_matrix_has_kernel() {
        let m = Matrix::<Rational>::from_i64_rows(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(m.det().unwrap(), q(0));
        assert_eq!(m.rank_exact(), 2);
        let k = m.kernel();
        assert_eq!(k.cols(), 1);
        assert!((&m * &k).is_zero());
        assert!(m.inverse().is_err());
    }

    #[test]
    fn adjugate_of_singular_matrix_is_defined() {
        let m = Matrix::<Rational>::from_i64_rows(&[&[1, 1], &[1, 1]]);
        assert_eq!(m.adjugate().unwrap(), Matrix::from_i64_rows(&[&[1, -1], &[-1, 1]]));
    }

    #[test]
    fn float_det_uses_pivoting() {
        let m = Matrix::<f64>::from_i64_rows(&[&[0, 1], &[1, 0]]);
        assert_eq!(m.det().unwrap(), -1.0);
    }

    #[test]
    fn schur_triangularizes() {
        let m = Matrix::<Complex64>::from_i64_rows(&[&[1, 2, 0], &[3, 1, 1], &[0, 1, 2]]);
        let (q, t) = m.schur();
        assert!(t.lower_residual() < 1e-12);
        let back = &(&q * &t) * &q.adjoint();
        assert!((&back - &m).max_abs() < 1e-12);
    }
}
