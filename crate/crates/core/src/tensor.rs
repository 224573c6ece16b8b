//! Dense `n x n x n` tensors, slices, flattenings and the three-sided action
//! of `GL(n) x GL(n) x GL(n)`.
//!
//! Index convention: `P[(i, j, k)]` is the entry `P_{i+1, j+1, k+1}`. Axis
//! `a` contracts the `a`-th index; the two free indices keep their relative
//! order, so `contract(P, Axis::Three, v)` has `(i, j)` entry `sum_k P_ijk v_k`.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{Complex64, Field, GaussianRational, Rational};

/// Tensor axis, numbered 1..=3 as in the usual slice notation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    One,
    Two,
    Three,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::One, Axis::Two, Axis::Three];

    /// Zero-based position of the contracted index.
    pub fn index(self) -> usize {
        match self {
            Axis::One => 0,
            Axis::Two => 1,
            Axis::Three => 2,
        }
    }

    /// One-based axis number.
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn from_number(i: usize) -> Result<Axis> {
        match i {
            1 => Ok(Axis::One),
            2 => Ok(Axis::Two),
            3 => Ok(Axis::Three),
            _ => Err(Error::Dimension(format!("axis must be 1, 2 or 3, got {i}"))),
        }
    }

    /// The two remaining axes in increasing order.
    pub fn others(self) -> (Axis, Axis) {
        match self {
            Axis::One => (Axis::Two, Axis::Three),
            Axis::Two => (Axis::One, Axis::Three),
            Axis::Three => (Axis::One, Axis::Two),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Clone, PartialEq)]
pub struct Tensor3<F> {
    n: usize,
    data: Vec<F>,
}

impl<F> Index<(usize, usize, usize)> for Tensor3<F> {
    type Output = F;
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &F {
        &self.data[(i * self.n + j) * self.n + k]
    }
}

impl<F> IndexMut<(usize, usize, usize)> for Tensor3<F> {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut F {
        &mut self.data[(i * self.n + j) * self.n + k]
    }
}

impl<F: Field> fmt::Debug for Tensor3<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Tensor3(n = {})", self.n)?;
        for k in 0..self.n {
            writeln!(f, "  slice {}: {:?}", k + 1, self.slice(Axis::Three, k))?;
        }
        Ok(())
    }
}

impl<F: Field> Tensor3<F> {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    data.push(f(i, j, k));
                }
            }
        }
        Tensor3 { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_fn(n, |_, _, _| F::zero())
    }

    /// The unit diagonal tensor `D`.
    pub fn unit_diagonal(n: usize) -> Self {
        diag_tensor(&vec![F::one(); n])
    }

    /// Builds a tensor from its axis-3 slices `P_k`, with `P_k[(i, j)] = P_ijk`.
    pub fn from_slices(slices: &[Matrix<F>]) -> Result<Self> {
        let n = slices.len();
        if slices.iter().any(|s| s.rows() != n || s.cols() != n) {
            return Err(Error::Dimension(format!("expected {n} slices of size {n}x{n}")));
        }
        Ok(Self::from_fn(n, |i, j, k| slices[k][(i, j)].clone()))
    }

    /// Nested `entries[i][j][k]`.
    pub fn from_nested(entries: Vec<Vec<Vec<F>>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 {
            return Err(Error::Dimension("tensor must have n >= 1".into()));
        }
        for (i, plane) in entries.iter().enumerate() {
            if plane.len() != n || plane.iter().any(|row| row.len() != n) {
                return Err(Error::Dimension(format!("entries[{i}] is not {n}x{n}")));
            }
        }
        let data: Vec<F> = entries.into_iter().flatten().flatten().collect();
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse("tensor entries must be finite".into()));
        }
        Ok(Tensor3 { n, data })
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<F>>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| (0..self.n).map(|k| self[(i, j, k)].clone()).collect()).collect())
            .collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[F] {
        &self.data
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Tensor3<G> {
        Tensor3 { n: self.n, data: self.data.iter().map(f).collect() }
    }

    pub fn to_complex64(&self) -> Tensor3<Complex64> {
        self.map(|x| x.to_complex64())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|x| x.is_real())
    }

    pub fn scale(&self, c: &F) -> Self {
        self.map(|x| x.clone() * c.clone())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Tensor3 { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Tensor3 { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect() })
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("n = {} versus n = {}", self.n, other.n)));
        }
        Ok(())
    }

    pub fn sum(&self) -> F {
        self.data.iter().cloned().fold(F::zero(), |a, b| a + b)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.abs_f64().powi(2)).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs_f64()).fold(0.0, f64::max)
    }

    /// Entry with the contracted index at position `axis` set to `l` and
    /// the free indices `(a, b)` in increasing axis order.
    fn at(&self, axis: Axis, l: usize, a: usize, b: usize) -> &F {
        match axis {
            Axis::One => &self[(l, a, b)],
            Axis::Two => &self[(a, l, b)],
            Axis::Three => &self[(a, b, l)],
        }
    }

    /// `P *_axis v`.
    pub fn contract(&self, axis: Axis, v: &[F]) -> Result<Matrix<F>> {
        if v.len() != self.n {
            return Err(Error::Dimension(format!("vector of length {} for n = {}", v.len(), self.n)));
        }
        let n = self.n;
        let mut m = Matrix::<F>::zeros(n, n);
        for (l, vl) in v.iter().enumerate() {
            if vl.is_zero() {
                continue;
            }
            for a in 0..n {
                for b in 0..n {
                    let e = self.at(axis, l, a, b);
                    if !e.is_zero() {
                        m[(a, b)] = m[(a, b)].clone() + e.clone() * vl.clone();
                    }
                }
            }
        }
        Ok(m)
    }

    /// The `l`-th slice along `axis` (zero-based `l`).
    pub fn slice(&self, axis: Axis, l: usize) -> Matrix<F> {
        Matrix::from_fn(self.n, self.n, |a, b| self.at(axis, l, a, b).clone())
    }

    pub fn slices(&self, axis: Axis) -> Vec<Matrix<F>> {
        (0..self.n).map(|l| self.slice(axis, l)).collect()
    }

    /// `n^2 x n` flattening; column `v` is the row-major vectorization of slice `v`.
    pub fn flatten(&self, axis: Axis) -> Matrix<F> {
        let n = self.n;
        Matrix::from_fn(n * n, n, |r, v| self.at(axis, v, r / n, r % n).clone())
    }

    /// Ranks of the three flattenings. Exact fields use exact elimination
    /// and ignore `tol`; float fields threshold singular values at
    /// `tol * sigma_max` (`tol = 0` falls back to `1e-9`).
    pub fn multilinear_rank(&self, tol: f64) -> (usize, usize, usize) {
        let rank = |a: Axis| {
            let f = self.flatten(a);
            if F::EXACT {
                f.rank_exact()
            } else {
                f.to_complex64().numerical_rank(if tol > 0.0 { tol } else { 1e-9 })
            }
        };
        (rank(Axis::One), rank(Axis::Two), rank(Axis::Three))
    }

    /// Multiplies one mode by `g`: the index on `axis` is mapped through `g`'s columns.
    pub fn mode_product(&self, axis: Axis, g: &Matrix<F>) -> Result<Self> {
        let n = self.n;
        if g.rows() != n || g.cols() != n {
            return Err(Error::Dimension(format!("{}x{} matrix acting on n = {n}", g.rows(), g.cols())));
        }
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let e = &self[(i, j, k)];
                    if e.is_zero() {
                        continue;
                    }
                    for t in 0..n {
                        let (src, idx) = match axis {
                            Axis::One => (i, (t, j, k)),
                            Axis::Two => (j, (i, t, k)),
                            Axis::Three => (k, (i, j, t)),
                        };
                        let gv = &g[(src, t)];
                        if !gv.is_zero() {
                            out[idx] = out[idx].clone() + e.clone() * gv.clone();
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Right action `P(g1, g2, g3)`:
    /// `P'_{abc} = sum_{ijk} P_{ijk} g1[i][a] g2[j][b] g3[k][c]`.
    pub fn act(&self, g: &GroupElement<F>) -> Result<Self> {
        self.act_matrices(&g.g1, &g.g2, &g.g3)
    }

    /// The action by arbitrary (possibly singular) matrices.
    pub fn act_matrices(&self, g1: &Matrix<F>, g2: &Matrix<F>, g3: &Matrix<F>) -> Result<Self> {
        self.mode_product(Axis::One, g1)?.mode_product(Axis::Two, g2)?.mode_product(Axis::Three, g3)
    }

    /// Reorders axes: `result[(a0, a1, a2)] = self[idx]` where
    /// `idx[order[t] - 1] = a_t`. `order = [2, 3, 1]` moves axis 1 to third place.
    pub fn permute_axes(&self, order: [usize; 3]) -> Self {
        Self::from_fn(self.n, |a0, a1, a2| {
            let mut idx = [0usize; 3];
            idx[order[0] - 1] = a0;
            idx[order[1] - 1] = a1;
            idx[order[2] - 1] = a2;
            self[(idx[0], idx[1], idx[2])].clone()
        })
    }

    /// Brings `axis` to third position keeping the other two in order.
    pub fn axis_to_third(&self, axis: Axis) -> Self {
        match axis {
            Axis::One => self.permute_axes([2, 3, 1]),
            Axis::Two => self.permute_axes([1, 3, 2]),
            Axis::Three => self.clone(),
        }
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = (0..self.n)
            .map(|i| {
                Value::Array(
                    (0..self.n)
                        .map(|j| Value::Array((0..self.n).map(|k| self[(i, j, k)].to_json()).collect()))
                        .collect(),
                )
            })
            .collect();
        json!({ "n": self.n, "field": F::FIELD_TAG, "entries": entries })
    }

    /// Parses `entries` with this field's scalar reader, ignoring the tag.
    pub fn from_json_entries(n: usize, entries: &Value) -> Result<Self> {
        let planes = entries.as_array().ok_or_else(|| Error::Parse("`entries` must be an array".into()))?;
        let mut nested = Vec::with_capacity(planes.len());
        for plane in planes {
            let rows = plane.as_array().ok_or_else(|| Error::Parse("entries[i] must be an array".into()))?;
            let mut p = Vec::with_capacity(rows.len());
            for row in rows {
                let cells = row.as_array().ok_or_else(|| Error::Parse("entries[i][j] must be an array".into()))?;
                p.push(cells.iter().map(F::from_json).collect::<Result<Vec<F>>>()?);
            }
            nested.push(p);
        }
        let t = Self::from_nested(nested)?;
        if t.n != n {
            return Err(Error::Dimension(format!("declared n = {n} but entries have n = {}", t.n)));
        }
        Ok(t)
    }
}

/// `Diag(v)`: `v_i` at `(i, i, i)`, zero elsewhere.
pub fn diag_tensor<F: Field>(v: &[F]) -> Tensor3<F> {
    Tensor3::from_fn(v.len(), |i, j, k| if i == j && j == k { v[i].clone() } else { F::zero() })
}

/// `u (x) v (x) w`.
pub fn rank1<F: Field>(u: &[F], v: &[F], w: &[F]) -> Tensor3<F> {
    Tensor3::from_fn(u.len(), |i, j, k| u[i].clone() * v[j].clone() * w[k].clone())
}

/// `D(g1, g2, g3) = sum_i row_i(g1) (x) row_i(g2) (x) row_i(g3)`.
pub fn from_factors<F: Field>(g1: &Matrix<F>, g2: &Matrix<F>, g3: &Matrix<F>) -> Tensor3<F> {
    let n = g1.rows();
    Tensor3::from_fn(n, |a, b, c| {
        (0..n).fold(F::zero(), |acc, i| acc + g1[(i, a)].clone() * g2[(i, b)].clone() * g3[(i, c)].clone())
    })
}

/// Triple of invertible matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement<F> {
    pub g1: Matrix<F>,
    pub g2: Matrix<F>,
    pub g3: Matrix<F>,
}

/// Float invertibility threshold on the Hadamard ratio `|det| / prod ||rows||`.
pub const FLOAT_INVERTIBILITY_TOL: f64 = 1e-12;

fn check_invertible<F: Field>(g: &Matrix<F>, which: usize, n: usize) -> Result<()> {
    if g.rows() != n || g.cols() != n {
        return Err(Error::Dimension(format!("g{which} is {}x{}, expected {n}x{n}", g.rows(), g.cols())));
    }
    let det = g.det()?;
    let singular = if F::EXACT {
        det.is_zero()
    } else {
        let rows: f64 = (0..n)
            .map(|r| g.row(r).iter().map(|x| x.abs_f64().powi(2)).sum::<f64>().sqrt())
            .product();
        rows == 0.0 || det.abs_f64() / rows <= FLOAT_INVERTIBILITY_TOL
    };
    if singular {
        return Err(Error::NotInvertible(format!("g{which} is singular")));
    }
    Ok(())
}

impl<F: Field> GroupElement<F> {
    pub fn new(g1: Matrix<F>, g2: Matrix<F>, g3: Matrix<F>) -> Result<Self> {
        let n = g1.rows();
        check_invertible(&g1, 1, n)?;
        check_invertible(&g2, 2, n)?;
        check_invertible(&g3, 3, n)?;
        Ok(GroupElement { g1, g2, g3 })
    }

    pub fn identity(n: usize) -> Self {
        GroupElement { g1: Matrix::identity(n), g2: Matrix::identity(n), g3: Matrix::identity(n) }
    }

    /// Acts on a single axis, identity elsewhere.
    pub fn on_axis(axis: Axis, g: Matrix<F>) -> Result<Self> {
        let n = g.rows();
        let mut e = Self::identity(n);
        check_invertible(&g, axis.number(), n)?;
        *e.get_mut(axis) = g;
        Ok(e)
    }

    pub fn n(&self) -> usize {
        self.g1.rows()
    }

    pub fn get(&self, axis: Axis) -> &Matrix<F> {
        match axis {
            Axis::One => &self.g1,
            Axis::Two => &self.g2,
            Axis::Three => &self.g3,
        }
    }

    fn get_mut(&mut self, axis: Axis) -> &mut Matrix<F> {
        match axis {
            Axis::One => &mut self.g1,
            Axis::Two => &mut self.g2,
            Axis::Three => &mut self.g3,
        }
    }

    /// Componentwise product, so that acting by `self` then `other` equals
    /// acting by `self.compose(other)`.
    pub fn compose(&self, other: &Self) -> Self {
        GroupElement { g1: &self.g1 * &other.g1, g2: &self.g2 * &other.g2, g3: &self.g3 * &other.g3 }
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(GroupElement { g1: self.g1.inverse()?, g2: self.g2.inverse()?, g3: self.g3.inverse()? })
    }

    pub fn dets(&self) -> Result<[F; 3]> {
        Ok([self.g1.det()?, self.g2.det()?, self.g3.det()?])
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G + Copy) -> GroupElement<G> {
        GroupElement { g1: self.g1.map(f), g2: self.g2.map(f), g3: self.g3.map(f) }
    }
}

/// A parsed tensor document of any supported field.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyTensor {
    Rational(Tensor3<Rational>),
    Gaussian(Tensor3<GaussianRational>),
    Real(Tensor3<f64>),
    Complex(Tensor3<Complex64>),
}

impl AnyTensor {
    /// Reads `{"n": .., "field": .., "entries": [[[..]]]}`. A missing field
    /// tag is read as `rational`.
    pub fn from_json(doc: &Value) -> Result<Self> {
        let n = doc
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("missing or invalid `n`".into()))? as usize;
        if n == 0 {
            return Err(Error::Dimension("n must be at least 1".into()));
        }
        let entries = doc.get("entries").ok_or_else(|| Error::Parse("missing `entries`".into()))?;
        let field = doc.get("field").and_then(Value::as_str).unwrap_or("rational");
        Ok(match field {
            "rational" => AnyTensor::Rational(Tensor3::from_json_entries(n, entries)?),
            "gaussian" => AnyTensor::Gaussian(Tensor3::from_json_entries(n, entries)?),
            "real" | "float" => AnyTensor::Real(Tensor3::from_json_entries(n, entries)?),
            "complex" => AnyTensor::Complex(Tensor3::from_json_entries(n, entries)?),
            other => return Err(Error::Field(format!("unknown field tag `{other}`"))),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&v)
    }

    pub fn to_json(&self) -> Value {
        match self {
            AnyTensor::Rational(t) => t.to_json(),
            AnyTensor::Gaussian(t) => t.to_json(),
            AnyTensor::Real(t) => t.to_json(),
            AnyTensor::Complex(t) => t.to_json(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            AnyTensor::Rational(t) => t.n(),
            AnyTensor::Gaussian(t) => t.n(),
            AnyTensor::Real(t) => t.n(),
            AnyTensor::Complex(t) => t.n(),
        }
    }

    pub fn field_tag(&self) -> &'static str {
        match self {
            AnyTensor::Rational(_) => Rational::FIELD_TAG,
            AnyTensor::Gaussian(_) => GaussianRational::FIELD_TAG,
            AnyTensor::Real(_) => f64::FIELD_TAG,
            AnyTensor::Complex(_) => Complex64::FIELD_TAG,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, AnyTensor::Rational(_) | AnyTensor::Gaussian(_))
    }

    pub fn to_complex64(&self) -> Tensor3<Complex64> {
        match self {
            AnyTensor::Rational(t) => t.to_complex64(),
            AnyTensor::Gaussian(t) => t.to_complex64(),
            AnyTensor::Real(t) => t.to_complex64(),
            AnyTensor::Complex(t) => t.clone(),
        }
    }

    /// Real float view, when every entry is real.
    pub fn to_real_f64(&self) -> Option<Tensor3<f64>> {
        let c = self.to_complex64();
        c.is_real().then(|| c.map(|z| z.re))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use proptest::prelude::*;

    fn q(v: i64) -> Rational {
        Rational::from_i64(v)
    }

    fn qm(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_i64_rows(rows)
    }

    fn ones(n: usize) -> Vec<Rational> {
        vec![q(1); n]
    }

    #[test]
    fn contract_examples() {
        let d = Tensor3::<Rational>::unit_diagonal(3);
        assert_eq!(d.contract(Axis::Three, &ones(3)).unwrap(), Matrix::identity(3));
        assert!(d.contract(Axis::One, &[q(0), q(0), q(0)]).unwrap().is_zero());
        assert!(d.contract(Axis::One, &ones(2)).is_err());

        let n = qm(&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]]);
        let k3 = Tensor3::from_slices(&[Matrix::identity(3), n.clone(), &n * &n]).unwrap();
        assert_eq!(k3.contract(Axis::Three, &[q(0), q(1), q(0)]).unwrap(), n);
    }

    #[test]
    fn act_examples() {
        let d = Tensor3::<Rational>::unit_diagonal(3);
        assert_eq!(d.act(&GroupElement::identity(3)).unwrap(), d);
        let c = [q(2), q(-3), q(5)];
        let g = GroupElement::on_axis(Axis::Three, Matrix::diag(&c)).unwrap();
        assert_eq!(d.act(&g).unwrap(), diag_tensor(&c));

        let g1 = qm(&[&[1, 2, 0], &[0, 1, 3], &[1, 0, 1]]);
        let g2 = qm(&[&[2, 0, 1], &[1, 1, 0], &[0, 1, 1]]);
        let g3 = qm(&[&[1, 1, 1], &[0, 2, 1], &[1, 0, 3]]);
        let mut expected = Tensor3::zeros(3);
        for i in 0..3 {
            expected = expected.add(&rank1(&g1.row(i), &g2.row(i), &g3.row(i))).unwrap();
        }
        let g = GroupElement::new(g1.clone(), g2.clone(), g3.clone()).unwrap();
        assert_eq!(d.act(&g).unwrap(), expected);
        assert_eq!(from_factors(&g1, &g2, &g3), expected);
    }

    #[test]
    fn singular_group_element_rejected() {
        let s = qm(&[&[1, 2], &[2, 4]]);
        assert!(GroupElement::new(Matrix::identity(2), s, Matrix::identity(2)).is_err());
        let fs = Matrix::<f64>::from_i64_rows(&[&[1, 1], &[1, 1]]);
        assert!(GroupElement::on_axis(Axis::One, fs).is_err());
    }

    #[test]
    fn flatten_examples() {
        let d = Tensor3::<Rational>::unit_diagonal(2);
        for a in Axis::ALL {
            assert_eq!(d.flatten(a), qm(&[&[1, 0], &[0, 0], &[0, 0], &[0, 1]]));
        }
        assert!(Tensor3::<Rational>::zeros(3).flatten(Axis::Two).is_zero());
        let r1 = rank1(&[q(1), q(2)], &[q(3), q(-1)], &[q(2), q(5)]);
        assert_eq!(r1.flatten(Axis::Three).rank_exact(), 1);
    }

    #[test]
    fn multilinear_rank_examples() {
        for n in 1..=5 {
            assert_eq!(Tensor3::<Rational>::unit_diagonal(n).multilinear_rank(0.0), (n, n, n));
        }
        let mut slices = vec![Matrix::<Rational>::identity(3)];
        slices.extend((1..3).map(|_| Matrix::zeros(3, 3)));
        let t = Tensor3::from_slices(&slices).unwrap();
        assert_eq!(t.multilinear_rank(0.0), (3, 3, 1));
        assert_eq!(t.to_complex64().multilinear_rank(1e-9), (3, 3, 1));
    }

    #[test]
    fn diag_tensor_examples() {
        assert_eq!(diag_tensor(&ones(2)), Tensor3::unit_diagonal(2));
        assert!(diag_tensor(&[q(0), q(0)]).is_zero());
        let t = diag_tensor(&[q(1), q(2), q(3)]);
        assert_eq!(t.contract(Axis::Three, &ones(3)).unwrap(), Matrix::diag(&[q(1), q(2), q(3)]));
    }

    #[test]
    fn permute_axes_moves_contracted_index() {
        let t = Tensor3::from_fn(3, |i, j, k| q((i * 9 + j * 3 + k) as i64));
        for axis in Axis::ALL {
            let moved = t.axis_to_third(axis);
            for l in 0..3 {
                assert_eq!(moved.slice(Axis::Three, l), t.slice(axis, l));
            }
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let t = Tensor3::from_fn(2, |i, j, k| Rational::new(((i + 2 * j) as i64 - 3).into(), ((k + 1) * 7).into()));
        let doc = t.to_json();
        assert_eq!(doc["field"], "rational");
        match AnyTensor::from_json(&doc).unwrap() {
            AnyTensor::Rational(back) => assert_eq!(back, t),
            other => panic!("wrong field {other:?}"),
        }
        let c = Tensor3::from_fn(2, |i, j, k| Complex64::new(i as f64 + 0.5, (j * k) as f64));
        assert_eq!(AnyTensor::from_json(&c.to_json()).unwrap(), AnyTensor::Complex(c));
    }

    #[test]
    fn json_rejects_bad_shapes() {
        assert!(AnyTensor::parse(r#"{"n": 2, "field": "rational", "entries": [[["1"]]]}"#).is_err());
        assert!(AnyTensor::parse(r#"{"n": 2, "field": "octonion", "entries": []}"#).is_err());
        assert!(AnyTensor::parse("not json").is_err());
        let ok = AnyTensor::parse(r#"{"n": 1, "field": "rational", "entries": [[["3/4"]]]}"#).unwrap();
        assert_eq!(ok.n(), 1);
    }

    fn small_tensor(n: usize) -> impl Strategy<Value = Tensor3<Rational>> {
        prop::collection::vec(-3i64..4, n * n * n).prop_map(move |v| Tensor3::from_fn(n, |i, j, k| q(v[(i * n + j) * n + k])))
    }

    fn small_matrix(n: usize) -> impl Strategy<Value = Matrix<Rational>> {
        prop::collection::vec(-3i64..4, n * n).prop_map(move |v| Matrix::from_fn(n, n, |r, c| q(v[r * n + c])))
    }

    fn invertible(n: usize) -> impl Strategy<Value = Matrix<Rational>> {
        small_matrix(n).prop_filter("invertible", |m| !m.det().unwrap().is_zero())
    }

    proptest! {
        #[test]
        fn action_is_a_right_action(
            p in small_tensor(3),
            a in prop::collection::vec(small_matrix(3), 3),
            b in prop::collection::vec(small_matrix(3), 3),
        ) {
            let lhs = p.act_matrices(&a[0], &a[1], &a[2]).unwrap().act_matrices(&b[0], &b[1], &b[2]).unwrap();
            let rhs = p.act_matrices(&(&a[0] * &b[0]), &(&a[1] * &b[1]), &(&a[2] * &b[2])).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn slices_transform_contravariantly(p in small_tensor(3), g1 in small_matrix(3), g2 in small_matrix(3)) {
            let moved = p.act_matrices(&g1, &g2, &Matrix::identity(3)).unwrap();
            for l in 0..3 {
                prop_assert_eq!(moved.slice(Axis::Three, l), &(&g1.transpose() * &p.slice(Axis::Three, l)) * &g2);
            }
        }

        #[test]
        fn flatten_factors_through_action(p in small_tensor(3), g3 in small_matrix(3)) {
            let moved = p.act_matrices(&Matrix::identity(3), &Matrix::identity(3), &g3).unwrap();
            prop_assert_eq!(moved.flatten(Axis::Three), &p.flatten(Axis::Three) * &g3);
        }

        #[test]
        fn contraction_is_linear(
            p in small_tensor(3),
            u in prop::collection::vec(-3i64..4, 3),
            v in prop::collection::vec(-3i64..4, 3),
            alpha in -3i64..4,
            beta in -3i64..4,
        ) {
            let (u, v): (Vec<Rational>, Vec<Rational>) = (u.into_iter().map(q).collect(), v.into_iter().map(q).collect());
            let w: Vec<Rational> = u.iter().zip(&v).map(|(a, b)| q(alpha) * a + q(beta) * b).collect();
            for axis in Axis::ALL {
                let lhs = p.contract(axis, &w).unwrap();
                let rhs = &p.contract(axis, &u).unwrap().scale(&q(alpha)) + &p.contract(axis, &v).unwrap().scale(&q(beta));
                prop_assert_eq!(lhs, rhs);
            }
        }

        #[test]
        fn multilinear_rank_is_invariant(
            p in small_tensor(3),
            g in prop::collection::vec(invertible(3), 3),
        ) {
            let moved = p.act_matrices(&g[0], &g[1], &g[2]).unwrap();
            prop_assert_eq!(moved.multilinear_rank(0.0), p.multilinear_rank(0.0));
        }
    }
}
