//! Sparse multivariate polynomials over a [`Field`] and matrices of them.
//!
//! Terms are kept in a `BTreeMap` keyed by [`Monomial`], whose order is
//! graded lexicographic (total degree first, then larger exponent on the
//! lower-numbered variable). Printing walks the map in descending order so
//! the text form is canonical, e.g. `2*x1*x2*x3 + -1*x3^3`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{parse_rational, Field};

/// Exponent vector of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn checked_div(&self, other: &Monomial) -> Option<Monomial> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(Monomial)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, PartialEq)]
pub struct MultiPoly<C> {
    nvars: usize,
    terms: BTreeMap<Monomial, C>,
}

impl<C: Field> MultiPoly<C> {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::one(nvars), c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, C::one())
    }

    /// The variable `x_{i+1}` (zero-based index `i`).
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index {i} out of range for {nvars} variables");
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::var(nvars, i), C::one());
        p
    }

    /// Linear form `sum_i c_i x_i`.
    pub fn linear(coeffs: &[C]) -> Self {
        let nvars = coeffs.len();
        let mut p = Self::zero(nvars);
        for (i, c) in coeffs.iter().enumerate() {
            p.add_term(Monomial::var(nvars, i), c.clone());
        }
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, C)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::Dimension(format!("exponent vector of length {} for {nvars} variables", e.len())));
            }
            p.add_term(Monomial(e), c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in descending graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter().rev()
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Monomial::degree)
    }

    /// Smallest total degree among the terms.
    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).min()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.total_degree() == self.min_degree()
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.0[var]).max().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.degree() == 0)
    }

    pub fn leading(&self) -> Option<(&Monomial, &C)> {
        self.terms.iter().next_back()
    }

    fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get().clone() + c;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    /// Coefficient of `x^alpha`.
    pub fn coefficient(&self, alpha: &[u32]) -> Result<C> {
        if alpha.len() != self.nvars {
            return Err(Error::Dimension(format!(
                "exponent vector of length {} for {} variables",
                alpha.len(),
                self.nvars
            )));
        }
        Ok(self.terms.get(&Monomial(alpha.to_vec())).cloned().unwrap_or_else(C::zero))
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        MultiPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v.clone() * c.clone())).collect(),
        }
    }

    pub fn map_coeffs<D: Field>(&self, f: impl Fn(&C) -> D) -> MultiPoly<D> {
        let mut out = MultiPoly::zero(self.nvars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut result = Self::one(self.nvars);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Evaluates at a point of the coefficient field.
    pub fn eval(&self, point: &[C]) -> Result<C> {
        if point.len() != self.nvars {
            return Err(Error::Dimension(format!("point of length {} for {} variables", point.len(), self.nvars)));
        }
        let mut powers: Vec<Vec<C>> = point.iter().map(|x| vec![C::one(), x.clone()]).collect();
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let e = e as usize;
                while powers[i].len() <= e {
                    let next = powers[i].last().unwrap().clone() * point[i].clone();
                    powers[i].push(next);
                }
                t = t * powers[i][e].clone();
            }
            acc = acc + t;
        }
        Ok(acc)
    }

    /// Partial derivative with respect to variable `var`.
    pub fn partial(&self, var: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[var] -= 1;
            out.add_term(Monomial(exps), c.clone() * C::from_i64(e as i64));
        }
        out
    }

    /// Replaces `x` by `g x`, i.e. `x_a -> sum_b g[a][b] x_b`.
    pub fn substitute_linear(&self, g: &Matrix<C>) -> Result<Self> {
        if g.rows() != self.nvars || g.cols() != self.nvars {
            return Err(Error::Dimension(format!(
                "substitution matrix {}x{} for {} variables",
                g.rows(),
                g.cols(),
                self.nvars
            )));
        }
        let forms: Vec<Self> = (0..self.nvars).map(|a| Self::linear(&g.row(a))).collect();
        self.compose(&forms)
    }

    /// Substitutes `x_a -> forms[a]`; the result lives in the variables of the forms.
    pub fn compose(&self, forms: &[Self]) -> Result<Self> {
        if forms.len() != self.nvars {
            return Err(Error::Dimension(format!("{} forms for {} variables", forms.len(), self.nvars)));
        }
        let target = forms.first().map_or(0, |f| f.nvars);
        let mut powers: Vec<Vec<Self>> = forms.iter().map(|f| vec![Self::one(target), f.clone()]).collect();
        let mut out = Self::zero(target);
        for (m, c) in &self.terms {
            let mut t = Self::constant(target, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let e = e as usize;
                while powers[i].len() <= e {
                    let next = powers[i].last().unwrap() * &forms[i];
                    powers[i].push(next);
                }
                t = &t * &powers[i][e];
            }
            out = &out + &t;
        }
        Ok(out)
    }

    /// Exact quotient `self / divisor`; errors when the division leaves a remainder.
    pub fn exact_div(&self, divisor: &Self) -> Result<Self> {
        let Some((lm, lc)) = divisor.leading() else {
            return Err(Error::NotInvertible("division by the zero polynomial".into()));
        };
        let (lm, lc) = (lm.clone(), lc.clone());
        let mut rem = self.clone();
        let mut quot = Self::zero(self.nvars);
        while let Some((m, c)) = rem.leading() {
            let Some(qm) = m.checked_div(&lm) else {
                return Err(Error::Inconsistent("polynomial division is not exact".into()));
            };
            let qc = c.clone() / lc.clone();
            let mut t = Self::zero(self.nvars);
            t.add_term(qm, qc);
            rem = &rem - &(&t * divisor);
            quot = &quot + &t;
        }
        Ok(quot)
    }

    /// Canonical text with variables named by `names`.
    pub fn to_string_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut parts = Vec::with_capacity(self.terms.len());
        for (m, c) in self.terms() {
            let mut s = c.coeff_string();
            for (i, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => s.push_str(&format!("*{}", names[i])),
                    _ => s.push_str(&format!("*{}^{}", names[i], e)),
                }
            }
            parts.push(s);
        }
        parts.join(" + ")
    }

    /// Parses the canonical text form with variables `x1..x{nvars}`.
    /// Coefficients are rational (`p/q`, integers or decimals).
    pub fn parse(text: &str, nvars: usize) -> Result<Self> {
        let mut p = Self::zero(nvars);
        let text = text.trim();
        if text == "0" {
            return Ok(p);
        }
        for raw in text.split(" + ") {
            let mut exps = vec![0u32; nvars];
            let mut coeff = C::one();
            for factor in raw.trim().split('*') {
                let factor = factor.trim();
                if let Some(rest) = factor.strip_prefix('x') {
                    let (idx, e) = match rest.split_once('^') {
                        Some((i, e)) => (i, e.parse::<u32>().map_err(|e| Error::Parse(e.to_string()))?),
                        None => (rest, 1),
                    };
                    let idx: usize = idx.parse().map_err(|_| Error::Parse(format!("bad variable `{factor}`")))?;
                    if idx == 0 || idx > nvars {
                        return Err(Error::Parse(format!("variable `{factor}` out of range")));
                    }
                    exps[idx - 1] += e;
                } else {
                    coeff = coeff * C::from_rational(&parse_rational(factor)?);
                }
            }
            p.add_term(Monomial(exps), coeff);
        }
        Ok(p)
    }
}

/// Default variable names `x1, x2, ...`.
pub fn default_names(nvars: usize) -> Vec<String> {
    (1..=nvars).map(|i| format!("x{i}")).collect()
}

impl<C: Field> fmt::Display for MultiPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string_with(&default_names(self.nvars)))
    }
}

impl<C: Field> fmt::Debug for MultiPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<C: Field> Add for &MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn add(self, rhs: &MultiPoly<C>) -> MultiPoly<C> {
        assert_eq!(self.nvars, rhs.nvars, "polynomials over different variable sets");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<C: Field> Sub for &MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn sub(self, rhs: &MultiPoly<C>) -> MultiPoly<C> {
        assert_eq!(self.nvars, rhs.nvars, "polynomials over different variable sets");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl<C: Field> Neg for &MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn neg(self) -> MultiPoly<C> {
        self.scale(&-C::one())
    }
}

impl<C: Field> Mul for &MultiPoly<C> {
    type Output = MultiPoly<C>;
    fn mul(self, rhs: &MultiPoly<C>) -> MultiPoly<C> {
        assert_eq!(self.nvars, rhs.nvars, "polynomials over different variable sets");
        let mut out = MultiPoly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        out
    }
}

/// Dense matrix of polynomials sharing one variable set.
#[derive(Clone, PartialEq)]
pub struct PolyMatrix<C> {
    rows: usize,
    cols: usize,
    nvars: usize,
    entries: Vec<MultiPoly<C>>,
}

impl<C: Field> fmt::Debug for PolyMatrix<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> =
            (0..self.rows).map(|r| (0..self.cols).map(|c| self.get(r, c).to_string()).collect()).collect();
        write!(f, "{rows:?}")
    }
}

impl<C: Field> PolyMatrix<C> {
    pub fn from_fn(rows: usize, cols: usize, nvars: usize, mut f: impl FnMut(usize, usize) -> MultiPoly<C>) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let e = f(r, c);
                assert_eq!(e.nvars, nvars, "entry ({r},{c}) has the wrong variable count");
                entries.push(e);
            }
        }
        PolyMatrix { rows, cols, nvars, entries }
    }

    /// Constant polynomial matrix.
    pub fn from_matrix(m: &Matrix<C>, nvars: usize) -> Self {
        Self::from_fn(m.rows(), m.cols(), nvars, |r, c| MultiPoly::constant(nvars, m[(r, c)].clone()))
    }

    /// `sum_l x_l * mats[l]`, a linear pencil in `mats.len()` variables.
    pub fn pencil(mats: &[Matrix<C>]) -> Self {
        let nvars = mats.len();
        let (rows, cols) = mats.first().map_or((0, 0), |m| (m.rows(), m.cols()));
        Self::from_fn(rows, cols, nvars, |r, c| {
            MultiPoly::linear(&mats.iter().map(|m| m[(r, c)].clone()).collect::<Vec<_>>())
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn get(&self, r: usize, c: usize) -> &MultiPoly<C> {
        &self.entries[r * self.cols + c]
    }

    pub fn entries(&self) -> &[MultiPoly<C>] {
        &self.entries
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && (0..self.rows).all(|r| (0..r).all(|c| self.get(r, c) == self.get(c, r)))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(MultiPoly::is_zero)
    }

    pub fn eval(&self, point: &[C]) -> Result<Matrix<C>> {
        let mut vals = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            vals.push(e.eval(point)?);
        }
        Ok(Matrix::from_fn(self.rows, self.cols, |r, c| vals[r * self.cols + c].clone()))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.cols, self.nvars, |r, c| {
            let mut acc = MultiPoly::zero(self.nvars);
            for k in 0..self.cols {
                let (a, b) = (self.get(r, k), other.get(k, c));
                if !a.is_zero() && !b.is_zero() {
                    acc = &acc + &(a * b);
                }
            }
            acc
        }))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(self.rows, self.cols, self.nvars, |r, c| self.get(r, c) - other.get(r, c))
    }

    /// Determinant of the submatrix on the row and column bitmasks, by
    /// first-row Laplace expansion with memoized minors.
    fn minor_memo(&self, rows: u64, cols: u64, memo: &mut HashMap<(u64, u64), MultiPoly<C>>) -> MultiPoly<C> {
        if rows == 0 {
            return MultiPoly::one(self.nvars);
        }
        if let Some(v) = memo.get(&(rows, cols)) {
            return v.clone();
        }
        let r = rows.trailing_zeros() as usize;
        let rest = rows & !(1 << r);
        let mut acc = MultiPoly::zero(self.nvars);
        let mut sign_neg = false;
        for c in 0..self.cols {
            if cols & (1 << c) == 0 {
                continue;
            }
            let entry = self.get(r, c);
            if !entry.is_zero() {
                let sub = self.minor_memo(rest, cols & !(1 << c), memo);
                if !sub.is_zero() {
                    let t = entry * &sub;
                    acc = if sign_neg { &acc - &t } else { &acc + &t };
                }
            }
            sign_neg = !sign_neg;
        }
        memo.insert((rows, cols), acc.clone());
        acc
    }

    fn bareiss_det(&self) -> Result<MultiPoly<C>> {
        let n = self.rows;
        let mut m: Vec<Vec<MultiPoly<C>>> = (0..n).map(|r| (0..n).map(|c| self.get(r, c).clone()).collect()).collect();
        let mut prev = MultiPoly::one(self.nvars);
        let mut negate = false;
        for k in 0..n.saturating_sub(1) {
            if m[k][k].is_zero() {
                let Some(p) = (k + 1..n).find(|&r| !m[r][k].is_zero()) else {
                    return Ok(MultiPoly::zero(self.nvars));
                };
                m.swap(k, p);
                negate = !negate;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &(&m[i][j] * &m[k][k]) - &(&m[i][k] * &m[k][j]);
                    m[i][j] = num.exact_div(&prev)?;
                }
            }
            prev = m[k][k].clone();
        }
        let det = m[n - 1][n - 1].clone();
        Ok(if negate { -&det } else { det })
    }

    /// Exact determinant: memoized cofactor expansion for `n <= 4` (or any
    /// inexact coefficient field), fraction-free Bareiss elimination otherwise.
    pub fn det(&self) -> Result<MultiPoly<C>> {
        if self.rows != self.cols {
            return Err(Error::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(MultiPoly::one(self.nvars));
        }
        if n <= 4 || !C::EXACT {
            let full = (1u64 << n) - 1;
            return Ok(self.minor_memo(full, full, &mut HashMap::new()));
        }
        self.bareiss_det()
    }

    /// Classical adjoint, sharing minors across all cofactors.
    pub fn adjugate(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::NotSquare { rows: self.rows, cols: self.cols });
        }
        let n = self.rows;
        let full = (1u64 << n) - 1;
        let mut memo = HashMap::new();
        let mut out = vec![MultiPoly::zero(self.nvars); n * n];
        for r in 0..n {
            for c in 0..n {
                // adj[c][r] = (-1)^{r+c} det(M without row r, column c)
                let minor = self.minor_memo(full & !(1 << r), full & !(1 << c), &mut memo);
                out[c * n + r] = if (r + c) % 2 == 0 { minor } else { -&minor };
            }
        }
        Ok(PolyMatrix { rows: n, cols: n, nvars: self.nvars, entries: out })
    }
}

/// Determinant of a polynomial matrix.
pub fn poly_det<C: Field>(m: &PolyMatrix<C>) -> Result<MultiPoly<C>> {
    m.det()
}

/// Hessian with respect to all variables.
pub fn hessian<C: Field>(p: &MultiPoly<C>) -> PolyMatrix<C> {
    let vars: Vec<usize> = (0..p.nvars()).collect();
    hessian_vars(p, &vars)
}

/// Hessian with respect to the listed variables only.
pub fn hessian_vars<C: Field>(p: &MultiPoly<C>, vars: &[usize]) -> PolyMatrix<C> {
    let firsts: Vec<MultiPoly<C>> = vars.iter().map(|&v| p.partial(v)).collect();
    let k = vars.len();
    let mut entries = vec![MultiPoly::zero(p.nvars()); k * k];
    for a in 0..k {
        for b in a..k {
            let d = firsts[a].partial(vars[b]);
            entries[b * k + a] = d.clone();
            entries[a * k + b] = d;
        }
    }
    PolyMatrix { rows: k, cols: k, nvars: p.nvars(), entries }
}
