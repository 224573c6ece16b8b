//! The latent class model with `n` hidden states and three `n`-state
//! observed variables: `P = Diag(pi)(M1, M2, M3)`.
//!
//! [`check_membership`] tests the five conditions characterizing the image
//! of the parameterization:
//!
//! 1. `P` real, non-negative, summing to 1;
//! 2. the commutation relations hold and `f_i(P; x)` is not identically zero;
//! 3. `det(P *_i 1) != 0` for every axis;
//! 4. the leading principal minors of one of the [`cond4_matrices`] are positive;
//! 5. every principal minor of the [`cond5_matrices`] is non-negative (strict
//!    mode: every leading principal minor is positive).
//!
//! Exact inputs are decided exactly. Float inputs use relative bands around
//! zero; values inside a band make the condition indeterminate.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::membership::{
    commutation_residuals, decompose_exact, decompose_float, f_nonzero, ClassifyOptions, Decomposition, Tri,
};
use crate::scalar::{Complex64, Field, Rational, RealField};
use crate::tensor::{diag_tensor, from_factors, Axis, Tensor3};

/// Counts below this in any cell trigger a warning on empirical tables.
pub const MIN_CELL_COUNT: u64 = 30;

/// Model parameters: hidden distribution `pi` and row-stochastic `M1, M2, M3`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<F: Field> {
    pub pi: Vec<F>,
    pub m: [Matrix<F>; 3],
}

impl<F: RealField> ModelParams<F> {
    pub fn n(&self) -> usize {
        self.pi.len()
    }

    /// Checks positivity, stochasticity and non-singularity. Float values
    /// are compared with tolerance `1e-9`.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let tol = if F::EXACT { 0.0 } else { 1e-9 };
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if n == 0 {
            return bad("pi is empty".into());
        }
        if let Some(i) = self.pi.iter().position(|p| p.sign() != Ordering::Greater || p.to_f64() <= tol) {
            return bad(format!("pi[{}] = {} is not positive", i + 1, self.pi[i].coeff_string()));
        }
        let total = self.pi.iter().fold(F::zero(), |a, b| a + b.clone());
        if !close_to_one(&total, tol) {
            return bad(format!("pi sums to {}", total.coeff_string()));
        }
        for (t, m) in self.m.iter().enumerate() {
            if m.rows() != n || m.cols() != n {
                return bad(format!("M{} is {}x{}, expected {n}x{n}", t + 1, m.rows(), m.cols()));
            }
            for r in 0..n {
                if let Some(c) = m.row(r).iter().position(|x| x.to_f64() < -tol || (F::EXACT && x.sign() == Ordering::Less)) {
                    return bad(format!("M{}[{},{}] is negative", t + 1, r + 1, c + 1));
                }
                let s = m.row(r).into_iter().fold(F::zero(), |a, b| a + b);
                if !close_to_one(&s, tol) {
                    return bad(format!("row {} of M{} sums to {}", r + 1, t + 1, s.coeff_string()));
                }
            }
            let singular = if F::EXACT { m.det()?.is_zero() } else { m.to_complex64().inverse_condition() < 1e-12 };
            if singular {
                return bad(format!("M{} is singular", t + 1));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let mat = |m: &Matrix<F>| Value::Array(m.to_rows().iter().map(|r| Value::Array(r.iter().map(F::to_json).collect())).collect());
        json!({
            "pi": self.pi.iter().map(F::to_json).collect::<Vec<_>>(),
            "M1": mat(&self.m[0]),
            "M2": mat(&self.m[1]),
            "M3": mat(&self.m[2]),
        })
    }

    /// Canonical hidden-state order: descending `pi`, ties by the `M3` row.
    pub fn sorted(&self) -> Self {
        let n = self.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            self.pi[b]
                .partial_cmp(&self.pi[a])
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.m[2].row(a).partial_cmp(&self.m[2].row(b)).unwrap_or(Ordering::Equal))
        });
        let permute = |m: &Matrix<F>| Matrix::from_fn(n, n, |r, c| m[(order[r], c)].clone());
        ModelParams {
            pi: order.iter().map(|&i| self.pi[i].clone()).collect(),
            m: [permute(&self.m[0]), permute(&self.m[1]), permute(&self.m[2])],
        }
    }
}

fn close_to_one<F: RealField>(x: &F, tol: f64) -> bool {
    if F::EXACT {
        x.is_one()
    } else {
        (x.to_f64() - 1.0).abs() <= tol * 10.0
    }
}

/// `P = Diag(pi)(M1, M2, M3)` after validating the parameters.
pub fn parameterize<F: RealField>(params: &ModelParams<F>) -> Result<Tensor3<F>> {
    params.validate()?;
    Ok(tensor_of(params))
}

/// `Diag(pi)(M1, M2, M3)` without validation.
pub fn tensor_of<F: Field>(params: &ModelParams<F>) -> Tensor3<F> {
    let scaled = &Matrix::diag(&params.pi) * &params.m[0];
    from_factors(&scaled, &params.m[1], &params.m[2])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MinorMode {
    Leading,
    All,
}

/// Principal minors with 1-based index sets: `{1..k}` for `k = 1..n` in
/// leading mode, every non-empty subset (by size, then lexicographically) otherwise.
pub fn minors<F: Field>(m: &Matrix<F>, mode: MinorMode) -> Result<Vec<(Vec<usize>, F)>> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let n = m.rows();
    let sets: Vec<Vec<usize>> = match mode {
        MinorMode::Leading => (1..=n).map(|k| (0..k).collect()).collect(),
        MinorMode::All => {
            let mut s: Vec<Vec<usize>> =
                (1u32..(1 << n)).map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect()).collect();
            s.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
            s
        }
    };
    sets.into_iter()
        .map(|set| {
            let d = m.submatrix(&set, &set).det()?;
            Ok((set.iter().map(|i| i + 1).collect(), d))
        })
        .collect()
}

fn ones<F: Field>(n: usize) -> Vec<F> {
    vec![F::one(); n]
}

fn unit<F: Field>(n: usize, l: usize) -> Vec<F> {
    (0..n).map(|t| if t == l { F::one() } else { F::zero() }).collect()
}

/// The three matrices of condition 4, in order:
/// `det(A1) A2 adj(A1) A3^T`, `det(A2) A1 adj(A2) A3`, `det(A3) A1^T adj(A3) A2`
/// with `A_i = P *_i 1`. On model tensors they equal `det(A_i)^2 M_i^T diag(pi) M_i`.
pub fn cond4_matrices<F: Field>(p: &Tensor3<F>) -> Result<[Matrix<F>; 3]> {
    let n = p.n();
    let a: Vec<Matrix<F>> = Axis::ALL.iter().map(|&ax| p.contract(ax, &ones(n))).collect::<Result<_>>()?;
    let term = |d: usize, left: &Matrix<F>, right: &Matrix<F>| -> Result<Matrix<F>> {
        let det = a[d].det()?;
        Ok((&(left * &a[d].adjugate()?) * right).scale(&det))
    };
    Ok([
        term(0, &a[1], &a[2].transpose())?,
        term(1, &a[0], &a[2])?,
        term(2, &a[0].transpose(), &a[1])?,
    ])
}

/// The three matrices of condition 5 for hidden index `l` (0-based):
/// `det(A1) A2 adj(A1) (P *_3 e_l)^T`, `det(A1) (P *_2 e_l) adj(A1) A3^T`,
/// `det(A2) (P *_1 e_l) adj(A2) A3`. On model tensors they equal
/// `det^2 M_i^T diag(pi) diag(col_l M_j) M_i`.
pub fn cond5_matrices<F: Field>(p: &Tensor3<F>, l: usize) -> Result<[Matrix<F>; 3]> {
    let n = p.n();
    let a: Vec<Matrix<F>> = Axis::ALL.iter().map(|&ax| p.contract(ax, &ones(n))).collect::<Result<_>>()?;
    let e = unit::<F>(n, l);
    let (d1, d2) = (a[0].det()?, a[1].det()?);
    let (adj1, adj2) = (a[0].adjugate()?, a[1].adjugate()?);
    Ok([
        (&(&a[1] * &adj1) * &p.contract(Axis::Three, &e)?.transpose()).scale(&d1),
        (&(&p.contract(Axis::Two, &e)? * &adj1) * &a[2].transpose()).scale(&d1),
        (&(&p.contract(Axis::One, &e)? * &adj2) * &a[2]).scale(&d2),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    /// Which matrix or quantity failed, e.g. `cond5[2], l = 3`.
    pub location: String,
    /// 1-based index set of the minor, or the offending entry.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub indices: Vec<usize>,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub id: usize,
    pub description: &'static str,
    pub status: Tri,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ConditionReport {
    fn new(id: usize, description: &'static str) -> Self {
        ConditionReport { id, description, status: Tri::Yes, witness: None, notes: Vec::new() }
    }

    /// Records a failure (or indeterminate outcome); the first `No` witness wins.
    fn record(&mut self, status: Tri, witness: Witness) {
        match (self.status, status) {
            (_, Tri::Yes) | (Tri::No, _) => {}
            (_, Tri::No) => {
                self.status = Tri::No;
                self.witness = Some(witness);
            }
            (Tri::Yes, Tri::Indeterminate) => {
                self.status = Tri::Indeterminate;
                self.witness = Some(witness);
            }
            (Tri::Indeterminate, Tri::Indeterminate) => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelReport {
    pub n: usize,
    pub strict: bool,
    pub backend: &'static str,
    pub conditions: Vec<ConditionReport>,
    pub passed: Tri,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovered: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction_residual: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ModelReport {
    pub fn condition(&self, id: usize) -> &ConditionReport {
        &self.conditions[id - 1]
    }
}

/// Sign test of a minor of size `m` relative to `scale^m`.
fn classify_sign<F: RealField>(value: &F, size: usize, scale: f64, tol: f64) -> Ordering {
    if F::EXACT {
        return value.sign();
    }
    let rel = value.to_f64() / scale.max(f64::MIN_POSITIVE).powi(size as i32);
    if rel > 10.0 * tol {
        Ordering::Greater
    } else if rel < -10.0 * tol {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

/// Leading principal minors strictly positive.
fn leading_positive<F: RealField>(m: &Matrix<F>, location: &str, tol: f64) -> Result<(Tri, Option<Witness>)> {
    let scale = m.max_abs();
    for (set, v) in minors(m, MinorMode::Leading)? {
        let status = match classify_sign(&v, set.len(), scale, tol) {
            Ordering::Greater => continue,
            Ordering::Less => Tri::No,
            Ordering::Equal if F::EXACT => Tri::No,
            Ordering::Equal => Tri::Indeterminate,
        };
        return Ok((status, Some(Witness { location: location.to_string(), indices: set, value: v.coeff_string() })));
    }
    Ok((Tri::Yes, None))
}

/// All principal minors non-negative; floats use the smallest eigenvalue of
/// the symmetric part instead.
fn semidefinite<F: RealField>(m: &Matrix<F>, location: &str, tol: f64) -> Result<(Tri, Option<Witness>)> {
    if F::EXACT {
        for (set, v) in minors(m, MinorMode::All)? {
            if v.sign() == Ordering::Less {
                return Ok((Tri::No, Some(Witness { location: location.to_string(), indices: set, value: v.coeff_string() })));
            }
        }
        return Ok((Tri::Yes, None));
    }
    let n = m.rows();
    let d = DMatrix::from_fn(n, n, |r, c| 0.5 * (m[(r, c)].to_f64() + m[(c, r)].to_f64()));
    let norm = d.norm().max(f64::MIN_POSITIVE);
    let eig = d.symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let status = if min >= -tol * norm {
        Tri::Yes
    } else if min < -10.0 * tol * norm {
        Tri::No
    } else {
        Tri::Indeterminate
    };
    let witness = (status != Tri::Yes).then(|| Witness {
        location: location.to_string(),
        indices: Vec::new(),
        value: format!("smallest eigenvalue {min:e}"),
    });
    Ok((status, witness))
}

/// Evaluates conditions 1 to 5. On a pass the parameters are recovered
/// (exactly when the input is exact and the spectrum is rational).
pub fn check_membership<F: RealField>(p: &Tensor3<F>, strict: bool, opts: &ClassifyOptions) -> Result<ModelReport> {
    let n = p.n();
    let tol = if F::EXACT { 0.0 } else { opts.tol };
    let mut conds = Vec::with_capacity(5);

    let mut c1 = ConditionReport::new(1, "real, non-negative entries summing to 1");
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = &p[(i, j, k)];
                let neg = if F::EXACT { v.sign() == Ordering::Less } else { v.to_f64() < -tol };
                if neg {
                    c1.record(Tri::No, Witness { location: "entry".into(), indices: vec![i + 1, j + 1, k + 1], value: v.coeff_string() });
                }
            }
        }
    }
    let total = p.sum();
    if !close_to_one(&total, tol.max(f64::EPSILON) * (n * n * n) as f64) {
        c1.record(Tri::No, Witness { location: "sum of entries".into(), indices: Vec::new(), value: total.coeff_string() });
    }
    conds.push(c1);

    let mut c2 = ConditionReport::new(2, "commutation relations hold and f_i is not identically zero");
    c2.status = Tri::No;
    let mut best: Option<(Tri, Witness)> = None;
    for axis in Axis::ALL {
        let comm = commutation_residuals(p, axis, opts);
        let (status, witness) = if comm.passed == Tri::No {
            let w = comm.witness.as_ref().map_or_else(
                || Witness { location: format!("commutation, axis {}", axis.number()), indices: Vec::new(), value: "failed".into() },
                |w| Witness {
                    location: format!("commutation, axis {}, pair ({}, {})", axis.number(), w.j, w.k),
                    indices: vec![w.row, w.col],
                    value: w.value.clone(),
                },
            );
            (Tri::No, w)
        } else {
            let fr = f_nonzero(p, axis, opts);
            let status = match (comm.passed, fr.nonzero) {
                (Tri::Yes, Tri::Yes) => Tri::Yes,
                (_, Tri::No) => Tri::No,
                _ => Tri::Indeterminate,
            };
            (status, Witness { location: format!("f_{} ({})", axis.number(), fr.method), indices: Vec::new(), value: "0".into() })
        };
        if status == Tri::Yes {
            best = None;
            c2.status = Tri::Yes;
            break;
        }
        if best.as_ref().is_none_or(|(s, _)| *s == Tri::No && status == Tri::Indeterminate) {
            best = Some((status, witness));
        }
    }
    if let Some((status, witness)) = best {
        c2.status = status;
        c2.witness = Some(witness);
    }
    conds.push(c2);

    let mut c3 = ConditionReport::new(3, "det(P *_i 1) != 0 for i = 1, 2, 3");
    for axis in Axis::ALL {
        let a = p.contract(axis, &ones(n))?;
        let (status, value) = if F::EXACT {
            let d = a.det()?;
            (Tri::from_bool(!d.is_zero()), d.coeff_string())
        } else {
            let c = a.to_complex64().inverse_condition();
            let status = if c > 10.0 * tol.max(1e-12) {
                Tri::Yes
            } else if c < 0.1 * tol.max(1e-12) {
                Tri::No
            } else {
                Tri::Indeterminate
            };
            (status, format!("inverse condition {c:e}"))
        };
        c3.record(status, Witness { location: format!("P *_{} 1", axis.number()), indices: Vec::new(), value });
    }
    conds.push(c3);

    let mut c4 = ConditionReport::new(4, "leading principal minors of a condition-4 matrix are positive");
    let mut c5 = ConditionReport::new(
        5,
        if strict {
            "leading principal minors of the condition-5 matrices are positive"
        } else {
            "principal minors of the condition-5 matrices are non-negative"
        },
    );
    if conds[2].status == Tri::Yes {
        let m4 = cond4_matrices(p)?;
        let results: Vec<(Tri, Option<Witness>)> =
            m4.iter().enumerate().map(|(t, m)| leading_positive(m, &format!("cond4[{}]", t + 1), tol)).collect::<Result<_>>()?;
        let statuses: Vec<Tri> = results.iter().map(|r| r.0).collect();
        if statuses.contains(&Tri::Yes) {
            c4.status = Tri::Yes;
            if statuses.iter().any(|s| *s != Tri::Yes) {
                c4.notes.push(format!("the three matrices disagree: {statuses:?}"));
            }
        } else {
            let pick = results.iter().find(|r| r.0 == Tri::Indeterminate).or_else(|| results.first()).cloned().expect("three");
            c4.status = pick.0;
            c4.witness = pick.1;
        }
        for l in 0..n {
            for (t, m) in cond5_matrices(p, l)?.iter().enumerate() {
                let loc = format!("cond5[{}], l = {}", t + 1, l + 1);
                let (status, witness) = if strict { leading_positive(m, &loc, tol)? } else { semidefinite(m, &loc, tol)? };
                if let Some(w) = witness {
                    c5.record(status, w);
                }
            }
        }
    } else {
        for c in [&mut c4, &mut c5] {
            c.status = Tri::Indeterminate;
            c.notes.push("not evaluated: condition 3 does not hold".into());
        }
    }
    conds.push(c4);
    conds.push(c5);

    let statuses: Vec<Tri> = conds.iter().map(|c| c.status).collect();
    let passed = if statuses.iter().all(|s| *s == Tri::Yes) {
        Tri::Yes
    } else if statuses.contains(&Tri::No) {
        Tri::No
    } else {
        Tri::Indeterminate
    };
    let mut report = ModelReport {
        n,
        strict,
        backend: if F::EXACT { "exact" } else { "float" },
        conditions: conds,
        passed,
        recovered: None,
        reconstruction_residual: None,
        warnings: Vec::new(),
    };
    if passed == Tri::Yes {
        let exact = if F::EXACT { recover_params_exact(p, opts).ok() } else { None };
        match exact {
            Some(params) => {
                report.recovered = Some(params.to_json());
                report.reconstruction_residual = Some(0.0);
            }
            None => match recover_params(p, opts) {
                Ok(params) => {
                    report.reconstruction_residual = Some(params_residual(p, &params));
                    report.recovered = Some(params.to_json());
                }
                Err(e) => report.warnings.push(format!("parameter recovery failed: {e}")),
            },
        }
    }
    Ok(report)
}

/// Relative Frobenius distance between `P` and the tensor of `params`.
pub fn params_residual<F: Field>(p: &Tensor3<F>, params: &ModelParams<f64>) -> f64 {
    let q = tensor_of(params).to_complex64();
    let d = q.sub(&p.to_complex64()).expect("same n");
    d.frobenius_norm() / p.frobenius_norm().max(f64::MIN_POSITIVE)
}

/// `s_i = g_i 1`, `M_i = diag(s_i)^{-1} g_i`, `pi = s_1 s_2 s_3` (entrywise).
fn params_from_factors<F: Field>(g: [&Matrix<F>; 3]) -> Result<(Vec<F>, [Matrix<F>; 3])> {
    let n = g[0].rows();
    let mut pi = vec![F::one(); n];
    let mut ms = Vec::with_capacity(3);
    for gi in g {
        let s: Vec<F> = (0..n).map(|r| gi.row(r).into_iter().fold(F::zero(), |a, b| a + b)).collect();
        if let Some(r) = s.iter().position(|x| if F::EXACT { x.is_zero() } else { x.abs_f64() < 1e-12 * gi.max_abs() }) {
            return Err(Error::Inconsistent(format!("row {} of a decomposition factor sums to zero", r + 1)));
        }
        for (p, x) in pi.iter_mut().zip(&s) {
            *p = p.clone() * x.clone();
        }
        ms.push(Matrix::from_fn(n, n, |r, c| gi[(r, c)].clone() / s[r].clone()));
    }
    let m: [Matrix<F>; 3] = ms.try_into().expect("three factors");
    Ok((pi, m))
}

/// Float recovery of `(pi, M1, M2, M3)`, in canonical hidden-state order.
pub fn recover_params<F: Field>(p: &Tensor3<F>, opts: &ClassifyOptions) -> Result<ModelParams<f64>> {
    let dec: Decomposition<Complex64> = decompose_float(&p.to_complex64(), opts)?;
    let (pi, m) = params_from_factors([&dec.g1, &dec.g2, &dec.g3])?;
    let scale = m.iter().map(Matrix::max_abs).fold(1.0, f64::max);
    let imag = pi.iter().chain(m.iter().flat_map(|x| x.entries())).map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > 1e-6 * scale {
        return Err(Error::Inconsistent(format!("recovered parameters are not real (imaginary part {imag:e})")));
    }
    let params = ModelParams { pi: pi.iter().map(|z| z.re).collect(), m: m.map(|x| x.map(|z| z.re)) };
    Ok(params.sorted())
}

/// Exact recovery; fails with `NonRationalSpectrum` when the slices cannot
/// be diagonalized over the rationals.
pub fn recover_params_exact<F: RealField>(p: &Tensor3<F>, opts: &ClassifyOptions) -> Result<ModelParams<F>> {
    let dec = decompose_exact(p, opts)?;
    let (pi, m) = params_from_factors([&dec.g1, &dec.g2, &dec.g3])?;
    Ok(ModelParams { pi, m }.sorted())
}

/// Frequencies from a table of counts, with warnings for sparse cells.
pub fn tensor_from_counts(counts: &[Vec<Vec<u64>>]) -> Result<(Tensor3<Rational>, Vec<String>)> {
    let n = counts.len();
    let total: u128 = counts.iter().flatten().flatten().map(|&c| c as u128).sum();
    if total == 0 {
        return Err(Error::Parse("counts table is empty or all zero".into()));
    }
    let nested: Vec<Vec<Vec<Rational>>> = counts
        .iter()
        .map(|m| m.iter().map(|r| r.iter().map(|&c| Rational::new(c.into(), total.into())).collect()).collect())
        .collect();
    let t = Tensor3::from_nested(nested)?;
    let sparse = counts.iter().flatten().flatten().filter(|&&c| c < MIN_CELL_COUNT).count();
    let mut warnings = Vec::new();
    if sparse > 0 {
        warnings.push(format!(
            "{sparse} of {} cells have fewer than {MIN_CELL_COUNT} counts; the test applies to exact distributions only",
            n * n * n
        ));
    }
    Ok((t, warnings))
}

/// `Diag(1/n, .., 1/n)`.
pub fn uniform_diagonal(n: usize) -> Tensor3<Rational> {
    diag_tensor(&vec![Rational::new(1.into(), (n as i64).into()); n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{self, SeededRng};
    use crate::scalar::parse_rational;
    use rand::Rng;

    fn r(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn opts() -> ClassifyOptions {
        ClassifyOptions::default()
    }

    /// Random probability vector with entries `(1 + c_i) / sum`.
    fn prob_vector(rng: &mut SeededRng, n: usize, min: i64) -> Vec<Rational> {
        let w: Vec<i64> = loop {
            let w: Vec<i64> = (0..n).map(|_| rng.gen_range(min..=9)).collect();
            if w.iter().any(|&x| x > 0) {
                break w;
            }
        };
        let s: i64 = w.iter().sum();
        w.iter().map(|&x| Rational::new(x.into(), s.into())).collect()
    }

    fn random_params(rng: &mut SeededRng, n: usize) -> ModelParams<Rational> {
        random_params_min(rng, n, 0)
    }

    /// Entries of the `M_i` are at least `min_m` before normalization.
    fn random_params_min(rng: &mut SeededRng, n: usize, min_m: i64) -> ModelParams<Rational> {
        loop {
            let pi = prob_vector(rng, n, 1);
            let m = [0, 1, 2].map(|_| {
                let rows: Vec<Vec<Rational>> = (0..n).map(|_| prob_vector(rng, n, min_m)).collect();
                Matrix::from_rows(rows).unwrap()
            });
            let params = ModelParams { pi, m };
            if params.validate().is_ok() {
                return params;
            }
        }
    }

    #[test]
    fn parameterize_examples() {
        let half = r("1/2");
        let id = ModelParams { pi: vec![half.clone(), half.clone()], m: [0, 1, 2].map(|_| Matrix::identity(2)) };
        assert_eq!(parameterize(&id).unwrap(), uniform_diagonal(2));

        let m = Matrix::from_rows(vec![vec![r("9/10"), r("1/10")], vec![r("1/10"), r("9/10")]]).unwrap();
        let params = ModelParams { pi: vec![half.clone(), half], m: [m.clone(), m.clone(), m] };
        let p = parameterize(&params).unwrap();
        assert_eq!(p[(0, 0, 0)], r("365/1000"));
        assert_eq!(p.sum(), Rational::from_i64(1));

        let mut rng = random::rng(5);
        for n in 2..=4 {
            let params = random_params(&mut rng, n);
            let p = parameterize(&params).unwrap();
            let marginal = p.contract(Axis::Three, &ones(n)).unwrap();
            let expected = &(&params.m[0].transpose() * &Matrix::diag(&params.pi)) * &params.m[1];
            assert_eq!(marginal, expected);
        }
    }

    #[test]
    fn parameterize_rejects_invalid() {
        let half = r("1/2");
        let bad = ModelParams { pi: vec![half.clone(), half.clone() + half.clone()], m: [0, 1, 2].map(|_| Matrix::identity(2)) };
        assert!(matches!(parameterize(&bad), Err(Error::InvalidParams(_))));
        let singular = Matrix::from_rows(vec![vec![half.clone(), half.clone()], vec![half.clone(), half.clone()]]).unwrap();
        let bad = ModelParams { pi: vec![half.clone(), half], m: [Matrix::identity(2), singular, Matrix::identity(2)] };
        assert!(parameterize(&bad).unwrap_err().to_string().contains("singular"));
    }

    #[test]
    fn minors_examples() {
        let id = Matrix::<Rational>::identity(3);
        let vals: Vec<Rational> = minors(&id, MinorMode::Leading).unwrap().into_iter().map(|x| x.1).collect();
        assert_eq!(vals, vec![Rational::from_i64(1); 3]);
        let d = Matrix::<Rational>::from_i64_rows(&[&[1, 0], &[0, -1]]);
        let all = minors(&d, MinorMode::All).unwrap();
        assert_eq!(
            all,
            vec![(vec![1], Rational::from_i64(1)), (vec![2], Rational::from_i64(-1)), (vec![1, 2], Rational::from_i64(-1))]
        );
        let m = Matrix::<Rational>::from_i64_rows(&[&[2, 1], &[1, 2]]);
        let vals: Vec<Rational> = minors(&m, MinorMode::Leading).unwrap().into_iter().map(|x| x.1).collect();
        assert_eq!(vals, vec![Rational::from_i64(2), Rational::from_i64(3)]);
    }

    #[test]
    fn cond4_identity_chain() {
        let mut rng = random::rng(6);
        for n in 2..=4 {
            let params = random_params(&mut rng, n);
            let p = tensor_of(&params);
            let m4 = cond4_matrices(&p).unwrap();
            let pi = Matrix::diag(&params.pi);
            for (i, m) in m4.iter().enumerate() {
                let d = p.contract(Axis::ALL[i], &ones(n)).unwrap().det().unwrap();
                let expected = (&(&params.m[i].transpose() * &pi) * &params.m[i]).scale(&(&d * &d));
                assert_eq!(m, &expected, "cond4[{}]", i + 1);
            }
            for l in 0..n {
                let m5 = cond5_matrices(&p, l).unwrap();
                let d1 = p.contract(Axis::One, &ones(n)).unwrap().det().unwrap();
                let d2 = p.contract(Axis::Two, &ones(n)).unwrap().det().unwrap();
                let col = |j: usize| Matrix::diag(&params.m[j].col(l));
                let q = |i: usize, j: usize, d: &Rational| {
                    (&(&(&params.m[i].transpose() * &pi) * &col(j)) * &params.m[i]).scale(&(d * d))
                };
                assert_eq!(m5[0], q(0, 2, &d1));
                assert_eq!(m5[1], q(0, 1, &d1));
                assert_eq!(m5[2], q(1, 0, &d2));
            }
        }
    }

    #[test]
    fn valid_draws_pass_and_round_trip() {
        let mut rng = random::rng(7);
        for n in 2..=4 {
            for _ in 0..5 {
                let params = random_params(&mut rng, n);
                let p = parameterize(&params).unwrap();
                let rep = check_membership(&p, false, &opts()).unwrap();
                assert_eq!(rep.passed, Tri::Yes, "{rep:#?}");
                let rec = recover_params_exact(&p, &opts()).unwrap();
                assert_eq!(rec, params.sorted());
                let fl = recover_params(&p, &opts()).unwrap();
                assert!(params_residual(&p, &fl) < 1e-8);
            }
        }
    }

    #[test]
    fn uniform_diagonal_passes() {
        for n in 2..=4 {
            let p = uniform_diagonal(n);
            let rep = check_membership(&p, false, &opts()).unwrap();
            assert_eq!(rep.passed, Tri::Yes);
            let rec = recover_params_exact(&p, &opts()).unwrap();
            assert_eq!(tensor_of(&rec), p);
            assert!(rec.m.iter().all(|m| m.entries().iter().all(|x| *x == Rational::from_i64(0) || *x == Rational::from_i64(1))));
            assert!(rec.pi.iter().all(|x| *x == Rational::new(1.into(), (n as i64).into())));
        }
    }

    #[test]
    fn negative_entry_is_caught_by_condition_5() {
        let mut rng = random::rng(8);
        let mut params = random_params(&mut rng, 3);
        // M1 row 1 = (6/5, -1/5, 0)
        params.m[0] = Matrix::from_rows(vec![
            vec![r("6/5"), r("-1/5"), r("0")],
            params.m[0].row(1),
            params.m[0].row(2),
        ])
        .unwrap();
        let p = tensor_of(&params);
        let rep = check_membership(&p, false, &opts()).unwrap();
        assert_eq!(rep.passed, Tri::No);
        assert_eq!(rep.condition(5).status, Tri::No);
        let w = rep.condition(5).witness.as_ref().unwrap();
        assert!(w.value.starts_with('-'), "{w:?}");
    }

    #[test]
    fn float_backend_agrees() {
        let mut rng = random::rng(9);
        let params = random_params_min(&mut rng, 3, 1);
        let p = parameterize(&params).unwrap().map(crate::scalar::rational_to_f64);
        let rep = check_membership(&p, true, &opts()).unwrap();
        assert_eq!(rep.passed, Tri::Yes, "{rep:#?}");
        assert!(rep.reconstruction_residual.unwrap() < 1e-8);
    }

    #[test]
    fn counts_table() {
        let counts = vec![vec![vec![10, 0], vec![0, 0]], vec![vec![0, 0], vec![0, 10]]];
        let (t, warnings) = tensor_from_counts(&counts).unwrap();
        assert_eq!(t, uniform_diagonal(2));
        assert_eq!(warnings.len(), 1);
    }
}
