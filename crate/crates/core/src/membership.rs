//! Membership in the orbit `D(C)` of the unit diagonal tensor.
//!
//! A tensor is in the orbit iff for some axis `i` it satisfies the
//! adjugate commutation relations
//! `P_j adj(P *_i v) P_k = P_k adj(P *_i v) P_j` and `f_i(P; x)` is not the
//! zero polynomial; the relations then hold on every axis. Tensors that
//! satisfy the relations on all three axes but have `f = 0` lie on the
//! boundary of the orbit.
//!
//! Exact inputs are decided exactly (symbolic expansion, or exact
//! evaluation at seeded random points where the expansion is too large).
//! Float inputs are decided with normalized residuals and a tolerance band;
//! values inside the band give an indeterminate verdict.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::invariants::{f as f_symbolic, f_eval, h as h_symbolic, hessian_eval, MAX_SYMBOLIC_F};
use crate::matrix::Matrix;
use crate::poly::PolyMatrix;
use crate::random::{self, SeededRng};
use crate::scalar::{rationalize, Complex64, Field, Rational};
use crate::tensor::{from_factors, Axis, GroupElement, Tensor3};

/// Default threshold for normalized float residuals.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Largest `n` for which the commutation relations are expanded symbolically.
pub const MAX_SYMBOLIC_COMMUTATION: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyOptions {
    pub tol: f64,
    pub seed: u64,
    /// Number of sample points for float checks.
    pub samples: usize,
    /// Attach a decomposition to in-orbit verdicts.
    pub decompose: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { tol: DEFAULT_TOL, seed: 0, samples: 5, decompose: true }
    }
}

/// Three-valued outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tri {
    Yes,
    No,
    Indeterminate,
}

impl Tri {
    pub fn from_bool(b: bool) -> Tri {
        if b {
            Tri::Yes
        } else {
            Tri::No
        }
    }

    /// Swaps `Yes` and `No`.
    pub fn flip(self) -> Tri {
        match self {
            Tri::Yes => Tri::No,
            Tri::No => Tri::Yes,
            Tri::Indeterminate => Tri::Indeterminate,
        }
    }
}

/// `Yes` when `value < tol / 10`, `No` when `value > 10 tol`.
pub fn small_band(value: f64, tol: f64) -> Tri {
    if value < 0.1 * tol {
        Tri::Yes
    } else if value > 10.0 * tol {
        Tri::No
    } else {
        Tri::Indeterminate
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommutationWitness {
    pub j: usize,
    pub k: usize,
    pub row: usize,
    pub col: usize,
    /// Exponents of the offending monomial in `v` (symbolic method).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monomial: Option<Vec<u32>>,
    /// Index of the offending sample point (sampled methods).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<usize>,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommutationReport {
    pub axis: usize,
    pub passed: Tri,
    /// `symbolic`, `random-points` (exact evaluation) or `sampled` (float).
    pub method: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identically_zero: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<CommutationWitness>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FReport {
    pub axis: usize,
    pub nonzero: Tri,
    /// `pointwise`, `symbolic`, `random-points`, `sampled` or `scalar` (n = 1).
    pub method: &'static str,
    /// Float methods: largest normalized `|det H| / prod ||rows of H||`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxisReport {
    pub axis: usize,
    pub slice_nonsingular: bool,
    pub commutation: CommutationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<FReport>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    InOrbit,
    Boundary,
    OutsideRelaxation,
    Indeterminate,
}

impl Verdict {
    /// CLI exit code.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::InOrbit => 0,
            Verdict::Boundary => 2,
            Verdict::OutsideRelaxation => 3,
            Verdict::Indeterminate => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipReport {
    pub n: usize,
    pub backend: &'static str,
    pub verdict: Verdict,
    pub in_orbit: Tri,
    pub axes: Vec<AxisReport>,
    /// On inputs passing commutation, `f_nonzero` agrees across those axes.
    pub cross_axis_consistent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn axis_seed(seed: u64, axis: Axis, salt: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt * 31 + axis.number() as u64)
}

/// Sample points for float checks: complex Gaussian coordinates.
fn complex_samples(rng: &mut SeededRng, n: usize, count: usize) -> Vec<Vec<Complex64>> {
    (0..count)
        .map(|_| (0..n).map(|_| Complex64::new(random::normal(rng), random::normal(rng))).collect())
        .collect()
}

/// Residual matrices `P_j adj(A) P_k - P_k adj(A) P_j` for all `j < k`.
fn pair_residuals<F: Field>(slices: &[Matrix<F>], adj: &Matrix<F>) -> Vec<(usize, usize, Matrix<F>)> {
    let n = slices.len();
    let left: Vec<Matrix<F>> = slices.iter().map(|s| s * adj).collect();
    let mut out = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            let r = &(&left[j] * &slices[k]) - &(&left[k] * &slices[j]);
            out.push((j, k, r));
        }
    }
    out
}

/// Checks the commutation relations on `axis`.
pub fn commutation_residuals<F: Field>(p: &Tensor3<F>, axis: Axis, opts: &ClassifyOptions) -> CommutationReport {
    if F::EXACT {
        if p.n() <= MAX_SYMBOLIC_COMMUTATION {
            commutation_symbolic(p, axis)
        } else {
            commutation_exact_points(p, axis, opts)
        }
    } else {
        commutation_float(&p.to_complex64(), axis, opts)
    }
}

fn commutation_symbolic<F: Field>(p: &Tensor3<F>, axis: Axis) -> CommutationReport {
    let n = p.n();
    let slices = p.slices(axis);
    let pencil = PolyMatrix::pencil(&slices);
    let adj = pencil.adjugate().expect("square pencil");
    let consts: Vec<PolyMatrix<F>> = slices.iter().map(|s| PolyMatrix::from_matrix(s, n)).collect();
    let lefts: Vec<PolyMatrix<F>> = consts.iter().map(|c| c.try_mul(&adj).expect("square")).collect();
    let mut witness = None;
    'outer: for j in 0..n {
        for k in j + 1..n {
            let a = lefts[j].try_mul(&consts[k]).expect("square");
            let b = lefts[k].try_mul(&consts[j]).expect("square");
            let r = a.sub(&b);
            for row in 0..n {
                for col in 0..n {
                    if let Some((m, c)) = r.get(row, col).leading() {
                        witness = Some(CommutationWitness {
                            j: j + 1,
                            k: k + 1,
                            row: row + 1,
                            col: col + 1,
                            monomial: Some(m.exps().to_vec()),
                            sample: None,
                            value: c.coeff_string(),
                        });
                        break 'outer;
                    }
                }
            }
        }
    }
    CommutationReport {
        axis: axis.number(),
        passed: Tri::from_bool(witness.is_none()),
        method: "symbolic",
        identically_zero: Some(witness.is_none()),
        max_residual: None,
        witness,
    }
}

/// Exact evaluation at seeded integer points (Schwartz-Zippel).
fn commutation_exact_points<F: Field>(p: &Tensor3<F>, axis: Axis, opts: &ClassifyOptions) -> CommutationReport {
    let n = p.n();
    let slices = p.slices(axis);
    let mut rng = random::rng(axis_seed(opts.seed, axis, 1));
    let mut witness = None;
    'outer: for s in 0..opts.samples.max(3) {
        let v: Vec<F> = random::int_point(&mut rng, n, 1000);
        let adj = p.contract(axis, &v).and_then(|a| a.adjugate()).expect("square");
        for (j, k, r) in pair_residuals(&slices, &adj) {
            for row in 0..n {
                for col in 0..n {
                    if !r[(row, col)].is_zero() {
                        witness = Some(CommutationWitness {
                            j: j + 1,
                            k: k + 1,
                            row: row + 1,
                            col: col + 1,
                            monomial: None,
                            sample: Some(s),
                            value: r[(row, col)].coeff_string(),
                        });
                        break 'outer;
                    }
                }
            }
        }
    }
    CommutationReport {
        axis: axis.number(),
        passed: Tri::from_bool(witness.is_none()),
        method: "random-points",
        identically_zero: Some(witness.is_none()),
        max_residual: None,
        witness,
    }
}

/// Float check: each pair residual is normalized by `||P_j|| ||adj|| ||P_k||`.
fn commutation_float(p: &Tensor3<Complex64>, axis: Axis, opts: &ClassifyOptions) -> CommutationReport {
    let n = p.n();
    let slices = p.slices(axis);
    let norms: Vec<f64> = slices.iter().map(Matrix::frobenius_norm).collect();
    let mut rng = random::rng(axis_seed(opts.seed, axis, 1));
    let mut worst = 0.0f64;
    let mut witness = None;
    for (s, v) in complex_samples(&mut rng, n, opts.samples.max(1)).into_iter().enumerate() {
        let adj = p.contract(axis, &v).and_then(|a| a.adjugate()).expect("square");
        let adj_norm = adj.frobenius_norm();
        for (j, k, r) in pair_residuals(&slices, &adj) {
            let scale = norms[j] * adj_norm * norms[k];
            if scale == 0.0 {
                continue;
            }
            for row in 0..n {
                for col in 0..n {
                    let val = r[(row, col)].norm() / scale;
                    if val > worst {
                        worst = val;
                        witness = Some(CommutationWitness {
                            j: j + 1,
                            k: k + 1,
                            row: row + 1,
                            col: col + 1,
                            monomial: None,
                            sample: Some(s),
                            value: format!("{val:e}"),
                        });
                    }
                }
            }
        }
    }
    let passed = small_band(worst, opts.tol);
    CommutationReport {
        axis: axis.number(),
        passed,
        method: "sampled",
        identically_zero: None,
        max_residual: Some(worst),
        witness: if passed == Tri::Yes { None } else { witness },
    }
}

/// A vector `a` with `P *_axis a` non-singular: `e_1..e_n` first, then seeded
/// random integer combinations. Float fields require the combination to be
/// reasonably conditioned and keep the best of the random draws.
pub fn nonsingular_combination<F: Field>(p: &Tensor3<F>, axis: Axis, seed: u64) -> Option<Vec<F>> {
    let n = p.n();
    let unit = |l: usize| (0..n).map(|t| if t == l { F::one() } else { F::zero() }).collect::<Vec<F>>();
    let mut rng = random::rng(axis_seed(seed, axis, 2));
    if F::EXACT {
        for l in 0..n {
            let a = unit(l);
            if !p.contract(axis, &a).ok()?.det().ok()?.is_zero() {
                return Some(a);
            }
        }
        for _ in 0..64 {
            let a: Vec<F> = random::int_point(&mut rng, n, 10 * n as i64);
            if !p.contract(axis, &a).ok()?.det().ok()?.is_zero() {
                return Some(a);
            }
        }
        None
    } else {
        let cond = |a: &[F]| p.contract(axis, a).map(|m| m.to_complex64().inverse_condition()).unwrap_or(0.0);
        for l in 0..n {
            let a = unit(l);
            if cond(&a) > 1e-3 {
                return Some(a);
            }
        }
        let mut best: Option<(f64, Vec<F>)> = None;
        for _ in 0..8 {
            let a: Vec<F> = random::generic_point(&mut rng, n);
            let c = cond(&a);
            if best.as_ref().is_none_or(|(b, _)| c > *b) {
                best = Some((c, a));
            }
        }
        best.filter(|(c, _)| *c > 1e-12).map(|(_, a)| a)
    }
}

/// True iff some combination of the `axis`-slices is non-singular.
/// Exact fields fall back to the symbolic `h` before answering `false`.
pub fn slice_nonsingular<F: Field>(p: &Tensor3<F>, axis: Axis, opts: &ClassifyOptions) -> bool {
    if nonsingular_combination(p, axis, opts.seed).is_some() {
        return true;
    }
    if F::EXACT && p.n() <= 8 {
        return h_symbolic(p, axis).map(|h| !h.is_zero()).unwrap_or(false);
    }
    false
}

/// Whether `f_i(P; x)` is not the zero polynomial.
///
/// Exact: evaluate at seeded integer points; a non-zero value settles it.
/// Otherwise expand symbolically (`n <= 5`) or report the probabilistic
/// outcome of 20 further points. Float: the Hessian of `h_i` at complex
/// sample points, scored by `|det H| / prod ||rows of H||`.
pub fn f_nonzero<F: Field>(p: &Tensor3<F>, axis: Axis, opts: &ClassifyOptions) -> FReport {
    let n = p.n();
    if n == 1 {
        // The Hessian of a linear form vanishes, so f carries no information;
        // the orbit is the nonzero scalars.
        let nonzero = if F::EXACT { Tri::from_bool(!p.is_zero()) } else { small_band(p.max_abs(), opts.tol).flip() };
        return FReport { axis: axis.number(), nonzero, method: "scalar", score: None };
    }
    let mut rng = random::rng(axis_seed(opts.seed, axis, 3));
    if F::EXACT {
        for _ in 0..opts.samples.max(1) {
            let x: Vec<F> = random::int_point(&mut rng, n, 100);
            if f_eval(p, axis, &x).map(|v| !v.is_zero()).unwrap_or(false) {
                return FReport { axis: axis.number(), nonzero: Tri::Yes, method: "pointwise", score: None };
            }
        }
        if n <= MAX_SYMBOLIC_F {
            let nz = f_symbolic(p, axis).map(|f| !f.is_zero()).unwrap_or(false);
            return FReport { axis: axis.number(), nonzero: Tri::from_bool(nz), method: "symbolic", score: None };
        }
        for _ in 0..20 {
            let x: Vec<F> = random::int_point(&mut rng, n, 10_000);
            if f_eval(p, axis, &x).map(|v| !v.is_zero()).unwrap_or(false) {
                return FReport { axis: axis.number(), nonzero: Tri::Yes, method: "random-points", score: None };
            }
        }
        return FReport { axis: axis.number(), nonzero: Tri::No, method: "random-points", score: None };
    }
    let pc = p.to_complex64();
    let mut best = 0.0f64;
    for x in complex_samples(&mut rng, n, opts.samples.max(1)) {
        if let Ok(hm) = hessian_eval(&pc, axis, &x) {
            let rows: f64 = (0..n).map(|r| hm.row(r).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).product();
            if rows > 0.0 {
                let d = hm.det().map(|d| d.norm()).unwrap_or(0.0);
                best = best.max(d / rows);
            }
        }
    }
    // Large scores mean non-zero; the band is mirrored around `tol`.
    let nonzero = match small_band(best, opts.tol) {
        Tri::Yes => Tri::No,
        Tri::No => Tri::Yes,
        Tri::Indeterminate => Tri::Indeterminate,
    };
    FReport { axis: axis.number(), nonzero, method: "sampled", score: Some(best) }
}

/// Orbit representative with upper-triangular slices on one axis.
#[derive(Clone, Debug, PartialEq)]
pub struct SemiCanonical<F: Field> {
    pub axis: Axis,
    /// `t = act(P, g)`.
    pub t: Tensor3<F>,
    pub g: GroupElement<F>,
    /// `z[(a, b)]` is the `(a, a)` diagonal entry of slice `b`.
    pub z: Matrix<F>,
    /// Largest strictly-lower entry left in the slices (0 when exact).
    pub triangular_residual: f64,
}

/// `Z` matrix of the axis-3 slices.
fn z_matrix<F: Field>(t: &Tensor3<F>) -> Matrix<F> {
    let n = t.n();
    Matrix::from_fn(n, n, |a, b| t[(a, a, b)].clone())
}

/// `g3` with first column `a` completed by unit vectors.
fn completion<F: Field>(a: &[F]) -> Matrix<F> {
    let n = a.len();
    let pivot = a.iter().position(|x| !x.is_zero()).unwrap_or(0);
    let others: Vec<usize> = (0..n).filter(|&l| l != pivot).collect();
    Matrix::from_fn(n, n, |r, c| {
        if c == 0 {
            a[r].clone()
        } else if r == others[c - 1] {
            F::one()
        } else {
            F::zero()
        }
    })
}

/// Maps a group element found for `P.axis_to_third(axis)` back to `P`'s axes.
fn element_from_third<F: Field>(axis: Axis, h: GroupElement<F>) -> GroupElement<F> {
    let GroupElement { g1: h1, g2: h2, g3: h3 } = h;
    match axis {
        Axis::One => GroupElement { g1: h3, g2: h1, g3: h2 },
        Axis::Two => GroupElement { g1: h1, g2: h3, g3: h2 },
        Axis::Three => GroupElement { g1: h1, g2: h2, g3: h3 },
    }
}

fn slices_upper_triangular<F: Field>(t: &Tensor3<F>) -> bool {
    t.slices(Axis::Three).iter().all(Matrix::is_upper_triangular)
}

/// First two normalization steps: a non-singular combination moved into
/// slice 1, then slice 1 made the identity. Returns the accumulated element.
fn identity_first_slice<F: Field>(q: &Tensor3<F>, seed: u64) -> Result<(Tensor3<F>, GroupElement<F>)> {
    let n = q.n();
    let a = nonsingular_combination(q, Axis::Three, seed).ok_or(Error::SliceSingular { axis: 3 })?;
    let g3 = completion(&a);
    let q1 = q.act_matrices(&Matrix::identity(n), &Matrix::identity(n), &g3)?;
    let s_inv = q1.slice(Axis::Three, 0).inverse()?;
    let q2 = q1.act_matrices(&Matrix::identity(n), &s_inv, &Matrix::identity(n))?;
    Ok((q2, GroupElement { g1: Matrix::identity(n), g2: s_inv, g3 }))
}

/// Exact semi-canonical form. Slices that are already upper triangular are
/// kept as they are; otherwise slice 1 is made the identity and the
/// commuting slices are triangularized over the field, which requires a
/// rational (or Gaussian-rational) joint spectrum.
pub fn semi_canonical_exact<F: Field>(p: &Tensor3<F>, axis: Axis, opts: &ClassifyOptions) -> Result<SemiCanonical<F>> {
    assert!(F::EXACT, "semi_canonical_exact needs an exact field");
    let n = p.n();
    let q = p.axis_to_third(axis);
    if slices_upper_triangular(&q) && nonsingular_combination(&q, Axis::Three, opts.seed).is_some() {
        let z = z_matrix(&q);
        return Ok(SemiCanonical { axis, t: p.clone(), g: GroupElement::identity(n), z, triangular_residual: 0.0 });
    }
    let (q2, acc) = identity_first_slice(&q, opts.seed)?;
    let comm = commutation_residuals(&q2, Axis::Three, opts);
    if comm.passed != Tri::Yes {
        return Err(Error::NotInOrbit(format!("commutation relations fail on axis {axis}")));
    }
    let slices = q2.slices(Axis::Three);
    let x = common_flag(&slices[1..])?;
    let x_inv = x.inverse()?;
    let step = GroupElement { g1: x_inv.transpose(), g2: x.clone(), g3: Matrix::identity(n) };
    let t3 = q2.act(&step)?;
    debug_assert!(slices_upper_triangular(&t3));
    let g = element_from_third(axis, acc.compose(&step));
    let t = p.act(&g)?;
    Ok(SemiCanonical { axis, t, g, z: z_matrix(&t3), triangular_residual: 0.0 })
}

/// Exact eigenvalue candidates of `m`: rationalized numerical eigenvalues,
/// each verified by an exact singularity test.
fn exact_eigenvalues<F: Field>(m: &Matrix<F>) -> Vec<F> {
    let (_, t) = m.to_complex64().schur();
    let mut out: Vec<F> = Vec::new();
    for z in t.diagonal() {
        let (Some(re), Some(im)) = (rationalize(z.re, 1_000_000), rationalize(z.im, 1_000_000)) else {
            continue;
        };
        let Some(lambda) = F::from_parts(&re, &im) else { continue };
        if out.contains(&lambda) {
            continue;
        }
        let shifted = m - &Matrix::identity(m.rows()).scale(&lambda);
        if shifted.det().map(|d| d.is_zero()).unwrap_or(false) {
            out.push(lambda);
        }
    }
    out
}

/// Matrix of `m` restricted to the invariant column space of `w`.
fn restrict<F: Field>(m: &Matrix<F>, w: &Matrix<F>) -> Result<Matrix<F>> {
    let (_, rows) = w.transpose().rref(0.0);
    let all_cols: Vec<usize> = (0..w.cols()).collect();
    let base = w.submatrix(&rows, &all_cols);
    let image = (m * w).submatrix(&rows, &all_cols);
    Ok(&base.inverse()? * &image)
}

/// `X` with `X^{-1} M X` upper triangular for every matrix of a commuting family.
fn common_flag<F: Field>(mats: &[Matrix<F>]) -> Result<Matrix<F>> {
    let n = mats.first().map_or(0, Matrix::rows);
    if n <= 1 || mats.is_empty() {
        return Ok(Matrix::identity(n));
    }
    // common eigenvector: intersect eigenspaces inside the invariant subspace
    let mut w = Matrix::<F>::identity(n);
    for m in mats {
        let r = restrict(m, &w)?;
        let lambda = exact_eigenvalues(&r).into_iter().next().ok_or(Error::NonRationalSpectrum)?;
        let k = (&r - &Matrix::identity(r.rows()).scale(&lambda)).kernel();
        w = &w * &k;
    }
    let v = w.col(0);
    let x0 = completion(&v);
    let x0_inv = x0.inverse()?;
    let rest: Vec<usize> = (1..n).collect();
    let subs: Vec<Matrix<F>> = mats.iter().map(|m| (&(&x0_inv * m) * &x0).submatrix(&rest, &rest)).collect();
    let y = common_flag(&subs)?;
    let block = Matrix::from_fn(n, n, |r, c| match (r, c) {
        (0, 0) => F::one(),
        (0, _) | (_, 0) => F::zero(),
        _ => y[(r - 1, c - 1)].clone(),
    });
    Ok(&x0 * &block)
}

/// Float semi-canonical form via a complex Schur decomposition of a random
/// combination of the slices, retried with up to 3 seeds.
pub fn semi_canonical_float(p: &Tensor3<Complex64>, axis: Axis, opts: &ClassifyOptions) -> Result<SemiCanonical<Complex64>> {
    let n = p.n();
    let q = p.axis_to_third(axis);
    let scale = q.frobenius_norm().max(f64::MIN_POSITIVE);
    if q.slices(Axis::Three).iter().all(|s| s.lower_residual() == 0.0)
        && nonsingular_combination(&q, Axis::Three, opts.seed).is_some()
    {
        return Ok(SemiCanonical { axis, t: p.clone(), g: GroupElement::identity(n), z: z_matrix(&q), triangular_residual: 0.0 });
    }
    let (q2, acc) = identity_first_slice(&q, opts.seed)?;
    let slices = q2.slices(Axis::Three);
    let mut best: Option<(f64, GroupElement<Complex64>, Tensor3<Complex64>)> = None;
    for attempt in 0..3u64 {
        let mut rng = random::rng(axis_seed(opts.seed, axis, 10 + attempt));
        let mut comb = Matrix::<Complex64>::zeros(n, n);
        for s in &slices[1..] {
            let c = Complex64::new(random::normal(&mut rng), random::normal(&mut rng));
            comb = &comb + &s.scale(&c);
        }
        let (qm, _) = comb.schur();
        let step = GroupElement { g1: qm.conj(), g2: qm.clone(), g3: Matrix::identity(n) };
        let t3 = q2.act(&step)?;
        let resid = t3.slices(Axis::Three).iter().map(Matrix::lower_residual).fold(0.0, f64::max) / scale;
        if best.as_ref().is_none_or(|(b, _, _)| resid < *b) {
            best = Some((resid, step, t3));
        }
        if resid < 0.1 * opts.tol {
            break;
        }
    }
    let (resid, step, t3) = best.expect("at least one attempt");
    if resid > 10.0 * opts.tol {
        return Err(Error::Indeterminate(format!("joint triangularization residual {resid:e}")));
    }
    let g = element_from_third(axis, acc.compose(&step));
    let t = p.act(&g)?;
    Ok(SemiCanonical { axis, t, g, z: z_matrix(&t3), triangular_residual: resid })
}

/// `P = D(g1, g2, g3)`, rows of `g1`, `g2` scaled to a leading 1 and the
/// rank-1 components sorted by their `g3` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition<F: Field> {
    pub g1: Matrix<F>,
    pub g2: Matrix<F>,
    pub g3: Matrix<F>,
    /// Relative Frobenius reconstruction error.
    pub residual: f64,
}

pub const NORMALIZATION: &str = "leading-one rows of g1 and g2; components sorted by g3 rows";

impl<F: Field> Decomposition<F> {
    pub fn n(&self) -> usize {
        self.g1.rows()
    }

    pub fn reconstruct(&self) -> Tensor3<F> {
        from_factors(&self.g1, &self.g2, &self.g3)
    }

    /// The rank-1 terms `(row_i g1, row_i g2, row_i g3)`.
    pub fn components(&self) -> Vec<[Vec<F>; 3]> {
        (0..self.n()).map(|i| [self.g1.row(i), self.g2.row(i), self.g3.row(i)]).collect()
    }

    pub fn to_json(&self) -> Value {
        let m = |g: &Matrix<F>| Value::Array(g.to_rows().iter().map(|r| Value::Array(r.iter().map(F::to_json).collect())).collect());
        json!({
            "field": F::FIELD_TAG,
            "normalization": NORMALIZATION,
            "g1": m(&self.g1),
            "g2": m(&self.g2),
            "g3": m(&self.g3),
            "residual": self.residual,
        })
    }
}

fn relative_residual<F: Field>(p: &Tensor3<F>, g1: &Matrix<F>, g2: &Matrix<F>, g3: &Matrix<F>) -> f64 {
    let diff = from_factors(g1, g2, g3).sub(p).expect("same n");
    let scale = p.frobenius_norm();
    if scale == 0.0 {
        diff.frobenius_norm()
    } else {
        diff.frobenius_norm() / scale
    }
}

/// Lexicographic comparison of rows, real parts first, then imaginary parts;
/// float values within `1e-9` (relative) compare equal.
fn compare_rows<F: Field>(a: &[F], b: &[F]) -> Ordering {
    let close = |x: f64, y: f64| {
        if F::EXACT {
            x == y
        } else {
            (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs()))
        }
    };
    for part in [0, 1] {
        for (x, y) in a.iter().zip(b) {
            let (zx, zy) = (x.to_complex64(), y.to_complex64());
            let (u, v) = if part == 0 { (zx.re, zy.re) } else { (zx.im, zy.im) };
            if !close(u, v) {
                return u.partial_cmp(&v).unwrap_or(Ordering::Equal);
            }
        }
    }
    Ordering::Equal
}

/// Applies the leading-one normalization and the canonical component order.
pub fn normalize_factors<F: Field>(g1: &Matrix<F>, g2: &Matrix<F>, g3: &Matrix<F>) -> (Matrix<F>, Matrix<F>, Matrix<F>) {
    let n = g1.rows();
    let lead = |row: &[F]| -> F {
        if F::EXACT {
            row.iter().find(|x| !x.is_zero()).cloned().unwrap_or_else(F::one)
        } else {
            let max = row.iter().map(Field::abs_f64).fold(0.0, f64::max);
            row.iter().find(|x| x.abs_f64() > 1e-8 * max).cloned().unwrap_or_else(F::one)
        }
    };
    let mut rows: Vec<[Vec<F>; 3]> = (0..n)
        .map(|i| {
            let (r1, r2, r3) = (g1.row(i), g2.row(i), g3.row(i));
            let (c1, c2) = (lead(&r1), lead(&r2));
            let s = c1.clone() * c2.clone();
            [
                r1.iter().map(|x| x.clone() / c1.clone()).collect(),
                r2.iter().map(|x| x.clone() / c2.clone()).collect(),
                r3.iter().map(|x| x.clone() * s.clone()).collect(),
            ]
        })
        .collect();
    rows.sort_by(|a, b| compare_rows(&a[2], &b[2]));
    let build = |t: usize| Matrix::from_fn(n, n, |r, c| rows[r][t][c].clone());
    (build(0), build(1), build(2))
}

/// Upper-triangular eigenvector matrix of an upper-triangular matrix with
/// distinct diagonal, by back substitution.
fn triangular_eigenvectors<F: Field>(s: &Matrix<F>) -> Matrix<F> {
    let n = s.rows();
    let mut x = Matrix::<F>::identity(n);
    for m in 0..n {
        let d = s[(m, m)].clone();
        for l in (0..m).rev() {
            let mut acc = F::zero();
            for t in l + 1..=m {
                acc = acc + s[(l, t)].clone() * x[(t, m)].clone();
            }
            x[(l, m)] = -acc / (s[(l, l)].clone() - d.clone());
        }
    }
    x
}

/// Vandermonde matrix on nodes `0..n-1`: first column `1`, second `(0, 1, .., n-1)`.
pub fn vandermonde<F: Field>(n: usize) -> Matrix<F> {
    Matrix::from_fn(n, n, |r, c| {
        let mut v = F::one();
        for _ in 0..c {
            v = v * F::from_i64(r as i64);
        }
        v
    })
}

/// From a triangular representative with non-singular `Z` to `D`. Returns the
/// decomposition of the axis-3-oriented tensor `q` given `act(q, acc) = t3`.
fn diagonalize<F: Field>(t3: &Tensor3<F>, acc: &GroupElement<F>) -> Result<(Matrix<F>, Matrix<F>, Matrix<F>)> {
    let n = t3.n();
    let z = z_matrix(t3);
    let zp = vandermonde::<F>(n);
    let g_z = &z.inverse()? * &zp;
    let t_a = t3.act_matrices(&Matrix::identity(n), &Matrix::identity(n), &g_z)?;
    let u1_inv = t_a.slice(Axis::Three, 0).inverse()?;
    let t_b = t_a.act_matrices(&Matrix::identity(n), &u1_inv, &Matrix::identity(n))?;
    let x = if n > 1 { triangular_eigenvectors(&t_b.slice(Axis::Three, 1)) } else { Matrix::identity(n) };
    let x_inv = x.inverse()?;
    let total = acc.compose(&GroupElement { g1: Matrix::identity(n), g2: Matrix::identity(n), g3: g_z }).compose(&GroupElement {
        g1: Matrix::identity(n),
        g2: u1_inv,
        g3: Matrix::identity(n),
    });
    let total = total.compose(&GroupElement { g1: x_inv.transpose(), g2: x, g3: Matrix::identity(n) });
    // act(q, total) = D(I, I, Z'), so q = D(total1^-1, total2^-1, Z' total3^-1)
    Ok((total.g1.inverse()?, total.g2.inverse()?, &zp * &total.g3.inverse()?))
}

fn decomposition_from_third<F: Field>(p: &Tensor3<F>, axis: Axis, h: (Matrix<F>, Matrix<F>, Matrix<F>)) -> Decomposition<F> {
    let g = element_from_third(axis, GroupElement { g1: h.0, g2: h.1, g3: h.2 });
    let (g1, g2, g3) = normalize_factors(&g.g1, &g.g2, &g.g3);
    let residual = relative_residual(p, &g1, &g2, &g3);
    Decomposition { g1, g2, g3, residual }
}

/// First axis whose slices admit a non-singular combination.
fn working_axis<F: Field>(p: &Tensor3<F>, opts: &ClassifyOptions) -> Result<Axis> {
    [Axis::Three, Axis::One, Axis::Two]
        .into_iter()
        .find(|&a| nonsingular_combination(p, a, opts.seed).is_some())
        .ok_or(Error::SliceSingular { axis: 3 })
}

/// Exact decomposition; `NonRationalSpectrum` when the slices cannot be
/// triangularized over the field, `NotInOrbit` when `Z` is singular.
pub fn decompose_exact<F: Field>(p: &Tensor3<F>, opts: &ClassifyOptions) -> Result<Decomposition<F>> {
    let axis = working_axis(p, opts)?;
    let sc = semi_canonical_exact(p, axis, opts)?;
    if sc.z.det()?.is_zero() {
        return Err(Error::NotInOrbit("diagonal matrix Z of the triangular form is singular".into()));
    }
    let q = p.axis_to_third(axis);
    let t3 = sc.t.axis_to_third(axis);
    let acc_third = GroupElement { g1: sc.g.g1.clone(), g2: sc.g.g2.clone(), g3: sc.g.g3.clone() };
    let acc_third = third_from_element(axis, acc_third);
    let h = diagonalize(&t3, &acc_third)?;
    let dec = decomposition_from_third(p, axis, h);
    if !dec.reconstruct().sub(p)?.is_zero() {
        return Err(Error::Inconsistent("exact decomposition does not reconstruct the input".into()));
    }
    debug_assert_eq!(q.n(), p.n());
    Ok(dec)
}

/// Inverse of [`element_from_third`].
fn third_from_element<F: Field>(axis: Axis, g: GroupElement<F>) -> GroupElement<F> {
    let GroupElement { g1, g2, g3 } = g;
    match axis {
        Axis::One => GroupElement { g1: g2, g2: g3, g3: g1 },
        Axis::Two => GroupElement { g1, g2: g3, g3: g2 },
        Axis::Three => GroupElement { g1, g2, g3 },
    }
}

/// Float decomposition with least-squares polishing of the factors.
pub fn decompose_float(p: &Tensor3<Complex64>, opts: &ClassifyOptions) -> Result<Decomposition<Complex64>> {
    let axis = working_axis(p, opts)?;
    let sc = semi_canonical_float(p, axis, opts)?;
    let t3 = sc.t.axis_to_third(axis);
    if sc.z.inverse_condition() < 1e-12 {
        return Err(Error::NotInOrbit("diagonal matrix Z of the triangular form is singular".into()));
    }
    let acc_third = third_from_element(axis, sc.g.clone());
    let h = diagonalize(&t3, &acc_third)?;
    let g = element_from_third(axis, GroupElement { g1: h.0, g2: h.1, g3: h.2 });
    let (mut g1, mut g2, mut g3) = (g.g1, g.g2, g.g3);
    let mut residual = relative_residual(p, &g1, &g2, &g3);
    for _ in 0..3 {
        let Some((a, b, c)) = als_sweep(p, &g2, &g3) else { break };
        let r = relative_residual(p, &a, &b, &c);
        if r >= residual {
            break;
        }
        (g1, g2, g3, residual) = (a, b, c, r);
    }
    let (g1, g2, g3) = normalize_factors(&g1, &g2, &g3);
    let residual = relative_residual(p, &g1, &g2, &g3);
    Ok(Decomposition { g1, g2, g3, residual })
}

/// One alternating least-squares sweep over the three factors.
fn als_sweep(
    p: &Tensor3<Complex64>,
    g2: &Matrix<Complex64>,
    g3: &Matrix<Complex64>,
) -> Option<(Matrix<Complex64>, Matrix<Complex64>, Matrix<Complex64>)> {
    let n = p.n();
    // solve for the factor on `axis` with the other two fixed:
    // p[.., a, ..] = sum_i K[(u, v), i] g[i][a]
    let solve = |axis: Axis, x: &Matrix<Complex64>, y: &Matrix<Complex64>| -> Option<Matrix<Complex64>> {
        let k = DMatrix::from_fn(n * n, n, |r, i| x[(i, r / n)] * y[(i, r % n)]);
        let rhs = DMatrix::from_fn(n * n, n, |r, a| {
            let (u, v) = (r / n, r % n);
            match axis {
                Axis::One => p[(a, u, v)],
                Axis::Two => p[(u, a, v)],
                Axis::Three => p[(u, v, a)],
            }
        });
        let sol = k.svd(true, true).solve(&rhs, 1e-14).ok()?;
        Some(Matrix::from_dmatrix(&sol))
    };
    let a = solve(Axis::One, g2, g3)?;
    let b = solve(Axis::Two, &a, g3)?;
    let c = solve(Axis::Three, &a, &b)?;
    Some((a, b, c))
}

/// Decides membership. See the module docs for the verdict rules.
pub fn classify<F: Field>(p: &Tensor3<F>, opts: &ClassifyOptions) -> MembershipReport {
    let n = p.n();
    let mut axes = Vec::with_capacity(3);
    for axis in Axis::ALL {
        let commutation = commutation_residuals(p, axis, opts);
        let slice_ok = slice_nonsingular(p, axis, opts);
        let f = (commutation.passed != Tri::No).then(|| f_nonzero(p, axis, opts));
        axes.push(AxisReport { axis: axis.number(), slice_nonsingular: slice_ok, commutation, f });
    }
    let in_orbit_axis = axes.iter().any(|a| a.commutation.passed == Tri::Yes && a.f.as_ref().is_some_and(|f| f.nonzero == Tri::Yes));
    let all_pass = axes.iter().all(|a| a.commutation.passed == Tri::Yes);
    let any_indeterminate = axes
        .iter()
        .any(|a| a.commutation.passed == Tri::Indeterminate || a.f.as_ref().is_some_and(|f| f.nonzero == Tri::Indeterminate));
    let all_f_zero = axes.iter().all(|a| a.f.as_ref().is_some_and(|f| f.nonzero == Tri::No));
    let verdict = if in_orbit_axis {
        Verdict::InOrbit
    } else if all_pass && all_f_zero {
        Verdict::Boundary
    } else if any_indeterminate {
        Verdict::Indeterminate
    } else {
        Verdict::OutsideRelaxation
    };
    let f_values: Vec<Tri> = axes
        .iter()
        .filter(|a| a.commutation.passed == Tri::Yes)
        .filter_map(|a| a.f.as_ref().map(|f| f.nonzero))
        .filter(|t| *t != Tri::Indeterminate)
        .collect();
    let cross_axis_consistent = f_values.windows(2).all(|w| w[0] == w[1]);
    let mut notes = Vec::new();
    if !cross_axis_consistent {
        notes.push("f_nonzero disagrees across axes passing commutation".to_string());
    }
    let in_orbit = match verdict {
        Verdict::InOrbit => Tri::Yes,
        Verdict::Indeterminate => Tri::Indeterminate,
        _ => Tri::No,
    };
    let mut report = MembershipReport {
        n,
        backend: if F::EXACT { "exact" } else { "float" },
        verdict,
        in_orbit,
        axes,
        cross_axis_consistent,
        decomposition: None,
        residual: None,
        notes,
    };
    if verdict == Verdict::InOrbit && opts.decompose {
        attach_decomposition(p, opts, &mut report);
    }
    report
}

fn attach_decomposition<F: Field>(p: &Tensor3<F>, opts: &ClassifyOptions, report: &mut MembershipReport) {
    if F::EXACT {
        match decompose_exact(p, opts) {
            Ok(d) => {
                report.residual = Some(d.residual);
                report.decomposition = Some(d.to_json());
                return;
            }
            Err(Error::NonRationalSpectrum) => {
                report.notes.push("slice spectrum is not rational; decomposition computed in floating point".into());
            }
            Err(e) => {
                report.notes.push(format!("exact decomposition failed: {e}"));
                return;
            }
        }
    }
    match decompose_float(&p.to_complex64(), opts) {
        Ok(d) => {
            report.residual = Some(d.residual);
            report.decomposition = Some(d.to_json());
        }
        Err(e) => report.notes.push(format!("decomposition failed: {e}")),
    }
}

/// Float decomposition of any tensor, used where only numbers are needed.
pub fn decompose_any<F: Field>(p: &Tensor3<F>, opts: &ClassifyOptions) -> Result<Decomposition<Complex64>> {
    decompose_float(&p.to_complex64(), opts)
}

/// Reads an exact rational `Z`, for reports.
pub fn z_to_rational_rows(z: &Matrix<Rational>) -> Vec<Vec<String>> {
    z.to_rows().iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;
    use crate::random;

    fn q(v: i64) -> Rational {
        Rational::from_i64(v)
    }

    fn qm(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_i64_rows(rows)
    }

    fn shift(n: usize) -> Matrix<Rational> {
        Matrix::from_fn(n, n, |r, c| q(i64::from(c == r + 1)))
    }

    fn k_n(n: usize, eps: i64) -> Tensor3<Rational> {
        let s2 = &shift(n) + &Matrix::diag(&(0..n as i64).map(|l| q(l * eps)).collect::<Vec<_>>());
        let mut slices = vec![Matrix::identity(n)];
        for j in 1..n {
            let next = &slices[j - 1] * &s2;
            slices.push(next);
        }
        Tensor3::from_slices(&slices).unwrap()
    }

    fn opts() -> ClassifyOptions {
        ClassifyOptions::default()
    }

    #[test]
    fn commutation_examples() {
        let mut rng = random::rng(1);
        let g = random::rational_group_element(&mut rng, 3, 3);
        let p = Tensor3::unit_diagonal(3).act(&g).unwrap();
        for axis in Axis::ALL {
            let r = commutation_residuals(&p, axis, &opts());
            assert_eq!(r.identically_zero, Some(true));
        }
        let any2 = random::rational_tensor(&mut rng, 2, 5);
        for axis in Axis::ALL {
            assert_eq!(commutation_residuals(&any2, axis, &opts()).passed, Tri::Yes);
        }
        assert_eq!(commutation_residuals(&k_n(3, 0), Axis::Three, &opts()).passed, Tri::Yes);
        let generic = random::rational_tensor(&mut rng, 3, 5);
        let r = commutation_residuals(&generic, Axis::One, &opts());
        assert_eq!(r.passed, Tri::No);
        assert!(r.witness.is_some());
    }

    #[test]
    fn float_commutation_agrees() {
        let mut rng = random::rng(2);
        let g = random::rational_group_element(&mut rng, 4, 3);
        let p = Tensor3::unit_diagonal(4).act(&g).unwrap().to_complex64();
        assert_eq!(commutation_residuals(&p, Axis::Two, &opts()).passed, Tri::Yes);
        let generic = random::rational_tensor(&mut rng, 4, 5).to_complex64();
        assert_eq!(commutation_residuals(&generic, Axis::Two, &opts()).passed, Tri::No);
    }

    #[test]
    fn slice_nonsingular_examples() {
        let d = Tensor3::<Rational>::unit_diagonal(3);
        assert!(Axis::ALL.iter().all(|&a| slice_nonsingular(&d, a, &opts())));
        assert!(!slice_nonsingular(&Tensor3::<Rational>::zeros(3), Axis::One, &opts()));
        let mut slices = vec![Matrix::<Rational>::identity(3)];
        slices.extend((1..3).map(|_| Matrix::zeros(3, 3)));
        let t = Tensor3::from_slices(&slices).unwrap();
        assert!(slice_nonsingular(&t, Axis::Three, &opts()));
        assert!(!slice_nonsingular(&t, Axis::One, &opts()));
    }

    #[test]
    fn semi_canonical_examples() {
        let k3 = k_n(3, 0);
        let sc = semi_canonical_exact(&k3, Axis::Three, &opts()).unwrap();
        assert_eq!(sc.t, k3);
        assert_eq!(sc.z, qm(&[&[1, 0, 0], &[1, 0, 0], &[1, 0, 0]]));
        assert!(sc.z.det().unwrap().is_zero());

        let k31 = k_n(3, 1);
        let sc = semi_canonical_exact(&k31, Axis::Three, &opts()).unwrap();
        assert_eq!(sc.z, qm(&[&[1, 0, 0], &[1, 1, 1], &[1, 2, 4]]));

        let d = Tensor3::<Rational>::unit_diagonal(3);
        let sc = semi_canonical_exact(&d, Axis::Three, &opts()).unwrap();
        assert_eq!(sc.t, d);
        assert_eq!(sc.z, Matrix::identity(3));
    }

    #[test]
    fn semi_canonical_triangularizes_orbit_points() {
        let mut rng = random::rng(4);
        for axis in Axis::ALL {
            let g = random::rational_group_element(&mut rng, 3, 2);
            let p = Tensor3::unit_diagonal(3).act(&g).unwrap();
            let sc = semi_canonical_exact(&p, axis, &opts()).unwrap();
            assert_eq!(p.act(&sc.g).unwrap(), sc.t);
            assert!(sc.t.slices(axis).iter().all(Matrix::is_upper_triangular));
            assert_eq!(sc.t.slice(axis, 0), Matrix::identity(3));
            assert!(!sc.z.det().unwrap().is_zero());

            let fl = semi_canonical_float(&p.to_complex64(), axis, &opts()).unwrap();
            assert!(fl.triangular_residual < 1e-10);
        }
    }

    #[test]
    fn decompose_examples() {
        let d = Tensor3::<Rational>::unit_diagonal(3);
        let dec = decompose_exact(&d, &opts()).unwrap();
        assert_eq!(dec.reconstruct(), d);

        let k31 = k_n(3, 1);
        let dec = decompose_exact(&k31, &opts()).unwrap();
        assert_eq!(dec.reconstruct(), k31);
        assert_eq!(dec.residual, 0.0);

        assert!(matches!(decompose_exact(&k_n(3, 0), &opts()), Err(Error::NotInOrbit(_))));
    }

    #[test]
    fn exact_decomposition_recovers_generators() {
        let mut rng = random::rng(8);
        for n in 2..=4 {
            let g = random::rational_group_element(&mut rng, n, 2);
            let p = Tensor3::unit_diagonal(n).act(&g).unwrap();
            let dec = decompose_exact(&p, &opts()).unwrap();
            assert_eq!(dec.reconstruct(), p);
            let (e1, e2, e3) = normalize_factors(&g.g1, &g.g2, &g.g3);
            assert_eq!((dec.g1, dec.g2, dec.g3), (e1, e2, e3));
        }
    }

    #[test]
    fn float_decomposition_round_trip() {
        let mut rng = random::rng(9);
        for n in 2..=6 {
            let g: Vec<Matrix<Complex64>> = (0..3).map(|_| random::complex_invertible(&mut rng, n)).collect();
            let p = from_factors(&g[0], &g[1], &g[2]);
            let dec = decompose_float(&p, &opts()).unwrap();
            assert!(dec.residual < 1e-10, "n = {n}: residual {}", dec.residual);
        }
    }

    #[test]
    fn classify_examples() {
        let mut rng = random::rng(12);
        let g = random::rational_group_element(&mut rng, 3, 3);
        let p = Tensor3::unit_diagonal(3).act(&g).unwrap();
        let rep = classify(&p, &opts());
        assert_eq!(rep.verdict, Verdict::InOrbit);
        assert_eq!(rep.residual, Some(0.0));
        assert!(rep.cross_axis_consistent);

        assert_eq!(classify(&k_n(3, 0), &opts()).verdict, Verdict::Boundary);
        let w = Tensor3::from_fn(2, |i, j, k| q(i64::from(i + j + k == 1)));
        assert_eq!(classify(&w, &opts()).verdict, Verdict::Boundary);
        let generic = random::rational_tensor(&mut rng, 3, 5);
        assert_eq!(classify(&generic, &opts()).verdict, Verdict::OutsideRelaxation);

        let pf = p.to_complex64();
        assert_eq!(classify(&pf, &opts()).verdict, Verdict::InOrbit);
        assert_eq!(classify(&k_n(4, 0).to_complex64(), &opts()).verdict, Verdict::Boundary);
    }
}
