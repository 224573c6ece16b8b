//! Covariants `h_i`, `f_i`, the rational invariant `r_i`, the tangles
//! `tau_3`, `tau_4` and the composite covariant `G_i = h_i^(n-2) tau_n`.
//!
//! `h_i(P; x) = det(P *_i x)` and `f_i(P; x) = (-1)^(n-1) det(Hess_x h_i)`.
//! Both are computed symbolically; `h_eval`, `f_eval` and `r_eval` work at
//! a single point and are the float-friendly variants.

use std::ops::{Add, Mul, Neg};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::poly::{hessian, hessian_vars, MultiPoly, PolyMatrix};
use crate::scalar::{permutations_with_sign, Field, Rational};
use crate::tensor::{Axis, Tensor3};

/// Largest `n` for which `f` is expanded symbolically.
pub const MAX_SYMBOLIC_F: usize = 5;

/// A covariant polynomial in `n` auxiliary indeterminates.
#[derive(Clone, PartialEq)]
pub struct CovariantValue<C> {
    pub axis: Axis,
    pub poly: MultiPoly<C>,
    /// Nominal degree in the tensor entries.
    pub deg_p: u32,
    /// Degree in `x`; `None` for the zero polynomial.
    pub deg_x: Option<u32>,
}

impl<C: Field> std::fmt::Debug for CovariantValue<C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CovariantValue")
            .field("axis", &self.axis)
            .field("poly", &self.poly)
            .field("deg_p", &self.deg_p)
            .field("deg_x", &self.deg_x)
            .finish()
    }
}

impl<C: Field> CovariantValue<C> {
    fn new(axis: Axis, poly: MultiPoly<C>, deg_p: u32) -> Self {
        let deg_x = poly.total_degree();
        CovariantValue { axis, poly, deg_p, deg_x }
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }
}

/// Summary used in reports.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovariantSummary {
    pub axis: usize,
    pub deg_p: u32,
    pub deg_x: Option<u32>,
    pub terms: usize,
    pub text: String,
}

impl<C: Field> From<&CovariantValue<C>> for CovariantSummary {
    fn from(v: &CovariantValue<C>) -> Self {
        CovariantSummary {
            axis: v.axis.number(),
            deg_p: v.deg_p,
            deg_x: v.deg_x,
            terms: v.poly.len(),
            text: v.poly.to_string(),
        }
    }
}

/// The linear pencil `P *_i x` as a polynomial matrix in `x_1..x_n`.
pub fn slice_pencil<F: Field>(p: &Tensor3<F>, axis: Axis) -> PolyMatrix<F> {
    PolyMatrix::pencil(&p.slices(axis))
}

/// `h_i(P; x)`.
pub fn h<F: Field>(p: &Tensor3<F>, axis: Axis) -> Result<CovariantValue<F>> {
    let poly = slice_pencil(p, axis).det()?;
    Ok(CovariantValue::new(axis, poly, p.n() as u32))
}

/// `f_i(P; x)`, expanded symbolically for `n <= MAX_SYMBOLIC_F`.
pub fn f<F: Field>(p: &Tensor3<F>, axis: Axis) -> Result<CovariantValue<F>> {
    let n = p.n();
    if n > MAX_SYMBOLIC_F {
        return Err(Error::UnsupportedDimension { op: "symbolic f", n, supported: "1..=5" });
    }
    let hp = h(p, axis)?.poly;
    let mut det = hessian(&hp).det()?;
    if n.is_multiple_of(2) {
        det = -&det;
    }
    Ok(CovariantValue::new(axis, det, (n * n) as u32))
}

/// `h_i(P; x0)`.
pub fn h_eval<F: Field>(p: &Tensor3<F>, axis: Axis, x0: &[F]) -> Result<F> {
    p.contract(axis, x0)?.det()
}

/// Hessian of `h_i` at `x0`.
///
/// With `A = P *_i x0` invertible and `B_a = A^{-1} P_a`, Jacobi's formula
/// gives `d^2 h / dx_a dx_b = h (tr B_a tr B_b - tr(B_a B_b))`. When `A` is
/// singular the symbolic Hessian is evaluated instead.
pub fn hessian_eval<F: Field>(p: &Tensor3<F>, axis: Axis, x0: &[F]) -> Result<Matrix<F>> {
    let n = p.n();
    let a = p.contract(axis, x0)?;
    let hval = a.det()?;
    let singular = if F::EXACT {
        hval.is_zero()
    } else {
        a.to_complex64().inverse_condition() < 1e-10
    };
    if singular {
        if n > MAX_SYMBOLIC_F + 1 {
            return Err(Error::SingularEvaluation);
        }
        let hp = h(p, axis)?.poly;
        return hessian(&hp).eval(x0);
    }
    let inv = a.inverse()?;
    let bs: Vec<Matrix<F>> = p.slices(axis).iter().map(|s| &inv * s).collect();
    let traces: Vec<F> = bs.iter().map(trace).collect();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = hval.clone() * (traces[i].clone() * traces[j].clone() - trace_of_product(&bs[i], &bs[j]));
            out[(i, j)] = v.clone();
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

fn trace<F: Field>(m: &Matrix<F>) -> F {
    m.diagonal().into_iter().fold(F::zero(), |a, b| a + b)
}

fn trace_of_product<F: Field>(a: &Matrix<F>, b: &Matrix<F>) -> F {
    let n = a.rows();
    let mut acc = F::zero();
    for r in 0..n {
        for c in 0..n {
            acc = acc + a[(r, c)].clone() * b[(c, r)].clone();
        }
    }
    acc
}

/// `f_i(P; x0)`.
pub fn f_eval<F: Field>(p: &Tensor3<F>, axis: Axis, x0: &[F]) -> Result<F> {
    let d = hessian_eval(p, axis, x0)?.det()?;
    Ok(if p.n().is_multiple_of(2) { -d } else { d })
}

/// `r_i(P; x0) = f_i / ((n - 1) h_i^(n-2))`.
pub fn r_eval<F: Field>(p: &Tensor3<F>, axis: Axis, x0: &[F]) -> Result<F> {
    let n = p.n();
    if n < 2 {
        return Err(Error::UnsupportedDimension { op: "r", n, supported: "n >= 2" });
    }
    let hv = h_eval(p, axis, x0)?;
    if hv.is_zero() {
        return Err(Error::SingularEvaluation);
    }
    let fv = f_eval(p, axis, x0)?;
    let mut denom = F::from_i64((n - 1) as i64);
    for _ in 0..n - 2 {
        denom = denom * hv.clone();
    }
    Ok(fv / denom)
}

fn check_n<F: Field>(p: &Tensor3<F>, want: usize, op: &'static str) -> Result<()> {
    if p.n() != want {
        return Err(Error::UnsupportedDimension {
            op,
            n: p.n(),
            supported: if want == 3 { "{3}" } else { "{4}" },
        });
    }
    Ok(())
}

fn signed<F: Field>(v: F, sign: i64) -> F {
    if sign < 0 {
        -v
    } else {
        v
    }
}

/// The 3-tangle
/// `sum P_i P_j P_k P_l P_m P_n eps(i1 j1 k1) eps(j2 k2 l2) eps(k3 l3 m3)
///  eps(l1 m1 n1) eps(m2 n2 i2) eps(n3 i3 j3)`.
///
/// Each epsilon factor is a signed permutation `s_1..s_6`. With `s_1` and
/// `s_4` fixed the remaining sum is the trace of a product of four 6x6
/// matrices indexed by `s_2, s_3, s_5, s_6`.
pub fn tangle3<F: Field>(p: &Tensor3<F>) -> Result<F> {
    check_n(p, 3, "tau_3")?;
    let perms = permutations_with_sign(3);
    let m = perms.len();
    let mut total = F::zero();
    for (s1, e1) in &perms {
        for (s4, e4) in &perms {
            // A[s2, s3] = e2 e3 P_k P_l, k = (s1[2], s2[1], s3[0]), l = (s4[0], s2[2], s3[1])
            let a = Matrix::from_fn(m, m, |x2, x3| {
                let (s2, e2) = &perms[x2];
                let (s3, e3) = &perms[x3];
                let v = p[(s1[2], s2[1], s3[0])].clone() * p[(s4[0], s2[2], s3[1])].clone();
                signed(v, e2 * e3)
            });
            // E[s5, s3] = P_m, m = (s4[1], s5[0], s3[2])
            let e = Matrix::from_fn(m, m, |x5, x3| p[(s4[1], perms[x5].0[0], perms[x3].0[2])].clone());
            // C[s5, s6] = e5 e6 P_i P_n, i = (s1[0], s5[2], s6[1]), n = (s4[2], s5[1], s6[0])
            let c = Matrix::from_fn(m, m, |x5, x6| {
                let (s5, e5) = &perms[x5];
                let (s6, e6) = &perms[x6];
                let v = p[(s1[0], s5[2], s6[1])].clone() * p[(s4[2], s5[1], s6[0])].clone();
                signed(v, e5 * e6)
            });
            // B[s2, s6] = P_j, j = (s1[1], s2[0], s6[2])
            let b = Matrix::from_fn(m, m, |x2, x6| p[(s1[1], perms[x2].0[0], perms[x6].0[2])].clone());
            let chain = &(&a * &e.transpose()) * &c;
            let mut sum = F::zero();
            for x2 in 0..m {
                for x6 in 0..m {
                    sum = sum + chain[(x2, x6)].clone() * b[(x2, x6)].clone();
                }
            }
            total = total + signed(sum, e1 * e4);
        }
    }
    Ok(total)
}

/// The 4-tangle with epsilon factors
/// `eps(i1 j1 k1 l1) eps(m1 n1 r1 s1) eps(i2 l2 m2 s2) eps(j2 k2 n2 r2)
///  eps(i3 j3 m3 n3) eps(k3 l3 r3 s3)`.
///
/// The fifth factor uses `i3`; each of the 24 indices then occurs exactly
/// once. With the first two permutations fixed, the remaining sum is
/// `sum D o (A B^T C)` over 24x24 matrices. The outer loop runs in parallel
/// and partial sums are combined in a fixed order.
///
/// Rational input is scaled to integers and evaluated in `i128` when the
/// entries are small enough for no intermediate to overflow, else in `BigInt`.
pub fn tangle4<F: Field>(p: &Tensor3<F>) -> Result<F> {
    check_n(p, 4, "tau_4")?;
    let rationals: Option<Vec<Rational>> = p.entries().iter().map(Field::to_rational).collect();
    let Some(qs) = rationals else {
        return Ok(tangle4_ring(p.entries()));
    };
    let lcm = qs.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let ints: Vec<BigInt> = qs.iter().map(|q| q.numer() * (&lcm / q.denom())).collect();
    // 24^6 < 2^28 terms, each a product of 8 entries: |entry| <= 2^12 keeps
    // every partial sum below 2^124.
    let small = ints.iter().all(|v| v.magnitude().bits() <= 12);
    let value = if small {
        let narrow: Vec<i128> = ints.iter().map(|v| v.to_i128().expect("12-bit entry")).collect();
        BigInt::from(tangle4_ring(&narrow))
    } else {
        tangle4_ring(&ints)
    };
    let scale = num_traits::pow(lcm, 8);
    Ok(F::from_rational(&Rational::new(value, scale)))
}

/// Ring-generic core of [`tangle4`] on the 64 entries in `(i, j, k)` order.
fn tangle4_ring<R>(entries: &[R]) -> R
where
    R: Clone + Zero + Add<Output = R> + Mul<Output = R> + Neg<Output = R> + Send + Sync,
{
    const M: usize = 24;
    let perms = permutations_with_sign(4);
    let at = |i: usize, j: usize, k: usize| &entries[(i * 4 + j) * 4 + k];
    let sgn = |v: R, s: i64| if s < 0 { -v } else { v };
    let pair = |a: &R, b: &R, s: i64| if a.is_zero() || b.is_zero() { R::zero() } else { sgn(a.clone() * b.clone(), s) };
    let partials: Vec<R> = perms
        .par_iter()
        .map(|(s1, e1)| {
            let mut acc = R::zero();
            let mut a = vec![R::zero(); M * M];
            let mut b = vec![R::zero(); M * M];
            let mut c = vec![R::zero(); M * M];
            let mut d = vec![R::zero(); M * M];
            for (s2, e2) in &perms {
                for (x, (sx, ex)) in perms.iter().enumerate() {
                    for (y, (sy, ey)) in perms.iter().enumerate() {
                        // A[s3, s5] = e3 e5 P_i P_m; i = (s1[0], s3[0], s5[0]), m = (s2[0], s3[2], s5[2])
                        a[x * M + y] = pair(at(s1[0], sx[0], sy[0]), at(s2[0], sx[2], sy[2]), ex * ey);
                        // B[s4, s5] = e4 P_j P_n; j = (s1[1], s4[0], s5[1]), n = (s2[1], s4[2], s5[3])
                        b[x * M + y] = pair(at(s1[1], sx[0], sy[1]), at(s2[1], sx[2], sy[3]), *ex);
                        // C[s4, s6] = P_k P_r; k = (s1[2], s4[1], s6[0]), r = (s2[2], s4[3], s6[2])
                        c[x * M + y] = pair(at(s1[2], sx[1], sy[0]), at(s2[2], sx[3], sy[2]), 1);
                        // D[s3, s6] = e6 P_l P_s; l = (s1[3], s3[1], s6[1]), s = (s2[3], s3[3], s6[3])
                        d[x * M + y] = pair(at(s1[3], sx[1], sy[1]), at(s2[3], sx[3], sy[3]), *ey);
                    }
                }
                // AB[s3, s4] = sum_s5 A[s3, s5] B[s4, s5]
                let mut ab = vec![R::zero(); M * M];
                for x3 in 0..M {
                    for x5 in 0..M {
                        let av = &a[x3 * M + x5];
                        if av.is_zero() {
                            continue;
                        }
                        for x4 in 0..M {
                            let bv = &b[x4 * M + x5];
                            if !bv.is_zero() {
                                ab[x3 * M + x4] = ab[x3 * M + x4].clone() + av.clone() * bv.clone();
                            }
                        }
                    }
                }
                let mut sum = R::zero();
                for x3 in 0..M {
                    for x4 in 0..M {
                        let abv = &ab[x3 * M + x4];
                        if abv.is_zero() {
                            continue;
                        }
                        for x6 in 0..M {
                            let (cv, dv) = (&c[x4 * M + x6], &d[x3 * M + x6]);
                            if !cv.is_zero() && !dv.is_zero() {
                                sum = sum + abv.clone() * cv.clone() * dv.clone();
                            }
                        }
                    }
                }
                acc = acc + sgn(sum, e1 * e2);
            }
            acc
        })
        .collect();
    partials.into_iter().fold(R::zero(), |x, y| x + y)
}

/// The tangle matching `n` (`tau_3` or `tau_4`).
pub fn tangle<F: Field>(p: &Tensor3<F>) -> Result<F> {
    match p.n() {
        3 => tangle3(p),
        4 => tangle4(p),
        n => Err(Error::UnsupportedDimension { op: "tangle", n, supported: "{3, 4}" }),
    }
}

/// `G_i(P; x) = h_i(P; x)^(n-2) tau_n(P)` for `n` in `{3, 4}`.
pub fn tangle_covariant<F: Field>(p: &Tensor3<F>, axis: Axis) -> Result<CovariantValue<F>> {
    let n = p.n();
    let tau = tangle(p)?;
    let hp = h(p, axis)?.poly;
    let poly = hp.pow((n - 2) as u32).scale(&tau);
    Ok(CovariantValue::new(axis, poly, (n * (n - 2) + 2 * n) as u32))
}

/// Cayley's hyperdeterminant of a `2 x 2 x 2` tensor.
pub fn cayley_delta<F: Field>(p: &Tensor3<F>) -> Result<F> {
    if p.n() != 2 {
        return Err(Error::UnsupportedDimension { op: "Cayley hyperdeterminant", n: p.n(), supported: "{2}" });
    }
    let e: Vec<F> = (0..8).map(|t| p[(t >> 2, (t >> 1) & 1, t & 1)].clone()).collect();
    let poly = cayley_delta_poly(8);
    poly.map_coeffs(|c| F::from_rational(c)).eval(&e)
}

/// Cayley's hyperdeterminant as a polynomial in the entries `p_ijk`, which
/// occupy variables `4i + 2j + k`; further variables (up to `nvars`) are unused.
pub fn cayley_delta_poly(nvars: usize) -> MultiPoly<Rational> {
    assert!(nvars >= 8);
    let mono = |idx: &[usize], c: i64| {
        let mut e = vec![0u32; nvars];
        for &i in idx {
            e[i] += 1;
        }
        (e, Rational::from_i64(c))
    };
    // indices: p000=0, p001=1, p010=2, p011=3, p100=4, p101=5, p110=6, p111=7
    let terms = vec![
        mono(&[0, 0, 7, 7], 1),
        mono(&[1, 1, 6, 6], 1),
        mono(&[2, 2, 5, 5], 1),
        mono(&[3, 3, 4, 4], 1),
        mono(&[0, 1, 6, 7], -2),
        mono(&[0, 2, 5, 7], -2),
        mono(&[0, 3, 4, 7], -2),
        mono(&[1, 2, 5, 6], -2),
        mono(&[1, 3, 6, 4], -2),
        mono(&[2, 3, 5, 4], -2),
        mono(&[0, 3, 5, 6], 4),
        mono(&[1, 2, 4, 7], 4),
    ];
    MultiPoly::from_terms(nvars, terms).expect("consistent lengths")
}

/// Pencil `P *_i x` of a fully symbolic tensor. Variables `0..n^3` are the
/// entries `p_ijk` (index `(i n + j) n + k`), variables `n^3..n^3+n` are `x`.
pub fn symbolic_pencil(n: usize, axis: Axis) -> PolyMatrix<Rational> {
    let nv = n * n * n + n;
    PolyMatrix::from_fn(n, n, nv, |a, b| {
        let mut acc = MultiPoly::zero(nv);
        for l in 0..n {
            let (i, j, k) = match axis {
                Axis::One => (l, a, b),
                Axis::Two => (a, l, b),
                Axis::Three => (a, b, l),
            };
            let pvar = MultiPoly::var(nv, (i * n + j) * n + k);
            let xvar = MultiPoly::var(nv, n * n * n + l);
            acc = &acc + &(&pvar * &xvar);
        }
        acc
    })
}

/// `f_i` of a fully symbolic tensor (see [`symbolic_pencil`] for variables).
pub fn symbolic_f(n: usize, axis: Axis) -> Result<MultiPoly<Rational>> {
    let hp = symbolic_pencil(n, axis).det()?;
    let xs: Vec<usize> = (n * n * n..n * n * n + n).collect();
    let det = hessian_vars(&hp, &xs).det()?;
    Ok(if n.is_multiple_of(2) { -&det } else { det })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::tensor::{diag_tensor, rank1, GroupElement};

    fn q(v: i64) -> Rational {
        Rational::from_i64(v)
    }

    fn qm(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_i64_rows(rows)
    }

    /// The worked `n = 3` example with 3-slices `e11`, `e22`, `[[0,1,0],[1,0,0],[0,0,1]]`.
    fn worked_example() -> Tensor3<Rational> {
        Tensor3::from_slices(&[
            qm(&[&[1, 0, 0], &[0, 0, 0], &[0, 0, 0]]),
            qm(&[&[0, 0, 0], &[0, 1, 0], &[0, 0, 0]]),
            qm(&[&[0, 1, 0], &[1, 0, 0], &[0, 0, 1]]),
        ])
        .unwrap()
    }

    /// Direct enumeration of the six permutations per epsilon factor.
    fn tangle3_naive<F: Field>(p: &Tensor3<F>) -> F {
        let perms = permutations_with_sign(3);
        let mut total = F::zero();
        for (s1, e1) in &perms {
            for (s2, e2) in &perms {
                for (s3, e3) in &perms {
                    for (s4, e4) in &perms {
                        for (s5, e5) in &perms {
                            for (s6, e6) in &perms {
                                let i = &p[(s1[0], s5[2], s6[1])];
                                let j = &p[(s1[1], s2[0], s6[2])];
                                let k = &p[(s1[2], s2[1], s3[0])];
                                let l = &p[(s4[0], s2[2], s3[1])];
                                let m = &p[(s4[1], s5[0], s3[2])];
                                let n = &p[(s4[2], s5[1], s6[0])];
                                let v = i.clone() * j.clone() * k.clone() * l.clone() * m.clone() * n.clone();
                                total = total + signed(v, e1 * e2 * e3 * e4 * e5 * e6);
                            }
                        }
                    }
                }
            }
        }
        total
    }

    #[test]
    fn h_examples() {
        for n in 1..=5 {
            let d = Tensor3::<Rational>::unit_diagonal(n);
            let expected = MultiPoly::from_terms(n, [(vec![1; n], q(1))]).unwrap();
            for axis in Axis::ALL {
                assert_eq!(h(&d, axis).unwrap().poly, expected);
            }
        }
        assert_eq!(h(&worked_example(), Axis::Three).unwrap().poly.to_string(), "1*x1*x2*x3 + -1*x3^3");

        let mut slices = vec![Matrix::<Rational>::identity(3)];
        slices.extend((1..3).map(|_| Matrix::zeros(3, 3)));
        let t = Tensor3::from_slices(&slices).unwrap();
        assert_eq!(h(&t, Axis::Three).unwrap().poly.to_string(), "1*x1^3");
        assert!(h(&Tensor3::<Rational>::zeros(3), Axis::One).unwrap().is_zero());
    }

    #[test]
    fn f_examples() {
        for n in 2..=4 {
            let d = Tensor3::<Rational>::unit_diagonal(n);
            let expected = MultiPoly::from_terms(n, [(vec![(n - 2) as u32; n], q((n - 1) as i64))]).unwrap();
            let fv = f(&d, Axis::Two).unwrap();
            assert_eq!(fv.poly, expected);
            assert_eq!(fv.deg_x, Some((n * (n - 2)) as u32));
        }
        assert_eq!(f(&worked_example(), Axis::Three).unwrap().poly.to_string(), "2*x1*x2*x3 + 6*x3^3");
        let f3 = f(&Tensor3::<Rational>::unit_diagonal(3), Axis::Three).unwrap().poly;
        assert_eq!(f3.coefficient(&[1, 1, 1]).unwrap(), q(2));
    }

    #[test]
    fn f_eval_matches_symbolic() {
        let mut rng = random::rng(3);
        for n in 2..=4 {
            let p = random::rational_tensor(&mut rng, n, 3);
            for axis in Axis::ALL {
                let sym = f(&p, axis).unwrap().poly;
                for _ in 0..3 {
                    let x0: Vec<Rational> = random::int_point(&mut rng, n, 4);
                    assert_eq!(f_eval(&p, axis, &x0).unwrap(), sym.eval(&x0).unwrap());
                }
            }
        }
        // a point where the pencil is singular takes the symbolic route
        let t = worked_example();
        assert_eq!(f_eval(&t, Axis::Three, &[q(1), q(1), q(1)]).unwrap(), q(8));
    }

    #[test]
    fn r_examples() {
        let d = Tensor3::<Rational>::unit_diagonal(4);
        assert_eq!(r_eval(&d, Axis::One, &[q(1), q(2), q(-3), q(5)]).unwrap(), q(1));
        let g = qm(&[&[2, 1, 0], &[1, 3, 1], &[0, 1, 1]]);
        let det = g.det().unwrap();
        let moved = Tensor3::unit_diagonal(3).act(&GroupElement::on_axis(Axis::One, g).unwrap()).unwrap();
        assert_eq!(r_eval(&moved, Axis::Two, &[q(1), q(2), q(5)]).unwrap(), det.clone() * det);

        let t = worked_example();
        assert_eq!(r_eval(&t, Axis::Three, &[q(2), q(1), q(1)]).unwrap(), q(5));
        assert_eq!(r_eval(&t, Axis::Three, &[q(3), q(1), q(1)]).unwrap(), q(3));
        assert_eq!(r_eval(&t, Axis::Three, &[q(1), q(1), q(1)]), Err(Error::SingularEvaluation));
    }

    #[test]
    fn tangle3_examples() {
        assert_eq!(tangle3(&Tensor3::<Rational>::unit_diagonal(3)).unwrap(), q(6));
        assert_eq!(tangle3(&Tensor3::<Rational>::zeros(3)).unwrap(), q(0));
        assert!(tangle3(&Tensor3::<Rational>::unit_diagonal(2)).is_err());
    }

    #[test]
    fn tangle3_matches_naive_enumeration() {
        let mut rng = random::rng(11);
        for _ in 0..3 {
            let p = random::rational_tensor(&mut rng, 3, 3);
            assert_eq!(tangle3(&p).unwrap(), tangle3_naive(&p));
        }
    }

    #[test]
    fn tangle4_examples() {
        assert_eq!(tangle4(&Tensor3::<Rational>::unit_diagonal(4)).unwrap(), q(24));
        assert_eq!(tangle4(&Tensor3::<Rational>::zeros(4)).unwrap(), q(0));
        assert!(tangle4(&Tensor3::<Rational>::unit_diagonal(3)).is_err());
    }

    #[test]
    fn tangles_vanish_on_rank_one() {
        let mut rng = random::rng(5);
        for n in [3usize, 4] {
            let u = random::rational_vector(&mut rng, n, 4);
            let v = random::rational_vector(&mut rng, n, 4);
            let w = random::rational_vector(&mut rng, n, 4);
            assert_eq!(tangle(&rank1(&u, &v, &w)).unwrap(), q(0));
        }
    }

    #[test]
    fn tangle_covariant_examples() {
        let d = Tensor3::<Rational>::unit_diagonal(3);
        assert_eq!(tangle_covariant(&d, Axis::Three).unwrap().poly.to_string(), "6*x1*x2*x3");
        let g = tangle_covariant(&worked_example(), Axis::Three).unwrap().poly;
        let fv = f(&worked_example(), Axis::Three).unwrap().poly;
        // G is a multiple of xyz - z^3, f = 2xyz + 6z^3 is not
        let ratio_ok = |c: &Rational| g == fv.scale(c);
        let lead = g.coefficient(&[1, 1, 1]).unwrap() / fv.coefficient(&[1, 1, 1]).unwrap();
        assert!(!ratio_ok(&lead));
        let zero_tau = diag_tensor(&[q(1), q(0), q(0)]);
        assert!(tangle_covariant(&zero_tau, Axis::One).unwrap().is_zero());
    }

    #[test]
    fn cayley_delta_examples() {
        assert_eq!(cayley_delta(&Tensor3::<Rational>::unit_diagonal(2)).unwrap(), q(1));
        let w = Tensor3::from_fn(2, |i, j, k| q(i64::from(i + j + k == 1)));
        assert_eq!(cayley_delta(&w).unwrap(), q(0));
    }
}
