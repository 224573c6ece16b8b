//! Explicit tensors illustrating rank jumping: `K_n`, its perturbation
//! `K_{n,eps}`, the symmetric variant `K'_n`, the Werner tensor `W` and the
//! pair `L`, `L_eps`.
//!
//! `K_n` has border rank `n` and rank `2n - 1`. The rank bound `<= 2n - 1` is
//! certified numerically by [`kn_prime_decomposition`]; the key step of the
//! lower bound, that `K_n *_3 w` drops rank only when `w_1 = 0`, is certified
//! exactly by [`kn_lower_bound_certificate`]. The dual-basis counting argument
//! around that step is not machine-checked.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariants::slice_pencil;
use crate::matrix::Matrix;
use crate::poly::MultiPoly;
use crate::scalar::{Complex64, Field, Rational};
use crate::tensor::{rank1, Axis, Tensor3};

/// `weight * (u (x) v (x) w)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rank1Term<F> {
    pub u: Vec<F>,
    pub v: Vec<F>,
    pub w: Vec<F>,
    pub weight: F,
}

impl<F: Field> Rank1Term<F> {
    pub fn to_tensor(&self) -> Tensor3<F> {
        rank1(&self.u, &self.v, &self.w).scale(&self.weight)
    }
}

/// Sum of rank-1 terms; `None` for an empty list.
pub fn sum_terms<F: Field>(terms: &[Rank1Term<F>]) -> Option<Tensor3<F>> {
    let mut it = terms.iter();
    let first = it.next()?.to_tensor();
    Some(it.fold(first, |acc, t| acc.add(&t.to_tensor()).expect("equal sizes")))
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::UnsupportedDimension { op: "rank-jump family", n, supported: "n >= 2" });
    }
    Ok(())
}

fn q(v: i64) -> Rational {
    Rational::from_i64(v)
}

/// Superdiagonal shift `N`.
fn shift(n: usize) -> Matrix<Rational> {
    Matrix::from_fn(n, n, |r, c| q(i64::from(c == r + 1)))
}

/// Tensor with 3-slices `S, S^2, .., S^(n-1)` after `S_1 = I`.
fn power_slices(s: &Matrix<Rational>) -> Tensor3<Rational> {
    let n = s.rows();
    let mut slices = vec![Matrix::identity(n)];
    for j in 1..n {
        let next = &slices[j - 1] * s;
        slices.push(next);
    }
    Tensor3::from_slices(&slices).expect("square slices")
}

/// `K_n`: 3-slices `N^0, N^1, .., N^(n-1)` with `N` the superdiagonal shift.
pub fn gen_kn(n: usize) -> Result<Tensor3<Rational>> {
    check_n(n)?;
    Ok(power_slices(&shift(n)))
}

/// `K_{n,eps}`: slice 2 is `N + diag(0, eps, .., (n-1) eps)`, slice `j` its
/// `(j-1)`-th power.
pub fn gen_kn_eps(n: usize, eps: &Rational) -> Result<Tensor3<Rational>> {
    check_n(n)?;
    let d: Vec<Rational> = (0..n).map(|l| eps * q(l as i64)).collect();
    Ok(power_slices(&(&shift(n) + &Matrix::diag(&d))))
}

/// `K'_n`: `K_n` with the columns of every slice reversed; the entry
/// `(i, j, k)` (1-based) is 1 exactly when `i + j + k = n + 2`.
pub fn gen_kn_prime(n: usize) -> Result<Tensor3<Rational>> {
    check_n(n)?;
    Ok(Tensor3::from_fn(n, |i, j, k| q(i64::from(i + j + k == n - 1))))
}

/// `K'_n = sum_{l=1}^{2n-1} zeta^(l(n-3)) / (2n-1) v_l (x) v_l (x) v_l`
/// with `zeta = exp(2 pi i / (2n-1))` and `v_l = (zeta^l, .., zeta^(nl))`.
pub fn kn_prime_decomposition(n: usize) -> Result<Vec<Rank1Term<Complex64>>> {
    check_n(n)?;
    let m = 2 * n - 1;
    let zeta_pow = |e: i64| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (e.rem_euclid(m as i64)) as f64 / m as f64);
    Ok((1..=m as i64)
        .map(|l| {
            let v: Vec<Complex64> = (1..=n as i64).map(|t| zeta_pow(t * l)).collect();
            Rank1Term {
                u: v.clone(),
                v: v.clone(),
                w: v,
                weight: zeta_pow(l * (n as i64 - 3)) / m as f64,
            }
        })
        .collect())
}

/// `det(K_n *_3 w)` as a polynomial in `w_1..w_n`. The pencil is upper
/// triangular with constant diagonal `w_1`, so this equals `w_1^n`.
pub fn kn_lower_bound_certificate(n: usize) -> Result<MultiPoly<Rational>> {
    slice_pencil(&gen_kn(n)?, Axis::Three).det()
}

/// The Werner tensor in the column-permuted form with 3-slices `I` and
/// `[[0, 1], [0, 0]]`; this is `K_2`.
pub fn gen_werner() -> Tensor3<Rational> {
    gen_kn(2).expect("n = 2")
}

/// The Werner tensor in its usual form `e2 e1 e1 + e1 e2 e1 + e1 e1 e2`.
pub fn gen_werner_standard() -> Tensor3<Rational> {
    Tensor3::from_fn(2, |i, j, k| q(i64::from(i + j + k == 1)))
}

fn l_family(eps: &Rational) -> Tensor3<Rational> {
    let mut s2 = Matrix::zeros(3, 3);
    s2[(0, 1)] = q(1);
    s2[(1, 1)] = eps.clone();
    let mut s3 = Matrix::zeros(3, 3);
    s3[(2, 2)] = q(1);
    Tensor3::from_slices(&[Matrix::identity(3), s2, s3]).expect("3x3 slices")
}

/// `L`: 3-slices `I`, `E_12`, `E_33`.
pub fn gen_l() -> Tensor3<Rational> {
    l_family(&q(0))
}

/// `L_eps`: `L` with `eps` added at `(2, 2)` of slice 2.
pub fn gen_l_eps(eps: &Rational) -> Tensor3<Rational> {
    l_family(eps)
}

/// Four rank-1 terms summing to `L`, found by subtracting slice 3 from
/// slice 1: `e1 e1 e1 + e2 e2 e1 + e1 e2 e2 + e3 e3 (e1 + e3)`.
pub fn l_rank4_witness() -> Vec<Rank1Term<Rational>> {
    let e = |i: usize| (0..3).map(|t| q(i64::from(t == i))).collect::<Vec<_>>();
    let term = |u: Vec<Rational>, v: Vec<Rational>, w: Vec<Rational>| Rank1Term { u, v, w, weight: q(1) };
    let e1_plus_e3 = vec![q(1), q(0), q(1)];
    vec![
        term(e(0), e(0), e(0)),
        term(e(1), e(1), e(0)),
        term(e(0), e(1), e(1)),
        term(e(2), e(2), e1_plus_e3),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::{cayley_delta, f};
    use crate::membership::{classify, ClassifyOptions, Verdict};
    use crate::scalar::parse_rational;

    fn r(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn k3_matches_display() {
        let k3 = gen_kn(3).unwrap();
        assert_eq!(k3.slice(Axis::Three, 0), Matrix::identity(3));
        assert_eq!(k3.slice(Axis::Three, 1), Matrix::from_i64_rows(&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]]));
        assert_eq!(k3.slice(Axis::Three, 2), Matrix::from_i64_rows(&[&[0, 0, 1], &[0, 0, 0], &[0, 0, 0]]));
        assert_eq!(gen_kn_eps(3, &q(0)).unwrap(), k3);
    }

    #[test]
    fn k3_eps_matches_display() {
        let eps = r("2/7");
        let t = gen_kn_eps(3, &eps).unwrap();
        let e2 = &eps * &eps;
        let expected = Matrix::from_rows(vec![
            vec![q(0), eps.clone(), q(1)],
            vec![q(0), e2.clone(), &eps * q(3)],
            vec![q(0), q(0), &e2 * q(4)],
        ])
        .unwrap();
        assert_eq!(t.slice(Axis::Three, 2), expected);
        assert_eq!(
            t.slice(Axis::Three, 1),
            Matrix::from_rows(vec![vec![q(0), q(1), q(0)], vec![q(0), eps.clone(), q(1)], vec![q(0), q(0), &eps * q(2)]]).unwrap()
        );
    }

    #[test]
    fn kn_prime_matches_display_and_is_symmetric() {
        let k = gen_kn_prime(3).unwrap();
        assert_eq!(k.slice(Axis::Three, 0), Matrix::from_i64_rows(&[&[0, 0, 1], &[0, 1, 0], &[1, 0, 0]]));
        assert_eq!(k.slice(Axis::Three, 1), Matrix::from_i64_rows(&[&[0, 1, 0], &[1, 0, 0], &[0, 0, 0]]));
        assert_eq!(k.slice(Axis::Three, 2), Matrix::from_i64_rows(&[&[1, 0, 0], &[0, 0, 0], &[0, 0, 0]]));
        for n in 2..=6 {
            let k = gen_kn_prime(n).unwrap();
            assert_eq!(k[(0, 0, n - 1)], q(1));
            for order in [[1, 3, 2], [2, 1, 3], [3, 2, 1], [2, 3, 1], [3, 1, 2]] {
                assert_eq!(k.permute_axes(order), k);
            }
            // column reversal of K_n
            let kn = gen_kn(n).unwrap();
            let rev = Tensor3::from_fn(n, |i, j, l| kn[(i, n - 1 - j, l)].clone());
            assert_eq!(rev, k);
        }
    }

    #[test]
    fn kn_prime_decomposition_reconstructs() {
        for n in 2..=6 {
            let terms = kn_prime_decomposition(n).unwrap();
            assert_eq!(terms.len(), 2 * n - 1);
            let sum = sum_terms(&terms).unwrap();
            let diff = sum.sub(&gen_kn_prime(n).unwrap().to_complex64()).unwrap();
            assert!(diff.max_abs() < 1e-12, "n = {n}: {}", diff.max_abs());
        }
    }

    #[test]
    fn certificate_is_power_of_w1() {
        for n in [2, 3, 5] {
            let c = kn_lower_bound_certificate(n).unwrap();
            let mut exps = vec![0; n];
            exps[0] = n as u32;
            assert_eq!(c, MultiPoly::from_terms(n, [(exps, q(1))]).unwrap());
        }
    }

    #[test]
    fn werner_and_l() {
        let w = gen_werner();
        assert_eq!(cayley_delta(&w).unwrap(), q(0));
        assert_eq!(cayley_delta(&gen_werner_standard()).unwrap(), q(0));
        let opts = ClassifyOptions::default();
        assert_eq!(classify(&w, &opts).verdict, Verdict::Boundary);
        assert_eq!(classify(&gen_l(), &opts).verdict, Verdict::Boundary);
        assert_eq!(classify(&gen_l_eps(&r("1/2")), &opts).verdict, Verdict::InOrbit);
        assert!(f(&gen_l(), Axis::Three).unwrap().is_zero());

        let l = gen_l();
        assert_eq!(sum_terms(&l_rank4_witness()).unwrap(), l);
        assert_eq!(l.multilinear_rank(0.0), (3, 3, 3));
    }

    #[test]
    fn eps_limit_has_constant_term_kn() {
        // entries are polynomials in eps with constant term K_n: check
        // (K_{n,eps} - K_n) / eps stays bounded as eps shrinks
        for n in 3..=5 {
            let kn = gen_kn(n).unwrap();
            for den in [10i64, 1000, 100_000] {
                let eps = Rational::new(1.into(), den.into());
                let diff = gen_kn_eps(n, &eps).unwrap().sub(&kn).unwrap().scale(&(q(1) / eps));
                assert!(diff.max_abs() < (n * n * n) as f64 * 4.0);
            }
        }
    }
}
