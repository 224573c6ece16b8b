//! Real tensors in the complex orbit of `D`.
//!
//! The decomposition of a real tensor in the orbit has `n - 2k` real rank-1
//! components and `k` pairs of complex-conjugate ones; `(n - 2k, k)` is its
//! signature. The sign of `r_i` is `+` exactly when `k` is even. Signature
//! `(0, n/2)` splits into several path components, told apart by the
//! constant signs of `h_1, h_2, h_3` on real points.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::invariants::{h_eval, r_eval};
use crate::matrix::Matrix;
use crate::membership::{decompose_float, ClassifyOptions};
use crate::random;
use crate::scalar::{Complex64, Field, GaussianRational, Rational, RealField};
use crate::tensor::{from_factors, Axis, GroupElement, Tensor3};

/// Relative tolerance for matching conjugate rows and for realness.
pub const PAIRING_TOL: f64 = 1e-7;
/// Real sample points used for sign tests.
pub const SIGN_SAMPLES: usize = 16;
/// Minimum number of significant samples for a sign verdict.
pub const MIN_SIGNIFICANT: usize = 8;
/// Largest relative reconstruction error accepted from the decomposition.
pub const MAX_DECOMPOSITION_RESIDUAL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Path-component descriptor of a real in-orbit tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ComponentDescriptor {
    /// Signature `(n, 0)`.
    RealRankN,
    /// Signature `(n - 2k, k)` with `0 < 2k < n`: a single component.
    Mixed(usize),
    /// Signature `(0, n/2)`: signs of `h_1, h_2, h_3` on real points.
    SignTriple([Sign; 3]),
}

impl fmt::Display for ComponentDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComponentDescriptor::RealRankN => f.write_str("real-rank-n"),
            ComponentDescriptor::Mixed(k) => write!(f, "mixed({k})"),
            ComponentDescriptor::SignTriple([a, b, c]) => write!(f, "({a},{b},{c})"),
        }
    }
}

impl Serialize for ComponentDescriptor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignatureReport {
    pub n: usize,
    /// `(n - 2k, k)`.
    pub signature: (usize, usize),
    pub r_sign: Sign,
    /// `r_sign` is `+` exactly when `k` is even.
    pub parity_consistent: bool,
    pub component_descriptor: ComponentDescriptor,
    /// Matched conjugate components, 1-based indices into the sorted decomposition.
    pub pairs: Vec<(usize, usize)>,
    pub decomposition_residual: f64,
}

/// For each row: `None` when real, `Some(j)` when conjugate to row `j`.
fn pair_rows(g: &Matrix<Complex64>) -> Result<Vec<Option<usize>>> {
    let n = g.rows();
    let rows: Vec<Vec<Complex64>> = g.to_rows();
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut out = Vec::with_capacity(n);
    for (a, u) in rows.iter().enumerate() {
        let scale = norm(u).max(f64::MIN_POSITIVE);
        let imag = u.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
        let is_real = imag < PAIRING_TOL * scale;
        let partners: Vec<usize> = (0..n)
            .filter(|&b| b != a)
            .filter(|&b| {
                let d: f64 = u.iter().zip(&rows[b]).map(|(x, y)| (x - y.conj()).norm_sqr()).sum::<f64>().sqrt();
                d < PAIRING_TOL * scale
            })
            .collect();
        match (is_real, partners.as_slice()) {
            (true, []) => out.push(None),
            (false, [b]) => out.push(Some(*b)),
            (true, _) => {
                return Err(Error::Indeterminate(format!("row {} is real and also matches a conjugate partner", a + 1)))
            }
            (false, []) => return Err(Error::Indeterminate(format!("complex row {} has no conjugate partner", a + 1))),
            (false, _) => return Err(Error::Indeterminate(format!("row {} matches several conjugate partners", a + 1))),
        }
    }
    for (a, p) in out.iter().enumerate() {
        if let Some(b) = p {
            if out[*b] != Some(a) {
                return Err(Error::Indeterminate(format!("conjugate pairing of rows {} and {} is not mutual", a + 1, b + 1)));
            }
        }
    }
    Ok(out)
}

/// Signature, `r` sign and component descriptor of a real tensor in the orbit.
///
/// The pairing is read from the rows of `g3` and must agree with the
/// pairings of `g1` and `g2`; any mismatch is reported as indeterminate.
/// A decomposition residual above [`MAX_DECOMPOSITION_RESIDUAL`] is taken as
/// evidence that the tensor is not in the orbit.
pub fn signature<F: RealField>(p: &Tensor3<F>, opts: &ClassifyOptions) -> Result<SignatureReport> {
    let n = p.n();
    let dec = decompose_float(&p.to_complex64(), opts)?;
    if dec.residual > MAX_DECOMPOSITION_RESIDUAL {
        return Err(Error::NotInOrbit(format!("decomposition residual {:e}", dec.residual)));
    }
    let pairing = pair_rows(&dec.g3)?;
    for (which, g) in [(1, &dec.g1), (2, &dec.g2)] {
        if pair_rows(g)? != pairing {
            return Err(Error::Indeterminate(format!("row pairing of g{which} disagrees with g3")));
        }
    }
    let pairs: Vec<(usize, usize)> =
        pairing.iter().enumerate().filter_map(|(a, p)| p.filter(|&b| b > a).map(|b| (a + 1, b + 1))).collect();
    let k = pairs.len();
    let r_sign = r_sign(p, Axis::Three, opts)?;
    let descriptor = component_descriptor(p, k, opts)?;
    Ok(SignatureReport {
        n,
        signature: (n - 2 * k, k),
        r_sign,
        parity_consistent: (r_sign == Sign::Plus) == k.is_multiple_of(2),
        component_descriptor: descriptor,
        pairs,
        decomposition_residual: dec.residual,
    })
}

/// Seeded real sample point; small integers for exact fields.
fn real_point<F: RealField>(rng: &mut random::SeededRng, n: usize) -> Vec<F> {
    if F::EXACT {
        random::int_point(rng, n, 20)
    } else {
        random::real_vector(rng, n).into_iter().map(F::from_f64_lossy).collect()
    }
}

fn norm_f64<F: RealField>(x: &[F]) -> f64 {
    x.iter().map(|v| v.to_f64() * v.to_f64()).sum::<f64>().sqrt()
}

/// Sign of `r_i(P; x)` on real points where `h_i(P; x) != 0`. All samples
/// must agree; exact fields compare signs exactly.
pub fn r_sign<F: RealField>(p: &Tensor3<F>, axis: Axis, opts: &ClassifyOptions) -> Result<Sign> {
    let n = p.n();
    let mut rng = random::rng(opts.seed ^ 0x5EED_0001);
    let mut seen: Option<Sign> = None;
    let mut count = 0;
    for _ in 0..4 * SIGN_SAMPLES {
        let x: Vec<F> = real_point(&mut rng, n);
        let r = match r_eval(p, axis, &x) {
            Ok(r) => r,
            Err(Error::SingularEvaluation) => continue,
            Err(e) => return Err(e),
        };
        if !F::EXACT {
            // `r` is invariant under scaling of x; compare against the
            // round-off of an order-n determinant
            let scale = (p.frobenius_norm() * norm_f64(&x)).powi(n as i32);
            let hv = h_eval(p, axis, &x)?.to_f64().abs();
            if hv < 1e-6 * scale || r.to_f64().abs() < 1e-9 {
                continue;
            }
        }
        let s = match r.sign() {
            std::cmp::Ordering::Greater => Sign::Plus,
            std::cmp::Ordering::Less => Sign::Minus,
            std::cmp::Ordering::Equal => continue,
        };
        match seen {
            None => seen = Some(s),
            Some(t) if t != s => return Err(Error::Indeterminate("sign of r changes between sample points".into())),
            _ => {}
        }
        count += 1;
        if count >= MIN_SIGNIFICANT {
            break;
        }
    }
    seen.ok_or_else(|| Error::Indeterminate("r vanishes or is singular at every sample point".into()))
}

/// Constant sign of `h_i(P; x)` on real points.
pub fn h_sign<F: RealField>(p: &Tensor3<F>, axis: Axis, opts: &ClassifyOptions) -> Result<Sign> {
    let n = p.n();
    let mut rng = random::rng(opts.seed ^ (0x5EED_0010 + axis.number() as u64));
    let pn = p.frobenius_norm().powi(n as i32);
    let mut seen: Option<Sign> = None;
    let mut significant = 0;
    for _ in 0..SIGN_SAMPLES {
        let x: Vec<F> = real_point(&mut rng, n);
        let v = h_eval(p, axis, &x)?;
        let s = match v.sign() {
            std::cmp::Ordering::Greater => Sign::Plus,
            std::cmp::Ordering::Less => Sign::Minus,
            std::cmp::Ordering::Equal => continue,
        };
        let threshold = 1e-9 * pn * norm_f64(&x).powi(n as i32);
        if v.to_f64().abs() > threshold || (F::EXACT && !v.is_zero()) {
            significant += 1;
        } else {
            continue;
        }
        match seen {
            None => seen = Some(s),
            Some(t) if t != s => {
                return Err(Error::Indeterminate(format!("h_{} changes sign on real points", axis.number())))
            }
            _ => {}
        }
    }
    if significant < MIN_SIGNIFICANT {
        return Err(Error::Indeterminate(format!("h_{} is negligible at most sample points", axis.number())));
    }
    Ok(seen.expect("significant samples exist"))
}

/// Descriptor for a real in-orbit tensor with `k` conjugate pairs.
pub fn component_descriptor<F: RealField>(p: &Tensor3<F>, k: usize, opts: &ClassifyOptions) -> Result<ComponentDescriptor> {
    let n = p.n();
    if 2 * k > n {
        return Err(Error::InvalidParams(format!("k = {k} exceeds n / 2 for n = {n}")));
    }
    if k == 0 {
        return Ok(ComponentDescriptor::RealRankN);
    }
    if 2 * k < n {
        return Ok(ComponentDescriptor::Mixed(k));
    }
    Ok(ComponentDescriptor::SignTriple([
        h_sign(p, Axis::One, opts)?,
        h_sign(p, Axis::Two, opts)?,
        h_sign(p, Axis::Three, opts)?,
    ]))
}

/// `J_k`: block diagonal with `k` blocks `[[1, i], [1, -i]]`, then the identity.
pub fn j_matrix(n: usize, k: usize) -> Result<Matrix<GaussianRational>> {
    if 2 * k > n {
        return Err(Error::InvalidParams(format!("need 2k <= n, got n = {n}, k = {k}")));
    }
    let one = Rational::from_i64(1);
    let zero = Rational::from_i64(0);
    Ok(Matrix::from_fn(n, n, |r, c| {
        if r < 2 * k && c < 2 * k {
            if r / 2 != c / 2 {
                return GaussianRational::new(zero.clone(), zero.clone());
            }
            match (r % 2, c % 2) {
                (_, 0) => GaussianRational::new(one.clone(), zero.clone()),
                (0, 1) => GaussianRational::new(zero.clone(), one.clone()),
                _ => GaussianRational::new(zero.clone(), -one.clone()),
            }
        } else if r == c {
            GaussianRational::new(one.clone(), zero.clone())
        } else {
            GaussianRational::new(zero.clone(), zero.clone())
        }
    }))
}

/// The canonical real tensor `D(J_k, J_k, J_k)` of signature `(n - 2k, k)`,
/// with the group element producing it.
pub fn gen_jk(n: usize, k: usize) -> Result<(GroupElement<GaussianRational>, Tensor3<Rational>)> {
    let j = j_matrix(n, k)?;
    let t = from_factors(&j, &j, &j);
    if !t.is_real() {
        return Err(Error::Inconsistent("conjugate-pair sum is not real".into()));
    }
    let real = Tensor3::from_fn(n, |a, b, c| t[(a, b, c)].re.clone());
    Ok((GroupElement { g1: j.clone(), g2: j.clone(), g3: j }, real))
}

/// `diag(1, .., 1, -1)`.
pub fn reflection(n: usize) -> Matrix<Rational> {
    Matrix::diag(&(0..n).map(|l| Rational::from_i64(if l + 1 == n { -1 } else { 1 })).collect::<Vec<_>>())
}

/// The four tensors `D(J,J,J)` and its images under `K = diag(1, .., -1)` on
/// each single axis, for `n` even and `k = n / 2`.
pub fn sign_triple_representatives(n: usize) -> Result<Vec<Tensor3<Rational>>> {
    if !n.is_multiple_of(2) || n == 0 {
        return Err(Error::InvalidParams(format!("n must be even and positive, got {n}")));
    }
    let (_, t) = gen_jk(n, n / 2)?;
    let mut out = vec![t.clone()];
    for axis in Axis::ALL {
        out.push(t.act(&GroupElement::on_axis(axis, reflection(n))?)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::{cayley_delta, h};
    use crate::poly::MultiPoly;
    use crate::random::{invertible_rational, rational_group_element};
    use num_traits::Zero;
    use std::collections::HashSet;

    fn opts() -> ClassifyOptions {
        ClassifyOptions::default()
    }

    #[test]
    fn diagonal_signature() {
        for n in 2..=4 {
            let rep = signature(&Tensor3::<Rational>::unit_diagonal(n), &opts()).unwrap();
            assert_eq!(rep.signature, (n, 0));
            assert_eq!(rep.r_sign, Sign::Plus);
            assert_eq!(rep.component_descriptor, ComponentDescriptor::RealRankN);
        }
    }

    #[test]
    fn j1_is_real_rank_three() {
        let (_, t) = gen_jk(2, 1).unwrap();
        // 2 Re((1, i)^(x3)): i^(j+k+l) for 0-based index sums
        let expected = Tensor3::from_fn(2, |a, b, c| match (a + b + c) % 4 {
            0 => Rational::from_i64(2),
            2 => Rational::from_i64(-2),
            _ => Rational::zero(),
        });
        assert_eq!(t, expected);
        assert!(cayley_delta(&t).unwrap() < Rational::zero());
        let rep = signature(&t, &opts()).unwrap();
        assert_eq!(rep.signature, (0, 1));
        assert_eq!(rep.r_sign, Sign::Minus);
        assert_eq!(rep.pairs, vec![(1, 2)]);
    }

    #[test]
    fn jk_examples() {
        let (_, d) = gen_jk(4, 0).unwrap();
        assert_eq!(d, Tensor3::unit_diagonal(4));
        assert!(gen_jk(3, 2).is_err());
        let (_, t) = gen_jk(5, 2).unwrap();
        let rep = signature(&t, &opts()).unwrap();
        assert_eq!(rep.signature, (1, 2));
        assert_eq!(rep.r_sign, Sign::Plus);
        assert_eq!(rep.component_descriptor, ComponentDescriptor::Mixed(2));
    }

    #[test]
    fn h3_of_half_twisted_diagonal() {
        let j = j_matrix(2, 1).unwrap();
        let id = Matrix::<GaussianRational>::identity(2);
        let t = from_factors(&id, &id, &j);
        let hv = h(&t, Axis::Three).unwrap().poly;
        let one = GaussianRational::new(Rational::from_i64(1), Rational::zero());
        let expected = MultiPoly::from_terms(2, [(vec![2, 0], one.clone()), (vec![0, 2], one)]).unwrap();
        assert_eq!(hv, expected);
    }

    #[test]
    fn four_distinct_sign_triples() {
        for n in [2, 4] {
            let triples: HashSet<_> = sign_triple_representatives(n)
                .unwrap()
                .iter()
                .map(|t| component_descriptor(t, n / 2, &opts()).unwrap())
                .collect();
            assert_eq!(triples.len(), 4, "n = {n}: {triples:?}");
        }
    }

    #[test]
    fn signature_invariant_under_real_action() {
        let mut rng = random::rng(21);
        for (n, k) in [(3, 1), (4, 1), (4, 2)] {
            let (_, t) = gen_jk(n, k).unwrap();
            let g = rational_group_element(&mut rng, n, 3);
            let moved = t.act(&g).unwrap();
            let rep = signature(&moved, &opts()).unwrap();
            assert_eq!(rep.signature, (n - 2 * k, k));
            assert!(rep.parity_consistent);
        }
    }

    #[test]
    fn descriptor_invariant_under_positive_action() {
        let mut rng = random::rng(22);
        let (_, t) = gen_jk(4, 2).unwrap();
        let base = component_descriptor(&t, 2, &opts()).unwrap();
        for _ in 0..3 {
            let mut gs: Vec<Matrix<Rational>> = (0..3).map(|_| invertible_rational(&mut rng, 4, 3)).collect();
            for g in &mut gs {
                if g.det().unwrap() < Rational::zero() {
                    *g = &reflection(4) * &*g;
                }
            }
            let g = GroupElement::new(gs[0].clone(), gs[1].clone(), gs[2].clone()).unwrap();
            assert_eq!(component_descriptor(&t.act(&g).unwrap(), 2, &opts()).unwrap(), base);
        }
    }

    #[test]
    fn float_input_signature() {
        let (_, t) = gen_jk(4, 1).unwrap();
        let tf = t.map(|x| x.to_rational().map(|q| crate::scalar::rational_to_f64(&q)).unwrap_or(0.0));
        let rep = signature(&tf, &opts()).unwrap();
        assert_eq!(rep.signature, (2, 1));
        assert_eq!(rep.r_sign, Sign::Minus);
    }
}
