//! Seeded sampling helpers. Every randomized routine in the crate draws from
//! a `ChaCha8Rng` built here so results depend only on the seed.

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::Matrix;
use crate::scalar::{Complex64, Field, Rational};
use crate::tensor::{GroupElement, Tensor3};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integer in `[-bound, bound]`.
pub fn small_int(rng: &mut SeededRng, bound: i64) -> i64 {
    rng.gen_range(-bound..=bound)
}

/// Rational `p/q` with `|p| <= bound`, `1 <= q <= den`.
pub fn small_rational(rng: &mut SeededRng, bound: i64, den: i64) -> Rational {
    let p = small_int(rng, bound);
    let q = rng.gen_range(1..=den.max(1));
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rational_vector(rng: &mut SeededRng, n: usize, bound: i64) -> Vec<Rational> {
    (0..n).map(|_| Rational::from_i64(small_int(rng, bound))).collect()
}

/// Integer matrix with entries in `[-bound, bound]`, redrawn until invertible.
pub fn invertible_rational(rng: &mut SeededRng, n: usize, bound: i64) -> Matrix<Rational> {
    loop {
        let m = Matrix::from_fn(n, n, |_, _| Rational::from_i64(small_int(rng, bound)));
        if !m.det().expect("square").is_zero() {
            return m;
        }
    }
}

pub fn rational_group_element(rng: &mut SeededRng, n: usize, bound: i64) -> GroupElement<Rational> {
    let g1 = invertible_rational(rng, n, bound);
    let g2 = invertible_rational(rng, n, bound);
    let g3 = invertible_rational(rng, n, bound);
    GroupElement::new(g1, g2, g3).expect("sampled invertible")
}

pub fn rational_tensor(rng: &mut SeededRng, n: usize, bound: i64) -> Tensor3<Rational> {
    Tensor3::from_fn(n, |_, _, _| Rational::from_i64(small_int(rng, bound)))
}

/// Standard normal sample (Box-Muller).
pub fn normal(rng: &mut SeededRng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Real Gaussian matrix, redrawn until reasonably conditioned.
pub fn real_invertible(rng: &mut SeededRng, n: usize) -> Matrix<f64> {
    loop {
        let m = Matrix::from_fn(n, n, |_, _| normal(rng));
        if m.to_complex64().inverse_condition() > 1e-3 {
            return m;
        }
    }
}

/// Complex Gaussian matrix, redrawn until reasonably conditioned.
pub fn complex_invertible(rng: &mut SeededRng, n: usize) -> Matrix<Complex64> {
    loop {
        let m = Matrix::from_fn(n, n, |_, _| Complex64::new(normal(rng), normal(rng)));
        if m.inverse_condition() > 1e-3 {
            return m;
        }
    }
}

pub fn real_vector(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

/// Random point of any field with small integer real coordinates.
pub fn int_point<F: Field>(rng: &mut SeededRng, n: usize, bound: i64) -> Vec<F> {
    (0..n).map(|_| F::from_i64(small_int(rng, bound))).collect()
}

/// Point with generic real-and-imaginary parts for float fields, small
/// integers for exact fields.
pub fn generic_point<F: Field>(rng: &mut SeededRng, n: usize) -> Vec<F> {
    if F::EXACT {
        int_point(rng, n, 50)
    } else {
        (0..n).map(|_| F::from_rational(&Rational::from_float(normal(rng)).unwrap_or_default())).collect()
    }
}
