//! Scalar fields used for tensor entries and polynomial coefficients.
//!
//! Four carriers are supported: exact rationals, Gaussian rationals
//! (`a + bi` with rational `a`, `b`), `f64` and `Complex64`. The exact
//! carriers never round; the float carriers are used for eigen-based
//! decompositions and empirical data.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::Neg;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{Num, Signed, ToPrimitive, Zero};
use serde_json::Value;

use crate::error::{Error, Result};

pub use num_complex::Complex64;

/// Arbitrary-precision rational, always in lowest terms with positive denominator.
pub type Rational = num_rational::BigRational;

/// Complex number with rational real and imaginary parts.
pub type GaussianRational = Complex<Rational>;

/// A commutative field usable as tensor entry and polynomial coefficient.
pub trait Field:
    Num + Clone + Debug + PartialEq + Neg<Output = Self> + Send + Sync + 'static
{
    /// True when arithmetic never rounds.
    const EXACT: bool;
    /// Tag used in the JSON tensor format.
    const FIELD_TAG: &'static str;

    fn from_i64(v: i64) -> Self;
    fn from_rational(q: &Rational) -> Self;
    fn to_complex64(&self) -> Complex64;
    fn conj(&self) -> Self;

    fn abs_f64(&self) -> f64 {
        self.to_complex64().norm()
    }

    /// True when the value has no imaginary component (exactly, for exact fields).
    fn is_real(&self) -> bool;

    /// The value as an exact rational, when it is one.
    fn to_rational(&self) -> Option<Rational> {
        None
    }

    /// Builds `re + i im`; `None` when the field cannot hold an imaginary part.
    fn from_parts(re: &Rational, im: &Rational) -> Option<Self>;

    /// Coefficient text used by the canonical polynomial printer.
    fn coeff_string(&self) -> String;

    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;

    fn is_finite(&self) -> bool {
        let c = self.to_complex64();
        c.re.is_finite() && c.im.is_finite()
    }
}

/// Real ordered fields; required where inequalities are tested.
pub trait RealField: Field + PartialOrd {
    fn to_f64(&self) -> f64;
    fn from_f64_lossy(v: f64) -> Self;

    fn sign(&self) -> Ordering {
        self.partial_cmp(&Self::zero()).unwrap_or(Ordering::Equal)
    }
}

impl Field for Rational {
    const EXACT: bool = true;
    const FIELD_TAG: &'static str = "rational";

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }
    fn to_complex64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(self), 0.0)
    }
    fn conj(&self) -> Self {
        self.clone()
    }
    fn is_real(&self) -> bool {
        true
    }
    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
    fn from_parts(re: &Rational, im: &Rational) -> Option<Self> {
        im.is_zero().then(|| re.clone())
    }
    fn coeff_string(&self) -> String {
        self.to_string()
    }
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Rational::from_i64(i))
                } else {
                    parse_rational(&n.to_string())
                }
            }
            other => Err(Error::Parse(format!("expected rational string, found {other}"))),
        }
    }
}

impl RealField for Rational {
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn from_f64_lossy(v: f64) -> Self {
        Rational::from_float(v).unwrap_or_else(Rational::zero)
    }
}

impl Field for GaussianRational {
    const EXACT: bool = true;
    const FIELD_TAG: &'static str = "gaussian";

    fn from_i64(v: i64) -> Self {
        Complex::new(Rational::from_i64(v), Rational::zero())
    }
    fn from_rational(q: &Rational) -> Self {
        Complex::new(q.clone(), Rational::zero())
    }
    fn to_complex64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn is_real(&self) -> bool {
        self.im.is_zero()
    }
    fn to_rational(&self) -> Option<Rational> {
        self.im.is_zero().then(|| self.re.clone())
    }
    fn from_parts(re: &Rational, im: &Rational) -> Option<Self> {
        Some(Complex::new(re.clone(), im.clone()))
    }
    fn coeff_string(&self) -> String {
        if self.im.is_zero() {
            self.re.to_string()
        } else {
            format!("({}{}{}i)", self.re, if self.im.is_negative() { "" } else { "+" }, self.im)
        }
    }
    fn to_json(&self) -> Value {
        Value::Array(vec![self.re.to_json(), self.im.to_json()])
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Array(parts) if parts.len() == 2 => Ok(Complex::new(
                Rational::from_json(&parts[0])?,
                Rational::from_json(&parts[1])?,
            )),
            other => Ok(Complex::new(Rational::from_json(other)?, Rational::zero())),
        }
    }
}

impl Field for f64 {
    const EXACT: bool = false;
    const FIELD_TAG: &'static str = "real";

    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_rational(q: &Rational) -> Self {
        rational_to_f64(q)
    }
    fn to_complex64(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }
    fn conj(&self) -> Self {
        *self
    }
    fn abs_f64(&self) -> f64 {
        self.abs()
    }
    fn is_real(&self) -> bool {
        true
    }
    fn from_parts(re: &Rational, im: &Rational) -> Option<Self> {
        im.is_zero().then(|| rational_to_f64(re))
    }
    fn coeff_string(&self) -> String {
        format!("{self:?}")
    }
    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self).map(Value::Number).unwrap_or(Value::Null)
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("bad number {n}"))),
            Value::String(s) => Ok(rational_to_f64(&parse_rational(s)?)),
            other => Err(Error::Parse(format!("expected number, found {other}"))),
        }
    }
}

impl RealField for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_f64_lossy(v: f64) -> Self {
        v
    }
}

impl Field for Complex64 {
    const EXACT: bool = false;
    const FIELD_TAG: &'static str = "complex";

    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }
    fn from_rational(q: &Rational) -> Self {
        Complex64::new(rational_to_f64(q), 0.0)
    }
    fn to_complex64(&self) -> Complex64 {
        *self
    }
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn is_real(&self) -> bool {
        self.im == 0.0
    }
    fn from_parts(re: &Rational, im: &Rational) -> Option<Self> {
        Some(Complex64::new(rational_to_f64(re), rational_to_f64(im)))
    }
    fn coeff_string(&self) -> String {
        if self.im == 0.0 {
            format!("{:?}", self.re)
        } else {
            format!("({:?}{}{:?}i)", self.re, if self.im < 0.0 { "" } else { "+" }, self.im)
        }
    }
    fn to_json(&self) -> Value {
        Value::Array(vec![self.re.to_json(), self.im.to_json()])
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Array(parts) if parts.len() == 2 => {
                Ok(Complex64::new(f64::from_json(&parts[0])?, f64::from_json(&parts[1])?))
            }
            other => Ok(Complex64::new(f64::from_json(other)?, 0.0)),
        }
    }
}

/// Best-effort conversion; saturates to +/-inf only for astronomically large values.
pub fn rational_to_f64(q: &Rational) -> f64 {
    if let Some(v) = ToPrimitive::to_f64(q) {
        return v;
    }
    // Fall back to a shifted division when numerator or denominator overflow f64.
    let num_bits = q.numer().bits() as i64;
    let den_bits = q.denom().bits() as i64;
    let shift = (num_bits - den_bits).clamp(-1000, 1000);
    let scaled = if shift >= 0 {
        Rational::new(q.numer().clone(), q.denom().clone() << (shift as usize))
    } else {
        Rational::new(q.numer().clone() << ((-shift) as usize), q.denom().clone())
    };
    ToPrimitive::to_f64(&scaled).unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
}

/// Parses `p/q`, a plain integer or a finite decimal such as `-1.25` exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        if t.contains('/') || t.contains(['e', 'E']) {
            return Err(Error::Parse(format!("unsupported rational literal `{t}`")));
        }
        let negative = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        let numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits })
            .map_err(|e| Error::Parse(format!("bad decimal `{t}`: {e}")))?;
        let denom = num_traits::pow(BigInt::from(10), frac.len());
        let q = Rational::new(numer, denom);
        return Ok(if negative { -q } else { q });
    }
    let q = Rational::from_str(t).map_err(|e| Error::Parse(format!("bad rational `{t}`: {e}")))?;
    if q.denom().is_zero() {
        return Err(Error::Parse(format!("zero denominator in `{t}`")));
    }
    Ok(q)
}

/// Nearest rational with denominator at most `max_den` (continued fractions).
pub fn rationalize(x: f64, max_den: i64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = r - a;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    if k1 == 0 {
        return None;
    }
    Some(Rational::new(BigInt::from(h1), BigInt::from(k1)))
}

pub(crate) fn sign_of_permutation(perm: &[usize]) -> i64 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// All permutations of `0..n` in lexicographic order, paired with their sign.
pub(crate) fn permutations_with_sign(n: usize) -> Vec<(Vec<usize>, i64)> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        out.push((perm.clone(), sign_of_permutation(&perm)));
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| perm[i - 1] < perm[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| perm[j] > perm[i - 1]).unwrap();
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
    out
}
