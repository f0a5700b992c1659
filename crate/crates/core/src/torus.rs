//! Discretized torus arithmetic, negacyclic polynomials, gadget decomposition
//! and modulus switching.
//!
//! A [`Torus`] value `v` stands for the fraction `v / 2^64` in `[0, 1)`. All
//! arithmetic wraps modulo `2^64`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest supported polynomial degree.
pub const MIN_DEGREE: usize = 1 << 6;
/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 1 << 16;

/// One element of the 64-bit discretized torus.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(transparent)]
pub struct Torus(pub u64);

impl Torus {
    pub const ZERO: Torus = Torus(0);

    #[inline]
    pub fn wrapping_add(self, rhs: Torus) -> Torus {
        Torus(self.0.wrapping_add(rhs.0))
    }

    #[inline]
    pub fn wrapping_sub(self, rhs: Torus) -> Torus {
        Torus(self.0.wrapping_sub(rhs.0))
    }

    /// `k * self` modulo `2^64`, two's complement for negative `k`.
    #[inline]
    pub fn scalar_mul(self, k: i64) -> Torus {
        Torus(self.0.wrapping_mul(k as u64))
    }

    /// Signed distance to zero as a fraction of the torus, in `[-1/2, 1/2)`.
    #[inline]
    pub fn to_signed_fraction(self) -> f64 {
        (self.0 as i64) as f64 / 18446744073709551616.0
    }

    /// Nearest torus element to the real number `x` (taken modulo 1).
    pub fn from_fraction(x: f64) -> Torus {
        let frac = x - libm::floor(x);
        let scaled = libm::round(frac * 18446744073709551616.0);
        // `scaled` may round up to exactly 2^64.
        if scaled >= 18446744073709551616.0 {
            Torus(0)
        } else {
            Torus(scaled as u64)
        }
    }
}

impl fmt::Debug for Torus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Torus({:#018x})", self.0)
    }
}

impl Add for Torus {
    type Output = Torus;
    #[inline]
    fn add(self, rhs: Torus) -> Torus {
        self.wrapping_add(rhs)
    }
}

impl Sub for Torus {
    type Output = Torus;
    #[inline]
    fn sub(self, rhs: Torus) -> Torus {
        self.wrapping_sub(rhs)
    }
}

impl Neg for Torus {
    type Output = Torus;
    #[inline]
    fn neg(self) -> Torus {
        Torus(self.0.wrapping_neg())
    }
}

impl AddAssign for Torus {
    #[inline]
    fn add_assign(&mut self, rhs: Torus) {
        *self = *self + rhs;
    }
}

impl SubAssign for Torus {
    #[inline]
    fn sub_assign(&mut self, rhs: Torus) {
        *self = *self - rhs;
    }
}

pub fn torus_add(a: Torus, b: Torus) -> Torus {
    a + b
}

pub fn torus_scalar_mul(k: i64, a: Torus) -> Torus {
    a.scalar_mul(k)
}

/// Checks that `n` is a supported power-of-two polynomial degree.
pub fn check_degree(n: usize) -> Result<()> {
    if n.is_power_of_two() && (MIN_DEGREE..=MAX_DEGREE).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedDegree(n))
    }
}

/// Polynomial with torus coefficients in `T[X]/(X^N + 1)`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusPolynomial {
    coeffs: Vec<Torus>,
}

impl fmt::Debug for TorusPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusPolynomial")
            .field("degree", &self.coeffs.len())
            .finish_non_exhaustive()
    }
}

impl TorusPolynomial {
    pub fn zero(degree: usize) -> Self {
        TorusPolynomial {
            coeffs: vec![Torus::ZERO; degree],
        }
    }

    /// Wraps raw coefficients. The length must be a power of two.
    pub fn from_coeffs(coeffs: Vec<Torus>) -> Self {
        debug_assert!(coeffs.len().is_power_of_two());
        TorusPolynomial { coeffs }
    }

    pub fn from_u64(raw: &[u64]) -> Self {
        Self::from_coeffs(raw.iter().map(|&v| Torus(v)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Torus] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Torus] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Torus> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.0 == 0)
    }

    pub fn add_assign(&mut self, other: &TorusPolynomial) {
        debug_assert_eq!(self.degree(), other.degree());
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    pub fn sub_assign(&mut self, other: &TorusPolynomial) {
        debug_assert_eq!(self.degree(), other.degree());
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a -= b;
        }
    }

    pub fn negate(&mut self) {
        for c in &mut self.coeffs {
            *c = -*c;
        }
    }

    /// Multiplies by the monomial `X^e` under `X^N = -1`. `e` is taken mod `2N`.
    pub fn monomial_mul(&self, e: usize) -> TorusPolynomial {
        let mut out = TorusPolynomial::zero(self.degree());
        self.monomial_mul_into(e, &mut out);
        out
    }

    /// Writes `X^e * self` into `out` (same degree).
    pub fn monomial_mul_into(&self, e: usize, out: &mut TorusPolynomial) {
        let n = self.degree();
        debug_assert_eq!(out.degree(), n);
        let e = e % (2 * n);
        let (shift, negate) = if e >= n { (e - n, true) } else { (e, false) };
        for (i, &c) in self.coeffs.iter().enumerate() {
            let j = i + shift;
            // Coefficients pushed past X^(N-1) come back negated.
            let (idx, neg) = if j >= n { (j - n, !negate) } else { (j, negate) };
            out.coeffs[idx] = if neg { -c } else { c };
        }
    }
}

/// Multiplies `p` by `X^e` modulo `X^N + 1`.
pub fn poly_monomial_mul(p: &TorusPolynomial, e: usize) -> TorusPolynomial {
    p.monomial_mul(e)
}

/// Polynomial with small signed integer coefficients (decomposition digits,
/// secret keys).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntPolynomial {
    coeffs: Vec<i64>,
}

impl IntPolynomial {
    pub fn zero(degree: usize) -> Self {
        IntPolynomial {
            coeffs: vec![0; degree],
        }
    }

    pub fn from_coeffs(coeffs: Vec<i64>) -> Self {
        debug_assert!(coeffs.len().is_power_of_two());
        IntPolynomial { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [i64] {
        &mut self.coeffs
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> u64 {
        self.coeffs.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }
}

/// Power-of-two gadget: base `2^base_log`, `depth` levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GadgetParams {
    pub base_log: u32,
    pub depth: u32,
}

impl GadgetParams {
    pub fn new(base_log: u32, depth: u32) -> Result<Self> {
        let g = GadgetParams { base_log, depth };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_log == 0 || self.depth == 0 || self.base_log * self.depth > 64 {
            return Err(Error::InvalidGadget {
                base_log: self.base_log,
                depth: self.depth,
            });
        }
        Ok(())
    }

    pub fn base(&self) -> u64 {
        1u64 << self.base_log
    }

    /// Number of most-significant bits captured by the decomposition.
    pub fn precision_bits(&self) -> u32 {
        self.base_log * self.depth
    }

    /// Torus weight of level `j` (1-based): `2^(64 - j * base_log)`, as a
    /// torus element. Level weights at exactly 2^64 do not occur since
    /// `j >= 1`.
    pub fn level_weight(&self, level: u32) -> Torus {
        let shift = 64 - level * self.base_log;
        if shift >= 64 {
            Torus(0)
        } else {
            Torus(1u64 << shift)
        }
    }
}

/// Rounds `a` to its top `bits` bits (closest representative, ties to even)
/// and returns the rounded value as an integer in `[0, 2^bits)` (the
/// wrap-around carry is dropped).
fn round_to_top_bits(a: u64, bits: u32) -> u64 {
    if bits >= 64 {
        return a;
    }
    let drop = 64 - bits;
    let kept = a >> drop;
    let rem = a & ((1u64 << drop) - 1);
    let half = 1u64 << (drop - 1);
    let round_up = rem > half || (rem == half && kept & 1 == 1);
    let mask = if bits == 0 { 0 } else { (1u64 << bits) - 1 };
    (kept + round_up as u64) & mask
}

/// Balanced signed gadget decomposition. Returns `depth` digits, most
/// significant level first, each in `[-B/2, B/2)`.
pub fn gadget_decompose(a: Torus, g: GadgetParams) -> Vec<i64> {
    let mut digits = vec![0i64; g.depth as usize];
    decompose_into(a, g, &mut digits);
    digits
}

#[inline]
fn decompose_into(a: Torus, g: GadgetParams, digits: &mut [i64]) {
    let base_log = g.base_log;
    // base_log == 64 only happens with a single level.
    let base = 1u64.checked_shl(base_log).unwrap_or(0);
    let mask = base.wrapping_sub(1);
    let half = 1u64 << (base_log - 1);
    let mut state = round_to_top_bits(a.0, g.precision_bits());
    let mut carry = 0u64;
    for level in (0..g.depth as usize).rev() {
        let raw = (state & mask) + carry;
        state = state.checked_shr(base_log).unwrap_or(0);
        if raw >= half {
            digits[level] = raw.wrapping_sub(base) as i64;
            carry = 1;
        } else {
            digits[level] = raw as i64;
            carry = 0;
        }
    }
}

/// Inverse of [`gadget_decompose`]: `sum_j digit_j * 2^(64 - j*base_log)`.
pub fn gadget_recompose(digits: &[i64], g: GadgetParams) -> Torus {
    digits.iter().enumerate().fold(Torus::ZERO, |acc, (j, &d)| {
        acc + g.level_weight(j as u32 + 1).scalar_mul(d)
    })
}

/// Coefficientwise decomposition of a polynomial into `depth` digit
/// polynomials, most significant level first.
pub fn poly_gadget_decompose(p: &TorusPolynomial, g: GadgetParams) -> Vec<IntPolynomial> {
    let n = p.degree();
    let d = g.depth as usize;
    let mut out: Vec<IntPolynomial> = (0..d).map(|_| IntPolynomial::zero(n)).collect();
    let mut digits = vec![0i64; d];
    for (i, &c) in p.coeffs().iter().enumerate() {
        decompose_into(c, g, &mut digits);
        for (level, &digit) in digits.iter().enumerate() {
            out[level].coeffs[i] = digit;
        }
    }
    out
}

/// `round(a * 2N / 2^64) mod 2N` with ties rounded up.
pub fn mod_switch(a: Torus, two_n: usize) -> usize {
    debug_assert!(two_n.is_power_of_two() && two_n >= 2);
    let log = two_n.trailing_zeros();
    // One extra bit below the target precision decides the rounding.
    let scaled = (a.0 >> (63 - log)) + 1;
    ((scaled >> 1) as usize) & (two_n - 1)
}

/// Reference negacyclic product by schoolbook convolution, `O(N^2)`.
pub fn schoolbook_negacyclic(a: &IntPolynomial, b: &TorusPolynomial) -> TorusPolynomial {
    let n = a.degree();
    assert_eq!(n, b.degree());
    let mut out = vec![Torus::ZERO; n];
    for (i, &ai) in a.coeffs().iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.coeffs().iter().enumerate() {
            let term = bj.scalar_mul(ai);
            let k = i + j;
            if k < n {
                out[k] += term;
            } else {
                out[k - n] -= term;
            }
        }
    }
    TorusPolynomial::from_coeffs(out)
}
