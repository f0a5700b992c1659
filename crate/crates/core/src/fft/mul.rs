//! Bit-exact torus products through the FFT.
//!
//! A 64-bit torus operand cannot pass through a 53-bit (or 48-bit) transform
//! without losing its low bits, so it is split into balanced signed limbs of
//! `limb_bits` bits. Each limb is transformed on its own and the rounded
//! integer results are recombined with wrapping shifts. The limb width is
//! chosen from a worst-case error bound so that every limb product rounds to
//! the exact integer convolution.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::fixed;
use super::plan::FftPlan;
use super::spectrum::{accumulator_exponent, forward_fft_bounded, inverse_to_ints, FftMode, FourierPolynomial};
use crate::error::{Error, Result};
use crate::torus::{IntPolynomial, Torus, TorusPolynomial};

// Fixed48: the accumulator exponent must stay at or below -5 for the output
// rounding error (a few ulps) to remain under one half.
const FIXED_BUDGET_BITS: i32 = 40;
// Reference: 53-bit mantissa minus rounding growth over log2(N) stages.
const REFERENCE_BUDGET_BITS: i32 = 46;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimbLayout {
    pub limb_bits: u32,
    pub limbs: usize,
    /// False when even one-bit limbs exceed the error budget; products are
    /// then approximate.
    pub exact: bool,
}

impl LimbLayout {
    /// Widest limbs for which `rows` accumulated products with an
    /// `a_bits`-bit integer operand stay exact.
    pub fn for_product(mode: FftMode, plan: &FftPlan, a_bits: u32, rows: usize) -> Self {
        let log_n = plan.log_points() as i32;
        let rows_bits = fixed::ceil_log2(rows) as i32;
        let budget = match mode {
            FftMode::Fixed48 => FIXED_BUDGET_BITS - a_bits as i32 - 2 * log_n - rows_bits,
            FftMode::Reference => REFERENCE_BUDGET_BITS - a_bits as i32 - (log_n + 1) - rows_bits,
        };
        Self::with_max_bits(budget)
    }

    /// Layout for a plain forward/inverse round trip.
    pub fn for_round_trip(mode: FftMode, plan: &FftPlan) -> Self {
        Self::for_product(mode, plan, 1, 1)
    }

    fn with_max_bits(budget: i32) -> Self {
        let exact = budget >= 1;
        let max = budget.clamp(1, 64) as u32;
        let limbs = 64u32.div_ceil(max);
        LimbLayout {
            limb_bits: 64u32.div_ceil(limbs),
            limbs: limbs as usize,
            exact,
        }
    }
}

/// Balanced signed limbs `v_l` in `[-2^(L-1), 2^(L-1))` with
/// `sum v_l 2^(L l) ≡ p (mod 2^64)`.
pub fn split_limbs(p: &TorusPolynomial, layout: LimbLayout) -> Vec<IntPolynomial> {
    let n = p.degree();
    let l = layout.limb_bits;
    let mut out: Vec<IntPolynomial> = (0..layout.limbs).map(|_| IntPolynomial::zero(n)).collect();
    let half = 1i128 << (l - 1);
    let mask = (1i128 << l) - 1;
    for (i, c) in p.coeffs().iter().enumerate() {
        let mut r = c.0 as i64 as i128;
        for limb in out.iter_mut() {
            let mut v = r & mask;
            if v >= half {
                v -= 1i128 << l;
            }
            limb.coeffs_mut()[i] = v as i64;
            r = (r - v) >> l;
        }
    }
    out
}

fn recombine(limbs: &[Vec<i64>], limb_bits: u32) -> TorusPolynomial {
    let n = limbs[0].len();
    let coeffs = (0..n)
        .map(|i| {
            let mut acc = 0u64;
            for (l, limb) in limbs.iter().enumerate() {
                let shift = limb_bits * l as u32;
                if shift < 64 {
                    acc = acc.wrapping_add((limb[i] as u64).wrapping_shl(shift));
                }
            }
            Torus(acc)
        })
        .collect();
    TorusPolynomial::from_coeffs(coeffs)
}

/// Spectra of the limbs of a torus polynomial (or of an accumulator of limb
/// products).
#[derive(Clone, Debug, PartialEq)]
pub struct TorusSpectrum {
    layout: LimbLayout,
    limbs: Vec<FourierPolynomial>,
}

impl TorusSpectrum {
    /// Zero accumulator for `rows` products of `a_bits`-bit integer spectra
    /// with limb spectra of `layout`.
    pub fn accumulator(plan: &FftPlan, mode: FftMode, layout: LimbLayout, a_bits: u32, rows: usize) -> Self {
        let e = accumulator_exponent(plan, a_bits, layout.limb_bits, rows);
        TorusSpectrum {
            layout,
            limbs: (0..layout.limbs)
                .map(|_| FourierPolynomial::zeros(mode, plan.n_points(), e))
                .collect(),
        }
    }

    pub fn layout(&self) -> LimbLayout {
        self.layout
    }

    pub fn limbs(&self) -> &[FourierPolynomial] {
        &self.limbs
    }

    pub fn mode(&self) -> FftMode {
        self.limbs[0].mode()
    }

    /// `self += a ⊙ b` limb by limb.
    pub fn mac_assign(&mut self, a: &FourierPolynomial, b: &TorusSpectrum) -> Result<()> {
        if self.layout != b.layout {
            return Err(Error::SpectrumMismatch);
        }
        for (acc, limb) in self.limbs.iter_mut().zip(&b.limbs) {
            acc.mac_assign(a, limb)?;
        }
        Ok(())
    }

    pub fn clear(&mut self) {
        self.limbs.iter_mut().for_each(FourierPolynomial::clear);
    }
}

pub fn forward_fft_torus(
    p: &TorusPolynomial,
    plan: &FftPlan,
    mode: FftMode,
    layout: LimbLayout,
) -> Result<TorusSpectrum> {
    plan.check_degree(p.degree())?;
    let limbs = split_limbs(p, layout)
        .iter()
        .map(|limb| forward_fft_bounded(limb, plan, mode, layout.limb_bits))
        .collect::<Result<Vec<_>>>()?;
    Ok(TorusSpectrum { layout, limbs })
}

pub fn inverse_fft_torus(s: &TorusSpectrum, plan: &FftPlan) -> Result<TorusPolynomial> {
    let ints = s
        .limbs
        .iter()
        .map(|f| inverse_to_ints(f, plan))
        .collect::<Result<Vec<_>>>()?;
    Ok(recombine(&ints, s.layout.limb_bits))
}

/// Negacyclic product `a * b` through the FFT. Exact (equal to
/// [`crate::torus::schoolbook_negacyclic`]) whenever the chosen layout is.
pub fn negacyclic_mul(
    a: &IntPolynomial,
    b: &TorusPolynomial,
    plan: &FftPlan,
    mode: FftMode,
) -> Result<TorusPolynomial> {
    plan.check_degree(a.degree())?;
    let a_bits = fixed::bit_len(a.max_abs());
    let layout = LimbLayout::for_product(mode, plan, a_bits, 1);
    let fa = forward_fft_bounded(a, plan, mode, a_bits)?;
    let fb = forward_fft_torus(b, plan, mode, layout)?;
    let mut acc = TorusSpectrum::accumulator(plan, mode, layout, a_bits, 1);
    acc.mac_assign(&fa, &fb)?;
    inverse_fft_torus(&acc, plan)
}
