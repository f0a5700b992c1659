use alloc::vec::Vec;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::fixed::{self, FixedComplex, INPUT_HEADROOM_BITS};
use super::kernel::{four_step, FixedArith, RefArith};
use super::plan::FftPlan;
use crate::error::{Error, Result};
use crate::torus::{IntPolynomial, Torus, TorusPolynomial};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FftMode {
    #[default]
    Reference,
    Fixed48,
}

impl core::str::FromStr for FftMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" | "ref" | "f64" => Ok(FftMode::Reference),
            "fixed48" | "fixed" => Ok(FftMode::Fixed48),
            other => Err(Error::InvalidParams(alloc::format!("unknown fft mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Points {
    Reference(Vec<Complex<f64>>),
    Fixed(Vec<FixedComplex>),
}

/// `N/2` evaluations of a real negacyclic polynomial at the roots
/// `exp(i pi (4k+1) / N)`.
///
/// In fixed48 mode point `k` stands for `raw_k * 2^scale_exponent`; in
/// reference mode the exponent is always 0.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierPolynomial {
    points: Points,
    scale_exponent: i32,
}

impl FourierPolynomial {
    pub fn zeros(mode: FftMode, n_points: usize, scale_exponent: i32) -> Self {
        match mode {
            FftMode::Reference => FourierPolynomial {
                points: Points::Reference(alloc::vec![Complex::new(0.0, 0.0); n_points]),
                scale_exponent: 0,
            },
            FftMode::Fixed48 => FourierPolynomial {
                points: Points::Fixed(alloc::vec![Complex::new(0, 0); n_points]),
                scale_exponent,
            },
        }
    }

    pub fn from_reference(points: Vec<Complex<f64>>) -> Self {
        FourierPolynomial {
            points: Points::Reference(points),
            scale_exponent: 0,
        }
    }

    /// Raw 48-bit points; fails if any component leaves the word range.
    pub fn from_fixed(points: Vec<FixedComplex>, scale_exponent: i32) -> Result<Self> {
        if !points.iter().all(|&c| fixed::fits_complex(c)) {
            return Err(Error::FixedOverflow {
                phase: "load",
                stage: 0,
            });
        }
        Ok(FourierPolynomial {
            points: Points::Fixed(points),
            scale_exponent,
        })
    }

    pub fn mode(&self) -> FftMode {
        match self.points {
            Points::Reference(_) => FftMode::Reference,
            Points::Fixed(_) => FftMode::Fixed48,
        }
    }

    pub fn len(&self) -> usize {
        match &self.points {
            Points::Reference(p) => p.len(),
            Points::Fixed(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scale_exponent(&self) -> i32 {
        self.scale_exponent
    }

    pub fn reference_points(&self) -> Option<&[Complex<f64>]> {
        match &self.points {
            Points::Reference(p) => Some(p),
            Points::Fixed(_) => None,
        }
    }

    pub fn fixed_points(&self) -> Option<&[FixedComplex]> {
        match &self.points {
            Points::Fixed(p) => Some(p),
            Points::Reference(_) => None,
        }
    }

    /// Point values as doubles, with the scale applied.
    pub fn values(&self) -> Vec<Complex<f64>> {
        match &self.points {
            Points::Reference(p) => p.clone(),
            Points::Fixed(p) => {
                let s = libm::ldexp(1.0, self.scale_exponent);
                p.iter()
                    .map(|c| Complex::new(c.re as f64 * s, c.im as f64 * s))
                    .collect()
            }
        }
    }

    fn check_compatible(&self, other: &FourierPolynomial) -> Result<()> {
        if self.mode() != other.mode() || self.len() != other.len() {
            return Err(Error::SpectrumMismatch);
        }
        Ok(())
    }

    /// `self += a ⊙ b`. Fixed-point products are rounded into this
    /// accumulator's scale.
    pub fn mac_assign(&mut self, a: &FourierPolynomial, b: &FourierPolynomial) -> Result<()> {
        self.check_compatible(a)?;
        self.check_compatible(b)?;
        let e_acc = self.scale_exponent;
        match (&mut self.points, &a.points, &b.points) {
            (Points::Reference(acc), Points::Reference(x), Points::Reference(y)) => {
                for ((o, &p), &q) in acc.iter_mut().zip(x).zip(y) {
                    *o += p * q;
                }
                Ok(())
            }
            (Points::Fixed(acc), Points::Fixed(x), Points::Fixed(y)) => {
                let shift = e_acc - (a.scale_exponent + b.scale_exponent);
                let scale = |v: i128| -> Option<i128> {
                    if shift >= 0 {
                        Some(fixed::round_shift(v, shift as u32))
                    } else {
                        let l = (-shift) as u32;
                        if l >= 80 {
                            return if v == 0 { Some(0) } else { None };
                        }
                        v.checked_mul(1i128 << l)
                    }
                };
                let overflow = Error::FixedOverflow { phase: "mac", stage: 0 };
                for ((o, &p), &q) in acc.iter_mut().zip(x).zip(y) {
                    let (pr, pi, qr, qi) = (p.re as i128, p.im as i128, q.re as i128, q.im as i128);
                    let re = scale(pr * qr - pi * qi).ok_or_else(|| overflow.clone())?;
                    let im = scale(pr * qi + pi * qr).ok_or_else(|| overflow.clone())?;
                    let re = o.re as i128 + re;
                    let im = o.im as i128 + im;
                    if !(fits128(re) && fits128(im)) {
                        return Err(overflow);
                    }
                    *o = Complex::new(re as i64, im as i64);
                }
                Ok(())
            }
            _ => Err(Error::SpectrumMismatch),
        }
    }

    pub fn add_assign(&mut self, other: &FourierPolynomial) -> Result<()> {
        self.check_compatible(other)?;
        match (&mut self.points, &other.points) {
            (Points::Reference(a), Points::Reference(b)) => {
                for (x, &y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(())
            }
            (Points::Fixed(a), Points::Fixed(b)) => {
                if self.scale_exponent != other.scale_exponent {
                    return Err(Error::SpectrumMismatch);
                }
                for (x, &y) in a.iter_mut().zip(b) {
                    let s = *x + y;
                    if !fixed::fits_complex(s) {
                        return Err(Error::FixedOverflow { phase: "add", stage: 0 });
                    }
                    *x = s;
                }
                Ok(())
            }
            _ => Err(Error::SpectrumMismatch),
        }
    }

    pub fn clear(&mut self) {
        match &mut self.points {
            Points::Reference(p) => p.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0)),
            Points::Fixed(p) => p.iter_mut().for_each(|c| *c = Complex::new(0, 0)),
        }
    }
}

fn fits128(v: i128) -> bool {
    (-(1i128 << 47)..1i128 << 47).contains(&v)
}

/// Scale exponent the fixed48 forward transform assigns to an input whose
/// coefficients fit in `bits` bits: the input is pre-shifted to 45 bits and
/// every butterfly stage halves.
pub fn forward_exponent(plan: &FftPlan, bits: u32) -> i32 {
    plan.log_points() as i32 - INPUT_HEADROOM_BITS as i32 + bits as i32
}

/// Accumulator exponent for `rows` products of spectra of `a_bits`- and
/// `b_bits`-bit inputs, chosen so the sum provably fits the word.
pub fn accumulator_exponent(plan: &FftPlan, a_bits: u32, b_bits: u32, rows: usize) -> i32 {
    forward_exponent(plan, a_bits)
        + forward_exponent(plan, b_bits)
        + INPUT_HEADROOM_BITS as i32
        + fixed::ceil_log2(rows) as i32
}

/// Forward transform of an integer polynomial.
pub fn forward_fft(p: &IntPolynomial, plan: &FftPlan, mode: FftMode) -> Result<FourierPolynomial> {
    forward_fft_bounded(p, plan, mode, 0)
}

/// Like [`forward_fft`], but scales as if coefficients used at least
/// `min_bits` bits, so every spectrum of the same bound shares one exponent.
pub fn forward_fft_bounded(
    p: &IntPolynomial,
    plan: &FftPlan,
    mode: FftMode,
    min_bits: u32,
) -> Result<FourierPolynomial> {
    plan.check_degree(p.degree())?;
    let n = plan.n_points();
    let (lo, hi) = p.coeffs().split_at(n);
    match mode {
        FftMode::Reference => {
            let mut z: Vec<Complex<f64>> = lo
                .iter()
                .zip(hi)
                .zip(plan.twist())
                .map(|((&re, &im), &w)| Complex::new(re as f64, im as f64) * w)
                .collect();
            four_step::<RefArith>(plan.tables(), &mut z, false)?;
            Ok(FourierPolynomial::from_reference(z))
        }
        FftMode::Fixed48 => {
            let bits = fixed::bit_len(p.max_abs()).max(min_bits);
            if bits > INPUT_HEADROOM_BITS {
                return Err(Error::FixedOverflow {
                    phase: "input",
                    stage: 0,
                });
            }
            let s = INPUT_HEADROOM_BITS - bits;
            let mut z: Vec<FixedComplex> = lo
                .iter()
                .zip(hi)
                .zip(plan.twist_fixed())
                .map(|((&re, &im), &w)| fixed::mul_twiddle(Complex::new(re << s, im << s), w))
                .collect();
            four_step::<FixedArith>(plan.tables_fixed(), &mut z, false)?;
            Ok(FourierPolynomial {
                points: Points::Fixed(z),
                scale_exponent: forward_exponent(plan, bits),
            })
        }
    }
}

/// Inverse transform, rounding every coefficient to the nearest integer.
/// Results wrap modulo 2^64 when read as torus values.
pub fn inverse_to_ints(f: &FourierPolynomial, plan: &FftPlan) -> Result<Vec<i64>> {
    let n = plan.n_points();
    if f.len() != n {
        return Err(Error::PlanMismatch {
            plan: plan.degree(),
            got: 2 * f.len(),
        });
    }
    let mut out = alloc::vec![0i64; 2 * n];
    match &f.points {
        Points::Reference(p) => {
            let mut z = p.clone();
            four_step::<RefArith>(plan.tables(), &mut z, true)?;
            let inv = 1.0 / n as f64;
            for (j, (&v, &w)) in z.iter().zip(plan.twist()).enumerate() {
                let c = v * w.conj() * inv;
                out[j] = round_f64(c.re);
                out[j + n] = round_f64(c.im);
            }
        }
        Points::Fixed(p) => {
            let mut z = p.clone();
            four_step::<FixedArith>(plan.tables_fixed(), &mut z, true)?;
            let e = f.scale_exponent;
            for (j, (&v, &w)) in z.iter().zip(plan.twist_fixed()).enumerate() {
                let c = fixed::mul_twiddle(v, fixed::conj(w));
                out[j] = rescale(c.re, e);
                out[j + n] = rescale(c.im, e);
            }
        }
    }
    Ok(out)
}

/// Inverse transform to a torus polynomial (coefficients rounded, then
/// reduced modulo 2^64).
pub fn inverse_fft(f: &FourierPolynomial, plan: &FftPlan) -> Result<TorusPolynomial> {
    let ints = inverse_to_ints(f, plan)?;
    Ok(TorusPolynomial::from_coeffs(
        ints.into_iter().map(|v| Torus(v as u64)).collect(),
    ))
}

/// `acc + a ⊙ b` as a new spectrum.
pub fn pointwise_mac(
    acc: &FourierPolynomial,
    a: &FourierPolynomial,
    b: &FourierPolynomial,
) -> Result<FourierPolynomial> {
    let mut out = acc.clone();
    out.mac_assign(a, b)?;
    Ok(out)
}

fn round_f64(x: f64) -> i64 {
    // Saturating cast; values beyond i64 only occur outside the exactness
    // regime.
    // Half away from zero, like `libm::round`, without the call.
    let t = x as i64;
    let frac = x - t as f64;
    if frac >= 0.5 {
        t + 1
    } else if frac <= -0.5 {
        t - 1
    } else {
        t
    }
}

fn rescale(raw: i64, e: i32) -> i64 {
    if e >= 0 {
        if e >= 64 {
            0
        } else {
            raw.wrapping_shl(e as u32)
        }
    } else {
        fixed::round_shift(raw as i128, (-e) as u32) as i64
    }
}
