//! 48-bit two's-complement fixed-point helpers for the hardware-modeled FFT
//! datapath. Values are carried in `i64` and checked against the 48-bit
//! range after every stage.

use num_complex::Complex;

pub type FixedComplex = Complex<i64>;

/// Width of the modeled datapath word.
pub const WORD_BITS: u32 = 48;
/// Fractional bits of twiddle constants (`1.0` is `2^46`).
pub const TWIDDLE_FRAC_BITS: u32 = 46;
/// Largest magnitude the forward transform feeds into the first stage.
pub const INPUT_HEADROOM_BITS: u32 = 45;

const WORD_MIN: i64 = -(1i64 << (WORD_BITS - 1));
const WORD_MAX: i64 = (1i64 << (WORD_BITS - 1)) - 1;

#[inline]
pub fn fits(v: i64) -> bool {
    (WORD_MIN..=WORD_MAX).contains(&v)
}

#[inline]
pub fn fits_complex(c: FixedComplex) -> bool {
    fits(c.re) && fits(c.im)
}

/// Round-to-nearest 48-bit twiddle constant.
pub fn twiddle(w: Complex<f64>) -> FixedComplex {
    let scale = (1u64 << TWIDDLE_FRAC_BITS) as f64;
    Complex::new(libm::round(w.re * scale) as i64, libm::round(w.im * scale) as i64)
}

/// Arithmetic right shift with round-half-up.
#[inline]
pub fn round_shift(v: i128, shift: u32) -> i128 {
    if shift == 0 {
        v
    } else if shift >= 127 {
        0
    } else {
        (v + (1i128 << (shift - 1))) >> shift
    }
}

/// `x * w` where `w` carries [`TWIDDLE_FRAC_BITS`] fractional bits.
#[inline]
pub fn mul_twiddle(x: FixedComplex, w: FixedComplex) -> FixedComplex {
    let (xr, xi) = (x.re as i128, x.im as i128);
    let (wr, wi) = (w.re as i128, w.im as i128);
    Complex::new(
        round_shift(xr * wr - xi * wi, TWIDDLE_FRAC_BITS) as i64,
        round_shift(xr * wi + xi * wr, TWIDDLE_FRAC_BITS) as i64,
    )
}

#[inline]
pub fn conj(w: FixedComplex) -> FixedComplex {
    Complex::new(w.re, -w.im)
}

/// Number of bits needed to hold `v` (0 for 0).
#[inline]
pub fn bit_len(v: u64) -> u32 {
    64 - v.leading_zeros()
}

#[inline]
pub fn ceil_log2(v: usize) -> u32 {
    if v <= 1 {
        0
    } else {
        usize::BITS - (v - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_range() {
        assert!(fits((1 << 47) - 1));
        assert!(fits(-(1 << 47)));
        assert!(!fits(1 << 47));
        assert!(!fits(-(1 << 47) - 1));
    }

    #[test]
    fn rounding() {
        assert_eq!(round_shift(5, 1), 3);
        assert_eq!(round_shift(-5, 1), -2);
        assert_eq!(round_shift(4, 2), 1);
        assert_eq!(round_shift(7, 0), 7);
    }

    #[test]
    fn unit_twiddle_is_identity() {
        let one = twiddle(Complex::new(1.0, 0.0));
        let x = Complex::new(123_456_789, -987_654_321);
        assert_eq!(mul_twiddle(x, one), x);
        let i = twiddle(Complex::new(0.0, 1.0));
        assert_eq!(mul_twiddle(x, i), Complex::new(987_654_321, 123_456_789));
    }

    #[test]
    fn logs() {
        assert_eq!(bit_len(0), 0);
        assert_eq!(bit_len(1), 1);
        assert_eq!(bit_len(128), 8);
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(5), 3);
    }
}
