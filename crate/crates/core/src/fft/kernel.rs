//! Four-step complex FFT shared by both arithmetic modes.
//!
//! The `n`-point transform is split as `n = n1 * n2` (FFT-A size times FFT-B
//! size): column transforms of length `n1`, a twiddle pass, then row
//! transforms of length `n2`. The transpose in between is only an index
//! permutation here.

use alloc::vec::Vec;

use num_complex::Complex;

use super::fixed::{self, FixedComplex};
use crate::error::{Error, Result};

pub(crate) trait Arith {
    type V: Copy + Default;

    fn mul(x: Self::V, w: Self::V) -> Self::V;
    fn butterfly(u: Self::V, t: Self::V) -> (Self::V, Self::V);
    fn conj(w: Self::V) -> Self::V;
    fn check(data: &[Self::V], stage: usize) -> Result<()>;
}

pub(crate) struct RefArith;

impl Arith for RefArith {
    type V = Complex<f64>;

    #[inline(always)]
    fn mul(x: Complex<f64>, w: Complex<f64>) -> Complex<f64> {
        x * w
    }

    #[inline(always)]
    fn butterfly(u: Complex<f64>, t: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
        (u + t, u - t)
    }

    fn conj(w: Complex<f64>) -> Complex<f64> {
        w.conj()
    }

    fn check(_: &[Complex<f64>], _: usize) -> Result<()> {
        Ok(())
    }
}

/// Every butterfly halves its outputs so magnitudes never grow; the caller
/// accounts for the `log2 n` shifts in the scale exponent.
pub(crate) struct FixedArith;

impl Arith for FixedArith {
    type V = FixedComplex;

    #[inline(always)]
    fn mul(x: FixedComplex, w: FixedComplex) -> FixedComplex {
        fixed::mul_twiddle(x, w)
    }

    #[inline(always)]
    fn butterfly(u: FixedComplex, t: FixedComplex) -> (FixedComplex, FixedComplex) {
        let half = |v: i64| (v + 1) >> 1;
        (
            Complex::new(half(u.re + t.re), half(u.im + t.im)),
            Complex::new(half(u.re - t.re), half(u.im - t.im)),
        )
    }

    fn conj(w: FixedComplex) -> FixedComplex {
        fixed::conj(w)
    }

    fn check(data: &[FixedComplex], stage: usize) -> Result<()> {
        if data.iter().all(|&c| fixed::fits_complex(c)) {
            Ok(())
        } else {
            Err(Error::FixedOverflow { phase: "fft", stage })
        }
    }
}

/// Tables for one radix-2 sub-transform of length `m`.
#[derive(Clone, Debug)]
struct SubTables<V> {
    bitrev: Vec<u32>,
    // Stage-concatenated twiddles: for span 2h, entries W_{2h}^k, k < h.
    fwd: Vec<V>,
    inv: Vec<V>,
}

impl<V: Copy> SubTables<V> {
    fn new<A: Arith<V = V>>(m: usize, n: usize, roots: &[V]) -> Self {
        let bits = m.trailing_zeros();
        let bitrev = (0..m as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        let mut fwd = Vec::with_capacity(m);
        let mut len = 2;
        while len <= m {
            let step = n / len;
            fwd.extend((0..len / 2).map(|k| roots[k * step]));
            len <<= 1;
        }
        let inv = fwd.iter().map(|&w| A::conj(w)).collect();
        SubTables { bitrev, fwd, inv }
    }

    fn len(&self) -> usize {
        self.bitrev.len()
    }
}

/// Precomputed permutation and twiddle tables for the four-step transform.
#[derive(Clone, Debug)]
pub(crate) struct KernelTables<V> {
    n1: usize,
    n2: usize,
    col: SubTables<V>,
    row: SubTables<V>,
    // W_n^(j2 k1), laid out [j2][k1].
    mid_fwd: Vec<V>,
    mid_inv: Vec<V>,
}

impl<V: Copy> KernelTables<V> {
    pub fn new<A: Arith<V = V>>(n1: usize, roots: &[V]) -> Self {
        let n = roots.len();
        let n2 = n / n1;
        let mid_fwd: Vec<V> = (0..n2).flat_map(|j2| (0..n1).map(move |k1| roots[j2 * k1])).collect();
        let mid_inv = mid_fwd.iter().map(|&w| A::conj(w)).collect();
        KernelTables {
            n1,
            n2,
            col: SubTables::new::<A>(n1, n, roots),
            row: SubTables::new::<A>(n2, n, roots),
            mid_fwd,
            mid_inv,
        }
    }
}

/// In-place radix-2 transform of `m = t.len()` interleaved vectors: element
/// `j` of vector `c` is `data[j * width + c]`. Stages are numbered from
/// `stage_base + 1`.
fn sub_fft<A: Arith>(
    t: &SubTables<A::V>,
    data: &mut [A::V],
    width: usize,
    scratch: &mut Vec<A::V>,
    inverse: bool,
    stage_base: usize,
) -> Result<()> {
    let m = t.len();
    debug_assert_eq!(data.len(), m * width);
    if m == 1 {
        return Ok(());
    }
    scratch.clear();
    scratch.extend_from_slice(data);
    if width == 1 {
        for (d, &r) in data.iter_mut().zip(&t.bitrev) {
            *d = scratch[r as usize];
        }
    } else {
        for (d, &r) in data.chunks_exact_mut(width).zip(&t.bitrev) {
            let r = r as usize * width;
            d.copy_from_slice(&scratch[r..r + width]);
        }
    }
    // First stage: the twiddle is exactly one in both modes.
    for pair in data.chunks_exact_mut(2 * width) {
        let (lo, hi) = pair.split_at_mut(width);
        for (u, v) in lo.iter_mut().zip(hi.iter_mut()) {
            (*u, *v) = A::butterfly(*u, *v);
        }
    }
    A::check(data, stage_base + 1)?;
    let tw = if inverse { &t.inv } else { &t.fwd };
    let mut offset = 1;
    let mut half = 2;
    let mut stage = stage_base + 1;
    while half < m {
        let w = &tw[offset..offset + half];
        let span = half * width;
        for chunk in data.chunks_exact_mut(2 * span) {
            let (lo, hi) = chunk.split_at_mut(span);
            if width == 1 {
                for ((u, v), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(w) {
                    (*u, *v) = A::butterfly(*u, A::mul(*v, w));
                }
            } else {
                for ((lo, hi), &w) in lo.chunks_exact_mut(width).zip(hi.chunks_exact_mut(width)).zip(w) {
                    for (u, v) in lo.iter_mut().zip(hi.iter_mut()) {
                        (*u, *v) = A::butterfly(*u, A::mul(*v, w));
                    }
                }
            }
        }
        offset += half;
        half <<= 1;
        stage += 1;
        A::check(data, stage)?;
    }
    Ok(())
}

/// `X_k = sum_j x_j W^(jk)` with `W = exp(+2 pi i / n)` (conjugated when
/// `inverse`), unnormalized.
pub(crate) fn four_step<A: Arith>(t: &KernelTables<A::V>, data: &mut [A::V], inverse: bool) -> Result<()> {
    let (n1, n2) = (t.n1, t.n2);
    debug_assert_eq!(data.len(), n1 * n2);
    A::check(data, 0)?;
    let mut scratch = Vec::with_capacity(n1 * n2);
    if n2 == 1 {
        return sub_fft::<A>(&t.col, data, 1, &mut scratch, inverse, 0);
    }
    let mid = if inverse { &t.mid_inv } else { &t.mid_fwd };
    // Column j2 holds x[n2 * j1 + j2]; store it contiguously as tmp[j2][j1].
    let mut tmp: Vec<A::V> = Vec::with_capacity(n1 * n2);
    for j2 in 0..n2 {
        tmp.extend((0..n1).map(|j1| data[n2 * j1 + j2]));
    }
    let mut stage = 0;
    for (j2, col) in tmp.chunks_exact_mut(n1).enumerate() {
        sub_fft::<A>(&t.col, col, 1, &mut scratch, inverse, 0)?;
        for (v, &w) in col.iter_mut().zip(&mid[j2 * n1..(j2 + 1) * n1]) {
            *v = A::mul(*v, w);
        }
        stage = n1.trailing_zeros() as usize;
    }
    // Rows k1 are the interleaved vectors of tmp, and the result lands in
    // the natural order X[k1 + n1 * k2] = tmp[k2][k1].
    sub_fft::<A>(&t.row, &mut tmp, n1, &mut scratch, inverse, stage)?;
    data.copy_from_slice(&tmp);
    Ok(())
}
