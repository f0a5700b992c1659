use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::glwe::{cmux_counted, GlweCiphertext};
use super::keys::{key_switch_counted, BootstrappingKey, EvaluationKeys};
use super::lwe::{LweCiphertext, LweDim};
use super::params::TfheParams;
use super::OpCounters;
use crate::error::{Error, Result};
use crate::fft::FftPlan;
use crate::torus::{mod_switch, Torus, TorusPolynomial};

/// A univariate table over `p = 2^width` messages and its noiseless GLWE
/// encoding.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LookupTable {
    entries: Vec<u64>,
    width: u32,
    encoded: GlweCiphertext,
}

impl LookupTable {
    /// Each entry fills a box of `N/p` body coefficients; the whole body is
    /// rotated back by half a box so that noise on either side of a message
    /// lands in its own box. Coefficients that rotate past `X^N` pick up the
    /// negacyclic sign.
    pub fn encode(entries: &[u64], width: u32, degree: usize, k: usize) -> Result<Self> {
        let p = 1usize << width;
        if entries.len() != p {
            return Err(Error::LutLength {
                expected: p,
                got: entries.len(),
            });
        }
        if let Some((index, &value)) = entries.iter().enumerate().find(|(_, &v)| v >= p as u64) {
            return Err(Error::LutEntry { index, value });
        }
        if degree < p {
            return Err(Error::InvalidParams(alloc::format!(
                "degree {degree} cannot hold {p} boxes"
            )));
        }
        let delta = 1u64 << (64 - width - 1);
        let box_size = degree / p;
        let half = box_size / 2;
        let coeffs = (0..degree)
            .map(|j| {
                if j + half < degree {
                    Torus(entries[(j + half) / box_size].wrapping_mul(delta))
                } else {
                    -Torus(entries[0].wrapping_mul(delta))
                }
            })
            .collect();
        Ok(LookupTable {
            entries: entries.to_vec(),
            width,
            encoded: GlweCiphertext::trivial(TorusPolynomial::from_coeffs(coeffs), k),
        })
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn encoded(&self) -> &GlweCiphertext {
        &self.encoded
    }

    pub fn apply(&self, m: u64) -> u64 {
        self.entries[m as usize % self.entries.len()]
    }
}

pub fn encode_lut(entries: &[u64], params: &TfheParams) -> Result<LookupTable> {
    LookupTable::encode(entries, params.width, params.big_n, params.k)
}

/// Table of `f` over all messages of the parameter set.
pub fn lut_from_fn(params: &TfheParams, f: impl Fn(u64) -> u64) -> Result<LookupTable> {
    let p = params.message_space() as u64;
    let entries: Vec<u64> = (0..p).map(|m| f(m) % p).collect();
    encode_lut(&entries, params)
}

/// Mask then body, each switched to `[0, 2N)`.
pub fn mod_switch_lwe(ct: &LweCiphertext, big_n: usize) -> Vec<usize> {
    ct.mask
        .iter()
        .chain(core::iter::once(&ct.body))
        .map(|&a| mod_switch(a, 2 * big_n))
        .collect()
}

/// `ACC = X^(-b') lut`, then `ACC = CMux(bsk_i, ACC, X^(a'_i) ACC)` for every
/// short-key position.
pub fn blind_rotate(
    lut: &LookupTable,
    msct: &[usize],
    bsk: &BootstrappingKey,
    plan: &FftPlan,
) -> Result<GlweCiphertext> {
    blind_rotate_counted(lut, msct, bsk, plan, &mut OpCounters::default())
}

pub fn blind_rotate_counted(
    lut: &LookupTable,
    msct: &[usize],
    bsk: &BootstrappingKey,
    plan: &FftPlan,
    counters: &mut OpCounters,
) -> Result<GlweCiphertext> {
    if msct.len() != bsk.len() + 1 {
        return Err(Error::DimensionMismatch {
            expected: bsk.len() + 1,
            got: msct.len(),
        });
    }
    let two_n = 2 * plan.degree();
    let (mask, body) = msct.split_at(bsk.len());
    let mut acc = lut.encoded.monomial_mul((two_n - body[0] % two_n) % two_n);
    for (g, &a) in bsk.ggsw().iter().zip(mask) {
        let rotated = acc.monomial_mul(a % two_n);
        acc = cmux_counted(g, &acc, &rotated, plan, counters)?;
    }
    Ok(acc)
}

/// LWE encryption (under the flattened GLWE key) of the constant
/// coefficient of `c`'s plaintext.
pub fn sample_extract(c: &GlweCiphertext) -> LweCiphertext {
    let n = c.degree();
    let mut mask = Vec::with_capacity(c.k() * n);
    for a in &c.mask {
        let co = a.coeffs();
        mask.push(co[0]);
        mask.extend((1..n).map(|j| -co[n - j]));
    }
    LweCiphertext {
        mask,
        body: c.body.coeffs()[0],
        dim: LweDim::Long,
    }
}

/// Key-switching-first programmable bootstrap: KS, MS, BR, SE.
pub fn pbs(ct: &LweCiphertext, lut: &LookupTable, keys: &EvaluationKeys) -> Result<LweCiphertext> {
    pbs_counted(ct, lut, keys, &mut OpCounters::default())
}

pub fn pbs_counted(
    ct: &LweCiphertext,
    lut: &LookupTable,
    keys: &EvaluationKeys,
    counters: &mut OpCounters,
) -> Result<LweCiphertext> {
    let short = key_switch_counted(ct, &keys.ksk, counters)?;
    let msct = mod_switch_lwe(&short, keys.params.big_n);
    counters.mod_switches += 1;
    let acc = blind_rotate_counted(lut, &msct, &keys.bsk, &keys.plan, counters)?;
    counters.sample_extracts += 1;
    counters.pbs += 1;
    Ok(sample_extract(&acc))
}
