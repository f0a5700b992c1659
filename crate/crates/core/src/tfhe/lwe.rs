use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use super::noise::{gaussian_torus, uniform_bit, uniform_torus};
use super::params::TfheParams;
use crate::error::{Error, Result};
use crate::torus::Torus;

/// Which key an LWE ciphertext is encrypted under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LweDim {
    /// Dimension `n`, output of key switching.
    Short,
    /// Dimension `k N`, the flattened GLWE key.
    Long,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LweCiphertext {
    pub mask: Vec<Torus>,
    pub body: Torus,
    pub dim: LweDim,
}

/// Binary LWE secret key.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LweSecretKey {
    bits: Vec<u8>,
    dim: LweDim,
}

impl LweSecretKey {
    pub fn generate<R: RngCore>(len: usize, dim: LweDim, rng: &mut R) -> Self {
        LweSecretKey {
            bits: (0..len).map(|_| uniform_bit(rng)).collect(),
            dim,
        }
    }

    pub fn from_bits(bits: Vec<u8>, dim: LweDim) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        LweSecretKey { bits, dim }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn dim(&self) -> LweDim {
        self.dim
    }
}

impl LweCiphertext {
    /// Noiseless encryption of `body` with an all-zero mask.
    pub fn trivial(body: Torus, len: usize, dim: LweDim) -> Self {
        LweCiphertext {
            mask: vec![Torus::ZERO; len],
            body,
            dim,
        }
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    fn check_same_shape(&self, other: &LweCiphertext) -> Result<()> {
        if self.dim != other.dim || self.mask.len() != other.mask.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mask.len(),
                got: other.mask.len(),
            });
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &LweCiphertext) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, &b) in self.mask.iter_mut().zip(&other.mask) {
            *a += b;
        }
        self.body += other.body;
        Ok(())
    }

    pub fn sub_assign(&mut self, other: &LweCiphertext) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, &b) in self.mask.iter_mut().zip(&other.mask) {
            *a -= b;
        }
        self.body -= other.body;
        Ok(())
    }

    pub fn scale(&mut self, c: i64) {
        for a in self.mask.iter_mut() {
            *a = a.scalar_mul(c);
        }
        self.body = self.body.scalar_mul(c);
    }

    /// Adds a plaintext torus value to the body.
    pub fn add_plain(&mut self, t: Torus) {
        self.body += t;
    }
}

pub fn lwe_add(a: &LweCiphertext, b: &LweCiphertext) -> Result<LweCiphertext> {
    let mut out = a.clone();
    out.add_assign(b)?;
    Ok(out)
}

pub fn lwe_mul_const(a: &LweCiphertext, c: i64) -> LweCiphertext {
    let mut out = a.clone();
    out.scale(c);
    out
}

/// `m * delta`, with `m` reduced modulo `2p` (so negative and wrapped
/// plaintexts keep their torus meaning).
pub fn encode(m: u64, params: &TfheParams) -> Torus {
    Torus(m.wrapping_mul(params.delta()))
}

/// Nearest message to a phase, modulo `p`.
pub fn decode(phase: Torus, params: &TfheParams) -> u64 {
    let shift = 64 - params.width - params.padding_bits;
    let rounded = phase.0.wrapping_add(1u64 << (shift - 1)) >> shift;
    rounded & (params.message_space() as u64 - 1)
}

/// `body - <mask, key>`.
pub fn lwe_phase(ct: &LweCiphertext, key: &LweSecretKey) -> Result<Torus> {
    if ct.mask.len() != key.len() || ct.dim != key.dim {
        return Err(Error::DimensionMismatch {
            expected: key.len(),
            got: ct.mask.len(),
        });
    }
    let dot = ct
        .mask
        .iter()
        .zip(&key.bits)
        .filter(|(_, &s)| s == 1)
        .fold(Torus::ZERO, |acc, (&a, _)| acc + a);
    Ok(ct.body - dot)
}

/// Encrypts the torus value `mu` with Gaussian noise `std`.
pub fn encrypt_torus<R: RngCore>(mu: Torus, key: &LweSecretKey, std: f64, rng: &mut R) -> LweCiphertext {
    let mask: Vec<Torus> = (0..key.len()).map(|_| uniform_torus(rng)).collect();
    let dot = mask
        .iter()
        .zip(&key.bits)
        .filter(|(_, &s)| s == 1)
        .fold(Torus::ZERO, |acc, (&a, _)| acc + a);
    LweCiphertext {
        mask,
        body: dot + mu + gaussian_torus(rng, std),
        dim: key.dim,
    }
}

/// Encrypts message `m < 2^width` under `key`, using the noise level that
/// belongs to the key's dimension.
pub fn encrypt<R: RngCore>(m: u64, key: &LweSecretKey, params: &TfheParams, rng: &mut R) -> Result<LweCiphertext> {
    if m >= params.message_space() as u64 {
        return Err(Error::MessageOutOfRange {
            message: m,
            width: params.width,
        });
    }
    let std = match key.dim {
        LweDim::Short => params.noise_std_short,
        LweDim::Long => params.noise_std_long,
    };
    Ok(encrypt_torus(encode(m, params), key, std, rng))
}

pub fn decrypt(ct: &LweCiphertext, key: &LweSecretKey, params: &TfheParams) -> Result<u64> {
    Ok(decode(lwe_phase(ct, key)?, params))
}

/// Signed distance between the phase of `ct` and the encoding of `m`, as a
/// torus fraction.
pub fn phase_error(ct: &LweCiphertext, key: &LweSecretKey, m: u64, params: &TfheParams) -> Result<f64> {
    Ok((lwe_phase(ct, key)? - encode(m, params)).to_signed_fraction())
}
