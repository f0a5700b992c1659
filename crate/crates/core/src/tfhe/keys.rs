use alloc::vec::Vec;

use rand_core::RngCore;

use super::glwe::{encrypt_ggsw, GgswCiphertext, GlweSecretKey};
use super::lwe::{encrypt_torus, LweCiphertext, LweDim, LweSecretKey};
use super::noise::{stream_rng, Seed};
use super::params::TfheParams;
use super::OpCounters;
use crate::error::{Error, Result};
use crate::fft::{FftMode, FftPlan};
use crate::torus::{gadget_decompose, GadgetParams, Torus};

const STREAM_SHORT_KEY: u64 = 0;
const STREAM_GLWE_KEY: u64 = 1;
const STREAM_BSK: u64 = 2;
const STREAM_KSK: u64 = 3;

/// Encryptions of `s'_i * 2^(64 - (l+1) base_log)` under the short key,
/// stored level-major: entry `l * n_long + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct KeySwitchingKey {
    gadget: GadgetParams,
    n_long: usize,
    entries: Vec<LweCiphertext>,
}

impl KeySwitchingKey {
    pub fn generate<R: RngCore>(
        long_key: &LweSecretKey,
        short_key: &LweSecretKey,
        gadget: GadgetParams,
        std: f64,
        rng: &mut R,
    ) -> Self {
        let mut entries = Vec::with_capacity(long_key.len() * gadget.depth as usize);
        for level in 1..=gadget.depth {
            let w = gadget.level_weight(level);
            for &bit in long_key.bits() {
                let mu = if bit == 1 { w } else { Torus::ZERO };
                entries.push(encrypt_torus(mu, short_key, std, rng));
            }
        }
        KeySwitchingKey {
            gadget,
            n_long: long_key.len(),
            entries,
        }
    }

    pub fn from_entries(gadget: GadgetParams, n_long: usize, entries: Vec<LweCiphertext>) -> Result<Self> {
        if entries.len() != n_long * gadget.depth as usize {
            return Err(Error::DimensionMismatch {
                expected: n_long * gadget.depth as usize,
                got: entries.len(),
            });
        }
        Ok(KeySwitchingKey {
            gadget,
            n_long,
            entries,
        })
    }

    pub fn gadget(&self) -> GadgetParams {
        self.gadget
    }

    pub fn n_long(&self) -> usize {
        self.n_long
    }

    pub fn entries(&self) -> &[LweCiphertext] {
        &self.entries
    }

    pub fn entry(&self, level: usize, index: usize) -> &LweCiphertext {
        &self.entries[level * self.n_long + index]
    }

    /// Output dimension.
    pub fn n_short(&self) -> usize {
        self.entries[0].len()
    }
}

/// One prepared GGSW per short-key bit.
#[derive(Clone, Debug, PartialEq)]
pub struct BootstrappingKey {
    ggsw: Vec<GgswCiphertext>,
    mode: FftMode,
}

impl BootstrappingKey {
    pub fn generate<R: RngCore>(
        short_key: &LweSecretKey,
        glwe_key: &GlweSecretKey,
        params: &TfheParams,
        plan: &FftPlan,
        mode: FftMode,
        rng: &mut R,
    ) -> Result<Self> {
        let ggsw = short_key
            .bits()
            .iter()
            .map(|&bit| {
                let mut g = encrypt_ggsw(
                    bit as i64,
                    glwe_key,
                    params.pbs_gadget,
                    params.noise_std_long,
                    plan,
                    rng,
                )?;
                g.prepare(plan, mode)?;
                Ok(g)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BootstrappingKey { ggsw, mode })
    }

    /// Wraps raw GGSW ciphertexts, computing their spectra for `mode`.
    pub fn from_ggsw(mut ggsw: Vec<GgswCiphertext>, plan: &FftPlan, mode: FftMode) -> Result<Self> {
        for g in ggsw.iter_mut() {
            g.prepare(plan, mode)?;
        }
        Ok(BootstrappingKey { ggsw, mode })
    }

    pub fn ggsw(&self) -> &[GgswCiphertext] {
        &self.ggsw
    }

    pub fn len(&self) -> usize {
        self.ggsw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ggsw.is_empty()
    }

    pub fn mode(&self) -> FftMode {
        self.mode
    }
}

/// Client-side secrets.
#[derive(Clone, Debug, PartialEq)]
pub struct SecretKeys {
    pub short: LweSecretKey,
    pub glwe: GlweSecretKey,
    /// Flattened GLWE key; encrypts program inputs and PBS outputs.
    pub long: LweSecretKey,
}

/// Server-side evaluation material.
#[derive(Clone, Debug)]
pub struct EvaluationKeys {
    pub params: TfheParams,
    pub plan: FftPlan,
    pub bsk: BootstrappingKey,
    pub ksk: KeySwitchingKey,
}

#[derive(Clone, Debug)]
pub struct KeySet {
    pub secret: SecretKeys,
    pub eval: EvaluationKeys,
}

pub fn generate_secret_keys(params: &TfheParams, seed: Seed) -> Result<SecretKeys> {
    params.validate()?;
    let short = LweSecretKey::generate(params.n, LweDim::Short, &mut stream_rng(seed, STREAM_SHORT_KEY));
    let glwe = GlweSecretKey::generate(params.k, params.big_n, &mut stream_rng(seed, STREAM_GLWE_KEY));
    let long = glwe.flatten();
    Ok(SecretKeys { short, glwe, long })
}

/// Deterministic key generation: the same parameters, seed and mode give
/// bit-identical keys.
pub fn keygen(params: &TfheParams, seed: Seed, mode: FftMode) -> Result<KeySet> {
    let secret = generate_secret_keys(params, seed)?;
    let plan = FftPlan::new(params.big_n)?;
    let bsk = BootstrappingKey::generate(
        &secret.short,
        &secret.glwe,
        params,
        &plan,
        mode,
        &mut stream_rng(seed, STREAM_BSK),
    )?;
    let ksk = KeySwitchingKey::generate(
        &secret.long,
        &secret.short,
        params.ks_gadget,
        params.noise_std_short,
        &mut stream_rng(seed, STREAM_KSK),
    );
    Ok(KeySet {
        secret,
        eval: EvaluationKeys {
            params: params.clone(),
            plan,
            bsk,
            ksk,
        },
    })
}

/// Long-to-short key switch: `(0, b) - sum_{i,l} digit_l(a_i) KSK[l][i]`.
pub fn key_switch(ct: &LweCiphertext, ksk: &KeySwitchingKey) -> Result<LweCiphertext> {
    key_switch_counted(ct, ksk, &mut OpCounters::default())
}

pub fn key_switch_counted(
    ct: &LweCiphertext,
    ksk: &KeySwitchingKey,
    counters: &mut OpCounters,
) -> Result<LweCiphertext> {
    if ct.dim != LweDim::Long || ct.len() != ksk.n_long {
        return Err(Error::DimensionMismatch {
            expected: ksk.n_long,
            got: ct.len(),
        });
    }
    let n = ksk.n_short();
    let mut out = LweCiphertext::trivial(ct.body, n, LweDim::Short);
    for (i, &a) in ct.mask.iter().enumerate() {
        for (level, &digit) in gadget_decompose(a, ksk.gadget).iter().enumerate() {
            if digit == 0 {
                continue;
            }
            let e = ksk.entry(level, i);
            for (o, &m) in out.mask.iter_mut().zip(&e.mask) {
                *o -= m.scalar_mul(digit);
            }
            out.body -= e.body.scalar_mul(digit);
        }
    }
    counters.key_switches += 1;
    Ok(out)
}
