//! Binary key files.
//!
//! Layout, integers little-endian:
//!
//! | bytes | field                                         |
//! |-------|-----------------------------------------------|
//! | 8     | magic `TAURKEYS`                              |
//! | 4     | format version                                |
//! | 32    | SHA-256 of the parameter set (canonical JSON) |
//! | 1     | FFT mode: 0 reference, 1 fixed48              |
//! | 8     | payload length                                |
//! | n     | payload (bincode)                             |
//! | 32    | SHA-256 of the payload                        |

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use taurus_core::fft::{FftMode, FftPlan};
use taurus_core::tfhe::{
    BootstrappingKey, EvaluationKeys, GgswCiphertext, GlweCiphertext, GlweSecretKey, KeySet, KeySwitchingKey,
    LweCiphertext, LweSecretKey, SecretKeys, TfheParams,
};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"TAURKEYS";
pub const KEY_FILE_VERSION: u32 = 1;
const HEADER: usize = 8 + 4 + 32 + 1 + 8;

pub fn params_hash(p: &TfheParams) -> [u8; 32] {
    Sha256::digest(serde_json::to_vec(p).expect("params serialize")).into()
}

#[derive(Serialize, Deserialize)]
struct Payload {
    params: TfheParams,
    short: LweSecretKey,
    glwe: GlweSecretKey,
    ksk: Vec<LweCiphertext>,
    bsk: Vec<Vec<GlweCiphertext>>,
}

pub fn encode_keys(keys: &KeySet) -> Vec<u8> {
    let p = &keys.eval.params;
    let payload = Payload {
        params: p.clone(),
        short: keys.secret.short.clone(),
        glwe: keys.secret.glwe.clone(),
        ksk: keys.eval.ksk.entries().to_vec(),
        bsk: keys.eval.bsk.ggsw().iter().map(|g| g.rows().to_vec()).collect(),
    };
    let body = bincode::serialize(&payload).expect("keys serialize");
    let mut out = Vec::with_capacity(HEADER + body.len() + 32);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&KEY_FILE_VERSION.to_le_bytes());
    out.extend_from_slice(&params_hash(p));
    out.push(match keys.eval.bsk.mode() {
        FftMode::Reference => 0,
        FftMode::Fixed48 => 1,
    });
    out.extend_from_slice(&(body.len() as u64).to_le_bytes());
    out.extend_from_slice(&body);
    out.extend_from_slice(&Sha256::digest(&body));
    out
}

/// Decodes a key file; with `expect`, also checks it was made for those
/// parameters.
pub fn decode_keys(bytes: &[u8], path: &Path, expect: Option<&TfheParams>) -> Result<KeySet> {
    let bad = |message: String| Error::KeyFile {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < HEADER + 32 || bytes[..8] != MAGIC {
        return Err(bad("not a key file".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != KEY_FILE_VERSION {
        return Err(bad(format!("format version {version}, expected {KEY_FILE_VERSION}")));
    }
    let hash: [u8; 32] = bytes[12..44].try_into().expect("32 bytes");
    if let Some(p) = expect {
        if hash != params_hash(p) {
            return Err(bad(format!("made for other parameters than `{}`", p.name)));
        }
    }
    let mode = match bytes[44] {
        0 => FftMode::Reference,
        1 => FftMode::Fixed48,
        m => return Err(bad(format!("unknown FFT mode {m}"))),
    };
    let len = u64::from_le_bytes(bytes[45..53].try_into().expect("8 bytes")) as usize;
    if bytes.len() != HEADER + len + 32 {
        return Err(bad("truncated".into()));
    }
    let body = &bytes[HEADER..HEADER + len];
    if Sha256::digest(body).as_slice() != &bytes[HEADER + len..] {
        return Err(bad("checksum mismatch".into()));
    }
    let payload: Payload = bincode::deserialize(body).map_err(|e| bad(e.to_string()))?;
    let p = payload.params;
    if params_hash(&p) != hash {
        return Err(bad("header and payload disagree on parameters".into()));
    }
    let plan = FftPlan::new(p.big_n)?;
    let ggsw = payload
        .bsk
        .into_iter()
        .map(|rows| GgswCiphertext::from_rows(rows, p.pbs_gadget))
        .collect::<taurus_core::Result<Vec<_>>>()?;
    let bsk = BootstrappingKey::from_ggsw(ggsw, &plan, mode)?;
    let ksk = KeySwitchingKey::from_entries(p.ks_gadget, p.k * p.big_n, payload.ksk)?;
    let long = payload.glwe.flatten();
    Ok(KeySet {
        secret: SecretKeys {
            short: payload.short,
            glwe: payload.glwe,
            long,
        },
        eval: EvaluationKeys {
            params: p,
            plan,
            bsk,
            ksk,
        },
    })
}
