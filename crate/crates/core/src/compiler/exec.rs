//! Encrypted execution of a lowered graph.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::lower::{LinOp, LoweredGraph, PrimOp};
use crate::error::{Error, ProgramErrorKind, Result};
use crate::tfhe::noise::stream_rng;
use crate::tfhe::{
    blind_rotate_counted, decrypt, encrypt, key_switch_counted, lwe_add, lwe_mul_const, mod_switch_lwe, sample_extract,
    EvaluationKeys, GlweCiphertext, LookupTable, LweCiphertext, OpCounters, SecretKeys, Seed, TfheParams,
};

/// First RNG stream used for input encryption; keygen owns the streams
/// below it.
const STREAM_INPUTS: u64 = 1 << 32;

enum Value {
    Lwe(LweCiphertext),
    Switched(Vec<usize>),
    Glwe(GlweCiphertext),
}

fn wrong_kind(id: usize) -> Error {
    Error::ScheduleMismatch(format!("node {id} consumes a value of the wrong kind"))
}

fn lwe(values: &[Option<Value>], id: usize) -> Result<&LweCiphertext> {
    match &values[id] {
        Some(Value::Lwe(c)) => Ok(c),
        _ => Err(wrong_kind(id)),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExecStats {
    pub counters: OpCounters,
    /// Accumulator polynomials encoded, one per registry entry in use.
    pub lut_encodings: usize,
}

/// Evaluates `lg` on encrypted inputs, keyed by input tensor id. Evaluation
/// draws no randomness, so equal inputs and keys give equal outputs.
pub fn execute(
    lg: &LoweredGraph,
    keys: &EvaluationKeys,
    inputs: &BTreeMap<String, Vec<LweCiphertext>>,
) -> Result<(BTreeMap<String, Vec<LweCiphertext>>, ExecStats)> {
    let params = &keys.params;
    let mut stats = ExecStats::default();
    let mut luts: Vec<Option<LookupTable>> = lg.accumulators.iter().map(|_| None).collect();
    let mut values: Vec<Option<Value>> = lg.nodes.iter().map(|_| None).collect();
    for t in &lg.inputs {
        let given = inputs
            .get(&t.id)
            .ok_or_else(|| Error::program(&t.id, ProgramErrorKind::Input(String::from("missing ciphertexts"))))?;
        if given.len() != t.values.len() {
            return Err(Error::program(
                &t.id,
                ProgramErrorKind::Input(format!("{} ciphertexts for {} elements", given.len(), t.values.len())),
            ));
        }
        for (&id, ct) in t.values.iter().zip(given) {
            values[id] = Some(Value::Lwe(ct.clone()));
        }
    }
    for (id, node) in lg.nodes.iter().enumerate() {
        let v = match node.op {
            PrimOp::Input => continue,
            PrimOp::Lin { op } => Value::Lwe(match op {
                LinOp::Add => lwe_add(lwe(&values, node.inputs[0])?, lwe(&values, node.inputs[1])?)?,
                LinOp::MulConst(c) => lwe_mul_const(lwe(&values, node.inputs[0])?, c),
            }),
            PrimOp::Ks { .. } => Value::Lwe(key_switch_counted(
                lwe(&values, node.inputs[0])?,
                &keys.ksk,
                &mut stats.counters,
            )?),
            PrimOp::Ms => {
                stats.counters.mod_switches += 1;
                Value::Switched(mod_switch_lwe(lwe(&values, node.inputs[0])?, params.big_n))
            }
            PrimOp::Br { acc } => {
                let msct = match &values[node.inputs[0]] {
                    Some(Value::Switched(m)) => m,
                    _ => return Err(wrong_kind(node.inputs[0])),
                };
                if luts[acc].is_none() {
                    let entry = &lg.accumulators[acc];
                    luts[acc] = Some(LookupTable::encode(
                        &entry.entries,
                        params.width,
                        params.big_n,
                        params.k,
                    )?);
                    stats.lut_encodings += 1;
                }
                let lut = luts[acc].as_ref().expect("encoded above");
                stats.counters.pbs += 1;
                Value::Glwe(blind_rotate_counted(
                    lut,
                    msct,
                    &keys.bsk,
                    &keys.plan,
                    &mut stats.counters,
                )?)
            }
            PrimOp::Se => {
                stats.counters.sample_extracts += 1;
                match &values[node.inputs[0]] {
                    Some(Value::Glwe(c)) => Value::Lwe(sample_extract(c)),
                    _ => return Err(wrong_kind(node.inputs[0])),
                }
            }
        };
        values[id] = Some(v);
    }
    let mut outputs = BTreeMap::new();
    for t in &lg.outputs {
        let cts = t
            .values
            .iter()
            .map(|&id| lwe(&values, id).cloned())
            .collect::<Result<Vec<_>>>()?;
        outputs.insert(t.id.clone(), cts);
    }
    Ok((outputs, stats))
}

/// Encrypts cleartext inputs under the long key; tensor `i` (in id order)
/// uses its own RNG stream, so the ciphertexts depend only on the seed.
pub fn encrypt_inputs(
    values: &BTreeMap<String, Vec<u64>>,
    secret: &SecretKeys,
    params: &TfheParams,
    seed: Seed,
) -> Result<BTreeMap<String, Vec<LweCiphertext>>> {
    values
        .iter()
        .enumerate()
        .map(|(i, (id, ms))| {
            let mut rng = stream_rng(seed, STREAM_INPUTS + i as u64);
            let cts = ms
                .iter()
                .map(|&m| encrypt(m, &secret.long, params, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            Ok((id.clone(), cts))
        })
        .collect()
}

pub fn decrypt_outputs(
    outputs: &BTreeMap<String, Vec<LweCiphertext>>,
    secret: &SecretKeys,
    params: &TfheParams,
) -> Result<BTreeMap<String, Vec<u64>>> {
    outputs
        .iter()
        .map(|(id, cts)| {
            let ms = cts
                .iter()
                .map(|c| decrypt(c, &secret.long, params))
                .collect::<Result<Vec<_>>>()?;
            Ok((id.clone(), ms))
        })
        .collect()
}
