//! Plaintext reference semantics of a program under given parameters.
//!
//! Values live modulo `2p` (the message space plus the padding bit), which
//! is what the ciphertexts actually carry. A table lookup on a value
//! `v >= p` returns `-table[v - p]`, the negacyclic image; outputs are read
//! modulo `p`, like decryption.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::graph::{Op, ProgramGraph};
use crate::error::{Error, ProgramErrorKind, Result};
use crate::tfhe::TfheParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub node: String,
    pub severity: Severity,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interpretation {
    pub outputs: BTreeMap<String, Vec<u64>>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Interpretation {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.severity == Severity::Error)
    }
}

/// Failure probability above which a value is reported as likely to
/// decode wrongly.
pub const DECODE_RISK: f64 = 1.0 / (1u64 << 20) as f64;

/// Probability that a phase with variance `var` lands outside the
/// decoding window.
fn failure(var: f64, half_window: f64) -> f64 {
    if var <= 0.0 {
        0.0
    } else {
        libm::erfc(half_window / libm::sqrt(2.0 * var))
    }
}

/// Runs `g` on cleartext inputs and estimates, element by element, the
/// noise the encrypted run would carry.
pub fn interpret(g: &ProgramGraph, inputs: &BTreeMap<String, Vec<u64>>, params: &TfheParams) -> Result<Interpretation> {
    let p = params.message_space() as u64;
    let two_p = 2 * p;
    let est = params.noise_estimate();
    let fresh = est.input;
    let pbs_extra = est.key_switch + est.mod_switch;

    let mut diagnostics = Vec::new();
    let mut values: Vec<Vec<u64>> = Vec::with_capacity(g.nodes().len());
    let mut vars: Vec<Vec<f64>> = Vec::with_capacity(g.nodes().len());
    let mut outputs = BTreeMap::new();
    for node in g.nodes() {
        let mut warn = |severity: Severity, message: String| {
            if !diagnostics
                .iter()
                .any(|d: &Diagnostic| d.node == node.id && d.message == message)
            {
                diagnostics.push(Diagnostic {
                    node: node.id.clone(),
                    severity,
                    message,
                });
            }
        };
        let (vals, var): (Vec<u64>, Vec<f64>) = match &node.op {
            Op::Input => {
                let given = inputs
                    .get(&node.id)
                    .ok_or_else(|| Error::program(&node.id, ProgramErrorKind::Input(String::from("missing value"))))?;
                if given.len() != node.numel() {
                    return Err(Error::program(
                        &node.id,
                        ProgramErrorKind::Input(format!("{} values for {} elements", given.len(), node.numel())),
                    ));
                }
                if let Some(&m) = given.iter().find(|&&m| m >= p) {
                    return Err(Error::MessageOutOfRange {
                        message: m,
                        width: params.width,
                    });
                }
                (given.clone(), given.iter().map(|_| fresh).collect())
            }
            Op::Output => {
                let src = node.operands[0];
                let vals: Vec<u64> = values[src].iter().map(|v| v % p).collect();
                outputs.insert(node.id.clone(), vals.clone());
                let worst = vars[src].iter().copied().fold(0.0, f64::max);
                let risk = failure(worst, est.half_window);
                if risk > DECODE_RISK {
                    warn(
                        Severity::Error,
                        format!("decode failure risk {risk:.2e}: noise std {:.2e}", libm::sqrt(worst)),
                    );
                }
                (vals, vars[src].clone())
            }
            Op::Add => {
                let (a, b) = (node.operands[0], node.operands[1]);
                let mut wrapped = false;
                let vals = values[a]
                    .iter()
                    .zip(&values[b])
                    .map(|(&x, &y)| {
                        wrapped |= x + y >= two_p;
                        (x + y) % two_p
                    })
                    .collect();
                if wrapped {
                    warn(Severity::Warning, String::from("sum wraps past the padding bit"));
                }
                let var = vars[a].iter().zip(&vars[b]).map(|(x, y)| x + y).collect();
                (vals, var)
            }
            Op::MulConst(c) => {
                let x = node.operands[0];
                let c_mod = c.rem_euclid(two_p as i64) as u64;
                let mut wrapped = false;
                let vals = values[x]
                    .iter()
                    .map(|&v| {
                        let exact = v as i128 * *c as i128;
                        wrapped |= !(0..two_p as i128).contains(&exact);
                        (v * c_mod) % two_p
                    })
                    .collect();
                if wrapped {
                    warn(Severity::Warning, format!("product by {c} wraps past the padding bit"));
                }
                let c2 = (*c as f64) * (*c as f64);
                (vals, vars[x].iter().map(|v| v * c2).collect())
            }
            Op::Lut(t) => {
                let table = &g.tables()[t];
                if table.len() as u64 != p {
                    return Err(Error::LutLength {
                        expected: p as usize,
                        got: table.len(),
                    });
                }
                let x = node.operands[0];
                let mut negacyclic = false;
                let vals = values[x]
                    .iter()
                    .map(|&v| {
                        if v < p {
                            table[v as usize]
                        } else {
                            negacyclic = true;
                            (two_p - table[(v - p) as usize]) % two_p
                        }
                    })
                    .collect();
                if negacyclic {
                    warn(
                        Severity::Warning,
                        String::from("lookup input uses the padding bit; result is negated"),
                    );
                }
                let worst = vars[x].iter().copied().fold(0.0, f64::max);
                let risk = failure(worst + pbs_extra, est.half_window);
                if risk > DECODE_RISK {
                    warn(
                        Severity::Error,
                        format!(
                            "decode failure risk {risk:.2e} at bootstrap input: noise std {:.2e}",
                            libm::sqrt(worst)
                        ),
                    );
                }
                (vals, values[x].iter().map(|_| est.output()).collect())
            }
        };
        values.push(vals);
        vars.push(var);
    }
    Ok(Interpretation { outputs, diagnostics })
}
