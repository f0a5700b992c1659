//! Multi-bit TFHE with one padding bit and key-switching-first PBS.

mod glwe;
mod keys;
mod lwe;
pub mod noise;
mod params;
mod pbs;

use core::ops::AddAssign;

use serde::{Deserialize, Serialize};

pub use glwe::{
    cmux, encrypt_ggsw, encrypt_glwe, external_product, external_product_schoolbook, glwe_phase, GgswCiphertext,
    GgswSpectrum, GlweCiphertext, GlweSecretKey,
};
pub use keys::{
    generate_secret_keys, key_switch, key_switch_counted, keygen, BootstrappingKey, EvaluationKeys, KeySet,
    KeySwitchingKey, SecretKeys,
};
pub use lwe::{
    decode, decrypt, encode, encrypt, encrypt_torus, lwe_add, lwe_mul_const, lwe_phase, phase_error, LweCiphertext,
    LweDim, LweSecretKey,
};
pub use noise::Seed;
pub use params::{desk, desk_scaled, preset, preset_names, toy, workload_sets, NoiseEstimate, TfheParams, MAX_WIDTH};
pub use pbs::{
    blind_rotate, blind_rotate_counted, encode_lut, lut_from_fn, mod_switch_lwe, pbs, pbs_counted, sample_extract,
    LookupTable,
};

/// Primitive operation counts collected during evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    pub pbs: usize,
    pub key_switches: usize,
    pub mod_switches: usize,
    pub cmux: usize,
    pub external_products: usize,
    pub sample_extracts: usize,
    pub forward_ffts: usize,
    pub inverse_ffts: usize,
    pub macs: usize,
}

impl AddAssign for OpCounters {
    fn add_assign(&mut self, o: OpCounters) {
        self.pbs += o.pbs;
        self.key_switches += o.key_switches;
        self.mod_switches += o.mod_switches;
        self.cmux += o.cmux;
        self.external_products += o.external_products;
        self.sample_extracts += o.sample_extracts;
        self.forward_ffts += o.forward_ffts;
        self.inverse_ffts += o.inverse_ffts;
        self.macs += o.macs;
    }
}
