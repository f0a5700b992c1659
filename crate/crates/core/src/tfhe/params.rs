use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{check_degree, GadgetParams};

/// Largest supported message width.
pub const MAX_WIDTH: u32 = 10;

/// Multi-bit TFHE parameter set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfheParams {
    #[serde(default)]
    pub name: String,
    /// Short LWE dimension.
    pub n: usize,
    /// GLWE polynomial degree `N`.
    #[serde(rename = "N")]
    pub big_n: usize,
    /// GLWE dimension.
    pub k: usize,
    pub pbs_gadget: GadgetParams,
    pub ks_gadget: GadgetParams,
    /// Noise standard deviations as torus fractions.
    pub noise_std_short: f64,
    pub noise_std_long: f64,
    /// Message bits.
    pub width: u32,
    #[serde(default = "one")]
    pub padding_bits: u32,
}

fn one() -> u32 {
    1
}

impl TfheParams {
    pub fn validate(&self) -> Result<()> {
        check_degree(self.big_n)?;
        self.pbs_gadget.validate()?;
        self.ks_gadget.validate()?;
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.n == 0 || self.k == 0 {
            return bad("n and k must be positive".to_string());
        }
        if self.width == 0 || self.width > MAX_WIDTH {
            return bad(format!("width {} outside 1..={MAX_WIDTH}", self.width));
        }
        if self.padding_bits != 1 {
            return bad("exactly one padding bit is supported".to_string());
        }
        if self.big_n < self.message_space() {
            return bad(format!(
                "N={} cannot hold {} LUT boxes",
                self.big_n,
                self.message_space()
            ));
        }
        for s in [self.noise_std_short, self.noise_std_long] {
            if !(0.0..0.25).contains(&s) {
                return bad(format!("noise std {s} outside [0, 0.25)"));
            }
        }
        Ok(())
    }

    pub fn n_long(&self) -> usize {
        self.k * self.big_n
    }

    /// `p = 2^width`.
    pub fn message_space(&self) -> usize {
        1 << self.width
    }

    /// Torus scaling of one message step, `2^(64 - width - padding)`.
    pub fn delta(&self) -> u64 {
        1u64 << (64 - self.width - self.padding_bits)
    }

    /// LUT box size `N / p`.
    pub fn box_size(&self) -> usize {
        self.big_n / self.message_space()
    }

    /// Same parameters with every noise deviation set to zero.
    pub fn noiseless(&self) -> Self {
        TfheParams {
            noise_std_short: 0.0,
            noise_std_long: 0.0,
            ..self.clone()
        }
    }

    /// Analytic noise model for one PBS on a fresh input.
    pub fn noise_estimate(&self) -> NoiseEstimate {
        let sq = |x: f64| x * x;
        let two_pow = |e: i32| libm::ldexp(1.0, e);
        let n = self.n as f64;
        let nl = self.n_long() as f64;
        let big_n = self.big_n as f64;
        let ks_prec = self.ks_gadget.precision_bits() as i32;
        let pbs_prec = self.pbs_gadget.precision_bits() as i32;
        let b_ks = two_pow(self.ks_gadget.base_log as i32);
        let b = two_pow(self.pbs_gadget.base_log as i32);

        let input = sq(self.noise_std_long);
        // Digits times KSK noise, plus rounding away the low mask bits
        // (half of the key bits are set on average).
        let key_switch = nl * self.ks_gadget.depth as f64 * (sq(b_ks) + 2.0) / 12.0 * sq(self.noise_std_short)
            + nl / 2.0 * two_pow(-2 * ks_prec) / 12.0;
        let mod_switch = (1.0 + n / 2.0) * sq(1.0 / (2.0 * big_n)) / 12.0;
        let per_cmux = (self.k + 1) as f64 * self.pbs_gadget.depth as f64 * big_n * (sq(b) + 2.0) / 12.0
            * sq(self.noise_std_long)
            + (1.0 + self.k as f64 * big_n / 2.0) * two_pow(-2 * pbs_prec) / 12.0;
        NoiseEstimate {
            input,
            key_switch,
            mod_switch,
            blind_rotate: n * per_cmux,
            half_window: 1.0 / (4.0 * self.message_space() as f64),
        }
    }
}

/// Variances (torus fractions squared) contributed at each PBS step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    pub input: f64,
    pub key_switch: f64,
    pub mod_switch: f64,
    pub blind_rotate: f64,
    pub half_window: f64,
}

impl NoiseEstimate {
    /// Variance of the phase seen by blind rotation.
    pub fn rotation_input(&self) -> f64 {
        self.input + self.key_switch + self.mod_switch
    }

    /// Variance of the PBS output.
    pub fn output(&self) -> f64 {
        self.blind_rotate
    }

    /// Probability that a fresh input decodes wrongly after one PBS, or
    /// that its output does, whichever is worse.
    pub fn error_probability(&self) -> f64 {
        let p = |var: f64| {
            if var <= 0.0 {
                0.0
            } else {
                libm::erfc(self.half_window / libm::sqrt(2.0 * var))
            }
        };
        p(self.rotation_input() + self.output()).max(p(self.output()))
    }
}

fn gadget(base_log: u32, depth: u32) -> GadgetParams {
    GadgetParams { base_log, depth }
}

/// Full-size parameter sets of the evaluated workloads: `n`, `(N, k)` and
/// width describe the workloads; gadgets and noise are our choice.
/// Single-level decompositions keep key switching shorter than blind rotation
/// and the key streams within two HBM stacks on the machine model.
pub fn workload_sets() -> Vec<TfheParams> {
    let rows: [(&str, usize, usize, u32); 7] = [
        ("cnn-20", 737, 2048, 6),
        ("cnn-50", 828, 4096, 6),
        ("decision-tree", 1070, 65536, 9),
        ("gpt2", 1003, 32768, 6),
        ("gpt2-12head", 1009, 32768, 6),
        ("knn", 1058, 65536, 9),
        ("xgboost", 1025, 32768, 8),
    ];
    rows.iter()
        .map(|&(name, n, big_n, width)| TfheParams {
            name: name.to_string(),
            n,
            big_n,
            k: 1,
            pbs_gadget: gadget(26, 1),
            ks_gadget: gadget(20, 1),
            noise_std_short: libm::ldexp(1.0, -41),
            noise_std_long: libm::ldexp(1.0, -52),
            width,
            padding_bits: 1,
        })
        .collect()
}

/// Default desk-scale set: width 3, `n = 185`, `N = 1024`, `k = 1`.
pub fn desk() -> TfheParams {
    TfheParams {
        name: "desk".to_string(),
        n: 185,
        big_n: 1024,
        k: 1,
        pbs_gadget: gadget(8, 2),
        ks_gadget: gadget(4, 4),
        noise_std_short: libm::ldexp(1.0, -20),
        noise_std_long: libm::ldexp(1.0, -40),
        width: 3,
        padding_bits: 1,
    }
}

/// Desk-scale copy of a full-size set: width capped at 6, `n` divided by
/// eight, `N` at most 2048, gadgets tightened to keep the failure rate below
/// `2^-20`.
pub fn desk_scaled(full: &TfheParams) -> TfheParams {
    let width = full.width.min(6);
    let big_n = if width <= 5 { 1024 } else { 2048 };
    TfheParams {
        name: format!("{}-desk", full.name),
        n: full.n.div_ceil(8),
        big_n: big_n.min(full.big_n),
        k: full.k,
        pbs_gadget: if width <= 4 { gadget(8, 2) } else { gadget(7, 3) },
        ks_gadget: gadget(4, 5),
        noise_std_short: libm::ldexp(1.0, -24),
        noise_std_long: libm::ldexp(1.0, -40),
        width,
        padding_bits: 1,
    }
}

/// Tiny set for fast tests (`N = 256`, width 2).
pub fn toy() -> TfheParams {
    TfheParams {
        name: "toy".to_string(),
        n: 32,
        big_n: 256,
        k: 1,
        pbs_gadget: gadget(8, 2),
        ks_gadget: gadget(4, 5),
        noise_std_short: libm::ldexp(1.0, -24),
        noise_std_long: libm::ldexp(1.0, -40),
        width: 2,
        padding_bits: 1,
    }
}

/// Built-in sets by name: `desk`, `toy`, each full-size name and its
/// `-desk` variant.
pub fn preset(name: &str) -> Option<TfheParams> {
    match name {
        "desk" => return Some(desk()),
        "toy" => return Some(toy()),
        _ => {}
    }
    let full = workload_sets();
    if let Some(p) = full.iter().find(|p| p.name == name) {
        return Some(p.clone());
    }
    let base = name.strip_suffix("-desk")?;
    full.iter().find(|p| p.name == base).map(desk_scaled)
}

pub fn preset_names() -> Vec<String> {
    let mut names: Vec<String> = ["desk", "toy"].iter().map(|s| s.to_string()).collect();
    for p in workload_sets() {
        names.push(format!("{}-desk", p.name));
        names.push(p.name);
    }
    names
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in preset_names() {
            let p = preset(&name).unwrap();
            p.validate().unwrap();
            assert_eq!(p.n_long(), p.k * p.big_n);
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn desk_sets_meet_failure_target() {
        let target = libm::ldexp(1.0, -20);
        let mut sets = alloc::vec![desk(), toy()];
        sets.extend(workload_sets().iter().map(desk_scaled));
        for p in sets {
            let est = p.noise_estimate();
            assert!(est.error_probability() < target, "{}: {est:?}", p.name);
            assert!(p.big_n <= 1 << 12);
        }
    }

    #[test]
    fn workload_set_failure_rates() {
        let target = libm::ldexp(1.0, -20);
        for p in workload_sets() {
            let est = p.noise_estimate();
            if p.name == "cnn-20" {
                // Mod-switch rounding alone is about a third of the window.
                assert!(est.mod_switch > 0.9 * est.rotation_input());
                assert!(est.error_probability() > target);
            } else {
                assert!(est.error_probability() < target, "{}: {est:?}", p.name);
            }
        }
    }

    #[test]
    fn workload_set_shapes() {
        let t = workload_sets();
        assert_eq!(t.len(), 7);
        let cnn = &t[0];
        assert_eq!((cnn.n, cnn.big_n, cnn.k, cnn.width), (737, 2048, 1, 6));
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = desk();
        p.width = 11;
        assert!(p.validate().is_err());
        let mut p = desk();
        p.big_n = 1000;
        assert!(p.validate().is_err());
        let mut p = desk();
        p.pbs_gadget = gadget(0, 2);
        assert!(p.validate().is_err());
    }
}
