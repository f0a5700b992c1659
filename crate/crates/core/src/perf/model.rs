//! Closed-form unit costs. Cycle counts are per ciphertext unless noted.

use super::config::{MachineConfig, XpuConfig};
use crate::tfhe::TfheParams;

/// Bytes of one 48-bit complex Fourier coefficient (real and imaginary).
pub const FOURIER_COEFF_BYTES: u64 = 12;
/// Bytes of one torus scalar in memory.
pub const TORUS_BYTES: u64 = 8;

fn div_ceil(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// One blind-rotation iteration on one BRU.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IterationCost {
    /// Forward FFT of the `(k+1) d` decomposed polynomials.
    pub fft: u64,
    /// Fourier-domain products with the GGSW.
    pub mac: u64,
    /// Inverse FFT of the `k+1` accumulator polynomials, on the shared unit.
    pub ifft: u64,
}

impl IterationCost {
    /// Steady-state cycles per ciphertext on one BRU, with the shared IFFT
    /// serving every BRU of the cluster in turn.
    pub fn bru_interval(&self, m: &MachineConfig) -> u64 {
        self.fft.max(self.mac).max(m.brus_per_cluster as u64 * self.ifft)
    }

    /// Latency of one ciphertext through the iteration.
    pub fn latency(&self, m: &MachineConfig) -> u64 {
        self.fft + self.mac + self.ifft + m.pipeline_fill_cycles
    }
}

pub fn iteration_cost(p: &TfheParams, m: &MachineConfig) -> IterationCost {
    let k1 = (p.k + 1) as u64;
    let d = p.pbs_gadget.depth as u64;
    let half = (p.big_n / 2) as u64;
    IterationCost {
        fft: div_ceil(k1 * d * half, m.fft_throughput as u64),
        mac: div_ceil(k1 * k1 * d * half, m.bru_mac_throughput as u64),
        ifft: div_ceil(k1 * half, m.fft_throughput as u64),
    }
}

/// Cycles for one BRU to blind-rotate one ciphertext at round-robin steady
/// state: `n` iterations plus one pipeline fill.
pub fn bru_blind_rotation_cycles(p: &TfheParams, m: &MachineConfig) -> u64 {
    p.n as u64 * iteration_cost(p, m).bru_interval(m) + m.pipeline_fill_cycles
}

/// Cycles of one iteration for a cluster holding `loaded` ciphertexts: the
/// BRUs split them, the shared IFFT sees all of them, and too few of them
/// leave the pipeline latency exposed.
pub fn cluster_iteration_cycles(p: &TfheParams, m: &MachineConfig, loaded: usize) -> u64 {
    if loaded == 0 {
        return 0;
    }
    let c = iteration_cost(p, m);
    let a = loaded as u64;
    let per_bru = div_ceil(a, m.brus_per_cluster as u64) * c.fft.max(c.mac);
    per_bru.max(a * c.ifft).max(c.latency(m))
}

fn lpu_width(m: &MachineConfig) -> u64 {
    (m.lpu_lanes * m.lpu_lane_width) as u64
}

/// Cycles for one LPU to key-switch one long ciphertext.
pub fn lpu_keyswitch_cycles(p: &TfheParams, m: &MachineConfig) -> u64 {
    let work = (p.n_long() * p.ks_gadget.depth as usize * (p.n + 1)) as u64;
    div_ceil(work, lpu_width(m)) + m.pipeline_fill_cycles
}

/// Cycles for an element-wise LPU pass over `len` scalars.
pub fn lpu_vector_cycles(len: usize, m: &MachineConfig) -> u64 {
    div_ceil(len as u64, lpu_width(m))
}

pub fn bsk_bytes_per_iteration(p: &TfheParams) -> u64 {
    bsk_macs_per_iteration(p) * FOURIER_COEFF_BYTES
}

/// BSK products per ciphertext per iteration.
pub fn bsk_macs_per_iteration(p: &TfheParams) -> u64 {
    let k1 = (p.k + 1) as u64;
    k1 * k1 * p.pbs_gadget.depth as u64 * (p.big_n / 2) as u64
}

pub fn ksk_bytes(p: &TfheParams) -> u64 {
    (p.n_long() * p.ks_gadget.depth as usize * (p.n + 1)) as u64 * TORUS_BYTES
}

pub fn long_lwe_bytes(p: &TfheParams) -> u64 {
    (p.n_long() + 1) as u64 * TORUS_BYTES
}

/// A lookup accumulator: only the body of the trivial GLWE is stored.
pub fn lut_bytes(p: &TfheParams) -> u64 {
    p.big_n as u64 * TORUS_BYTES
}

/// Accumulator buffer space of one in-flight ciphertext: two GLWE
/// accumulators in the Fourier domain.
pub fn acc_bytes_per_ciphertext(p: &TfheParams) -> u64 {
    2 * (p.k + 1) as u64 * (p.big_n / 2) as u64 * FOURIER_COEFF_BYTES
}

/// One iteration of one ciphertext on an XPU, with the cluster's shared
/// IFFT still in place.
pub fn xpu_iteration_cycles(p: &TfheParams, x: &XpuConfig, m: &MachineConfig) -> u64 {
    let k1 = (p.k + 1) as u64;
    let d = p.pbs_gadget.depth as u64;
    let half = (p.big_n / 2) as u64;
    let rows = x.rows as u64;
    let fftu = x.fftu_throughput as u64;
    let active = xpu_active_pes(p, x) as u64;
    // Each PE consumes one FFTU output stream; more than `pes_per_row`
    // GLWE columns take extra passes.
    let passes = div_ceil(k1, active);
    let fft = div_ceil(k1 * d * half, rows * fftu);
    let mac = div_ceil(k1 * d * half * passes, rows * fftu);
    let ifft = iteration_cost(p, m).ifft;
    fft.max(mac).max(m.brus_per_cluster as u64 * ifft)
}

/// PEs busy in each row: one per GLWE column.
pub fn xpu_active_pes(p: &TfheParams, x: &XpuConfig) -> usize {
    (p.k + 1).min(x.pes_per_row)
}
