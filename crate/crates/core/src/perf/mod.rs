//! Cycle and bandwidth model of the accelerator and of the systolic
//! baseline.

mod config;
mod model;
mod sim;
mod sweep;

pub use config::{MachineConfig, SyncMode, XpuConfig, SYNC_GROUPS};
pub use model::{
    acc_bytes_per_ciphertext, bru_blind_rotation_cycles, bsk_bytes_per_iteration, bsk_macs_per_iteration,
    cluster_iteration_cycles, iteration_cost, ksk_bytes, long_lwe_bytes, lpu_keyswitch_cycles, lpu_vector_cycles,
    lut_bytes, xpu_active_pes, xpu_iteration_cycles, IterationCost, FOURIER_COEFF_BYTES, TORUS_BYTES,
};
pub use sim::{
    simulate, simulate_xpu, BandwidthTrace, BufferPeaks, ByteSplit, PerfReport, RateSplit, Stalls, UnitUsage,
    REPORT_VERSION,
};
pub use sweep::{range, sweep, SweepKind, SweepPoint};
