use alloc::format;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How clusters synchronize at blind-rotation iteration boundaries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyncMode {
    /// Every cluster runs the same iteration, so one key fetch serves all.
    #[default]
    Full,
    /// Clusters split into [`SYNC_GROUPS`] groups that advance independently
    /// and fetch keys separately.
    Grouped,
}

/// Group count in [`SyncMode::Grouped`].
pub const SYNC_GROUPS: usize = 2;

impl SyncMode {
    pub fn groups(self, clusters: usize) -> usize {
        match self {
            SyncMode::Full => 1,
            SyncMode::Grouped => SYNC_GROUPS.min(clusters),
        }
    }
}

impl core::str::FromStr for SyncMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(SyncMode::Full),
            "grouped" | "grouped2" | "grouped(2)" => Ok(SyncMode::Grouped),
            _ => Err(Error::InvalidParams(format!("unknown sync mode `{s}`"))),
        }
    }
}

/// Accelerator parameters. Throughputs are per cycle; sizes are bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MachineConfig {
    pub clusters: usize,
    /// BRUs per cluster; they share one inverse FFT.
    pub brus_per_cluster: usize,
    /// Complex BSK multiplications per BRU.
    pub bru_mac_throughput: usize,
    /// FFT points per BRU (and for the shared IFFT).
    pub fft_throughput: usize,
    pub lpu_lanes: usize,
    pub lpu_lane_width: usize,
    /// Ciphertexts interleaved per cluster.
    pub round_robin: usize,
    /// Accumulator buffer per cluster.
    pub acc_buffer_bytes: u64,
    pub glwe_buffer_bytes: u64,
    pub lwe_buffer_bytes: u64,
    pub ggsw_buffer_bytes: u64,
    pub ksk_buffer_bytes: u64,
    pub twiddle_buffer_bytes: u64,
    /// Two HBM2E stacks at the 1 GHz clock.
    pub hbm_bytes_per_cycle: f64,
    pub dram_latency_cycles: u64,
    pub queue_bytes: u64,
    pub noc_latency_cycles: u64,
    /// Fill and drain of one polynomial stream through a pipelined unit.
    pub pipeline_fill_cycles: u64,
    pub clock_ghz: f64,
    /// Bandwidth trace resolution.
    pub trace_window_cycles: u64,
    pub sync: SyncMode,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig {
            clusters: 4,
            brus_per_cluster: 2,
            bru_mac_throughput: 512,
            fft_throughput: 256,
            lpu_lanes: 4,
            lpu_lane_width: 64,
            round_robin: 12,
            acc_buffer_bytes: 9216 * 1024,
            glwe_buffer_bytes: 2 * 1024 * 1024,
            lwe_buffer_bytes: 512 * 1024,
            ggsw_buffer_bytes: 2 * 1024 * 1024,
            ksk_buffer_bytes: 512 * 1024,
            twiddle_buffer_bytes: 256 * 1024,
            hbm_bytes_per_cycle: 819.2,
            dram_latency_cycles: 100,
            queue_bytes: 16 * 1024,
            noc_latency_cycles: 8,
            pipeline_fill_cycles: 64,
            clock_ghz: 1.0,
            trace_window_cycles: 10_000,
            sync: SyncMode::Full,
        }
    }
}

impl MachineConfig {
    /// Ciphertext slots per batch.
    pub fn batch_capacity(&self) -> usize {
        self.clusters * self.round_robin
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("clusters", self.clusters),
            ("brus_per_cluster", self.brus_per_cluster),
            ("bru_mac_throughput", self.bru_mac_throughput),
            ("fft_throughput", self.fft_throughput),
            ("lpu_lanes", self.lpu_lanes),
            ("lpu_lane_width", self.lpu_lane_width),
            ("round_robin", self.round_robin),
        ];
        if let Some((k, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidParams(format!("{k} must be positive")));
        }
        let rates = [
            ("hbm_bytes_per_cycle", self.hbm_bytes_per_cycle),
            ("clock_ghz", self.clock_ghz),
        ];
        if let Some((k, _)) = rates.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParams(format!("{k} must be positive")));
        }
        if self.trace_window_cycles == 0 {
            return Err(Error::InvalidParams("trace_window_cycles must be positive".to_string()));
        }
        Ok(())
    }

    /// Sets one field from its textual value, as in a `key = value` file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: core::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::InvalidParams(format!("bad value `{v}` for {key}")))
        }
        let v = value.trim();
        match key.trim() {
            "clusters" => self.clusters = num(key, v)?,
            "brus_per_cluster" => self.brus_per_cluster = num(key, v)?,
            "bru_mac_throughput" => self.bru_mac_throughput = num(key, v)?,
            "fft_throughput" => self.fft_throughput = num(key, v)?,
            "lpu_lanes" => self.lpu_lanes = num(key, v)?,
            "lpu_lane_width" => self.lpu_lane_width = num(key, v)?,
            "round_robin" => self.round_robin = num(key, v)?,
            "acc_buffer_bytes" => self.acc_buffer_bytes = num(key, v)?,
            "acc_buffer_kb" => self.acc_buffer_bytes = num::<u64>(key, v)? * 1024,
            "glwe_buffer_bytes" => self.glwe_buffer_bytes = num(key, v)?,
            "lwe_buffer_bytes" => self.lwe_buffer_bytes = num(key, v)?,
            "ggsw_buffer_bytes" => self.ggsw_buffer_bytes = num(key, v)?,
            "ksk_buffer_bytes" => self.ksk_buffer_bytes = num(key, v)?,
            "twiddle_buffer_bytes" => self.twiddle_buffer_bytes = num(key, v)?,
            "hbm_bytes_per_cycle" => self.hbm_bytes_per_cycle = num(key, v)?,
            "dram_latency_cycles" => self.dram_latency_cycles = num(key, v)?,
            "queue_bytes" => self.queue_bytes = num(key, v)?,
            "noc_latency_cycles" => self.noc_latency_cycles = num(key, v)?,
            "pipeline_fill_cycles" => self.pipeline_fill_cycles = num(key, v)?,
            "clock_ghz" => self.clock_ghz = num(key, v)?,
            "trace_window_cycles" => self.trace_window_cycles = num(key, v)?,
            "sync" => self.sync = v.parse()?,
            other => return Err(Error::InvalidParams(format!("unknown machine key `{other}`"))),
        }
        Ok(())
    }

    /// Every field as `key = value` lines, readable by [`MachineConfig::set`].
    pub fn to_key_values(&self) -> String {
        let sync = match self.sync {
            SyncMode::Full => "full",
            SyncMode::Grouped => "grouped",
        };
        format!(
            "clusters = {}\nbrus_per_cluster = {}\nbru_mac_throughput = {}\nfft_throughput = {}\n\
             lpu_lanes = {}\nlpu_lane_width = {}\nround_robin = {}\nacc_buffer_bytes = {}\n\
             glwe_buffer_bytes = {}\nlwe_buffer_bytes = {}\nggsw_buffer_bytes = {}\n\
             ksk_buffer_bytes = {}\ntwiddle_buffer_bytes = {}\nhbm_bytes_per_cycle = {}\n\
             dram_latency_cycles = {}\nqueue_bytes = {}\nnoc_latency_cycles = {}\n\
             pipeline_fill_cycles = {}\nclock_ghz = {}\ntrace_window_cycles = {}\nsync = {sync}\n",
            self.clusters,
            self.brus_per_cluster,
            self.bru_mac_throughput,
            self.fft_throughput,
            self.lpu_lanes,
            self.lpu_lane_width,
            self.round_robin,
            self.acc_buffer_bytes,
            self.glwe_buffer_bytes,
            self.lwe_buffer_bytes,
            self.ggsw_buffer_bytes,
            self.ksk_buffer_bytes,
            self.twiddle_buffer_bytes,
            self.hbm_bytes_per_cycle,
            self.dram_latency_cycles,
            self.queue_bytes,
            self.noc_latency_cycles,
            self.pipeline_fill_cycles,
            self.clock_ghz,
            self.trace_window_cycles,
        )
    }
}

/// XPU baseline: a systolic array of PE rows, each fed by its own FFT unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct XpuConfig {
    pub rows: usize,
    pub pes_per_row: usize,
    /// FFT points per cycle per row.
    pub fftu_throughput: usize,
}

impl Default for XpuConfig {
    fn default() -> Self {
        XpuConfig {
            rows: 4,
            pes_per_row: 4,
            fftu_throughput: 8,
        }
    }
}
