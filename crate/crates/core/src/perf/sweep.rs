use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::config::MachineConfig;
use super::model::acc_bytes_per_ciphertext;
use super::sim::{simulate, PerfReport, RateSplit};
use crate::compiler::{schedule, LoweredGraph};
use crate::error::{Error, Result};
use crate::tfhe::TfheParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Clusters,
    RoundRobin,
    /// Accumulator buffer per cluster, in KiB.
    AccBuffer,
}

impl core::str::FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clusters" => Ok(SweepKind::Clusters),
            "rr" | "round_robin" => Ok(SweepKind::RoundRobin),
            "accbuf" | "acc_buffer" => Ok(SweepKind::AccBuffer),
            _ => Err(Error::InvalidParams(format!("unknown sweep kind `{s}`"))),
        }
    }
}

impl SweepKind {
    pub fn name(&self) -> &'static str {
        match self {
            SweepKind::Clusters => "clusters",
            SweepKind::RoundRobin => "round_robin",
            SweepKind::AccBuffer => "acc_buffer_kb",
        }
    }

    fn apply(&self, m: &mut MachineConfig, v: u64) {
        match self {
            SweepKind::Clusters => m.clusters = v as usize,
            SweepKind::RoundRobin => m.round_robin = v as usize,
            SweepKind::AccBuffer => m.acc_buffer_bytes = v * 1024,
        }
    }
}

/// One simulated point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: u64,
    pub total_cycles: u64,
    /// Blind rotations per thousand cycles.
    pub throughput: f64,
    pub peak_demand: RateSplit,
    pub acc_required_bytes: u64,
    pub swap_stall_cycles: u64,
    pub key_starvation_cycles: u64,
    pub bru_utilization: f64,
}

impl SweepPoint {
    fn from_report(value: u64, r: &PerfReport) -> Self {
        SweepPoint {
            value,
            total_cycles: r.total_cycles,
            throughput: r.throughput(),
            peak_demand: r.peak_demand,
            acc_required_bytes: r.buffers.acc_required,
            swap_stall_cycles: r.stalls.buffer_swap,
            key_starvation_cycles: r.stalls.key_starvation,
            bru_utilization: r.bru_utilization,
        }
    }
}

/// `a, a + step, ...` up to and including `b`.
pub fn range(a: u64, b: u64, step: u64) -> Result<Vec<u64>> {
    if step == 0 || a > b {
        return Err(Error::InvalidParams(format!("bad range {a}:{b}:{step}")));
    }
    Ok((a..=b).step_by(step as usize).collect())
}

/// Reschedules and simulates `lg` at every value of one machine knob.
pub fn sweep(
    kind: SweepKind,
    values: &[u64],
    lg: &LoweredGraph,
    p: &TfheParams,
    base: &MachineConfig,
) -> Result<Vec<SweepPoint>> {
    values
        .iter()
        .map(|&v| {
            let mut m = base.clone();
            kind.apply(&mut m, v);
            if kind == SweepKind::RoundRobin {
                // Size the accumulator buffer to the interleaving depth.
                m.acc_buffer_bytes = m
                    .acc_buffer_bytes
                    .max(m.round_robin as u64 * acc_bytes_per_ciphertext(p));
            }
            m.validate()?;
            let s = schedule(lg, &m);
            Ok(SweepPoint::from_report(v, &simulate(lg, &s, p, &m)?))
        })
        .collect()
}
