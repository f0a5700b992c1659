//! Batch-level event walk of a schedule on the machine model.
//!
//! Each batch runs three phases: LPU pre-work (linear steps, key and modulus
//! switching), blind rotation on the BRUs, and sample extraction on the
//! LPUs. Clusters of one sync group advance through blind-rotation
//! iterations together and fetch each key chunk once; the pre-work of an
//! independent batch runs on the LPUs while the previous batch rotates.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::config::{MachineConfig, SyncMode, XpuConfig};
use super::model::{
    acc_bytes_per_ciphertext, bsk_bytes_per_iteration, bsk_macs_per_iteration, cluster_iteration_cycles, ksk_bytes,
    long_lwe_bytes, lpu_keyswitch_cycles, lpu_vector_cycles, lut_bytes, xpu_iteration_cycles,
};
use crate::compiler::{LoweredGraph, PrimId, PrimOp, Schedule};
use crate::error::{Error, Result};
use crate::tfhe::TfheParams;

/// Version of the report layout.
pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByteSplit {
    pub bsk: u64,
    pub ksk: u64,
    pub glwe: u64,
    pub lwe: u64,
}

impl ByteSplit {
    pub fn total(&self) -> u64 {
        self.bsk + self.ksk + self.glwe + self.lwe
    }

    fn get(&self, c: usize) -> u64 {
        [self.bsk, self.ksk, self.glwe, self.lwe][c]
    }
}

/// Bytes per cycle by traffic class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RateSplit {
    pub bsk: f64,
    pub ksk: f64,
    pub glwe: f64,
    pub lwe: f64,
    pub total: f64,
}

/// Bytes moved per window of `window_cycles`, by traffic class.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandwidthTrace {
    pub window_cycles: u64,
    pub bsk: Vec<u64>,
    pub ksk: Vec<u64>,
    pub glwe: Vec<u64>,
    pub lwe: Vec<u64>,
}

impl BandwidthTrace {
    fn new(window_cycles: u64) -> Self {
        BandwidthTrace {
            window_cycles,
            ..Default::default()
        }
    }

    fn class(&mut self, c: usize) -> &mut Vec<u64> {
        match c {
            0 => &mut self.bsk,
            1 => &mut self.ksk,
            2 => &mut self.glwe,
            _ => &mut self.lwe,
        }
    }

    /// Spreads `bytes` evenly over `[start, end)`, exactly: the windows
    /// receive differences of a rounded cumulative curve.
    fn spread(&mut self, class: usize, start: u64, end: u64, bytes: u64) {
        if bytes == 0 {
            return;
        }
        let w = self.window_cycles;
        let end = end.max(start + 1);
        let span = (end - start) as u128;
        let cum = |t: u64| (bytes as u128 * (t - start) as u128 / span) as u64;
        let last = (end - 1) / w;
        let v = self.class(class);
        if v.len() <= last as usize {
            v.resize(last as usize + 1, 0);
        }
        for win in start / w..=last {
            let lo = (win * w).max(start);
            let hi = ((win + 1) * w).min(end);
            v[win as usize] += cum(hi) - cum(lo);
        }
    }

    fn pad(&mut self) {
        let len = [&self.bsk, &self.ksk, &self.glwe, &self.lwe]
            .iter()
            .map(|v| v.len())
            .max()
            .unwrap_or(0);
        for c in 0..4 {
            self.class(c).resize(len, 0);
        }
    }

    pub fn totals(&self) -> ByteSplit {
        ByteSplit {
            bsk: self.bsk.iter().sum(),
            ksk: self.ksk.iter().sum(),
            glwe: self.glwe.iter().sum(),
            lwe: self.lwe.iter().sum(),
        }
    }

    /// Highest delivered rate over any window.
    pub fn peak(&self) -> f64 {
        (0..self.bsk.len())
            .map(|i| self.bsk[i] + self.ksk[i] + self.glwe[i] + self.lwe[i])
            .max()
            .unwrap_or(0) as f64
            / self.window_cycles as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitUsage {
    /// `bru` (the cluster's BRUs with their shared IFFT) or `lpu`.
    pub unit: String,
    pub cluster: usize,
    pub busy: u64,
    pub idle: u64,
    pub utilization: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stalls {
    /// Rotation waiting on key bandwidth.
    pub key_starvation: u64,
    /// Rotation slowed by accumulator swaps.
    pub buffer_swap: u64,
    /// Rotation units idle between batches, waiting for LPU results.
    pub dependency: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferPeaks {
    /// Accumulator space the busiest cluster would need.
    pub acc_required: u64,
    pub acc_used: u64,
    pub ksk: u64,
    pub glwe: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerfReport {
    pub version: u32,
    /// `taurus` or `xpu`.
    pub machine: String,
    pub params: String,
    pub sync: SyncMode,
    pub clusters: usize,
    pub round_robin: usize,
    pub batches: usize,
    pub ciphertexts: usize,
    pub total_cycles: u64,
    pub wall_clock_us: f64,
    /// BSK coefficient products over the whole run.
    pub bsk_macs: u64,
    pub units: Vec<UnitUsage>,
    /// Rotation cycles doing work over rotation cycles including stalls.
    pub bru_utilization: f64,
    pub traffic: ByteSplit,
    /// Highest rate the units would draw from memory if never throttled.
    pub peak_demand: RateSplit,
    /// `peak_demand.total`.
    pub peak_bandwidth: f64,
    /// Highest delivered rate over a trace window.
    pub peak_delivered: f64,
    pub buffers: BufferPeaks,
    pub stalls: Stalls,
    pub trace: BandwidthTrace,
}

impl PerfReport {
    /// Blind rotations per thousand cycles.
    pub fn throughput(&self) -> f64 {
        if self.total_cycles == 0 {
            0.0
        } else {
            self.ciphertexts as f64 * 1000.0 / self.total_cycles as f64
        }
    }
}

const BSK: usize = 0;
const KSK: usize = 1;
const GLWE: usize = 2;
const LWE: usize = 3;

/// Everything the walk needs about one batch, per cluster.
struct BatchWork {
    loads: Vec<usize>,
    pre: Vec<u64>,
    post: Vec<u64>,
    pre_bytes: Vec<ByteSplit>,
    post_bytes: Vec<ByteSplit>,
    has_ks: bool,
    depends: bool,
}

enum Engine<'a> {
    Taurus,
    Xpu(&'a XpuConfig),
}

impl Engine<'_> {
    fn name(&self) -> &'static str {
        match self {
            Engine::Taurus => "taurus",
            Engine::Xpu(_) => "xpu",
        }
    }

    /// Cycles per blind-rotation step of the group and key fetches per
    /// step: with no reuse across ciphertexts, the XPU rotates one
    /// ciphertext per unit at a time and refetches for every wave.
    fn step(&self, p: &TfheParams, m: &MachineConfig, load: usize) -> (u64, u64) {
        match self {
            Engine::Taurus => (cluster_iteration_cycles(p, m, load), 1),
            Engine::Xpu(x) => {
                let waves = load.div_ceil(m.brus_per_cluster) as u64;
                (waves * xpu_iteration_cycles(p, x, m), waves)
            }
        }
    }

    fn in_flight(&self, m: &MachineConfig, load: usize) -> usize {
        match self {
            Engine::Taurus => load,
            Engine::Xpu(_) => load.min(m.brus_per_cluster),
        }
    }
}

fn lpu_op_cycles(op: PrimOp, p: &TfheParams, m: &MachineConfig) -> u64 {
    match op {
        PrimOp::Ks { .. } => lpu_keyswitch_cycles(p, m),
        PrimOp::Ms => lpu_vector_cycles(p.n + 1, m),
        PrimOp::Lin { .. } => lpu_vector_cycles(p.n_long() + 1, m),
        PrimOp::Se => lpu_vector_cycles(p.k * p.big_n + 1, m),
        PrimOp::Input | PrimOp::Br { .. } => 0,
    }
}

/// Long ciphertexts read and written by an LPU step; every long
/// ciphertext lives in HBM between steps.
fn lpu_op_lwe_bytes(lg: &LoweredGraph, id: PrimId, p: &TfheParams) -> u64 {
    let n = &lg.nodes[id];
    let moved = match n.op {
        PrimOp::Ks { .. } => 1,
        PrimOp::Lin { .. } => n.inputs.len() as u64 + 1,
        PrimOp::Se => 1,
        _ => 0,
    };
    moved * long_lwe_bytes(p)
}

fn batch_work(lg: &LoweredGraph, s: &Schedule, p: &TfheParams, m: &MachineConfig) -> Vec<BatchWork> {
    let c = s.clusters;
    s.batches
        .iter()
        .map(|b| {
            let mut w = BatchWork {
                loads: b.cluster_loads(c),
                pre: vec![0; c],
                post: vec![0; c],
                pre_bytes: vec![ByteSplit::default(); c],
                post_bytes: vec![ByteSplit::default(); c],
                has_ks: false,
                depends: b.depends_on_previous,
            };
            // Pre-work of each kind is dealt round-robin to the clusters.
            let mut dealt = [0usize; 3];
            for &id in &b.lpu_pre {
                let op = lg.nodes[id].op;
                let kind = match op {
                    PrimOp::Ks { .. } => {
                        w.has_ks = true;
                        0
                    }
                    PrimOp::Ms => 1,
                    _ => 2,
                };
                let cl = dealt[kind] % c;
                dealt[kind] += 1;
                w.pre[cl] += lpu_op_cycles(op, p, m);
                w.pre_bytes[cl].lwe += lpu_op_lwe_bytes(lg, id, p);
            }
            let mut luts: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); c];
            let mut slot_of = alloc::collections::BTreeMap::new();
            for (i, &br) in b.bru.iter().enumerate() {
                slot_of.insert(br, i);
                if let PrimOp::Br { acc } = lg.nodes[br].op {
                    luts[i % c].insert(acc);
                }
            }
            for (cl, set) in luts.iter().enumerate() {
                w.pre_bytes[cl].glwe += set.len() as u64 * lut_bytes(p);
            }
            for &id in &b.lpu_post {
                let cl = slot_of.get(&lg.nodes[id].inputs[0]).copied().unwrap_or(0) % c;
                w.post[cl] += lpu_op_cycles(lg.nodes[id].op, p, m);
                w.post_bytes[cl].lwe += lpu_op_lwe_bytes(lg, id, p);
            }
            w
        })
        .collect()
}

fn add_bytes(a: ByteSplit, b: ByteSplit) -> ByteSplit {
    ByteSplit {
        bsk: a.bsk + b.bsk,
        ksk: a.ksk + b.ksk,
        glwe: a.glwe + b.glwe,
        lwe: a.lwe + b.lwe,
    }
}

/// Cycles to move `bytes` at `rate` bytes per cycle.
fn transfer_cycles(bytes: u64, rate: f64) -> u64 {
    libm::ceil(bytes as f64 / rate) as u64
}

/// Demand intervals `[start, end)` with a rate per traffic class.
#[derive(Default)]
struct Demand(Vec<(u64, u64, [f64; 4])>);

impl Demand {
    fn add(&mut self, start: u64, cycles: u64, bytes: ByteSplit) {
        if cycles == 0 || bytes.total() == 0 {
            return;
        }
        let r = |c: usize| bytes.get(c) as f64 / cycles as f64;
        self.0.push((start, start + cycles, [r(0), r(1), r(2), r(3)]));
    }

    fn peaks(&self) -> RateSplit {
        let mut events: Vec<(u64, usize)> = Vec::with_capacity(2 * self.0.len());
        for (i, &(s, e, _)) in self.0.iter().enumerate() {
            events.push((s, i));
            events.push((e, i));
        }
        events.sort_unstable();
        let mut active = vec![false; self.0.len()];
        let mut peak = RateSplit::default();
        let mut i = 0;
        while i < events.len() {
            let t = events[i].0;
            while i < events.len() && events[i].0 == t {
                let k = events[i].1;
                active[k] = self.0[k].0 == t && self.0[k].1 != t;
                i += 1;
            }
            let mut now = [0.0; 4];
            for (k, &(_, _, r)) in self.0.iter().enumerate() {
                if active[k] {
                    for c in 0..4 {
                        now[c] += r[c];
                    }
                }
            }
            peak.bsk = peak.bsk.max(now[0]);
            peak.ksk = peak.ksk.max(now[1]);
            peak.glwe = peak.glwe.max(now[2]);
            peak.lwe = peak.lwe.max(now[3]);
            peak.total = peak.total.max(now.iter().sum());
        }
        peak
    }
}

struct Walk {
    trace: BandwidthTrace,
    demand: Demand,
    share: f64,
    lpu_free: Vec<u64>,
    lpu_busy: Vec<u64>,
}

impl Walk {
    /// Runs an LPU phase of group `g` on its clusters. Phases overlapped
    /// with a rotation have their traffic charged to that rotation.
    fn lpu(
        &mut self,
        g: &[usize],
        cycles: &[u64],
        bytes: &[ByteSplit],
        extra: ByteSplit,
        ready: u64,
        overlapped: bool,
    ) -> u64 {
        let start = g.iter().map(|&c| self.lpu_free[c]).max().unwrap_or(0).max(ready);
        let work = g.iter().map(|&c| cycles[c]).max().unwrap_or(0);
        let total = g.iter().fold(extra, |acc, &c| add_bytes(acc, bytes[c]));
        if work == 0 && total.total() == 0 {
            return start;
        }
        let dur = if overlapped {
            work
        } else {
            work.max(transfer_cycles(total.total(), self.share))
        };
        for &c in g {
            self.lpu_busy[c] += cycles[c];
            self.lpu_free[c] = start + dur;
        }
        if !overlapped {
            for class in [KSK, GLWE, LWE] {
                self.trace.spread(class, start, start + dur, total.get(class));
            }
        }
        start + dur
    }
}

fn check(s: &Schedule, lg: &LoweredGraph, p: &TfheParams, m: &MachineConfig) -> Result<()> {
    p.validate()?;
    m.validate()?;
    if s.clusters != m.clusters || s.per_cluster != m.round_robin || s.sync != m.sync {
        return Err(Error::ScheduleMismatch(format!(
            "schedule for {} clusters x {} ({:?}), machine has {} x {} ({:?})",
            s.clusters, s.per_cluster, s.sync, m.clusters, m.round_robin, m.sync
        )));
    }
    s.validate(lg)
}

fn run(engine: Engine, lg: &LoweredGraph, s: &Schedule, p: &TfheParams, m: &MachineConfig) -> Result<PerfReport> {
    check(s, lg, p, m)?;
    let c = m.clusters;
    let groups = m.sync.groups(c);
    let members: Vec<Vec<usize>> = (0..groups)
        .map(|g| (0..c).filter(|&cl| cl * groups / c == g).collect())
        .collect();
    let work = batch_work(lg, s, p, m);
    let nb = work.len();
    let n = p.n as u64;
    let bsk_iter = bsk_bytes_per_iteration(p);
    let acc_ct = acc_bytes_per_ciphertext(p);
    let ksk_total = ksk_bytes(p);
    let ksk_resident = ksk_total <= m.ksk_buffer_bytes;
    let queue_rate = m.queue_bytes as f64 / m.dram_latency_cycles.max(1) as f64;

    let mut walk = Walk {
        trace: BandwidthTrace::new(m.trace_window_cycles),
        demand: Demand::default(),
        share: m.hbm_bytes_per_cycle / groups as f64,
        lpu_free: vec![0; c],
        lpu_busy: vec![0; c],
    };
    let mut bru_free = vec![0u64; groups];
    let mut bru_busy = vec![0u64; c];
    let mut ksk_fetched = vec![false; groups];
    let mut pre_end = vec![vec![0u64; groups]; nb];
    let mut post_end = vec![vec![0u64; groups]; nb];
    let mut stalls = Stalls::default();
    let mut busy_total = 0u64;
    let mut stall_total = 0u64;
    let mut buffers = BufferPeaks {
        ksk: ksk_total.min(m.ksk_buffer_bytes),
        ..Default::default()
    };
    let mut bsk_macs = 0u64;

    // KSK traffic of a group's pre phase, fetched once if it stays resident.
    let mut ksk_for = |g: usize, w: &BatchWork| -> ByteSplit {
        let fetch = w.has_ks && !(ksk_resident && ksk_fetched[g]);
        ksk_fetched[g] |= w.has_ks;
        ByteSplit {
            ksk: if fetch { ksk_total } else { 0 },
            ..Default::default()
        }
    };
    let pre_extra: Vec<Vec<ByteSplit>> = work
        .iter()
        .map(|w| (0..groups).map(|g| ksk_for(g, w)).collect())
        .collect();
    let phase_bytes =
        |bytes: &[ByteSplit], g: &[usize], extra: ByteSplit| g.iter().fold(extra, |acc, &cl| add_bytes(acc, bytes[cl]));

    if nb > 0 {
        for (g, mem) in members.iter().enumerate() {
            pre_end[0][g] = walk.lpu(mem, &work[0].pre, &work[0].pre_bytes, pre_extra[0][g], 0, false);
        }
    }
    let mut end = 0u64;
    for b in 0..nb {
        let w = &work[b];
        let next_indep = b + 1 < nb && !work[b + 1].depends;
        for (g, mem) in members.iter().enumerate() {
            let mut step = 0u64;
            let mut fetches = 0u64;
            let mut queue_step = 0u64;
            let mut deficit_total = 0u64;
            for &cl in mem {
                let (t, f) = engine.step(p, m, w.loads[cl]);
                step = step.max(t);
                fetches = fetches.max(f);
                bsk_macs += n * w.loads[cl] as u64 * bsk_macs_per_iteration(p);
                let need = engine.in_flight(m, w.loads[cl]) as u64 * acc_ct;
                buffers.acc_required = buffers.acc_required.max(need);
                buffers.acc_used = buffers.acc_used.max(need.min(m.acc_buffer_bytes));
                buffers.glwe = buffers.glwe.max(w.pre_bytes[cl].glwe);
                let deficit = need.saturating_sub(m.acc_buffer_bytes);
                deficit_total += deficit;
                queue_step = queue_step.max(libm::ceil(2.0 * deficit as f64 / queue_rate) as u64);
            }
            if step == 0 {
                continue;
            }
            let base = n * step;
            let compute = n * step.max(queue_step) + if deficit_total > 0 { m.dram_latency_cycles } else { 0 };
            let bsk = n * fetches * bsk_iter;
            let swap = n * 2 * deficit_total;
            // LPU traffic running underneath this rotation.
            let mut under = ByteSplit::default();
            if next_indep {
                under = add_bytes(under, phase_bytes(&work[b + 1].pre_bytes, mem, pre_extra[b + 1][g]));
            }
            if b > 0 && !w.depends {
                under = add_bytes(under, phase_bytes(&work[b - 1].post_bytes, mem, ByteSplit::default()));
            }
            let t_keys = transfer_cycles(bsk + under.total(), walk.share);
            let t_all = transfer_cycles(bsk + under.total() + swap, walk.share);
            let key_starvation = t_keys.saturating_sub(base);
            let dur = compute.max(t_all);
            let swap_stall = dur - base - key_starvation;

            let start = bru_free[g].max(pre_end[b][g]);
            if b > 0 {
                stalls.dependency += start - bru_free[g];
                stall_total += start - bru_free[g];
            }
            stalls.key_starvation += key_starvation;
            stalls.buffer_swap += swap_stall;
            stall_total += key_starvation + swap_stall;
            busy_total += base;
            for &cl in mem {
                if w.loads[cl] > 0 {
                    bru_busy[cl] += n * engine.step(p, m, w.loads[cl]).0;
                }
            }
            let moved = add_bytes(
                under,
                ByteSplit {
                    bsk,
                    glwe: swap,
                    ..Default::default()
                },
            );
            walk.demand.add(start, base, moved);
            for class in [BSK, KSK, GLWE, LWE] {
                walk.trace.spread(class, start, start + dur, moved.get(class));
            }
            bru_free[g] = start + dur;
        }
        if next_indep {
            for (g, mem) in members.iter().enumerate() {
                pre_end[b + 1][g] = walk.lpu(
                    mem,
                    &work[b + 1].pre,
                    &work[b + 1].pre_bytes,
                    pre_extra[b + 1][g],
                    0,
                    true,
                );
            }
        }
        let post_overlapped = next_indep;
        for (g, mem) in members.iter().enumerate() {
            post_end[b][g] = walk.lpu(
                mem,
                &w.post,
                &w.post_bytes,
                ByteSplit::default(),
                bru_free[g],
                post_overlapped,
            );
            end = end.max(post_end[b][g]).max(bru_free[g]);
        }
        if b + 1 < nb && !next_indep {
            let ready = post_end[b].iter().copied().max().unwrap_or(0);
            for (g, mem) in members.iter().enumerate() {
                pre_end[b + 1][g] = walk.lpu(
                    mem,
                    &work[b + 1].pre,
                    &work[b + 1].pre_bytes,
                    pre_extra[b + 1][g],
                    ready,
                    false,
                );
            }
        }
    }
    // Linear steps feeding only outputs run last on cluster 0.
    if !s.tail.is_empty() {
        let mut cycles = vec![0u64; c];
        let mut bytes = vec![ByteSplit::default(); c];
        for &id in &s.tail {
            cycles[0] += lpu_op_cycles(lg.nodes[id].op, p, m);
            bytes[0].lwe += lpu_op_lwe_bytes(lg, id, p);
        }
        let t = walk.lpu(&[0], &cycles, &bytes, ByteSplit::default(), end, false);
        end = end.max(t);
    }
    let total = end.max(walk.lpu_free.iter().copied().max().unwrap_or(0));
    walk.trace.pad();

    let unit = |name: &str, cl: usize, busy: u64| UnitUsage {
        unit: String::from(name),
        cluster: cl,
        busy,
        idle: total - busy,
        utilization: if total == 0 { 0.0 } else { busy as f64 / total as f64 },
    };
    let mut units: Vec<UnitUsage> = (0..c).map(|cl| unit("bru", cl, bru_busy[cl])).collect();
    units.extend((0..c).map(|cl| unit("lpu", cl, walk.lpu_busy[cl])));
    let peak_demand = walk.demand.peaks();
    Ok(PerfReport {
        version: REPORT_VERSION,
        machine: String::from(engine.name()),
        params: p.name.clone(),
        sync: m.sync,
        clusters: c,
        round_robin: m.round_robin,
        batches: nb,
        ciphertexts: s.blind_rotations(),
        total_cycles: total,
        wall_clock_us: total as f64 / (m.clock_ghz * 1000.0),
        bsk_macs,
        units,
        bru_utilization: if busy_total == 0 {
            0.0
        } else {
            busy_total as f64 / (busy_total + stall_total) as f64
        },
        traffic: walk.trace.totals(),
        peak_bandwidth: peak_demand.total,
        peak_demand,
        peak_delivered: walk.trace.peak(),
        buffers,
        stalls,
        trace: walk.trace,
    })
}

/// Simulates the accelerator running `s`, the schedule of `lg`.
pub fn simulate(lg: &LoweredGraph, s: &Schedule, p: &TfheParams, m: &MachineConfig) -> Result<PerfReport> {
    run(Engine::Taurus, lg, s, p, m)
}

/// Same schedule with every BRU replaced by an XPU: each unit rotates one
/// ciphertext at a time and streams the whole BSK for it.
pub fn simulate_xpu(
    lg: &LoweredGraph,
    s: &Schedule,
    p: &TfheParams,
    x: &XpuConfig,
    m: &MachineConfig,
) -> Result<PerfReport> {
    run(Engine::Xpu(x), lg, s, p, m)
}
