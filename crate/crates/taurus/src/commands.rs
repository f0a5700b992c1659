use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use rand_core::RngCore;
use serde::{Deserialize, Serialize};
use taurus_core::compiler::{
    compile as compile_graph, decrypt_outputs, encrypt_inputs, execute, interpret, schedule as make_schedule,
    DedupStats, Diagnostic, LoweredGraph, PassConfig, PrimCounts, ProgramGraph, Schedule,
};
use taurus_core::perf::{range, simulate as sim, simulate_xpu, sweep as run_sweep, PerfReport, SweepPoint, XpuConfig};
use taurus_core::tfhe::noise::{seed_from_u64, stream_rng};
use taurus_core::tfhe::{keygen as make_keys, OpCounters, TfheParams};

use crate::cli::{
    Artifact, Common, CompileArgs, DedupArgs, Emit, KeygenArgs, Outcome, RunFuncArgs, RunPerfArgs, SimulateArgs,
    SweepArgs,
};
use crate::error::{Error, Result};
use crate::files::{from_json, load_inputs, load_program, read_text, to_csv, to_json};
use crate::keyfile::{decode_keys, encode_keys, params_hash};
use crate::presets::{load_machine, resolve_params};

/// Version of the JSON artifacts written here.
pub const ARTIFACT_VERSION: u32 = 1;

/// RNG stream for generated cleartext inputs, clear of the key and
/// encryption streams.
const STREAM_CLEAR_INPUTS: u64 = u64::MAX;

fn params_or(c: &Common, default: &str) -> Result<TfheParams> {
    resolve_params(c.params.as_deref().unwrap_or(default))
}

fn artifact(name: &str, bytes: Vec<u8>) -> Artifact {
    Artifact {
        name: name.to_string(),
        bytes,
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

fn percent(x: f64) -> f64 {
    (x * 10_000.0).round() / 100.0
}

/// Output of `compile --emit schedule`, input of `simulate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Compiled {
    pub version: u32,
    pub program: String,
    pub passes: PassConfig,
    pub stats: DedupStats,
    pub counts: PrimCounts,
    pub lowered: LoweredGraph,
    pub schedule: Schedule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompileStats {
    pub version: u32,
    pub program: String,
    pub passes: PassConfig,
    pub stats: DedupStats,
    pub ks_reduction_pct: f64,
    pub acc_reduction_pct: f64,
    pub counts: PrimCounts,
    pub batches: usize,
    pub blind_rotations: usize,
    pub overlap_pairs: usize,
}

pub fn compile(_: &Common, a: &CompileArgs) -> Result<Outcome> {
    let g = load_program(&a.program)?;
    let m = a.machine.load()?;
    let passes = a.passes.config();
    let (lg, stats) = compile_graph(&g, passes);
    let s = make_schedule(&lg, &m);
    let counts = lg.counts();
    let mut summary = format!(
        "{}: {} primitive steps ({} KS, {} BR), {} accumulators, {} batches\n",
        file_name(&a.program),
        counts.total() - counts.input,
        counts.ks,
        counts.br,
        lg.acc_materializations(),
        s.batches.len()
    );
    let out = match a.emit {
        Emit::Schedule => artifact(
            "compiled.json",
            to_json(&Compiled {
                version: ARTIFACT_VERSION,
                program: file_name(&a.program),
                passes,
                stats,
                counts,
                lowered: lg,
                schedule: s,
            }),
        ),
        Emit::Stats => {
            let st = CompileStats {
                version: ARTIFACT_VERSION,
                program: file_name(&a.program),
                passes,
                stats,
                ks_reduction_pct: percent(stats.ks_reduction()),
                acc_reduction_pct: percent(stats.acc_reduction()),
                counts,
                batches: s.batches.len(),
                blind_rotations: s.blind_rotations(),
                overlap_pairs: s.overlap_pairs(),
            };
            let _ = writeln!(
                summary,
                "KS {} -> {} ({}%), accumulators {} -> {} ({}%)",
                stats.ks_before,
                stats.ks_after,
                st.ks_reduction_pct,
                stats.acc_materializations_before,
                stats.acc_materializations_after,
                st.acc_reduction_pct
            );
            artifact("stats.json", to_json(&st))
        }
    };
    Ok(Outcome {
        summary,
        artifacts: vec![out],
        ok: true,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputCheck {
    pub expected: Vec<u64>,
    pub actual: Vec<u64>,
    #[serde(rename = "match")]
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuncResults {
    pub version: u32,
    pub program: String,
    pub params: String,
    pub seed: u64,
    pub passes: PassConfig,
    pub inputs: BTreeMap<String, Vec<u64>>,
    pub outputs: BTreeMap<String, OutputCheck>,
    pub diagnostics: Vec<Diagnostic>,
    pub counters: OpCounters,
    pub lut_encodings: usize,
    #[serde(rename = "match")]
    pub matches: bool,
}

fn random_inputs(g: &ProgramGraph, p: &TfheParams, seed: u64) -> BTreeMap<String, Vec<u64>> {
    let mut rng = stream_rng(seed_from_u64(seed), STREAM_CLEAR_INPUTS);
    let space = p.message_space() as u64;
    g.inputs()
        .map(|n| (n.id.clone(), (0..n.numel()).map(|_| rng.next_u64() % space).collect()))
        .collect()
}

pub fn run_func(c: &Common, a: &RunFuncArgs) -> Result<Outcome> {
    let p = params_or(c, "desk")?;
    let g = load_program(&a.program)?;
    let inputs = match &a.inputs {
        Some(path) => load_inputs(path)?,
        None => random_inputs(&g, &p, c.seed),
    };
    let expected = interpret(&g, &inputs, &p)?;
    let keys = match &a.keys {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            decode_keys(&bytes, path, Some(&p))?
        }
        None => make_keys(&p, seed_from_u64(c.seed), a.fft.into())?,
    };
    let passes = a.passes.config();
    let (lg, _) = compile_graph(&g, passes);
    let cts = encrypt_inputs(&inputs, &keys.secret, &p, seed_from_u64(c.seed))?;
    let (out, stats) = execute(&lg, &keys.eval, &cts)?;
    let actual = decrypt_outputs(&out, &keys.secret, &p)?;
    let outputs: BTreeMap<String, OutputCheck> = expected
        .outputs
        .iter()
        .map(|(id, want)| {
            let got = actual.get(id).cloned().unwrap_or_default();
            let check = OutputCheck {
                matches: *want == got,
                expected: want.clone(),
                actual: got,
            };
            (id.clone(), check)
        })
        .collect();
    let all_match = outputs.values().all(|o| o.matches);
    let ok = all_match && !expected.has_errors();
    let mut summary = String::new();
    for (id, o) in &outputs {
        let _ = writeln!(
            summary,
            "{id}: expected {:?} actual {:?} {}",
            o.expected,
            o.actual,
            if o.matches { "ok" } else { "MISMATCH" }
        );
    }
    for d in &expected.diagnostics {
        let _ = writeln!(summary, "{:?} at {}: {}", d.severity, d.node, d.message);
    }
    let _ = writeln!(
        summary,
        "{} bootstraps, {}",
        stats.counters.pbs,
        if ok { "pass" } else { "FAIL" }
    );
    let results = FuncResults {
        version: ARTIFACT_VERSION,
        program: file_name(&a.program),
        params: p.name.clone(),
        seed: c.seed,
        passes,
        inputs,
        outputs,
        diagnostics: expected.diagnostics,
        counters: stats.counters,
        lut_encodings: stats.lut_encodings,
        matches: all_match,
    };
    Ok(Outcome {
        summary,
        artifacts: vec![artifact("results.json", to_json(&results))],
        ok,
    })
}

#[derive(Serialize)]
struct UnitRow<'a> {
    machine: &'a str,
    unit: &'a str,
    cluster: usize,
    busy: u64,
    idle: u64,
    utilization: f64,
}

#[derive(Serialize)]
struct TraceRow {
    window: usize,
    start_cycle: u64,
    bsk: u64,
    ksk: u64,
    glwe: u64,
    lwe: u64,
}

fn unit_rows(r: &PerfReport) -> Vec<UnitRow<'_>> {
    r.units
        .iter()
        .map(|u| UnitRow {
            machine: &r.machine,
            unit: &u.unit,
            cluster: u.cluster,
            busy: u.busy,
            idle: u.idle,
            utilization: u.utilization,
        })
        .collect()
}

fn trace_rows(r: &PerfReport) -> Vec<TraceRow> {
    let t = &r.trace;
    (0..t.bsk.len())
        .map(|i| TraceRow {
            window: i,
            start_cycle: i as u64 * t.window_cycles,
            bsk: t.bsk[i],
            ksk: t.ksk[i],
            glwe: t.glwe[i],
            lwe: t.lwe[i],
        })
        .collect()
}

fn headline(r: &PerfReport) -> String {
    format!(
        "{:<7} cycles {} ({:.1} us), peak bandwidth {:.1} B/cycle, BRU utilization {:.4}\n",
        r.machine, r.total_cycles, r.wall_clock_us, r.peak_bandwidth, r.bru_utilization
    )
}

pub fn run_perf(c: &Common, a: &RunPerfArgs) -> Result<Outcome> {
    let p = params_or(c, "gpt2")?;
    let g = load_program(&a.program)?;
    let m = a.machine.load()?;
    let (lg, _) = compile_graph(&g, a.passes.config());
    let s = make_schedule(&lg, &m);
    let t = sim(&lg, &s, &p, &m)?;
    let mut summary = headline(&t);
    let mut units = unit_rows(&t);
    let mut artifacts = vec![artifact("taurus.json", to_json(&t))];
    let x;
    if !a.no_xpu {
        x = simulate_xpu(&lg, &s, &p, &XpuConfig::default(), &m)?;
        summary += &headline(&x);
        let _ = writeln!(summary, "speedup {:.3}", x.total_cycles as f64 / t.total_cycles as f64);
        units.extend(unit_rows(&x));
        artifacts.push(artifact("xpu.json", to_json(&x)));
    }
    artifacts.push(artifact("units.csv", to_csv(&units)));
    if a.trace {
        artifacts.push(artifact("trace.csv", to_csv(&trace_rows(&t))));
    }
    Ok(Outcome {
        summary,
        artifacts,
        ok: true,
    })
}

pub fn simulate(c: &Common, a: &SimulateArgs) -> Result<Outcome> {
    let p = params_or(c, "gpt2")?;
    let compiled: Compiled = from_json(&read_text(&a.compiled)?, &a.compiled)?;
    let mut m = load_machine(a.machine.as_deref(), &a.overrides)?;
    m.clusters = compiled.schedule.clusters;
    m.round_robin = compiled.schedule.per_cluster;
    m.sync = compiled.schedule.sync;
    let r = if a.xpu {
        simulate_xpu(&compiled.lowered, &compiled.schedule, &p, &XpuConfig::default(), &m)?
    } else {
        sim(&compiled.lowered, &compiled.schedule, &p, &m)?
    };
    Ok(Outcome {
        summary: headline(&r),
        artifacts: vec![
            artifact("report.json", to_json(&r)),
            artifact("units.csv", to_csv(&unit_rows(&r))),
            artifact("trace.csv", to_csv(&trace_rows(&r))),
        ],
        ok: true,
    })
}

#[derive(Serialize)]
struct SweepRow {
    value: u64,
    total_cycles: u64,
    throughput: f64,
    peak_bsk: f64,
    peak_ksk: f64,
    peak_glwe: f64,
    peak_lwe: f64,
    peak_total: f64,
    acc_required_kb: f64,
    swap_stall_cycles: u64,
    key_starvation_cycles: u64,
    bru_utilization: f64,
}

impl From<&SweepPoint> for SweepRow {
    fn from(s: &SweepPoint) -> Self {
        SweepRow {
            value: s.value,
            total_cycles: s.total_cycles,
            throughput: s.throughput,
            peak_bsk: s.peak_demand.bsk,
            peak_ksk: s.peak_demand.ksk,
            peak_glwe: s.peak_demand.glwe,
            peak_lwe: s.peak_demand.lwe,
            peak_total: s.peak_demand.total,
            acc_required_kb: s.acc_required_bytes as f64 / 1024.0,
            swap_stall_cycles: s.swap_stall_cycles,
            key_starvation_cycles: s.key_starvation_cycles,
            bru_utilization: s.bru_utilization,
        }
    }
}

/// Parses `start:end:step`.
pub fn parse_range(text: &str) -> Result<Vec<u64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Usage(format!("range `{text}`: expected start:end:step"));
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    match parts.as_slice() {
        [a, b, s] => Ok(range(num(a)?, num(b)?, num(s)?)?),
        [a, b] => Ok(range(num(a)?, num(b)?, 1)?),
        _ => Err(bad()),
    }
}

pub fn sweep(c: &Common, a: &SweepArgs) -> Result<Outcome> {
    let p = params_or(c, "gpt2")?;
    let g = load_program(&a.program)?;
    let m = a.machine.load()?;
    let (lg, _) = compile_graph(&g, a.passes.config());
    let kind = a.kind.into();
    let points = run_sweep(kind, &parse_range(&a.range)?, &lg, &p, &m)?;
    let rows: Vec<SweepRow> = points.iter().map(SweepRow::from).collect();
    let csv = to_csv(&rows);
    let summary = String::from_utf8(csv.clone()).expect("csv is utf-8");
    Ok(Outcome {
        summary,
        artifacts: vec![artifact(&format!("sweep_{}.csv", kind.name()), csv)],
        ok: true,
    })
}

#[derive(Serialize)]
struct DedupRow {
    pass: &'static str,
    enabled: bool,
    before: usize,
    after: usize,
    reduction_pct: f64,
}

pub fn dedup_report(_: &Common, a: &DedupArgs) -> Result<Outcome> {
    let g = load_program(&a.program)?;
    let passes = a.passes.config();
    let (_, s) = compile_graph(&g, passes);
    let rows = [
        DedupRow {
            pass: "ks_dedup",
            enabled: passes.ks_dedup,
            before: s.ks_before,
            after: s.ks_after,
            reduction_pct: percent(s.ks_reduction()),
        },
        DedupRow {
            pass: "acc_dedup",
            enabled: passes.acc_dedup,
            before: s.acc_materializations_before,
            after: s.acc_materializations_after,
            reduction_pct: percent(s.acc_reduction()),
        },
    ];
    let csv = to_csv(&rows);
    Ok(Outcome {
        summary: String::from_utf8(csv.clone()).expect("csv is utf-8"),
        artifacts: vec![artifact("dedup.csv", csv)],
        ok: true,
    })
}

pub fn keygen(c: &Common, a: &KeygenArgs) -> Result<Outcome> {
    let p = params_or(c, "desk")?;
    let keys = make_keys(&p, seed_from_u64(c.seed), a.fft.into())?;
    let bytes = encode_keys(&keys);
    let hash: String = params_hash(&p).iter().map(|b| format!("{b:02x}")).collect();
    let summary = format!(
        "{}: {} GGSW, {} KSK rows, {} bytes, params sha256 {hash}\n",
        p.name,
        keys.eval.bsk.len(),
        keys.eval.ksk.entries().len(),
        bytes.len()
    );
    Ok(Outcome {
        summary,
        artifacts: vec![artifact("keys.tkey", bytes)],
        ok: true,
    })
}
