use std::collections::BTreeMap;

use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use taurus_core::compiler::workloads::{fanout, lut_dense, random_program, relu_table, tensor_map, weighted_relu};
use taurus_core::compiler::*;
use taurus_core::fft::FftMode;
use taurus_core::perf::{MachineConfig, SyncMode};
use taurus_core::tfhe::noise::seed_from_u64;
use taurus_core::tfhe::{keygen, toy, TfheParams};
use taurus_core::{Error, ProgramErrorKind};

fn parse(json: &str) -> taurus_core::Result<ProgramGraph> {
    let spec: ProgramSpec = serde_json::from_str(json).expect("well-formed json");
    ProgramGraph::from_spec(&spec)
}

fn kind(r: taurus_core::Result<ProgramGraph>) -> (String, ProgramErrorKind) {
    match r {
        Err(Error::Program { node, kind }) => (node, kind),
        other => panic!("expected a program error, got {other:?}"),
    }
}

#[test]
fn input_to_output_is_two_nodes() {
    let g = parse(r#"{"nodes":[{"id":"x","op":"input"},{"id":"y","op":"output"}],"edges":[["x","y"]]}"#).unwrap();
    assert_eq!(g.nodes().len(), 2);
    assert_eq!(g.compute_nodes(), 1);
}

#[test]
fn weighted_relu_has_five_compute_nodes() {
    let g = weighted_relu(3);
    assert_eq!(g.compute_nodes(), 5);
    assert_eq!(g.inputs().count(), 2);
    assert_eq!(g.lut_elements(), 1);
}

#[test]
fn parse_errors_name_the_node() {
    let (node, k) = kind(parse(
        r#"{"nodes":[{"id":"x","op":"input"},{"id":"a","op":"add"},{"id":"b","op":"add"}],
            "edges":[["x","a"],["b","a"],["x","b"],["a","b"]]}"#,
    ));
    assert_eq!(k, ProgramErrorKind::Cycle);
    assert!(node == "a" || node == "b");

    let (node, k) = kind(parse(
        r#"{"nodes":[{"id":"x","op":"input"},{"id":"y","op":"sqrt"}],"edges":[["x","y"]]}"#,
    ));
    assert_eq!((node.as_str(), k), ("y", ProgramErrorKind::UnknownOp("sqrt".into())));

    let (node, k) = kind(parse(
        r#"{"nodes":[{"id":"x","op":"input","shape":[2]},{"id":"w","op":"input","shape":[3]},{"id":"s","op":"add"}],
            "edges":[["x","s"],["w","s"]]}"#,
    ));
    assert_eq!(node, "s");
    assert!(matches!(k, ProgramErrorKind::ShapeMismatch(_)));

    let (node, k) = kind(parse(
        r#"{"nodes":[{"id":"x","op":"input"},{"id":"y","op":"lut","args":["nope"]}],"edges":[["x","y"]]}"#,
    ));
    assert_eq!((node.as_str(), k), ("y", ProgramErrorKind::UnknownTable("nope".into())));

    let (node, k) = kind(parse(r#"{"nodes":[{"id":"x","op":"input"},{"id":"x","op":"output"}]}"#));
    assert_eq!((node.as_str(), k), ("x", ProgramErrorKind::DuplicateId));
}

#[test]
fn spec_round_trips_through_json() {
    let g = weighted_relu(3);
    let text = serde_json::to_string(&g.to_spec()).unwrap();
    let back = parse(&text).unwrap();
    assert_eq!(back.to_spec(), g.to_spec());
}

#[test]
fn one_lut_lowers_to_the_four_step_chain() {
    let lg = lower(&tensor_map(1, 3));
    let ops: Vec<&str> = lg.nodes.iter().map(|n| n.op.name()).collect();
    assert_eq!(ops, ["input", "ks", "ms", "br", "se"]);
    let c = lg.counts();
    assert_eq!(c.total() - c.input, 4);
}

#[test]
fn fanout_lowers_to_four_per_lut() {
    for m in [1, 3, 7] {
        let c = lower(&fanout(m, 3)).counts();
        assert_eq!((c.ks, c.ms, c.br, c.se), (m, m, m, m));
        assert_eq!(c.total() - c.input, 4 * m);
    }
}

#[test]
fn add_lowers_to_one_lin() {
    let mut s = ProgramSpec::new();
    let x = s.input("x", &[1]);
    let w = s.input("w", &[1]);
    let a = s.add("a", &x, &w);
    s.output("out", &a);
    let c = lower(&ProgramGraph::from_spec(&s).unwrap()).counts();
    assert_eq!((c.lin, c.total() - c.input), (1, 1));
}

#[test]
fn ks_dedup_on_fanout() {
    let (lg, stats) = ks_dedup(&lower(&fanout(3, 3)));
    assert_eq!((stats.ks_before, stats.ks_after), (3, 1));
    assert_eq!(lg.counts().br, 3);
    for m in [2, 4, 16] {
        let (_, s) = ks_dedup(&lower(&fanout(m, 3)));
        assert_eq!(s.ks_reduction(), (m - 1) as f64 / m as f64);
    }
}

#[test]
fn ks_dedup_without_fanout_changes_nothing() {
    let lg = lower(&lut_dense(3, 5, 3));
    let (out, stats) = ks_dedup(&lg);
    assert_eq!(out, lg);
    assert_eq!(stats, DedupStats::unchanged(&lg));
}

#[test]
fn ks_dedup_reduction_bounded_by_pairs() {
    // Half the inputs feed two lookups, the other half one.
    let mut s = ProgramSpec::new();
    let t = s.table("relu", relu_table(3));
    for i in 0..8 {
        let x = s.input(&format!("x{i}"), &[1]);
        let fan = if i % 2 == 0 { 2 } else { 1 };
        for j in 0..fan {
            let y = s.lut(&format!("y{i}_{j}"), &x, &t);
            s.output(&format!("o{i}_{j}"), &y);
        }
    }
    let (_, stats) = ks_dedup(&lower(&ProgramGraph::from_spec(&s).unwrap()));
    assert_eq!((stats.ks_before, stats.ks_after), (12, 8));
    assert!(stats.ks_reduction() <= 0.5);
}

#[test]
fn acc_dedup_on_tensor_map() {
    let (lg, stats) = acc_dedup(&lower(&tensor_map(64, 3)));
    assert_eq!(
        (stats.acc_materializations_before, stats.acc_materializations_after),
        (64, 1)
    );
    assert_eq!(stats.acc_reduction(), 63.0 / 64.0);
    assert_eq!(lg.acc_materializations(), 1);
}

#[test]
fn acc_dedup_keeps_distinct_tables() {
    let lg = lower(&fanout(5, 3));
    let (out, stats) = acc_dedup(&lg);
    assert_eq!(out, lg);
    assert_eq!(stats.acc_materializations_after, 5);
}

#[test]
fn acc_dedup_merges_equal_content() {
    let mut s = ProgramSpec::new();
    let x = s.input("x", &[1]);
    let a = s.table("a", relu_table(3));
    let b = s.table("b", relu_table(3));
    let ya = s.lut("ya", &x, &a);
    let yb = s.lut("yb", &x, &b);
    s.output("oa", &ya);
    s.output("ob", &yb);
    let (lg, stats) = acc_dedup(&lower(&ProgramGraph::from_spec(&s).unwrap()));
    assert_eq!(
        (stats.acc_materializations_before, stats.acc_materializations_after),
        (2, 1)
    );
    assert_eq!(lg.accumulators[0].table, "a");
}

#[test]
fn passes_are_idempotent_and_monotone() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for _ in 0..40 {
        let lg = lower(&random_program(&mut rng, 30, 3));
        for pass in [ks_dedup, acc_dedup] {
            let (once, _) = pass(&lg);
            let (twice, again) = pass(&once);
            assert_eq!(twice, once);
            assert_eq!(again, DedupStats::unchanged(&once));
            assert!(once.nodes.len() <= lg.nodes.len());
            assert!(once.acc_materializations() <= lg.acc_materializations());
            assert!(once.counts().ks <= lg.counts().ks);
        }
    }
}

#[test]
fn compile_reports_both_passes() {
    let (lg, stats) = compile(&tensor_map(8, 3), PassConfig::default());
    assert_eq!(stats.ks_before, 8);
    assert_eq!(stats.ks_after, 8);
    assert_eq!(stats.acc_materializations_after, 1);
    assert_eq!(lg.acc_materializations(), 1);
    let (plain, stats) = compile(
        &tensor_map(8, 3),
        PassConfig {
            ks_dedup: false,
            acc_dedup: false,
        },
    );
    assert_eq!(stats, DedupStats::unchanged(&plain));
}

#[test]
fn hundred_independent_ciphertexts_take_three_batches() {
    let m = MachineConfig::default();
    let (lg, _) = compile(&tensor_map(100, 3), PassConfig::default());
    let s = schedule(&lg, &m);
    assert_eq!(s.batches.len(), 3);
    assert_eq!(s.blind_rotations(), 100);
    assert_eq!(s.batches[0].cluster_loads(4), [12, 12, 12, 12]);
    assert_eq!(s.batches[2].cluster_loads(4), [1, 1, 1, 1]);
    s.validate(&lg).unwrap();
}

#[test]
fn four_independent_batches_all_overlap() {
    let (lg, _) = compile(&tensor_map(4 * 48, 3), PassConfig::default());
    let s = schedule(&lg, &MachineConfig::default());
    assert_eq!(s.batches.len(), 4);
    assert!(s.batches.iter().all(|b| !b.depends_on_previous));
    assert_eq!(s.overlap_pairs(), 3);
}

#[test]
fn dependent_chain_never_overlaps() {
    let (lg, _) = compile(&lut_dense(5, 1, 3), PassConfig::default());
    let s = schedule(&lg, &MachineConfig::default());
    assert_eq!(s.batches.len(), 5);
    assert!(s.batches.iter().skip(1).all(|b| b.depends_on_previous));
    assert_eq!(s.overlap_pairs(), 0);
}

#[test]
fn schedules_are_valid() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut machines = Vec::new();
    for (clusters, rr, sync) in [
        (4, 12, SyncMode::Full),
        (2, 3, SyncMode::Full),
        (4, 1, SyncMode::Grouped),
    ] {
        machines.push(MachineConfig {
            clusters,
            round_robin: rr,
            sync,
            ..Default::default()
        });
    }
    for _ in 0..30 {
        let (lg, _) = compile(&random_program(&mut rng, 30, 3), PassConfig::default());
        for m in &machines {
            let s = schedule(&lg, m);
            s.validate(&lg).unwrap();
            assert_eq!(s.blind_rotations(), lg.counts().br);
            for b in &s.batches {
                assert!(b.cluster_loads(m.clusters).iter().all(|&l| l <= m.round_robin));
            }
        }
    }
}

#[test]
fn validate_rejects_broken_schedules() {
    let (lg, _) = compile(&lut_dense(2, 3, 3), PassConfig::default());
    let s = schedule(&lg, &MachineConfig::default());
    let mut swapped = s.clone();
    swapped.batches.swap(0, 1);
    assert!(swapped.validate(&lg).is_err());
    let mut dropped = s.clone();
    dropped.batches[0].lpu_post.pop();
    assert!(dropped.validate(&lg).is_err());
    let mut doubled = s;
    let extra = doubled.batches[0].bru[0];
    doubled.batches[1].bru.push(extra);
    assert!(doubled.validate(&lg).is_err());
}

fn all_inputs(g: &ProgramGraph, p: &TfheParams, seed: u64) -> BTreeMap<String, Vec<u64>> {
    let space = p.message_space() as u64;
    g.inputs()
        .enumerate()
        .map(|(i, n)| {
            let vals = (0..n.numel() as u64)
                .map(|e| (seed + 3 * i as u64 + e) % space)
                .collect();
            (n.id.clone(), vals)
        })
        .collect()
}

#[test]
fn interpreter_weighted_relu() {
    let p = taurus_core::tfhe::desk();
    let g = weighted_relu(3);
    // 2x + 3w over values mod 16, then relu on the low 3 bits.
    for (x, w, want) in [(1, 0, 2), (0, 1, 3), (1, 1, 0), (3, 0, 0)] {
        let inputs = BTreeMap::from([("x".to_string(), vec![x]), ("w".to_string(), vec![w])]);
        let r = interpret(&g, &inputs, &p).unwrap();
        assert_eq!(r.outputs["out"], [want], "x={x} w={w}");
        assert!(!r.has_errors());
    }
}

#[test]
fn interpreter_flags_padding_use_and_noise() {
    let p = taurus_core::tfhe::desk();
    let g = weighted_relu(3);
    // 2*7 + 3*7 = 35 = 3 mod 16: wraps, and the lookup input sits below p.
    let inputs = BTreeMap::from([("x".to_string(), vec![7]), ("w".to_string(), vec![7])]);
    let r = interpret(&g, &inputs, &p).unwrap();
    assert!(r
        .diagnostics
        .iter()
        .any(|d| d.node == "c" && d.severity == Severity::Warning));
    // 2*4 = 8 lands in the padding half: the table is read negated.
    let inputs = BTreeMap::from([("x".to_string(), vec![4]), ("w".to_string(), vec![0])]);
    let r = interpret(&g, &inputs, &p).unwrap();
    assert_eq!(r.outputs["out"], [0]);
    assert!(r.diagnostics.iter().any(|d| d.node == "r"));

    let mut s = ProgramSpec::new();
    let x = s.input("x", &[1]);
    let y = s.mul_const("y", &x, 1 << 38);
    s.output("out", &y);
    let g = ProgramGraph::from_spec(&s).unwrap();
    let r = interpret(&g, &BTreeMap::from([("x".to_string(), vec![0])]), &p).unwrap();
    assert!(r.has_errors());
}

#[test]
fn interpreter_rejects_bad_inputs() {
    let p = taurus_core::tfhe::desk();
    let g = weighted_relu(3);
    assert!(interpret(&g, &BTreeMap::new(), &p).is_err());
    let inputs = BTreeMap::from([("x".to_string(), vec![8]), ("w".to_string(), vec![0])]);
    assert!(matches!(
        interpret(&g, &inputs, &p),
        Err(Error::MessageOutOfRange { message: 8, .. })
    ));
}

#[test]
fn encrypted_execution_matches_interpreter() {
    let p = toy();
    let keys = keygen(&p, seed_from_u64(21), FftMode::Reference).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(22);
    for trial in 0..6 {
        let g = random_program(&mut rng, 20, p.width);
        let inputs = all_inputs(&g, &p, trial);
        let want = interpret(&g, &inputs, &p).unwrap();
        assert!(!want.has_errors(), "{:?}", want.diagnostics);
        let (lg, _) = compile(&g, PassConfig::default());
        let cts = encrypt_inputs(&inputs, &keys.secret, &p, seed_from_u64(trial)).unwrap();
        let (out, stats) = execute(&lg, &keys.eval, &cts).unwrap();
        assert_eq!(stats.counters.pbs, lg.counts().br);
        assert!(stats.lut_encodings <= lg.acc_materializations());
        assert_eq!(decrypt_outputs(&out, &keys.secret, &p).unwrap(), want.outputs);
    }
}

#[test]
fn dedup_preserves_ciphertexts() {
    let p = toy();
    let keys = keygen(&p, seed_from_u64(31), FftMode::Reference).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(32);
    let configs = [(false, false), (true, false), (false, true), (true, true)];
    for trial in 0..8 {
        let g = random_program(&mut rng, 30, p.width);
        let inputs = all_inputs(&g, &p, trial);
        let cts = encrypt_inputs(&inputs, &keys.secret, &p, seed_from_u64(100 + trial)).unwrap();
        let runs: Vec<_> = configs
            .iter()
            .map(|&(ks_dedup, acc_dedup)| {
                let (lg, _) = compile(&g, PassConfig { ks_dedup, acc_dedup });
                execute(&lg, &keys.eval, &cts).unwrap().0
            })
            .collect();
        for r in &runs[1..] {
            assert_eq!(r, &runs[0]);
        }
    }
}
