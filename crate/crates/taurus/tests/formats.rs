use std::path::Path;

use taurus::core::fft::FftMode;
use taurus::core::perf::{MachineConfig, SyncMode};
use taurus::core::tfhe::noise::{seed_from_u64, stream_rng};
use taurus::core::tfhe::{decrypt, encrypt, keygen, lut_from_fn, pbs, preset, preset_names, toy};
use taurus::files::{load_program, parse_program};
use taurus::keyfile::{decode_keys, encode_keys, params_hash, MAGIC};
use taurus::presets::{apply_machine_text, load_machine, resolve_params, shipped_names};
use taurus::Error;

fn programs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/programs"))
}

#[test]
fn shipped_presets_match_builtin_sets() {
    let names: Vec<_> = shipped_names().collect();
    assert_eq!(names.len(), preset_names().len());
    for name in names {
        assert_eq!(resolve_params(name).unwrap(), preset(name).unwrap(), "{name}");
    }
}

#[test]
fn unknown_preset() {
    assert!(matches!(resolve_params("nope"), Err(Error::UnknownPreset(_))));
}

#[test]
fn params_file_errors_carry_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "name = \"x\"\nn = \n").unwrap();
    match resolve_params(path.to_str().unwrap()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn params_file_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("odd.toml");
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/presets/toy.toml")).unwrap();
    std::fs::write(&path, text.replace("N = 256", "N = 255")).unwrap();
    assert!(matches!(resolve_params(path.to_str().unwrap()), Err(Error::Core(_))));
}

#[test]
fn key_file_round_trip() {
    let p = toy();
    let keys = keygen(&p, seed_from_u64(3), FftMode::Reference).unwrap();
    let bytes = encode_keys(&keys);
    assert_eq!(bytes[..8], MAGIC);
    let back = decode_keys(&bytes, Path::new("k"), Some(&p)).unwrap();
    assert_eq!(back.secret, keys.secret);
    assert_eq!(encode_keys(&back), bytes);

    let lut = lut_from_fn(&p, |m| (m + 1) % 4).unwrap();
    let mut rng = stream_rng(seed_from_u64(9), 0);
    for m in 0..4 {
        let ct = encrypt(m, &keys.secret.long, &p, &mut rng).unwrap();
        let a = pbs(&ct, &lut, &keys.eval).unwrap();
        let b = pbs(&ct, &lut, &back.eval).unwrap();
        assert_eq!(a, b);
        assert_eq!(decrypt(&b, &keys.secret.long, &p).unwrap(), (m + 1) % 4);
    }
}

#[test]
fn key_file_rejects_other_params_and_corruption() {
    let p = toy();
    let bytes = encode_keys(&keygen(&p, seed_from_u64(3), FftMode::Reference).unwrap());
    let desk = preset("desk").unwrap();
    assert_ne!(params_hash(&p), params_hash(&desk));
    assert!(matches!(
        decode_keys(&bytes, Path::new("k"), Some(&desk)),
        Err(Error::KeyFile { .. })
    ));

    let mut flipped = bytes.clone();
    let mid = flipped.len() / 2;
    flipped[mid] ^= 1;
    assert!(matches!(
        decode_keys(&flipped, Path::new("k"), None),
        Err(Error::KeyFile { .. })
    ));
    assert!(matches!(
        decode_keys(&bytes[..bytes.len() - 1], Path::new("k"), None),
        Err(Error::KeyFile { .. })
    ));
    assert!(matches!(
        decode_keys(b"garbage", Path::new("k"), None),
        Err(Error::KeyFile { .. })
    ));
}

#[test]
fn program_parse_errors_carry_position() {
    let text = "{\n  \"nodes\": [\n    {\"id\": \"x\", \"op\": \"input\" \"shape\": [1]}\n  ]\n}\n";
    match parse_program(text, Path::new("p.json")) {
        Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 31)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn program_validation_errors_surface() {
    let text = r#"{"nodes": [{"id": "x", "op": "input", "shape": [1]}, {"id": "y", "op": "lut", "args": ["t"]}],
                   "edges": [["x", "y"]]}"#;
    assert!(matches!(parse_program(text, Path::new("p.json")), Err(Error::Core(_))));
}

#[test]
fn shipped_programs_load() {
    for name in ["weighted_relu", "fanout3", "tensor_map64", "gpt2_dense", "overflow"] {
        let g = load_program(&programs().join(format!("{name}.json"))).unwrap();
        assert!(g.compute_nodes() > 0, "{name}");
    }
}

#[test]
fn machine_text_and_overrides() {
    let mut m = MachineConfig::default();
    apply_machine_text(
        &mut m,
        "# comment\nclusters = 8\n\nsync = grouped # trailing\n",
        Path::new("m"),
    )
    .unwrap();
    assert_eq!((m.clusters, m.sync), (8, SyncMode::Grouped));
    match apply_machine_text(&mut m, "clusters = 2\nwarp = 9\n", Path::new("m")) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        apply_machine_text(&mut m, "clusters 2", Path::new("m")),
        Err(Error::Parse { .. })
    ));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.conf");
    std::fs::write(&path, "round_robin = 6\n").unwrap();
    let m = load_machine(Some(&path), &["round_robin=3".to_string()]).unwrap();
    assert_eq!(m.round_robin, 3);
    assert!(load_machine(None, &["clusters=0".to_string()]).is_err());
}
