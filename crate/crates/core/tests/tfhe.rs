use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use taurus_core::fft::{build_plan, FftMode};
use taurus_core::tfhe::noise::{seed_from_u64, stream_rng};
use taurus_core::tfhe::*;
use taurus_core::torus::{Torus, TorusPolynomial};
use taurus_core::Error;

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn small_params() -> TfheParams {
    TfheParams {
        name: "n64".into(),
        big_n: 64,
        n: 16,
        ..toy()
    }
}

#[test]
fn keygen_is_deterministic() {
    let p = toy();
    let a = keygen(&p, seed_from_u64(9), FftMode::Reference).unwrap();
    let b = keygen(&p, seed_from_u64(9), FftMode::Reference).unwrap();
    assert_eq!(a.secret, b.secret);
    assert_eq!(a.eval.bsk, b.eval.bsk);
    assert_eq!(a.eval.ksk, b.eval.ksk);
    let c = keygen(&p, seed_from_u64(10), FftMode::Reference).unwrap();
    assert_ne!(a.secret, c.secret);
}

#[test]
fn bsk_has_one_ggsw_per_short_key_bit() {
    let cnn20 = preset("cnn-20").unwrap();
    assert_eq!((cnn20.n, cnn20.big_n, cnn20.k, cnn20.width), (737, 2048, 1, 6));
    let keys = keygen(&cnn20, seed_from_u64(1), FftMode::Reference).unwrap();
    assert_eq!(keys.eval.bsk.len(), 737);
    assert_eq!(keys.eval.ksk.n_long(), 2048);
    assert_eq!(keys.eval.ksk.entries().len(), 2048 * cnn20.ks_gadget.depth as usize);
}

#[test]
fn zero_noise_round_trip_is_exact() {
    let p = desk().noiseless();
    let sk = generate_secret_keys(&p, seed_from_u64(2)).unwrap();
    let mut r = rng(3);
    for key in [&sk.short, &sk.long] {
        for m in 0..p.message_space() as u64 {
            let ct = encrypt(m, key, &p, &mut r).unwrap();
            assert_eq!(lwe_phase(&ct, key).unwrap(), encode(m, &p));
            assert_eq!(decrypt(&ct, key, &p).unwrap(), m);
        }
    }
}

#[test]
fn encrypt_decrypt_1000_trials() {
    let p = desk();
    let sk = generate_secret_keys(&p, seed_from_u64(4)).unwrap();
    let mut r = rng(5);
    for t in 0..1000u64 {
        let m = t % 8;
        let ct = encrypt(m, &sk.long, &p, &mut r).unwrap();
        assert_eq!(decrypt(&ct, &sk.long, &p).unwrap(), m);
    }
}

#[test]
fn zero_message_zero_mask_zero_noise() {
    let p = desk().noiseless();
    let sk = generate_secret_keys(&p, seed_from_u64(6)).unwrap();
    let zeros = LweSecretKey::from_bits(vec![0; sk.long.len()], LweDim::Long);
    let ct = encrypt(0, &zeros, &p, &mut rng(1)).unwrap();
    assert_eq!(ct.body, Torus::ZERO);
    // Deterministic body given the mask.
    let ct2 = encrypt_torus(encode(3, &p), &sk.long, 0.0, &mut rng(7));
    let ct3 = encrypt_torus(encode(3, &p), &sk.long, 0.0, &mut rng(7));
    assert_eq!(ct2, ct3);
}

#[test]
fn message_out_of_range() {
    let p = desk();
    let sk = generate_secret_keys(&p, seed_from_u64(6)).unwrap();
    assert_eq!(
        encrypt(8, &sk.long, &p, &mut rng(1)).unwrap_err(),
        Error::MessageOutOfRange { message: 8, width: 3 }
    );
}

#[test]
fn linear_operations() {
    let mut p = desk();
    p.width = 4;
    let sk = generate_secret_keys(&p, seed_from_u64(8)).unwrap();
    let mut r = rng(9);
    let a = encrypt(6, &sk.long, &p, &mut r).unwrap();
    let z = encrypt(0, &sk.long, &p.noiseless(), &mut r).unwrap();
    assert_eq!(decrypt(&lwe_add(&a, &z).unwrap(), &sk.long, &p).unwrap(), 6);
    assert_eq!(lwe_mul_const(&a, 1), a);
    for _ in 0..100 {
        let x = encrypt(2, &sk.long, &p, &mut r).unwrap();
        let y = encrypt(3, &sk.long, &p, &mut r).unwrap();
        assert_eq!(decrypt(&lwe_add(&x, &y).unwrap(), &sk.long, &p).unwrap(), 5);
    }
    // sum c_i m_i with mixed signs.
    let ms = [1u64, 2, 3, 4];
    let cs = [3i64, -1, 2, 1];
    let mut acc = LweCiphertext::trivial(Torus::ZERO, sk.long.len(), LweDim::Long);
    for (&m, &c) in ms.iter().zip(&cs) {
        acc.add_assign(&lwe_mul_const(&encrypt(m, &sk.long, &p, &mut r).unwrap(), c))
            .unwrap();
    }
    let want = ms
        .iter()
        .zip(&cs)
        .map(|(&m, &c)| m as i64 * c)
        .sum::<i64>()
        .rem_euclid(16) as u64;
    assert_eq!(decrypt(&acc, &sk.long, &p).unwrap(), want);
    let short = encrypt(1, &sk.short, &p, &mut r).unwrap();
    assert!(matches!(lwe_add(&a, &short), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn key_switch_round_trip() {
    let p = desk();
    let keys = keygen(&p, seed_from_u64(11), FftMode::Reference).unwrap();
    let mut r = rng(12);
    for m in 0..8 {
        for _ in 0..100 {
            let ct = encrypt(m, &keys.secret.long, &p, &mut r).unwrap();
            let s = key_switch(&ct, &keys.eval.ksk).unwrap();
            assert_eq!(s.dim, LweDim::Short);
            assert_eq!(s.len(), p.n);
            assert_eq!(decrypt(&s, &keys.secret.short, &p).unwrap(), m);
        }
    }
}

#[test]
fn key_switch_zero_is_zero_without_noise() {
    let p = desk().noiseless();
    let keys = keygen(&p, seed_from_u64(13), FftMode::Reference).unwrap();
    let z = LweCiphertext::trivial(Torus::ZERO, p.n_long(), LweDim::Long);
    let out = key_switch(&z, &keys.eval.ksk).unwrap();
    assert!(out.mask.iter().all(|&t| t == Torus::ZERO) && out.body == Torus::ZERO);
    let short = LweCiphertext::trivial(Torus::ZERO, p.n, LweDim::Short);
    assert!(key_switch(&short, &keys.eval.ksk).is_err());
}

#[test]
fn key_switch_noise_within_bound() {
    let p = desk();
    let keys = keygen(&p, seed_from_u64(14), FftMode::Reference).unwrap();
    let est = p.noise_estimate();
    let mut r = rng(15);
    let trials = 10_000;
    let mut var = 0.0;
    for t in 0..trials {
        let m = t % 8;
        let ct = encrypt(m, &keys.secret.long, &p, &mut r).unwrap();
        let s = key_switch(&ct, &keys.eval.ksk).unwrap();
        let e = phase_error(&s, &keys.secret.short, m, &p).unwrap();
        var += e * e;
    }
    var /= trials as f64;
    let bound = est.input + est.key_switch;
    assert!(var <= 1.1 * bound, "measured {var:e}, bound {bound:e}");
    assert!(var >= 0.5 * bound, "measured {var:e} far below model {bound:e}");
}

#[test]
fn mod_switch_lwe_lifts_scalar() {
    let ct = LweCiphertext {
        mask: vec![Torus(0), Torus(1 << 63), Torus((1 << 63) + (1 << 52))],
        body: Torus((1 << 63) + (1 << 52) - 1),
        dim: LweDim::Short,
    };
    assert_eq!(mod_switch_lwe(&ct, 1024), vec![0, 1024, 1025, 1024]);
}

fn glwe_setup(p: &TfheParams, seed: u64) -> (GlweSecretKey, taurus_core::fft::FftPlan, ChaCha20Rng) {
    let sk = generate_secret_keys(p, seed_from_u64(seed)).unwrap();
    (sk.glwe, build_plan(p.big_n).unwrap(), rng(seed + 100))
}

fn rand_plain(r: &mut ChaCha20Rng, n: usize, width: u32) -> TorusPolynomial {
    TorusPolynomial::from_coeffs(
        (0..n)
            .map(|_| Torus((r.next_u64() % (1 << width)) << (63 - width)))
            .collect(),
    )
}

#[test]
fn external_product_identity_and_zero() {
    let p = small_params();
    let (key, plan, mut r) = glwe_setup(&p, 20);
    let mu = rand_plain(&mut r, 64, 2);
    let c = encrypt_glwe(&mu, &key, 0.0, &plan, &mut r).unwrap();
    for mode in [FftMode::Reference, FftMode::Fixed48] {
        let mut g0 = encrypt_ggsw(0, &key, p.pbs_gadget, 0.0, &plan, &mut r).unwrap();
        g0.prepare(&plan, mode).unwrap();
        let out = external_product(&g0, &c, &plan).unwrap();
        let ph = glwe_phase(&out, &key, &plan).unwrap();
        assert!(ph.coeffs().iter().all(|t| t.to_signed_fraction().abs() < 1e-4));

        let mut g1 = encrypt_ggsw(1, &key, p.pbs_gadget, 0.0, &plan, &mut r).unwrap();
        g1.prepare(&plan, mode).unwrap();
        let out = external_product(&g1, &c, &plan).unwrap();
        let ph = glwe_phase(&out, &key, &plan).unwrap();
        for (a, b) in ph.coeffs().iter().zip(mu.coeffs()) {
            assert!((*a - *b).to_signed_fraction().abs() < 1e-4);
        }
    }
}

#[test]
fn external_product_matches_schoolbook() {
    for (degree, trials) in [(8usize, 50), (64, 100)] {
        let mut r = rng(degree as u64);
        let plan = build_plan(degree).unwrap();
        for trial in 0..trials {
            let k = 1 + trial % 2;
            let key = GlweSecretKey::generate(k, degree, &mut r);
            let gadget =
                taurus_core::torus::GadgetParams::new(4 + (trial as u32 % 3) * 2, 2 + trial as u32 % 2).unwrap();
            let bit = (trial % 2) as i64;
            let g = encrypt_ggsw(bit, &key, gadget, 1e-9, &plan, &mut r).unwrap();
            let c = encrypt_glwe(&rand_plain(&mut r, degree, 3), &key, 1e-9, &plan, &mut r).unwrap();
            let want = external_product_schoolbook(&g, &c).unwrap();
            for mode in [FftMode::Reference, FftMode::Fixed48] {
                let mut gm = g.clone();
                gm.prepare(&plan, mode).unwrap();
                assert_eq!(
                    external_product(&gm, &c, &plan).unwrap(),
                    want,
                    "N={degree} trial={trial} {mode:?}"
                );
            }
        }
    }
}

#[test]
fn cmux_selects() {
    let p = small_params();
    let (key, plan, mut r) = glwe_setup(&p, 21);
    let m0 = rand_plain(&mut r, 64, 2);
    let m1 = rand_plain(&mut r, 64, 2);
    let c0 = encrypt_glwe(&m0, &key, 1e-9, &plan, &mut r).unwrap();
    let c1 = encrypt_glwe(&m1, &key, 1e-9, &plan, &mut r).unwrap();
    let close = |c: &GlweCiphertext, m: &TorusPolynomial| {
        let ph = glwe_phase(c, &key, &plan).unwrap();
        ph.coeffs()
            .iter()
            .zip(m.coeffs())
            .all(|(a, b)| (*a - *b).to_signed_fraction().abs() < 1e-3)
    };
    for bit in [0, 1] {
        let mut g = encrypt_ggsw(bit, &key, p.pbs_gadget, 1e-9, &plan, &mut r).unwrap();
        g.prepare(&plan, FftMode::Reference).unwrap();
        let out = cmux(&g, &c0, &c1, &plan).unwrap();
        assert!(close(&out, if bit == 0 { &m0 } else { &m1 }));
        assert_eq!(cmux(&g, &c0, &c0, &plan).unwrap(), c0);
    }
}

#[test]
fn sample_extract_oracles() {
    let p = small_params();
    let (key, plan, mut r) = glwe_setup(&p, 22);
    let body = rand_plain(&mut r, 64, 3);
    let trivial = GlweCiphertext::trivial(body.clone(), 1);
    let lwe = sample_extract(&trivial);
    assert_eq!(lwe.body, body.coeffs()[0]);
    assert!(lwe.mask.iter().all(|&t| t == Torus::ZERO));
    assert_eq!((lwe.dim, lwe.len()), (LweDim::Long, 64));
    for _ in 0..20 {
        let c = encrypt_glwe(&rand_plain(&mut r, 64, 3), &key, 1e-6, &plan, &mut r).unwrap();
        let ph = glwe_phase(&c, &key, &plan).unwrap();
        assert_eq!(lwe_phase(&sample_extract(&c), &key.flatten()).unwrap(), ph.coeffs()[0]);
    }
}

#[test]
fn lut_encoding_examples() {
    let q8 = 1u64 << 61;
    let lut = LookupTable::encode(&[0, 1, 2, 3], 2, 8, 1).unwrap();
    let got: Vec<u64> = lut.encoded().body.coeffs().iter().map(|t| t.0).collect();
    assert_eq!(got, vec![0, q8, q8, 2 * q8, 2 * q8, 3 * q8, 3 * q8, 0]);
    assert!(lut.encoded().mask.iter().all(|m| m.is_zero()));

    let c = LookupTable::encode(&[5; 8], 3, 64, 1).unwrap();
    let first = c.encoded().body.coeffs()[0];
    assert!(c.encoded().body.coeffs()[..60].iter().all(|&t| t == first));

    let p = desk();
    assert_eq!(
        encode_lut(&[0; 7], &p).unwrap_err(),
        Error::LutLength { expected: 8, got: 7 }
    );
    assert_eq!(
        encode_lut(&[0, 0, 0, 9, 0, 0, 0, 0], &p).unwrap_err(),
        Error::LutEntry { index: 3, value: 9 }
    );
}

#[test]
fn noiseless_pbs_on_tiny_ring_is_identity() {
    // Width 2, N = 64: the smallest ring the parameter checks accept.
    let p = small_params().noiseless();
    let keys = keygen(&p, seed_from_u64(23), FftMode::Reference).unwrap();
    let lut = lut_from_fn(&p, |m| m).unwrap();
    let mut r = rng(24);
    for m in 0..4 {
        let ct = encrypt(m, &keys.secret.long, &p, &mut r).unwrap();
        let out = pbs(&ct, &lut, &keys.eval).unwrap();
        assert_eq!(decrypt(&out, &keys.secret.long, &p).unwrap(), m);
    }
}

#[test]
fn blind_rotation_examples() {
    let p = toy();
    let keys = keygen(&p, seed_from_u64(25), FftMode::Reference).unwrap();
    let lut = lut_from_fn(&p, |m| (m + 1) % 4).unwrap();
    let zero = vec![0usize; p.n + 1];
    let mut counters = OpCounters::default();
    let acc = blind_rotate_counted(&lut, &zero, &keys.eval.bsk, &keys.eval.plan, &mut counters).unwrap();
    assert_eq!(&acc, lut.encoded());
    assert_eq!(counters.cmux, p.n);

    let constant = lut_from_fn(&p, |_| 2).unwrap();
    let mut r = rng(26);
    for m in 0..4 {
        let ct = encrypt(m, &keys.secret.long, &p, &mut r).unwrap();
        let out = pbs(&ct, &constant, &keys.eval).unwrap();
        assert_eq!(decrypt(&out, &keys.secret.long, &p).unwrap(), 2);
    }
}

#[test]
fn identity_blind_rotation_desk() {
    let p = desk();
    let keys = keygen(&p, seed_from_u64(27), FftMode::Reference).unwrap();
    let lut = lut_from_fn(&p, |m| m).unwrap();
    let mut r = rng(28);
    for m in 0..8 {
        for _ in 0..50 {
            let ct = encrypt(m, &keys.secret.long, &p, &mut r).unwrap();
            let short = key_switch(&ct, &keys.eval.ksk).unwrap();
            let ms = mod_switch_lwe(&short, p.big_n);
            let acc = blind_rotate(&lut, &ms, &keys.eval.bsk, &keys.eval.plan).unwrap();
            let ph = glwe_phase(&acc, &keys.secret.glwe, &keys.eval.plan).unwrap();
            assert_eq!(decode(ph.coeffs()[0], &p), m);
        }
    }
}

#[test]
fn pbs_counts_one_cmux_per_short_key_bit() {
    let p = desk();
    let keys = keygen(&p, seed_from_u64(29), FftMode::Reference).unwrap();
    let lut = lut_from_fn(&p, |m| m).unwrap();
    let ct = encrypt(3, &keys.secret.long, &p, &mut rng(30)).unwrap();
    let mut c = OpCounters::default();
    pbs_counted(&ct, &lut, &keys.eval, &mut c).unwrap();
    assert_eq!(c.cmux, p.n);
    assert_ne!(c.cmux, p.n_long());
    assert_eq!((c.pbs, c.key_switches, c.mod_switches, c.sample_extracts), (1, 1, 1, 1));
    assert_eq!(c.forward_ffts, p.n * (p.k + 1) * p.pbs_gadget.depth as usize);
}

#[test]
fn relu_and_chained_pbs() {
    let p = desk();
    let keys = keygen(&p, seed_from_u64(31), FftMode::Reference).unwrap();
    let relu = lut_from_fn(&p, |m| if m >= 4 { m } else { 0 }).unwrap();
    let id = lut_from_fn(&p, |m| m).unwrap();
    let mut r = rng(32);
    for m in 0..8 {
        let ct = encrypt(m, &keys.secret.long, &p, &mut r).unwrap();
        let out = pbs(&ct, &relu, &keys.eval).unwrap();
        assert_eq!(decrypt(&out, &keys.secret.long, &p).unwrap(), relu.apply(m));
    }
    let mut ct = encrypt(5, &keys.secret.long, &p, &mut r).unwrap();
    for _ in 0..20 {
        ct = pbs(&ct, &id, &keys.eval).unwrap();
        assert_eq!(decrypt(&ct, &keys.secret.long, &p).unwrap(), 5);
    }
}

#[test]
fn fixed_and_reference_pbs_agree_bit_for_bit() {
    // Both datapaths compute exact products, so ciphertexts match.
    let p = toy();
    let seed = seed_from_u64(33);
    let kr = keygen(&p, seed, FftMode::Reference).unwrap();
    let kf = keygen(&p, seed, FftMode::Fixed48).unwrap();
    let lut = lut_from_fn(&p, |m| 3 - m).unwrap();
    let mut r = stream_rng(seed, 99);
    for m in 0..4 {
        let ct = encrypt(m, &kr.secret.long, &p, &mut r).unwrap();
        let a = pbs(&ct, &lut, &kr.eval).unwrap();
        let b = pbs(&ct, &lut, &kf.eval).unwrap();
        assert_eq!(a, b);
        assert_eq!(decrypt(&a, &kr.secret.long, &p).unwrap(), 3 - m);
    }
}

fn desk_sets() -> Vec<TfheParams> {
    let mut sets = vec![toy(), desk()];
    sets.extend(workload_sets().iter().map(desk_scaled));
    sets
}

fn identity_pbs_sweep(trials: usize) {
    for (i, p) in desk_sets().into_iter().enumerate() {
        assert!(p.big_n <= 1 << 12 && p.width <= 6);
        let keys = keygen(&p, seed_from_u64(40 + i as u64), FftMode::Reference).unwrap();
        let lut = lut_from_fn(&p, |m| m).unwrap();
        let mut r = rng(60 + i as u64);
        let space = p.message_space() as u64;
        let mut wrong = 0;
        for t in 0..trials.max(space as usize) {
            let m = t as u64 % space;
            let ct = encrypt(m, &keys.secret.long, &p, &mut r).unwrap();
            let out = pbs(&ct, &lut, &keys.eval).unwrap();
            wrong += (decrypt(&out, &keys.secret.long, &p).unwrap() != m) as usize;
        }
        assert_eq!(wrong, 0, "{}", p.name);
    }
}

#[test]
fn desk_sets_identity_pbs_every_message() {
    identity_pbs_sweep(0);
}

#[test]
#[ignore = "about 9000 bootstraps; run with --ignored"]
fn desk_sets_identity_pbs_thousand_trials() {
    identity_pbs_sweep(1000);
}

fn sample_std(xs: &[f64]) -> f64 {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    var.sqrt()
}

#[test]
fn pbs_output_noise_ignores_input_noise() {
    let p = toy();
    let keys = keygen(&p, seed_from_u64(70), FftMode::Reference).unwrap();
    let lut = lut_from_fn(&p, |m| m).unwrap();
    let key = &keys.secret.long;
    let mut r = rng(71);
    let samples = 300;
    let mut fresh = Vec::new();
    let mut summed = Vec::new();
    let mut in_fresh = Vec::new();
    let mut in_summed = Vec::new();
    for s in 0..samples {
        let m = s as u64 % 4;
        let a = encrypt(m, key, &p, &mut r).unwrap();
        let mut b = encrypt(m, key, &p, &mut r).unwrap();
        for _ in 0..10 {
            b.add_assign(&encrypt(0, key, &p, &mut r).unwrap()).unwrap();
        }
        in_fresh.push(phase_error(&a, key, m, &p).unwrap());
        in_summed.push(phase_error(&b, key, m, &p).unwrap());
        fresh.push(phase_error(&pbs(&a, &lut, &keys.eval).unwrap(), key, m, &p).unwrap());
        summed.push(phase_error(&pbs(&b, &lut, &keys.eval).unwrap(), key, m, &p).unwrap());
    }
    // Inputs differ by sqrt(11) in noise; outputs must not.
    let input_ratio = sample_std(&in_summed) / sample_std(&in_fresh);
    assert!(input_ratio > 2.5, "{input_ratio}");
    let ratio = sample_std(&summed) / sample_std(&fresh);
    assert!((0.8..1.25).contains(&ratio), "{ratio}");
}
