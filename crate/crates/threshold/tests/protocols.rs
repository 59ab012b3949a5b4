//! End-to-end protocol checks at the toy preset: collective keys match
//! their single-party counterparts, full-threshold enforcement holds, and
//! refresh restores the level without moving the values.

use pcol_ckks::{gen_params, Evaluator, Preset};
use pcol_threshold::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn toy_network(parties: usize, seed: u64) -> Network {
    let params = gen_params(Preset::Toy).unwrap();
    let mut net = Network::new(params, parties, seed, &[1, 2, 4, 8]).unwrap();
    net.run_keygen().unwrap();
    net
}

fn max_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn secret_shares_are_deterministic_and_ternary() {
    let params = gen_params(Preset::Toy).unwrap();
    let a = gen_secret_share(&params, 42);
    let b = gen_secret_share(&params, 42);
    assert_eq!(a.poly().row(0), b.poly().row(0));
    let c = gen_secret_share(&params, 43);
    assert_ne!(a.poly().row(0), c.poly().row(0));
    // ternary coefficients: reconstruct and check
    let mut poly = a.poly().restricted(2, false);
    poly.to_coeff();
    for v in poly.to_centered_f64() {
        assert!(v == 0.0 || v == 1.0 || v == -1.0);
    }
}

#[test]
fn collective_encrypt_decrypt_roundtrip() {
    for parties in [2usize, 5] {
        let mut net = toy_network(parties, 100 + parties as u64);
        let ev = net.evaluator();
        let values: Vec<f64> = (0..16).map(|i| 0.1 * i as f64 - 0.6).collect();
        let pt = ev.encode_default(&values).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let ct = ev.encrypt(&pt, &net.keys().unwrap().public, &mut rng).unwrap();
        let back = net.collective_decrypt(&ct).unwrap();
        let e = max_err(&values, &back);
        assert!(e < 1e-4, "P={parties}: roundtrip error {e:.3e}");
        assert_eq!(net.session().state(), SessionState::Done);
    }
}

#[test]
fn collective_decryption_matches_joint_secret() {
    let mut net = toy_network(3, 7);
    let ev = net.evaluator();
    let values = vec![0.5, -0.25, 0.75, 0.125];
    let pt = ev.encode_default(&values).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let ct = ev.encrypt(&pt, &net.keys().unwrap().public, &mut rng).unwrap();
    // the joint secret decrypts exactly like the protocol (minus smudging)
    let joint = net.joint_secret();
    let direct = ev.decrypt_values(&ct, &joint).unwrap();
    let collective = net.collective_decrypt(&ct).unwrap();
    // differs from the direct decryption only by the smudging noise
    assert!(max_err(&direct, &collective) < 5e-5);
    assert!(max_err(&values, &direct) < 1e-5);
}

#[test]
fn collective_relin_key_multiplies() {
    for parties in [2usize, 3] {
        let mut net = toy_network(parties, 11 + parties as u64);
        let ev = net.evaluator();
        let keys = net.keys().unwrap();
        let a = vec![1.5, -2.0, 0.5, 3.0];
        let b = vec![2.0, 0.5, -4.0, 1.0];
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let ca = ev
            .encrypt(&ev.encode_default(&a).unwrap(), &keys.public, &mut rng)
            .unwrap();
        let cb = ev
            .encrypt(&ev.encode_default(&b).unwrap(), &keys.public, &mut rng)
            .unwrap();
        let prod = ev.mult(&ca, &cb, &keys.relin).unwrap();
        let back = net.collective_decrypt(&prod).unwrap();
        let want: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let e = max_err(&want, &back[..4]);
        assert!(e < 1e-4, "P={parties}: product error {e:.3e}");
    }
}

#[test]
fn collective_rotation_key_rotates() {
    let mut net = toy_network(2, 17);
    let ev = net.evaluator();
    let keys = net.keys().unwrap();
    let values: Vec<f64> = (0..16).map(|i| i as f64 * 0.05).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let ct = ev
        .encrypt(&ev.encode_default(&values).unwrap(), &keys.public, &mut rng)
        .unwrap();
    let rot = ev.rotate(&ct, 1, &keys.rotations).unwrap();
    let back = net.collective_decrypt(&rot).unwrap();
    for j in 0..16 {
        let want = values[(j + 1) % 16];
        assert!((back[j] - want).abs() < 1e-4, "slot {j}");
    }
}

#[test]
fn strict_subsets_learn_nothing() {
    let params = gen_params(Preset::Toy).unwrap();
    let mut net = Network::new(params.clone(), 3, 23, &[]).unwrap();
    net.run_keygen().unwrap();
    let ev = Evaluator::new(params);
    let keys = net.keys().unwrap();
    let values = vec![0.7; 16];
    let mut rng = ChaCha20Rng::seed_from_u64(31);
    let mut garbage_trials = 0;
    for trial in 0..100 {
        let ct = ev
            .encrypt(&ev.encode_default(&values).unwrap(), &keys.public, &mut rng)
            .unwrap();
        // two of three partials only
        let mut m = ct.c0().clone();
        for id in 0..2u16 {
            let mut prng = ChaCha20Rng::seed_from_u64(1000 + trial);
            let d = partial_decrypt(&ct, net.party_share(id), 20, &mut prng);
            m.add_assign(&d);
        }
        let pt = pcol_ckks::Plaintext::from_parts(m, ct.level(), ct.scale(), 0.0);
        let decoded = ev.decode(&pt);
        let worst = decoded.iter().fold(0.0f64, |a, v| a.max((v - 0.7).abs()));
        if worst > 1e3 {
            garbage_trials += 1;
        }
    }
    assert!(garbage_trials >= 99, "only {garbage_trials}/100 trials were garbage");
}

#[test]
fn withheld_contribution_fails_atomically() {
    let params = gen_params(Preset::Toy).unwrap();
    let mut net = Network::new(params, 3, 29, &[]).unwrap();
    net.set_offline(1);
    let err = net.run_keygen().unwrap_err();
    assert!(matches!(err, ThresholdError::MissingParty { party: 1, .. }));
    assert_eq!(net.session().state(), SessionState::Failed);
}

#[test]
fn offline_party_blocks_decryption() {
    let mut net = toy_network(3, 37);
    let ev = net.evaluator();
    let pt = ev.encode_default(&[1.0; 16]).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(41);
    let ct = ev.encrypt(&pt, &net.keys().unwrap().public, &mut rng).unwrap();
    net.set_offline(2);
    let err = net.collective_decrypt(&ct).unwrap_err();
    assert!(matches!(
        err,
        ThresholdError::MissingParty { party: 2, round: "PartialDecryption" }
    ));
    assert_eq!(net.session().state(), SessionState::Failed);
}

#[test]
fn refresh_restores_level_and_values() {
    let mut net = toy_network(2, 43);
    let ev = net.evaluator_handle();
    let keys = net.keys().unwrap();
    let values = vec![0.9, -0.4, 0.2, 0.65];
    let mut rng = ChaCha20Rng::seed_from_u64(47);
    let fresh = ev
        .encrypt(&ev.encode_default(&values).unwrap(), &keys.public, &mut rng)
        .unwrap();
    // burn some levels first
    let mut ct = fresh.clone();
    for _ in 0..2 {
        let partner = ev.mod_drop_to_level(&fresh, ct.level()).unwrap();
        let ones = ev
            .encode(&vec![1.0; 16], partner.level(), ev.params().scale())
            .unwrap();
        ct = ev.mult_plain(&ct, &ones).unwrap();
    }
    assert_eq!(ct.level(), ev.params().max_level() - 2);

    let refreshed = net.refresh(&ct).unwrap();
    assert_eq!(refreshed.level(), net.params().max_level());
    let scale_drift = (refreshed.scale() / net.params().scale() - 1.0).abs();
    assert!(scale_drift < 2f64.powi(-10), "scale drift {scale_drift:.3e}");
    assert_eq!(net.refresh_count(), 1);

    let back = net.collective_decrypt(&refreshed).unwrap();
    let e = max_err(&values, &back[..4]);
    assert!(e < 1e-4, "refresh value drift {e:.3e}");
}

#[test]
fn refresh_of_fresh_ciphertext_preserves_values() {
    let mut net = toy_network(2, 53);
    let ev = net.evaluator();
    let values = vec![0.11, 0.22, 0.33];
    let mut rng = ChaCha20Rng::seed_from_u64(59);
    let ct = ev
        .encrypt(&ev.encode_default(&values).unwrap(), &net.keys().unwrap().public, &mut rng)
        .unwrap();
    let refreshed = net.refresh(&ct).unwrap();
    let back = net.collective_decrypt(&refreshed).unwrap();
    assert!(max_err(&values, &back[..3]) < 1e-4);
}

#[test]
fn disjoint_sessions_do_not_interoperate() {
    let mut net_a = toy_network(2, 61);
    let mut net_b = toy_network(2, 62);
    let ev = net_a.evaluator();
    let values = vec![0.5; 16];
    let mut rng = ChaCha20Rng::seed_from_u64(67);
    let ct = ev
        .encrypt(&ev.encode_default(&values).unwrap(), &net_a.keys().unwrap().public, &mut rng)
        .unwrap();
    // decrypting A's ciphertext with B's shares yields garbage
    let cross = net_b.collective_decrypt(&ct).unwrap();
    let worst = cross.iter().fold(0.0f64, |a, v| a.max((v - 0.5).abs()));
    assert!(worst > 1e3, "cross-session decryption too accurate: {worst}");
    // while A still decrypts fine
    let ok = net_a.collective_decrypt(&ct).unwrap();
    assert!(max_err(&values, &ok) < 1e-4);
}

#[test]
fn smudging_headroom_is_enforced() {
    let mut net = toy_network(2, 71);
    let ev = net.evaluator();
    let pt = ev.encode_default(&[0.5]).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(73);
    let ct = ev.encrypt(&pt, &net.keys().unwrap().public, &mut rng).unwrap();
    // toy modulus product ~ 2^165; 2^170 smudging cannot fit
    let err = net.collective_decrypt_with(&ct, 170).unwrap_err();
    assert!(matches!(
        err,
        ThresholdError::Ckks(pcol_ckks::CkksError::NoiseOverflow(_))
    ));
}
