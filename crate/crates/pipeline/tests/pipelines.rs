//! Oracle-equivalence tests at the desk preset: every homomorphic pipeline
//! must match its plaintext counterpart (same quadrature, same truncated
//! series), separating scheme noise from mathematical approximation error.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use pcol_ckks::{gen_params, keygen, Evaluator, KeyMaterial, Preset};
use pcol_core::{integrate_pcol, EncounterGeometry, QuadratureSpec, Rule};
use pcol_pipeline::geometry_enc::EncryptedGeometry;
use pcol_pipeline::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

struct Desk {
    evaluator: Evaluator,
    keys: KeyMaterial,
}

fn desk() -> &'static Desk {
    static DESK: OnceLock<Desk> = OnceLock::new();
    DESK.get_or_init(|| {
        let params = gen_params(Preset::Desk).unwrap();
        let steps: Vec<i64> = (0..12).map(|i| 1i64 << i).collect();
        let keys = keygen(&params, 424242, &steps);
        Desk {
            evaluator: Evaluator::new(params),
            keys,
        }
    })
}

fn encrypted_geometry(
    d: &Desk,
    sx: f64,
    sz: f64,
    r: f64,
    parties: usize,
    seed: u64,
) -> EncryptedGeometry {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let shares = GeometryShares::split(sx, sz, parties, &mut rng);
    let encrypted: Vec<_> = shares
        .iter()
        .map(|s| s.encrypt(&d.evaluator, &d.keys.public, &mut rng).unwrap())
        .collect();
    combine_encrypted_shares(&d.evaluator, &encrypted, parties, r).unwrap()
}

#[test]
fn encrypted_shares_combine_to_the_true_inverses() {
    let d = desk();
    for parties in [2usize, 3] {
        let geom = encrypted_geometry(d, 50.0, 25.0, 5.0, parties, 7 + parties as u64);
        let sx2 = d
            .evaluator
            .decrypt_values(&geom.ct_inv_sx2, &d.keys.secret)
            .unwrap()[0];
        let sz2 = d
            .evaluator
            .decrypt_values(&geom.ct_inv_sz2, &d.keys.secret)
            .unwrap()[0];
        let sxsz = d
            .evaluator
            .decrypt_values(&geom.ct_inv_sxsz, &d.keys.secret)
            .unwrap()[0];
        assert!((sx2 - 1.0 / 2500.0).abs() / (1.0 / 2500.0) < 1e-6, "P={parties}");
        assert!((sz2 - 1.0 / 625.0).abs() / (1.0 / 625.0) < 1e-6);
        assert!((sxsz - 1.0 / 1250.0).abs() / (1.0 / 1250.0) < 1e-6);
    }
}

#[test]
fn share_count_mismatch_is_rejected() {
    let d = desk();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let shares = GeometryShares::split(50.0, 25.0, 2, &mut rng);
    let encrypted: Vec<_> = shares
        .iter()
        .map(|s| s.encrypt(&d.evaluator, &d.keys.public, &mut rng).unwrap())
        .collect();
    assert!(matches!(
        combine_encrypted_shares(&d.evaluator, &encrypted, 3, 5.0),
        Err(PipelineError::MissingShares { expected: 3, got: 2 })
    ));
}

#[test]
fn homomorphic_series_match_plaintext_series() {
    let d = desk();
    let ev = &d.evaluator;
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let mut counter = OpCounter::default();

    // exp at a small negative argument
    let x = -0.005f64;
    let pt = ev.encode_default(&vec![x; 8]).unwrap();
    let ct = ev.encrypt(&pt, &d.keys.public, &mut rng).unwrap();
    let got = taylor_series_eval(
        ev,
        SeriesKind::Exp,
        &ct,
        5,
        EvalStrategy::PowerBasis,
        &d.keys.relin,
        &mut counter,
    )
    .unwrap();
    let got = ev.decrypt_values(&got, &d.keys.secret).unwrap()[0];
    assert!((got - exp_taylor(x, 5)).abs() < 1e-5, "exp: {got}");

    // cos at 2 pi, order 10: ~1 - 3e-4
    let pt = ev.encode_default(&vec![TAU; 8]).unwrap();
    let ct = ev.encrypt(&pt, &d.keys.public, &mut rng).unwrap();
    let got = taylor_series_eval(
        ev,
        SeriesKind::Cos,
        &ct,
        10,
        EvalStrategy::PowerBasis,
        &d.keys.relin,
        &mut counter,
    )
    .unwrap();
    let got = ev.decrypt_values(&got, &d.keys.secret).unwrap()[0];
    assert!(
        (got - cos_taylor(TAU, 10)).abs() < 1e-4,
        "cos order 10: {got} vs {}",
        cos_taylor(TAU, 10)
    );

    // cos at 2 pi, order 5: reproduces the blow-up to ~-5.44
    let got = taylor_series_eval(
        ev,
        SeriesKind::Cos,
        &ct,
        5,
        EvalStrategy::PowerBasis,
        &d.keys.relin,
        &mut counter,
    )
    .unwrap();
    let got = ev.decrypt_values(&got, &d.keys.secret).unwrap()[0];
    assert!(
        (got - cos_taylor(TAU, 5)).abs() < 1e-3,
        "cos order 5: {got} vs {}",
        cos_taylor(TAU, 5)
    );

    // Horner agrees with the power basis
    let pt = ev.encode_default(&vec![0.25; 8]).unwrap();
    let ct = ev.encrypt(&pt, &d.keys.public, &mut rng).unwrap();
    let a = taylor_series_eval(
        ev,
        SeriesKind::Exp,
        &ct,
        6,
        EvalStrategy::PowerBasis,
        &d.keys.relin,
        &mut counter,
    )
    .unwrap();
    let b = taylor_series_eval(
        ev,
        SeriesKind::Exp,
        &ct,
        6,
        EvalStrategy::Horner,
        &d.keys.relin,
        &mut counter,
    )
    .unwrap();
    let va = ev.decrypt_values(&a, &d.keys.secret).unwrap()[0];
    let vb = ev.decrypt_values(&b, &d.keys.secret).unwrap()[0];
    assert!((va - vb).abs() < 1e-5, "strategies disagree: {va} vs {vb}");
    assert!((va - exp_taylor(0.25, 6)).abs() < 1e-5);
}

#[test]
fn point_evaluation_reproduces_taylor_failure_rows() {
    // the point evaluation is deeper than the desk chain (the paper
    // bootstraps here too), so it runs against a 2-party network that
    // provides the collaborative refresh
    let params = gen_params(Preset::Desk).unwrap();
    let mut net = pcol_threshold::Network::new(params, 2, 515151, &[]).unwrap();
    net.run_keygen().unwrap();
    let ev = net.evaluator_handle();
    let (pk, relin) = {
        let keys = net.keys().unwrap();
        (keys.public.clone(), keys.relin.clone())
    };
    let joint = net.joint_secret();

    let mut rng = ChaCha20Rng::seed_from_u64(13);
    let shares = GeometryShares::split(50.0, 25.0, 2, &mut rng);
    let encrypted: Vec<_> = shares
        .iter()
        .map(|s| s.encrypt(&ev, &pk, &mut rng).unwrap())
        .collect();
    let geom = combine_encrypted_shares(&ev, &encrypted, 2, 5.0).unwrap();

    let p_true = pcol_core::integrand_p(5.0, TAU, 50.0, 25.0);
    let phi_pt = ev
        .encode(
            &vec![TAU; ev.params().slot_count()],
            ev.params().max_level(),
            ev.params().scale() * ev.params().scale(),
        )
        .unwrap();

    for (n1, n2, check) in [
        (5usize, 5usize, RowCheck::RelativeAbove(0.10)),
        (5, 10, RowCheck::AbsoluteBelow(4.80e-8)),
        (10, 10, RowCheck::AbsoluteBelow(1e-8)),
    ] {
        let phi = PointInput::Encrypted(ev.encrypt(&phi_pt, &pk, &mut rng).unwrap());
        let mut counter = OpCounter::default();
        let config = ApproxConfig::new(n1, n2);
        let ct = eval_integrand_encrypted(
            &ev,
            &geom,
            &PointInput::Plain(5.0),
            &phi,
            &config,
            &relin,
            &mut net,
            &mut counter,
        )
        .unwrap();
        let got = ev.decrypt_values(&ct, &joint).unwrap()[0];
        let abs = (got - p_true).abs();
        let taylor = integrand_taylor(5.0, TAU, 50.0, 25.0, n1, n2);
        // the pipeline must match its own plaintext truncated composition
        assert!(
            (got - taylor).abs() / taylor.abs().max(1e-6) < 1e-4,
            "(N1,N2)=({n1},{n2}): {got} vs plaintext taylor {taylor}"
        );
        match check {
            RowCheck::RelativeAbove(bound) => {
                assert!(abs / p_true > bound, "({n1},{n2}): rel {:.3}", abs / p_true);
            }
            RowCheck::AbsoluteBelow(bound) => {
                assert!(abs < bound, "({n1},{n2}): abs {abs:.3e} vs {bound:.1e}");
            }
        }
        assert!(counter.refreshes >= 1, "point depth exceeds the desk chain");
    }
}

enum RowCheck {
    RelativeAbove(f64),
    AbsoluteBelow(f64),
}

#[test]
fn table_mode_matches_plaintext_quadrature() {
    let d = desk();
    let ev = &d.evaluator;
    let mut rng = ChaCha20Rng::seed_from_u64(19);
    let spec = QuadratureSpec::new(Rule::GaussLegendre(2), 0.5, 0.5).unwrap();
    let table = build_lookup_table(ev, 50.0, 25.0, &spec, 5.0, &d.keys.public, &mut rng).unwrap();
    assert_eq!(table.eval_count, 480);
    assert_eq!(table.packed.len(), 1);

    // packed slots decrypt to the plaintext integrand values
    let decrypted = ev
        .decrypt_values(&table.packed[0], &d.keys.secret)
        .unwrap();
    let nodes = pcol_core::build_nodes(&spec, 5.0).unwrap();
    for (i, n) in nodes.nodes.iter().enumerate().step_by(37) {
        let want = pcol_core::integrand_p(n.y, n.phi, 50.0, 25.0);
        assert!(
            (decrypted[i] - want).abs() <= 1e-6 * want.abs().max(1e-12),
            "slot {i}"
        );
    }

    let mut counter = OpCounter::default();
    let ct = pcol_from_table(ev, &table, &spec, &d.keys.rotations, &mut counter).unwrap();
    assert_eq!(counter.additions, 480, "non-parallel addition convention");
    let got = ev.decrypt_values(&ct, &d.keys.secret).unwrap()[0];

    let geo = EncounterGeometry::centered(5.0, 50.0, 25.0).unwrap();
    let (want, _) = integrate_pcol(&geo, &spec).unwrap();
    let rel = (got - want).abs() / want;
    assert!(rel < 1e-5, "table mode vs plaintext: rel {rel:.3e}");
}

#[test]
fn table_grid_mismatch_is_detected() {
    let d = desk();
    let ev = &d.evaluator;
    let mut rng = ChaCha20Rng::seed_from_u64(23);
    let spec = QuadratureSpec::new(Rule::GaussLegendre(2), 0.5, 0.5).unwrap();
    let table = build_lookup_table(ev, 50.0, 25.0, &spec, 5.0, &d.keys.public, &mut rng).unwrap();
    let other = QuadratureSpec::new(Rule::GaussLegendre(2), 0.25, 0.25).unwrap();
    let mut counter = OpCounter::default();
    assert!(matches!(
        pcol_from_table(ev, &table, &other, &d.keys.rotations, &mut counter),
        Err(PipelineError::GridMismatch(_))
    ));
}

#[test]
fn table_selection_prefers_exact_then_nearest() {
    let d = desk();
    let ev = &d.evaluator;
    let mut rng = ChaCha20Rng::seed_from_u64(29);
    let spec = QuadratureSpec::new(Rule::GaussLegendre(2), 0.5, 0.5).unwrap();
    let mut store = TableStore::default();
    assert!(matches!(
        select_table((50.0, 25.0), &store),
        Err(PipelineError::EmptyStore)
    ));
    store.tables.push(
        build_lookup_table(ev, 50.0, 25.0, &spec, 5.0, &d.keys.public, &mut rng).unwrap(),
    );
    store.tables.push(
        build_lookup_table(ev, 60.0, 30.0, &spec, 5.0, &d.keys.public, &mut rng).unwrap(),
    );
    let (t, warn) = select_table((50.0, 25.0), &store).unwrap();
    assert_eq!(t.sigma_key, (50.0, 25.0));
    assert!(warn.is_none());
    let (t, warn) = select_table((50.1, 25.0), &store).unwrap();
    assert_eq!(t.sigma_key, (50.0, 25.0));
    let warn = warn.unwrap();
    assert!((warn.distance - 0.1).abs() < 1e-9);
}

#[test]
fn table_store_roundtrips_through_disk() {
    let d = desk();
    let ev = &d.evaluator;
    let mut rng = ChaCha20Rng::seed_from_u64(31);
    let spec = QuadratureSpec::new(Rule::GaussLegendre(2), 0.5, 0.5).unwrap();
    let table = build_lookup_table(ev, 50.0, 25.0, &spec, 5.0, &d.keys.public, &mut rng).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_table(dir.path(), ev, &table).unwrap();
    let loaded = load_table(dir.path(), ev).unwrap();
    assert_eq!(loaded.sigma_key, table.sigma_key);
    assert_eq!(loaded.eval_count, table.eval_count);
    let mut counter = OpCounter::default();
    let ct = pcol_from_table(ev, &loaded, &spec, &d.keys.rotations, &mut counter).unwrap();
    let a = ev.decrypt_values(&ct, &d.keys.secret).unwrap()[0];
    let mut counter = OpCounter::default();
    let ct = pcol_from_table(ev, &table, &spec, &d.keys.rotations, &mut counter).unwrap();
    let b = ev.decrypt_values(&ct, &d.keys.secret).unwrap()[0];
    assert!((a - b).abs() < 1e-12 * a.abs());
}

#[test]
fn online_pipeline_matches_taylor_oracle_and_table() {
    let d = desk();
    let ev = &d.evaluator;
    let geom = encrypted_geometry(d, 50.0, 25.0, 5.0, 2, 37);
    let spec = QuadratureSpec::new(Rule::GaussLegendre(2), 0.5, 0.5).unwrap();
    let config = ApproxConfig::new(10, 10);
    let (ct, counter) = pcol_online(
        ev,
        &geom,
        &spec,
        &config,
        &d.keys.relin,
        &d.keys.rotations,
        &mut NoRefresh,
    )
    .unwrap();
    let got = ev.decrypt_values(&ct, &d.keys.secret).unwrap()[0];
    let oracle = pcol_taylor_reference(50.0, 25.0, 5.0, &spec, 10, 10).unwrap();
    let rel = (got - oracle).abs() / oracle;
    assert!(rel < 1e-4, "online vs taylor oracle: rel {rel:.3e}");
    assert_eq!(counter.refreshes, 0);
    assert!(counter.multiplications > 0 && counter.additions > 0);
    // audit: every level consumed is either a rescaling product or a
    // standalone rescale
    assert_eq!(
        counter.multiplications,
        counter.rescaling_products + counter.kept_scale_products
    );

    // cross-check against the table strategy on the same inputs
    let mut rng = ChaCha20Rng::seed_from_u64(41);
    let table = build_lookup_table(ev, 50.0, 25.0, &spec, 5.0, &d.keys.public, &mut rng).unwrap();
    let mut tc = OpCounter::default();
    let tct = pcol_from_table(ev, &table, &spec, &d.keys.rotations, &mut tc).unwrap();
    let table_val = ev.decrypt_values(&tct, &d.keys.secret).unwrap()[0];
    let rel = (got - table_val).abs() / table_val;
    assert!(rel < 1e-4, "online vs table: rel {rel:.3e}");
}

#[test]
fn online_pipeline_refreshes_when_budget_is_short() {
    // a shallow chain (L = 8) forces a refresh before the exp stage
    let params = pcol_ckks::Params::build(1 << 12, 8, 40, 60, 3.2, 64, None).unwrap();
    let mut net = pcol_threshold::Network::new(params.clone(), 2, 91, &(0..11).map(|i| 1usize << i).collect::<Vec<_>>()).unwrap();
    net.run_keygen().unwrap();
    let ev = net.evaluator_handle();
    let keys = net.keys().unwrap();
    let relin = keys.relin.clone();
    let rotations = keys.rotations.clone();

    let mut rng = ChaCha20Rng::seed_from_u64(43);
    let shares = GeometryShares::split(50.0, 25.0, 2, &mut rng);
    let encrypted: Vec<_> = shares
        .iter()
        .map(|s| s.encrypt(&ev, &keys.public, &mut rng).unwrap())
        .collect();
    let geom = combine_encrypted_shares(&ev, &encrypted, 2, 5.0).unwrap();

    let spec = QuadratureSpec::new(Rule::GaussLegendre(2), 0.5, 0.5).unwrap();
    let config = ApproxConfig::new(10, 10);
    let (ct, counter) = pcol_online(&ev, &geom, &spec, &config, &relin, &rotations, &mut net).unwrap();
    assert!(counter.refreshes >= 1, "expected at least one refresh");
    let got = {
        let joint = net.joint_secret();
        ev.decrypt_values(&ct, &joint).unwrap()[0]
    };
    let oracle = pcol_taylor_reference(50.0, 25.0, 5.0, &spec, 10, 10).unwrap();
    let rel = (got - oracle).abs() / oracle;
    assert!(rel < 1e-4, "refreshed online vs oracle: rel {rel:.3e}");

    // single-party mode has no refresh and must fail typed
    let err = pcol_online(&ev, &geom, &spec, &config, &relin, &rotations, &mut NoRefresh)
        .unwrap_err();
    assert!(matches!(
        err,
        PipelineError::Ckks(pcol_ckks::CkksError::OutOfLevels)
    ));
}
