//! Transcript robustness: dropping, duplicating, or reordering key-
//! generation messages yields a typed error or an incomplete session,
//! never wrong key material.

use std::sync::Arc;

use pcol_ckks::{gen_params, Evaluator, Preset};
use pcol_threshold::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// A reference keygen transcript (valid, ordered) plus the resulting
/// public-key component for equality checks.
fn reference_transcript() -> (Vec<Vec<u8>>, Vec<u64>) {
    let params = gen_params(Preset::Toy).unwrap();
    let evaluator = Arc::new(Evaluator::new(params.clone()));
    let crs = CommonReference::from_u64(777);
    let mut session = Session::new(evaluator, 2, crs, vec![1]).unwrap();
    let shares: Vec<_> = (0..2u64).map(|i| gen_secret_share(&params, 800 + i)).collect();
    let mut rngs: Vec<_> = (0..2u64)
        .map(|i| ChaCha20Rng::seed_from_u64(900 + i))
        .collect();
    let ephemerals: Vec<_> = (0..2u64).map(|i| gen_secret_share(&params, 850 + i)).collect();

    let mut transcript = Vec::new();
    let mut send = |session: &mut Session,
                    transcript: &mut Vec<Vec<u8>>,
                    sender: u16,
                    tag: RoundTag,
                    payload: Vec<u8>| {
        let bytes = ProtocolMessage {
            session_id: session.session_id(),
            sender,
            round_tag: tag,
            payload,
        }
        .to_bytes();
        session.ingest(&bytes).unwrap();
        transcript.push(bytes);
    };

    for i in 0..2usize {
        let b = pubkey_share(&params, &shares[i], &crs, &mut rngs[i]);
        send(
            &mut session,
            &mut transcript,
            i as u16,
            RoundTag::PubKeyShare,
            session::payload::pubkey(&b),
        );
    }
    for i in 0..2usize {
        let r1 = relin_round1(&params, &shares[i], &ephemerals[i], &crs, &mut rngs[i]);
        send(
            &mut session,
            &mut transcript,
            i as u16,
            RoundTag::RelinShareRound1,
            session::payload::relin1(&r1),
        );
    }
    for i in 0..2usize {
        let agg = session.relin_round1_aggregate().unwrap();
        let r2 = relin_round2(&params, &shares[i], &ephemerals[i], agg, &mut rngs[i].clone());
        send(
            &mut session,
            &mut transcript,
            i as u16,
            RoundTag::RelinShareRound2,
            session::payload::relin2(&r2),
        );
    }
    for i in 0..2usize {
        let rot = rotation_share(&params, &shares[i], 1, &crs, &mut rngs[i]);
        send(
            &mut session,
            &mut transcript,
            i as u16,
            RoundTag::RotKeyShare,
            session::payload::rotation(1, &rot),
        );
    }
    assert_eq!(session.state(), SessionState::KeysReady);
    let pk_row = session.keys().unwrap().public.b.row(0).to_vec();
    (transcript, pk_row)
}

use pcol_threshold::session;

fn replay(messages: &[Vec<u8>]) -> (Session, Result<(), ThresholdError>) {
    let params = gen_params(Preset::Toy).unwrap();
    let evaluator = Arc::new(Evaluator::new(params));
    let crs = CommonReference::from_u64(777);
    let mut session = Session::new(evaluator, 2, crs, vec![1]).unwrap();
    for m in messages {
        if let Err(e) = session.ingest(m) {
            return (session, Err(e));
        }
    }
    (session, Ok(()))
}

#[derive(Debug, Clone)]
enum Mutation {
    Drop(usize),
    Duplicate(usize),
    Swap(usize, usize),
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mutated_transcripts_never_complete_wrong(
        kind in 0..3usize,
        a in 0..8usize,
        b in 0..8usize,
    ) {
        let (transcript, reference_pk) = REFERENCE.with(|r| r.clone());
        let mutation = match kind {
            0 => Mutation::Drop(a),
            1 => Mutation::Duplicate(a),
            _ => Mutation::Swap(a, b),
        };
        let mut mutated = transcript.clone();
        match mutation {
            Mutation::Drop(i) => {
                mutated.remove(i);
            }
            Mutation::Duplicate(i) => {
                let m = mutated[i].clone();
                mutated.insert(i + 1, m);
            }
            Mutation::Swap(i, j) => {
                mutated.swap(i, j);
            }
        }
        let (session, outcome) = replay(&mutated);
        match outcome {
            // a typed rejection is always acceptable
            Err(ThresholdError::ProtocolOrder(_)) | Err(ThresholdError::BadShare(_)) => {}
            Err(other) => prop_assert!(false, "unexpected error kind: {other}"),
            Ok(()) => {
                // accepted transcripts either stall (missing share) or
                // produce exactly the reference keys
                if session.state() == SessionState::KeysReady {
                    let pk = session.keys().unwrap().public.b.row(0).to_vec();
                    prop_assert_eq!(pk, reference_pk, "completed with different keys");
                } else {
                    prop_assert_eq!(session.state(), SessionState::AwaitingKeyShares);
                }
            }
        }
    }
}

thread_local! {
    static REFERENCE: (Vec<Vec<u8>>, Vec<u64>) = reference_transcript();
}

/// The unmutated transcript must complete with the reference keys.
#[test]
fn clean_transcript_completes() {
    let (transcript, reference_pk) = REFERENCE.with(|r| r.clone());
    let (session, outcome) = replay(&transcript);
    outcome.unwrap();
    assert_eq!(session.state(), SessionState::KeysReady);
    assert_eq!(
        session.keys().unwrap().public.b.row(0).to_vec(),
        reference_pk
    );
}
