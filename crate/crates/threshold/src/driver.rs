//! In-process deterministic driver: holds every party's secret share and
//! routes serialized protocol messages through a [`Session`], so each test
//! and demo exercises the full wire format.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use pcol_ckks::{Ciphertext, Evaluator, Params, SecretKey};

use crate::error::ThresholdError;
use crate::message::{ProtocolMessage, RoundTag};
use crate::protocols::{
    gen_secret_share, partial_decrypt, pubkey_share, refresh_share, relin_round1, relin_round2,
    rotation_share, CommonReference,
};
use crate::session::{payload, Session, SessionKeys, SessionState};

/// Default smudging magnitude (bits) for distributed decryption: a fixed
/// margin above the tracked noise estimate, so the hiding term always
/// dominates the ciphertext noise while staying far below the payload
/// precision regardless of the ciphertext's scale regime.
pub fn default_smudging_bits(ct: &Ciphertext) -> u32 {
    (ct.noise_bits().ceil() as i64 + 4).max(8) as u32
}

/// One operator: secret share plus a deterministic per-party RNG.
struct Operator {
    id: u16,
    share: SecretKey,
    rng: ChaCha20Rng,
    relin_ephemeral: Option<SecretKey>,
}

/// Full-threshold network of P operators around one session.
pub struct Network {
    evaluator: Arc<Evaluator>,
    session: Session,
    operators: Vec<Operator>,
    offline: BTreeSet<u16>,
}

impl Network {
    /// Deterministic network: party i's share comes from `seed + i + 1`,
    /// the common reference from `seed`.
    pub fn new(
        params: Params,
        party_count: usize,
        seed: u64,
        rotation_steps: &[usize],
    ) -> Result<Self, ThresholdError> {
        let evaluator = Arc::new(Evaluator::new(params.clone()));
        let crs = CommonReference::from_u64(seed);
        let session = Session::new(
            evaluator.clone(),
            party_count,
            crs,
            rotation_steps.to_vec(),
        )?;
        let operators = (0..party_count as u16)
            .map(|id| Operator {
                id,
                share: gen_secret_share(&params, seed.wrapping_add(id as u64).wrapping_add(1)),
                rng: ChaCha20Rng::seed_from_u64(seed ^ ((id as u64 + 1) << 32)),
                relin_ephemeral: None,
            })
            .collect();
        Ok(Self {
            evaluator,
            session,
            operators,
            offline: BTreeSet::new(),
        })
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    /// Shared handle for callers that outlive a borrow of the network.
    pub fn evaluator_handle(&self) -> Arc<Evaluator> {
        self.evaluator.clone()
    }

    pub fn params(&self) -> &Params {
        self.evaluator.params()
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn party_count(&self) -> usize {
        self.operators.len()
    }

    /// Simulates a party dropping out of every later round.
    pub fn set_offline(&mut self, party: u16) {
        self.offline.insert(party);
    }

    /// Diagnostic: the joint secret sum(s_i), for cross-checks against
    /// single-party decryption.
    pub fn joint_secret(&self) -> SecretKey {
        let mut acc = self.operators[0].share.poly().clone();
        for op in &self.operators[1..] {
            acc.add_assign(op.share.poly());
        }
        SecretKey::from_poly(acc)
    }

    pub fn party_share(&self, id: u16) -> &SecretKey {
        &self.operators[id as usize].share
    }

    fn message(&self, sender: u16, tag: RoundTag, body: Vec<u8>) -> Vec<u8> {
        ProtocolMessage {
            session_id: self.session.session_id(),
            sender,
            round_tag: tag,
            payload: body,
        }
        .to_bytes()
    }

    fn online(&self) -> Vec<u16> {
        self.operators
            .iter()
            .map(|o| o.id)
            .filter(|id| !self.offline.contains(id))
            .collect()
    }

    fn abort_if_incomplete(&mut self, tag: RoundTag) -> Result<(), ThresholdError> {
        if let Err(e) = self.session.keygen_round_complete(tag) {
            self.session.fail("missing keygen contribution");
            return Err(e);
        }
        Ok(())
    }

    /// Runs collective key generation end to end: public key, two-round
    /// relinearization key, and rotation keys for the configured steps.
    pub fn run_keygen(&mut self) -> Result<(), ThresholdError> {
        let params = self.params().clone();
        let crs = *self.session.crs();

        for id in self.online() {
            let op = &mut self.operators[id as usize];
            let share = pubkey_share(&params, &op.share, &crs, &mut op.rng);
            let msg = self.message(id, RoundTag::PubKeyShare, payload::pubkey(&share));
            self.session.ingest(&msg)?;
        }
        self.abort_if_incomplete(RoundTag::PubKeyShare)?;

        for id in self.online() {
            let op = &mut self.operators[id as usize];
            let ephemeral = gen_secret_share(&params, op.rng.next_u64());
            let r1 = relin_round1(&params, &op.share, &ephemeral, &crs, &mut op.rng);
            op.relin_ephemeral = Some(ephemeral);
            let msg = self.message(id, RoundTag::RelinShareRound1, payload::relin1(&r1));
            self.session.ingest(&msg)?;
        }
        self.abort_if_incomplete(RoundTag::RelinShareRound1)?;

        for id in self.online() {
            let agg = self.session.relin_round1_aggregate()?;
            let op = &self.operators[id as usize];
            let ephemeral = op
                .relin_ephemeral
                .as_ref()
                .ok_or(ThresholdError::ProtocolOrder("ephemeral missing".into()))?;
            let mut rng = op.rng.clone();
            let r2 = relin_round2(&params, &op.share, ephemeral, agg, &mut rng);
            self.operators[id as usize].rng = rng;
            let msg = self.message(id, RoundTag::RelinShareRound2, payload::relin2(&r2));
            self.session.ingest(&msg)?;
        }
        self.abort_if_incomplete(RoundTag::RelinShareRound2)?;

        for &step in self.session.rotation_steps().to_vec().iter() {
            for id in self.online() {
                let op = &mut self.operators[id as usize];
                let polys = rotation_share(&params, &op.share, step, &crs, &mut op.rng);
                let msg = self.message(id, RoundTag::RotKeyShare, payload::rotation(step, &polys));
                self.session.ingest(&msg)?;
            }
        }
        self.abort_if_incomplete(RoundTag::RotKeyShare)?;

        debug_assert_eq!(self.session.state(), SessionState::KeysReady);
        Ok(())
    }

    pub fn keys(&self) -> Result<&SessionKeys, ThresholdError> {
        self.session.keys()
    }

    /// Full-threshold decryption with the default smudging magnitude.
    pub fn collective_decrypt(&mut self, ct: &Ciphertext) -> Result<Vec<f64>, ThresholdError> {
        let bits = default_smudging_bits(ct);
        self.collective_decrypt_with(ct, bits)
    }

    pub fn collective_decrypt_with(
        &mut self,
        ct: &Ciphertext,
        smudging_bits: u32,
    ) -> Result<Vec<f64>, ThresholdError> {
        self.session.begin_decryption(ct.clone(), smudging_bits)?;
        for id in self.online() {
            let op = &mut self.operators[id as usize];
            let d = partial_decrypt(ct, &op.share, smudging_bits, &mut op.rng);
            let msg = self.message(id, RoundTag::PartialDecryption, payload::partial(&d));
            self.session.ingest(&msg)?;
        }
        self.session.finish_decryption()
    }

    /// One-round collaborative refresh back to the top level.
    pub fn refresh(&mut self, ct: &Ciphertext) -> Result<Ciphertext, ThresholdError> {
        let pk = &self.session.keys()?.public.clone();
        self.session.begin_refresh(ct.clone())?;
        for id in self.online() {
            let op = &mut self.operators[id as usize];
            let share = refresh_share(&self.evaluator, ct, &op.share, pk, &mut op.rng)?;
            let msg = self.message(id, RoundTag::RefreshShare, payload::refresh(&share));
            self.session.ingest(&msg)?;
        }
        self.session.finish_refresh()
    }

    pub fn refresh_count(&self) -> usize {
        self.session.refresh_count()
    }
}

use rand::RngCore;
