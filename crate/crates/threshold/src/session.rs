//! Full-threshold session state machine.
//!
//! A session validates and aggregates serialized round contributions. Every
//! protocol completion requires exactly one message of the required tag
//! from every party; duplicates, unknown senders, and out-of-phase messages
//! are rejected with typed errors and leave the staged state untouched.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use pcol_ckks::serialize::{append_poly, deserialize_ciphertext, read_poly_at, serialize_ciphertext};
use pcol_ckks::{Ciphertext, Evaluator, Params, RnsPoly, RotationKeys};

use crate::error::ThresholdError;
use crate::message::{ProtocolMessage, RoundTag};
use crate::protocols::{
    aggregate_pubkey, aggregate_relin_round1, aggregate_rotation, combine_partials,
    combine_refresh, finalize_relin, CommonReference, RefreshShare, RelinRound1Aggregate,
    RelinRound1Share,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    AwaitingKeyShares,
    KeysReady,
    AwaitingPartials,
    Done,
    Failed,
}

/// Key-generation sub-phase while in `AwaitingKeyShares`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum KeygenPhase {
    PubKey,
    Relin1,
    Relin2,
    Rotations,
}

/// Aggregated collective key material.
pub struct SessionKeys {
    pub public: pcol_ckks::PublicKey,
    pub relin: pcol_ckks::KeySwitchKey,
    pub rotations: RotationKeys,
}

pub struct Session {
    evaluator: Arc<Evaluator>,
    crs: CommonReference,
    session_id: [u8; 16],
    party_count: usize,
    rotation_steps: Vec<usize>,
    state: SessionState,
    phase: KeygenPhase,
    transcript: Vec<ProtocolMessage>,

    pub_shares: BTreeMap<u16, RnsPoly>,
    relin1: BTreeMap<u16, RelinRound1Share>,
    relin1_agg: Option<RelinRound1Aggregate>,
    relin2: BTreeMap<u16, Vec<RnsPoly>>,
    rot_shares: BTreeMap<usize, BTreeMap<u16, Vec<RnsPoly>>>,
    keys: Option<SessionKeys>,

    pending_decrypt: Option<(Ciphertext, u32)>,
    partials: BTreeMap<u16, RnsPoly>,

    pending_refresh: Option<Ciphertext>,
    refresh_shares: BTreeMap<u16, RefreshShare>,
    refresh_count: usize,
}

impl Session {
    pub fn new(
        evaluator: Arc<Evaluator>,
        party_count: usize,
        crs: CommonReference,
        rotation_steps: Vec<usize>,
    ) -> Result<Self, ThresholdError> {
        if party_count < 2 {
            return Err(ThresholdError::ProtocolOrder(format!(
                "full-threshold sessions need at least 2 parties, got {party_count}"
            )));
        }
        let mut steps: Vec<usize> = rotation_steps
            .into_iter()
            .filter(|&s| s != 0 && s < evaluator.params().slot_count())
            .collect();
        steps.sort_unstable();
        steps.dedup();
        Ok(Self {
            session_id: crs.session_id(),
            evaluator,
            crs,
            party_count,
            rotation_steps: steps,
            state: SessionState::AwaitingKeyShares,
            phase: KeygenPhase::PubKey,
            transcript: Vec::new(),
            pub_shares: BTreeMap::new(),
            relin1: BTreeMap::new(),
            relin1_agg: None,
            relin2: BTreeMap::new(),
            rot_shares: BTreeMap::new(),
            keys: None,
            pending_decrypt: None,
            partials: BTreeMap::new(),
            pending_refresh: None,
            refresh_shares: BTreeMap::new(),
            refresh_count: 0,
        })
    }

    pub fn params(&self) -> &Params {
        self.evaluator.params()
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    pub fn crs(&self) -> &CommonReference {
        &self.crs
    }

    pub fn session_id(&self) -> [u8; 16] {
        self.session_id
    }

    pub fn party_count(&self) -> usize {
        self.party_count
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn transcript(&self) -> &[ProtocolMessage] {
        &self.transcript
    }

    pub fn refresh_count(&self) -> usize {
        self.refresh_count
    }

    pub fn rotation_steps(&self) -> &[usize] {
        &self.rotation_steps
    }

    /// Marks the session failed (a party went offline mid-protocol).
    pub fn fail(&mut self, _reason: &str) {
        self.state = SessionState::Failed;
    }

    pub fn keys(&self) -> Result<&SessionKeys, ThresholdError> {
        self.keys.as_ref().ok_or(ThresholdError::ProtocolOrder(
            "collective keys not ready".into(),
        ))
    }

    /// Round-1 relinearization aggregate, needed by parties for round 2.
    pub fn relin_round1_aggregate(&self) -> Result<&RelinRound1Aggregate, ThresholdError> {
        self.relin1_agg.as_ref().ok_or(ThresholdError::ProtocolOrder(
            "relinearization round 1 not aggregated yet".into(),
        ))
    }

    // ── Ingest ──────────────────────────────────────────────────────────

    /// Validates and stages one serialized contribution; aggregates and
    /// advances when a round completes.
    pub fn ingest(&mut self, bytes: &[u8]) -> Result<(), ThresholdError> {
        let msg = ProtocolMessage::from_bytes(bytes)?;
        if msg.session_id != self.session_id {
            return Err(ThresholdError::BadShare("session id mismatch".into()));
        }
        if msg.sender as usize >= self.party_count {
            return Err(ThresholdError::BadShare(format!(
                "unknown sender {}",
                msg.sender
            )));
        }
        if matches!(self.state, SessionState::Done | SessionState::Failed) {
            return Err(ThresholdError::ProtocolOrder(format!(
                "session is {:?}",
                self.state
            )));
        }
        match msg.round_tag {
            RoundTag::PubKeyShare => self.ingest_pubkey(&msg)?,
            RoundTag::RelinShareRound1 => self.ingest_relin1(&msg)?,
            RoundTag::RelinShareRound2 => self.ingest_relin2(&msg)?,
            RoundTag::RotKeyShare => self.ingest_rotation(&msg)?,
            RoundTag::PartialDecryption => self.ingest_partial(&msg)?,
            RoundTag::RefreshShare => self.ingest_refresh(&msg)?,
        }
        self.transcript.push(msg);
        Ok(())
    }

    fn expect_keygen_phase(&self, phase: KeygenPhase, tag: RoundTag) -> Result<(), ThresholdError> {
        if self.state != SessionState::AwaitingKeyShares || self.phase != phase {
            return Err(ThresholdError::ProtocolOrder(format!(
                "{} outside its round (state {:?}, phase {:?})",
                tag.name(),
                self.state,
                self.phase
            )));
        }
        Ok(())
    }

    fn reject_duplicate<T>(
        staged: &BTreeMap<u16, T>,
        sender: u16,
        tag: RoundTag,
    ) -> Result<(), ThresholdError> {
        if staged.contains_key(&sender) {
            return Err(ThresholdError::ProtocolOrder(format!(
                "duplicate {} from party {sender}",
                tag.name()
            )));
        }
        Ok(())
    }

    fn ingest_pubkey(&mut self, msg: &ProtocolMessage) -> Result<(), ThresholdError> {
        self.expect_keygen_phase(KeygenPhase::PubKey, msg.round_tag)?;
        Self::reject_duplicate(&self.pub_shares, msg.sender, msg.round_tag)?;
        let mut pos = 0;
        let poly = read_poly_at(&msg.payload, &mut pos, self.params())
            .map_err(|e| ThresholdError::BadShare(e.to_string()))?;
        if pos != msg.payload.len() {
            return Err(ThresholdError::BadShare("trailing payload bytes".into()));
        }
        self.pub_shares.insert(msg.sender, poly);
        if self.pub_shares.len() == self.party_count {
            self.phase = KeygenPhase::Relin1;
        }
        Ok(())
    }

    fn read_poly_list(&self, payload: &[u8]) -> Result<Vec<RnsPoly>, ThresholdError> {
        let mut pos = 0;
        if payload.len() < 4 {
            return Err(ThresholdError::BadShare("short payload".into()));
        }
        let count = u32::from_le_bytes(payload[..4].try_into().unwrap()) as usize;
        pos += 4;
        if count > 4 * (self.params().max_level() + 1) {
            return Err(ThresholdError::BadShare("implausible poly count".into()));
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(
                read_poly_at(payload, &mut pos, self.params())
                    .map_err(|e| ThresholdError::BadShare(e.to_string()))?,
            );
        }
        if pos != payload.len() {
            return Err(ThresholdError::BadShare("trailing payload bytes".into()));
        }
        Ok(out)
    }

    fn ingest_relin1(&mut self, msg: &ProtocolMessage) -> Result<(), ThresholdError> {
        self.expect_keygen_phase(KeygenPhase::Relin1, msg.round_tag)?;
        Self::reject_duplicate(&self.relin1, msg.sender, msg.round_tag)?;
        let polys = self.read_poly_list(&msg.payload)?;
        let digits = self.params().max_level() + 1;
        if polys.len() != 2 * digits {
            return Err(ThresholdError::BadShare(format!(
                "relin round 1 expects {} polys, got {}",
                2 * digits,
                polys.len()
            )));
        }
        let mut g0 = polys;
        let g1 = g0.split_off(digits);
        self.relin1.insert(msg.sender, RelinRound1Share { g0, g1 });
        if self.relin1.len() == self.party_count {
            let shares: Vec<_> = std::mem::take(&mut self.relin1).into_values().collect();
            self.relin1_agg = Some(aggregate_relin_round1(&shares));
            self.phase = KeygenPhase::Relin2;
        }
        Ok(())
    }

    fn ingest_relin2(&mut self, msg: &ProtocolMessage) -> Result<(), ThresholdError> {
        self.expect_keygen_phase(KeygenPhase::Relin2, msg.round_tag)?;
        Self::reject_duplicate(&self.relin2, msg.sender, msg.round_tag)?;
        let polys = self.read_poly_list(&msg.payload)?;
        if polys.len() != self.params().max_level() + 1 {
            return Err(ThresholdError::BadShare("relin round 2 digit mismatch".into()));
        }
        self.relin2.insert(msg.sender, polys);
        if self.relin2.len() == self.party_count {
            if self.rotation_steps.is_empty() {
                self.finalize_keys()?;
            } else {
                self.phase = KeygenPhase::Rotations;
            }
        }
        Ok(())
    }

    fn ingest_rotation(&mut self, msg: &ProtocolMessage) -> Result<(), ThresholdError> {
        self.expect_keygen_phase(KeygenPhase::Rotations, msg.round_tag)?;
        if msg.payload.len() < 4 {
            return Err(ThresholdError::BadShare("short payload".into()));
        }
        let step = u32::from_le_bytes(msg.payload[..4].try_into().unwrap()) as usize;
        if !self.rotation_steps.contains(&step) {
            return Err(ThresholdError::BadShare(format!(
                "rotation step {step} not part of this session"
            )));
        }
        if self
            .rot_shares
            .get(&step)
            .is_some_and(|m| m.contains_key(&msg.sender))
        {
            return Err(ThresholdError::ProtocolOrder(format!(
                "duplicate RotKeyShare for step {step} from party {}",
                msg.sender
            )));
        }
        let polys = self.read_poly_list(&msg.payload[4..])?;
        if polys.len() != self.params().max_level() + 1 {
            return Err(ThresholdError::BadShare("rotation digit mismatch".into()));
        }
        self.rot_shares.entry(step).or_default().insert(msg.sender, polys);
        let complete = self.rotation_steps.iter().all(|s| {
            self.rot_shares
                .get(s)
                .map(|m| m.len() == self.party_count)
                .unwrap_or(false)
        });
        if complete {
            self.finalize_keys()?;
        }
        Ok(())
    }

    fn finalize_keys(&mut self) -> Result<(), ThresholdError> {
        let params = self.params().clone();
        let pub_shares: Vec<_> = std::mem::take(&mut self.pub_shares).into_values().collect();
        let public = aggregate_pubkey(&params, &self.crs, &pub_shares);
        let agg = self
            .relin1_agg
            .take()
            .ok_or(ThresholdError::ProtocolOrder("round 1 missing".into()))?;
        let round2: Vec<_> = std::mem::take(&mut self.relin2).into_values().collect();
        let relin = finalize_relin(agg, &round2);
        let mut rotations = RotationKeys::default();
        for (step, staged) in std::mem::take(&mut self.rot_shares) {
            let shares: Vec<_> = staged.into_values().collect();
            rotations
                .map
                .insert(step, aggregate_rotation(&params, &self.crs, step, &shares));
        }
        self.keys = Some(SessionKeys {
            public,
            relin,
            rotations,
        });
        self.state = SessionState::KeysReady;
        Ok(())
    }

    /// First absent party for a round, if any.
    fn missing_party(
        &self,
        staged: &BTreeSet<u16>,
        round: &'static str,
    ) -> Result<(), ThresholdError> {
        for p in 0..self.party_count as u16 {
            if !staged.contains(&p) {
                return Err(ThresholdError::MissingParty { party: p, round });
            }
        }
        Ok(())
    }

    /// Checks that the key-generation round for `tag` has every party's
    /// contribution; reports the first absent party otherwise. A round that
    /// the session has already advanced past is complete by construction.
    pub fn keygen_round_complete(&self, tag: RoundTag) -> Result<(), ThresholdError> {
        if self.state != SessionState::AwaitingKeyShares {
            return Ok(());
        }
        let phase_rank = |p: KeygenPhase| match p {
            KeygenPhase::PubKey => 1,
            KeygenPhase::Relin1 => 2,
            KeygenPhase::Relin2 => 3,
            KeygenPhase::Rotations => 4,
        };
        let (round_rank, staged, round): (u8, Vec<u16>, &'static str) = match tag {
            RoundTag::PubKeyShare => (1, self.pub_shares.keys().copied().collect(), "PubKeyShare"),
            RoundTag::RelinShareRound1 => {
                (2, self.relin1.keys().copied().collect(), "RelinShareRound1")
            }
            RoundTag::RelinShareRound2 => {
                (3, self.relin2.keys().copied().collect(), "RelinShareRound2")
            }
            RoundTag::RotKeyShare => {
                for &s in &self.rotation_steps {
                    let have: Vec<u16> = self
                        .rot_shares
                        .get(&s)
                        .map(|m| m.keys().copied().collect())
                        .unwrap_or_default();
                    if let Some(p) =
                        (0..self.party_count as u16).find(|p| !have.contains(p))
                    {
                        return Err(ThresholdError::MissingParty {
                            party: p,
                            round: "RotKeyShare",
                        });
                    }
                }
                return Ok(());
            }
            _ => return Ok(()),
        };
        if phase_rank(self.phase) > round_rank {
            return Ok(());
        }
        match (0..self.party_count as u16).find(|p| !staged.contains(p)) {
            Some(party) => Err(ThresholdError::MissingParty { party, round }),
            None => Ok(()),
        }
    }

    // ── Distributed decryption ──────────────────────────────────────────

    pub fn begin_decryption(
        &mut self,
        ct: Ciphertext,
        smudging_bits: u32,
    ) -> Result<(), ThresholdError> {
        if self.state != SessionState::KeysReady {
            return Err(ThresholdError::ProtocolOrder(format!(
                "begin_decryption in state {:?}",
                self.state
            )));
        }
        self.pending_decrypt = Some((ct, smudging_bits));
        self.partials.clear();
        self.state = SessionState::AwaitingPartials;
        Ok(())
    }

    /// The ciphertext being collectively decrypted (parties derive their
    /// partial from it).
    pub fn decryption_target(&self) -> Option<&(Ciphertext, u32)> {
        self.pending_decrypt.as_ref()
    }

    fn ingest_partial(&mut self, msg: &ProtocolMessage) -> Result<(), ThresholdError> {
        if self.state != SessionState::AwaitingPartials {
            return Err(ThresholdError::ProtocolOrder(
                "PartialDecryption outside a decryption round".into(),
            ));
        }
        Self::reject_duplicate(&self.partials, msg.sender, msg.round_tag)?;
        let mut pos = 0;
        let poly = read_poly_at(&msg.payload, &mut pos, self.params())
            .map_err(|e| ThresholdError::BadShare(e.to_string()))?;
        if pos != msg.payload.len() {
            return Err(ThresholdError::BadShare("trailing payload bytes".into()));
        }
        let ct = &self.pending_decrypt.as_ref().expect("pending ct set").0;
        if poly.prefix() != ct.level() + 1 || poly.has_special() {
            return Err(ThresholdError::BadShare(
                "partial decryption basis mismatch".into(),
            ));
        }
        self.partials.insert(msg.sender, poly);
        Ok(())
    }

    /// Combines all partials and finishes the session.
    pub fn finish_decryption(&mut self) -> Result<Vec<f64>, ThresholdError> {
        if self.state != SessionState::AwaitingPartials {
            return Err(ThresholdError::ProtocolOrder(
                "finish_decryption without begin_decryption".into(),
            ));
        }
        let staged: BTreeSet<u16> = self.partials.keys().copied().collect();
        if let Err(e) = self.missing_party(&staged, "PartialDecryption") {
            self.state = SessionState::Failed;
            return Err(e);
        }
        let (ct, smudging_bits) = self.pending_decrypt.take().expect("pending ct");
        let partials: Vec<_> = std::mem::take(&mut self.partials).into_values().collect();
        let values = combine_partials(&self.evaluator, &ct, &partials, smudging_bits)?;
        self.state = SessionState::Done;
        Ok(values)
    }

    // ── Collaborative refresh ───────────────────────────────────────────

    pub fn begin_refresh(&mut self, ct: Ciphertext) -> Result<(), ThresholdError> {
        if self.state != SessionState::KeysReady {
            return Err(ThresholdError::ProtocolOrder(format!(
                "begin_refresh in state {:?}",
                self.state
            )));
        }
        if self.pending_refresh.is_some() {
            return Err(ThresholdError::ProtocolOrder(
                "refresh already in progress".into(),
            ));
        }
        self.pending_refresh = Some(ct);
        self.refresh_shares.clear();
        Ok(())
    }

    pub fn refresh_target(&self) -> Option<&Ciphertext> {
        self.pending_refresh.as_ref()
    }

    fn ingest_refresh(&mut self, msg: &ProtocolMessage) -> Result<(), ThresholdError> {
        if self.state != SessionState::KeysReady || self.pending_refresh.is_none() {
            return Err(ThresholdError::ProtocolOrder(
                "RefreshShare outside a refresh round".into(),
            ));
        }
        Self::reject_duplicate(&self.refresh_shares, msg.sender, msg.round_tag)?;
        let mut pos = 0;
        let masked_partial = read_poly_at(&msg.payload, &mut pos, self.params())
            .map_err(|e| ThresholdError::BadShare(e.to_string()))?;
        if msg.payload.len() < pos + 8 {
            return Err(ThresholdError::BadShare("short refresh payload".into()));
        }
        let ct_len =
            u64::from_le_bytes(msg.payload[pos..pos + 8].try_into().unwrap()) as usize;
        pos += 8;
        if msg.payload.len() != pos + ct_len {
            return Err(ThresholdError::BadShare("refresh payload length".into()));
        }
        let mask_encryption = deserialize_ciphertext(&msg.payload[pos..], self.params())
            .map_err(|e| ThresholdError::BadShare(e.to_string()))?;
        self.refresh_shares.insert(
            msg.sender,
            RefreshShare {
                masked_partial,
                mask_encryption,
            },
        );
        Ok(())
    }

    pub fn finish_refresh(&mut self) -> Result<Ciphertext, ThresholdError> {
        if self.pending_refresh.is_none() {
            return Err(ThresholdError::ProtocolOrder(
                "finish_refresh without begin_refresh".into(),
            ));
        }
        let staged: BTreeSet<u16> = self.refresh_shares.keys().copied().collect();
        if let Err(e) = self.missing_party(&staged, "RefreshShare") {
            self.state = SessionState::Failed;
            return Err(e);
        }
        let ct = self.pending_refresh.take().expect("pending refresh");
        let shares: Vec<_> = std::mem::take(&mut self.refresh_shares)
            .into_values()
            .collect();
        let out = combine_refresh(&self.evaluator, &ct, &shares)?;
        self.refresh_count += 1;
        Ok(out)
    }
}

/// Payload builders matching the session's parsers.
pub mod payload {
    use super::*;

    pub fn pubkey(poly: &RnsPoly) -> Vec<u8> {
        let mut buf = Vec::new();
        append_poly(&mut buf, poly);
        buf
    }

    pub fn poly_list(polys: &[&RnsPoly]) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(&(polys.len() as u32).to_le_bytes());
        for p in polys {
            append_poly(&mut buf, p);
        }
        buf
    }

    pub fn relin1(share: &RelinRound1Share) -> Vec<u8> {
        let refs: Vec<&RnsPoly> = share.g0.iter().chain(share.g1.iter()).collect();
        poly_list(&refs)
    }

    pub fn relin2(polys: &[RnsPoly]) -> Vec<u8> {
        poly_list(&polys.iter().collect::<Vec<_>>())
    }

    pub fn rotation(step: usize, polys: &[RnsPoly]) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(&(step as u32).to_le_bytes());
        buf.extend_from_slice(&poly_list(&polys.iter().collect::<Vec<_>>()));
        buf
    }

    pub fn partial(poly: &RnsPoly) -> Vec<u8> {
        pubkey(poly)
    }

    pub fn refresh(share: &RefreshShare) -> Vec<u8> {
        let mut buf = Vec::new();
        append_poly(&mut buf, &share.masked_partial);
        let ct = serialize_ciphertext(&share.mask_encryption);
        buf.extend_from_slice(&(ct.len() as u64).to_le_bytes());
        buf.extend_from_slice(&ct);
        buf
    }
}
