//! Serialized protocol rounds.
//!
//! Wire format: magic `PCOLMSG`, format version u16, session id (16 bytes),
//! sender u16, round tag u8, payload length u64, payload bytes. Payload
//! contents are round-specific and use the ckks raw serialization.

use crate::error::ThresholdError;

pub const MESSAGE_MAGIC: &[u8; 7] = b"PCOLMSG";
pub const MESSAGE_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RoundTag {
    PubKeyShare = 1,
    RelinShareRound1 = 2,
    RelinShareRound2 = 3,
    RotKeyShare = 4,
    PartialDecryption = 5,
    RefreshShare = 6,
}

impl RoundTag {
    pub fn from_u8(v: u8) -> Result<Self, ThresholdError> {
        Ok(match v {
            1 => RoundTag::PubKeyShare,
            2 => RoundTag::RelinShareRound1,
            3 => RoundTag::RelinShareRound2,
            4 => RoundTag::RotKeyShare,
            5 => RoundTag::PartialDecryption,
            6 => RoundTag::RefreshShare,
            other => {
                return Err(ThresholdError::BadShare(format!(
                    "unknown round tag {other}"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            RoundTag::PubKeyShare => "PubKeyShare",
            RoundTag::RelinShareRound1 => "RelinShareRound1",
            RoundTag::RelinShareRound2 => "RelinShareRound2",
            RoundTag::RotKeyShare => "RotKeyShare",
            RoundTag::PartialDecryption => "PartialDecryption",
            RoundTag::RefreshShare => "RefreshShare",
        }
    }
}

/// One serialized round contribution from one party.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolMessage {
    pub session_id: [u8; 16],
    pub sender: u16,
    pub round_tag: RoundTag,
    pub payload: Vec<u8>,
}

impl ProtocolMessage {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(34 + self.payload.len());
        buf.extend_from_slice(MESSAGE_MAGIC);
        buf.extend_from_slice(&MESSAGE_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.session_id);
        buf.extend_from_slice(&self.sender.to_le_bytes());
        buf.push(self.round_tag as u8);
        buf.extend_from_slice(&(self.payload.len() as u64).to_le_bytes());
        buf.extend_from_slice(&self.payload);
        buf
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, ThresholdError> {
        if data.len() < 36 {
            return Err(ThresholdError::BadShare("message too short".into()));
        }
        if &data[..7] != MESSAGE_MAGIC {
            return Err(ThresholdError::BadShare("bad message magic".into()));
        }
        let version = u16::from_le_bytes(data[7..9].try_into().unwrap());
        if version != MESSAGE_VERSION {
            return Err(ThresholdError::BadShare(format!(
                "unsupported message version {version}"
            )));
        }
        let mut session_id = [0u8; 16];
        session_id.copy_from_slice(&data[9..25]);
        let sender = u16::from_le_bytes(data[25..27].try_into().unwrap());
        let round_tag = RoundTag::from_u8(data[27])?;
        let len = u64::from_le_bytes(data[28..36].try_into().unwrap()) as usize;
        if data.len() != 36 + len {
            return Err(ThresholdError::BadShare("payload length mismatch".into()));
        }
        Ok(Self {
            session_id,
            sender,
            round_tag,
            payload: data[36..].to_vec(),
        })
    }
}
