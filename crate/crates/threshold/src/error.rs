use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    /// A required contribution is absent; full-threshold protocols fail
    /// atomically.
    #[error("missing contribution from party {party} in round {round}")]
    MissingParty { party: u16, round: &'static str },

    /// A payload failed to parse or is inconsistent with the session.
    #[error("bad share: {0}")]
    BadShare(String),

    /// Message outside the expected round, a duplicate, or a state-machine
    /// violation.
    #[error("protocol order violation: {0}")]
    ProtocolOrder(String),

    #[error(transparent)]
    Ckks(#[from] pcol_ckks::CkksError),
}
