//! Full-threshold multi-party layer over the CKKS-style scheme: collective
//! key generation (public, relinearization, rotation keys), distributed
//! decryption with smudging noise, and one-round collaborative ciphertext
//! refresh. Protocols are pure functions over serialized round messages; a
//! deterministic in-process driver routes them for tests and demos.

pub mod driver;
pub mod error;
pub mod message;
pub mod protocols;
pub mod session;

pub use driver::{default_smudging_bits, Network};
pub use error::ThresholdError;
pub use message::{ProtocolMessage, RoundTag};
pub use protocols::{
    aggregate_pubkey, aggregate_relin_round1, aggregate_rotation, combine_partials,
    combine_refresh, finalize_relin, gen_secret_share, partial_decrypt, pubkey_share,
    refresh_share, relin_round1, relin_round2, rotation_share, CommonReference, RefreshShare,
};
pub use session::{Session, SessionKeys, SessionState};
