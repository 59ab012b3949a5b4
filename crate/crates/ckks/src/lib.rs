//! An RNS CKKS-style approximate homomorphic encryption scheme over the
//! negacyclic ring Z_Q[X]/(X^n + 1): canonical-embedding slot encoding,
//! public-key encryption, leveled multiplication with relinearization and
//! rescaling, slot rotation, and rotate-and-sum reduction, plus versioned
//! binary serialization.

pub mod cipher;
pub mod encoding;
pub mod error;
pub mod keys;
pub mod ntt;
pub mod params;
pub mod rns;
pub mod serialize;

pub use cipher::{Ciphertext, Evaluator};
pub use encoding::{Encoder, Plaintext};
pub use error::CkksError;
pub use keys::{
    galois_exponent, generate_ksk, key_switch, keygen, normalize_step, sample_ternary,
    KeyMaterial, KeySwitchKey, PublicKey, RelinKey, RotationKeys, SecretKey,
};
pub use params::{gen_params, ChainContext, Params, Preset};
pub use rns::RnsPoly;
