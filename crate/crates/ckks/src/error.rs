use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CkksError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Scaled plaintext magnitude exceeds the modulus headroom.
    #[error("encoding overflow: {0}")]
    Overflow(String),

    #[error("operand scales differ beyond 2^-10 relative ({a:.6e} vs {b:.6e})")]
    ScaleMismatch { a: f64, b: f64 },

    #[error("operand levels differ ({a} vs {b})")]
    LevelMismatch { a: usize, b: usize },

    /// Multiplication requested at level 0: the modulus chain is exhausted
    /// and a refresh is required first.
    #[error("out of levels: no modulus left to rescale")]
    OutOfLevels,

    #[error("scale overflow: {0}")]
    ScaleOverflow(String),

    #[error("no rotation key for step {0}")]
    MissingRotationKey(i64),

    /// The tracked noise estimate no longer guarantees reliable decryption.
    #[error("noise overflow: {0}")]
    NoiseOverflow(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}
