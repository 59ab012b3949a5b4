use thiserror::Error;

/// Errors from the encounter-plane reduction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    /// |v1 - v2| below 1e-9 m/s: no encounter plane is definable. Signals a
    /// long-term-encounter case, which this library does not model.
    #[error("relative velocity is zero ({speed:.3e} m/s): no encounter plane definable")]
    ZeroRelativeVelocity { speed: f64 },

    /// The projected 2x2 covariance has a non-positive eigenvalue, so the
    /// encounter-plane density is undefined (deterministic in-plane position).
    #[error("projected covariance is degenerate (lambda_min = {lambda_min:.3e} m^2)")]
    DegenerateCovariance { lambda_min: f64 },

    /// An input state violates its type invariants.
    #[error("invalid object state: {0}")]
    InvalidObjectState(String),
}

/// Errors from quadrature construction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    /// Step sizes give fewer than 1 radial or 2 angular intervals.
    #[error("invalid step sizes: N = {radial} radial intervals, M = {angular} angular (need N >= 1, M >= 2)")]
    InvalidStep { radial: usize, angular: usize },

    /// Gauss-Legendre order outside the tabulated range 2..=8.
    #[error("unsupported Gauss-Legendre order {0} (supported: 2..=8)")]
    UnsupportedOrder(u8),
}

/// Errors from the reference oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    /// Step-halving refinement did not converge to 1e-15 relative.
    #[error("reference quadrature did not converge after {refinements} refinements (last delta {last_delta:.3e})")]
    NonConvergence { refinements: usize, last_delta: f64 },

    #[error("invalid Monte-Carlo config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
