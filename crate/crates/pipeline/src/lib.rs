//! The two homomorphic collision-probability strategies: precomputed
//! encrypted lookup tables aggregated with public quadrature weights, and
//! online homomorphic evaluation of the integrand via truncated Taylor
//! series with depth budgeting and collaborative refresh.

pub mod counter;
pub mod error;
pub mod geometry_enc;
pub mod online;
pub mod table;
pub mod taylor;

pub use counter::{ApproxConfig, EvalStrategy, OpCounter};
pub use error::PipelineError;
pub use geometry_enc::{combine_encrypted_shares, EncryptedGeometry, GeometryShares};
pub use online::{
    eval_integrand_encrypted, pcol_online, pcol_taylor_reference, NoRefresh, PointInput, Refresher,
};
pub use table::{
    build_lookup_table, load_table, pcol_from_table, save_table, select_table, LookupTable,
    SelectionWarning, TableStore, NODE_ORDER,
};
pub use taylor::{
    cos_taylor, exp_taylor, integrand_taylor, series_coefficients, series_depth,
    taylor_series_eval, SeriesKind,
};
