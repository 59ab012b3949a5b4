//! Plaintext side of the private collision-probability stack: reduction of
//! two satellite states at TCA to the encounter-plane problem, fixed-step
//! quadrature of the polar collision integral, and independent reference
//! oracles (converged quadrature and Monte-Carlo).

pub mod error;
pub mod geometry;
pub mod oracle;
pub mod quadrature;

pub use error::{GeometryError, OracleError, QuadratureError};
pub use geometry::{
    build_encounter_frame, combine_objects, is_at_tca, project_and_diagonalize,
    reduce_conjunction, tca_defect, EncounterFrame, EncounterGeometry, ObjectState,
};
pub use oracle::{mc_pcol_2d, mc_pcol_3d_linear, reference_pcol, McConfig};
pub use quadrature::{
    build_nodes, count_ops, integrand_p, integrate_pcol, isotropic_closed_form, Grid, KahanSum,
    Node, NodeSet, QuadratureSpec, Rule,
};
