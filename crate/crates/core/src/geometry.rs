//! Reduction of two 3-D satellite states at TCA to the 2-D encounter-plane
//! problem (combined radius r, principal sigmas) behind the polar-coordinate
//! collision integral.
//!
//! Conventions: positions in meters (inertial frame, at TCA), velocities in
//! m/s, covariances in m^2. All types are immutable values and every
//! operation is pure.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::error::GeometryError;

/// Relative symmetry tolerance for user-supplied covariances.
const SYMMETRY_TOL: f64 = 1e-9;
/// Eigenvalues may be negative by up to this fraction of the trace.
const PSD_TOL: f64 = 1e-12;
/// Below this relative speed no encounter plane is definable.
const MIN_RELATIVE_SPEED: f64 = 1e-9;
/// In-plane projection shorter than this (relative to |rel_pos|) triggers
/// the deterministic x-axis fallback.
const PROJECTION_TOL: f64 = 1e-9;

/// One satellite's mean state, positional covariance, and hard-body radius
/// at the time of closest approach.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectState {
    position: Vector3<f64>,
    velocity: Vector3<f64>,
    covariance: Matrix3<f64>,
    radius: f64,
}

impl ObjectState {
    /// Validates the type invariants: `radius > 0`, covariance symmetric
    /// within 1e-9 relative and positive semi-definite up to numerical noise
    /// (eigenvalues >= -1e-12 * trace).
    pub fn new(
        position: Vector3<f64>,
        velocity: Vector3<f64>,
        covariance: Matrix3<f64>,
        radius: f64,
    ) -> Result<Self, GeometryError> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(GeometryError::InvalidObjectState(format!(
                "radius must be > 0 m, got {radius}"
            )));
        }
        let finite = position.iter().chain(velocity.iter()).chain(covariance.iter());
        for v in finite {
            if !v.is_finite() {
                return Err(GeometryError::InvalidObjectState(
                    "non-finite component in state".into(),
                ));
            }
        }
        let scale = covariance.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..3 {
            for j in (i + 1)..3 {
                let skew = (covariance[(i, j)] - covariance[(j, i)]).abs();
                if skew > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
                    return Err(GeometryError::InvalidObjectState(format!(
                        "covariance not symmetric: |C[{i}{j}] - C[{j}{i}]| = {skew:.3e}"
                    )));
                }
            }
        }
        let sym = (covariance + covariance.transpose()) * 0.5;
        let trace = sym.trace();
        let eig = sym.symmetric_eigenvalues();
        let floor = -PSD_TOL * trace.abs();
        if eig.iter().any(|&l| l < floor) {
            return Err(GeometryError::InvalidObjectState(format!(
                "covariance not positive semi-definite (min eigenvalue {:.3e})",
                eig.iter().cloned().fold(f64::INFINITY, f64::min)
            )));
        }
        Ok(Self {
            position,
            velocity,
            covariance: sym,
            radius,
        })
    }

    pub fn position(&self) -> Vector3<f64> {
        self.position
    }

    pub fn velocity(&self) -> Vector3<f64> {
        self.velocity
    }

    pub fn covariance(&self) -> Matrix3<f64> {
        self.covariance
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Orthonormal right-handed frame with the y-axis along the relative
/// velocity; the (x, z) plane is the encounter plane.
#[derive(Debug, Clone, PartialEq)]
pub struct EncounterFrame {
    pub x_axis: Vector3<f64>,
    pub y_axis: Vector3<f64>,
    pub z_axis: Vector3<f64>,
}

/// The reduced 2-D problem: combined radius, principal sigmas of the
/// projected combined covariance, and the in-plane miss vector.
///
/// `sigma_x >= sigma_z` by canonical ordering. The miss vector is reported
/// for diagnostics only; the integrand is centered at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct EncounterGeometry {
    /// r = r1 + r2, meters.
    pub combined_radius: f64,
    /// Largest principal sigma of the projected covariance, meters.
    pub sigma_x: f64,
    /// Smallest principal sigma, meters.
    pub sigma_z: f64,
    /// Rotation (radians) taking the frame (x, z) axes to the principal axes.
    pub rotation_angle: f64,
    /// Relative position projected onto the encounter plane, meters.
    pub miss_vector: Vector2<f64>,
    /// |v1 - v2|, meters/second.
    pub relative_speed: f64,
}

impl EncounterGeometry {
    /// Synthetic centered geometry from direct (r, sigma_x, sigma_z)
    /// inputs: no miss information, canonical sigma ordering applied.
    pub fn centered(
        combined_radius: f64,
        sigma_x: f64,
        sigma_z: f64,
    ) -> Result<Self, GeometryError> {
        if !(combined_radius > 0.0 && sigma_x > 0.0 && sigma_z > 0.0) {
            return Err(GeometryError::InvalidObjectState(format!(
                "need positive radius and sigmas, got ({combined_radius}, {sigma_x}, {sigma_z})"
            )));
        }
        let (hi, lo) = if sigma_x >= sigma_z {
            (sigma_x, sigma_z)
        } else {
            (sigma_z, sigma_x)
        };
        Ok(Self {
            combined_radius,
            sigma_x: hi,
            sigma_z: lo,
            rotation_angle: 0.0,
            miss_vector: Vector2::zeros(),
            relative_speed: f64::NAN,
        })
    }
}

/// Combines two states into the point-particle reduction: all hard-body
/// radius on one object (r = r1 + r2), all positional uncertainty on the
/// other (C = C1 + C2).
pub fn combine_objects(
    s1: &ObjectState,
    s2: &ObjectState,
) -> Result<(f64, Matrix3<f64>, Vector3<f64>, Vector3<f64>), GeometryError> {
    let rel_velocity = s1.velocity - s2.velocity;
    let speed = rel_velocity.norm();
    if speed < MIN_RELATIVE_SPEED {
        return Err(GeometryError::ZeroRelativeVelocity { speed });
    }
    Ok((
        s1.radius + s2.radius,
        s1.covariance + s2.covariance,
        s1.position - s2.position,
        rel_velocity,
    ))
}

/// Builds the encounter frame: y along the relative velocity, x along the
/// in-plane projection of the relative position (deterministic canonical
/// fallback when that projection vanishes), z = x cross y... completed to a
/// right-handed triple with z = cross(x, y).
pub fn build_encounter_frame(
    rel_velocity: Vector3<f64>,
    rel_position: Vector3<f64>,
) -> Result<EncounterFrame, GeometryError> {
    let speed = rel_velocity.norm();
    if speed < MIN_RELATIVE_SPEED {
        return Err(GeometryError::ZeroRelativeVelocity { speed });
    }
    let y_axis = rel_velocity / speed;

    let in_plane = rel_position - y_axis * rel_position.dot(&y_axis);
    let x_axis = if in_plane.norm() > PROJECTION_TOL * rel_position.norm() {
        in_plane.normalize()
    } else {
        // rel_position is (numerically) parallel to the velocity: pick the
        // canonical basis vector least aligned with y, orthogonalize.
        let k = y_axis.iamin();
        let mut e = Vector3::zeros();
        e[k] = 1.0;
        (e - y_axis * e.dot(&y_axis)).normalize()
    };
    let z_axis = x_axis.cross(&y_axis).normalize();
    Ok(EncounterFrame {
        x_axis,
        y_axis,
        z_axis,
    })
}

/// Projects the combined covariance onto the encounter plane and
/// diagonalizes the resulting 2x2 matrix in closed form.
///
/// Returns `(sigma_x, sigma_z, rotation_angle)` with `sigma_x >= sigma_z`.
pub fn project_and_diagonalize(
    combined_covariance: &Matrix3<f64>,
    frame: &EncounterFrame,
) -> Result<(f64, f64, f64), GeometryError> {
    let cx = combined_covariance * frame.x_axis;
    let cz = combined_covariance * frame.z_axis;
    let a = frame.x_axis.dot(&cx);
    let c = frame.z_axis.dot(&cz);
    // symmetrize the off-diagonal against rounding
    let b = 0.5 * (frame.x_axis.dot(&cz) + frame.z_axis.dot(&cx));

    let mean = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    let disc = (half_diff * half_diff + b * b).sqrt();
    let lambda_max = mean + disc;
    let lambda_min = mean - disc;
    if lambda_min <= 0.0 {
        return Err(GeometryError::DegenerateCovariance {
            lambda_min,
        });
    }
    let angle = if b == 0.0 && a >= c {
        0.0
    } else {
        0.5 * (2.0 * b).atan2(a - c)
    };
    Ok((lambda_max.sqrt(), lambda_min.sqrt(), angle))
}

/// Full reduction: combine, build the frame, project, diagonalize.
pub fn reduce_conjunction(
    s1: &ObjectState,
    s2: &ObjectState,
) -> Result<EncounterGeometry, GeometryError> {
    let (combined_radius, combined_cov, rel_position, rel_velocity) = combine_objects(s1, s2)?;
    let frame = build_encounter_frame(rel_velocity, rel_position)?;
    let (sigma_x, sigma_z, rotation_angle) = project_and_diagonalize(&combined_cov, &frame)?;
    Ok(EncounterGeometry {
        combined_radius,
        sigma_x,
        sigma_z,
        rotation_angle,
        miss_vector: Vector2::new(
            rel_position.dot(&frame.x_axis),
            rel_position.dot(&frame.z_axis),
        ),
        relative_speed: rel_velocity.norm(),
    })
}

/// TCA orthogonality defect |rel_pos . rel_vel|. At a true TCA under linear
/// motion this is 0; callers should warn (not fail) when it exceeds
/// `1e-6 * |rel_pos| * |rel_vel|`.
pub fn tca_defect(s1: &ObjectState, s2: &ObjectState) -> f64 {
    let rp = s1.position - s2.position;
    let rv = s1.velocity - s2.velocity;
    rp.dot(&rv).abs()
}

/// True when the states look like a genuine TCA snapshot (see [`tca_defect`]).
pub fn is_at_tca(s1: &ObjectState, s2: &ObjectState) -> bool {
    let rp = (s1.position - s2.position).norm();
    let rv = (s1.velocity - s2.velocity).norm();
    tca_defect(s1, s2) <= 1e-6 * rp * rv
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn state(
        pos: [f64; 3],
        vel: [f64; 3],
        cov_diag: [f64; 3],
        radius: f64,
    ) -> ObjectState {
        ObjectState::new(
            Vector3::from(pos),
            Vector3::from(vel),
            Matrix3::from_diagonal(&Vector3::from(cov_diag)),
            radius,
        )
        .unwrap()
    }

    /// The paper's exemplary values come out of this axis-aligned pair:
    /// r = 5 m, sigma_x ~ 70.7107 m, sigma_z ~ 35.3553 m.
    fn axis_aligned_pair() -> (ObjectState, ObjectState) {
        let s1 = state([0.0, 0.0, 200.0], [15000.0, 0.0, 0.0], [2500.0, 2500.0, 625.0], 3.0);
        let s2 = state([0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [2500.0, 2500.0, 625.0], 2.0);
        (s1, s2)
    }

    #[test]
    fn radius_and_covariance_are_additive() {
        let (s1, s2) = axis_aligned_pair();
        let (r, cov, rel_p, rel_v) = combine_objects(&s1, &s2).unwrap();
        assert_eq!(r, 5.0);
        assert_eq!(cov, Matrix3::from_diagonal(&Vector3::new(5000.0, 5000.0, 1250.0)));
        assert_eq!(rel_p, Vector3::new(0.0, 0.0, 200.0));
        assert_eq!(rel_v, Vector3::new(15000.0, 0.0, 0.0));
    }

    #[test]
    fn zero_covariances_combine_to_zero() {
        let s1 = state([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0; 3], 3.0);
        let s2 = state([0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0; 3], 2.0);
        let (_, cov, _, _) = combine_objects(&s1, &s2).unwrap();
        assert_eq!(cov, Matrix3::zeros());
    }

    #[test]
    fn identical_velocities_are_rejected() {
        let s1 = state([1.0, 0.0, 0.0], [7500.0, 0.0, 0.0], [1.0; 3], 1.0);
        let s2 = state([0.0, 0.0, 0.0], [7500.0, 0.0, 0.0], [1.0; 3], 1.0);
        assert!(matches!(
            combine_objects(&s1, &s2),
            Err(GeometryError::ZeroRelativeVelocity { .. })
        ));
    }

    #[test]
    fn frame_axis_aligned_x_case() {
        let f = build_encounter_frame(
            Vector3::new(15000.0, 0.0, 0.0),
            Vector3::new(0.0, 0.0, 200.0),
        )
        .unwrap();
        assert_relative_eq!(f.y_axis, Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(f.x_axis, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
        assert_relative_eq!(f.z_axis, f.x_axis.cross(&f.y_axis), epsilon = 1e-12);
    }

    #[test]
    fn frame_axis_aligned_y_case() {
        let f = build_encounter_frame(
            Vector3::new(0.0, 7500.0, 0.0),
            Vector3::new(100.0, 0.0, 0.0),
        )
        .unwrap();
        assert_relative_eq!(f.y_axis, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(f.x_axis, Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn parallel_position_triggers_fallback() {
        let v = Vector3::new(1.0, 1.0, 0.0) * (7500.0 / 2f64.sqrt());
        let f = build_encounter_frame(v, v * 1e-3).unwrap();
        // still orthonormal and right-handed
        assert_relative_eq!(f.x_axis.norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(f.x_axis.dot(&f.y_axis), 0.0, epsilon = 1e-12);
        assert_relative_eq!(f.z_axis, f.x_axis.cross(&f.y_axis), epsilon = 1e-12);
    }

    #[test]
    fn already_diagonal_projection() {
        let f = build_encounter_frame(
            Vector3::new(15000.0, 0.0, 0.0),
            Vector3::new(0.0, 0.0, 200.0),
        )
        .unwrap();
        let cov = Matrix3::from_diagonal(&Vector3::new(5000.0, 5000.0, 1250.0));
        let (sx, sz, angle) = project_and_diagonalize(&cov, &f).unwrap();
        assert_relative_eq!(sx, 5000f64.sqrt(), epsilon = 1e-9);
        assert_relative_eq!(sz, 1250f64.sqrt(), epsilon = 1e-9);
        // W = diag(1250, 5000): principal axis is the frame z-axis
        assert_relative_eq!(angle.abs(), std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn isotropic_projection_returns_zero_angle() {
        let f = build_encounter_frame(
            Vector3::new(0.0, 7500.0, 0.0),
            Vector3::new(100.0, 0.0, 0.0),
        )
        .unwrap();
        let (sx, sz, angle) = project_and_diagonalize(&Matrix3::identity(), &f).unwrap();
        assert_relative_eq!(sx, 1.0, epsilon = 1e-12);
        assert_relative_eq!(sz, 1.0, epsilon = 1e-12);
        assert_eq!(angle, 0.0);
    }

    #[test]
    fn hand_eigendecomposition_case() {
        // W = [[3,1],[1,3]] in the frame (x, z) plane: eigenvalues {4, 2},
        // principal axis at pi/4.
        let f = build_encounter_frame(
            Vector3::new(0.0, 7500.0, 0.0),
            Vector3::new(100.0, 0.0, 0.0),
        )
        .unwrap();
        // frame is x=(1,0,0), y=(0,1,0), z=cross(x,y)=(0,0,1); embed W as
        // C with x'Cx=3, z'Cz=3, x'Cz=1.
        let cov = Matrix3::new(3.0, 0.0, 1.0, 0.0, 7.0, 0.0, 1.0, 0.0, 3.0);
        let (sx, sz, angle) = project_and_diagonalize(&cov, &f).unwrap();
        assert_relative_eq!(sx, 2.0, epsilon = 1e-12);
        assert_relative_eq!(sz, 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(angle, std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_covariance_is_reported() {
        let f = build_encounter_frame(
            Vector3::new(0.0, 7500.0, 0.0),
            Vector3::new(100.0, 0.0, 0.0),
        )
        .unwrap();
        let cov = Matrix3::from_diagonal(&Vector3::new(0.0, 10.0, 1.0));
        assert!(matches!(
            project_and_diagonalize(&cov, &f),
            Err(GeometryError::DegenerateCovariance { .. })
        ));
    }

    #[test]
    fn full_reduction_matches_paper_fixture() {
        let (s1, s2) = axis_aligned_pair();
        let g = reduce_conjunction(&s1, &s2).unwrap();
        assert_eq!(g.combined_radius, 5.0);
        assert_relative_eq!(g.sigma_x, 70.71067811865476, epsilon = 1e-9);
        assert_relative_eq!(g.sigma_z, 35.35533905932738, epsilon = 1e-9);
        assert_relative_eq!(g.miss_vector.x, 200.0, epsilon = 1e-9);
        assert_relative_eq!(g.miss_vector.y, 0.0, epsilon = 1e-9);
        assert_eq!(g.relative_speed, 15000.0);
        assert!(g.sigma_x >= g.sigma_z);
    }

    #[test]
    fn swapping_objects_preserves_reduction() {
        let (s1, s2) = axis_aligned_pair();
        let a = reduce_conjunction(&s1, &s2).unwrap();
        let b = reduce_conjunction(&s2, &s1).unwrap();
        assert_relative_eq!(a.combined_radius, b.combined_radius, max_relative = 1e-12);
        assert_relative_eq!(a.sigma_x, b.sigma_x, max_relative = 1e-12);
        assert_relative_eq!(a.sigma_z, b.sigma_z, max_relative = 1e-12);
        assert_relative_eq!(a.miss_vector.norm(), b.miss_vector.norm(), max_relative = 1e-12);
    }

    #[test]
    fn presummed_covariance_is_equivalent() {
        let c1 = Matrix3::new(900.0, 120.0, -40.0, 120.0, 400.0, 60.0, -40.0, 60.0, 1600.0);
        let c2 = Matrix3::new(2500.0, -300.0, 0.0, -300.0, 900.0, 150.0, 0.0, 150.0, 400.0);
        let mk = |cov: Matrix3<f64>| {
            ObjectState::new(
                Vector3::new(0.0, 0.0, 120.0),
                Vector3::new(12000.0, 3000.0, 0.0),
                cov,
                2.5,
            )
            .unwrap()
        };
        let other = ObjectState::new(
            Vector3::zeros(),
            Vector3::new(0.0, -4000.0, 1000.0),
            c2,
            1.5,
        )
        .unwrap();
        let zero_other = ObjectState::new(
            Vector3::zeros(),
            Vector3::new(0.0, -4000.0, 1000.0),
            Matrix3::zeros(),
            1.5,
        )
        .unwrap();
        let split = reduce_conjunction(&mk(c1), &other).unwrap();
        let summed = reduce_conjunction(&mk(c1 + c2), &zero_other).unwrap();
        assert_relative_eq!(split.sigma_x, summed.sigma_x, max_relative = 1e-12);
        assert_relative_eq!(split.sigma_z, summed.sigma_z, max_relative = 1e-12);
    }

    #[test]
    fn tca_defect_flags_off_tca_states() {
        let (s1, s2) = axis_aligned_pair();
        assert!(is_at_tca(&s1, &s2));
        let off = state([100.0, 0.0, 200.0], [15000.0, 0.0, 0.0], [2500.0; 3], 3.0);
        assert!(!is_at_tca(&off, &s2));
    }

    #[test]
    fn invalid_states_are_rejected() {
        assert!(ObjectState::new(
            Vector3::zeros(),
            Vector3::zeros(),
            Matrix3::identity(),
            0.0
        )
        .is_err());
        // asymmetric covariance
        let bad = Matrix3::new(1.0, 0.5, 0.0, -0.5, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(ObjectState::new(Vector3::zeros(), Vector3::zeros(), bad, 1.0).is_err());
        // indefinite covariance
        let neg = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0));
        assert!(ObjectState::new(Vector3::zeros(), Vector3::zeros(), neg, 1.0).is_err());
    }
}
