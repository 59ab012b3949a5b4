//! Conjunction input JSON (schema `pcol_input_v1`): two satellite states
//! at TCA, SI units throughout (meters, m/s, m^2, radians). No unit
//! inference is performed.

use nalgebra::{Matrix3, Vector3};
use serde::Deserialize;

use pcol_core::ObjectState;

use crate::CliError;

pub const INPUT_SCHEMA: &str = "pcol_input_v1";

#[derive(Debug, Deserialize)]
pub struct ConjunctionInput {
    pub schema: String,
    pub objects: Vec<ObjectInput>,
}

#[derive(Debug, Deserialize)]
pub struct ObjectInput {
    #[serde(default)]
    pub label: Option<String>,
    pub position_m: [f64; 3],
    pub velocity_mps: [f64; 3],
    pub covariance_m2: [[f64; 3]; 3],
    pub radius_m: f64,
}

impl ObjectInput {
    fn to_state(&self) -> Result<ObjectState, CliError> {
        let mut cov = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                cov[(i, j)] = self.covariance_m2[i][j];
            }
        }
        ObjectState::new(
            Vector3::from(self.position_m),
            Vector3::from(self.velocity_mps),
            cov,
            self.radius_m,
        )
        .map_err(|e| CliError::Usage(format!("invalid object state: {e}")))
    }
}

/// Parses and validates an input file into the two states.
pub fn load_conjunction(path: &std::path::Path) -> Result<(ObjectState, ObjectState), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let input: ConjunctionInput = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("malformed input JSON: {e}")))?;
    if input.schema != INPUT_SCHEMA {
        return Err(CliError::Usage(format!(
            "unsupported schema {:?} (expected {INPUT_SCHEMA:?})",
            input.schema
        )));
    }
    if input.objects.len() != 2 {
        return Err(CliError::Usage(format!(
            "need exactly 2 objects, got {}",
            input.objects.len()
        )));
    }
    Ok((input.objects[0].to_state()?, input.objects[1].to_state()?))
}
