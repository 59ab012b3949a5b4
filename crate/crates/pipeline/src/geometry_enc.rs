//! Encrypted encounter geometry: the sigma-derived inverses arrive as
//! additive shares from each operator and are combined homomorphically.
//!
//! Schedule: shares are encoded with every slot carrying the share value
//! (slot-parallel pipelines broadcast the scalar) at scale Delta^2, which
//! buries the fresh-encryption noise far below the working precision; the
//! first use of each quantity rescales it down to Delta.

use rand::Rng;

use pcol_ckks::{Ciphertext, Evaluator, PublicKey};

use crate::error::PipelineError;

/// Encrypted 1/sx'^2, 1/sz'^2, 1/(sx' sz') plus the public combined radius.
#[derive(Debug, Clone)]
pub struct EncryptedGeometry {
    pub ct_inv_sx2: Ciphertext,
    pub ct_inv_sz2: Ciphertext,
    pub ct_inv_sxsz: Ciphertext,
    /// r = r1 + r2, public (the hard-body radius is not sensitive).
    pub combined_radius: f64,
}

/// One operator's additive shares of the three derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryShares {
    pub inv_sx2: f64,
    pub inv_sz2: f64,
    pub inv_sxsz: f64,
}

impl GeometryShares {
    /// Deterministic additive split of the true quantities among `parties`.
    pub fn split<R: Rng>(
        sigma_x: f64,
        sigma_z: f64,
        parties: usize,
        rng: &mut R,
    ) -> Vec<GeometryShares> {
        let totals = [
            1.0 / (sigma_x * sigma_x),
            1.0 / (sigma_z * sigma_z),
            1.0 / (sigma_x * sigma_z),
        ];
        let mut out = vec![
            GeometryShares {
                inv_sx2: 0.0,
                inv_sz2: 0.0,
                inv_sxsz: 0.0
            };
            parties
        ];
        for (q, &total) in totals.iter().enumerate() {
            let mut rest = total;
            for p in 0..parties - 1 {
                let v = rng.gen_range(-1.0..1.0) * total;
                let share = &mut out[p];
                match q {
                    0 => share.inv_sx2 = v,
                    1 => share.inv_sz2 = v,
                    _ => share.inv_sxsz = v,
                }
                rest -= v;
            }
            let last = &mut out[parties - 1];
            match q {
                0 => last.inv_sx2 = rest,
                1 => last.inv_sz2 = rest,
                _ => last.inv_sxsz = rest,
            }
        }
        out
    }

    /// Encrypts the three share values, each broadcast across all slots at
    /// scale Delta^2.
    pub fn encrypt<R: Rng>(
        &self,
        evaluator: &Evaluator,
        pk: &PublicKey,
        rng: &mut R,
    ) -> Result<[Ciphertext; 3], PipelineError> {
        let params = evaluator.params();
        let scale = params.scale() * params.scale();
        let slots = params.slot_count();
        let mut enc = |v: f64| -> Result<Ciphertext, PipelineError> {
            let pt = evaluator.encode(&vec![v; slots], params.max_level(), scale)?;
            Ok(evaluator.encrypt(&pt, pk, rng)?)
        };
        Ok([enc(self.inv_sx2)?, enc(self.inv_sz2)?, enc(self.inv_sxsz)?])
    }
}

/// Sums one encrypted share per party per quantity into the combined
/// encrypted geometry.
pub fn combine_encrypted_shares(
    evaluator: &Evaluator,
    shares: &[[Ciphertext; 3]],
    party_count: usize,
    combined_radius: f64,
) -> Result<EncryptedGeometry, PipelineError> {
    if shares.len() != party_count || shares.is_empty() {
        return Err(PipelineError::MissingShares {
            expected: party_count,
            got: shares.len(),
        });
    }
    let mut acc = shares[0].clone();
    for s in &shares[1..] {
        for q in 0..3 {
            acc[q] = evaluator.add(&acc[q], &s[q])?;
        }
    }
    let [ct_inv_sx2, ct_inv_sz2, ct_inv_sxsz] = acc;
    Ok(EncryptedGeometry {
        ct_inv_sx2,
        ct_inv_sz2,
        ct_inv_sxsz,
        combined_radius,
    })
}
