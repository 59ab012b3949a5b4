//! Encrypted lookup tables: precomputed integrand evaluations packed into
//! ciphertext slots, aggregated later with public quadrature weights.
//!
//! Table values are exact plaintext evaluations of p(y, phi) on the
//! table-owner side, encoded at scale Delta^2 so the whole aggregation
//! stays far above the noise floor (the paper's depth-0 regime: no
//! ciphertext-ciphertext products anywhere).

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use pcol_core::{build_nodes, integrand_p, Grid, QuadratureSpec, Rule};
use pcol_ckks::serialize::{deserialize_ciphertext, serialize_ciphertext, serialize_params};
use pcol_ckks::{Ciphertext, Evaluator, PublicKey, RotationKeys};

use crate::counter::OpCounter;
use crate::error::PipelineError;

/// The documented packing enumeration (see [`pcol_core::build_nodes`]).
pub const NODE_ORDER: &str = "row-major-radial-major-v1";

/// Encrypted integrand evaluations for one (sigma_x, sigma_z) pair.
#[derive(Debug, Clone)]
pub struct LookupTable {
    /// Plaintext metadata tag used for table selection.
    pub sigma_key: (f64, f64),
    pub combined_radius: f64,
    pub spec: QuadratureSpec,
    pub grid: Grid,
    pub eval_count: usize,
    /// Row-major packed evaluations, up to n/2 per ciphertext, zero-padded.
    pub packed: Vec<Ciphertext>,
}

/// Builds the table by evaluating the integrand at every node in plaintext
/// and encrypting the packed slot vectors under the session public key.
pub fn build_lookup_table<R: Rng>(
    evaluator: &Evaluator,
    sigma_x: f64,
    sigma_z: f64,
    spec: &QuadratureSpec,
    r: f64,
    pk: &PublicKey,
    rng: &mut R,
) -> Result<LookupTable, PipelineError> {
    let nodes = build_nodes(spec, r)?;
    let params = evaluator.params();
    let slots = params.slot_count();
    let scale = params.scale() * params.scale();
    let mut packed = Vec::with_capacity(nodes.eval_count.div_ceil(slots));
    for chunk in nodes.nodes.chunks(slots) {
        let values: Vec<f64> = chunk
            .iter()
            .map(|n| integrand_p(n.y, n.phi, sigma_x, sigma_z))
            .collect();
        let pt = evaluator.encode(&values, params.max_level(), scale)?;
        packed.push(evaluator.encrypt(&pt, pk, rng)?);
    }
    Ok(LookupTable {
        sigma_key: (sigma_x, sigma_z),
        combined_radius: r,
        spec: *spec,
        grid: nodes.grid,
        eval_count: nodes.eval_count,
        packed,
    })
}

/// In-memory table collection.
#[derive(Debug, Default)]
pub struct TableStore {
    pub tables: Vec<LookupTable>,
}

/// Raised when the requested sigmas have no exact table and a neighbor was
/// substituted; mirrors the accuracy caveat of precomputed tables.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionWarning {
    pub requested: (f64, f64),
    pub selected: (f64, f64),
    pub distance: f64,
}

impl std::fmt::Display for SelectionWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "no table for sigma = ({:.6}, {:.6}); using nearest ({:.6}, {:.6}) at distance {:.3e} \
             - mismatched table parameters can introduce considerable errors",
            self.requested.0, self.requested.1, self.selected.0, self.selected.1, self.distance
        )
    }
}

/// Exact match on the plaintext sigma metadata, with nearest-neighbor
/// fallback. Encrypted comparison is deliberately not implemented; the
/// correct table is identified from its plaintext tag.
pub fn select_table<'a>(
    requested: (f64, f64),
    store: &'a TableStore,
) -> Result<(&'a LookupTable, Option<SelectionWarning>), PipelineError> {
    if store.tables.is_empty() {
        return Err(PipelineError::EmptyStore);
    }
    if let Some(t) = store
        .tables
        .iter()
        .find(|t| t.sigma_key.0 == requested.0 && t.sigma_key.1 == requested.1)
    {
        return Ok((t, None));
    }
    let dist = |t: &LookupTable| {
        let dx = t.sigma_key.0 - requested.0;
        let dz = t.sigma_key.1 - requested.1;
        (dx * dx + dz * dz).sqrt()
    };
    let nearest = store
        .tables
        .iter()
        .min_by(|a, b| dist(a).total_cmp(&dist(b)))
        .expect("non-empty store");
    Ok((
        nearest,
        Some(SelectionWarning {
            requested,
            selected: nearest.sigma_key,
            distance: dist(nearest),
        }),
    ))
}

/// Weighted aggregation of a lookup table: slotwise public-weight products,
/// rotate-and-sum per ciphertext, and a final sum of the partials. Slot 0
/// of the result carries the encrypted collision probability.
///
/// The returned counter reports the non-parallel addition count (the
/// table's convention for cross-scheme comparison) and the actual number
/// of ciphertext products.
pub fn pcol_from_table(
    evaluator: &Evaluator,
    table: &LookupTable,
    spec: &QuadratureSpec,
    rotations: &RotationKeys,
    counter: &mut OpCounter,
) -> Result<Ciphertext, PipelineError> {
    let nodes = build_nodes(spec, table.combined_radius)?;
    if nodes.grid != table.grid || spec.rule != table.spec.rule {
        return Err(PipelineError::GridMismatch(format!(
            "table built for {:?} with grid {:?}, request is {:?} with grid {:?}",
            table.spec.rule, table.grid, spec.rule, nodes.grid
        )));
    }
    if nodes.eval_count != table.eval_count {
        return Err(PipelineError::GridMismatch("node count mismatch".into()));
    }
    let params = evaluator.params();
    let slots = params.slot_count();
    let mut total: Option<Ciphertext> = None;
    for (ct, chunk) in table.packed.iter().zip(nodes.nodes.chunks(slots)) {
        let weights: Vec<f64> = chunk.iter().map(|n| n.weight).collect();
        let wp = evaluator.encode(&weights, ct.level(), params.scale())?;
        counter.mult_rescaling();
        let weighted = evaluator.mult_plain(ct, &wp)?;
        let partial = evaluator.sum_slots(&weighted, slots, rotations)?;
        total = Some(match total {
            None => partial,
            Some(acc) => evaluator.add(&acc, &partial)?,
        });
    }
    // reporting convention: additions as in a non-parallel accumulation
    counter.additions += nodes.addition_count;
    total.ok_or(PipelineError::GridMismatch("empty table".into()))
}

// ── Persistence ──────────────────────────────────────────────────────────

#[derive(Debug, Serialize, Deserialize)]
struct TableManifest {
    schema: String,
    sigma_x: f64,
    sigma_z: f64,
    combined_radius: f64,
    rule: String,
    h_r: f64,
    h_phi: f64,
    radial_intervals: usize,
    angular_intervals: usize,
    node_order: String,
    eval_count: usize,
    ciphertexts: Vec<String>,
    params_sha256: String,
}

fn params_digest(evaluator: &Evaluator) -> String {
    let bytes = serialize_params(evaluator.params());
    let mut h = Sha256::new();
    h.update(&bytes);
    hex_string(&h.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes one table as a manifest plus one file per ciphertext.
pub fn save_table(
    dir: &Path,
    evaluator: &Evaluator,
    table: &LookupTable,
) -> Result<(), PipelineError> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(table.packed.len());
    for (i, ct) in table.packed.iter().enumerate() {
        let name = format!("table_{i:04}.ct");
        fs::write(dir.join(&name), serialize_ciphertext(ct))?;
        files.push(name);
    }
    let manifest = TableManifest {
        schema: "pcol_table_v1".into(),
        sigma_x: table.sigma_key.0,
        sigma_z: table.sigma_key.1,
        combined_radius: table.combined_radius,
        rule: table.spec.rule.label(),
        h_r: table.spec.h_r,
        h_phi: table.spec.h_phi,
        radial_intervals: table.grid.radial_intervals,
        angular_intervals: table.grid.angular_intervals,
        node_order: NODE_ORDER.into(),
        eval_count: table.eval_count,
        ciphertexts: files,
        params_sha256: params_digest(evaluator),
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| PipelineError::Manifest(e.to_string()))?;
    fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

/// Loads a table directory, validating schema, node order, and the
/// parameter digest.
pub fn load_table(dir: &Path, evaluator: &Evaluator) -> Result<LookupTable, PipelineError> {
    let json = fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: TableManifest =
        serde_json::from_str(&json).map_err(|e| PipelineError::Manifest(e.to_string()))?;
    if manifest.schema != "pcol_table_v1" {
        return Err(PipelineError::Manifest(format!(
            "unknown schema {}",
            manifest.schema
        )));
    }
    if manifest.node_order != NODE_ORDER {
        return Err(PipelineError::Manifest(format!(
            "unsupported node order {}",
            manifest.node_order
        )));
    }
    if manifest.params_sha256 != params_digest(evaluator) {
        return Err(PipelineError::Manifest(
            "table was built under different parameters".into(),
        ));
    }
    let rule = Rule::parse(&manifest.rule)?;
    let spec = QuadratureSpec::new(rule, manifest.h_r, manifest.h_phi)?;
    let grid = Grid::new(&spec, manifest.combined_radius)?;
    if grid.radial_intervals != manifest.radial_intervals
        || grid.angular_intervals != manifest.angular_intervals
    {
        return Err(PipelineError::Manifest("grid mismatch in manifest".into()));
    }
    let mut packed = Vec::with_capacity(manifest.ciphertexts.len());
    for name in &manifest.ciphertexts {
        let bytes = fs::read(dir.join(name))?;
        packed.push(deserialize_ciphertext(&bytes, evaluator.params())?);
    }
    Ok(LookupTable {
        sigma_key: (manifest.sigma_x, manifest.sigma_z),
        combined_radius: manifest.combined_radius,
        spec,
        grid,
        eval_count: manifest.eval_count,
        packed,
    })
}
