//! Parameter sets: ring degree, RNS modulus chain, scale, and the shared
//! NTT machinery.
//!
//! Presets are labels only; none of them carries a security claim. The
//! chain uses a ~60-bit base prime (decryption floor), ~40-bit rescaling
//! primes matched to the scale 4^20, and one ~61-bit special prime used
//! exclusively inside key switching.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::error::CkksError;
use crate::ntt::{find_ntt_primes, NttTable};

/// Named parameter presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// n = 32: unit-test scale.
    Toy,
    /// n = 2^13, L = 12, scale 2^40: the working set for desk experiments.
    Desk,
    /// n = 2^15, 26 rescaling levels. Shaped like a production set but with
    /// no security estimation behind it.
    StdLike,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Toy => write!(f, "toy"),
            Preset::Desk => write!(f, "desk"),
            Preset::StdLike => write!(f, "std-like"),
        }
    }
}

/// Shared per-chain NTT tables, one per prime (special prime last).
#[derive(Debug)]
pub struct ChainContext {
    pub n: usize,
    /// q_0 .. q_L
    pub moduli: Vec<u64>,
    pub special: u64,
    /// Tables for q_0..q_L followed by the special prime.
    pub tables: Vec<NttTable>,
}

impl ChainContext {
    pub fn table(&self, prime_index: usize) -> &NttTable {
        &self.tables[prime_index]
    }

    pub fn special_table(&self) -> &NttTable {
        self.tables.last().unwrap()
    }

    /// log2 of the modulus product at `level`.
    pub fn modulus_bits(&self, level: usize) -> f64 {
        self.moduli[..=level].iter().map(|&q| (q as f64).log2()).sum()
    }
}

/// CKKS-style parameter set.
#[derive(Debug, Clone)]
pub struct Params {
    ring_degree: usize,
    scale: f64,
    scale_bits: u32,
    error_stddev: f64,
    /// Number of nonzero coefficients in ternary secrets.
    hamming_weight: usize,
    max_level: usize,
    preset: Option<Preset>,
    context: Arc<ChainContext>,
}

impl PartialEq for Params {
    fn eq(&self, other: &Self) -> bool {
        self.ring_degree == other.ring_degree
            && self.scale == other.scale
            && self.context.moduli == other.context.moduli
            && self.context.special == other.context.special
            && self.error_stddev == other.error_stddev
            && self.hamming_weight == other.hamming_weight
    }
}

impl Params {
    /// Builds a parameter set with an explicit chain layout.
    ///
    /// `levels` is the number of rescaling primes; the chain is
    /// `[base_bits, scale_bits x levels]` plus a special prime one bit wider
    /// than the base.
    pub fn build(
        ring_degree: usize,
        levels: usize,
        scale_bits: u32,
        base_bits: u32,
        error_stddev: f64,
        hamming_weight: usize,
        preset: Option<Preset>,
    ) -> Result<Self, CkksError> {
        if !ring_degree.is_power_of_two() || ring_degree < 16 {
            return Err(CkksError::InvalidParams(format!(
                "ring degree must be a power of two >= 16, got {ring_degree}"
            )));
        }
        if levels < 1 {
            return Err(CkksError::InvalidParams("need at least one level".into()));
        }
        if scale_bits < 20 || scale_bits > 50 || base_bits <= scale_bits || base_bits > 61 {
            return Err(CkksError::InvalidParams(format!(
                "unsupported bit layout: scale {scale_bits}, base {base_bits}"
            )));
        }
        if hamming_weight == 0 || hamming_weight > ring_degree {
            return Err(CkksError::InvalidParams(format!(
                "hamming weight {hamming_weight} out of range"
            )));
        }
        let two_n = 2 * ring_degree as u64;
        let base = find_ntt_primes(1u64 << base_bits, two_n, 1, &[]);
        let special = find_ntt_primes(1u64 << (base_bits + 1), two_n, 1, &base);
        let mut exclude = base.clone();
        exclude.extend_from_slice(&special);
        let mids = pick_scale_primes(1u64 << scale_bits, two_n, levels, &exclude);

        let mut moduli = base;
        moduli.extend(mids);
        let special = special[0];

        let tables = moduli
            .iter()
            .chain(std::iter::once(&special))
            .map(|&q| NttTable::new(q, ring_degree))
            .collect();
        let context = Arc::new(ChainContext {
            n: ring_degree,
            moduli,
            special,
            tables,
        });
        Ok(Self {
            ring_degree,
            scale: (1u64 << scale_bits) as f64,
            scale_bits,
            error_stddev,
            hamming_weight,
            max_level: levels,
            preset,
            context,
        })
    }

    /// Rebuilds a parameter set from an explicit chain (deserialization).
    pub fn from_parts(
        ring_degree: usize,
        moduli: Vec<u64>,
        special: u64,
        scale_bits: u32,
        error_stddev: f64,
        hamming_weight: usize,
        preset: Option<Preset>,
    ) -> Result<Self, CkksError> {
        if !ring_degree.is_power_of_two() || ring_degree < 16 {
            return Err(CkksError::InvalidParams(format!(
                "ring degree must be a power of two >= 16, got {ring_degree}"
            )));
        }
        if moduli.len() < 2 {
            return Err(CkksError::InvalidParams("chain too short".into()));
        }
        let two_n = 2 * ring_degree as u64;
        let mut seen = std::collections::HashSet::new();
        for &q in moduli.iter().chain(std::iter::once(&special)) {
            if q % two_n != 1 || !crate::ntt::is_prime(q) {
                return Err(CkksError::InvalidParams(format!(
                    "{q} is not an NTT-friendly prime for 2n = {two_n}"
                )));
            }
            if !seen.insert(q) {
                return Err(CkksError::InvalidParams("duplicate chain prime".into()));
            }
        }
        if hamming_weight == 0 || hamming_weight > ring_degree {
            return Err(CkksError::InvalidParams("bad hamming weight".into()));
        }
        let max_level = moduli.len() - 1;
        let tables = moduli
            .iter()
            .chain(std::iter::once(&special))
            .map(|&q| NttTable::new(q, ring_degree))
            .collect();
        let context = Arc::new(ChainContext {
            n: ring_degree,
            moduli,
            special,
            tables,
        });
        Ok(Self {
            ring_degree,
            scale: 2f64.powi(scale_bits as i32),
            scale_bits,
            error_stddev,
            hamming_weight,
            max_level,
            preset,
            context,
        })
    }

    pub fn ring_degree(&self) -> usize {
        self.ring_degree
    }

    pub fn slot_count(&self) -> usize {
        self.ring_degree / 2
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn scale_bits(&self) -> u32 {
        self.scale_bits
    }

    pub fn error_stddev(&self) -> f64 {
        self.error_stddev
    }

    pub fn hamming_weight(&self) -> usize {
        self.hamming_weight
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn preset(&self) -> Option<Preset> {
        self.preset
    }

    pub fn moduli(&self) -> &[u64] {
        &self.context.moduli
    }

    pub fn special_prime(&self) -> u64 {
        self.context.special
    }

    pub fn context(&self) -> &Arc<ChainContext> {
        &self.context
    }

    /// log2 of the ciphertext modulus at `level`.
    pub fn modulus_bits(&self, level: usize) -> f64 {
        self.context.modulus_bits(level)
    }
}

/// Scale primes ordered so that the running rescale keeps the scale as
/// close to 2^scale_bits as possible (the top of the chain is consumed
/// first).
fn pick_scale_primes(target: u64, two_n: u64, count: usize, exclude: &[u64]) -> Vec<u64> {
    // over-sample candidates nearest to the target, then order greedily
    let mut pool = find_ntt_primes(target, two_n, count + 8, exclude);
    pool.sort_by_key(|&p| p.abs_diff(target));
    pool.truncate(count.max(1) + 4);

    let delta = target as f64;
    let mut chain_rev: Vec<u64> = Vec::with_capacity(count); // consumption order
    let mut scale = delta;
    for _ in 0..count {
        let (idx, _) = pool
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| {
                let da = (scale * scale / (a as f64) / delta - 1.0).abs();
                let db = (scale * scale / (b as f64) / delta - 1.0).abs();
                da.total_cmp(&db)
            })
            .expect("candidate pool exhausted");
        let q = pool.swap_remove(idx);
        scale = scale * scale / (q as f64);
        chain_rev.push(q);
    }
    // chain_rev[0] is consumed first, i.e. it is q_L
    chain_rev.reverse();
    chain_rev
}

/// Builds the named presets of the experiments.
pub fn gen_params(preset: Preset) -> Result<Params, CkksError> {
    match preset {
        Preset::Toy => Params::build(32, 4, 30, 45, 3.2, 8, Some(Preset::Toy)),
        Preset::Desk => Params::build(1 << 13, 12, 40, 60, 3.2, 64, Some(Preset::Desk)),
        Preset::StdLike => Params::build(1 << 15, 26, 40, 60, 3.2, 64, Some(Preset::StdLike)),
    }
}

/// Angular domain helper shared by slot-packing code.
pub const FULL_TURN: f64 = TAU;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_preset_shape() {
        let p = gen_params(Preset::Toy).unwrap();
        assert_eq!(p.ring_degree(), 32);
        assert_eq!(p.slot_count(), 16);
        assert_eq!(p.moduli().len(), 5); // base + 4 levels
        assert_eq!(p.max_level(), 4);
    }

    #[test]
    fn desk_preset_shape() {
        let p = gen_params(Preset::Desk).unwrap();
        assert_eq!(p.ring_degree(), 8192);
        assert_eq!(p.slot_count(), 4096);
        assert_eq!(p.scale(), (1u64 << 40) as f64);
        assert_eq!(p.max_level(), 12);
        assert_eq!(p.moduli().len(), 13);
        // all distinct, NTT friendly
        let two_n = 2 * 8192;
        let mut seen = std::collections::HashSet::new();
        for &q in p.moduli().iter().chain([p.special_prime()].iter()) {
            assert_eq!(q % two_n, 1);
            assert!(crate::ntt::is_prime(q));
            assert!(seen.insert(q));
        }
    }

    #[test]
    fn rescale_primes_track_the_scale() {
        let p = gen_params(Preset::Desk).unwrap();
        let delta = p.scale();
        let mut scale = delta;
        for level in (1..=p.max_level()).rev() {
            let q = p.moduli()[level] as f64;
            scale = scale * scale / q;
            let drift = (scale / delta - 1.0).abs();
            assert!(drift < 2f64.powi(-10), "drift {drift:.3e} at level {level}");
        }
    }

    #[test]
    fn invalid_shapes_are_rejected() {
        assert!(Params::build(100, 4, 30, 45, 3.2, 8, None).is_err());
        assert!(Params::build(8, 4, 30, 45, 3.2, 4, None).is_err());
        assert!(Params::build(32, 0, 30, 45, 3.2, 8, None).is_err());
        assert!(Params::build(32, 4, 30, 25, 3.2, 8, None).is_err());
        assert!(Params::build(32, 4, 30, 45, 3.2, 0, None).is_err());
    }
}
