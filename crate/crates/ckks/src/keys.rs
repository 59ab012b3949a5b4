//! Key material: ternary secrets, RLWE public keys, and gadget key-switch
//! keys (relinearization and rotation) with one special prime.
//!
//! Key switching uses per-prime digit decomposition: digit j of a
//! polynomial is its residue row mod q_j. The key for digit j encrypts
//! P * E_j(s~), where E_j(x) is the ring element congruent to x mod q_j and
//! to 0 mod every other chain prime and mod P. Summing digit-by-digit
//! products and dividing by P (rounded) yields c * s~ mod Q_l at any level
//! l, with the decomposition noise attenuated by P.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::CkksError;
use crate::ntt::mul_mod;
use crate::params::Params;
use crate::rns::RnsPoly;

/// Ternary secret key over the full chain-plus-special basis (NTT form).
#[derive(Debug, Clone)]
pub struct SecretKey {
    poly: RnsPoly,
}

impl SecretKey {
    pub fn from_poly(poly: RnsPoly) -> Self {
        Self { poly }
    }

    pub fn from_coefficients(coeffs: &[i64], params: &Params) -> Self {
        let full = params.max_level() + 1;
        let mut poly = RnsPoly::from_signed(coeffs, params.context().clone(), full, true);
        poly.to_ntt();
        Self { poly }
    }

    /// NTT-form secret over the full basis.
    pub fn poly(&self) -> &RnsPoly {
        &self.poly
    }

    /// Secret restricted to the chain prefix `level + 1`, no special row.
    pub fn at_level(&self, level: usize) -> RnsPoly {
        self.poly.restricted(level + 1, false)
    }
}

/// RLWE public key (b, a) with b = -a s + e, over the full chain (NTT).
#[derive(Debug, Clone)]
pub struct PublicKey {
    pub b: RnsPoly,
    pub a: RnsPoly,
}

/// Gadget key-switch key: one (b_j, a_j) pair per chain prime, all over the
/// chain-plus-special basis in NTT form.
#[derive(Debug, Clone)]
pub struct KeySwitchKey {
    pub digits: Vec<(RnsPoly, RnsPoly)>,
}

pub type RelinKey = KeySwitchKey;

/// Rotation keys indexed by the normalized left-rotation step.
#[derive(Debug, Clone, Default)]
pub struct RotationKeys {
    pub map: BTreeMap<usize, KeySwitchKey>,
}

impl RotationKeys {
    pub fn get(&self, step: usize) -> Option<&KeySwitchKey> {
        self.map.get(&step)
    }
}

/// Full single-party key set. The threshold layer supersedes this for
/// protocol runs; tests and single-party tooling use it directly.
#[derive(Debug, Clone)]
pub struct KeyMaterial {
    pub secret: SecretKey,
    pub public: PublicKey,
    pub relin: RelinKey,
    pub rotations: RotationKeys,
}

/// Ternary coefficient vector with the requested Hamming weight (iid
/// uniform ternary when `hamming >= n`).
pub fn sample_ternary<R: Rng>(rng: &mut R, n: usize, hamming: usize) -> Vec<i64> {
    let mut coeffs = vec![0i64; n];
    if hamming >= n {
        for c in coeffs.iter_mut() {
            *c = rng.gen_range(-1i64..=1);
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        for &i in idx.iter().take(hamming) {
            coeffs[i] = if rng.gen::<bool>() { 1 } else { -1 };
        }
    }
    coeffs
}

/// Left-rotation step normalized to [0, slots).
pub fn normalize_step(steps: i64, slots: usize) -> usize {
    steps.rem_euclid(slots as i64) as usize
}

/// Galois exponent for a left rotation by `step`: 5^step mod 2n.
pub fn galois_exponent(step: usize, n: usize) -> u64 {
    let two_n = 2 * n as u64;
    crate::ntt::pow_mod(5, step as u64, two_n)
}

/// Adds P * E_j(target) into the digit-j key component `b`: only the
/// residue row j changes, by (P mod q_j) * target_row_j.
fn add_gadget_row(b: &mut RnsPoly, target: &RnsPoly, digit: usize, params: &Params) {
    let q = params.moduli()[digit];
    let p_red = params.special_prime() % q;
    let n = params.ring_degree();
    let mut scaled = vec![0u64; n];
    for (dst, &t) in scaled.iter_mut().zip(target.row(digit)) {
        *dst = mul_mod(t, p_red, q);
    }
    b.add_into_row(digit, &scaled, q);
}

/// Builds a key-switch key taking `target` (an NTT-form full-basis ring
/// element, e.g. s^2 or s(X^g)) to the secret `s`.
pub fn generate_ksk<R: Rng>(
    target: &RnsPoly,
    secret: &SecretKey,
    params: &Params,
    rng: &mut R,
) -> KeySwitchKey {
    let full = params.max_level() + 1;
    let ctx = params.context().clone();
    let mut digits = Vec::with_capacity(full);
    for j in 0..full {
        let a = RnsPoly::sample_uniform(rng, ctx.clone(), full, true, true);
        let mut e = RnsPoly::sample_gaussian(rng, params.error_stddev(), ctx.clone(), full, true);
        e.to_ntt();
        // b = -a s + e + P E_j(target)
        let mut b = a.mul(secret.poly());
        b.negate();
        b.add_assign(&e);
        add_gadget_row(&mut b, target, j, params);
        digits.push((b, a));
    }
    KeySwitchKey { digits }
}

/// Applies a key-switch key to `d` given in coefficient form over the
/// chain prefix `level + 1`. Returns the (b, a) contribution in NTT form
/// over the same prefix.
pub fn key_switch(
    d: &RnsPoly,
    ksk: &KeySwitchKey,
    params: &Params,
) -> Result<(RnsPoly, RnsPoly), CkksError> {
    if d.is_ntt() || d.has_special() {
        return Err(CkksError::InvalidParams(
            "key_switch expects a coefficient-domain chain-basis operand".into(),
        ));
    }
    let prefix = d.prefix();
    if ksk.digits.len() < prefix {
        return Err(CkksError::InvalidParams(
            "key-switch key has fewer digits than the operand level".into(),
        ));
    }
    let ctx = params.context().clone();
    let n = params.ring_degree();
    let mut acc_b = RnsPoly::zero(ctx.clone(), prefix, true, true);
    let mut acc_a = RnsPoly::zero(ctx.clone(), prefix, true, true);
    let full = params.max_level() + 1;
    let mut tmp = vec![0u64; n];
    for j in 0..prefix {
        let residues = d.row(j);
        let (kb, ka) = &ksk.digits[j];
        for row in 0..=prefix {
            // basis row `row` is prime `row` for row < prefix, else special
            let (q, table, key_row) = if row < prefix {
                (ctx.moduli[row], ctx.table(row), row)
            } else {
                (ctx.special, ctx.special_table(), full)
            };
            for (dst, &r) in tmp.iter_mut().zip(residues) {
                *dst = if r >= q { r % q } else { r };
            }
            table.forward(&mut tmp);
            acc_b.fma_row(row, &tmp, kb.row(key_row), q);
            acc_a.fma_row(row, &tmp, ka.row(key_row), q);
        }
    }
    acc_b.div_by_special();
    acc_a.div_by_special();
    Ok((acc_b, acc_a))
}

/// Deterministic single-party key generation: secret, public key, relin
/// key, and rotation keys for the requested left-rotation steps.
pub fn keygen(params: &Params, seed: u64, rotation_steps: &[i64]) -> KeyMaterial {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = params.ring_degree();
    let secret = SecretKey::from_coefficients(
        &sample_ternary(&mut rng, n, params.hamming_weight()),
        params,
    );

    let full = params.max_level() + 1;
    let ctx = params.context().clone();
    let a = RnsPoly::sample_uniform(&mut rng, ctx.clone(), full, false, true);
    let mut e = RnsPoly::sample_gaussian(&mut rng, params.error_stddev(), ctx.clone(), full, false);
    e.to_ntt();
    let mut b = a.mul(&secret.poly().restricted(full, false));
    b.negate();
    b.add_assign(&e);
    let public = PublicKey { b, a };

    let s_squared = secret.poly().mul(secret.poly());
    let relin = generate_ksk(&s_squared, &secret, params, &mut rng);

    let mut rotations = RotationKeys::default();
    for &raw in rotation_steps {
        let step = normalize_step(raw, params.slot_count());
        if step == 0 || rotations.map.contains_key(&step) {
            continue;
        }
        let g = galois_exponent(step, n);
        let mut s_coeff = secret.poly().clone();
        s_coeff.to_coeff();
        let mut s_g = s_coeff.automorphism(g);
        s_g.to_ntt();
        rotations
            .map
            .insert(step, generate_ksk(&s_g, &secret, params, &mut rng));
    }

    KeyMaterial {
        secret,
        public,
        relin,
        rotations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{gen_params, Preset};

    #[test]
    fn ternary_respects_hamming_weight() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let coeffs = sample_ternary(&mut rng, 64, 10);
        assert_eq!(coeffs.iter().filter(|&&c| c != 0).count(), 10);
        assert!(coeffs.iter().all(|&c| (-1..=1).contains(&c)));
    }

    #[test]
    fn keygen_is_deterministic() {
        let params = gen_params(Preset::Toy).unwrap();
        let a = keygen(&params, 7, &[1]);
        let b = keygen(&params, 7, &[1]);
        assert_eq!(a.public.b.row(0), b.public.b.row(0));
        assert_eq!(a.relin.digits[0].0.row(1), b.relin.digits[0].0.row(1));
        let c = keygen(&params, 8, &[1]);
        assert_ne!(a.public.b.row(0), c.public.b.row(0));
    }

    #[test]
    fn rotation_steps_normalize() {
        assert_eq!(normalize_step(1, 16), 1);
        assert_eq!(normalize_step(-1, 16), 15);
        assert_eq!(normalize_step(16, 16), 0);
        assert_eq!(normalize_step(-17, 16), 15);
    }
}
