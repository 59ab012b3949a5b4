//! Ciphertexts and the homomorphic operation set: encrypt/decrypt, add,
//! multiply (with relinearization and rescaling), plaintext products,
//! slot rotation, and rotate-and-sum reduction.
//!
//! Every ciphertext carries a heuristic noise estimate (log2 of a
//! coefficient-domain bound) and a log2 slot-magnitude bound. The noise
//! estimate is advisory: decryption refuses service once it crosses a
//! quarter of the current modulus.

use rand::Rng;

use crate::encoding::{Encoder, Plaintext};
use crate::error::CkksError;
use crate::keys::{
    galois_exponent, key_switch, normalize_step, KeySwitchKey, PublicKey, RotationKeys, SecretKey,
};
use crate::keys::sample_ternary;
use crate::params::Params;
use crate::rns::RnsPoly;

/// Relative scale agreement required of addition operands.
const SCALE_MATCH_REL: f64 = 1.0 / 1024.0; // 2^-10

#[derive(Debug, Clone)]
pub struct Ciphertext {
    pub(crate) c0: RnsPoly,
    pub(crate) c1: RnsPoly,
    level: usize,
    scale: f64,
    slots: usize,
    noise_bits: f64,
    value_bits: f64,
}

impl Ciphertext {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn slot_count(&self) -> usize {
        self.slots
    }

    pub fn noise_bits(&self) -> f64 {
        self.noise_bits
    }

    pub fn value_bits(&self) -> f64 {
        self.value_bits
    }

    pub fn c0(&self) -> &RnsPoly {
        &self.c0
    }

    pub fn c1(&self) -> &RnsPoly {
        &self.c1
    }

    /// Assembles a ciphertext from raw parts (threshold protocols build
    /// fresh ciphertexts out of aggregated shares).
    pub fn from_parts(
        c0: RnsPoly,
        c1: RnsPoly,
        level: usize,
        scale: f64,
        slots: usize,
        noise_bits: f64,
        value_bits: f64,
    ) -> Self {
        Self {
            c0,
            c1,
            level,
            scale,
            slots,
            noise_bits,
            value_bits,
        }
    }

    #[cfg(test)]
    pub(crate) fn set_noise_bits(&mut self, bits: f64) {
        self.noise_bits = bits;
    }
}

/// log2(2^a + 2^b), for noise-bit bookkeeping.
pub fn bits_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (1.0 + 2f64.powf(lo - hi)).log2()
}

/// Root-sum-square combination in the log2 domain: the statistical
/// estimate for independent noise terms.
pub fn bits_rss(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + 0.5 * (1.0 + 4f64.powf(lo - hi)).log2()
}

/// Operation engine bound to one parameter set.
pub struct Evaluator {
    params: Params,
    encoder: Encoder,
}

impl Evaluator {
    pub fn new(params: Params) -> Self {
        let encoder = Encoder::new(&params);
        Self { params, encoder }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    // ── Noise model (heuristic bounds, log2 domain) ─────────────────────

    fn fresh_noise_bits(&self) -> f64 {
        let sigma = self.params.error_stddev();
        let h = self.params.hamming_weight() as f64;
        (6.0 * sigma * (1.0 + 2.0 * h.sqrt())).log2()
    }

    fn rounding_noise_bits(&self) -> f64 {
        let h = self.params.hamming_weight() as f64;
        (0.5 * (1.0 + h)).log2()
    }

    fn ks_noise_bits(&self, level: usize) -> f64 {
        let n = self.params.ring_degree() as f64;
        let sigma = self.params.error_stddev();
        let digits = (level + 1) as f64;
        let q_max = *self
            .params
            .moduli()
            .iter()
            .max()
            .expect("nonempty chain") as f64;
        let p = self.params.special_prime() as f64;
        let decomp = 6.0 * sigma * (n * digits / 3.0).sqrt() * q_max / p;
        bits_add(decomp.log2(), self.rounding_noise_bits())
    }

    // ── Encoding ────────────────────────────────────────────────────────

    pub fn encode(&self, values: &[f64], level: usize, scale: f64) -> Result<Plaintext, CkksError> {
        self.encoder.encode(values, &self.params, level, scale)
    }

    /// Encode at the top level and default scale.
    pub fn encode_default(&self, values: &[f64]) -> Result<Plaintext, CkksError> {
        self.encode(values, self.params.max_level(), self.params.scale())
    }

    pub fn decode(&self, pt: &Plaintext) -> Vec<f64> {
        self.encoder.decode(pt)
    }

    // ── Encryption ──────────────────────────────────────────────────────

    /// Encrypts a top-level plaintext under the public key.
    pub fn encrypt<R: Rng>(
        &self,
        pt: &Plaintext,
        pk: &PublicKey,
        rng: &mut R,
    ) -> Result<Ciphertext, CkksError> {
        if pt.level() != self.params.max_level() {
            return Err(CkksError::LevelMismatch {
                a: pt.level(),
                b: self.params.max_level(),
            });
        }
        let ctx = self.params.context().clone();
        let n = self.params.ring_degree();
        let prefix = pt.level() + 1;
        let mut u = RnsPoly::from_signed(
            &sample_ternary(rng, n, self.params.hamming_weight()),
            ctx.clone(),
            prefix,
            false,
        );
        u.to_ntt();
        let mut e0 =
            RnsPoly::sample_gaussian(rng, self.params.error_stddev(), ctx.clone(), prefix, false);
        e0.to_ntt();
        let mut e1 =
            RnsPoly::sample_gaussian(rng, self.params.error_stddev(), ctx, prefix, false);
        e1.to_ntt();

        let mut c0 = pk.b.mul(&u);
        c0.add_assign(&e0);
        c0.add_assign(pt.poly());
        let mut c1 = pk.a.mul(&u);
        c1.add_assign(&e1);
        Ok(Ciphertext {
            c0,
            c1,
            level: pt.level(),
            scale: pt.scale(),
            slots: self.params.slot_count(),
            noise_bits: self.fresh_noise_bits(),
            value_bits: pt.value_bits(),
        })
    }

    /// Decrypts to a plaintext. Refuses service when the tracked noise
    /// estimate exceeds a quarter of the current modulus.
    pub fn decrypt(&self, ct: &Ciphertext, sk: &SecretKey) -> Result<Plaintext, CkksError> {
        if ct.noise_bits > self.params.modulus_bits(ct.level) - 2.0 {
            return Err(CkksError::NoiseOverflow(format!(
                "noise 2^{:.1} vs modulus 2^{:.1} at level {}",
                ct.noise_bits,
                self.params.modulus_bits(ct.level),
                ct.level
            )));
        }
        let s = sk.at_level(ct.level);
        let mut m = ct.c1.mul(&s);
        m.add_assign(&ct.c0);
        Ok(Plaintext {
            poly: m,
            level: ct.level,
            scale: ct.scale,
            value_bits: ct.value_bits,
        })
    }

    /// decrypt + decode convenience.
    pub fn decrypt_values(&self, ct: &Ciphertext, sk: &SecretKey) -> Result<Vec<f64>, CkksError> {
        Ok(self.decode(&self.decrypt(ct, sk)?))
    }

    // ── Linear operations ───────────────────────────────────────────────

    fn check_aligned(&self, a: &Ciphertext, b: &Ciphertext) -> Result<(), CkksError> {
        if a.level != b.level {
            return Err(CkksError::LevelMismatch {
                a: a.level,
                b: b.level,
            });
        }
        if (a.scale / b.scale - 1.0).abs() > SCALE_MATCH_REL {
            return Err(CkksError::ScaleMismatch {
                a: a.scale,
                b: b.scale,
            });
        }
        Ok(())
    }

    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext, CkksError> {
        self.check_aligned(a, b)?;
        let mut c0 = a.c0.clone();
        c0.add_assign(&b.c0);
        let mut c1 = a.c1.clone();
        c1.add_assign(&b.c1);
        Ok(Ciphertext {
            c0,
            c1,
            level: a.level,
            scale: a.scale,
            slots: a.slots,
            noise_bits: bits_rss(a.noise_bits, b.noise_bits),
            value_bits: bits_add(a.value_bits, b.value_bits),
        })
    }

    pub fn sub(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext, CkksError> {
        self.check_aligned(a, b)?;
        let mut c0 = a.c0.clone();
        c0.sub_assign(&b.c0);
        let mut c1 = a.c1.clone();
        c1.sub_assign(&b.c1);
        Ok(Ciphertext {
            c0,
            c1,
            level: a.level,
            scale: a.scale,
            slots: a.slots,
            noise_bits: bits_rss(a.noise_bits, b.noise_bits),
            value_bits: bits_add(a.value_bits, b.value_bits),
        })
    }

    pub fn add_plain(&self, a: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext, CkksError> {
        if a.level != pt.level() {
            return Err(CkksError::LevelMismatch {
                a: a.level,
                b: pt.level(),
            });
        }
        if (a.scale / pt.scale() - 1.0).abs() > SCALE_MATCH_REL {
            return Err(CkksError::ScaleMismatch {
                a: a.scale,
                b: pt.scale(),
            });
        }
        let mut c0 = a.c0.clone();
        c0.add_assign(pt.poly());
        Ok(Ciphertext {
            c0,
            c1: a.c1.clone(),
            level: a.level,
            scale: a.scale,
            slots: a.slots,
            noise_bits: a.noise_bits,
            value_bits: bits_add(a.value_bits, pt.value_bits()),
        })
    }

    pub fn negate(&self, a: &Ciphertext) -> Ciphertext {
        let mut c0 = a.c0.clone();
        c0.negate();
        let mut c1 = a.c1.clone();
        c1.negate();
        Ciphertext {
            c0,
            c1,
            level: a.level,
            scale: a.scale,
            slots: a.slots,
            noise_bits: a.noise_bits,
            value_bits: a.value_bits,
        }
    }

    // ── Multiplication ──────────────────────────────────────────────────

    fn max_scale(&self) -> f64 {
        2.0 * self.params.scale() * self.params.scale()
    }

    /// Ciphertext product with relinearization and one rescale; consumes
    /// one level.
    pub fn mult(
        &self,
        a: &Ciphertext,
        b: &Ciphertext,
        relin: &KeySwitchKey,
    ) -> Result<Ciphertext, CkksError> {
        if a.level != b.level {
            return Err(CkksError::LevelMismatch {
                a: a.level,
                b: b.level,
            });
        }
        if a.level == 0 {
            return Err(CkksError::OutOfLevels);
        }
        let q_top = self.params.moduli()[a.level] as f64;
        let out_scale = a.scale * b.scale / q_top;
        if out_scale > self.max_scale() {
            return Err(CkksError::ScaleOverflow(format!(
                "product scale 2^{:.1} exceeds 2 Delta^2 after rescale",
                out_scale.log2()
            )));
        }

        let mut d0 = a.c0.mul(&b.c0);
        let mut d1 = a.c0.mul(&b.c1);
        d1.add_assign(&a.c1.mul(&b.c0));
        let mut d2 = a.c1.mul(&b.c1);
        d2.to_coeff();
        let (kb, ka) = key_switch(&d2, relin, &self.params)?;
        d0.add_assign(&kb);
        d1.add_assign(&ka);
        d0.rescale_by_top();
        d1.rescale_by_top();

        // tensor noise: e_a * m_b + e_b * m_a (+ e_a e_b), then key-switch
        // noise, all divided by q_top, floored by the rescale rounding
        let m_a = a.value_bits + a.scale.log2();
        let m_b = b.value_bits + b.scale.log2();
        let tensor = bits_add(a.noise_bits + m_b, b.noise_bits + m_a);
        let with_ks = bits_add(tensor, self.ks_noise_bits(a.level));
        let noise = bits_add(with_ks - q_top.log2(), self.rounding_noise_bits());

        Ok(Ciphertext {
            c0: d0,
            c1: d1,
            level: a.level - 1,
            scale: out_scale,
            slots: a.slots,
            noise_bits: noise,
            value_bits: a.value_bits + b.value_bits,
        })
    }

    /// Plaintext product followed by a rescale; consumes one level.
    pub fn mult_plain(&self, a: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext, CkksError> {
        let ct = self.mult_plain_keep_scale(a, pt)?;
        self.rescale(&ct)
    }

    /// Plaintext product that keeps the product scale and level. Used by
    /// depth-0 aggregation paths that defer (or never need) the rescale.
    pub fn mult_plain_keep_scale(
        &self,
        a: &Ciphertext,
        pt: &Plaintext,
    ) -> Result<Ciphertext, CkksError> {
        if a.level != pt.level() {
            return Err(CkksError::LevelMismatch {
                a: a.level,
                b: pt.level(),
            });
        }
        let out_scale = a.scale * pt.scale();
        if out_scale > self.max_scale() * self.params.scale() {
            return Err(CkksError::ScaleOverflow(format!(
                "plaintext product scale 2^{:.1} out of range",
                out_scale.log2()
            )));
        }
        let c0 = a.c0.mul(pt.poly());
        let c1 = a.c1.mul(pt.poly());
        Ok(Ciphertext {
            c0,
            c1,
            level: a.level,
            scale: out_scale,
            slots: a.slots,
            // slot-faithful heuristic: noise scales with the plaintext's
            // slot magnitude times its scale
            noise_bits: a.noise_bits + pt.value_bits() + pt.scale().log2(),
            value_bits: a.value_bits + pt.value_bits(),
        })
    }

    /// Drops the top chain prime: scale divides by it, level decreases.
    pub fn rescale(&self, a: &Ciphertext) -> Result<Ciphertext, CkksError> {
        if a.level == 0 {
            return Err(CkksError::OutOfLevels);
        }
        let q_top = self.params.moduli()[a.level] as f64;
        let mut c0 = a.c0.clone();
        let mut c1 = a.c1.clone();
        c0.rescale_by_top();
        c1.rescale_by_top();
        Ok(Ciphertext {
            c0,
            c1,
            level: a.level - 1,
            scale: a.scale / q_top,
            slots: a.slots,
            noise_bits: bits_add(a.noise_bits - q_top.log2(), self.rounding_noise_bits()),
            value_bits: a.value_bits,
        })
    }

    /// Exact level alignment: reduces the modulus without touching scale.
    pub fn mod_drop_to_level(&self, a: &Ciphertext, level: usize) -> Result<Ciphertext, CkksError> {
        if level > a.level {
            return Err(CkksError::LevelMismatch {
                a: a.level,
                b: level,
            });
        }
        let mut c0 = a.c0.clone();
        let mut c1 = a.c1.clone();
        c0.drop_to_prefix(level + 1);
        c1.drop_to_prefix(level + 1);
        Ok(Ciphertext {
            c0,
            c1,
            level,
            scale: a.scale,
            slots: a.slots,
            noise_bits: a.noise_bits,
            value_bits: a.value_bits,
        })
    }

    // ── Rotation ────────────────────────────────────────────────────────

    /// Cyclic left slot rotation by `steps` (negative = right).
    pub fn rotate(
        &self,
        a: &Ciphertext,
        steps: i64,
        keys: &RotationKeys,
    ) -> Result<Ciphertext, CkksError> {
        let step = normalize_step(steps, a.slots);
        if step == 0 {
            return Ok(a.clone());
        }
        let key = keys
            .get(step)
            .ok_or(CkksError::MissingRotationKey(steps))?;
        self.rotate_with_key(a, step, key)
    }

    pub fn rotate_with_key(
        &self,
        a: &Ciphertext,
        step: usize,
        key: &KeySwitchKey,
    ) -> Result<Ciphertext, CkksError> {
        let g = galois_exponent(step, self.params.ring_degree());
        let mut c0 = a.c0.clone();
        c0.to_coeff();
        let mut c0 = c0.automorphism(g);
        c0.to_ntt();
        let mut c1 = a.c1.clone();
        c1.to_coeff();
        let c1 = c1.automorphism(g);
        let (kb, ka) = key_switch(&c1, key, &self.params)?;
        c0.add_assign(&kb);
        Ok(Ciphertext {
            c0,
            c1: ka,
            level: a.level,
            scale: a.scale,
            slots: a.slots,
            noise_bits: bits_rss(a.noise_bits, self.ks_noise_bits(a.level)),
            value_bits: a.value_bits,
        })
    }

    /// Rotate-and-add reduction: slot 0 of the result holds the sum of the
    /// first `active_slots` entries. Slots in [active_slots, 2^ceil(log2))
    /// must be zero (zero-padding is the caller's contract).
    pub fn sum_slots(
        &self,
        a: &Ciphertext,
        active_slots: usize,
        keys: &RotationKeys,
    ) -> Result<Ciphertext, CkksError> {
        if active_slots == 0 || active_slots > a.slots {
            return Err(CkksError::InvalidParams(format!(
                "active_slots {active_slots} out of range 1..={}",
                a.slots
            )));
        }
        let rounds = (usize::BITS - (active_slots - 1).leading_zeros()) as usize;
        let mut acc = a.clone();
        for i in 0..rounds {
            let rotated = self.rotate(&acc, 1i64 << i, keys)?;
            acc = self.add(&acc, &rotated)?;
        }
        Ok(acc)
    }
}
