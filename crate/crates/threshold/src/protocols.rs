//! The cryptographic content of each protocol round.
//!
//! Secrets are additive: the joint key is s = sum s_i over ternary shares.
//! Common polynomials come from a shared seed, so every party derives the
//! same `a` values. Key-switch material uses the same special-prime gadget
//! as the single-party scheme; all share aggregation is plain addition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use pcol_ckks::{
    galois_exponent, sample_ternary, Ciphertext, CkksError, Evaluator, KeySwitchKey, Params,
    Plaintext, PublicKey, RnsPoly, SecretKey,
};

use crate::error::ThresholdError;

/// Domain separators for deriving common polynomials from the session seed.
const DOMAIN_SESSION_ID: u64 = 0x01 << 56;
const DOMAIN_PUBKEY: u64 = 0x02 << 56;
const DOMAIN_RELIN: u64 = 0x03 << 56;
const DOMAIN_ROTATION: u64 = 0x04 << 56;

/// Statistical margin (bits) of refresh masks over the masked payload.
const REFRESH_STAT_BITS: f64 = 20.0;

/// Shared random seed; all parties expand it to identical protocol
/// polynomials via a seeded stream cipher.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommonReference {
    pub seed: [u8; 32],
}

impl CommonReference {
    pub fn from_u64(seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut bytes = [0u8; 32];
        rng.fill(&mut bytes);
        Self { seed: bytes }
    }

    fn rng(&self, domain: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::from_seed(self.seed);
        rng.set_stream(domain);
        rng
    }

    pub fn session_id(&self) -> [u8; 16] {
        let mut rng = self.rng(DOMAIN_SESSION_ID);
        let mut id = [0u8; 16];
        rng.fill(&mut id);
        id
    }

    /// Common public-key polynomial `a` over the chain.
    pub fn pubkey_a(&self, params: &Params) -> RnsPoly {
        let mut rng = self.rng(DOMAIN_PUBKEY);
        RnsPoly::sample_uniform(
            &mut rng,
            params.context().clone(),
            params.max_level() + 1,
            false,
            true,
        )
    }

    /// Common gadget polynomial `a_j` for relinearization digit j.
    pub fn relin_a(&self, params: &Params, digit: usize) -> RnsPoly {
        let mut rng = self.rng(DOMAIN_RELIN | digit as u64);
        RnsPoly::sample_uniform(
            &mut rng,
            params.context().clone(),
            params.max_level() + 1,
            true,
            true,
        )
    }

    /// Common gadget polynomial for rotation-key digit j of `step`.
    pub fn rotation_a(&self, params: &Params, step: usize, digit: usize) -> RnsPoly {
        let mut rng = self.rng(DOMAIN_ROTATION | ((step as u64) << 16) | digit as u64);
        RnsPoly::sample_uniform(
            &mut rng,
            params.context().clone(),
            params.max_level() + 1,
            true,
            true,
        )
    }
}

/// Deterministic ternary secret share for one party.
pub fn gen_secret_share(params: &Params, rng_seed: u64) -> SecretKey {
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    SecretKey::from_coefficients(
        &sample_ternary(&mut rng, params.ring_degree(), params.hamming_weight()),
        params,
    )
}

fn gaussian_ntt<R: Rng>(
    rng: &mut R,
    params: &Params,
    prefix: usize,
    has_special: bool,
) -> RnsPoly {
    let mut e = RnsPoly::sample_gaussian(
        rng,
        params.error_stddev(),
        params.context().clone(),
        prefix,
        has_special,
    );
    e.to_ntt();
    e
}

// ── Collective public key ────────────────────────────────────────────────

/// Party contribution b_i = -a s_i + e_i over the chain.
pub fn pubkey_share<R: Rng>(
    params: &Params,
    share: &SecretKey,
    crs: &CommonReference,
    rng: &mut R,
) -> RnsPoly {
    let a = crs.pubkey_a(params);
    let full = params.max_level() + 1;
    let mut b = a.mul(&share.poly().restricted(full, false));
    b.negate();
    b.add_assign(&gaussian_ntt(rng, params, full, false));
    b
}

/// pk = (sum b_i, a).
pub fn aggregate_pubkey(params: &Params, crs: &CommonReference, shares: &[RnsPoly]) -> PublicKey {
    let mut b = shares[0].clone();
    for s in &shares[1..] {
        b.add_assign(s);
    }
    PublicKey {
        b,
        a: crs.pubkey_a(params),
    }
}

// ── Collective relinearization key (two rounds) ──────────────────────────

/// Round-1 contribution for every gadget digit:
/// g0_j = -a_j u_i + e + P E_j(s_i), g1_j = a_j s_i + e.
/// The ephemeral u_i must be kept for round 2.
pub struct RelinRound1Share {
    pub g0: Vec<RnsPoly>,
    pub g1: Vec<RnsPoly>,
}

pub fn relin_round1<R: Rng>(
    params: &Params,
    share: &SecretKey,
    ephemeral: &SecretKey,
    crs: &CommonReference,
    rng: &mut R,
) -> RelinRound1Share {
    let full = params.max_level() + 1;
    let mut g0 = Vec::with_capacity(full);
    let mut g1 = Vec::with_capacity(full);
    for j in 0..full {
        let a_j = crs.relin_a(params, j);
        let mut h0 = a_j.mul(ephemeral.poly());
        h0.negate();
        h0.add_assign(&gaussian_ntt(rng, params, full, true));
        add_gadget_digit(&mut h0, share.poly(), j, params);
        g0.push(h0);

        let mut h1 = a_j.mul(share.poly());
        h1.add_assign(&gaussian_ntt(rng, params, full, true));
        g1.push(h1);
    }
    RelinRound1Share { g0, g1 }
}

/// Adds P * E_j(target) into `b` (only residue row j changes).
fn add_gadget_digit(b: &mut RnsPoly, target: &RnsPoly, digit: usize, params: &Params) {
    let q = params.moduli()[digit];
    let p_red = params.special_prime() % q;
    let scaled: Vec<u64> = target
        .row(digit)
        .iter()
        .map(|&t| pcol_ckks::ntt::mul_mod(t, p_red, q))
        .collect();
    b.add_into_row(digit, &scaled, q);
}

/// Digit-wise sums of round-1 contributions.
pub struct RelinRound1Aggregate {
    pub g0: Vec<RnsPoly>,
    pub g1: Vec<RnsPoly>,
}

pub fn aggregate_relin_round1(shares: &[RelinRound1Share]) -> RelinRound1Aggregate {
    let digits = shares[0].g0.len();
    let mut g0 = shares[0].g0.clone();
    let mut g1 = shares[0].g1.clone();
    for s in &shares[1..] {
        for j in 0..digits {
            g0[j].add_assign(&s.g0[j]);
            g1[j].add_assign(&s.g1[j]);
        }
    }
    RelinRound1Aggregate { g0, g1 }
}

/// Round-2 contribution: h_j = s_i G0_j + (u_i - s_i) G1_j + e.
pub fn relin_round2<R: Rng>(
    params: &Params,
    share: &SecretKey,
    ephemeral: &SecretKey,
    agg: &RelinRound1Aggregate,
    rng: &mut R,
) -> Vec<RnsPoly> {
    let full = params.max_level() + 1;
    let mut out = Vec::with_capacity(full);
    let mut u_minus_s = ephemeral.poly().clone();
    u_minus_s.sub_assign(share.poly());
    for j in 0..full {
        let mut h = agg.g0[j].mul(share.poly());
        h.add_assign(&agg.g1[j].mul(&u_minus_s));
        h.add_assign(&gaussian_ntt(rng, params, full, true));
        out.push(h);
    }
    out
}

/// ksk_j = (sum_i h_j^i, G1_j).
pub fn finalize_relin(
    agg: RelinRound1Aggregate,
    round2: &[Vec<RnsPoly>],
) -> KeySwitchKey {
    let digits = agg.g1.len();
    let mut key_digits = Vec::with_capacity(digits);
    for j in 0..digits {
        let mut b = round2[0][j].clone();
        for share in &round2[1..] {
            b.add_assign(&share[j]);
        }
        key_digits.push((b, agg.g1[j].clone()));
    }
    KeySwitchKey { digits: key_digits }
}

// ── Collective rotation key (one round) ──────────────────────────────────

/// Contribution b_j = -a_j s_i + e + P E_j(s_i(X^g)) for each digit.
pub fn rotation_share<R: Rng>(
    params: &Params,
    share: &SecretKey,
    step: usize,
    crs: &CommonReference,
    rng: &mut R,
) -> Vec<RnsPoly> {
    let full = params.max_level() + 1;
    let g = galois_exponent(step, params.ring_degree());
    let mut s_coeff = share.poly().clone();
    s_coeff.to_coeff();
    let mut s_g = s_coeff.automorphism(g);
    s_g.to_ntt();

    let mut out = Vec::with_capacity(full);
    for j in 0..full {
        let a_j = crs.rotation_a(params, step, j);
        let mut b = a_j.mul(share.poly());
        b.negate();
        b.add_assign(&gaussian_ntt(rng, params, full, true));
        add_gadget_digit(&mut b, &s_g, j, params);
        out.push(b);
    }
    out
}

pub fn aggregate_rotation(
    params: &Params,
    crs: &CommonReference,
    step: usize,
    shares: &[Vec<RnsPoly>],
) -> KeySwitchKey {
    let digits = shares[0].len();
    let mut key_digits = Vec::with_capacity(digits);
    for j in 0..digits {
        let mut b = shares[0][j].clone();
        for s in &shares[1..] {
            b.add_assign(&s[j]);
        }
        key_digits.push((b, crs.rotation_a(params, step, j)));
    }
    KeySwitchKey { digits: key_digits }
}

// ── Distributed decryption ───────────────────────────────────────────────

/// Smudged partial decryption d_i = c1 s_i + e_smudge with
/// ||e_smudge||_inf <= 2^smudging_bits (clamped Gaussian, sigma = bound/12).
pub fn partial_decrypt<R: Rng>(
    ct: &Ciphertext,
    share: &SecretKey,
    smudging_bits: u32,
    rng: &mut R,
) -> RnsPoly {
    let level = ct.level();
    let mut d = ct.c1().mul(&share.at_level(level));
    let bound = 2f64.powi(smudging_bits as i32);
    let normal = Normal::new(0.0, bound / 12.0).expect("positive sigma");
    let n = d.context().n;
    let smudge: Vec<i64> = (0..n)
        .map(|_| (normal.sample(rng).round()).clamp(-bound, bound) as i64)
        .collect();
    let mut e = RnsPoly::from_signed(&smudge, d.context().clone(), level + 1, false);
    e.to_ntt();
    d.add_assign(&e);
    d
}

/// Combines c0 with every party's partial decryption and decodes.
pub fn combine_partials(
    evaluator: &Evaluator,
    ct: &Ciphertext,
    partials: &[RnsPoly],
    smudging_bits: u32,
) -> Result<Vec<f64>, ThresholdError> {
    let params = evaluator.params();
    let combined_noise_bits = ct.noise_bits().max(smudging_bits as f64)
        + 1.0
        + (partials.len() as f64).log2();
    if combined_noise_bits > params.modulus_bits(ct.level()) - 2.0 {
        return Err(ThresholdError::Ckks(CkksError::NoiseOverflow(format!(
            "smudging 2^{smudging_bits} exceeds modulus headroom at level {}",
            ct.level()
        ))));
    }
    let mut m = ct.c0().clone();
    for d in partials {
        m.add_assign(d);
    }
    let pt = Plaintext::from_parts(m, ct.level(), ct.scale(), ct.value_bits());
    Ok(evaluator.decode(&pt))
}

// ── Collaborative refresh ────────────────────────────────────────────────

/// One party's refresh contribution: a masked decryption share plus a
/// fresh top-level encryption of the mask.
pub struct RefreshShare {
    /// c1 s_i + e - M_i at the input level.
    pub masked_partial: RnsPoly,
    /// Enc_pk(M_i) at the top level, carrying the input scale.
    pub mask_encryption: Ciphertext,
}

/// Mask magnitude: the masked payload (scale * values + noise) plus a
/// statistical margin.
fn mask_bits(ct: &Ciphertext) -> f64 {
    (ct.scale().log2() + ct.value_bits().max(0.0) + 1.0).max(ct.noise_bits())
        + REFRESH_STAT_BITS
}

pub fn refresh_share<R: Rng>(
    evaluator: &Evaluator,
    ct: &Ciphertext,
    share: &SecretKey,
    pk: &PublicKey,
    rng: &mut R,
) -> Result<RefreshShare, ThresholdError> {
    let params = evaluator.params();
    if ct.level() == 0 {
        return Err(ThresholdError::Ckks(CkksError::OutOfLevels));
    }
    let mb = mask_bits(ct);
    if mb > 120.0 {
        return Err(ThresholdError::Ckks(CkksError::NoiseOverflow(format!(
            "refresh mask needs 2^{mb:.0}, beyond the supported range"
        ))));
    }
    let bound = 2f64.powf(mb) as i128;
    let n = params.ring_degree();
    let mask: Vec<i128> = (0..n).map(|_| rng.gen_range(-bound..=bound)).collect();

    let level = ct.level();
    let mut partial = ct.c1().mul(&share.at_level(level));
    partial.add_assign(&gaussian_ntt(rng, params, level + 1, false));
    let mut mask_low =
        RnsPoly::from_signed_i128(&mask, params.context().clone(), level + 1, false);
    mask_low.to_ntt();
    partial.sub_assign(&mask_low);

    let mut mask_top =
        RnsPoly::from_signed_i128(&mask, params.context().clone(), params.max_level() + 1, false);
    mask_top.to_ntt();
    let mask_pt = Plaintext::from_parts(
        mask_top,
        params.max_level(),
        ct.scale(),
        mb - ct.scale().log2(),
    );
    let mask_encryption = evaluator.encrypt(&mask_pt, pk, rng)?;
    Ok(RefreshShare {
        masked_partial: partial,
        mask_encryption,
    })
}

/// Combines refresh shares into a fresh top-level ciphertext with the same
/// decryption (up to fresh noise).
pub fn combine_refresh(
    evaluator: &Evaluator,
    ct: &Ciphertext,
    shares: &[RefreshShare],
) -> Result<Ciphertext, ThresholdError> {
    let params = evaluator.params();
    let headroom = params.modulus_bits(ct.level()) - 2.0;
    let masked_bits = mask_bits(ct) + 1.0 + (shares.len() as f64).log2();
    if masked_bits > headroom {
        return Err(ThresholdError::Ckks(CkksError::NoiseOverflow(format!(
            "masked payload 2^{masked_bits:.0} exceeds headroom 2^{headroom:.0}"
        ))));
    }

    // t = c0 + sum (c1 s_i + e - M_i): small enough to lift exactly
    let mut t = ct.c0().clone();
    for s in shares {
        t.add_assign(&s.masked_partial);
    }
    t.to_coeff();
    let t_top = t.lift_to_prefix(params.max_level() + 1)?;

    let mut c0 = shares[0].mask_encryption.c0().clone();
    let mut c1 = shares[0].mask_encryption.c1().clone();
    for s in &shares[1..] {
        c0.add_assign(s.mask_encryption.c0());
        c1.add_assign(s.mask_encryption.c1());
    }
    let mut t_ntt = t_top;
    t_ntt.to_ntt();
    c0.add_assign(&t_ntt);

    let fresh = shares[0].mask_encryption.noise_bits();
    Ok(Ciphertext::from_parts(
        c0,
        c1,
        params.max_level(),
        ct.scale(),
        ct.slot_count(),
        pcol_ckks::cipher::bits_add(ct.noise_bits(), fresh + (shares.len() as f64).log2()),
        ct.value_bits(),
    ))
}
