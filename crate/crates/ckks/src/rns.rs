//! Residue-number-system polynomials over the negacyclic ring, with the
//! domain conversions, basis manipulations, and exact reconstruction the
//! scheme needs.
//!
//! A polynomial lives in a basis that is a prefix `q_0..q_l` of the chain,
//! optionally extended by the special key-switching prime as the last row.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::ntt::{add_mod, inv_mod, mul_mod, pow_mod, sub_mod};
use crate::params::ChainContext;

#[derive(Debug, Clone)]
pub struct RnsPoly {
    /// One row of n residues per basis prime; special prime last if present.
    rows: Vec<Vec<u64>>,
    /// Number of chain primes in the basis (= level + 1).
    prefix: usize,
    has_special: bool,
    ntt: bool,
    context: Arc<ChainContext>,
}

impl RnsPoly {
    pub fn zero(context: Arc<ChainContext>, prefix: usize, has_special: bool, ntt: bool) -> Self {
        let n = context.n;
        let rows = vec![vec![0u64; n]; prefix + has_special as usize];
        Self {
            rows,
            prefix,
            has_special,
            ntt,
            context,
        }
    }

    pub fn prefix(&self) -> usize {
        self.prefix
    }

    pub fn has_special(&self) -> bool {
        self.has_special
    }

    pub fn is_ntt(&self) -> bool {
        self.ntt
    }

    pub fn context(&self) -> &Arc<ChainContext> {
        &self.context
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.rows[i]
    }

    /// Modulus of basis row `i` (the special prime for the last row when
    /// present).
    pub fn row_modulus(&self, i: usize) -> u64 {
        if self.has_special && i == self.prefix {
            self.context.special
        } else {
            self.context.moduli[i]
        }
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    // ── Construction ────────────────────────────────────────────────────

    /// From small signed coefficients (secrets, errors, masks), coefficient
    /// domain.
    pub fn from_signed(
        coeffs: &[i64],
        context: Arc<ChainContext>,
        prefix: usize,
        has_special: bool,
    ) -> Self {
        let n = context.n;
        assert_eq!(coeffs.len(), n);
        let mut poly = Self::zero(context, prefix, has_special, false);
        for i in 0..poly.rows.len() {
            let q = poly.row_modulus(i) as i128;
            for (dst, &c) in poly.rows[i].iter_mut().zip(coeffs) {
                *dst = (c as i128).rem_euclid(q) as u64;
            }
        }
        poly
    }

    /// From wide signed coefficients (refresh masks exceed i64).
    pub fn from_signed_i128(
        coeffs: &[i128],
        context: Arc<ChainContext>,
        prefix: usize,
        has_special: bool,
    ) -> Self {
        let n = context.n;
        assert_eq!(coeffs.len(), n);
        let mut poly = Self::zero(context, prefix, has_special, false);
        for i in 0..poly.rows.len() {
            let q = poly.row_modulus(i) as i128;
            for (dst, &c) in poly.rows[i].iter_mut().zip(coeffs) {
                *dst = c.rem_euclid(q) as u64;
            }
        }
        poly
    }

    /// From integer-valued f64 coefficients of arbitrary magnitude
    /// (exact per-prime reduction of the f64's represented integer).
    pub fn from_f64_integers(
        coeffs: &[f64],
        context: Arc<ChainContext>,
        prefix: usize,
    ) -> Self {
        let n = context.n;
        assert_eq!(coeffs.len(), n);
        let mut poly = Self::zero(context, prefix, false, false);
        for i in 0..prefix {
            let q = poly.row_modulus(i);
            let pow2 = Pow2Cache::new(q);
            for (dst, &c) in poly.rows[i].iter_mut().zip(coeffs) {
                *dst = reduce_f64(c, q, &pow2);
            }
        }
        poly
    }

    pub fn sample_uniform<R: Rng>(
        rng: &mut R,
        context: Arc<ChainContext>,
        prefix: usize,
        has_special: bool,
        ntt: bool,
    ) -> Self {
        let mut poly = Self::zero(context, prefix, has_special, ntt);
        for i in 0..poly.rows.len() {
            let q = poly.row_modulus(i);
            for dst in poly.rows[i].iter_mut() {
                *dst = rng.gen_range(0..q);
            }
        }
        poly
    }

    /// Rounded Gaussian noise, coefficient domain.
    pub fn sample_gaussian<R: Rng>(
        rng: &mut R,
        stddev: f64,
        context: Arc<ChainContext>,
        prefix: usize,
        has_special: bool,
    ) -> Self {
        let n = context.n;
        let normal = Normal::new(0.0, stddev).expect("stddev must be positive");
        let coeffs: Vec<i64> = (0..n).map(|_| normal.sample(rng).round() as i64).collect();
        Self::from_signed(&coeffs, context, prefix, has_special)
    }

    // ── Domain conversion ───────────────────────────────────────────────

    pub fn to_ntt(&mut self) {
        if self.ntt {
            return;
        }
        for i in 0..self.rows.len() {
            let table = if self.has_special && i == self.prefix {
                self.context.special_table()
            } else {
                self.context.table(i)
            };
            table.forward(&mut self.rows[i]);
        }
        self.ntt = true;
    }

    pub fn to_coeff(&mut self) {
        if !self.ntt {
            return;
        }
        for i in 0..self.rows.len() {
            let table = if self.has_special && i == self.prefix {
                self.context.special_table()
            } else {
                self.context.table(i)
            };
            table.inverse(&mut self.rows[i]);
        }
        self.ntt = false;
    }

    // ── Arithmetic (same basis, same domain) ────────────────────────────

    fn assert_compatible(&self, rhs: &Self) {
        debug_assert_eq!(self.prefix, rhs.prefix, "basis prefix mismatch");
        debug_assert_eq!(self.has_special, rhs.has_special, "basis mismatch");
        debug_assert_eq!(self.ntt, rhs.ntt, "domain mismatch");
    }

    pub fn add_assign(&mut self, rhs: &Self) {
        self.assert_compatible(rhs);
        for i in 0..self.rows.len() {
            let q = self.row_modulus(i);
            for (a, &b) in self.rows[i].iter_mut().zip(&rhs.rows[i]) {
                *a = add_mod(*a, b, q);
            }
        }
    }

    pub fn sub_assign(&mut self, rhs: &Self) {
        self.assert_compatible(rhs);
        for i in 0..self.rows.len() {
            let q = self.row_modulus(i);
            for (a, &b) in self.rows[i].iter_mut().zip(&rhs.rows[i]) {
                *a = sub_mod(*a, b, q);
            }
        }
    }

    pub fn negate(&mut self) {
        for i in 0..self.rows.len() {
            let q = self.row_modulus(i);
            for a in self.rows[i].iter_mut() {
                if *a != 0 {
                    *a = q - *a;
                }
            }
        }
    }

    /// Pointwise product; both operands must be in NTT form.
    pub fn mul_assign(&mut self, rhs: &Self) {
        self.assert_compatible(rhs);
        debug_assert!(self.ntt, "pointwise product requires NTT form");
        for i in 0..self.rows.len() {
            let q = self.row_modulus(i);
            for (a, &b) in self.rows[i].iter_mut().zip(&rhs.rows[i]) {
                *a = mul_mod(*a, b, q);
            }
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        out.mul_assign(rhs);
        out
    }

    /// Multiplies row `i` by `scalars[i]` (per-basis-row constants).
    pub fn mul_scalar_rows(&mut self, scalars: &[u64]) {
        debug_assert_eq!(scalars.len(), self.rows.len());
        for i in 0..self.rows.len() {
            let q = self.row_modulus(i);
            let s = scalars[i] % q;
            for a in self.rows[i].iter_mut() {
                *a = mul_mod(*a, s, q);
            }
        }
    }

    /// Replaces basis row `i` with already-reduced residues.
    pub fn set_row(&mut self, i: usize, row: Vec<u64>) {
        debug_assert_eq!(row.len(), self.context.n);
        self.rows[i] = row;
    }

    /// Adds `values` (reduced mod q) into basis row `i`.
    pub fn add_into_row(&mut self, i: usize, values: &[u64], q: u64) {
        debug_assert_eq!(self.row_modulus(i), q);
        for (a, &v) in self.rows[i].iter_mut().zip(values) {
            *a = add_mod(*a, v, q);
        }
    }

    /// Fused multiply-add into basis row `i`: row += a * b (mod q).
    pub fn fma_row(&mut self, i: usize, a: &[u64], b: &[u64], q: u64) {
        debug_assert_eq!(self.row_modulus(i), q);
        for ((dst, &x), &y) in self.rows[i].iter_mut().zip(a).zip(b) {
            *dst = add_mod(*dst, mul_mod(x, y, q), q);
        }
    }

    /// Copy restricted to a smaller basis: the first `prefix` chain rows
    /// plus optionally the special row.
    pub fn restricted(&self, prefix: usize, has_special: bool) -> Self {
        assert!(prefix <= self.prefix);
        assert!(!has_special || self.has_special);
        let mut rows: Vec<Vec<u64>> = self.rows[..prefix].to_vec();
        if has_special {
            rows.push(self.rows.last().unwrap().clone());
        }
        Self {
            rows,
            prefix,
            has_special,
            ntt: self.ntt,
            context: self.context.clone(),
        }
    }

    // ── Basis manipulation ──────────────────────────────────────────────

    /// Drops chain primes above `new_prefix` (exact modulus reduction).
    pub fn drop_to_prefix(&mut self, new_prefix: usize) {
        assert!(new_prefix >= 1 && new_prefix <= self.prefix);
        if self.has_special {
            let special = self.rows.pop().unwrap();
            self.rows.truncate(new_prefix);
            self.rows.push(special);
        } else {
            self.rows.truncate(new_prefix);
        }
        self.prefix = new_prefix;
    }

    /// Exact division by the top chain prime with rounding; drops that
    /// prime from the basis. Input and output in NTT form.
    pub fn rescale_by_top(&mut self) {
        assert!(self.ntt && !self.has_special && self.prefix >= 2);
        let top_idx = self.prefix - 1;
        let q_top = self.row_modulus(top_idx);
        let mut top = self.rows.pop().unwrap();
        self.context.table(top_idx).inverse(&mut top);
        self.prefix -= 1;
        let half = q_top / 2;
        // centered residues of the top row, broadcast into each remaining prime
        for i in 0..self.prefix {
            let q = self.row_modulus(i);
            let q_top_red = q_top % q;
            let inv_top = inv_mod(q_top_red, q);
            let mut delta: Vec<u64> = top
                .iter()
                .map(|&r| if r > half { sub_mod(r % q, q_top_red, q) } else { r % q })
                .collect();
            self.context.table(i).forward(&mut delta);
            for (a, d) in self.rows[i].iter_mut().zip(delta) {
                *a = mul_mod(sub_mod(*a, d, q), inv_top, q);
            }
        }
    }

    /// Exact division by the special prime with rounding; removes the
    /// special row. Input and output in NTT form.
    pub fn div_by_special(&mut self) {
        assert!(self.ntt && self.has_special);
        let p = self.context.special;
        let mut sp = self.rows.pop().unwrap();
        self.context.special_table().inverse(&mut sp);
        self.has_special = false;
        let half = p / 2;
        for i in 0..self.prefix {
            let q = self.row_modulus(i);
            let p_red = p % q;
            let inv_p = inv_mod(p_red, q);
            let mut delta: Vec<u64> = sp
                .iter()
                .map(|&r| if r > half { sub_mod(r % q, p_red, q) } else { r % q })
                .collect();
            self.context.table(i).forward(&mut delta);
            for (a, d) in self.rows[i].iter_mut().zip(delta) {
                *a = mul_mod(sub_mod(*a, d, q), inv_p, q);
            }
        }
    }

    /// Galois automorphism X -> X^g (g odd), coefficient domain.
    pub fn automorphism(&self, g: u64) -> Self {
        assert!(!self.ntt, "automorphism implemented in coefficient domain");
        let n = self.context.n as u64;
        let two_n = 2 * n;
        debug_assert_eq!(g % 2, 1);
        let mut out = Self::zero(self.context.clone(), self.prefix, self.has_special, false);
        for i in 0..self.rows.len() {
            let q = self.row_modulus(i);
            for k in 0..n {
                let e = (k * g) % two_n;
                let v = self.rows[i][k as usize];
                if e < n {
                    out.rows[i][e as usize] = v;
                } else {
                    out.rows[i][(e - n) as usize] = if v == 0 { 0 } else { q - v };
                }
            }
        }
        out
    }

    /// Exact centered lift to a larger chain prefix: reconstructs each
    /// coefficient over the current basis and reduces it modulo the added
    /// primes. Coefficient domain only. The value must be centered-small
    /// (its magnitude is preserved, not its residue class mod the larger
    /// modulus).
    pub fn lift_to_prefix(&self, new_prefix: usize) -> Result<Self, crate::error::CkksError> {
        if self.ntt || self.has_special {
            return Err(crate::error::CkksError::InvalidParams(
                "lift_to_prefix expects a coefficient-domain chain-basis poly".into(),
            ));
        }
        if new_prefix > self.context.moduli.len() {
            return Err(crate::error::CkksError::InvalidParams(
                "prefix beyond the chain".into(),
            ));
        }
        if new_prefix <= self.prefix {
            let mut out = self.clone();
            out.drop_to_prefix(new_prefix);
            return Ok(out);
        }
        let k = self.prefix;
        let moduli = &self.context.moduli[..k];
        let mut inv = vec![vec![0u64; k]; k];
        for j in 1..k {
            for i in 0..j {
                inv[i][j] = inv_mod(moduli[i] % moduli[j], moduli[j]);
            }
        }
        let q_limbs = {
            let mut l = Limbs::from_u64(1);
            for &q in moduli {
                l.mul_u64(q);
            }
            l
        };
        let mut half_q = q_limbs.clone();
        half_q.shr1();

        let n = self.context.n;
        let mut out = Self::zero(self.context.clone(), new_prefix, false, false);
        for i in 0..k {
            out.rows[i].copy_from_slice(&self.rows[i]);
        }
        let mut digits = vec![0u64; k];
        for c in 0..n {
            for j in 0..k {
                let qj = moduli[j];
                let mut t = self.rows[j][c];
                for i in 0..j {
                    t = mul_mod(sub_mod(t, digits[i] % qj, qj), inv[i][j], qj);
                }
                digits[j] = t;
            }
            let mut v = Limbs::from_u64(digits[k - 1]);
            for j in (0..k - 1).rev() {
                v.mul_u64(moduli[j]);
                v.add_u64(digits[j]);
            }
            let negative = v.gt(&half_q);
            if negative {
                let mut m = q_limbs.clone();
                m.sub(&v);
                v = m;
            }
            for i in k..new_prefix {
                let q = self.context.moduli[i];
                let r = v.mod_u64(q);
                out.rows[i][c] = if negative && r != 0 { q - r } else { r };
            }
        }
        Ok(out)
    }

    // ── Reconstruction ──────────────────────────────────────────────────

    /// Exact centered reconstruction of every coefficient as f64 (value
    /// semantics exact; only the final f64 conversion rounds).
    pub fn to_centered_f64(&self) -> Vec<f64> {
        assert!(!self.has_special, "reconstruct over the chain basis only");
        let mut tmp = self.clone();
        tmp.to_coeff();
        let k = self.prefix;
        let moduli = &self.context.moduli[..k];
        // Garner mixed-radix digits
        let mut inv = vec![vec![0u64; k]; k];
        for j in 1..k {
            for i in 0..j {
                inv[i][j] = inv_mod(moduli[i] % moduli[j], moduli[j]);
            }
        }
        let q_limbs = {
            let mut l = Limbs::from_u64(1);
            for &q in moduli {
                l.mul_u64(q);
            }
            l
        };
        let mut half_q = q_limbs.clone();
        half_q.shr1();

        let n = self.context.n;
        let mut out = vec![0f64; n];
        let mut digits = vec![0u64; k];
        for c in 0..n {
            for j in 0..k {
                let qj = moduli[j];
                let mut t = tmp.rows[j][c];
                for i in 0..j {
                    t = mul_mod(sub_mod(t, digits[i] % qj, qj), inv[i][j], qj);
                }
                digits[j] = t;
            }
            // value = d_0 + q_0 (d_1 + q_1 (...)) , exact limbs
            let mut v = Limbs::from_u64(digits[k - 1]);
            for j in (0..k - 1).rev() {
                v.mul_u64(moduli[j]);
                v.add_u64(digits[j]);
            }
            out[c] = if v.gt(&half_q) {
                let mut neg = q_limbs.clone();
                neg.sub(&v);
                -neg.to_f64()
            } else {
                v.to_f64()
            };
        }
        out
    }
}

// ── Exact f64 -> residue reduction ───────────────────────────────────────

/// Cache of 2^e mod q for the exponent range encode needs.
pub struct Pow2Cache {
    q: u64,
    powers: Vec<u64>,
}

impl Pow2Cache {
    pub fn new(q: u64) -> Self {
        let mut powers = Vec::with_capacity(1200);
        let mut v = 1u64 % q;
        for _ in 0..1200 {
            powers.push(v);
            v = add_mod(v, v, q);
        }
        Self { q, powers }
    }

    fn pow2(&self, e: u32) -> u64 {
        match self.powers.get(e as usize) {
            Some(&v) => v,
            None => pow_mod(2, e as u64, self.q),
        }
    }
}

/// Reduces the integer represented exactly by `v` (an integer-valued f64)
/// modulo q.
fn reduce_f64(v: f64, q: u64, pow2: &Pow2Cache) -> u64 {
    if v == 0.0 {
        return 0;
    }
    debug_assert!(v.is_finite());
    let neg = v < 0.0;
    let bits = v.abs().to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let (mut mant, mut exp2) = if raw_exp == 0 {
        (bits & ((1u64 << 52) - 1), -1074)
    } else {
        ((bits & ((1u64 << 52) - 1)) | (1u64 << 52), raw_exp - 1075)
    };
    // integer-valued: shift any negative exponent away
    while exp2 < 0 {
        debug_assert_eq!(mant & 1, 0, "non-integer f64 passed to reduce_f64");
        mant >>= 1;
        exp2 += 1;
    }
    let r = mul_mod(mant % q, pow2.pow2(exp2 as u32), q);
    if neg && r != 0 {
        q - r
    } else {
        r
    }
}

// ── Minimal unsigned big integer (little-endian u64 limbs) ───────────────

#[derive(Debug, Clone)]
struct Limbs(Vec<u64>);

impl Limbs {
    fn from_u64(v: u64) -> Self {
        Limbs(vec![v])
    }

    fn mul_u64(&mut self, m: u64) {
        let mut carry = 0u128;
        for limb in self.0.iter_mut() {
            let prod = *limb as u128 * m as u128 + carry;
            *limb = prod as u64;
            carry = prod >> 64;
        }
        if carry > 0 {
            self.0.push(carry as u64);
        }
    }

    fn add_u64(&mut self, a: u64) {
        let mut carry = a;
        for limb in self.0.iter_mut() {
            let (s, c) = limb.overflowing_add(carry);
            *limb = s;
            carry = c as u64;
            if carry == 0 {
                return;
            }
        }
        if carry > 0 {
            self.0.push(carry);
        }
    }

    /// self -= other; requires self >= other.
    fn sub(&mut self, other: &Limbs) {
        let mut borrow = 0u64;
        for i in 0..self.0.len() {
            let o = *other.0.get(i).unwrap_or(&0);
            let (d1, b1) = self.0[i].overflowing_sub(o);
            let (d2, b2) = d1.overflowing_sub(borrow);
            self.0[i] = d2;
            borrow = (b1 | b2) as u64;
        }
        debug_assert_eq!(borrow, 0, "limb subtraction underflow");
    }

    fn shr1(&mut self) {
        let mut carry = 0u64;
        for limb in self.0.iter_mut().rev() {
            let new_carry = *limb & 1;
            *limb = (*limb >> 1) | (carry << 63);
            carry = new_carry;
        }
    }

    fn gt(&self, other: &Limbs) -> bool {
        let len = self.0.len().max(other.0.len());
        for i in (0..len).rev() {
            let a = *self.0.get(i).unwrap_or(&0);
            let b = *other.0.get(i).unwrap_or(&0);
            if a != b {
                return a > b;
            }
        }
        false
    }

    /// value mod q, iterating limbs from the top.
    fn mod_u64(&self, q: u64) -> u64 {
        let shift = ((1u128 << 64) % q as u128) as u64;
        let mut r = 0u64;
        for &limb in self.0.iter().rev() {
            let high = (r as u128 * shift as u128) % q as u128;
            r = ((high + (limb % q) as u128) % q as u128) as u64;
        }
        r
    }

    fn to_f64(&self) -> f64 {
        let h = match self.0.iter().rposition(|&l| l != 0) {
            Some(h) => h,
            None => return 0.0,
        };
        if h == 0 {
            return self.0[0] as f64;
        }
        let hi = self.0[h] as u128;
        let lo = self.0[h - 1] as u128;
        let top = ((hi << 64) | lo) as f64;
        top * 2f64.powi(64 * (h as i32 - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{gen_params, Preset};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn ctx() -> Arc<ChainContext> {
        gen_params(Preset::Toy).unwrap().context().clone()
    }

    #[test]
    fn signed_roundtrip_through_reconstruction() {
        let context = ctx();
        let n = context.n;
        let coeffs: Vec<i64> = (0..n as i64).map(|i| (i - 16) * 1001).collect();
        let poly = RnsPoly::from_signed(&coeffs, context, 3, false);
        let back = poly.to_centered_f64();
        for (a, b) in coeffs.iter().zip(&back) {
            assert_eq!(*a as f64, *b);
        }
    }

    #[test]
    fn reconstruction_handles_large_values() {
        let context = ctx();
        let n = context.n;
        // value ~ 2^75, beyond any single prime
        let big = 2f64.powi(75) + 1_048_576.0;
        let mut coeffs = vec![0f64; n];
        coeffs[0] = big;
        coeffs[1] = -big;
        let poly = RnsPoly::from_f64_integers(&coeffs, context, 4);
        let back = poly.to_centered_f64();
        assert_eq!(back[0], big);
        assert_eq!(back[1], -big);
        assert_eq!(back[2], 0.0);
    }

    #[test]
    fn ntt_roundtrip() {
        let context = ctx();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut poly = RnsPoly::sample_uniform(&mut rng, context, 5, true, false);
        let original = poly.clone();
        poly.to_ntt();
        poly.to_coeff();
        for i in 0..poly.row_count() {
            assert_eq!(poly.row(i), original.row(i));
        }
    }

    #[test]
    fn rescale_divides_by_top_prime() {
        let context = ctx();
        let q_top = context.moduli[2];
        let n = context.n;
        // exact multiple of q_top stays exact under rescale
        let coeffs: Vec<f64> = (0..n).map(|i| (i as f64 - 3.0) * q_top as f64).collect();
        let mut poly = RnsPoly::from_f64_integers(&coeffs, context, 3);
        poly.to_ntt();
        poly.rescale_by_top();
        poly.to_coeff();
        let back = poly.to_centered_f64();
        for (i, b) in back.iter().enumerate() {
            assert_eq!(*b, i as f64 - 3.0);
        }
    }

    #[test]
    fn rescale_rounds_to_nearest() {
        let context = ctx();
        let q_top = context.moduli[1] as f64;
        let n = context.n;
        let mut coeffs = vec![0f64; n];
        coeffs[0] = (q_top * 7.0) + (q_top * 0.4).round();  // rounds down to 7
        coeffs[1] = (q_top * 7.0) + (q_top * 0.6).round();  // rounds up to 8
        let mut poly = RnsPoly::from_f64_integers(&coeffs, context, 2);
        poly.to_ntt();
        poly.rescale_by_top();
        poly.to_coeff();
        let back = poly.to_centered_f64();
        assert_eq!(back[0], 7.0);
        assert_eq!(back[1], 8.0);
    }

    #[test]
    fn automorphism_maps_monomials_with_sign() {
        let context = ctx();
        let n = context.n;
        // X -> X^g sends X^k to +- X^(gk mod n)
        let mut coeffs = vec![0i64; n];
        coeffs[1] = 1;
        let poly = RnsPoly::from_signed(&coeffs, context.clone(), 2, false);
        let g = 5u64;
        let out = poly.automorphism(g).to_centered_f64();
        for (i, v) in out.iter().enumerate() {
            assert_eq!(*v, if i == 5 { 1.0 } else { 0.0 });
        }
        // wrap: X^(n-1) -> X^((n-1)g mod 2n) picks up the negacyclic sign
        let mut coeffs = vec![0i64; n];
        coeffs[n - 1] = 1;
        let poly = RnsPoly::from_signed(&coeffs, context, 2, false);
        let out = poly.automorphism(5).to_centered_f64();
        let e = ((n - 1) * 5) % (2 * n);
        let (idx, sign) = if e < n { (e, 1.0) } else { (e - n, -1.0) };
        for (i, v) in out.iter().enumerate() {
            assert_eq!(*v, if i == idx { sign } else { 0.0 });
        }
    }

    #[test]
    fn drop_prefix_preserves_small_values() {
        let context = ctx();
        let n = context.n;
        let coeffs: Vec<i64> = (0..n as i64).map(|i| i * 17 - 100).collect();
        let mut poly = RnsPoly::from_signed(&coeffs, context, 5, false);
        poly.drop_to_prefix(2);
        let back = poly.to_centered_f64();
        for (a, b) in coeffs.iter().zip(&back) {
            assert_eq!(*a as f64, *b);
        }
    }
}
