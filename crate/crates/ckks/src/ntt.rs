//! Negacyclic number-theoretic transform over word-sized primes, with
//! Harvey-style lazy butterflies and Shoup-precomputed twiddles.
//!
//! A prime q with q = 1 (mod 2n) admits a primitive 2n-th root of unity psi;
//! the transform evaluates a polynomial of Z_q[X]/(X^n + 1) at the odd
//! powers psi^(2i+1), turning ring multiplication into pointwise products.

// ── Plain modular arithmetic ─────────────────────────────────────────────

#[inline(always)]
pub fn add_mod(a: u64, b: u64, q: u64) -> u64 {
    let s = a + b;
    if s >= q {
        s - q
    } else {
        s
    }
}

#[inline(always)]
pub fn sub_mod(a: u64, b: u64, q: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + q - b
    }
}

#[inline(always)]
pub fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, q: u64) -> u64 {
    let mut acc = 1u64;
    base %= q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, q);
        }
        base = mul_mod(base, base, q);
        exp >>= 1;
    }
    acc
}

/// Inverse modulo a prime via Fermat.
pub fn inv_mod(a: u64, q: u64) -> u64 {
    pow_mod(a, q - 2, q)
}

/// Shoup precomputation: floor(w * 2^64 / q), for `w < q`.
#[inline(always)]
fn shoup(w: u64, q: u64) -> u64 {
    (((w as u128) << 64) / q as u128) as u64
}

/// Lazy Shoup product: returns a*w mod q in [0, 2q) for any a, given
/// `ws = shoup(w, q)` and w < q < 2^63.
#[inline(always)]
fn mul_shoup_lazy(a: u64, w: u64, ws: u64, q: u64) -> u64 {
    let hi = ((a as u128 * ws as u128) >> 64) as u64;
    a.wrapping_mul(w).wrapping_sub(hi.wrapping_mul(q))
}

// ── Primality and prime search ───────────────────────────────────────────

/// Deterministic Miller-Rabin for u64 (witness set valid below 3.3e24).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Deterministic search for `count` distinct NTT-friendly primes
/// (p = 1 mod 2n) near `target`, alternating above/below so products of
/// consecutive picks stay close to powers of the target.
pub fn find_ntt_primes(target: u64, two_n: u64, count: usize, exclude: &[u64]) -> Vec<u64> {
    let base = target - (target % two_n) + 1; // = 1 mod 2n
    let mut found = Vec::with_capacity(count);
    let mut step = 0u64;
    while found.len() < count {
        for cand in [base + step * two_n, base.wrapping_sub(step * two_n)] {
            if found.len() >= count {
                break;
            }
            if cand < (1 << 20) || cand > (1 << 62) {
                continue;
            }
            if exclude.contains(&cand) || found.contains(&cand) {
                continue;
            }
            if is_prime(cand) {
                found.push(cand);
            }
        }
        step += 1;
        assert!(step < (1 << 32), "prime search exhausted");
    }
    found
}

/// Finds a primitive 2n-th root of unity modulo the NTT-friendly prime q.
pub fn primitive_root_2n(q: u64, two_n: u64) -> u64 {
    assert_eq!((q - 1) % two_n, 0);
    let cofactor = (q - 1) / two_n;
    // deterministic generator scan
    for g in 2..u64::MAX {
        let psi = pow_mod(g, cofactor, q);
        // order exactly 2n <=> psi^n = -1
        if pow_mod(psi, two_n / 2, q) == q - 1 {
            return psi;
        }
    }
    unreachable!("no primitive root found");
}

// ── Transform tables ─────────────────────────────────────────────────────

/// Per-prime NTT table: bit-reversed psi powers with Shoup companions.
#[derive(Debug, Clone)]
pub struct NttTable {
    pub q: u64,
    n: usize,
    psi_rev: Vec<u64>,
    psi_rev_shoup: Vec<u64>,
    psi_inv_rev: Vec<u64>,
    psi_inv_rev_shoup: Vec<u64>,
    n_inv: u64,
    n_inv_shoup: u64,
}

fn bit_reverse(i: usize, bits: u32) -> usize {
    i.reverse_bits() >> (usize::BITS - bits)
}

impl NttTable {
    pub fn new(q: u64, n: usize) -> Self {
        assert!(n.is_power_of_two());
        let psi = primitive_root_2n(q, 2 * n as u64);
        let psi_inv = inv_mod(psi, q);
        let bits = n.trailing_zeros();
        let mut psi_rev = vec![0u64; n];
        let mut psi_inv_rev = vec![0u64; n];
        let mut p = 1u64;
        let mut pi = 1u64;
        for i in 0..n {
            psi_rev[bit_reverse(i, bits)] = p;
            psi_inv_rev[bit_reverse(i, bits)] = pi;
            p = mul_mod(p, psi, q);
            pi = mul_mod(pi, psi_inv, q);
        }
        let psi_rev_shoup = psi_rev.iter().map(|&w| shoup(w, q)).collect();
        let psi_inv_rev_shoup = psi_inv_rev.iter().map(|&w| shoup(w, q)).collect();
        let n_inv = inv_mod(n as u64, q);
        Self {
            q,
            n,
            psi_rev,
            psi_rev_shoup,
            psi_inv_rev,
            psi_inv_rev_shoup,
            n_inv,
            n_inv_shoup: shoup(n_inv, q),
        }
    }

    /// In-place forward negacyclic NTT. Input coefficients reduced mod q;
    /// output reduced mod q, in the transform's internal (bit-reversed)
    /// order.
    pub fn forward(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let q = self.q;
        let two_q = 2 * q;
        let mut t = self.n;
        let mut m = 1;
        while m < self.n {
            t >>= 1;
            for i in 0..m {
                let w = self.psi_rev[m + i];
                let ws = self.psi_rev_shoup[m + i];
                let j1 = 2 * i * t;
                for j in j1..j1 + t {
                    // Harvey lazy butterfly: values stay < 4q
                    let mut x = a[j];
                    if x >= two_q {
                        x -= two_q;
                    }
                    let v = mul_shoup_lazy(a[j + t], w, ws, q);
                    a[j] = x + v;
                    a[j + t] = x + two_q - v;
                }
            }
            m <<= 1;
        }
        for v in a.iter_mut() {
            if *v >= two_q {
                *v -= two_q;
            }
            if *v >= q {
                *v -= q;
            }
        }
    }

    /// In-place inverse negacyclic NTT (including the 1/n scaling).
    pub fn inverse(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let q = self.q;
        let two_q = 2 * q;
        let mut t = 1;
        let mut m = self.n;
        while m > 1 {
            let h = m >> 1;
            let mut j1 = 0;
            for i in 0..h {
                let w = self.psi_inv_rev[h + i];
                let ws = self.psi_inv_rev_shoup[h + i];
                for j in j1..j1 + t {
                    let x = a[j];
                    let y = a[j + t];
                    let mut s = x + y;
                    if s >= two_q {
                        s -= two_q;
                    }
                    a[j] = s;
                    a[j + t] = mul_shoup_lazy(x + two_q - y, w, ws, q);
                }
                j1 += 2 * t;
            }
            t <<= 1;
            m = h;
        }
        for v in a.iter_mut() {
            let mut x = mul_shoup_lazy(*v, self.n_inv, self.n_inv_shoup, q);
            if x >= q {
                x -= q;
            }
            *v = x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_basics() {
        assert!(is_prime(2));
        assert!(is_prime(998244353));
        assert!(is_prime((1 << 61) - 1));
        assert!(!is_prime(1));
        assert!(!is_prime(998244353u64 * 3));
    }

    #[test]
    fn found_primes_are_ntt_friendly() {
        let two_n = 64;
        let primes = find_ntt_primes(1 << 30, two_n, 5, &[]);
        assert_eq!(primes.len(), 5);
        for &p in &primes {
            assert!(is_prime(p));
            assert_eq!(p % two_n, 1);
        }
        // determinism
        assert_eq!(primes, find_ntt_primes(1 << 30, two_n, 5, &[]));
    }

    #[test]
    fn roundtrip_preserves_coefficients() {
        let n = 64;
        let q = find_ntt_primes(1 << 40, 2 * n as u64, 1, &[])[0];
        let table = NttTable::new(q, n);
        let original: Vec<u64> = (0..n as u64).map(|i| (i * 0x9e3779b9) % q).collect();
        let mut a = original.clone();
        table.forward(&mut a);
        table.inverse(&mut a);
        assert_eq!(a, original);
    }

    /// Pointwise NTT product equals schoolbook negacyclic convolution.
    #[test]
    fn ntt_multiplication_matches_schoolbook() {
        let n = 32;
        let q = find_ntt_primes(1 << 45, 2 * n as u64, 1, &[])[0];
        let table = NttTable::new(q, n);
        let a: Vec<u64> = (0..n as u64).map(|i| (i * i + 3) % q).collect();
        let b: Vec<u64> = (0..n as u64).map(|i| (7 * i + 11) % q).collect();

        let mut want = vec![0u64; n];
        for i in 0..n {
            for j in 0..n {
                let prod = mul_mod(a[i], b[j], q);
                if i + j < n {
                    want[i + j] = add_mod(want[i + j], prod, q);
                } else {
                    want[i + j - n] = sub_mod(want[i + j - n], prod, q);
                }
            }
        }

        let mut fa = a.clone();
        let mut fb = b.clone();
        table.forward(&mut fa);
        table.forward(&mut fb);
        let mut fc: Vec<u64> = fa.iter().zip(&fb).map(|(&x, &y)| mul_mod(x, y, q)).collect();
        table.inverse(&mut fc);
        assert_eq!(fc, want);
    }

    #[test]
    fn primitive_root_has_order_2n() {
        let two_n = 128u64;
        let q = find_ntt_primes(1 << 40, two_n, 1, &[])[0];
        let psi = primitive_root_2n(q, two_n);
        assert_eq!(pow_mod(psi, two_n, q), 1);
        assert_eq!(pow_mod(psi, two_n / 2, q), q - 1);
    }
}
