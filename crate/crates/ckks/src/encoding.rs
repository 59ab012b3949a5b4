//! Canonical-embedding encoding: real slot vectors to integer polynomials
//! and back, via the special transform over the primitive 2n-th roots of
//! unity.
//!
//! Slot j corresponds to evaluation at zeta^(5^j mod 2n). Writing
//! y_k = m_k zeta^k turns each evaluation into a plain n-point DFT bin, so
//! the transform reduces to a twist plus one FFT plus an index permutation.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::CkksError;
use crate::params::Params;
use crate::rns::RnsPoly;

/// Integer-coefficient polynomial carrying its level and scale.
#[derive(Debug, Clone)]
pub struct Plaintext {
    pub(crate) poly: RnsPoly,
    pub(crate) level: usize,
    pub(crate) scale: f64,
    /// log2 bound on the encoded slot magnitudes (noise heuristics).
    pub(crate) value_bits: f64,
}

impl Plaintext {
    pub fn from_parts(poly: RnsPoly, level: usize, scale: f64, value_bits: f64) -> Self {
        Self {
            poly,
            level,
            scale,
            value_bits,
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn poly(&self) -> &RnsPoly {
        &self.poly
    }

    pub fn value_bits(&self) -> f64 {
        self.value_bits
    }
}

/// Precomputed transform state for one ring degree.
pub struct Encoder {
    n: usize,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    /// zeta^k for k in 0..n, zeta = exp(i pi / n).
    zeta: Vec<Complex64>,
    /// DFT bin index of slot j: (5^j mod 2n - 1) / 2.
    slot_bin: Vec<usize>,
}

impl Encoder {
    pub fn new(params: &Params) -> Self {
        let n = params.ring_degree();
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(n);
        let fft_inv = planner.plan_fft_inverse(n);
        let zeta: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(1.0, std::f64::consts::PI * k as f64 / n as f64))
            .collect();
        let two_n = 2 * n as u64;
        let mut slot_bin = Vec::with_capacity(n / 2);
        let mut e = 1u64;
        for _ in 0..n / 2 {
            slot_bin.push(((e - 1) / 2) as usize);
            e = (e * 5) % two_n;
        }
        Self {
            n,
            fft_fwd,
            fft_inv,
            zeta,
            slot_bin,
        }
    }

    /// Encodes up to n/2 real values into a plaintext at `level` and
    /// `scale`. Shorter inputs are zero-padded.
    pub fn encode(
        &self,
        values: &[f64],
        params: &Params,
        level: usize,
        scale: f64,
    ) -> Result<Plaintext, CkksError> {
        let slots = self.n / 2;
        if values.len() > slots {
            return Err(CkksError::Overflow(format!(
                "{} values exceed the {} slots",
                values.len(),
                slots
            )));
        }
        if level > params.max_level() {
            return Err(CkksError::LevelMismatch {
                a: level,
                b: params.max_level(),
            });
        }
        let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let headroom_bits = params.modulus_bits(level) - 1.0;
        if max_abs > 0.0 && (max_abs * scale).log2() >= headroom_bits {
            return Err(CkksError::Overflow(format!(
                "|value| * scale = 2^{:.1} exceeds modulus headroom 2^{:.1}",
                (max_abs * scale).log2(),
                headroom_bits
            )));
        }

        let mut bins = vec![Complex64::new(0.0, 0.0); self.n];
        for (j, &v) in values.iter().enumerate() {
            let t = self.slot_bin[j];
            bins[t] = Complex64::new(v, 0.0);
            bins[self.n - 1 - t] = Complex64::new(v, 0.0); // conj of a real
        }
        self.fft_fwd.process(&mut bins);
        let inv_n = 1.0 / self.n as f64;
        let coeffs: Vec<f64> = (0..self.n)
            .map(|k| {
                let y = bins[k] * inv_n;
                // m_k = Re(y_k * zeta^-k); conj(zeta^k) = zeta^-k on the unit circle
                let m = y.re * self.zeta[k].re + y.im * self.zeta[k].im;
                (m * scale).round()
            })
            .collect();
        let poly = RnsPoly::from_f64_integers(&coeffs, params.context().clone(), level + 1);
        let mut poly = poly;
        poly.to_ntt();
        Ok(Plaintext {
            poly,
            level,
            scale,
            value_bits: if max_abs > 0.0 { max_abs.log2() } else { 0.0 },
        })
    }

    /// Inverse transform; returns the n/2 real slot values.
    pub fn decode(&self, pt: &Plaintext) -> Vec<f64> {
        let coeffs = pt.poly.to_centered_f64();
        let mut y: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| self.zeta[k] * c)
            .collect();
        self.fft_inv.process(&mut y);
        let inv_scale = 1.0 / pt.scale;
        self.slot_bin.iter().map(|&t| y[t].re * inv_scale).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{gen_params, Preset};

    #[test]
    fn zero_roundtrip_is_exact() {
        let params = gen_params(Preset::Toy).unwrap();
        let enc = Encoder::new(&params);
        let pt = enc
            .encode(&vec![0.0; 16], &params, params.max_level(), params.scale())
            .unwrap();
        assert!(enc.decode(&pt).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn roundtrip_error_is_small() {
        let params = gen_params(Preset::Toy).unwrap();
        let enc = Encoder::new(&params);
        let values: Vec<f64> = (0..16).map(|i| 1.0 - 0.125 * i as f64).collect();
        let pt = enc
            .encode(&values, &params, params.max_level(), params.scale())
            .unwrap();
        let back = enc.decode(&pt);
        for (a, b) in values.iter().zip(&back) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn short_inputs_are_zero_padded() {
        let params = gen_params(Preset::Toy).unwrap();
        let enc = Encoder::new(&params);
        let pt = enc
            .encode(&[0.5, -0.25], &params, params.max_level(), params.scale())
            .unwrap();
        let back = enc.decode(&pt);
        assert!((back[0] - 0.5).abs() < 1e-6);
        assert!((back[1] + 0.25).abs() < 1e-6);
        for v in &back[2..] {
            assert!(v.abs() < 1e-6);
        }
    }

    #[test]
    fn capacity_is_enforced() {
        let params = gen_params(Preset::Toy).unwrap();
        let enc = Encoder::new(&params);
        let too_many = vec![0.1; 17];
        assert!(matches!(
            enc.encode(&too_many, &params, params.max_level(), params.scale()),
            Err(CkksError::Overflow(_))
        ));
    }

    #[test]
    fn oversized_values_overflow() {
        let params = gen_params(Preset::Toy).unwrap();
        let enc = Encoder::new(&params);
        // modulus at level 0 is ~2^45, scale 2^30: |v| = 2^20 overflows
        assert!(matches!(
            enc.encode(&[(1u64 << 20) as f64], &params, 0, params.scale()),
            Err(CkksError::Overflow(_))
        ));
    }

    /// Polynomial product of encodings decodes to the slotwise product:
    /// the embedding is a ring homomorphism, which pins down the slot
    /// indexing.
    #[test]
    fn encoding_is_multiplicative() {
        let params = gen_params(Preset::Toy).unwrap();
        let enc = Encoder::new(&params);
        let a: Vec<f64> = (0..16).map(|i| 0.3 + 0.05 * i as f64).collect();
        let b: Vec<f64> = (0..16).map(|i| -0.8 + 0.1 * i as f64).collect();
        let pa = enc.encode(&a, &params, params.max_level(), params.scale()).unwrap();
        let pb = enc.encode(&b, &params, params.max_level(), params.scale()).unwrap();
        let prod = pa.poly.mul(&pb.poly);
        let pt = Plaintext {
            poly: prod,
            level: params.max_level(),
            scale: params.scale() * params.scale(),
            value_bits: 0.0,
        };
        let back = enc.decode(&pt);
        for ((x, y), z) in a.iter().zip(&b).zip(&back) {
            assert!((x * y - z).abs() < 1e-5, "{x} * {y} = {} vs {z}", x * y);
        }
    }

    /// The Galois automorphism X -> X^5 rotates slots left by one.
    #[test]
    fn automorphism_five_rotates_slots() {
        let params = gen_params(Preset::Toy).unwrap();
        let enc = Encoder::new(&params);
        let values: Vec<f64> = (0..16).map(|i| i as f64 * 0.1).collect();
        let pt = enc
            .encode(&values, &params, params.max_level(), params.scale())
            .unwrap();
        let mut poly = pt.poly.clone();
        poly.to_coeff();
        let mut rotated = poly.automorphism(5);
        rotated.to_ntt();
        let rt = Plaintext {
            poly: rotated,
            level: pt.level,
            scale: pt.scale,
            value_bits: 0.0,
        };
        let back = enc.decode(&rt);
        for j in 0..16 {
            let want = values[(j + 1) % 16];
            assert!((back[j] - want).abs() < 1e-6, "slot {j}: {} vs {want}", back[j]);
        }
    }
}
