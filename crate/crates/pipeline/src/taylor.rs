//! Truncated Taylor series: plaintext reference forms and their
//! homomorphic evaluation.
//!
//! exp(x) ~ sum_{k=0}^{N1} x^k / k!  and  cos(x) ~ sum_{k=0}^{N2} (-1)^k
//! x^{2k} / (2k)!. No argument reduction is applied to cos; evaluating at
//! phi = 2 pi with a low order reproduces the characteristic blow-up of
//! the paper's failure row.

use pcol_ckks::{Ciphertext, CkksError, Evaluator, KeySwitchKey};

use crate::counter::{EvalStrategy, OpCounter};
use crate::error::PipelineError;

/// Truncated exp: sum_{k=0}^{order} x^k / k!.
pub fn exp_taylor(x: f64, order: usize) -> f64 {
    let mut term = 1.0;
    let mut acc = 1.0;
    for k in 1..=order {
        term *= x / k as f64;
        acc += term;
    }
    acc
}

/// Truncated cos: sum_{k=0}^{order} (-1)^k x^{2k} / (2k)!.
pub fn cos_taylor(x: f64, order: usize) -> f64 {
    let x2 = x * x;
    let mut term = 1.0;
    let mut acc = 1.0;
    for k in 1..=order {
        term *= -x2 / ((2 * k - 1) as f64 * (2 * k) as f64);
        acc += term;
    }
    acc
}

/// Plaintext truncated-Taylor integrand: the reference the homomorphic
/// point evaluation must match (sin^2 = 1 - cos^2, exact inverses).
pub fn integrand_taylor(
    y: f64,
    phi: f64,
    sigma_x: f64,
    sigma_z: f64,
    exp_order: usize,
    cos_order: usize,
) -> f64 {
    let c = cos_taylor(phi, cos_order);
    let c2 = c * c;
    let s2 = 1.0 - c2;
    let t = -0.5 * y * y * (c2 / (sigma_x * sigma_x) + s2 / (sigma_z * sigma_z));
    y / (std::f64::consts::TAU * sigma_x * sigma_z) * exp_taylor(t, exp_order)
}

/// Series coefficients for the homomorphic evaluation. The cos series is
/// evaluated in the normalized square u = (x / 2pi)^2, so its coefficients
/// absorb the (2pi)^{2k} factors; this keeps every homomorphic power at
/// magnitude <= 1 and the plaintext coefficients within ~2^14 of each
/// other, where Delta-scale coefficient quantization is harmless.
pub fn series_coefficients(kind: SeriesKind, order: usize) -> Vec<f64> {
    match kind {
        SeriesKind::Exp => {
            let mut c = Vec::with_capacity(order + 1);
            let mut f = 1.0;
            c.push(1.0);
            for k in 1..=order {
                f /= k as f64;
                c.push(f);
            }
            c
        }
        SeriesKind::Cos => {
            let tau2 = std::f64::consts::TAU * std::f64::consts::TAU;
            let mut c = Vec::with_capacity(order + 1);
            let mut f = 1.0;
            c.push(1.0);
            for k in 1..=order {
                f *= -tau2 / ((2 * k - 1) as f64 * (2 * k) as f64);
                c.push(f);
            }
            c
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Exp,
    Cos,
}

/// Levels one series evaluation consumes from the argument's level.
pub fn series_depth(strategy: EvalStrategy, kind: SeriesKind, order: usize) -> usize {
    let core = match strategy {
        EvalStrategy::PowerBasis => {
            if order <= 1 {
                1
            } else {
                (usize::BITS - (order - 1).leading_zeros()) as usize + 1
            }
        }
        EvalStrategy::Horner => order.max(1),
    };
    match kind {
        SeriesKind::Exp => core,
        // argument normalization (x / 2pi) plus the squaring
        SeriesKind::Cos => core + 2,
    }
}

/// Homomorphic truncated series of `kind` at `ct_x`.
///
/// Exp is evaluated directly in x (accurate for the |x| <~ 1 arguments the
/// integrand produces). Cos normalizes the argument to x / 2pi, squares it,
/// and evaluates the even series in the normalized square; no range
/// reduction is applied beyond that fixed rescaling, so low orders at
/// x = 2pi blow up exactly like the plaintext truncated series.
pub fn taylor_series_eval(
    evaluator: &Evaluator,
    kind: SeriesKind,
    ct_x: &Ciphertext,
    order: usize,
    strategy: EvalStrategy,
    relin: &KeySwitchKey,
    counter: &mut OpCounter,
) -> Result<Ciphertext, PipelineError> {
    if ct_x.level() < series_depth(strategy, kind, order) {
        return Err(PipelineError::Ckks(CkksError::OutOfLevels));
    }
    let coeffs = series_coefficients(kind, order);
    let arg = match kind {
        SeriesKind::Exp => ct_x.clone(),
        SeriesKind::Cos => {
            let params = evaluator.params();
            let inv_tau = evaluator.encode(
                &vec![1.0 / std::f64::consts::TAU; params.slot_count()],
                ct_x.level(),
                params.scale(),
            )?;
            counter.mult_rescaling();
            let normalized = evaluator.mult_plain(ct_x, &inv_tau)?;
            counter.mult_rescaling();
            evaluator.mult(&normalized, &normalized, relin)?
        }
    };
    match strategy {
        EvalStrategy::PowerBasis => power_basis_eval(evaluator, &arg, &coeffs, relin, counter),
        EvalStrategy::Horner => horner_eval(evaluator, &arg, &coeffs, relin, counter),
    }
}

/// Power-basis evaluation: powers by repeated products, then a single
/// plaintext-coefficient combination at a common scale, one final rescale.
/// Consumes ceil(log2(order)) + 1 levels.
pub fn power_basis_eval(
    evaluator: &Evaluator,
    ct_x: &Ciphertext,
    coeffs: &[f64],
    relin: &KeySwitchKey,
    counter: &mut OpCounter,
) -> Result<Ciphertext, PipelineError> {
    let order = coeffs.len() - 1;
    if order == 0 {
        return Err(PipelineError::Ckks(CkksError::InvalidParams(
            "constant series".into(),
        )));
    }
    let depth = series_depth(EvalStrategy::PowerBasis, SeriesKind::Exp, order);
    if ct_x.level() < depth {
        return Err(PipelineError::Ckks(CkksError::OutOfLevels));
    }
    // powers[k] holds ct_x^k
    let mut powers: Vec<Option<Ciphertext>> = vec![None; order + 1];
    powers[1] = Some(ct_x.clone());
    for k in 2..=order {
        let half = 1usize << (usize::BITS - 1 - k.leading_zeros());
        let (a_idx, b_idx) = if half == k {
            (half / 2, half / 2)
        } else {
            (half, k - half)
        };
        if powers[a_idx].is_none() || powers[b_idx].is_none() {
            // bases are always filled in increasing order
            continue;
        }
        let a = powers[a_idx].clone().unwrap();
        let b = powers[b_idx].clone().unwrap();
        let target = a.level().min(b.level());
        let a = evaluator.mod_drop_to_level(&a, target)?;
        let b = evaluator.mod_drop_to_level(&b, target)?;
        counter.mult_rescaling();
        powers[k] = Some(evaluator.mult(&a, &b, relin)?);
    }

    // combination: encode each coefficient so every term lands on the
    // same scale, then one rescale
    let params = evaluator.params();
    let floor_level = powers
        .iter()
        .flatten()
        .map(|c| c.level())
        .min()
        .expect("at least one power");
    let target_scale = params.scale() * params.scale();
    let mut acc: Option<Ciphertext> = None;
    for (k, c_k) in coeffs.iter().enumerate().skip(1) {
        if *c_k == 0.0 {
            continue;
        }
        let p = powers[k].as_ref().expect("power computed");
        let p = evaluator.mod_drop_to_level(p, floor_level)?;
        let weight = evaluator.encode(
            &vec![*c_k; params.slot_count()],
            floor_level,
            target_scale / p.scale(),
        )?;
        counter.mult_kept();
        let term = evaluator.mult_plain_keep_scale(&p, &weight)?;
        acc = Some(match acc {
            None => term,
            Some(a) => {
                counter.add(1);
                evaluator.add(&a, &term)?
            }
        });
    }
    let mut acc = acc.expect("non-constant series");
    if coeffs[0] != 0.0 {
        let constant = evaluator.encode(
            &vec![coeffs[0]; params.slot_count()],
            floor_level,
            acc.scale(),
        )?;
        counter.add(1);
        acc = evaluator.add_plain(&acc, &constant)?;
    }
    counter.rescale();
    Ok(evaluator.rescale(&acc)?)
}

/// Horner evaluation: `order` levels, one ct-ct product per step.
pub fn horner_eval(
    evaluator: &Evaluator,
    ct_x: &Ciphertext,
    coeffs: &[f64],
    relin: &KeySwitchKey,
    counter: &mut OpCounter,
) -> Result<Ciphertext, PipelineError> {
    let order = coeffs.len() - 1;
    if ct_x.level() < order {
        return Err(PipelineError::Ckks(CkksError::OutOfLevels));
    }
    let params = evaluator.params();
    let slots = params.slot_count();
    // r = c_N * x + c_{N-1}, then r = r * x + c_k down to c_0
    let top = evaluator.encode(&vec![coeffs[order]; slots], ct_x.level(), params.scale())?;
    counter.mult_rescaling();
    let mut acc = evaluator.mult_plain(ct_x, &top)?;
    let c = evaluator.encode(&vec![coeffs[order - 1]; slots], acc.level(), acc.scale())?;
    counter.add(1);
    acc = evaluator.add_plain(&acc, &c)?;
    for k in (0..order - 1).rev() {
        let x = evaluator.mod_drop_to_level(ct_x, acc.level())?;
        counter.mult_rescaling();
        acc = evaluator.mult(&acc, &x, relin)?;
        let c = evaluator.encode(&vec![coeffs[k]; slots], acc.level(), acc.scale())?;
        counter.add(1);
        acc = evaluator.add_plain(&acc, &c)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_taylor_matches_reference_points() {
        // order 5 at -0.005: truncation far below 1e-12
        assert!((exp_taylor(-0.005, 5) - 0.99501247919268229).abs() < 1e-15);
        assert!((exp_taylor(0.0, 3) - 1.0).abs() < 1e-16);
        // truncation error at order 5 for x ~ 0.42 is ~1e-5-scale relative
        let x: f64 = 0.4243;
        assert!((exp_taylor(x, 5) - x.exp()).abs() < 2e-5);
    }

    #[test]
    fn cos_taylor_low_order_fails_at_full_turn() {
        use std::f64::consts::TAU;
        // the characteristic blow-up: order 5 at 2 pi is off by ~6.4
        let v = cos_taylor(TAU, 5);
        assert!((v - (-5.438247397)).abs() < 1e-6, "got {v}");
        // order 10 is within ~3e-4
        let v = cos_taylor(TAU, 10);
        assert!((v - 1.0).abs() < 3.1e-4, "got {v}");
        assert!((v - 1.0).abs() > 2.9e-4, "got {v}");
    }

    #[test]
    fn integrand_taylor_reproduces_failure_row_magnitudes() {
        use std::f64::consts::TAU;
        let p_true = pcol_core::integrand_p(5.0, TAU, 50.0, 25.0);
        // (N1, N2) = (5, 5): the catastrophic cos failure, ~53.5% relative
        let p55 = integrand_taylor(5.0, TAU, 50.0, 25.0, 5, 5);
        let rel = (p55 - p_true).abs() / p_true;
        assert!((rel - 0.535).abs() < 0.002, "relative error {rel}");
        // (5, 10): ~5.7e-9 absolute
        let p510 = integrand_taylor(5.0, TAU, 50.0, 25.0, 5, 10);
        let abs = (p510 - p_true).abs();
        assert!(abs > 1e-9 && abs < 1e-8, "absolute error {abs:.3e}");
        // (10, 15): truncation vanishes
        let p1015 = integrand_taylor(5.0, TAU, 50.0, 25.0, 10, 15);
        assert!((p1015 - p_true).abs() < 1e-13);
    }

    #[test]
    fn coefficients_match_closed_forms() {
        use std::f64::consts::TAU;
        let exp = series_coefficients(SeriesKind::Exp, 4);
        assert_eq!(exp, vec![1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0]);
        // normalized-square cos coefficients: sum c_k v^k with v = (x/2pi)^2
        // equals the mathematical series
        let cos = series_coefficients(SeriesKind::Cos, 8);
        for x in [0.5f64, 2.0, TAU] {
            let v = (x / TAU) * (x / TAU);
            let via_coeffs: f64 = cos
                .iter()
                .enumerate()
                .map(|(k, c)| c * v.powi(k as i32))
                .sum();
            assert!((via_coeffs - cos_taylor(x, 8)).abs() < 1e-10);
        }
    }

    #[test]
    fn series_depths() {
        assert_eq!(series_depth(EvalStrategy::PowerBasis, SeriesKind::Exp, 5), 4);
        assert_eq!(series_depth(EvalStrategy::PowerBasis, SeriesKind::Exp, 10), 5);
        assert_eq!(series_depth(EvalStrategy::PowerBasis, SeriesKind::Exp, 8), 4);
        assert_eq!(series_depth(EvalStrategy::Horner, SeriesKind::Exp, 5), 5);
        assert_eq!(series_depth(EvalStrategy::PowerBasis, SeriesKind::Cos, 10), 7);
    }
}
