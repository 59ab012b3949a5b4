//! Online homomorphic evaluation of the collision integrand from encrypted
//! sigma inverses, with automatic collaborative refresh when the level
//! budget runs short.

use pcol_core::{build_nodes, KahanSum, QuadratureSpec};
use pcol_ckks::{Ciphertext, CkksError, Evaluator, KeySwitchKey, RotationKeys};
use pcol_threshold::Network;

use crate::counter::{ApproxConfig, OpCounter};
use crate::error::PipelineError;
use crate::geometry_enc::EncryptedGeometry;
use crate::taylor::{cos_taylor, exp_taylor, series_depth, taylor_series_eval, SeriesKind};

/// A point coordinate entering the evaluation as a public constant or as a
/// ciphertext.
#[derive(Debug, Clone)]
pub enum PointInput {
    Plain(f64),
    Encrypted(Ciphertext),
}

/// Source of collaborative refreshes for level-exhausted pipelines.
pub trait Refresher {
    fn refresh_ct(&mut self, ct: &Ciphertext) -> Result<Ciphertext, PipelineError>;
}

/// Single-party mode: no refresh available, pipelines fail with
/// OutOfLevels once the budget is spent.
pub struct NoRefresh;

impl Refresher for NoRefresh {
    fn refresh_ct(&mut self, _ct: &Ciphertext) -> Result<Ciphertext, PipelineError> {
        Err(PipelineError::Ckks(CkksError::OutOfLevels))
    }
}

impl Refresher for Network {
    fn refresh_ct(&mut self, ct: &Ciphertext) -> Result<Ciphertext, PipelineError> {
        Ok(self.refresh(ct)?)
    }
}

/// Refresh `ct` if fewer than `required + reserve` levels remain.
fn ensure_levels(
    ct: Ciphertext,
    required: usize,
    reserve: usize,
    refresher: &mut dyn Refresher,
    counter: &mut OpCounter,
) -> Result<Ciphertext, PipelineError> {
    if ct.level() >= required + reserve {
        return Ok(ct);
    }
    let refreshed = refresher.refresh_ct(&ct)?;
    counter.refresh();
    if refreshed.level() < required + reserve {
        return Err(PipelineError::Ckks(CkksError::OutOfLevels));
    }
    Ok(refreshed)
}

/// Brings a Delta^2-scale input ciphertext down to the working scale.
fn to_working_scale(
    evaluator: &Evaluator,
    ct: &Ciphertext,
    counter: &mut OpCounter,
) -> Result<Ciphertext, PipelineError> {
    let delta = evaluator.params().scale();
    if ct.scale() > 1.5 * delta {
        counter.rescale();
        Ok(evaluator.rescale(ct)?)
    } else {
        Ok(ct.clone())
    }
}

fn align(
    evaluator: &Evaluator,
    a: &Ciphertext,
    b: &Ciphertext,
) -> Result<(Ciphertext, Ciphertext), PipelineError> {
    let level = a.level().min(b.level());
    Ok((
        evaluator.mod_drop_to_level(a, level)?,
        evaluator.mod_drop_to_level(b, level)?,
    ))
}

/// Homomorphic point evaluation of the integrand
/// p(y, phi) = y/(2 pi) * inv_sxsz * exp(-y^2/2 (cos^2 inv_sx2 + sin^2 inv_sz2)).
///
/// Plaintext coordinates enter as exact constants (cos of a plaintext phi
/// is exact); encrypted coordinates run through the truncated Taylor
/// circuits with the configured orders. Refreshes trigger automatically
/// whenever the remaining levels drop below a stage's requirement plus the
/// configured reserve.
#[allow(clippy::too_many_arguments)]
pub fn eval_integrand_encrypted(
    evaluator: &Evaluator,
    geometry: &EncryptedGeometry,
    y: &PointInput,
    phi: &PointInput,
    config: &ApproxConfig,
    relin: &KeySwitchKey,
    refresher: &mut dyn Refresher,
    counter: &mut OpCounter,
) -> Result<Ciphertext, PipelineError> {
    config.validate()?;
    let params = evaluator.params();
    let slots = params.slot_count();
    let delta = params.scale();
    let reserve = config.refresh_reserve_levels;

    let inv_sx2 = to_working_scale(evaluator, &geometry.ct_inv_sx2, counter)?;
    let inv_sz2 = to_working_scale(evaluator, &geometry.ct_inv_sz2, counter)?;
    let inv_sxsz = to_working_scale(evaluator, &geometry.ct_inv_sxsz, counter)?;

    // cos^2 and sin^2 of phi
    let trig = match phi {
        PointInput::Plain(v) => {
            let c = v.cos();
            TrigSquares::Plain {
                cos2: c * c,
                sin2: 1.0 - c * c,
            }
        }
        PointInput::Encrypted(ct_phi) => {
            let ct_phi = to_working_scale(evaluator, ct_phi, counter)?;
            let depth = series_depth(config.strategy, SeriesKind::Cos, config.cos_order) + 1;
            let ct_phi = ensure_levels(ct_phi, depth, reserve, refresher, counter)?;
            let cos = taylor_series_eval(
                evaluator,
                SeriesKind::Cos,
                &ct_phi,
                config.cos_order,
                config.strategy,
                relin,
                counter,
            )?;
            counter.mult_rescaling();
            let cos2 = evaluator.mult(&cos, &cos, relin)?;
            // sin^2 = 1 - cos^2: one negation plus a plaintext constant
            let mut sin2 = evaluator.negate(&cos2);
            let one = evaluator.encode(&vec![1.0; slots], sin2.level(), sin2.scale())?;
            counter.add(1);
            sin2 = evaluator.add_plain(&sin2, &one)?;
            TrigSquares::Encrypted { cos2, sin2 }
        }
    };

    // t = -y^2/2 (cos^2 inv_sx2 + sin^2 inv_sz2)
    let t = match (&trig, y) {
        (TrigSquares::Plain { cos2, sin2 }, PointInput::Plain(yv)) => {
            let f = -0.5 * yv * yv;
            let a = evaluator.encode(&vec![f * cos2; slots], inv_sx2.level(), delta)?;
            let b = evaluator.encode(&vec![f * sin2; slots], inv_sz2.level(), delta)?;
            counter.mult_rescaling();
            let ta = evaluator.mult_plain(&inv_sx2, &a)?;
            counter.mult_rescaling();
            let tb = evaluator.mult_plain(&inv_sz2, &b)?;
            counter.add(1);
            evaluator.add(&ta, &tb)?
        }
        (TrigSquares::Encrypted { cos2, sin2 }, PointInput::Plain(yv)) => {
            let f = -0.5 * yv * yv;
            let fw = evaluator.encode(&vec![f; slots], cos2.level(), delta)?;
            counter.mult_rescaling();
            let cs = evaluator.mult_plain(cos2, &fw)?;
            counter.mult_rescaling();
            let ss = evaluator.mult_plain(sin2, &fw)?;
            let (cs, sx) = align(evaluator, &cs, &inv_sx2)?;
            let (ss, sz) = align(evaluator, &ss, &inv_sz2)?;
            counter.mult_rescaling();
            let ta = evaluator.mult(&cs, &sx, relin)?;
            counter.mult_rescaling();
            let tb = evaluator.mult(&ss, &sz, relin)?;
            counter.add(1);
            evaluator.add(&ta, &tb)?
        }
        (_, PointInput::Encrypted(ct_y)) => {
            let ct_y = to_working_scale(evaluator, ct_y, counter)?;
            let ct_y = ensure_levels(ct_y, 3, reserve, refresher, counter)?;
            counter.mult_rescaling();
            let y2 = evaluator.mult(&ct_y, &ct_y, relin)?;
            let half = evaluator.encode(&vec![-0.5; slots], y2.level(), delta)?;
            counter.mult_rescaling();
            let y2h = evaluator.mult_plain(&y2, &half)?;
            let (cos2, sin2) = match &trig {
                TrigSquares::Plain { cos2, sin2 } => {
                    let c = evaluator.encode(&vec![*cos2; slots], y2h.level(), delta)?;
                    let s = evaluator.encode(&vec![*sin2; slots], y2h.level(), delta)?;
                    counter.mult_rescaling();
                    counter.mult_rescaling();
                    (
                        evaluator.mult_plain(&y2h, &c)?,
                        evaluator.mult_plain(&y2h, &s)?,
                    )
                }
                TrigSquares::Encrypted { cos2, sin2 } => {
                    let (a, b) = align(evaluator, &y2h, cos2)?;
                    counter.mult_rescaling();
                    let c = evaluator.mult(&a, &b, relin)?;
                    let (a, b) = align(evaluator, &y2h, sin2)?;
                    counter.mult_rescaling();
                    let s = evaluator.mult(&a, &b, relin)?;
                    (c, s)
                }
            };
            let (cs, sx) = align(evaluator, &cos2, &inv_sx2)?;
            let (ss, sz) = align(evaluator, &sin2, &inv_sz2)?;
            counter.mult_rescaling();
            let ta = evaluator.mult(&cs, &sx, relin)?;
            counter.mult_rescaling();
            let tb = evaluator.mult(&ss, &sz, relin)?;
            let (ta, tb) = align(evaluator, &ta, &tb)?;
            counter.add(1);
            evaluator.add(&ta, &tb)?
        }
    };

    // exp(t), refreshed first if the budget is short
    let exp_depth = series_depth(config.strategy, SeriesKind::Exp, config.exp_order);
    let t = ensure_levels(t, exp_depth + 1, reserve, refresher, counter)?;
    let exp_t = taylor_series_eval(
        evaluator,
        SeriesKind::Exp,
        &t,
        config.exp_order,
        config.strategy,
        relin,
        counter,
    )?;

    // prefactor y/(2 pi) * inv_sxsz
    let prefactor = match y {
        PointInput::Plain(yv) => {
            let w = evaluator.encode(
                &vec![yv / std::f64::consts::TAU; slots],
                inv_sxsz.level(),
                delta,
            )?;
            counter.mult_rescaling();
            evaluator.mult_plain(&inv_sxsz, &w)?
        }
        PointInput::Encrypted(ct_y) => {
            let ct_y = to_working_scale(evaluator, ct_y, counter)?;
            let w = evaluator.encode(
                &vec![1.0 / std::f64::consts::TAU; slots],
                ct_y.level(),
                delta,
            )?;
            counter.mult_rescaling();
            let scaled = evaluator.mult_plain(&ct_y, &w)?;
            let (a, b) = align(evaluator, &scaled, &inv_sxsz)?;
            counter.mult_rescaling();
            evaluator.mult(&a, &b, relin)?
        }
    };
    let (e, p) = align(evaluator, &exp_t, &prefactor)?;
    counter.mult_rescaling();
    Ok(evaluator.mult(&e, &p, relin)?)
}

enum TrigSquares {
    Plain { cos2: f64, sin2: f64 },
    Encrypted { cos2: Ciphertext, sin2: Ciphertext },
}

/// Online encrypted collision probability: evaluates the integrand at
/// every quadrature node (cos of the public node angles enters as
/// truncated-series plaintext constants, exp runs homomorphically),
/// applies the public weights, and reduces across slots.
#[allow(clippy::too_many_arguments)]
pub fn pcol_online(
    evaluator: &Evaluator,
    geometry: &EncryptedGeometry,
    spec: &QuadratureSpec,
    config: &ApproxConfig,
    relin: &KeySwitchKey,
    rotations: &RotationKeys,
    refresher: &mut dyn Refresher,
) -> Result<(Ciphertext, OpCounter), PipelineError> {
    config.validate()?;
    let mut counter = OpCounter::default();
    let params = evaluator.params();
    let slots = params.slot_count();
    let delta = params.scale();
    let nodes = build_nodes(spec, geometry.combined_radius)?;

    let inv_sx2 = to_working_scale(evaluator, &geometry.ct_inv_sx2, &mut counter)?;
    let inv_sz2 = to_working_scale(evaluator, &geometry.ct_inv_sz2, &mut counter)?;
    let inv_sxsz = to_working_scale(evaluator, &geometry.ct_inv_sxsz, &mut counter)?;
    let exp_depth = series_depth(config.strategy, SeriesKind::Exp, config.exp_order);

    let mut total: Option<Ciphertext> = None;
    for chunk in nodes.nodes.chunks(slots) {
        let mut a_vec = Vec::with_capacity(chunk.len());
        let mut b_vec = Vec::with_capacity(chunk.len());
        let mut pre_vec = Vec::with_capacity(chunk.len());
        let mut w_vec = Vec::with_capacity(chunk.len());
        for n in chunk {
            let c = cos_taylor(n.phi, config.cos_order);
            let c2 = c * c;
            let f = -0.5 * n.y * n.y;
            a_vec.push(f * c2);
            b_vec.push(f * (1.0 - c2));
            pre_vec.push(n.y / std::f64::consts::TAU);
            w_vec.push(n.weight);
        }

        let a = evaluator.encode(&a_vec, inv_sx2.level(), delta)?;
        let b = evaluator.encode(&b_vec, inv_sz2.level(), delta)?;
        counter.mult_rescaling();
        let ta = evaluator.mult_plain(&inv_sx2, &a)?;
        counter.mult_rescaling();
        let tb = evaluator.mult_plain(&inv_sz2, &b)?;
        counter.add(1);
        let t = evaluator.add(&ta, &tb)?;

        let t = ensure_levels(t, exp_depth + 1, config.refresh_reserve_levels, refresher, &mut counter)?;
        let exp_t = taylor_series_eval(
            evaluator,
            SeriesKind::Exp,
            &t,
            config.exp_order,
            config.strategy,
            relin,
            &mut counter,
        )?;

        let pre = evaluator.encode(&pre_vec, inv_sxsz.level(), delta)?;
        counter.mult_rescaling();
        let prefactor = evaluator.mult_plain(&inv_sxsz, &pre)?;
        let (e, p) = align(evaluator, &exp_t, &prefactor)?;
        counter.mult_rescaling();
        let p_nodes = evaluator.mult(&e, &p, relin)?;

        // weights applied at kept scale: the reduction then runs at
        // Delta^2 where rotation noise is irrelevant
        let w = evaluator.encode(&w_vec, p_nodes.level(), delta)?;
        counter.mult_kept();
        let weighted = evaluator.mult_plain_keep_scale(&p_nodes, &w)?;
        let reduced = evaluator.sum_slots(&weighted, slots, rotations)?;
        counter.add((usize::BITS - (slots - 1).leading_zeros()) as usize);

        total = Some(match total {
            None => reduced,
            Some(acc) => {
                counter.add(1);
                evaluator.add(&acc, &reduced)?
            }
        });
    }
    Ok((total.expect("at least one node batch"), counter))
}

/// Plaintext truncated-Taylor reference for the online pipeline: identical
/// quadrature, identical truncated series, exact arithmetic.
pub fn pcol_taylor_reference(
    sigma_x: f64,
    sigma_z: f64,
    r: f64,
    spec: &QuadratureSpec,
    exp_order: usize,
    cos_order: usize,
) -> Result<f64, PipelineError> {
    let nodes = build_nodes(spec, r)?;
    let mut acc = KahanSum::default();
    for n in &nodes.nodes {
        let c = cos_taylor(n.phi, cos_order);
        let c2 = c * c;
        let t = -0.5 * n.y * n.y * (c2 / (sigma_x * sigma_x) + (1.0 - c2) / (sigma_z * sigma_z));
        let p = n.y / (std::f64::consts::TAU * sigma_x * sigma_z) * exp_taylor(t, exp_order);
        acc.add(n.weight * p);
    }
    Ok(acc.value())
}
