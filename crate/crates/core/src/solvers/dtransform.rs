use serde::{Deserialize, Serialize};

use crate::cost::{p_norm, GroundCost, PNormParams};
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::instance::{OutcomeSet, ValueDomain};
use crate::loss::{dot, AffinePiece, Loss};
use crate::oracle::grid_argmax;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DTransformMethod {
    ClosedFormNorm,
    ClosedFormQuadratic,
    Grid,
}

/// `ℓ_λ(v̂) = sup_v ℓ(v) − λ·d(v, v̂)` with a maximizer when the value is finite.
#[derive(Clone, Debug, PartialEq)]
pub struct DTransformResult {
    pub value: Ext,
    pub maximizer: Option<Vec<f64>>,
    /// Every maximizer within `BALANCE_TOL` of the top value, the reported
    /// one included. More than one means the sup is attained at several
    /// transport distances.
    pub ties: Vec<Vec<f64>>,
    pub method: DTransformMethod,
}

impl DTransformResult {
    fn infinite(method: DTransformMethod) -> Self {
        DTransformResult {
            value: Ext::Infinite,
            maximizer: None,
            ties: Vec::new(),
            method,
        }
    }
}

/// Relative slack under which two piece values count as tied.
const TIE_TOL: f64 = 1e-12;
/// Relative slack for collecting alternative maximizers. Wider than
/// [`TIE_TOL`] because `λ⋆` is only known to the search tolerance, which
/// splits exact ties at `λ⋆` by about that much.
pub const BALANCE_TOL: f64 = 1e-8;

fn check_inputs(loss: &Loss, cost: &GroundCost, lam: f64, v_hat: &[f64]) -> Result<()> {
    if !(lam >= 0.0) || lam.is_infinite() {
        return Err(Error::Parameter(format!("lambda must be finite and >= 0, got {lam}")));
    }
    if v_hat.len() != loss.dim() {
        return Err(Error::Dimension {
            expected: loss.dim(),
            got: v_hat.len(),
        });
    }
    cost.validate(v_hat.len())?;
    if let Some(j) = loss.label_index() {
        if cost.is_movable(j) {
            return Err(Error::Unsupported(format!(
                "a labelled loss needs a cost that guards its label coordinate {j}"
            )));
        }
    }
    Ok(())
}

/// Picks the largest candidate; near-ties go to the lexicographically
/// smallest maximizer. Also returns the distinct maximizers within
/// `BALANCE_TOL` of the top.
fn best_candidate(cands: Vec<(f64, Vec<f64>)>) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let top = cands.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let slack = TIE_TOL * (1.0 + top.abs());
    let wide = BALANCE_TOL * (1.0 + top.abs());
    let mut ties: Vec<Vec<f64>> = Vec::new();
    for c in cands.iter().filter(|c| c.0 >= top - wide) {
        if !ties.contains(&c.1) {
            ties.push(c.1.clone());
        }
    }
    let v = cands
        .into_iter()
        .filter(|c| c.0 >= top - slack)
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite maximizers"))
        .map(|(_, v)| v)
        .expect("at least one candidate");
    (top, v, ties)
}

fn single(value: f64, v: Vec<f64>, method: DTransformMethod) -> DTransformResult {
    DTransformResult {
        value: Ext::Finite(value),
        maximizer: Some(v.clone()),
        ties: vec![v],
        method,
    }
}

fn from_candidates(cands: Vec<(f64, Vec<f64>)>, method: DTransformMethod) -> DTransformResult {
    let (value, v, ties) = best_candidate(cands);
    DTransformResult {
        value: Ext::Finite(value),
        maximizer: Some(v),
        ties,
        method,
    }
}

/// Closed-form d-transform on `V = ℝ^d`.
///
/// For the norm cost the value is `max_k a_kᵀv̂ + b_k` when every `‖a_k‖_q ≤ λ`
/// and `+∞` otherwise. For the quadratic costs each piece contributes
/// `a_kᵀv̂ + b_k + ‖a_k^F‖²/(4λ)` at `v̂ + a_k^F/(2λ)`, where `a^F` is the
/// movable part of `a`.
pub fn d_transform(loss: &Loss, cost: &GroundCost, lam: f64, v_hat: &[f64]) -> Result<DTransformResult> {
    check_inputs(loss, cost, lam, v_hat)?;
    let pieces = loss.pieces_at(v_hat)?.pieces();
    match cost {
        GroundCost::PNorm(_) => {
            let q = cost.dual_exponent().expect("norm kind");
            if pieces.iter().any(|pc| p_norm(&pc.a, q) > lam) {
                return Ok(DTransformResult::infinite(DTransformMethod::ClosedFormNorm));
            }
            Ok(single(
                loss.pieces_at(v_hat)?.value(v_hat),
                v_hat.to_vec(),
                DTransformMethod::ClosedFormNorm,
            ))
        }
        _ => quadratic_full(pieces, cost, lam, v_hat),
    }
}

fn quadratic_full(pieces: &[AffinePiece], cost: &GroundCost, lam: f64, v_hat: &[f64]) -> Result<DTransformResult> {
    let mut cands = Vec::with_capacity(pieces.len());
    for pc in pieces {
        let af = cost.movable_part(&pc.a);
        let sq: f64 = af.iter().map(|x| x * x).sum();
        let base = pc.eval(v_hat);
        if lam == 0.0 {
            if sq > 0.0 {
                return Ok(DTransformResult::infinite(DTransformMethod::ClosedFormQuadratic));
            }
            cands.push((base, v_hat.to_vec()));
        } else {
            let v: Vec<f64> = v_hat.iter().zip(&af).map(|(x, a)| x + a / (2.0 * lam)).collect();
            cands.push((base + sq / (4.0 * lam), v));
        }
    }
    Ok(from_candidates(cands, DTransformMethod::ClosedFormQuadratic))
}

/// D-transform honoring the domain's outcome set.
///
/// With [`OutcomeSet::FullSpace`] this is [`d_transform`]. On a box the
/// quadratic costs and the 1-norm are solved exactly coordinate by
/// coordinate; other norms use the closed form when no piece is steep enough
/// to move and the lattice search otherwise.
pub fn d_transform_in(loss: &Loss, cost: &GroundCost, lam: f64, v_hat: &[f64], domain: &ValueDomain) -> Result<DTransformResult> {
    if domain.outcome_set == OutcomeSet::FullSpace {
        return d_transform(loss, cost, lam, v_hat);
    }
    check_inputs(loss, cost, lam, v_hat)?;
    if domain.dim() != v_hat.len() {
        return Err(Error::Dimension {
            expected: v_hat.len(),
            got: domain.dim(),
        });
    }
    if !domain.contains(v_hat) {
        return Err(Error::Domain("nominal point lies outside the outcome box".into()));
    }
    let pieces = loss.pieces_at(v_hat)?.pieces();
    let (l, u) = (&domain.lower, &domain.upper);
    match cost {
        GroundCost::PNorm(PNormParams { p }) => {
            let q = cost.dual_exponent().expect("norm kind");
            if pieces.iter().all(|pc| p_norm(&pc.a, q) <= lam) {
                return Ok(single(
                    loss.pieces_at(v_hat)?.value(v_hat),
                    v_hat.to_vec(),
                    DTransformMethod::ClosedFormNorm,
                ));
            }
            if *p != Ext::Finite(1.0) {
                let step = domain.lower.iter().zip(&domain.upper).map(|(a, b)| b - a).fold(0.0, f64::max) / 100.0;
                return d_transform_grid(loss, cost, lam, v_hat, domain, step.max(1e-6));
            }
            let mut cands = Vec::with_capacity(pieces.len());
            for pc in pieces {
                let v: Vec<f64> = (0..v_hat.len())
                    .map(|j| {
                        if pc.a[j].abs() <= lam {
                            v_hat[j]
                        } else if pc.a[j] > 0.0 {
                            u[j]
                        } else {
                            l[j]
                        }
                    })
                    .collect();
                let moved: f64 = v.iter().zip(v_hat).map(|(x, y)| (x - y).abs()).sum();
                cands.push((pc.eval(&v) - lam * moved, v));
            }
            Ok(from_candidates(cands, DTransformMethod::ClosedFormNorm))
        }
        _ => {
            let mut cands = Vec::with_capacity(pieces.len());
            for pc in pieces {
                let v: Vec<f64> = (0..v_hat.len())
                    .map(|j| {
                        if !cost.is_movable(j) || pc.a[j] == 0.0 {
                            v_hat[j]
                        } else if lam == 0.0 {
                            if pc.a[j] > 0.0 {
                                u[j]
                            } else {
                                l[j]
                            }
                        } else {
                            (v_hat[j] + pc.a[j] / (2.0 * lam)).clamp(l[j], u[j])
                        }
                    })
                    .collect();
                let moved: f64 = v.iter().zip(v_hat).map(|(x, y)| (x - y) * (x - y)).sum();
                cands.push((dot(&pc.a, &v) + pc.b - lam * moved, v));
            }
            Ok(from_candidates(cands, DTransformMethod::ClosedFormQuadratic))
        }
    }
}

/// Lattice maximization of `ℓ(v) − λ·d(v, v̂)` over the domain box, with
/// guarded coordinates pinned at `v̂`.
pub fn d_transform_grid(
    loss: &Loss,
    cost: &GroundCost,
    lam: f64,
    v_hat: &[f64],
    domain: &ValueDomain,
    step: f64,
) -> Result<DTransformResult> {
    check_inputs(loss, cost, lam, v_hat)?;
    let mut sub = domain.clone();
    for j in 0..v_hat.len() {
        if !cost.is_movable(j) {
            sub.lower[j] = v_hat[j];
            sub.upper[j] = v_hat[j];
        }
    }
    let pieces = loss.pieces_at(v_hat)?;
    let (v, value) = grid_argmax(
        |v| match cost.eval(v, v_hat) {
            Ext::Finite(c) => pieces.value(v) - lam * c,
            Ext::Infinite => f64::NEG_INFINITY,
        },
        &sub,
        step,
    )?;
    Ok(single(value, v, DTransformMethod::Grid))
}
