use serde::Serialize;

use crate::cost::p_norm;
use crate::error::Result;
use crate::instance::{DualCertificate, LiftedInstance};

use super::build::{atom_pieces, box_split, dot, parts, Shape};
use super::{AffineExpr, Cone, ConicProgram, Family, RowSense};

/// Absolute tolerance on every row and cone.
pub const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub family: Family,
    pub atom: Option<usize>,
    pub piece: Option<usize>,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub skipped: bool,
    pub violations: Vec<Violation>,
    pub max_violation: f64,
    /// `|program objective at the point − certificate objective|`.
    pub objective_gap: f64,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn is_clean(&self) -> bool {
        !self.skipped && self.violations.is_empty()
    }
}

/// Neumaier-compensated sum.
fn compensated(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

fn eval(e: &AffineExpr, x: &[f64]) -> f64 {
    compensated(e.terms.iter().map(|&(j, c)| c * x[j]).chain(std::iter::once(e.constant)))
}

/// Distance by which `(x₁, x₂, x₃)` misses the exponential cone, in units of
/// `x₁` on the `x₂ > 0` branch.
pub fn exp_cone_violation(x1: f64, x2: f64, x3: f64) -> f64 {
    if x2 > 0.0 {
        (x2 * (x3 / x2).exp() - x1).max(0.0)
    } else if x2 == 0.0 {
        (-x1).max(0.0).max(x3.max(0.0))
    } else {
        -x2
    }
}

fn cone_violation(cone: &Cone, v: &[f64]) -> f64 {
    match cone {
        Cone::Nonnegative => v.iter().map(|x| (-x).max(0.0)).fold(0.0, f64::max),
        Cone::Exponential => exp_cone_violation(v[0], v[1], v[2]),
        Cone::QNorm { q } => (p_norm(&v[1..], *q) - v[0]).max(0.0),
        Cone::RotatedQuadratic => {
            let (x, y) = (v[0], v[1]);
            let zz: f64 = v[2..].iter().map(|z| z * z).sum();
            if x > 0.0 {
                (zz / (2.0 * x) - y).max(0.0).max(-y)
            } else {
                (-x).max(-y).max(if zz > 0.0 { f64::INFINITY } else { 0.0 })
            }
        }
    }
}

/// Evaluates every row and cone of `program` at `x`.
pub fn check_point(program: &ConicProgram, x: &[f64], tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    for row in &program.rows {
        let lhs = compensated(row.terms.iter().map(|&(j, c)| c * x[j]).chain(std::iter::once(-row.rhs)));
        let amount = match row.sense {
            RowSense::Le => lhs.max(0.0),
            RowSense::Eq => lhs.abs(),
        };
        if !(amount <= tol) {
            out.push(Violation {
                family: row.family,
                atom: row.atom,
                piece: row.piece,
                amount,
            });
        }
    }
    for cone in &program.cones {
        let v: Vec<f64> = cone.entries.iter().map(|e| eval(e, x)).collect();
        let amount = cone_violation(&cone.cone, &v);
        if !(amount <= tol) {
            out.push(Violation {
                family: cone.family,
                atom: cone.atom,
                piece: cone.piece,
                amount,
            });
        }
    }
    out
}

/// Checks a KL-interpolated certificate against the conic program.
///
/// The point is `λ = λ⋆`, `t = objective − λ⋆r`, `p_i = ℓ_{λ⋆θ₁}(v̂_i)` and
/// `η_i = λ⋆θ₂ exp((p_i − t)/(λ⋆θ₂))`; on a box the `ξ`, `ω`, `s` blocks take
/// the minimizing split of the support-function bound. Violations beyond
/// [`FEASIBILITY_TOL`] are listed, not raised.
pub fn verify_certificate(program: &ConicProgram, cert: &DualCertificate, inst: &LiftedInstance) -> Result<VerificationReport> {
    let parts = parts(inst)?;
    let mut notes = Vec::new();
    if inst.radius == 0.0 {
        notes.push("zero radius: the multiplier is unbounded, so the point lies outside the conic model".into());
        return Ok(VerificationReport {
            skipped: true,
            violations: Vec::new(),
            max_violation: 0.0,
            objective_gap: 0.0,
            notes,
        });
    }
    let n = inst.n_atoms();
    let d = inst.v_dim();
    let lam = cert.lambda_star;
    let mu = lam * parts.theta1;
    let s = lam * parts.theta2;
    let t = cert.objective - lam * inst.radius;
    let mut x = vec![0.0; program.n_vars];
    let block = |name: &str| program.block(name).map(|b| b.start);
    let (Some(b_lam), Some(b_t), Some(b_eta), Some(b_p)) = (block("lambda"), block("t"), block("eta"), block("p")) else {
        return Err(crate::error::Error::Input("program lacks the lambda, t, eta or p block".into()));
    };
    x[b_lam] = lam;
    x[b_t] = t;
    let mut offset = 0;
    for i in 0..n {
        let v_hat = inst.nominal_v(i);
        let mut p = f64::NEG_INFINITY;
        for pc in atom_pieces(inst, i)? {
            let base = dot(&pc.a, v_hat) + pc.b;
            let bound = match parts.shape {
                Shape::NormFull { .. } => base,
                Shape::Quadratic => {
                    let af = parts.ground.movable_part(&pc.a);
                    let sq: f64 = af.iter().map(|z| z * z).sum();
                    if sq == 0.0 {
                        base
                    } else {
                        base + sq / (4.0 * mu)
                    }
                }
                Shape::NormBox { q } => {
                    let (l, u) = (&inst.value_domain.lower, &inst.value_domain.upper);
                    let om = box_split(&pc.a, v_hat, l, u, mu, q);
                    let xi: Vec<f64> = om.iter().zip(&pc.a).map(|(o, a)| o - a).collect();
                    let sig: Vec<f64> = (0..d).map(|j| (om[j] * l[j]).max(om[j] * u[j])).collect();
                    let (b_xi, b_om, b_s) = (block("xi").unwrap_or(0), block("omega").unwrap_or(0), block("s").unwrap_or(0));
                    for j in 0..d {
                        x[b_xi + offset + j] = xi[j];
                        x[b_om + offset + j] = om[j];
                        x[b_s + offset + j] = sig[j];
                    }
                    offset += d;
                    pc.b + compensated(sig.iter().copied().chain(xi.iter().zip(v_hat).map(|(a, b)| -a * b)))
                }
            };
            p = p.max(bound);
        }
        x[b_p + i] = p;
        x[b_eta + i] = if s > 0.0 { s * ((p - t) / s).exp() } else { 0.0 };
    }
    if lam == 0.0 {
        notes.push("lambda* = 0: the exponential cones are checked on their closure branch".into());
    }
    let violations = check_point(program, &x, FEASIBILITY_TOL);
    let max_violation = violations.iter().map(|v| v.amount).fold(0.0, f64::max);
    let objective_gap = (eval(&program.objective, &x) - cert.objective).abs();
    let mut violations = violations;
    if !(objective_gap <= FEASIBILITY_TOL) {
        notes.push(format!("objective differs from the certificate by {objective_gap:e}"));
        violations.push(Violation {
            family: Family::Aggregate,
            atom: None,
            piece: None,
            amount: objective_gap,
        });
    }
    Ok(VerificationReport {
        skipped: false,
        max_violation,
        violations,
        objective_gap,
        notes,
    })
}
