use crate::divergences::EntropyFunction;
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::instance::{Alpha, DualCertificate, LiftedInstance, WorstCaseCoupling};

use super::kl::{active_atoms, boundary_records, interpolated_parts, interpolated_records, reachable_sup, transforms, zero_radius};
use super::search::{bisect_increasing, minimize_over_log_lambda, SearchOptions};

/// Inner minimizer over `α` of `α + s Σ_i m_i φ*((L_i − α)/s)`.
///
/// The objective is convex with derivative `1 − Σ_i m_i t*((L_i − α)/s)`,
/// nonpositive at `min L` and nonnegative at `max L` because `t*(0) = 1`, so
/// the minimizer is the root of the derivative on that interval.
fn inner_alpha(phi: &EntropyFunction, masses: &[f64], ls: &[f64], s: f64) -> (f64, f64) {
    let lo = ls.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slope = |alpha: f64| {
        let mut total = 0.0;
        for (m, l) in masses.iter().zip(ls) {
            match phi.conjugate_argmax((l - alpha) / s) {
                Some(t) => total += m * t,
                None => return f64::NEG_INFINITY,
            }
        }
        1.0 - total
    };
    let alpha = if hi > lo { bisect_increasing(slope, lo, hi, 200) } else { lo };
    let mut value = alpha;
    for (m, l) in masses.iter().zip(ls) {
        match phi.conjugate((l - alpha) / s) {
            Ext::Finite(c) => value += s * m * c,
            Ext::Infinite => return (alpha, f64::INFINITY),
        }
    }
    (alpha, value)
}

/// Minimizes `λr + α + λθ₂ E_ν̂[φ*((ℓ_{λθ₁}(V̂) − α)/(λθ₂))]` over `λ ≥ 0`
/// and `α ∈ ℝ`.
///
/// The outer search is golden section over `log λ`. The inner problem in `α`
/// is solved by bisection on its monotone first-order condition, which makes
/// the extracted weights `w_i⋆ = (φ*)′((ℓ_{λ⋆θ₁}(v̂_i) − α⋆)/(λ⋆θ₂))` average
/// to one at machine precision.
pub fn solve_general_phi(inst: &LiftedInstance, opts: &SearchOptions) -> Result<WorstCaseCoupling> {
    inst.validate()?;
    let parts = interpolated_parts(inst)?;
    let phi = parts.phi;
    if !phi.conjugate_strictly_increasing() {
        return Err(Error::Unsupported(format!(
            "{phi} does not have a strictly increasing conjugate; use kullback-leibler, modified-chi2 or chi-order-n"
        )));
    }
    let method = format!("general-phi:{phi}");
    if inst.radius == 0.0 {
        return zero_radius(inst, &method, opts);
    }
    let atoms = active_atoms(inst);
    let masses: Vec<f64> = atoms.iter().map(|&i| inst.nominal_mass(i)).collect();
    let mut failure = None;
    let search = minimize_over_log_lambda(
        |lam| match transforms(inst, parts.ground, lam * parts.theta1, &atoms) {
            Ok(Some(tr)) => {
                let ls: Vec<f64> = tr.iter().map(|r| r.value.to_f64()).collect();
                lam * inst.radius + inner_alpha(phi, &masses, &ls, lam * parts.theta2).1
            }
            Ok(None) => f64::INFINITY,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        opts,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let search = search?;
    let mut notes = Vec::new();
    if search.probe_warning {
        notes.push("golden-section result exceeded the best log-spaced probe; probe used".into());
    }
    if search.at_lower_bound {
        let (limit, sups) = reachable_sup(inst, parts.ground, &atoms)?;
        if let Ext::Finite(top) = limit {
            if top <= search.value + 1e-12 * (1.0 + top.abs()) {
                notes.push("multiplier collapsed to the lower guard; reporting the lambda -> 0 limit".into());
                let cert = DualCertificate {
                    lambda_star: 0.0,
                    alpha_star: Alpha::Scalar(top),
                    objective: top,
                    iterations: search.iterations,
                    tolerance_achieved: search.width,
                };
                let records = boundary_records(inst, &atoms, &sups, top);
                return WorstCaseCoupling::assemble(records, cert, &inst.loss, &method, true, notes);
            }
        }
    }
    let lam = search.lambda;
    let s = lam * parts.theta2;
    let tr = transforms(inst, parts.ground, lam * parts.theta1, &atoms)?
        .ok_or_else(|| Error::Numerical("d-transform became infinite at the reported multiplier".into()))?;
    let ls: Vec<f64> = tr.iter().map(|r| r.value.to_f64()).collect();
    let (alpha, inner) = inner_alpha(phi, &masses, &ls, s);
    if !inner.is_finite() {
        return Err(Error::Numerical(format!("inner minimization over alpha failed at lambda {lam}")));
    }
    let cert = DualCertificate {
        lambda_star: lam,
        alpha_star: Alpha::Scalar(alpha),
        objective: search.value,
        iterations: search.iterations,
        tolerance_achieved: search.width,
    };
    let records = interpolated_records(inst, &cert)?;
    let converged = search.width <= opts.tol && !search.probe_warning;
    WorstCaseCoupling::assemble(records, cert, &inst.loss, &method, converged, notes)
}
