use crate::cost::{p_norm, GroundCost, PNormParams};
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::instance::{Alpha, DualCertificate, LiftedInstance, OutcomeSet, SigmaFieldSpec, TransportRecord, WorstCaseCoupling};
use crate::lifting::LiftedCost;

use super::kl::{active_atoms, all_nominal_records, balance_ties, reachable_sup, transforms, zero_radius};
use super::search::{minimize_over_log_lambda, SearchOptions};

fn ground_of(inst: &LiftedInstance) -> Result<&GroundCost> {
    let LiftedCost::WassersteinWeightGuard { ground } = &inst.cost else {
        return Err(Error::Unsupported(format!(
            "the Wasserstein solver needs a Wasserstein lift, got the {} family",
            inst.cost.family()
        )));
    };
    if inst.sigma_field != SigmaFieldSpec::Trivial {
        return Err(Error::Unsupported("the Wasserstein solver needs the trivial sigma-field".into()));
    }
    if inst.loss.dim() != inst.v_dim() {
        return Err(Error::Dimension {
            expected: inst.v_dim(),
            got: inst.loss.dim(),
        });
    }
    Ok(ground)
}

/// `λr + E_ν̂[ℓ_λ(V̂)]`.
pub fn wasserstein_dual_objective(inst: &LiftedInstance, lam: f64) -> Result<Ext> {
    let ground = ground_of(inst)?;
    let atoms = active_atoms(inst);
    Ok(match transforms(inst, ground, lam, &atoms)? {
        None => Ext::Infinite,
        Some(tr) => Ext::from_f64(
            lam * inst.radius
                + atoms
                    .iter()
                    .zip(&tr)
                    .map(|(&i, r)| inst.nominal_mass(i) * r.value.to_f64())
                    .sum::<f64>(),
        ),
    })
}

/// Unit `p`-norm direction `u` with `aᵀu = ‖a‖_q`.
fn steepest_direction(a: &[f64], p: Ext) -> Vec<f64> {
    let q = match p {
        Ext::Infinite => Ext::Finite(1.0),
        Ext::Finite(p) if p == 1.0 => Ext::Infinite,
        Ext::Finite(p) => Ext::Finite(p / (p - 1.0)),
    };
    let norm = p_norm(a, q);
    match q {
        Ext::Infinite => {
            let j = (0..a.len())
                .max_by(|&x, &y| a[x].abs().partial_cmp(&a[y].abs()).expect("finite").then(y.cmp(&x)))
                .expect("nonempty");
            let mut u = vec![0.0; a.len()];
            u[j] = a[j].signum();
            u
        }
        Ext::Finite(q) if q == 1.0 => a.iter().map(|x| if *x == 0.0 { 0.0 } else { x.signum() }).collect(),
        Ext::Finite(q) => a.iter().map(|x| x.signum() * (x.abs() / norm).powf(q - 1.0)).collect(),
    }
}

/// Relative gap between `λ⋆` and a piece's dual-norm slope under which the
/// piece counts as steepest. The dual is flat to the right of the kink only
/// up to the search tolerance.
const NORM_KINK_TOL: f64 = 1e-6;

/// Largest shortfall of a push against the dual, relative to `1 + |ℓ(v̂)|`.
const PUSH_TOL: f64 = 1e-9;

/// Under a norm cost every `ℓ_λ` maximizer is `v̂` itself, so whatever
/// budget the records leave unspent goes into pushing one atom along a piece
/// whose dual-norm slope reaches `slope_floor`.
///
/// If that piece is active at `v̂` the whole atom moves. Otherwise the sup is
/// approached, not attained: a fraction `ε` of the atom travels far enough
/// along the piece that the shortfall `εν̂_i w_i (ℓ(v̂) − ℓ_k(v̂))` stays below
/// [`PUSH_TOL`], and the atom is split into two records.
pub(crate) fn push_leftover(
    inst: &LiftedInstance,
    p: Ext,
    slope_floor: f64,
    theta1: f64,
    atoms: &[usize],
    records: Vec<TransportRecord>,
) -> Result<Vec<TransportRecord>> {
    let spent: f64 = records
        .iter()
        .map(|x| x.nominal_mass * inst.cost.eval(&x.perturbed, x.weight, &x.nominal, 1.0).to_f64())
        .sum();
    let leftover = inst.radius - spent;
    if leftover <= 1e-12 * (1.0 + inst.radius) {
        return Ok(records);
    }
    let q = GroundCost::PNorm(PNormParams { p }).dual_exponent().expect("norm kind");
    let mut best: Option<(f64, usize, Vec<f64>, f64)> = None;
    for &i in atoms {
        let (m, w) = (inst.nominal_mass(i), records[i].weight);
        if w <= 0.0 {
            continue;
        }
        let v_hat = inst.nominal_v(i);
        let here = inst.loss_at(v_hat)?;
        for pc in inst.loss.pieces_at(v_hat)?.pieces() {
            let slope = p_norm(&pc.a, q);
            if slope == 0.0 || slope < slope_floor * (1.0 - NORM_KINK_TOL) {
                continue;
            }
            let below = here - pc.eval(v_hat);
            let eps = if below > 0.0 {
                (PUSH_TOL * (1.0 + here.abs()) / (m * w * below)).min(1.0)
            } else {
                1.0
            };
            let u = steepest_direction(&pc.a, p);
            let t = leftover / (theta1 * eps * m * w);
            let v: Vec<f64> = v_hat.iter().zip(&u).map(|(x, d)| x + t * d).collect();
            let gain = eps * m * w * (inst.loss_at(&v)? - here);
            if best.as_ref().is_none_or(|b| gain > b.0) {
                best = Some((gain, i, v, eps));
            }
        }
    }
    let Some((gain, i, v, eps)) = best.filter(|b| b.0 > 0.0) else {
        return Ok(records);
    };
    let mut out = Vec::with_capacity(records.len() + 1);
    for (k, rec) in records.into_iter().enumerate() {
        if k != i {
            out.push(rec);
        } else if eps == 1.0 {
            out.push(TransportRecord {
                perturbed: v.clone(),
                ..rec
            });
        } else {
            let m = rec.nominal_mass;
            out.push(TransportRecord {
                nominal_mass: (1.0 - eps) * m,
                ..rec.clone()
            });
            out.push(TransportRecord {
                perturbed: v.clone(),
                nominal_mass: eps * m,
                ..rec
            });
        }
    }
    log::debug!("pushed atom {i} (fraction {eps:e}) for a gain of {gain:e}");
    Ok(out)
}

/// Worst-case records of a Wasserstein lift at a certificate.
pub(crate) fn wasserstein_records(inst: &LiftedInstance, cert: &DualCertificate) -> Result<Vec<TransportRecord>> {
    let ground = ground_of(inst)?;
    if inst.radius == 0.0 {
        return Ok(all_nominal_records(inst, 1.0));
    }
    let atoms = active_atoms(inst);
    let lam = cert.lambda_star;
    if let GroundCost::PNorm(PNormParams { p }) = ground {
        if inst.value_domain.outcome_set == OutcomeSet::FullSpace && lam > 0.0 {
            return push_leftover(inst, *p, lam, 1.0, &atoms, all_nominal_records(inst, 1.0));
        }
    }
    let tr = transforms(inst, ground, lam, &atoms)?
        .ok_or_else(|| Error::Numerical("d-transform is infinite at the certificate multiplier".into()))?;
    let mut records = all_nominal_records(inst, 1.0);
    for (&i, r) in atoms.iter().zip(&tr) {
        records[i].perturbed = r.maximizer.clone().expect("finite d-transform has a maximizer");
    }
    Ok(balance_ties(inst, &atoms, &tr, records))
}

/// Minimizes `λr + E_ν̂[ℓ_λ(V̂)]` over `λ ≥ 0` on a Wasserstein lift.
pub fn solve_wasserstein(inst: &LiftedInstance, opts: &SearchOptions) -> Result<WorstCaseCoupling> {
    inst.validate()?;
    let ground = ground_of(inst)?;
    const METHOD: &str = "wasserstein";
    if inst.radius == 0.0 {
        return zero_radius(inst, METHOD, opts);
    }
    let atoms = active_atoms(inst);
    let mut failure = None;
    let search = minimize_over_log_lambda(
        |lam| match wasserstein_dual_objective(inst, lam) {
            Ok(v) => v.to_f64(),
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
        let (limit, _) = reachable_sup(inst, ground, &atoms)?;
        if let Ext::Finite(top) = limit {
            if top <= search.value + 1e-12 * (1.0 + top.abs()) {
                notes.push("multiplier collapsed to the lower guard; reporting the lambda -> 0 limit".into());
                let cert = DualCertificate {
                    lambda_star: 0.0,
                    alpha_star: Alpha::Scalar(0.0),
                    objective: top,
                    iterations: search.iterations,
                    tolerance_achieved: search.width,
                };
                let records = wasserstein_records(inst, &cert)?;
                return WorstCaseCoupling::assemble(records, cert, &inst.loss, METHOD, true, notes);
            }
        }
    }
    let cert = DualCertificate {
        lambda_star: search.lambda,
        alpha_star: Alpha::Scalar(0.0),
        objective: search.value,
        iterations: search.iterations,
        tolerance_achieved: search.width,
    };
    let records = wasserstein_records(inst, &cert)?;
    let converged = search.width <= opts.tol && !search.probe_warning;
    WorstCaseCoupling::assemble(records, cert, &inst.loss, METHOD, converged, notes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::lift_wasserstein;
    use crate::loss::{Loss, PiecewiseAffineLoss};
    use crate::measure::DiscreteMeasure;

    fn identity() -> Loss {
        PiecewiseAffineLoss::from_pairs(vec![(vec![1.0], 0.0)]).unwrap().into()
    }

    #[test]
    fn norm_push_survives_a_multiplier_just_past_the_kink() {
        let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![1.0], 0.0), (vec![-1.0], 0.5)])
            .unwrap()
            .into();
        let mu = DiscreteMeasure::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0.3, 0.3, 0.4]).unwrap();
        let inst = lift_wasserstein(loss, GroundCost::p_norm(1.0).unwrap(), &mu, 0.2, None).unwrap();
        let out = solve_wasserstein(&inst, &SearchOptions::default()).unwrap();
        assert!((out.certificate.objective - (inst.nominal_risk().unwrap() + 0.2)).abs() < 1e-7);
        assert!((out.diagnostics.primal_value - out.certificate.objective).abs() < 1e-7);
    }

    #[test]
    fn one_norm_identity_loss() {
        let mu = DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0]]).unwrap();
        let inst = lift_wasserstein(identity(), GroundCost::p_norm(1.0).unwrap(), &mu, 0.5, None).unwrap();
        let out = solve_wasserstein(&inst, &SearchOptions::default()).unwrap();
        assert!((out.certificate.objective - 1.0).abs() < 1e-8);
        assert!((out.certificate.lambda_star - 1.0).abs() < 1e-6);
        assert!((out.diagnostics.primal_value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn quadratic_closed_form() {
        // ℓ(v) = 2v with squared cost: λr + E[2v̂] + 1/λ, minimized at λ = 1/√r.
        let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![2.0], 0.0)]).unwrap().into();
        let mu = DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0]]).unwrap();
        let r = 0.25;
        let inst = lift_wasserstein(loss, GroundCost::squared_euclidean(), &mu, r, None).unwrap();
        let out = solve_wasserstein(&inst, &SearchOptions::default()).unwrap();
        assert!((out.certificate.objective - (1.0 + 2.0 * r.sqrt())).abs() < 1e-10);
        assert!((out.diagnostics.primal_value - out.certificate.objective).abs() < 1e-6);
    }

    #[test]
    fn two_norm_direction() {
        let u = steepest_direction(&[3.0, 4.0], Ext::Finite(2.0));
        assert!((u[0] - 0.6).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15);
        assert_eq!(steepest_direction(&[-3.0, 2.0], Ext::Finite(1.0)), vec![-1.0, 0.0]);
        assert_eq!(steepest_direction(&[-3.0, 2.0], Ext::Infinite), vec![-1.0, 1.0]);
    }
}
