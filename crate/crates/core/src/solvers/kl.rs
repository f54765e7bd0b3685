use crate::cost::{GroundCost, PNormParams};
use crate::divergences::EntropyFunction;
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::instance::{Alpha, DualCertificate, LiftedInstance, OutcomeSet, SigmaFieldSpec, TransportRecord, WorstCaseCoupling};
use crate::lifting::LiftedCost;

use super::dtransform::{d_transform_in, DTransformResult};
use super::search::{log_sum_exp, minimize_over_log_lambda, SearchOptions};
use super::wasserstein::push_leftover;

/// Parts of an interpolated instance the duals need.
pub(crate) struct Interpolated<'a> {
    pub ground: &'a GroundCost,
    pub phi: &'a EntropyFunction,
    pub theta1: f64,
    pub theta2: f64,
}

pub(crate) fn interpolated_parts(inst: &LiftedInstance) -> Result<Interpolated<'_>> {
    let LiftedCost::Interpolated {
        ground,
        phi,
        theta1,
        theta2,
    } = &inst.cost
    else {
        return Err(Error::Unsupported(format!(
            "this solver needs an interpolated cost, got the {} family",
            inst.cost.family()
        )));
    };
    if inst.sigma_field != SigmaFieldSpec::Trivial {
        return Err(Error::Unsupported("interpolated solvers need the trivial sigma-field".into()));
    }
    if (0..inst.n_atoms()).any(|i| inst.nominal_w(i) != 1.0) {
        return Err(Error::Unsupported("interpolated solvers need unit nominal weights".into()));
    }
    if inst.loss.dim() != inst.v_dim() {
        return Err(Error::Dimension {
            expected: inst.v_dim(),
            got: inst.loss.dim(),
        });
    }
    Ok(Interpolated {
        ground,
        phi,
        theta1: *theta1,
        theta2: *theta2,
    })
}

/// Atoms with positive nominal mass; zero-mass atoms never affect a dual.
pub(crate) fn active_atoms(inst: &LiftedInstance) -> Vec<usize> {
    (0..inst.n_atoms()).filter(|&i| inst.nominal_mass(i) > 0.0).collect()
}

/// `ℓ_{λθ₁}(v̂_i)` for every active atom, or `None` if any is infinite.
pub(crate) fn transforms(inst: &LiftedInstance, ground: &GroundCost, lam: f64, atoms: &[usize]) -> Result<Option<Vec<DTransformResult>>> {
    let mut out = Vec::with_capacity(atoms.len());
    for &i in atoms {
        let r = d_transform_in(&inst.loss, ground, lam, inst.nominal_v(i), &inst.value_domain)?;
        if r.value.is_infinite() {
            return Ok(None);
        }
        out.push(r);
    }
    Ok(Some(out))
}

/// `sup` of `ℓ` over points reachable at finite cost from any active atom:
/// the `λ → 0⁺` limit of the dual objectives.
pub(crate) fn reachable_sup(inst: &LiftedInstance, ground: &GroundCost, atoms: &[usize]) -> Result<(Ext, Vec<DTransformResult>)> {
    let mut best = Ext::Finite(f64::NEG_INFINITY);
    let mut all = Vec::with_capacity(atoms.len());
    for &i in atoms {
        let r = d_transform_in(&inst.loss, ground, 0.0, inst.nominal_v(i), &inst.value_domain)?;
        best = match (best, r.value) {
            (Ext::Finite(a), Ext::Finite(b)) => Ext::Finite(a.max(b)),
            _ => Ext::Infinite,
        };
        all.push(r);
    }
    Ok((best, all))
}

/// `λr + λθ₂ log Σ_i ν̂_i exp(ℓ_{λθ₁}(v̂_i)/(λθ₂))` at `λ > 0`.
pub fn kl_dual_objective(inst: &LiftedInstance, lam: f64) -> Result<Ext> {
    let parts = interpolated_parts(inst)?;
    let atoms = active_atoms(inst);
    Ok(match transforms(inst, parts.ground, lam * parts.theta1, &atoms)? {
        None => Ext::Infinite,
        Some(tr) => Ext::from_f64(kl_value(inst, &atoms, &tr, lam, parts.theta2)),
    })
}

fn kl_value(inst: &LiftedInstance, atoms: &[usize], tr: &[DTransformResult], lam: f64, theta2: f64) -> f64 {
    let s = lam * theta2;
    let logits: Vec<f64> = atoms
        .iter()
        .zip(tr)
        .map(|(&i, r)| inst.nominal_mass(i).ln() + r.value.to_f64() / s)
        .collect();
    lam * inst.radius + s * log_sum_exp(&logits)
}

/// Zero-radius answer shared by the interpolated solvers: the nominal
/// coupling and its risk.
pub(crate) fn zero_radius(inst: &LiftedInstance, method: &str, opts: &SearchOptions) -> Result<WorstCaseCoupling> {
    let risk = inst.nominal_risk()?;
    let records = (0..inst.n_atoms())
        .map(|i| TransportRecord {
            nominal: inst.nominal_v(i).to_vec(),
            nominal_mass: inst.nominal_mass(i),
            perturbed: inst.nominal_v(i).to_vec(),
            weight: 1.0,
        })
        .collect();
    let cert = DualCertificate {
        lambda_star: opts.lambda_max,
        alpha_star: Alpha::Scalar(risk),
        objective: risk,
        iterations: 0,
        tolerance_achieved: 0.0,
    };
    WorstCaseCoupling::assemble(
        records,
        cert,
        &inst.loss,
        method,
        true,
        vec!["zero radius: the ball is the nominal measure; lambda_star reports the search cap".into()],
    )
}

/// Records for the `λ⋆ = 0` boundary: mass moves to reachable maximizers of
/// `ℓ` on the atoms attaining the supremum.
pub(crate) fn boundary_records(inst: &LiftedInstance, atoms: &[usize], sups: &[DTransformResult], top: f64) -> Vec<TransportRecord> {
    let slack = 1e-12 * (1.0 + top.abs());
    let winners: Vec<bool> = sups.iter().map(|r| r.value.to_f64() >= top - slack).collect();
    let mass: f64 = atoms
        .iter()
        .zip(&winners)
        .filter(|(_, &w)| w)
        .map(|(&i, _)| inst.nominal_mass(i))
        .sum();
    let mut records = all_nominal_records(inst, 0.0);
    for ((&i, r), &win) in atoms.iter().zip(sups).zip(&winners) {
        if win {
            records[i].perturbed = r.maximizer.clone().expect("finite supremum has a maximizer");
            records[i].weight = 1.0 / mass;
        }
    }
    records
}

pub(crate) fn all_nominal_records(inst: &LiftedInstance, weight: f64) -> Vec<TransportRecord> {
    (0..inst.n_atoms())
        .map(|i| TransportRecord {
            nominal: inst.nominal_v(i).to_vec(),
            nominal_mass: inst.nominal_mass(i),
            perturbed: inst.nominal_v(i).to_vec(),
            weight,
        })
        .collect()
}

/// Spreads atoms whose d-transform is attained at several points between
/// their cheapest and dearest maximizer so that the coupling spends the
/// budget exactly. One mixing fraction is shared by all atoms; an atom that
/// is split yields two records carrying the same weight.
pub(crate) fn balance_ties(
    inst: &LiftedInstance,
    atoms: &[usize],
    tr: &[DTransformResult],
    records: Vec<TransportRecord>,
) -> Vec<TransportRecord> {
    let cost = |i: usize, v: &[f64], w: f64| inst.cost.eval(v, w, inst.nominal_v(i), inst.nominal_w(i));
    let mut ends: Vec<Option<(Vec<f64>, Vec<f64>)>> = vec![None; records.len()];
    let (mut spend_lo, mut spend_hi) = (0.0, 0.0);
    for (&i, r) in atoms.iter().zip(tr) {
        let w = records[i].weight;
        let priced: Vec<(f64, &Vec<f64>)> = r
            .ties
            .iter()
            .filter_map(|v| match cost(i, v, w) {
                Ext::Finite(c) => Some((c, v)),
                Ext::Infinite => None,
            })
            .collect();
        let m = inst.nominal_mass(i);
        let lo = priced.iter().min_by(|a, b| a.0.total_cmp(&b.0));
        let hi = priced.iter().max_by(|a, b| a.0.total_cmp(&b.0));
        match (lo, hi) {
            (Some(lo), Some(hi)) => {
                spend_lo += m * lo.0;
                spend_hi += m * hi.0;
                ends[i] = Some((lo.1.clone(), hi.1.clone()));
            }
            _ => {
                let c = cost(i, &records[i].perturbed, w).to_f64();
                spend_lo += m * c;
                spend_hi += m * c;
            }
        }
    }
    let t = if spend_lo >= inst.radius {
        0.0
    } else if spend_hi <= inst.radius {
        1.0
    } else {
        (inst.radius - spend_lo) / (spend_hi - spend_lo)
    };
    let mut out = Vec::with_capacity(records.len());
    for (rec, end) in records.into_iter().zip(ends) {
        match end {
            None => out.push(rec),
            Some((lo, hi)) if lo == hi || t == 0.0 => out.push(TransportRecord { perturbed: lo, ..rec }),
            Some((_, hi)) if t == 1.0 => out.push(TransportRecord { perturbed: hi, ..rec }),
            Some((lo, hi)) => {
                let m = rec.nominal_mass;
                out.push(TransportRecord {
                    perturbed: lo,
                    nominal_mass: (1.0 - t) * m,
                    ..rec.clone()
                });
                out.push(TransportRecord {
                    perturbed: hi,
                    nominal_mass: t * m,
                    ..rec
                });
            }
        }
    }
    out
}

/// Worst-case records of an interpolated instance at a certificate.
///
/// At `λ⋆ = 0` the mass moves to reachable maximizers of `ℓ`; otherwise atom
/// `i` moves to its d-transform maximizer with weight
/// `(φ*)′((ℓ_{λ⋆θ₁}(v̂_i) − α⋆)/(λ⋆θ₂))`. Atoms with tied maximizers may be
/// split in two, so there can be more records than nominal atoms. Under a
/// norm cost on the full space the budget left after reweighting moves one
/// atom along a steepest piece.
pub(crate) fn interpolated_records(inst: &LiftedInstance, cert: &DualCertificate) -> Result<Vec<TransportRecord>> {
    let parts = interpolated_parts(inst)?;
    if inst.radius == 0.0 {
        return Ok(all_nominal_records(inst, 1.0));
    }
    let atoms = active_atoms(inst);
    let lam = cert.lambda_star;
    if lam == 0.0 {
        let (_, sups) = reachable_sup(inst, parts.ground, &atoms)?;
        return Ok(boundary_records(inst, &atoms, &sups, cert.objective));
    }
    let Alpha::Scalar(alpha) = cert.alpha_star else {
        return Err(Error::Input("interpolated certificates carry a scalar alpha".into()));
    };
    let s = lam * parts.theta2;
    let tr = transforms(inst, parts.ground, lam * parts.theta1, &atoms)?
        .ok_or_else(|| Error::Numerical("d-transform is infinite at the certificate multiplier".into()))?;
    let mut records = all_nominal_records(inst, 0.0);
    for (&i, r) in atoms.iter().zip(&tr) {
        records[i].perturbed = r.maximizer.clone().expect("finite d-transform has a maximizer");
        records[i].weight = parts
            .phi
            .conjugate_argmax((r.value.to_f64() - alpha) / s)
            .ok_or_else(|| Error::Numerical("conjugate maximizer is unbounded at the certificate".into()))?;
    }
    if let GroundCost::PNorm(PNormParams { p }) = parts.ground {
        if inst.value_domain.outcome_set == OutcomeSet::FullSpace {
            return push_leftover(inst, *p, lam * parts.theta1, parts.theta1, &atoms, records);
        }
    }
    Ok(balance_ties(inst, &atoms, &tr, records))
}

/// Minimizes `λr + λθ₂ log E_ν̂[exp(ℓ_{λθ₁}(V̂)/(λθ₂))]` over `λ ≥ 0`.
///
/// `α⋆ = λ⋆θ₂ log E[exp(ℓ_{λ⋆θ₁}/(λ⋆θ₂))]`, and atom `i` moves to the
/// d-transform maximizer `v_i⋆` with weight
/// `w_i⋆ = exp((ℓ_{λ⋆θ₁}(v̂_i) − α⋆)/(λ⋆θ₂))`, which is the same as
/// `exp((ℓ(v_i⋆) − α⋆)/(λ⋆θ₂) − θ₁ d(v_i⋆, v̂_i)/θ₂)`.
pub fn solve_kl_interpolated(inst: &LiftedInstance, opts: &SearchOptions) -> Result<WorstCaseCoupling> {
    inst.validate()?;
    let parts = interpolated_parts(inst)?;
    if *parts.phi != EntropyFunction::KullbackLeibler {
        return Err(Error::Unsupported(format!(
            "the KL solver needs phi = kullback-leibler, got {}",
            parts.phi
        )));
    }
    const METHOD: &str = "kl-interpolated";
    if inst.radius == 0.0 {
        return zero_radius(inst, METHOD, opts);
    }
    let atoms = active_atoms(inst);
    let mut failure = None;
    let search = minimize_over_log_lambda(
        |lam| match transforms(inst, parts.ground, lam * parts.theta1, &atoms) {
            Ok(Some(tr)) => kl_value(inst, &atoms, &tr, lam, parts.theta2),
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
                return WorstCaseCoupling::assemble(records, cert, &inst.loss, METHOD, true, notes);
            }
        }
    }
    let lam = search.lambda;
    let cert = DualCertificate {
        lambda_star: lam,
        alpha_star: Alpha::Scalar(search.value - lam * inst.radius),
        objective: search.value,
        iterations: search.iterations,
        tolerance_achieved: search.width,
    };
    let records = interpolated_records(inst, &cert)?;
    let converged = search.width <= opts.tol && !search.probe_warning;
    WorstCaseCoupling::assemble(records, cert, &inst.loss, METHOD, converged, notes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::build_interpolated;
    use crate::loss::{Loss, PiecewiseAffineLoss};
    use crate::measure::DiscreteMeasure;

    fn instance(r: f64, theta1: f64, theta2: f64) -> LiftedInstance {
        let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![1.0], 0.0), (vec![-0.5], 0.2)])
            .unwrap()
            .into();
        let mu = DiscreteMeasure::uniform(vec![vec![-1.0], vec![0.0], vec![2.0]]).unwrap();
        build_interpolated(
            loss,
            GroundCost::squared_euclidean(),
            EntropyFunction::KullbackLeibler,
            &mu,
            r,
            theta1,
            theta2,
            None,
        )
        .unwrap()
    }

    #[test]
    fn tied_maximizers_share_the_budget() {
        // Both pieces tie at the optimal multiplier; either maximizer alone
        // misses the budget.
        let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![
            (vec![-1.0474688224175912], 0.05682141585516324),
            (vec![-0.7068871572302988], 0.43123450183809103),
        ])
        .unwrap()
        .into();
        let mu = DiscreteMeasure::uniform(vec![vec![-0.5610545323383475]]).unwrap();
        let r = 0.2652458030138423;
        let inst = build_interpolated(
            loss,
            GroundCost::squared_euclidean(),
            EntropyFunction::KullbackLeibler,
            &mu,
            r,
            1.0,
            1.0,
            None,
        )
        .unwrap();
        let out = solve_kl_interpolated(&inst, &SearchOptions::default()).unwrap();
        assert_eq!(out.records.len(), 2);
        let spent: f64 = out
            .records
            .iter()
            .map(|x| x.nominal_mass * inst.cost.eval(&x.perturbed, x.weight, &x.nominal, 1.0).to_f64())
            .sum();
        assert!((spent - r).abs() < 1e-7, "{spent}");
        assert!((out.diagnostics.primal_value - out.certificate.objective).abs() < 1e-7);
    }

    #[test]
    fn zero_radius_is_empirical() {
        let inst = instance(0.0, 1.0, 1.0);
        let out = solve_kl_interpolated(&inst, &SearchOptions::default()).unwrap();
        assert!((out.certificate.objective - inst.nominal_risk().unwrap()).abs() < 1e-15);
        assert!(out.records.iter().all(|r| r.weight == 1.0 && r.perturbed == r.nominal));
    }

    #[test]
    fn mean_one_and_strong_duality() {
        let inst = instance(0.3, 1.0, 1.0);
        let out = solve_kl_interpolated(&inst, &SearchOptions::default()).unwrap();
        assert!(out.diagnostics.converged);
        assert!((out.mean_weight() - 1.0).abs() < 1e-5, "{}", out.mean_weight());
        assert!((out.diagnostics.primal_value - out.certificate.objective).abs() < 1e-5);
        assert!(out.diagnostics.weak_duality_ok);
    }

    #[test]
    fn objective_matches_direct_evaluation() {
        let inst = instance(0.2, 2.0, 0.5);
        let out = solve_kl_interpolated(&inst, &SearchOptions::default()).unwrap();
        let lam = out.certificate.lambda_star;
        let direct = kl_dual_objective(&inst, lam).unwrap().to_f64();
        assert!((direct - out.certificate.objective).abs() < 1e-12);
        for f in [0.9, 1.1] {
            assert!(kl_dual_objective(&inst, lam * f).unwrap().to_f64() >= out.certificate.objective - 1e-12);
        }
    }

    #[test]
    fn monotone_in_radius() {
        let mut last = f64::NEG_INFINITY;
        for r in [0.0, 0.05, 0.1, 0.5, 1.0] {
            let v = solve_kl_interpolated(&instance(r, 1.0, 1.0), &SearchOptions::default())
                .unwrap()
                .certificate
                .objective;
            assert!(v >= last - 1e-9);
            last = v;
        }
    }

    #[test]
    fn rejects_other_phi() {
        let mut inst = instance(0.1, 1.0, 1.0);
        if let LiftedCost::Interpolated { phi, .. } = &mut inst.cost {
            *phi = EntropyFunction::Hellinger;
        }
        assert!(matches!(
            solve_kl_interpolated(&inst, &SearchOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn constant_loss_hits_lambda_zero_limit() {
        let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![0.0], 1.5)]).unwrap().into();
        let mu = DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0]]).unwrap();
        let inst = build_interpolated(
            loss,
            GroundCost::squared_euclidean(),
            EntropyFunction::KullbackLeibler,
            &mu,
            0.4,
            1.0,
            1.0,
            None,
        )
        .unwrap();
        let out = solve_kl_interpolated(&inst, &SearchOptions::default()).unwrap();
        assert_eq!(out.certificate.lambda_star, 0.0);
        assert_eq!(out.certificate.objective, 1.5);
        assert!((out.mean_weight() - 1.0).abs() < 1e-12);
    }
}
