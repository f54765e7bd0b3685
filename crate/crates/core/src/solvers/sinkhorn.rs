use crate::error::{Error, Result};
use crate::instance::{Alpha, DualCertificate, LiftedInstance, SigmaFieldSpec, TransportRecord, WorstCaseCoupling};
use crate::lifting::{lifted_from_data, LiftedCost, SinkhornLiftData};
use crate::loss::Loss;

use super::kl::all_nominal_records;
use super::search::{log_sum_exp, minimize_over_log_lambda, SearchOptions};

/// One conditioning cell: its mass and, per lifted atom, `(index, κ, ℓ)`.
struct Cell {
    mass: f64,
    entries: Vec<(usize, f64, f64)>,
}

fn cells_of(inst: &LiftedInstance) -> Result<Vec<Cell>> {
    let ids = inst.cells();
    let count = ids.iter().copied().max().map_or(0, |m| m + 1);
    let mut cells: Vec<Cell> = (0..count)
        .map(|_| Cell {
            mass: 0.0,
            entries: Vec::new(),
        })
        .collect();
    for (i, &c) in ids.iter().enumerate() {
        let m = inst.nominal_mass(i);
        if m > 0.0 {
            cells[c].mass += m;
            cells[c].entries.push((i, m, inst.loss_at(inst.nominal_v(i))?));
        }
    }
    cells.retain(|c| c.mass > 0.0);
    for c in &mut cells {
        let total = c.mass;
        for e in &mut c.entries {
            e.1 /= total;
        }
    }
    Ok(cells)
}

/// Per-cell `log Σ_j κ_cj exp(ℓ_j/τ)`.
fn cell_lse(cell: &Cell, tau: f64) -> f64 {
    let logits: Vec<f64> = cell.entries.iter().map(|(_, k, l)| k.ln() + l / tau).collect();
    log_sum_exp(&logits)
}

fn dual_value(cells: &[Cell], radius: f64, reg: f64, lam: f64) -> f64 {
    let tau = lam * reg;
    lam * radius + tau * cells.iter().map(|c| c.mass * cell_lse(c, tau)).sum::<f64>()
}

fn records_with(inst: &LiftedInstance, cells: &[Cell], reg: f64, cert: &DualCertificate) -> Result<Vec<TransportRecord>> {
    if inst.radius == 0.0 {
        return Ok(all_nominal_records(inst, 1.0));
    }
    let Alpha::PerCell(alphas) = &cert.alpha_star else {
        return Err(Error::Input("Sinkhorn certificates carry one alpha per cell".into()));
    };
    if alphas.len() != cells.len() {
        return Err(Error::Dimension {
            expected: cells.len(),
            got: alphas.len(),
        });
    }
    let mut records = all_nominal_records(inst, 0.0);
    let lam = cert.lambda_star;
    for (c, alpha) in cells.iter().zip(alphas) {
        if lam == 0.0 {
            let top = *alpha;
            let slack = 1e-12 * (1.0 + top.abs());
            let k_top: f64 = c.entries.iter().filter(|e| e.2 >= top - slack).map(|e| e.1).sum();
            for &(i, _, l) in &c.entries {
                if l >= top - slack {
                    records[i].weight = 1.0 / k_top;
                }
            }
        } else {
            let tau = lam * reg;
            for &(i, _, l) in &c.entries {
                records[i].weight = ((l - alpha) / tau).exp();
            }
        }
    }
    Ok(records)
}

/// Worst-case records of a Sinkhorn lift at a certificate.
pub(crate) fn sinkhorn_records(inst: &LiftedInstance, cert: &DualCertificate) -> Result<Vec<TransportRecord>> {
    let LiftedCost::SinkhornKlIncrement { reg_epsilon } = inst.cost else {
        return Err(Error::Unsupported("not a Sinkhorn lift".into()));
    };
    records_with(inst, &cells_of(inst)?, reg_epsilon, cert)
}

/// Sinkhorn dual on a lifted instance:
/// `min_{λ≥0} λr̄ + λε Σ_c M_c log Σ_j κ_cj exp(ℓ(z_j)/(λε))`,
/// where `c` runs over conditioning cells of mass `M_c`.
///
/// Worst-case weights are `w_cj = exp(ℓ(z_j)/(λ⋆ε) − log Σ_j κ_cj exp(ℓ(z_j)/(λ⋆ε)))`,
/// so each cell's reweighted kernel is `κ_cj w_cj ∝ κ_cj exp(ℓ(z_j)/(λ⋆ε))`.
/// `α⋆` is reported per cell as `λ⋆ε` times the cell's log-normalizer.
pub fn solve_sinkhorn_lifted(inst: &LiftedInstance, opts: &SearchOptions) -> Result<WorstCaseCoupling> {
    inst.validate()?;
    let LiftedCost::SinkhornKlIncrement { reg_epsilon } = inst.cost else {
        return Err(Error::Unsupported(format!(
            "the Sinkhorn solver needs a Sinkhorn lift, got the {} family",
            inst.cost.family()
        )));
    };
    if !matches!(inst.sigma_field, SigmaFieldSpec::ConditionOnNominalAtom { .. }) {
        return Err(Error::Unsupported("the Sinkhorn solver needs a conditional sigma-field".into()));
    }
    if (0..inst.n_atoms()).any(|i| inst.nominal_w(i) != 1.0) {
        return Err(Error::Unsupported("the Sinkhorn solver needs unit nominal weights".into()));
    }
    const METHOD: &str = "sinkhorn";
    let cells = cells_of(inst)?;
    let r = inst.radius;
    if r == 0.0 {
        let risk = inst.nominal_risk()?;
        let cert = DualCertificate {
            lambda_star: opts.lambda_max,
            alpha_star: Alpha::PerCell(cells.iter().map(|c| c.entries.iter().map(|e| e.1 * e.2).sum()).collect()),
            objective: risk,
            iterations: 0,
            tolerance_achieved: 0.0,
        };
        return WorstCaseCoupling::assemble(
            all_nominal_records(inst, 1.0),
            cert,
            &inst.loss,
            METHOD,
            true,
            vec!["zero adjusted radius: the kernel coupling is the only feasible point".into()],
        );
    }
    let search = minimize_over_log_lambda(|lam| dual_value(&cells, r, reg_epsilon, lam), opts)?;
    let mut notes = Vec::new();
    if search.probe_warning {
        notes.push("golden-section result exceeded the best log-spaced probe; probe used".into());
    }
    let limit: f64 = cells
        .iter()
        .map(|c| c.mass * c.entries.iter().map(|e| e.2).fold(f64::NEG_INFINITY, f64::max))
        .sum();
    let cert = if search.at_lower_bound && limit <= search.value + 1e-12 * (1.0 + limit.abs()) {
        notes.push("multiplier collapsed to the lower guard; reporting the lambda -> 0 limit".into());
        DualCertificate {
            lambda_star: 0.0,
            alpha_star: Alpha::PerCell(
                cells
                    .iter()
                    .map(|c| c.entries.iter().map(|e| e.2).fold(f64::NEG_INFINITY, f64::max))
                    .collect(),
            ),
            objective: limit,
            iterations: search.iterations,
            tolerance_achieved: search.width,
        }
    } else {
        let tau = search.lambda * reg_epsilon;
        DualCertificate {
            lambda_star: search.lambda,
            alpha_star: Alpha::PerCell(cells.iter().map(|c| tau * cell_lse(c, tau)).collect()),
            objective: search.value,
            iterations: search.iterations,
            tolerance_achieved: search.width,
        }
    };
    let records = records_with(inst, &cells, reg_epsilon, &cert)?;
    let converged = search.width <= opts.tol && !search.probe_warning;
    WorstCaseCoupling::assemble(records, cert, &inst.loss, METHOD, converged, notes)
}

/// Sinkhorn dual from kernel data; `r̄ < 0` is reported as infeasible.
pub fn solve_sinkhorn(data: &SinkhornLiftData, loss: &Loss, opts: &SearchOptions) -> Result<WorstCaseCoupling> {
    let inst = lifted_from_data(loss.clone(), data)?;
    solve_sinkhorn_lifted(&inst, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::GroundCost;
    use crate::lifting::{lift_sinkhorn, sinkhorn_kernel};
    use crate::loss::PiecewiseAffineLoss;
    use crate::measure::DiscreteMeasure;

    fn identity() -> Loss {
        PiecewiseAffineLoss::from_pairs(vec![(vec![1.0], 0.0)]).unwrap().into()
    }

    fn two_point_data(radius_bar: f64) -> SinkhornLiftData {
        SinkhornLiftData {
            reference: DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0]]).unwrap(),
            reg_epsilon: 1.0,
            nominal: DiscreteMeasure::point_mass(vec![0.5]),
            kernel_rows: vec![DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0]]).unwrap()],
            radius: radius_bar,
            adjusted_radius: radius_bar,
        }
    }

    #[test]
    fn zero_budget_is_kernel_risk() {
        let out = solve_sinkhorn(&two_point_data(0.0), &identity(), &SearchOptions::default()).unwrap();
        assert!((out.certificate.objective - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_point_closed_form() {
        // KL ball of radius b around (½, ½) with losses (0, 1): the optimum puts
        // q on the atom with loss 1 where q log 2q + (1−q) log 2(1−q) = b.
        let b = 0.1;
        let out = solve_sinkhorn(&two_point_data(b), &identity(), &SearchOptions::default()).unwrap();
        let kl = |q: f64| q * (2.0 * q).ln() + (1.0 - q) * (2.0 * (1.0 - q)).ln();
        let (mut lo, mut hi) = (0.5, 1.0 - 1e-15);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if kl(mid) < b {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!(
            (out.certificate.objective - lo).abs() < 1e-7,
            "{} vs {lo}",
            out.certificate.objective
        );
        assert!((out.mean_weight() - 1.0).abs() < 1e-9);
        assert!((out.diagnostics.primal_value - out.certificate.objective).abs() < 1e-7);
    }

    #[test]
    fn constant_loss_any_budget() {
        let flat: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![0.0], 2.5)]).unwrap().into();
        for b in [0.0, 0.3, 5.0] {
            let out = solve_sinkhorn(&two_point_data(b), &flat, &SearchOptions::default()).unwrap();
            assert!((out.certificate.objective - 2.5).abs() < 1e-9);
        }
    }

    #[test]
    fn infeasible_data_reported() {
        let mut data = two_point_data(0.1);
        data.adjusted_radius = -0.2;
        assert!(matches!(
            solve_sinkhorn(&data, &identity(), &SearchOptions::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn large_budget_saturates() {
        let mu = DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0]]).unwrap();
        let eta = DiscreteMeasure::uniform(vec![vec![0.0], vec![0.5], vec![1.0]]).unwrap();
        let d = GroundCost::p_norm(1.0).unwrap();
        let data = sinkhorn_kernel(&d, &mu, 50.0, 0.5, &eta).unwrap();
        let out = solve_sinkhorn(&data, &identity(), &SearchOptions::default()).unwrap();
        assert!((out.certificate.objective - 1.0).abs() < 1e-6);
        let (inst, _) = lift_sinkhorn(identity(), d, &mu, 50.0, 0.5, &eta).unwrap();
        let again = solve_sinkhorn_lifted(&inst, &SearchOptions::default()).unwrap();
        assert_eq!(again.certificate, out.certificate);
    }
}
