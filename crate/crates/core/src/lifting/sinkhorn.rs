use serde::{Deserialize, Serialize};

use crate::cost::GroundCost;
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::instance::{LiftedInstance, SigmaFieldSpec, ValueDomain, INSTANCE_VERSION};
use crate::loss::Loss;
use crate::measure::DiscreteMeasure;
use crate::solvers::log_sum_exp;

use super::{check_common, LiftedCost};

/// Kernel data behind a Sinkhorn lift.
///
/// Row `i` is `κ_{ẑᵢ,ε}`, the reference measure `η` tilted by
/// `exp(−d(z, ẑᵢ)/ε)` and renormalized. The lifted budget is
///
/// ```text
/// r̄ = r + ε · E_μ̂[ log E_η[ exp(−d(Z, Ẑ)/ε) ] ]
/// ```
///
/// and the problem is feasible exactly when `r̄ ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinkhornLiftData {
    pub reference: DiscreteMeasure,
    pub reg_epsilon: f64,
    pub nominal: DiscreteMeasure,
    pub kernel_rows: Vec<DiscreteMeasure>,
    pub radius: f64,
    pub adjusted_radius: f64,
}

/// Builds kernel rows and `r̄` without checking feasibility.
pub fn sinkhorn_kernel(
    ground: &GroundCost,
    mu_hat: &DiscreteMeasure,
    radius: f64,
    reg_epsilon: f64,
    reference: &DiscreteMeasure,
) -> Result<SinkhornLiftData> {
    if !(reg_epsilon > 0.0 && reg_epsilon.is_finite()) {
        return Err(Error::Parameter(format!("reg_epsilon must be > 0, got {reg_epsilon}")));
    }
    if reference.dim() != mu_hat.dim() {
        return Err(Error::Dimension {
            expected: mu_hat.dim(),
            got: reference.dim(),
        });
    }
    ground.validate(mu_hat.dim())?;
    let mut rows = Vec::with_capacity(mu_hat.len());
    let mut mean_log_normalizer = 0.0;
    for (i, (z_hat, m)) in mu_hat.iter().enumerate() {
        // log(η_j · exp(−d/ε)); infinite costs and zero reference mass drop out.
        let logits: Vec<f64> = reference
            .iter()
            .map(|(z, eta)| match ground.eval(z, z_hat) {
                Ext::Finite(d) if eta > 0.0 => eta.ln() - d / reg_epsilon,
                _ => f64::NEG_INFINITY,
            })
            .collect();
        let log_norm = log_sum_exp(&logits);
        if !log_norm.is_finite() {
            return Err(Error::Input(format!(
                "kernel row {i} is empty: the reference measure gives no finite-cost mass near atom {i}"
            )));
        }
        let weights: Vec<f64> = logits.iter().map(|l| (l - log_norm).exp()).collect();
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        rows.push(DiscreteMeasure::new(reference.atoms().to_vec(), weights)?);
        mean_log_normalizer += m * log_norm;
    }
    Ok(SinkhornLiftData {
        reference: reference.clone(),
        reg_epsilon,
        nominal: mu_hat.clone(),
        kernel_rows: rows,
        radius,
        adjusted_radius: radius + reg_epsilon * mean_log_normalizer,
    })
}

/// Sinkhorn ball lifted to `V = Z × Z` with conditional moment constraints
/// on the nominal coordinate `ẑ`.
///
/// Lifted atoms are `(z_j, ẑ_i, 1)` with mass `μ̂_i κ_ij`, the lifted radius
/// is `r̄`, and a negative `r̄` is reported as [`Error::Infeasible`].
pub fn lift_sinkhorn(
    loss: Loss,
    ground: GroundCost,
    mu_hat: &DiscreteMeasure,
    radius: f64,
    reg_epsilon: f64,
    reference: &DiscreteMeasure,
) -> Result<(LiftedInstance, SinkhornLiftData)> {
    check_common(&loss, mu_hat, radius)?;
    let data = sinkhorn_kernel(&ground, mu_hat, radius, reg_epsilon, reference)?;
    let inst = lifted_from_data(loss, &data)?;
    Ok((inst, data))
}

/// Lifted instance described by precomputed kernel data.
pub fn lifted_from_data(loss: Loss, data: &SinkhornLiftData) -> Result<LiftedInstance> {
    if data.adjusted_radius < 0.0 {
        return Err(Error::Infeasible(format!(
            "adjusted Sinkhorn radius is {} < 0",
            data.adjusted_radius
        )));
    }
    let mu_hat = &data.nominal;
    if loss.dim() != mu_hat.dim() {
        return Err(Error::Dimension {
            expected: loss.dim(),
            got: mu_hat.dim(),
        });
    }
    if data.kernel_rows.len() != mu_hat.len() {
        return Err(Error::Input("one kernel row per nominal atom is required".into()));
    }
    let d = mu_hat.dim();
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for ((z_hat, m), row) in mu_hat.iter().zip(&data.kernel_rows) {
        for (z, k) in row.iter() {
            let mut a = z.to_vec();
            a.extend_from_slice(z_hat);
            a.push(1.0);
            atoms.push(a);
            weights.push(m * k);
        }
    }
    let nominal = DiscreteMeasure::with_tolerance(atoms, weights, 1e-10)?;
    let outcomes: Vec<Vec<f64>> = nominal.atoms().iter().map(|a| a[..2 * d].to_vec()).collect();
    let inst = LiftedInstance {
        version: INSTANCE_VERSION,
        loss,
        cost: LiftedCost::SinkhornKlIncrement {
            reg_epsilon: data.reg_epsilon,
        },
        nominal,
        sigma_field: SigmaFieldSpec::ConditionOnNominalAtom {
            coordinates: (d..2 * d).collect(),
        },
        radius: data.adjusted_radius,
        value_domain: ValueDomain::around(&outcomes, 0.0, 2.0 * data.reference.len() as f64)?,
        notes: vec![format!("sinkhorn radius {}, adjusted radius {}", data.radius, data.adjusted_radius)],
    };
    inst.validate()?;
    Ok(inst)
}
