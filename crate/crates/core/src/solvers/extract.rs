use crate::error::{Error, Result};
use crate::instance::{DualCertificate, LiftedInstance, WorstCaseCoupling};
use crate::lifting::LiftedCost;

use super::kl::interpolated_records;
use super::sinkhorn::sinkhorn_records;
use super::wasserstein::wasserstein_records;

/// Rebuilds the worst-case coupling a certificate describes.
///
/// Each nominal atom `(v̂_i, 1)` is carried to `(v_i⋆, w_i⋆)` exactly as the
/// solver that produced `cert` would: d-transform maximizers for the
/// transport part and the conjugate's derivative for the weight. Ties among
/// maximizers go to the lexicographically smallest candidate.
pub fn extract_worst_case(cert: &DualCertificate, inst: &LiftedInstance) -> Result<WorstCaseCoupling> {
    inst.validate()?;
    if !(cert.lambda_star >= 0.0) || !cert.objective.is_finite() {
        return Err(Error::Input("certificate needs lambda_star >= 0 and a finite objective".into()));
    }
    let records = match &inst.cost {
        LiftedCost::Interpolated { .. } => interpolated_records(inst, cert)?,
        LiftedCost::WassersteinWeightGuard { .. } => wasserstein_records(inst, cert)?,
        LiftedCost::SinkhornKlIncrement { .. } => sinkhorn_records(inst, cert)?,
        LiftedCost::PhiIdentityGuard { .. } => {
            return Err(Error::Unsupported(
                "phi-divergence lifts are certified by the oracle, not by a dual solver".into(),
            ))
        }
    };
    WorstCaseCoupling::assemble(records, cert.clone(), &inst.loss, "extract", true, Vec::new())
}
