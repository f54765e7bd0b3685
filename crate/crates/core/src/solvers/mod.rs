//! Dual reformulations of the lifted worst-case problem and extraction of
//! worst-case couplings.
//!
//! | solver                   | instance                              | search                         |
//! |--------------------------|---------------------------------------|--------------------------------|
//! | [`solve_kl_interpolated`] | interpolated cost, `φ = KL`           | golden section over `log λ`    |
//! | [`solve_general_phi`]     | interpolated cost, strictly increasing `φ*` | `log λ` outer, `α` inner |
//! | [`solve_sinkhorn`]        | Sinkhorn lift                         | golden section over `log λ`    |
//! | [`solve_wasserstein`]     | Wasserstein lift                      | golden section over `log λ`    |
//!
//! Every solver returns a [`WorstCaseCoupling`]
//! whose diagnostics carry the primal value of the extracted coupling and a
//! weak-duality check.

mod dtransform;
mod extract;
mod general_phi;
mod kl;
mod search;
mod sinkhorn;
mod wasserstein;

pub use dtransform::{d_transform, d_transform_grid, d_transform_in, DTransformMethod, DTransformResult};
pub use extract::extract_worst_case;
pub use general_phi::solve_general_phi;
pub use kl::{kl_dual_objective, solve_kl_interpolated};
pub use search::{
    bisect_increasing, golden_section, log_sum_exp, minimize_over_log_lambda, GoldenResult, LambdaSearch, SearchOptions, LAMBDA_MAX,
    LAMBDA_MIN, MAX_ITERATIONS, PROBES, SEARCH_TOL,
};
pub use sinkhorn::{solve_sinkhorn, solve_sinkhorn_lifted};
pub use wasserstein::{solve_wasserstein, wasserstein_dual_objective};

use serde::{Deserialize, Serialize};

use crate::divergences::EntropyFunction;
use crate::error::{Error, Result};
use crate::instance::{Alpha, Diagnostics, DualCertificate, LiftedInstance, TransportRecord, WorstCaseCoupling};
use crate::lifting::LiftedCost;

/// Which dual a lifted instance is solved with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Kl,
    GeneralPhi,
    Sinkhorn,
    Wasserstein,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kl" => Ok(Method::Kl),
            "general-phi" => Ok(Method::GeneralPhi),
            "sinkhorn" => Ok(Method::Sinkhorn),
            "wasserstein" => Ok(Method::Wasserstein),
            _ => Err(Error::Input(format!("unknown method {s:?}"))),
        }
    }
}

/// Solves `inst` with the chosen dual.
pub fn solve(inst: &LiftedInstance, method: Method, opts: &SearchOptions) -> Result<WorstCaseCoupling> {
    match method {
        Method::Kl => solve_kl_interpolated(inst, opts),
        Method::GeneralPhi => solve_general_phi(inst, opts),
        Method::Sinkhorn => solve_sinkhorn_lifted(inst, opts),
        Method::Wasserstein => solve_wasserstein(inst, opts),
    }
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Kl => "kl",
            Method::GeneralPhi => "general-phi",
            Method::Sinkhorn => "sinkhorn",
            Method::Wasserstein => "wasserstein",
        }
    }

    /// The dual matching the instance's cost.
    pub fn infer(inst: &LiftedInstance) -> Result<Self> {
        match &inst.cost {
            LiftedCost::Interpolated {
                phi: EntropyFunction::KullbackLeibler,
                ..
            } => Ok(Method::Kl),
            LiftedCost::Interpolated { .. } => Ok(Method::GeneralPhi),
            LiftedCost::WassersteinWeightGuard { .. } => Ok(Method::Wasserstein),
            LiftedCost::SinkhornKlIncrement { .. } => Ok(Method::Sinkhorn),
            LiftedCost::PhiIdentityGuard { .. } => Err(Error::Unsupported(
                "phi-divergence lifts have no dual solver here; run the oracle instead".into(),
            )),
        }
    }
}

/// Flat solver output as written by the `solve` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveReport {
    pub objective: f64,
    pub lambda_star: f64,
    pub alpha_star: Alpha,
    pub iterations: usize,
    pub tolerance_achieved: f64,
    pub empirical_risk: f64,
    pub records: Vec<TransportRecord>,
    pub diagnostics: Diagnostics,
}

impl SolveReport {
    pub fn new(inst: &LiftedInstance, out: WorstCaseCoupling) -> Result<Self> {
        Ok(SolveReport {
            objective: out.certificate.objective,
            lambda_star: out.certificate.lambda_star,
            alpha_star: out.certificate.alpha_star,
            iterations: out.certificate.iterations,
            tolerance_achieved: out.certificate.tolerance_achieved,
            empirical_risk: inst.nominal_risk()?,
            records: out.records,
            diagnostics: out.diagnostics,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("result JSON: {e}")))
    }

    pub fn certificate(&self) -> DualCertificate {
        DualCertificate {
            lambda_star: self.lambda_star,
            alpha_star: self.alpha_star.clone(),
            objective: self.objective,
            iterations: self.iterations,
            tolerance_achieved: self.tolerance_achieved,
        }
    }

    /// Converged and weakly dual feasible.
    pub fn certified(&self) -> bool {
        self.diagnostics.converged && self.diagnostics.weak_duality_ok
    }
}
