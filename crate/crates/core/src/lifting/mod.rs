//! Constructors that turn a classic DRO problem `(Z, ℓ, μ̂, D, r)` into a
//! [`LiftedInstance`] `(f, V, W, G, ν̂, c, r)`.
//!
//! | family         | `V`     | `ν̂`                                               | `c((v,w),(v̂,ŵ))`                                  |
//! |----------------|---------|---------------------------------------------------|---------------------------------------------------|
//! | Wasserstein    | `Z`     | `μ̂ ⊗ δ₁`                                         | `d(v,v̂) + ∞·𝟙{w ≠ ŵ}`                             |
//! | φ-divergence   | `Z`     | `(1−ε)/n Σ δ_(ẑᵢ, 1/(1−ε)) + ε δ_(ẑₙ₊₁, 0)`     | `∞·𝟙{v ≠ v̂} + g(v)·φ(w/g(v))`                     |
//! | Sinkhorn       | `Z × Z` | `γ̂ ⊗ δ₁`, `dγ̂ = dκ_ẑ(z) dμ̂(ẑ)`                 | `∞·𝟙{v ≠ v̂} + ε·(φ_KL(w) − φ_KL(ŵ))₊`             |
//! | interpolated   | `Z`     | `μ̂ ⊗ δ₁`                                         | `θ₁·w·d(v,v̂) + θ₂·(φ(w) − φ(ŵ))₊`                  |
//!
//! In the φ-divergence row `ẑₙ₊₁` maximizes `ℓ`, and `g = 1/(1−ε)` on the data
//! atoms and `0` at `ẑₙ₊₁`. The extra atom is recognised by its nominal weight
//! `ŵ = 0`, so `ẑₙ₊₁` may coincide with a data point.

mod sinkhorn;

use serde::{Deserialize, Serialize};

use crate::cost::GroundCost;
use crate::divergences::EntropyFunction;
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::instance::{LiftedInstance, SigmaFieldSpec, ValueDomain, INSTANCE_VERSION};
use crate::loss::Loss;
use crate::measure::DiscreteMeasure;
use crate::oracle::grid_argmax;

pub use sinkhorn::{lift_sinkhorn, lifted_from_data, sinkhorn_kernel, SinkhornLiftData};

/// Default mixing weight of the φ-divergence lift.
pub const DEFAULT_MIX_EPSILON: f64 = 1e-3;

/// Lattice step used when the worst scenario must be found by search.
pub const WORST_SCENARIO_STEP: f64 = 0.05;

/// A classic DRO problem `(ℓ, μ̂, r)` with optional cost, outcome box and
/// worst scenario, as read by the `lift` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroProblem {
    pub loss: Loss,
    pub nominal: DiscreteMeasure,
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground: Option<GroundCost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_domain: Option<ValueDomain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_scenario: Option<Vec<f64>>,
}

impl DroProblem {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("problem JSON: {e}")))
    }

    /// The ground cost, defaulting to the Euclidean norm.
    pub fn ground_or_default(&self) -> GroundCost {
        self.ground
            .clone()
            .unwrap_or_else(|| GroundCost::p_norm(2.0).expect("p = 2 is valid"))
    }
}

/// The lifted transport cost `c((v, w), (v̂, ŵ))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LiftedCost {
    WassersteinWeightGuard {
        ground: GroundCost,
    },
    PhiIdentityGuard {
        phi: EntropyFunction,
        mix_epsilon: f64,
        worst_scenario: Vec<f64>,
    },
    SinkhornKlIncrement {
        reg_epsilon: f64,
    },
    Interpolated {
        ground: GroundCost,
        phi: EntropyFunction,
        theta1: f64,
        theta2: f64,
    },
}

impl LiftedCost {
    pub fn validate(&self, v_dim: usize) -> Result<()> {
        match self {
            LiftedCost::WassersteinWeightGuard { ground } => ground.validate(v_dim),
            LiftedCost::PhiIdentityGuard {
                phi,
                mix_epsilon,
                worst_scenario,
            } => {
                phi.validated()?;
                check_mix_epsilon(*mix_epsilon)?;
                if worst_scenario.len() != v_dim {
                    return Err(Error::Dimension {
                        expected: v_dim,
                        got: worst_scenario.len(),
                    });
                }
                Ok(())
            }
            LiftedCost::SinkhornKlIncrement { reg_epsilon } => {
                if *reg_epsilon > 0.0 && reg_epsilon.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("reg_epsilon must be > 0, got {reg_epsilon}")))
                }
            }
            LiftedCost::Interpolated {
                ground,
                phi,
                theta1,
                theta2,
            } => {
                phi.validated()?;
                check_thetas(*theta1, *theta2)?;
                ground.validate(v_dim)
            }
        }
    }

    /// Evaluates the cost of moving `(v̂, ŵ)` to `(v, w)`.
    pub fn eval(&self, v: &[f64], w: f64, v_hat: &[f64], w_hat: f64) -> Ext {
        debug_assert!(w >= 0.0 && w_hat >= 0.0);
        match self {
            LiftedCost::WassersteinWeightGuard { ground } => {
                if w != w_hat {
                    Ext::Infinite
                } else {
                    ground.eval(v, v_hat)
                }
            }
            LiftedCost::PhiIdentityGuard {
                phi,
                mix_epsilon,
                worst_scenario,
            } => {
                if v != v_hat {
                    Ext::Infinite
                } else if w_hat == 0.0 {
                    if v_hat == worst_scenario.as_slice() {
                        phi.recession().scale(w)
                    } else {
                        Ext::Infinite
                    }
                } else {
                    let g = 1.0 / (1.0 - mix_epsilon);
                    phi.value(w / g).scale(g)
                }
            }
            LiftedCost::SinkhornKlIncrement { reg_epsilon } => {
                if v != v_hat {
                    Ext::Infinite
                } else {
                    let kl = EntropyFunction::KullbackLeibler;
                    kl.value(w).minus(kl.value(w_hat)).positive_part().scale(*reg_epsilon)
                }
            }
            LiftedCost::Interpolated {
                ground,
                phi,
                theta1,
                theta2,
            } => {
                let transport = ground.eval(v, v_hat).scale(w * theta1);
                let reweight = phi.value(w).minus(phi.value(w_hat)).positive_part().scale(*theta2);
                transport + reweight
            }
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            LiftedCost::WassersteinWeightGuard { .. } => "wasserstein",
            LiftedCost::PhiIdentityGuard { .. } => "phi",
            LiftedCost::SinkhornKlIncrement { .. } => "sinkhorn",
            LiftedCost::Interpolated { .. } => "interpolated",
        }
    }
}

fn check_mix_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("mix_epsilon must lie in (0, 1), got {eps}")))
    }
}

fn check_thetas(theta1: f64, theta2: f64) -> Result<()> {
    if theta1 > 0.0 && theta2 > 0.0 && theta1.is_finite() && theta2.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "theta1 and theta2 must be positive, got {theta1} and {theta2}"
        )))
    }
}

fn check_common(loss: &Loss, mu_hat: &DiscreteMeasure, radius: f64) -> Result<()> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::Parameter(format!("radius must be finite and >= 0, got {radius}")));
    }
    if loss.dim() != mu_hat.dim() {
        return Err(Error::Dimension {
            expected: loss.dim(),
            got: mu_hat.dim(),
        });
    }
    Ok(())
}

/// Default oracle box: the data hull padded by one unit, `w_max = max(n, 2)`.
pub fn default_domain(mu_hat: &DiscreteMeasure) -> Result<ValueDomain> {
    ValueDomain::around(mu_hat.atoms(), 1.0, (mu_hat.len() as f64).max(2.0))
}

/// Appends a unit weight coordinate to every atom: `μ̂ ⊗ δ₁`.
fn with_unit_weight(mu_hat: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let atoms = mu_hat
        .atoms()
        .iter()
        .map(|a| {
            let mut v = a.clone();
            v.push(1.0);
            v
        })
        .collect();
    DiscreteMeasure::new(atoms, mu_hat.weights().to_vec())
}

/// Wasserstein ball: transport only, weights pinned at one.
pub fn lift_wasserstein(
    loss: Loss,
    ground: GroundCost,
    mu_hat: &DiscreteMeasure,
    radius: f64,
    domain: Option<ValueDomain>,
) -> Result<LiftedInstance> {
    check_common(&loss, mu_hat, radius)?;
    let inst = LiftedInstance {
        version: INSTANCE_VERSION,
        loss,
        cost: LiftedCost::WassersteinWeightGuard { ground },
        nominal: with_unit_weight(mu_hat)?,
        sigma_field: SigmaFieldSpec::Trivial,
        radius,
        value_domain: match domain {
            Some(d) => d,
            None => default_domain(mu_hat)?,
        },
        notes: Vec::new(),
    };
    inst.validate()?;
    Ok(inst)
}

/// Generalized φ-divergence ball: reweighting only, with one extra atom at a
/// maximizer of the loss that absorbs mass leaving the nominal support.
///
/// When `worst_scenario` is `None` it is located by a lattice search over the
/// value domain and the search gap is recorded in the instance notes.
pub fn lift_phi_divergence(
    loss: Loss,
    phi: EntropyFunction,
    mu_hat: &DiscreteMeasure,
    radius: f64,
    mix_epsilon: f64,
    worst_scenario: Option<Vec<f64>>,
    domain: Option<ValueDomain>,
) -> Result<LiftedInstance> {
    check_common(&loss, mu_hat, radius)?;
    check_mix_epsilon(mix_epsilon)?;
    let phi = phi.validated()?;
    let domain = match domain {
        Some(d) => d,
        None => default_domain(mu_hat)?,
    };
    let mut notes = Vec::new();
    let z_star = match worst_scenario {
        Some(z) => {
            if z.len() != mu_hat.dim() {
                return Err(Error::Dimension {
                    expected: mu_hat.dim(),
                    got: z.len(),
                });
            }
            z
        }
        None => {
            let (z, value) = grid_argmax(|v| loss.eval(v).unwrap_or(f64::NEG_INFINITY), &domain, WORST_SCENARIO_STEP)?;
            let slope = loss.max_slope(|a| a.iter().map(|x| x * x).sum::<f64>().sqrt());
            let gap = slope * WORST_SCENARIO_STEP * 1e-2 * (domain.dim() as f64).sqrt();
            notes.push(format!(
                "worst scenario {z:?} found by lattice search, loss {value}, gap estimate {gap:e}"
            ));
            z
        }
    };
    let w_data = 1.0 / (1.0 - mix_epsilon);
    let mut atoms = Vec::with_capacity(mu_hat.len() + 1);
    let mut weights = Vec::with_capacity(mu_hat.len() + 1);
    for (z, m) in mu_hat.iter() {
        let mut a = z.to_vec();
        a.push(w_data);
        atoms.push(a);
        weights.push((1.0 - mix_epsilon) * m);
    }
    let mut extra = z_star.clone();
    extra.push(0.0);
    atoms.push(extra);
    weights.push(mix_epsilon);
    let inst = LiftedInstance {
        version: INSTANCE_VERSION,
        loss,
        cost: LiftedCost::PhiIdentityGuard {
            phi,
            mix_epsilon,
            worst_scenario: z_star,
        },
        nominal: DiscreteMeasure::new(atoms, weights)?,
        sigma_field: SigmaFieldSpec::Trivial,
        radius,
        value_domain: domain,
        notes,
    };
    inst.validate()?;
    Ok(inst)
}

/// Interpolated cost `θ₁·w·d(v, v̂) + θ₂·(φ(w) − φ(ŵ))₊` around `μ̂ ⊗ δ₁`.
pub fn build_interpolated(
    loss: Loss,
    ground: GroundCost,
    phi: EntropyFunction,
    mu_hat: &DiscreteMeasure,
    radius: f64,
    theta1: f64,
    theta2: f64,
    domain: Option<ValueDomain>,
) -> Result<LiftedInstance> {
    check_common(&loss, mu_hat, radius)?;
    check_thetas(theta1, theta2)?;
    let inst = LiftedInstance {
        version: INSTANCE_VERSION,
        loss,
        cost: LiftedCost::Interpolated {
            ground,
            phi: phi.validated()?,
            theta1,
            theta2,
        },
        nominal: with_unit_weight(mu_hat)?,
        sigma_field: SigmaFieldSpec::Trivial,
        radius,
        value_domain: match domain {
            Some(d) => d,
            None => default_domain(mu_hat)?,
        },
        notes: Vec::new(),
    };
    inst.validate()?;
    Ok(inst)
}
