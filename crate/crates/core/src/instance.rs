use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifting::LiftedCost;
use crate::loss::Loss;
use crate::measure::DiscreteMeasure;

/// The σ-field `G` on which the weight coordinate must average to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SigmaFieldSpec {
    /// `E[W] = 1`.
    Trivial,
    /// `E[W | V̂_S] = 1` for the listed coordinates `S` of the nominal outcome.
    /// Nominal atoms that agree exactly on `S` share one conditioning cell.
    ConditionOnNominalAtom { coordinates: Vec<usize> },
}

impl SigmaFieldSpec {
    /// Cell index of each nominal outcome, numbered by first occurrence.
    pub fn cells(&self, nominal_outcomes: &[&[f64]]) -> Vec<usize> {
        match self {
            SigmaFieldSpec::Trivial => vec![0; nominal_outcomes.len()],
            SigmaFieldSpec::ConditionOnNominalAtom { coordinates } => {
                let mut keys: Vec<Vec<f64>> = Vec::new();
                nominal_outcomes
                    .iter()
                    .map(|v| {
                        let key: Vec<f64> = coordinates.iter().map(|&j| v[j]).collect();
                        match keys.iter().position(|k| *k == key) {
                            Some(c) => c,
                            None => {
                                keys.push(key);
                                keys.len() - 1
                            }
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Whether the outcome space `V` is all of `ℝ^d` or the box itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeSet {
    FullSpace,
    Box,
}

/// Finite search region for grids and oracles.
///
/// With [`OutcomeSet::FullSpace`] the box only bounds the oracle lattices; with
/// [`OutcomeSet::Box`] it is the outcome space itself and also constrains the
/// solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub w_max: f64,
    #[serde(default = "full_space")]
    pub outcome_set: OutcomeSet,
}

fn full_space() -> OutcomeSet {
    OutcomeSet::FullSpace
}

impl ValueDomain {
    pub fn full_space(lower: Vec<f64>, upper: Vec<f64>, w_max: f64) -> Result<Self> {
        let d = ValueDomain {
            lower,
            upper,
            w_max,
            outcome_set: OutcomeSet::FullSpace,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>, w_max: f64) -> Result<Self> {
        let d = ValueDomain {
            lower,
            upper,
            w_max,
            outcome_set: OutcomeSet::Box,
        };
        d.validate()?;
        Ok(d)
    }

    /// Box spanning `points` padded by `margin` on every side.
    pub fn around(points: &[Vec<f64>], margin: f64, w_max: f64) -> Result<Self> {
        let dim = points.first().ok_or_else(|| Error::Input("no points to bound".into()))?.len();
        let mut lower = vec![f64::INFINITY; dim];
        let mut upper = vec![f64::NEG_INFINITY; dim];
        for p in points {
            for j in 0..dim {
                lower[j] = lower[j].min(p[j] - margin);
                upper[j] = upper[j].max(p[j] + margin);
            }
        }
        Self::full_space(lower, upper, w_max)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::Dimension {
                expected: self.lower.len(),
                got: self.upper.len(),
            });
        }
        if self
            .lower
            .iter()
            .zip(&self.upper)
            .any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u))
        {
            return Err(Error::Input("value domain needs finite bounds with lower <= upper".into()));
        }
        if !(self.w_max > 0.0 && self.w_max.is_finite()) {
            return Err(Error::Input(format!("w_max must be positive, got {}", self.w_max)));
        }
        Ok(())
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        v.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (l, u))| *l <= *x && *x <= *u)
    }
}

/// The unified problem `(f, V, W, G, ν̂, c, r)`.
///
/// Nominal atoms are points `(v, w)` of `V × W` stored with `w` as the last
/// coordinate. The objective is `f(v, w) = ℓ(v_{1..m})·w`, where `m` is the
/// loss dimension; for a Sinkhorn lift `v = (z, ẑ)` and the loss reads `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftedInstance {
    pub version: u32,
    pub loss: Loss,
    pub cost: LiftedCost,
    pub nominal: DiscreteMeasure,
    pub sigma_field: SigmaFieldSpec,
    pub radius: f64,
    pub value_domain: ValueDomain,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub const INSTANCE_VERSION: u32 = 1;

impl LiftedInstance {
    pub fn validate(&self) -> Result<()> {
        if self.version != INSTANCE_VERSION {
            return Err(Error::Input(format!(
                "unsupported instance version {} (expected {INSTANCE_VERSION})",
                self.version
            )));
        }
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return Err(Error::Input(format!("radius must be finite and >= 0, got {}", self.radius)));
        }
        if self.nominal.dim() < 2 {
            return Err(Error::Input("nominal atoms need an outcome and a weight coordinate".into()));
        }
        let vd = self.v_dim();
        if self.loss.dim() > vd {
            return Err(Error::Dimension {
                expected: vd,
                got: self.loss.dim(),
            });
        }
        if self.nominal.atoms().iter().any(|a| a[vd] < 0.0) {
            return Err(Error::Input("nominal weight coordinates must be >= 0".into()));
        }
        if self.value_domain.dim() != vd {
            return Err(Error::Dimension {
                expected: vd,
                got: self.value_domain.dim(),
            });
        }
        self.value_domain.validate()?;
        self.cost.validate(vd)?;
        if let SigmaFieldSpec::ConditionOnNominalAtom { coordinates } = &self.sigma_field {
            if coordinates.iter().any(|&j| j >= vd) {
                return Err(Error::Input("conditioning coordinate out of range".into()));
            }
        }
        Ok(())
    }

    /// Dimension of the outcome coordinate `v`.
    pub fn v_dim(&self) -> usize {
        self.nominal.dim() - 1
    }

    pub fn n_atoms(&self) -> usize {
        self.nominal.len()
    }

    /// Outcome part `v̂_i` of nominal atom `i`.
    pub fn nominal_v(&self, i: usize) -> &[f64] {
        let a = &self.nominal.atoms()[i];
        &a[..a.len() - 1]
    }

    /// Weight part `ŵ_i` of nominal atom `i`.
    pub fn nominal_w(&self, i: usize) -> f64 {
        *self.nominal.atoms()[i].last().expect("nominal atoms are nonempty")
    }

    pub fn nominal_mass(&self, i: usize) -> f64 {
        self.nominal.weights()[i]
    }

    /// `ℓ` evaluated on the loss coordinates of `v`.
    pub fn loss_at(&self, v: &[f64]) -> Result<f64> {
        self.loss.eval(&v[..self.loss.dim()])
    }

    /// `f(v, w) = ℓ(v)·w`.
    pub fn objective(&self, v: &[f64], w: f64) -> Result<f64> {
        Ok(self.loss_at(v)? * w)
    }

    /// Nominal risk `E_ν̂[f]`.
    pub fn nominal_risk(&self) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..self.n_atoms() {
            total += self.nominal_mass(i) * self.objective(self.nominal_v(i), self.nominal_w(i))?;
        }
        Ok(total)
    }

    /// Conditioning cell of each nominal atom.
    pub fn cells(&self) -> Vec<usize> {
        let outcomes: Vec<&[f64]> = (0..self.n_atoms()).map(|i| self.nominal_v(i)).collect();
        self.sigma_field.cells(&outcomes)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instances always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: LiftedInstance = serde_json::from_str(text).map_err(|e| Error::Input(format!("instance JSON: {e}")))?;
        inst.validate()?;
        Ok(inst)
    }
}

/// Dual multiplier for the moment constraint: one scalar, or one per
/// conditioning cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Alpha {
    Scalar(f64),
    PerCell(Vec<f64>),
}

/// Dual solution `(λ⋆, α⋆)` and the attained objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualCertificate {
    pub lambda_star: f64,
    pub alpha_star: Alpha,
    pub objective: f64,
    pub iterations: usize,
    pub tolerance_achieved: f64,
}

/// Nominal atom `(v̂_i, ŵ_i)` carried to `(v_i⋆, w_i⋆)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportRecord {
    pub nominal: Vec<f64>,
    pub nominal_mass: f64,
    pub perturbed: Vec<f64>,
    pub weight: f64,
}

/// Solver bookkeeping attached to a worst-case coupling.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    pub method: String,
    pub converged: bool,
    pub primal_value: f64,
    pub mean_weight: f64,
    pub weak_duality_ok: bool,
    pub duality_gap: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Worst-case coupling together with its dual certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorstCaseCoupling {
    pub records: Vec<TransportRecord>,
    pub certificate: DualCertificate,
    pub diagnostics: Diagnostics,
}

/// Slack allowed in the weak-duality check on solver outputs.
pub const WEAK_DUALITY_TOL: f64 = 1e-6;

impl WorstCaseCoupling {
    /// `Σ_i ν̂_i w_i⋆`.
    pub fn mean_weight(&self) -> f64 {
        self.records.iter().map(|r| r.nominal_mass * r.weight).sum()
    }

    /// `Σ_i ν̂_i ℓ(v_i⋆) w_i⋆`.
    pub fn primal_value(&self, loss: &Loss) -> Result<f64> {
        let m = loss.dim();
        let mut total = 0.0;
        for r in &self.records {
            if r.weight == 0.0 {
                continue;
            }
            total += r.nominal_mass * r.weight * loss.eval(&r.perturbed[..m])?;
        }
        Ok(total)
    }

    /// Assembles a coupling and fills in the primal-side diagnostics.
    pub fn assemble(
        records: Vec<TransportRecord>,
        certificate: DualCertificate,
        loss: &Loss,
        method: &str,
        converged: bool,
        notes: Vec<String>,
    ) -> Result<Self> {
        let mut out = WorstCaseCoupling {
            records,
            certificate,
            diagnostics: Diagnostics::default(),
        };
        let primal = out.primal_value(loss)?;
        let objective = out.certificate.objective;
        out.diagnostics = Diagnostics {
            method: method.to_string(),
            converged,
            primal_value: primal,
            mean_weight: out.mean_weight(),
            weak_duality_ok: primal <= objective + WEAK_DUALITY_TOL,
            duality_gap: objective - primal,
            notes,
        };
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_sigma_field_has_one_cell() {
        let a = [1.0, 2.0];
        let b = [3.0, 4.0];
        assert_eq!(SigmaFieldSpec::Trivial.cells(&[&a, &b]), vec![0, 0]);
    }

    #[test]
    fn conditional_cells_merge_equal_keys() {
        let s = SigmaFieldSpec::ConditionOnNominalAtom { coordinates: vec![1] };
        let pts: Vec<[f64; 2]> = vec![[0.0, 5.0], [1.0, 6.0], [2.0, 5.0]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        assert_eq!(s.cells(&refs), vec![0, 1, 0]);
    }

    #[test]
    fn value_domain_checks() {
        assert!(ValueDomain::full_space(vec![0.0], vec![1.0], 2.0).is_ok());
        assert!(ValueDomain::full_space(vec![1.0], vec![0.0], 2.0).is_err());
        assert!(ValueDomain::full_space(vec![0.0], vec![1.0], 0.0).is_err());
        let d = ValueDomain::around(&[vec![0.0, 1.0], vec![2.0, -1.0]], 0.5, 3.0).unwrap();
        assert_eq!(d.lower, vec![-0.5, -1.5]);
        assert_eq!(d.upper, vec![2.5, 1.5]);
        assert!(d.contains(&[0.0, 0.0]));
        assert!(!d.contains(&[3.0, 0.0]));
    }
}
