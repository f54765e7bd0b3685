//! Exponential-cone programs for the KL-interpolated worst-case risk.
//!
//! [`build_conic`] writes the finite convex program
//!
//! ```text
//! min  λr + t
//! s.t. (η_i, λθ₂, p_i − t) ∈ K_exp                          every atom i
//!      majorization of ℓ_{λθ₁}(v̂_i) by p_i                  every atom i, piece k
//!      Σ_i m_i η_i ≤ λθ₂
//!      λ ≥ 0, η ≥ 0
//! ```
//!
//! where the majorization depends on the ground cost:
//!
//! | cost, outcome set | rows per `(i, k)` |
//! |---|---|
//! | p-norm, full space | `a_kᵀv̂_i + b_k ≤ p_i` and `‖a_k‖_q ≤ λθ₁` |
//! | p-norm, box `[l, u]` | `ξ_ik − ω_ik = −a_k`, `s_ik ≥ σ_V(ω_ik)` coordinatewise, `b_k + Σ s_ik − ξ_ikᵀv̂_i ≤ p_i`, `‖ξ_ik‖_q ≤ λθ₁` |
//! | squared (optionally label-guarded), full space | `2·(λθ₁)·2(p_i − a_kᵀv̂_i − b_k) ≥ ‖a_k^F‖²` |
//!
//! `a^F` is the part of `a` on coordinates the cost can move. The program
//! is not solved here; [`verify_certificate`] checks a dual certificate
//! against it and [`serialize_conic`] writes it out for external solvers.

mod build;
mod format;
mod verify;

use serde::{Deserialize, Serialize};

use crate::ext::Ext;

pub use build::build_conic;
pub use format::{parse_conic, serialize_conic, CONIC_FORMAT, CONIC_VERSION};
pub use verify::{check_point, exp_cone_violation, verify_certificate, VerificationReport, Violation, FEASIBILITY_TOL};

/// Contiguous run of scalar variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub name: String,
    pub start: usize,
    pub dim: usize,
}

/// `Σ coef·x[var] + constant`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn var(index: usize, coef: f64) -> Self {
        AffineExpr {
            terms: vec![(index, coef)],
            constant: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        AffineExpr {
            terms: Vec::new(),
            constant: c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowSense {
    Le,
    Eq,
}

/// Constraint family, in emission order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    ConjugateDomain,
    SupportEpigraph,
    Majorization,
    Aggregate,
    Sign,
    ExpCone,
    NormBound,
    QuadraticOffset,
}

/// `terms·x (sense) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearRow {
    pub family: Family,
    pub atom: Option<usize>,
    pub piece: Option<usize>,
    pub terms: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Cone {
    /// Every entry `≥ 0`.
    Nonnegative,
    /// `(x₁, x₂, x₃)` with `x₁ ≥ x₂ exp(x₃/x₂), x₂ > 0`, or `x₁ ≥ 0, x₂ = 0, x₃ ≤ 0`.
    Exponential,
    /// `(u, z)` with `‖z‖_q ≤ u`.
    QNorm { q: Ext },
    /// `(x, y, z)` with `2xy ≥ ‖z‖²`, `x, y ≥ 0`.
    RotatedQuadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeConstraint {
    pub family: Family,
    pub atom: Option<usize>,
    pub piece: Option<usize>,
    pub cone: Cone,
    pub entries: Vec<AffineExpr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConicMetadata {
    pub ground: String,
    pub outcome_set: String,
    pub radius: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub atoms: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConicProgram {
    pub format: String,
    pub version: u32,
    pub metadata: ConicMetadata,
    pub blocks: Vec<Block>,
    pub n_vars: usize,
    /// Minimized.
    pub objective: AffineExpr,
    pub rows: Vec<LinearRow>,
    pub cones: Vec<ConeConstraint>,
}

impl ConicProgram {
    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn count_rows(&self, family: Family) -> usize {
        self.rows.iter().filter(|r| r.family == family).count()
    }

    pub fn count_cones(&self, family: Family) -> usize {
        self.cones.iter().filter(|c| c.family == family).count()
    }
}
