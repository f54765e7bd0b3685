use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::Ext;

/// Transport cost `d(v, v̂)` on the outcome space.
///
/// | kind                                 | `d(v, v̂)`                                   |
/// |--------------------------------------|---------------------------------------------|
/// | `p-norm`                             | `‖v − v̂‖_p`, `p ∈ [1, ∞]`                   |
/// | `squared-euclidean`                  | `‖v − v̂‖₂²`                                 |
/// | `squared-euclidean-with-label-guard` | `‖v_F − v̂_F‖₂²` if guarded coordinates agree exactly, `+∞` otherwise |
///
/// `F` is the complement of the guarded coordinate set. Guarded coordinates hold
/// labels or constant features that must never move.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GroundCost {
    PNorm(PNormParams),
    SquaredEuclidean,
    SquaredEuclideanWithLabelGuard(GuardParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PNormParams {
    pub p: Ext,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuardParams {
    pub guarded: Vec<usize>,
}

impl GroundCost {
    pub fn p_norm(p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::Parameter(format!("norm exponent must be >= 1, got {p}")));
        }
        Ok(GroundCost::PNorm(PNormParams { p: Ext::from_f64(p) }))
    }

    pub fn squared_euclidean() -> Self {
        GroundCost::SquaredEuclidean
    }

    pub fn label_guard(mut guarded: Vec<usize>) -> Self {
        guarded.sort_unstable();
        guarded.dedup();
        GroundCost::SquaredEuclideanWithLabelGuard(GuardParams { guarded })
    }

    /// Checks parameters against the dimension of the outcome space.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            GroundCost::PNorm(PNormParams { p }) => {
                if let Ext::Finite(p) = p {
                    if !(*p >= 1.0) {
                        return Err(Error::Parameter(format!("norm exponent must be >= 1, got {p}")));
                    }
                }
                Ok(())
            }
            GroundCost::SquaredEuclidean => Ok(()),
            GroundCost::SquaredEuclideanWithLabelGuard(GuardParams { guarded }) => match guarded.iter().find(|&&j| j >= dim) {
                Some(j) => Err(Error::Parameter(format!("guarded coordinate {j} out of range for dimension {dim}"))),
                None => Ok(()),
            },
        }
    }

    pub fn eval(&self, v: &[f64], v_hat: &[f64]) -> Ext {
        debug_assert_eq!(v.len(), v_hat.len());
        match self {
            GroundCost::PNorm(PNormParams { p }) => {
                let diff: Vec<f64> = v.iter().zip(v_hat).map(|(a, b)| a - b).collect();
                Ext::Finite(p_norm(&diff, *p))
            }
            GroundCost::SquaredEuclidean => Ext::Finite(sq_dist(v, v_hat, |_| true)),
            GroundCost::SquaredEuclideanWithLabelGuard(GuardParams { guarded }) => {
                if guarded.iter().any(|&j| v[j] != v_hat[j]) {
                    Ext::Infinite
                } else {
                    Ext::Finite(sq_dist(v, v_hat, |j| !guarded.contains(&j)))
                }
            }
        }
    }

    /// Whether coordinate `j` may be transported at finite cost.
    pub fn is_movable(&self, j: usize) -> bool {
        match self {
            GroundCost::SquaredEuclideanWithLabelGuard(GuardParams { guarded }) => !guarded.contains(&j),
            _ => true,
        }
    }

    /// `a` with guarded coordinates zeroed.
    pub fn movable_part(&self, a: &[f64]) -> Vec<f64> {
        a.iter()
            .enumerate()
            .map(|(j, x)| if self.is_movable(j) { *x } else { 0.0 })
            .collect()
    }

    /// Dual exponent `q` with `1/p + 1/q = 1`, for the norm kind.
    pub fn dual_exponent(&self) -> Option<Ext> {
        match self {
            GroundCost::PNorm(PNormParams { p }) => Some(match p {
                Ext::Infinite => Ext::Finite(1.0),
                Ext::Finite(p) if *p == 1.0 => Ext::Infinite,
                Ext::Finite(p) => Ext::Finite(p / (p - 1.0)),
            }),
            _ => None,
        }
    }

    pub fn is_quadratic(&self) -> bool {
        !matches!(self, GroundCost::PNorm(_))
    }
}

/// `‖x‖_p` for `p ∈ [1, ∞]`.
pub fn p_norm(x: &[f64], p: Ext) -> f64 {
    match p {
        Ext::Infinite => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        Ext::Finite(p) if p == 1.0 => x.iter().map(|v| v.abs()).sum(),
        Ext::Finite(p) if p == 2.0 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Ext::Finite(p) => {
            let m = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            if m == 0.0 {
                return 0.0;
            }
            m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

fn sq_dist(v: &[f64], w: &[f64], keep: impl Fn(usize) -> bool) -> f64 {
    v.iter()
        .zip(w)
        .enumerate()
        .filter(|(j, _)| keep(*j))
        .map(|(_, (a, b))| (a - b) * (a - b))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms() {
        let x = [3.0, -4.0];
        assert_eq!(p_norm(&x, Ext::Finite(1.0)), 7.0);
        assert_eq!(p_norm(&x, Ext::Finite(2.0)), 5.0);
        assert_eq!(p_norm(&x, Ext::Infinite), 4.0);
        assert!((p_norm(&x, Ext::Finite(3.0)) - 91f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn dual_exponents() {
        let q = |p: f64| GroundCost::p_norm(p).unwrap().dual_exponent().unwrap();
        assert_eq!(q(1.0), Ext::Infinite);
        assert_eq!(q(2.0), Ext::Finite(2.0));
        assert_eq!(q(4.0), Ext::Finite(4.0 / 3.0));
        let inf = GroundCost::PNorm(PNormParams { p: Ext::Infinite });
        assert_eq!(inf.dual_exponent(), Some(Ext::Finite(1.0)));
    }

    #[test]
    fn label_guard_blocks_label_moves() {
        let d = GroundCost::label_guard(vec![2]);
        assert_eq!(d.eval(&[1.0, 1.0, 1.0], &[0.0, 0.0, 1.0]), Ext::Finite(2.0));
        assert_eq!(d.eval(&[0.0, 0.0, -1.0], &[0.0, 0.0, 1.0]), Ext::Infinite);
        assert_eq!(d.movable_part(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 0.0]);
    }

    #[test]
    fn zero_on_diagonal() {
        let v = [0.3, -1.2, 1.0];
        for d in [
            GroundCost::p_norm(1.5).unwrap(),
            GroundCost::squared_euclidean(),
            GroundCost::label_guard(vec![2]),
        ] {
            assert_eq!(d.eval(&v, &v), Ext::ZERO);
        }
    }

    #[test]
    fn json_shape() {
        let d: GroundCost = serde_json::from_str(r#"{"kind":"p-norm","params":{"p":2}}"#).unwrap();
        assert_eq!(d, GroundCost::p_norm(2.0).unwrap());
        let d: GroundCost = serde_json::from_str(r#"{"kind":"p-norm","params":{"p":"inf"}}"#).unwrap();
        assert_eq!(d.dual_exponent(), Some(Ext::Finite(1.0)));
        let d: GroundCost = serde_json::from_str(r#"{"kind":"squared-euclidean"}"#).unwrap();
        assert_eq!(d, GroundCost::SquaredEuclidean);
        let d: GroundCost = serde_json::from_str(r#"{"kind":"squared-euclidean-with-label-guard","params":{"guarded":[2,3]}}"#).unwrap();
        assert_eq!(d, GroundCost::label_guard(vec![2, 3]));
        assert!(serde_json::from_str::<GroundCost>(r#"{"kind":"p-norm","params":{"p":2,"q":2}}"#).is_err());
    }
}
