use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One affine piece `v ↦ aᵀv + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffinePiece {
    pub a: Vec<f64>,
    pub b: f64,
}

impl AffinePiece {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        AffinePiece { a, b }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        dot(&self.a, v) + self.b
    }
}

/// `ℓ(v) = max_k a_kᵀv + b_k` with `K ≥ 1` pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PiecesDoc", into = "PiecesDoc")]
pub struct PiecewiseAffineLoss {
    pieces: Vec<AffinePiece>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PiecesDoc {
    pieces: Vec<AffinePiece>,
}

impl TryFrom<PiecesDoc> for PiecewiseAffineLoss {
    type Error = Error;

    fn try_from(doc: PiecesDoc) -> Result<Self> {
        PiecewiseAffineLoss::new(doc.pieces)
    }
}

impl From<PiecewiseAffineLoss> for PiecesDoc {
    fn from(l: PiecewiseAffineLoss) -> Self {
        PiecesDoc { pieces: l.pieces }
    }
}

impl PiecewiseAffineLoss {
    pub fn new(pieces: Vec<AffinePiece>) -> Result<Self> {
        let first = pieces
            .first()
            .ok_or_else(|| Error::Input("a loss needs at least one piece".into()))?;
        let dim = first.a.len();
        for p in &pieces {
            if p.a.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: p.a.len(),
                });
            }
            if !p.b.is_finite() || p.a.iter().any(|x| !x.is_finite()) {
                return Err(Error::Input("loss coefficients must be finite".into()));
            }
        }
        Ok(PiecewiseAffineLoss { pieces })
    }

    /// Convenience constructor from `(a_k, b_k)` pairs.
    pub fn from_pairs(pairs: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|(a, b)| AffinePiece { a, b }).collect())
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].a.len()
    }

    pub fn eval(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(self.value(v))
    }

    /// Unchecked evaluation; `v` must have the loss's dimension.
    pub fn value(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim());
        self.pieces.iter().map(|p| p.eval(v)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A loss whose pieces depend on an exactly compared label coordinate.
///
/// `ℓ(v) = max_k a_{y,k}ᵀv + b_{y,k}` where `y = v[label_index]`. Each class
/// is piecewise affine on the whole vector `v`; the label coordinate itself
/// normally carries a zero coefficient. Such a loss is only piecewise affine
/// along moves that keep the label fixed, so it must be paired with a ground
/// cost that guards the label coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelConditionedLoss {
    pub label_index: usize,
    pub classes: Vec<LabelClass>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LabelClassDoc", into = "LabelClassDoc")]
pub struct LabelClass {
    pub label: f64,
    pub loss: PiecewiseAffineLoss,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelClassDoc {
    label: f64,
    pieces: Vec<AffinePiece>,
}

impl TryFrom<LabelClassDoc> for LabelClass {
    type Error = Error;

    fn try_from(doc: LabelClassDoc) -> Result<Self> {
        Ok(LabelClass {
            label: doc.label,
            loss: PiecewiseAffineLoss::new(doc.pieces)?,
        })
    }
}

impl From<LabelClass> for LabelClassDoc {
    fn from(c: LabelClass) -> Self {
        LabelClassDoc {
            label: c.label,
            pieces: c.loss.pieces,
        }
    }
}

/// Any loss accepted by the solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Loss {
    Affine(PiecewiseAffineLoss),
    LabelConditioned(LabelConditionedLoss),
}

impl From<PiecewiseAffineLoss> for Loss {
    fn from(l: PiecewiseAffineLoss) -> Self {
        Loss::Affine(l)
    }
}

impl Loss {
    pub fn label_conditioned(label_index: usize, classes: Vec<(f64, PiecewiseAffineLoss)>) -> Result<Self> {
        let first = classes
            .first()
            .ok_or_else(|| Error::Input("a labelled loss needs at least one class".into()))?;
        let dim = first.1.dim();
        if label_index >= dim {
            return Err(Error::Input(format!("label index {label_index} out of range for dimension {dim}")));
        }
        for (i, (y, l)) in classes.iter().enumerate() {
            if l.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: l.dim(),
                });
            }
            if classes[..i].iter().any(|(z, _)| z == y) {
                return Err(Error::Input(format!("label {y} listed twice")));
            }
        }
        Ok(Loss::LabelConditioned(LabelConditionedLoss {
            label_index,
            classes: classes.into_iter().map(|(label, loss)| LabelClass { label, loss }).collect(),
        }))
    }

    pub fn dim(&self) -> usize {
        match self {
            Loss::Affine(l) => l.dim(),
            Loss::LabelConditioned(l) => l.classes[0].loss.dim(),
        }
    }

    /// Coordinate that selects the class, if any.
    pub fn label_index(&self) -> Option<usize> {
        match self {
            Loss::Affine(_) => None,
            Loss::LabelConditioned(l) => Some(l.label_index),
        }
    }

    /// The affine pieces active for points sharing `v`'s label.
    pub fn pieces_at(&self, v: &[f64]) -> Result<&PiecewiseAffineLoss> {
        if v.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: v.len(),
            });
        }
        match self {
            Loss::Affine(l) => Ok(l),
            Loss::LabelConditioned(l) => {
                let y = v[l.label_index];
                l.classes
                    .iter()
                    .find(|c| c.label == y)
                    .map(|c| &c.loss)
                    .ok_or_else(|| Error::Domain(format!("no loss class for label {y}")))
            }
        }
    }

    pub fn eval(&self, v: &[f64]) -> Result<f64> {
        Ok(self.pieces_at(v)?.value(v))
    }

    /// Largest `‖a_k‖` over every class and piece, with `norm` applied to `a_k`.
    pub fn max_slope(&self, norm: impl Fn(&[f64]) -> f64) -> f64 {
        let all: Vec<&PiecewiseAffineLoss> = match self {
            Loss::Affine(l) => vec![l],
            Loss::LabelConditioned(l) => l.classes.iter().map(|c| &c.loss).collect(),
        };
        all.iter().flat_map(|l| l.pieces()).map(|p| norm(&p.a)).fold(0.0, f64::max)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_loss() -> PiecewiseAffineLoss {
        PiecewiseAffineLoss::from_pairs(vec![(vec![1.0], 0.0), (vec![-1.0], 0.0)]).unwrap()
    }

    #[test]
    fn absolute_value_as_max_of_two_pieces() {
        assert_eq!(abs_loss().eval(&[0.5]).unwrap(), 0.5);
        assert_eq!(abs_loss().eval(&[-2.0]).unwrap(), 2.0);
    }

    #[test]
    fn max_of_crossing_lines() {
        let l = PiecewiseAffineLoss::from_pairs(vec![(vec![2.0], 1.0), (vec![-1.0], 3.0)]).unwrap();
        assert_eq!(l.eval(&[1.0]).unwrap(), 3.0);
    }

    #[test]
    fn hinge_saturates_at_zero() {
        // y = 1, beta = (1, 1), b = 0; v = (x1, x2, 1) with the bias coordinate last.
        let l = PiecewiseAffineLoss::from_pairs(vec![(vec![-1.0, -1.0, 0.0], 1.0), (vec![0.0; 3], 0.0)]).unwrap();
        assert_eq!(l.eval(&[2.0, 3.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_input_error() {
        assert!(matches!(
            abs_loss().eval(&[1.0, 2.0]),
            Err(Error::Dimension { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn label_conditioned_selects_class() {
        let pos = PiecewiseAffineLoss::from_pairs(vec![(vec![-1.0, 0.0], 1.0), (vec![0.0, 0.0], 0.0)]).unwrap();
        let neg = PiecewiseAffineLoss::from_pairs(vec![(vec![1.0, 0.0], 1.0), (vec![0.0, 0.0], 0.0)]).unwrap();
        let l = Loss::label_conditioned(1, vec![(1.0, pos), (-1.0, neg)]).unwrap();
        assert_eq!(l.eval(&[0.25, 1.0]).unwrap(), 0.75);
        assert_eq!(l.eval(&[0.25, -1.0]).unwrap(), 1.25);
        assert!(matches!(l.eval(&[0.25, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn json_forms() {
        let l: Loss = serde_json::from_str(r#"{"pieces":[{"a":[1],"b":0},{"a":[-1],"b":0}]}"#).unwrap();
        assert_eq!(l, Loss::Affine(abs_loss()));
        let lab: Loss = serde_json::from_str(r#"{"label_index":1,"classes":[{"label":1,"pieces":[{"a":[1,0],"b":0}]}]}"#).unwrap();
        assert_eq!(lab.label_index(), Some(1));
        assert!(serde_json::from_str::<Loss>(r#"{"pieces":[{"a":[1],"b":0}],"extra":1}"#).is_err());
        let text = serde_json::to_string(&lab).unwrap();
        assert_eq!(serde_json::from_str::<Loss>(&text).unwrap(), lab);
    }
}
