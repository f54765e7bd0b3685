use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a measure built from exact inputs.
pub const INPUT_MASS_TOL: f64 = 1e-12;
/// Tolerance on the total mass of a measure produced by an optimizer.
pub const OUTPUT_MASS_TOL: f64 = 1e-6;

/// A finitely supported probability measure on `ℝ^d`.
///
/// Atoms may repeat; every consumer that needs a support aggregates repeated
/// atoms by exact coordinate equality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureDoc", into = "MeasureDoc")]
pub struct DiscreteMeasure {
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureDoc {
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<MeasureDoc> for DiscreteMeasure {
    type Error = Error;

    fn try_from(doc: MeasureDoc) -> Result<Self> {
        DiscreteMeasure::new(doc.atoms, doc.weights)
    }
}

impl From<DiscreteMeasure> for MeasureDoc {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureDoc {
            atoms: m.atoms,
            weights: m.weights,
        }
    }
}

impl DiscreteMeasure {
    /// Builds a measure whose weights must sum to one within `1e-12`.
    pub fn new(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(atoms, weights, INPUT_MASS_TOL)
    }

    /// Builds a measure with a caller-chosen mass tolerance.
    pub fn with_tolerance(atoms: Vec<Vec<f64>>, weights: Vec<f64>, tol: f64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Input("a measure needs at least one atom".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::Input(format!("{} atoms but {} weights", atoms.len(), weights.len())));
        }
        let dim = atoms[0].len();
        for atom in &atoms {
            if atom.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: atom.len(),
                });
            }
            if atom.iter().any(|x| !x.is_finite()) {
                return Err(Error::Input("atom coordinates must be finite".into()));
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Input("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::Input(format!("weights sum to {total}, expected 1 within {tol:e}")));
        }
        Ok(DiscreteMeasure { atoms, weights })
    }

    /// Uniform measure on the given atoms.
    pub fn uniform(atoms: Vec<Vec<f64>>) -> Result<Self> {
        let n = atoms.len().max(1);
        let weights = vec![1.0 / n as f64; atoms.len()];
        Self::new(atoms, weights)
    }

    /// Dirac mass at `z`.
    pub fn point_mass(z: Vec<f64>) -> Self {
        DiscreteMeasure {
            atoms: vec![z],
            weights: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.atoms.iter().map(Vec::as_slice).zip(self.weights.iter().copied())
    }

    /// `Σ_i w_i · g(z_i)`. A non-finite integrand value on an atom is an error,
    /// even when the atom carries zero weight.
    pub fn expected_value<F>(&self, integrand: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64,
    {
        let mut total = 0.0;
        for (i, (z, w)) in self.iter().enumerate() {
            let g = integrand(z);
            if !g.is_finite() {
                return Err(Error::Evaluation(format!("integrand is {g} on atom {i}")));
            }
            total += w * g;
        }
        Ok(total)
    }

    /// Support points with aggregated mass, in first-occurrence order.
    /// Atoms are identified by exact coordinate equality.
    pub fn support(&self) -> Vec<(Vec<f64>, f64)> {
        let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
        for (z, w) in self.iter() {
            match out.iter_mut().find(|(a, _)| a.as_slice() == z) {
                Some(entry) => entry.1 += w,
                None => out.push((z.to_vec(), w)),
            }
        }
        out
    }
}
