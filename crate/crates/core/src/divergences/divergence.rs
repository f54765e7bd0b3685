use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::measure::DiscreteMeasure;

use super::EntropyFunction;

/// Masses of `μ` and `μ̂` on the union of their supports, in first-occurrence
/// order (atoms of `μ` first).
pub fn aligned_masses(mu: &DiscreteMeasure, mu_hat: &DiscreteMeasure) -> Result<Vec<(Vec<f64>, f64, f64)>> {
    if mu.dim() != mu_hat.dim() {
        return Err(Error::Dimension {
            expected: mu_hat.dim(),
            got: mu.dim(),
        });
    }
    let mut rows: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    for (z, w) in mu.iter() {
        match rows.iter_mut().find(|r| r.0.as_slice() == z) {
            Some(r) => r.1 += w,
            None => rows.push((z.to_vec(), w, 0.0)),
        }
    }
    for (z, w) in mu_hat.iter() {
        match rows.iter_mut().find(|r| r.0.as_slice() == z) {
            Some(r) => r.2 += w,
            None => rows.push((z.to_vec(), 0.0, w)),
        }
    }
    Ok(rows)
}

/// The two terms of the decomposition
///
/// ```text
/// D_φ(μ, μ̂) = ∫ φ(μ/μ̂) dμ̂  +  φ′∞ · μ(μ̂ = 0)
///             └ on support ┘    └ off support ┘
/// ```
///
/// evaluated in extended arithmetic (`∞·0 = 0`).
pub fn divergence_decomposed(phi: &EntropyFunction, mu: &DiscreteMeasure, mu_hat: &DiscreteMeasure) -> Result<(Ext, Ext)> {
    let rows = aligned_masses(mu, mu_hat)?;
    let mut on = Ext::ZERO;
    let mut off_mass = 0.0;
    for (_, m, m_hat) in &rows {
        if *m_hat > 0.0 {
            on = on + phi.value(m / m_hat).scale(*m_hat);
        } else {
            off_mass += m;
        }
    }
    Ok((on, phi.recession().scale(off_mass)))
}

/// Generalized φ-divergence of `μ` from `μ̂` for finitely supported measures.
///
/// The dominating measure is uniform on the union of the supports, so every
/// density ratio is a ratio of atom masses. Mass of `μ` where `μ̂` vanishes is
/// charged at the recession slope; with `φ′∞ = ∞` any such mass gives `+∞`.
pub fn generalized_divergence(phi: &EntropyFunction, mu: &DiscreteMeasure, mu_hat: &DiscreteMeasure) -> Result<Ext> {
    let (on, off) = divergence_decomposed(phi, mu, mu_hat)?;
    Ok(on + off)
}

#[cfg(test)]
mod tests {
    use super::*;
    use EntropyFunction::*;

    fn two_point(p: f64) -> DiscreteMeasure {
        DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![p, 1.0 - p]).unwrap()
    }

    #[test]
    fn identical_measures_have_zero_divergence() {
        let m = two_point(0.3);
        for phi in EntropyFunction::catalog() {
            assert_eq!(generalized_divergence(&phi, &m, &m).unwrap(), Ext::ZERO);
            assert_eq!(divergence_decomposed(&phi, &m, &m).unwrap(), (Ext::ZERO, Ext::ZERO));
        }
    }

    #[test]
    fn total_variation_on_shared_support() {
        let d = generalized_divergence(&TotalVariation, &two_point(0.6), &two_point(0.5)).unwrap();
        assert!((d.finite().unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn off_support_mass() {
        let mu_hat = DiscreteMeasure::point_mass(vec![0.0]);
        let mu = DiscreteMeasure::new(vec![vec![0.0], vec![5.0]], vec![0.9, 0.1]).unwrap();
        assert_eq!(generalized_divergence(&KullbackLeibler, &mu, &mu_hat).unwrap(), Ext::Infinite);
        let (_, off) = divergence_decomposed(&Burg, &mu, &mu_hat).unwrap();
        assert!((off.finite().unwrap() - 0.1).abs() < 1e-15);
        let mu = DiscreteMeasure::new(vec![vec![0.0], vec![5.0]], vec![0.7, 0.3]).unwrap();
        let (_, off) = divergence_decomposed(&KullbackLeibler, &mu, &mu_hat).unwrap();
        assert_eq!(off, Ext::Infinite);
    }

    #[test]
    fn zero_weight_atoms_count_as_off_support() {
        let mu_hat = DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![1.0, 0.0]).unwrap();
        let mu = two_point(0.5);
        let (on, off) = divergence_decomposed(&TotalVariation, &mu, &mu_hat).unwrap();
        assert_eq!(on, Ext::Finite(0.5));
        assert_eq!(off, Ext::Finite(0.5));
    }

    #[test]
    fn dimension_mismatch() {
        let a = DiscreteMeasure::point_mass(vec![0.0]);
        let b = DiscreteMeasure::point_mass(vec![0.0, 1.0]);
        assert!(generalized_divergence(&KullbackLeibler, &a, &b).is_err());
    }
}
