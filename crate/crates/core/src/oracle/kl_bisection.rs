use serde::Serialize;

use crate::error::{Error, Result};

/// Solution of `max E_p[ℓ]` over `KL(p‖q) ≤ r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KlDroResult {
    pub value: f64,
    /// Dual multiplier; `0` when saturated.
    pub lambda: f64,
    /// The budget reaches every point mass on a maximal loss.
    pub saturated: bool,
    /// Worst-case distribution `p_i ∝ q_i exp(ℓ_i/λ)`.
    pub probabilities: Vec<f64>,
}

fn tilt(losses: &[f64], weights: &[f64], lam: f64) -> Vec<f64> {
    let top = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = losses.iter().zip(weights).map(|(l, q)| q * ((l - top) / lam).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(p, _)| **p > 0.0).map(|(p, q)| p * (p / q).ln()).sum()
}

/// `min_{λ>0} λr + λ log Σ_i q_i exp(ℓ_i/λ)`.
///
/// The derivative in `λ` is `r − KL(p_λ‖q)` with `p_λ ∝ q exp(ℓ/λ)`, which
/// increases from `r − log(1/Q⋆)` to `r`, `Q⋆` being the weight on the
/// maximal losses. Its root is found by bisection in `log λ`; when
/// `r ≥ log(1/Q⋆)` there is none and the value is `max ℓ`.
pub fn kl_dro_bisection(losses: &[f64], weights: &[f64], radius: f64) -> Result<KlDroResult> {
    if losses.len() != weights.len() {
        return Err(Error::Dimension {
            expected: losses.len(),
            got: weights.len(),
        });
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Parameter(format!("radius must be positive, got {radius}")));
    }
    if losses.iter().chain(weights).any(|x| !x.is_finite()) || weights.iter().any(|w| *w < 0.0) {
        return Err(Error::Input("losses and weights must be finite, weights nonnegative".into()));
    }
    let (ls, qs): (Vec<f64>, Vec<f64>) = losses.iter().zip(weights).filter(|(_, q)| **q > 0.0).map(|(l, q)| (*l, *q)).unzip();
    let total: f64 = qs.iter().sum();
    if ls.is_empty() || (total - 1.0).abs() > 1e-9 {
        return Err(Error::Input("weights must sum to one".into()));
    }
    let top = ls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bottom = ls.iter().copied().fold(f64::INFINITY, f64::min);
    let top_mass: f64 = ls.iter().zip(&qs).filter(|(l, _)| **l == top).map(|(_, q)| q).sum();
    let expand = |p: Vec<f64>| {
        let mut it = p.into_iter();
        weights
            .iter()
            .map(|q| if *q > 0.0 { it.next().expect("aligned") } else { 0.0 })
            .collect::<Vec<f64>>()
    };
    if top == bottom || radius >= -top_mass.ln() {
        let p: Vec<f64> = ls
            .iter()
            .zip(&qs)
            .map(|(l, q)| if *l == top { q / top_mass } else { 0.0 })
            .collect();
        return Ok(KlDroResult {
            value: top,
            lambda: 0.0,
            saturated: true,
            probabilities: expand(p),
        });
    }
    let gap = |lam: f64| radius - kl(&tilt(&ls, &qs, lam), &qs);
    let spread = top - bottom;
    let (mut lo, mut hi) = (spread.ln(), spread.ln());
    while gap(lo.exp()) > 0.0 && lo > -700.0 {
        lo -= 2.0;
    }
    while gap(hi.exp()) < 0.0 && hi < 700.0 {
        hi += 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid.exp()) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let lam = (0.5 * (lo + hi)).exp();
    let p = tilt(&ls, &qs, lam);
    let value = p.iter().zip(&ls).map(|(p, l)| p * l).sum();
    Ok(KlDroResult {
        value,
        lambda: lam,
        saturated: false,
        probabilities: expand(p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_losses() {
        for r in [1e-3, 0.5, 10.0] {
            let out = kl_dro_bisection(&[2.0, 2.0, 2.0], &[0.2, 0.3, 0.5], r).unwrap();
            assert_eq!(out.value, 2.0);
        }
    }

    #[test]
    fn large_radius_migrates_to_max() {
        let out = kl_dro_bisection(&[0.0, 1.0], &[0.5, 0.5], 100.0).unwrap();
        assert!(out.saturated);
        assert_eq!(out.value, 1.0);
    }

    #[test]
    fn two_point_primal_scan() {
        let r = 0.1;
        let out = kl_dro_bisection(&[0.0, 1.0], &[0.5, 0.5], r).unwrap();
        // Primal: p = (1 − q, q) on the boundary Σ p log 2p = r, found by scan
        // over q ∈ [0.5, 1] then polished by bisection.
        let f = |q: f64| q * (2.0 * q).ln() + (1.0 - q) * (2.0 * (1.0 - q)).ln() - r;
        let n = 100_000;
        let k = (0..=n)
            .map(|k| 0.5 + 0.5 * k as f64 / n as f64)
            .take_while(|&q| f(q) <= 0.0)
            .count();
        let (mut lo, mut hi) = (0.5 + 0.5 * (k - 1) as f64 / n as f64, 0.5 + 0.5 * k as f64 / n as f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) <= 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((out.value - lo).abs() < 1e-6, "{} vs {lo}", out.value);
        assert!((out.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_atoms_ignored() {
        let a = kl_dro_bisection(&[0.0, 9.0, 1.0], &[0.5, 0.0, 0.5], 0.1).unwrap();
        let b = kl_dro_bisection(&[0.0, 1.0], &[0.5, 0.5], 0.1).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.probabilities[1], 0.0);
    }

    #[test]
    fn rejects_zero_radius() {
        assert!(kl_dro_bisection(&[0.0], &[1.0], 0.0).is_err());
    }
}
