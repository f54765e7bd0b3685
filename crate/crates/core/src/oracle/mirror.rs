use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::solvers::log_sum_exp;

const MAX_STEPS: usize = 5_000;
const STEP_TOL: f64 = 1e-15;

/// One conditioning cell: its mass `M_c`, reference kernel `κ_c` and losses.
#[derive(Debug, Clone, PartialEq)]
pub struct KlCell {
    pub mass: f64,
    pub kernel: Vec<f64>,
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MirrorResult {
    pub value: f64,
    /// Multiplier of the budget row; `0` when saturated.
    pub tau: f64,
    pub saturated: bool,
    /// Per-cell maximizing distributions.
    pub distributions: Vec<Vec<f64>>,
    /// `Σ_c M_c KL(q_c‖κ_c)` at the returned point.
    pub budget_used: f64,
}

impl KlCell {
    fn validate(&self) -> Result<()> {
        if self.kernel.len() != self.losses.len() || self.kernel.is_empty() {
            return Err(Error::Dimension {
                expected: self.kernel.len(),
                got: self.losses.len(),
            });
        }
        let total: f64 = self.kernel.iter().sum();
        if !(self.mass >= 0.0) || self.kernel.iter().any(|k| !(*k >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Input(
                "cell kernels must be probability vectors with nonnegative mass".into(),
            ));
        }
        if self.losses.iter().any(|l| !l.is_finite()) {
            return Err(Error::Input("cell losses must be finite".into()));
        }
        Ok(())
    }

    fn top(&self) -> (f64, f64) {
        let top = self
            .losses
            .iter()
            .zip(&self.kernel)
            .filter(|(_, k)| **k > 0.0)
            .map(|(l, _)| *l)
            .fold(f64::NEG_INFINITY, f64::max);
        let mass = self
            .losses
            .iter()
            .zip(&self.kernel)
            .filter(|(l, _)| **l == top)
            .map(|(_, k)| k)
            .sum();
        (top, mass)
    }

    /// Maximizes `q·ℓ − τ KL(q‖κ)` by exponentiated-gradient ascent with step
    /// `1/(2τ)` in log space, started from `κ`.
    fn ascend(&self, tau: f64) -> Vec<f64> {
        let support: Vec<usize> = (0..self.kernel.len()).filter(|&j| self.kernel[j] > 0.0).collect();
        let log_k: Vec<f64> = support.iter().map(|&j| self.kernel[j].ln()).collect();
        let mut log_q = log_k.clone();
        for _ in 0..MAX_STEPS {
            let raw: Vec<f64> = support
                .iter()
                .enumerate()
                .map(|(s, &j)| {
                    let grad = self.losses[j] - tau * (log_q[s] - log_k[s] + 1.0);
                    log_q[s] + grad / (2.0 * tau)
                })
                .collect();
            let z = log_sum_exp(&raw);
            let next: Vec<f64> = raw.iter().map(|x| x - z).collect();
            let change = next.iter().zip(&log_q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            log_q = next;
            if change <= STEP_TOL * (1.0 + log_q.iter().map(|x| x.abs()).fold(0.0, f64::max)) {
                break;
            }
        }
        let mut q = vec![0.0; self.kernel.len()];
        for (s, &j) in support.iter().enumerate() {
            q[j] = log_q[s].exp();
        }
        q
    }
}

fn kl(q: &[f64], k: &[f64]) -> f64 {
    q.iter().zip(k).filter(|(q, _)| **q > 0.0).map(|(q, k)| q * (q / k).ln()).sum()
}

fn evaluate(cells: &[KlCell], tau: f64) -> (Vec<Vec<f64>>, f64, f64) {
    let qs: Vec<Vec<f64>> = cells.iter().map(|c| c.ascend(tau)).collect();
    let used = cells.iter().zip(&qs).map(|(c, q)| c.mass * kl(q, &c.kernel)).sum();
    let value = cells
        .iter()
        .zip(&qs)
        .map(|(c, q)| c.mass * q.iter().zip(&c.losses).map(|(a, b)| a * b).sum::<f64>())
        .sum();
    (qs, used, value)
}

/// Maximizes `Σ_c M_c E_{q_c}[ℓ_c]` subject to `Σ_c M_c KL(q_c‖κ_c) ≤ budget`.
///
/// For a fixed multiplier `τ` every cell is solved by mirror ascent; the
/// budget used decreases in `τ`, and a bisection in `log τ` shared across
/// cells makes the budget row tight.
pub fn mirror_ascent_kl_cells(cells: &[KlCell], budget: f64) -> Result<MirrorResult> {
    if !(budget >= 0.0) || !budget.is_finite() {
        return Err(Error::Parameter(format!("budget must be finite and nonnegative, got {budget}")));
    }
    for c in cells {
        c.validate()?;
    }
    let cells: Vec<KlCell> = cells.iter().filter(|c| c.mass > 0.0).cloned().collect();
    if cells.is_empty() {
        return Err(Error::Input("no cell carries mass".into()));
    }
    let tops: Vec<(f64, f64)> = cells.iter().map(KlCell::top).collect();
    let reach: f64 = cells.iter().zip(&tops).map(|(c, t)| c.mass * -t.1.ln()).sum();
    if budget >= reach {
        let distributions = cells
            .iter()
            .zip(&tops)
            .map(|(c, (top, mass))| {
                c.losses
                    .iter()
                    .zip(&c.kernel)
                    .map(|(l, k)| if l == top { k / mass } else { 0.0 })
                    .collect()
            })
            .collect();
        return Ok(MirrorResult {
            value: cells.iter().zip(&tops).map(|(c, t)| c.mass * t.0).sum(),
            tau: 0.0,
            saturated: true,
            distributions,
            budget_used: reach,
        });
    }
    if budget == 0.0 {
        let distributions: Vec<Vec<f64>> = cells.iter().map(|c| c.kernel.clone()).collect();
        let value = cells
            .iter()
            .map(|c| c.mass * c.kernel.iter().zip(&c.losses).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        return Ok(MirrorResult {
            value,
            tau: f64::INFINITY,
            saturated: false,
            distributions,
            budget_used: 0.0,
        });
    }
    let spread = cells
        .iter()
        .map(|c| {
            let hi = c.losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = c.losses.iter().copied().fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .fold(0.0, f64::max)
        .max(1e-300);
    let used = |log_tau: f64| evaluate(&cells, log_tau.exp()).1;
    let (mut lo, mut hi) = (spread.ln(), spread.ln());
    while used(lo) < budget && lo > -700.0 {
        lo -= 2.0;
    }
    while used(hi) > budget && hi < 700.0 {
        hi += 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if used(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let tau = hi.exp();
    let (distributions, budget_used, value) = evaluate(&cells, tau);
    Ok(MirrorResult {
        value,
        tau,
        saturated: false,
        distributions,
        budget_used,
    })
}

/// Single-cell form: `max q·ℓ` over `KL(q‖κ) ≤ budget`, `κ` given as a
/// discrete measure whose atoms are aligned with `losses`.
pub fn mirror_ascent_kl_ball(kernel_row: &DiscreteMeasure, losses: &[f64], budget: f64) -> Result<f64> {
    let cell = KlCell {
        mass: 1.0,
        kernel: kernel_row.weights().to_vec(),
        losses: losses.to_vec(),
    };
    Ok(mirror_ascent_kl_cells(&[cell], budget)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::kl_dro_bisection;

    fn two_point() -> DiscreteMeasure {
        DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0]]).unwrap()
    }

    #[test]
    fn zero_budget_is_mean() {
        assert_eq!(mirror_ascent_kl_ball(&two_point(), &[0.0, 1.0], 0.0).unwrap(), 0.5);
    }

    #[test]
    fn point_mass_budget_saturates() {
        assert_eq!(mirror_ascent_kl_ball(&two_point(), &[0.0, 1.0], 2f64.ln()).unwrap(), 1.0);
    }

    #[test]
    fn agrees_with_bisection() {
        let m = mirror_ascent_kl_ball(&two_point(), &[0.0, 1.0], 0.1).unwrap();
        let b = kl_dro_bisection(&[0.0, 1.0], &[0.5, 0.5], 0.1).unwrap();
        assert!((m - b.value).abs() < 1e-9, "{m} vs {}", b.value);
    }

    #[test]
    fn budget_is_tight() {
        let cells = vec![
            KlCell {
                mass: 0.4,
                kernel: vec![0.2, 0.3, 0.5],
                losses: vec![1.0, -1.0, 0.5],
            },
            KlCell {
                mass: 0.6,
                kernel: vec![0.7, 0.3],
                losses: vec![0.0, 2.0],
            },
        ];
        let out = mirror_ascent_kl_cells(&cells, 0.2).unwrap();
        assert!((out.budget_used - 0.2).abs() < 1e-9);
        for q in &out.distributions {
            assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
