use serde::Serialize;

use crate::divergences::EntropyFunction;
use crate::error::{Error, Result};
use crate::loss::Loss;
use crate::measure::DiscreteMeasure;

use super::kl_bisection::kl_dro_bisection;
use super::simplex::{solve_lp, LinearProgram, LpOutcome, Sense};

/// Worst-case distribution over a candidate set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectPrimal {
    pub value: f64,
    /// Mass on each candidate, in candidate order.
    pub distribution: Vec<f64>,
}

/// Maximizes `E_μ[ℓ]` over distributions `μ` on `candidates` with
/// `D_φ(μ, μ̂) ≤ r`, for φ = KL or total variation.
///
/// KL cannot move mass off the support of `μ̂`, so it reduces to the KL ball
/// around `μ̂`. Total variation is solved as an LP in `(μ, d)` with
/// `d_i ≥ |μ_i − μ̂_i|` on the support and off-support mass charged at unit
/// rate.
pub fn phi_primal_direct(
    phi: &EntropyFunction,
    loss: &Loss,
    mu_hat: &DiscreteMeasure,
    candidates: &[Vec<f64>],
    radius: f64,
) -> Result<DirectPrimal> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::Parameter(format!("radius must be finite and >= 0, got {radius}")));
    }
    let mut nominal = vec![0.0; candidates.len()];
    for (z, m) in mu_hat.iter() {
        let k = candidates
            .iter()
            .position(|c| c.as_slice() == z)
            .ok_or_else(|| Error::Input(format!("nominal atom {z:?} is not a candidate")))?;
        nominal[k] += m;
    }
    let losses: Vec<f64> = candidates.iter().map(|c| loss.eval(c)).collect::<Result<_>>()?;
    let mean: f64 = nominal.iter().zip(&losses).map(|(a, b)| a * b).sum();
    match phi {
        EntropyFunction::KullbackLeibler => {
            if radius == 0.0 {
                return Ok(DirectPrimal {
                    value: mean,
                    distribution: nominal,
                });
            }
            let out = kl_dro_bisection(&losses, &nominal, radius)?;
            Ok(DirectPrimal {
                value: out.value,
                distribution: out.probabilities,
            })
        }
        EntropyFunction::TotalVariation => {
            let n = candidates.len();
            let on: Vec<usize> = (0..n).filter(|&k| nominal[k] > 0.0).collect();
            // Variables: μ_0..μ_{n−1}, then one d per supported candidate.
            let width = n + on.len();
            let mut objective = vec![0.0; width];
            objective[..n].copy_from_slice(&losses);
            let mut lp = LinearProgram::new(objective);
            let mut row = vec![0.0; width];
            row[..n].iter_mut().for_each(|x| *x = 1.0);
            lp.push(row, Sense::Eq, 1.0);
            for (s, &k) in on.iter().enumerate() {
                let mut up = vec![0.0; width];
                up[k] = 1.0;
                up[n + s] = -1.0;
                lp.push(up, Sense::Le, nominal[k]);
                let mut down = vec![0.0; width];
                down[k] = -1.0;
                down[n + s] = -1.0;
                lp.push(down, Sense::Le, -nominal[k]);
            }
            let mut budget = vec![0.0; width];
            for k in 0..n {
                if nominal[k] == 0.0 {
                    budget[k] = 1.0;
                }
            }
            for s in 0..on.len() {
                budget[n + s] = 1.0;
            }
            lp.push(budget, Sense::Le, radius);
            match solve_lp(&lp)? {
                LpOutcome::Optimal { x, value } => Ok(DirectPrimal {
                    value,
                    distribution: x[..n].to_vec(),
                }),
                _ => Err(Error::Numerical("total-variation LP did not reach an optimum".into())),
            }
        }
        other => Err(Error::Unsupported(format!(
            "the direct primal oracle covers kullback-leibler and total-variation, not {other}"
        ))),
    }
}
