//! Worst-case risk over a KL-interpolated ball and its extracted coupling.

use otdro::cost::GroundCost;
use otdro::divergences::EntropyFunction;
use otdro::error::Result;
use otdro::lifting::build_interpolated;
use otdro::loss::{Loss, PiecewiseAffineLoss};
use otdro::measure::DiscreteMeasure;
use otdro::solvers::{solve_kl_interpolated, SearchOptions};

fn main() -> Result<()> {
    let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![1.0, 0.5], 0.0), (vec![-1.0, 0.0], 1.0)])?.into();
    let mu = DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![1.0, -1.0], vec![0.5, 2.0], vec![-1.0, 0.5]])?;
    for r in [0.0, 0.05, 0.2, 1.0] {
        let inst = build_interpolated(
            loss.clone(),
            GroundCost::squared_euclidean(),
            EntropyFunction::KullbackLeibler,
            &mu,
            r,
            1.0,
            1.0,
            None,
        )?;
        let out = solve_kl_interpolated(&inst, &SearchOptions::default())?;
        println!(
            "r = {r:<5} risk {:.6}  lambda* {:.4e}  primal {:.6}  mean w {:.8}",
            out.certificate.objective,
            out.certificate.lambda_star,
            out.diagnostics.primal_value,
            out.mean_weight()
        );
        for rec in &out.records {
            println!("    {:?} -> {:.4?} with weight {:.4}", rec.nominal, rec.perturbed, rec.weight);
        }
    }
    Ok(())
}
