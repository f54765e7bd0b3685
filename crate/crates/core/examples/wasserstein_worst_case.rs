//! Wasserstein worst case with a 2-norm and a squared cost.

use otdro::cost::GroundCost;
use otdro::error::Result;
use otdro::lifting::lift_wasserstein;
use otdro::loss::{Loss, PiecewiseAffineLoss};
use otdro::measure::DiscreteMeasure;
use otdro::solvers::{solve_wasserstein, SearchOptions};

fn main() -> Result<()> {
    let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![2.0], -1.0), (vec![-0.5], 0.0)])?.into();
    let mu = DiscreteMeasure::uniform(vec![vec![-1.0], vec![0.0], vec![0.5], vec![1.5]])?;
    for ground in [GroundCost::p_norm(2.0)?, GroundCost::squared_euclidean()] {
        for r in [0.1, 0.5] {
            let inst = lift_wasserstein(loss.clone(), ground.clone(), &mu, r, None)?;
            let out = solve_wasserstein(&inst, &SearchOptions::default())?;
            println!(
                "{ground:?} r = {r}: risk {:.8} at lambda* {:.6}, weak duality {}",
                out.certificate.objective, out.certificate.lambda_star, out.diagnostics.weak_duality_ok
            );
        }
    }
    Ok(())
}
