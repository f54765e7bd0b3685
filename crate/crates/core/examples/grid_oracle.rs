//! Brute-force LP primal on refining grids next to the dual value.

use otdro::cost::GroundCost;
use otdro::error::Result;
use otdro::lifting::lift_wasserstein;
use otdro::loss::{Loss, PiecewiseAffineLoss};
use otdro::measure::DiscreteMeasure;
use otdro::oracle::lp_primal_trace;
use otdro::solvers::{solve_wasserstein, SearchOptions};

fn main() -> Result<()> {
    // With a squared cost the maximizers v̂ + a/(2λ) sit on the lattice here.
    let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![1.0], 0.0), (vec![-1.0], 0.0)])?.into();
    let mu = DiscreteMeasure::uniform(vec![vec![0.5], vec![1.0]])?;
    let inst = lift_wasserstein(loss, GroundCost::squared_euclidean(), &mu, 0.25, None)?;
    let dual = solve_wasserstein(&inst, &SearchOptions::default())?;
    let report = lp_primal_trace(&inst, 0.5, 2.0, &[], Some(dual.certificate.objective))?;
    for level in &report.grid_trace {
        println!("step {:<6} value {:.10} ({} variables)", level.v_step, level.value, level.variables);
    }
    println!(
        "dual {:.10}, gap {:.2e}",
        dual.certificate.objective,
        report.gap_vs_dual.unwrap_or(f64::NAN)
    );
    Ok(())
}
