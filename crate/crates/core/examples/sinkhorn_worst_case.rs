//! Sinkhorn ball: dual solve against exponentiated-gradient ascent on the
//! kernel-reweighted primal.

use otdro::cost::GroundCost;
use otdro::error::Result;
use otdro::lifting::sinkhorn_kernel;
use otdro::loss::{Loss, PiecewiseAffineLoss};
use otdro::measure::DiscreteMeasure;
use otdro::oracle::{mirror_ascent_kl_cells, KlCell};
use otdro::solvers::{solve_sinkhorn, SearchOptions};

fn main() -> Result<()> {
    let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![1.0], 0.0), (vec![-2.0], 0.5)])?.into();
    let mu = DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0]])?;
    let reference = DiscreteMeasure::uniform((0..6).map(|k| vec![-1.0 + 0.6 * k as f64]).collect())?;
    let reg = 0.2;
    for r in [0.3, 0.6, 1.2] {
        let data = sinkhorn_kernel(&GroundCost::squared_euclidean(), &mu, r, reg, &reference)?;
        if data.adjusted_radius < 0.0 {
            println!("r = {r}: adjusted radius {:.4} < 0, infeasible", data.adjusted_radius);
            continue;
        }
        let dual = solve_sinkhorn(&data, &loss, &SearchOptions::default())?;
        let cells: Vec<KlCell> = data
            .kernel_rows
            .iter()
            .zip(data.nominal.weights())
            .map(|(row, m)| {
                Ok(KlCell {
                    mass: *m,
                    kernel: row.weights().to_vec(),
                    losses: row.atoms().iter().map(|z| loss.eval(z)).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        let primal = mirror_ascent_kl_cells(&cells, data.adjusted_radius / reg)?;
        println!(
            "r = {r}: adjusted {:.4}, dual {:.8}, mirror ascent {:.8}",
            data.adjusted_radius, dual.certificate.objective, primal.value
        );
    }
    Ok(())
}
