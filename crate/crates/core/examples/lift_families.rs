//! The four lifts of one small problem, printed as instance JSON summaries.

use otdro::cost::GroundCost;
use otdro::divergences::EntropyFunction;
use otdro::error::Result;
use otdro::lifting::{build_interpolated, lift_phi_divergence, lift_sinkhorn, lift_wasserstein, DEFAULT_MIX_EPSILON};
use otdro::loss::{Loss, PiecewiseAffineLoss};
use otdro::measure::DiscreteMeasure;

fn main() -> Result<()> {
    let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![1.0], 0.0), (vec![-1.0], 0.5)])?.into();
    let mu = DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0], vec![2.0]])?;
    let reference = DiscreteMeasure::uniform((0..9).map(|k| vec![-1.0 + 0.5 * k as f64]).collect())?;
    let ground = GroundCost::p_norm(1.0)?;

    let lifts = [
        lift_wasserstein(loss.clone(), ground.clone(), &mu, 0.2, None)?,
        lift_phi_divergence(
            loss.clone(),
            EntropyFunction::TotalVariation,
            &mu,
            0.2,
            DEFAULT_MIX_EPSILON,
            Some(vec![3.0]),
            None,
        )?,
        lift_sinkhorn(loss.clone(), ground.clone(), &mu, 0.5, 0.1, &reference)?.0,
        build_interpolated(loss, ground, EntropyFunction::KullbackLeibler, &mu, 0.2, 1.0, 1.0, None)?,
    ];
    for inst in &lifts {
        println!("{:<14} {} atoms in dimension {}", inst.cost.family(), inst.n_atoms(), inst.v_dim());
        for i in 0..inst.n_atoms().min(4) {
            println!(
                "    v = {:?}  w = {}  mass = {:.4}",
                inst.nominal_v(i),
                inst.nominal_w(i),
                inst.nominal_mass(i)
            );
        }
    }
    println!("{}", lifts[0].to_json());
    Ok(())
}
