//! Generalized φ-divergences between discrete measures, split into the
//! on-support integral and the off-support recession term.

use otdro::divergences::{divergence_decomposed, EntropyFunction};
use otdro::error::Result;
use otdro::measure::DiscreteMeasure;

fn main() -> Result<()> {
    let mu = DiscreteMeasure::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0.2, 0.5, 0.3])?;
    let mu_hat = DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5])?;
    for phi in EntropyFunction::catalog() {
        let (on, off) = divergence_decomposed(&phi, &mu, &mu_hat)?;
        // Swapping the arguments and the entropy gives the same number.
        let (on_t, off_t) = divergence_decomposed(&phi.csiszar_dual(), &mu_hat, &mu)?;
        println!(
            "{:<22} D = {:<12} on = {:<12} off = {:<8} dual form = {}",
            phi.to_string(),
            (on + off).to_string(),
            on.to_string(),
            off.to_string(),
            on_t + off_t
        );
    }
    Ok(())
}
