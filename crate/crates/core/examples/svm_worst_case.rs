//! Worst-case distributions of an empirical linear SVM. Writes CSV and SVG
//! files into the directory given as the first argument.

use std::path::PathBuf;

use otdro::error::Result;
use otdro::svm::{svm_demo, write_bundle, SvmExperimentConfig};

fn main() -> Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("svm-run"));
    let bundle = svm_demo(&SvmExperimentConfig::default())?;
    println!(
        "beta* = {:.4?}, beta_hat = {:.4?}, b_hat = {:.4}",
        bundle.data.beta_star, bundle.beta_hat, bundle.b_hat
    );
    for r in &bundle.results {
        println!(
            "r = {:<4} hinge risk {:.6}  mean weight {:.10}",
            r.radius, r.objective, r.mean_weight
        );
    }
    for path in write_bundle(&bundle, &dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
