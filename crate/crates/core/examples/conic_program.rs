//! Exponential-cone program of a KL-interpolated instance, checked against
//! the solver's certificate.

use otdro::conic::{build_conic, serialize_conic, verify_certificate};
use otdro::cost::GroundCost;
use otdro::divergences::EntropyFunction;
use otdro::error::Result;
use otdro::instance::ValueDomain;
use otdro::lifting::build_interpolated;
use otdro::loss::{Loss, PiecewiseAffineLoss};
use otdro::measure::DiscreteMeasure;
use otdro::solvers::{solve_kl_interpolated, SearchOptions};

fn main() -> Result<()> {
    let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![1.0, -1.0], 0.0), (vec![0.0, 0.0], 0.2)])?.into();
    let mu = DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![0.5, 0.5]])?;
    let domain = ValueDomain::boxed(vec![-1.0, -1.0], vec![1.0, 1.0], 4.0)?;
    let inst = build_interpolated(
        loss,
        GroundCost::p_norm(1.0)?,
        EntropyFunction::KullbackLeibler,
        &mu,
        0.3,
        1.0,
        1.0,
        Some(domain),
    )?;
    let program = build_conic(&inst)?;
    let out = solve_kl_interpolated(&inst, &SearchOptions::default())?;
    let report = verify_certificate(&program, &out.certificate, &inst)?;
    println!(
        "{} variables, {} rows, {} cones",
        program.n_vars,
        program.rows.len(),
        program.cones.len()
    );
    println!(
        "max violation {:.2e}, objective gap {:.2e}",
        report.max_violation, report.objective_gap
    );
    println!("{}", serialize_conic(&program));
    Ok(())
}
