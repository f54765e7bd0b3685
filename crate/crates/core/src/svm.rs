//! Worst-case distributions for a linear SVM under a KL-interpolated ball.
//!
//! Data are drawn from a seeded [`Rng`]: a true separator `β⋆` and features
//! from the standard 2-D normal, pseudo-labels `sign(⟨β⋆, x⟩)` flipped by
//! `N(0, σ²)` noise. An empirical SVM is trained by subgradient descent, and
//! for each radius the worst case of its hinge loss is computed on the
//! lifted outcome `v = (x₁, x₂, y, 1)`. The label and the constant
//! coordinate carrying the bias are guarded, so only features move.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cost::GroundCost;
use crate::divergences::EntropyFunction;
use crate::error::{Error, Result};
use crate::instance::{LiftedInstance, TransportRecord};
use crate::lifting::build_interpolated;
use crate::loss::{Loss, PiecewiseAffineLoss};
use crate::measure::DiscreteMeasure;
use crate::plot::{scatter_with_boundary, weight_map, Frame};
use crate::rng::Rng;
use crate::solvers::{solve_kl_interpolated, SearchOptions};

pub const TRAINING_STEPS: usize = 10_000;
/// Fresh seeds tried when a draw has a single class.
const MAX_RESEEDS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvmExperimentConfig {
    pub sample_count: usize,
    pub noise_variance: f64,
    pub radii: Vec<f64>,
    pub theta1: f64,
    pub theta2: f64,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SvmExperimentConfig {
    fn default() -> Self {
        SvmExperimentConfig {
            sample_count: 32,
            noise_variance: 1e-4,
            radii: vec![0.0, 0.1, 0.2, 0.5],
            theta1: 1.0,
            theta2: 1.0,
            seed: 0,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvmData {
    pub seed_used: u64,
    pub beta_star: [f64; 2],
    pub features: Vec<[f64; 2]>,
    pub labels: Vec<f64>,
}

fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// One draw of the synthetic data set.
pub fn draw(seed: u64, n: usize, noise_variance: f64) -> SvmData {
    let mut rng = Rng::seeded(seed);
    let beta_star = [rng.normal(), rng.normal()];
    let features: Vec<[f64; 2]> = (0..n).map(|_| [rng.normal(), rng.normal()]).collect();
    let sd = noise_variance.sqrt();
    let labels = features
        .iter()
        .map(|x| {
            let pseudo = sign(beta_star[0] * x[0] + beta_star[1] * x[1]);
            sign(pseudo + sd * rng.normal())
        })
        .collect();
    SvmData {
        seed_used: seed,
        beta_star,
        features,
        labels,
    }
}

/// Average hinge loss `(1/n) Σ max(0, 1 − y(βᵀx + b))`.
pub fn hinge_risk(features: &[[f64; 2]], labels: &[f64], beta: [f64; 2], b: f64) -> f64 {
    features
        .iter()
        .zip(labels)
        .map(|(x, y)| (1.0 - y * (beta[0] * x[0] + beta[1] * x[1] + b)).max(0.0))
        .sum::<f64>()
        / features.len() as f64
}

/// Subgradient descent on the average hinge loss from zero, step `1/√t`,
/// returning the last iterate. No regularization, no feature scaling.
pub fn train(features: &[[f64; 2]], labels: &[f64]) -> ([f64; 2], f64) {
    let n = features.len() as f64;
    let (mut beta, mut b) = ([0.0f64; 2], 0.0f64);
    for t in 1..=TRAINING_STEPS {
        let (mut g, mut gb) = ([0.0f64; 2], 0.0f64);
        for (x, y) in features.iter().zip(labels) {
            if y * (beta[0] * x[0] + beta[1] * x[1] + b) < 1.0 {
                g[0] -= y * x[0];
                g[1] -= y * x[1];
                gb -= y;
            }
        }
        let step = 1.0 / (t as f64).sqrt();
        beta[0] -= step * g[0] / n;
        beta[1] -= step * g[1] / n;
        b -= step * gb / n;
    }
    (beta, b)
}

/// Lifted instance for one radius: `v = (x₁, x₂, y, 1)`, per-class hinge
/// pieces `(−y(β₁, β₂, 0, b), 1)` and `(0, 0)`, label-guarded squared cost.
pub fn svm_instance(data: &SvmData, beta: [f64; 2], b: f64, radius: f64, theta1: f64, theta2: f64) -> Result<LiftedInstance> {
    let class = |y: f64| PiecewiseAffineLoss::from_pairs(vec![(vec![-y * beta[0], -y * beta[1], 0.0, -y * b], 1.0), (vec![0.0; 4], 0.0)]);
    let loss = Loss::label_conditioned(2, vec![(1.0, class(1.0)?), (-1.0, class(-1.0)?)])?;
    let atoms = data
        .features
        .iter()
        .zip(&data.labels)
        .map(|(x, y)| vec![x[0], x[1], *y, 1.0])
        .collect();
    let mu = DiscreteMeasure::uniform(atoms)?;
    build_interpolated(
        loss,
        GroundCost::label_guard(vec![2, 3]),
        EntropyFunction::KullbackLeibler,
        &mu,
        radius,
        theta1,
        theta2,
        None,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusResult {
    pub radius: f64,
    pub objective: f64,
    pub lambda_star: f64,
    pub primal_value: f64,
    pub mean_weight: f64,
    pub converged: bool,
    pub weak_duality_ok: bool,
    pub labels_preserved: bool,
    pub records: Vec<TransportRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvmBundle {
    pub config: SvmExperimentConfig,
    pub data: SvmData,
    pub beta_hat: [f64; 2],
    pub b_hat: f64,
    pub empirical_hinge_risk: f64,
    pub substitutions: Vec<String>,
    pub results: Vec<RadiusResult>,
}

impl SvmBundle {
    /// Worst-case risk strictly increases along the configured radii.
    pub fn risk_strictly_increasing(&self) -> bool {
        self.results.windows(2).all(|w| w[1].objective > w[0].objective)
    }
}

/// Runs the experiment without touching the file system.
pub fn svm_demo(config: &SvmExperimentConfig) -> Result<SvmBundle> {
    if config.sample_count < 2 {
        return Err(Error::Parameter("the experiment needs at least two samples".into()));
    }
    if config.radii.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
        return Err(Error::Parameter("radii must be finite and nonnegative".into()));
    }
    let mut substitutions = Vec::new();
    let mut data = None;
    for k in 0..MAX_RESEEDS {
        let seed = config.seed.wrapping_add(k);
        let d = draw(seed, config.sample_count, config.noise_variance);
        if d.labels.iter().all(|y| *y == d.labels[0]) {
            substitutions.push(format!("seed {seed} drew a single class; moved to seed {}", seed.wrapping_add(1)));
            log::warn!("{}", substitutions.last().expect("just pushed"));
            continue;
        }
        data = Some(d);
        break;
    }
    let data = data.ok_or_else(|| Error::Numerical(format!("{MAX_RESEEDS} consecutive seeds drew a single class")))?;
    let (beta_hat, b_hat) = train(&data.features, &data.labels);
    let opts = SearchOptions {
        tol: config.tol,
        ..SearchOptions::default()
    };
    let mut results = Vec::with_capacity(config.radii.len());
    for &r in &config.radii {
        let inst = svm_instance(&data, beta_hat, b_hat, r, config.theta1, config.theta2)?;
        let out = solve_kl_interpolated(&inst, &opts)?;
        let labels_preserved = out
            .records
            .iter()
            .all(|rec| rec.perturbed[2] == rec.nominal[2] && rec.perturbed[3] == rec.nominal[3]);
        log::info!("radius {r}: worst-case hinge risk {}", out.certificate.objective);
        results.push(RadiusResult {
            radius: r,
            objective: out.certificate.objective,
            lambda_star: out.certificate.lambda_star,
            primal_value: out.diagnostics.primal_value,
            mean_weight: out.mean_weight(),
            converged: out.diagnostics.converged,
            weak_duality_ok: out.diagnostics.weak_duality_ok,
            labels_preserved,
            records: out.records,
        });
    }
    Ok(SvmBundle {
        config: config.clone(),
        empirical_hinge_risk: hinge_risk(&data.features, &data.labels, beta_hat, b_hat),
        data,
        beta_hat,
        b_hat,
        substitutions,
        results,
    })
}

/// Worst-case records as CSV: `x1,x2,y,w` with 17 significant digits.
///
/// Every row has probability `w/n` for `n` samples. An atom split between two
/// tied maximizers gives two rows whose `w` is scaled by the share of the
/// atom's mass each carries.
pub fn records_csv(records: &[TransportRecord], n: usize) -> String {
    let m0 = 1.0 / n as f64;
    let mut out = String::from("x1,x2,y,w\n");
    for r in records {
        let w = if r.nominal_mass == m0 {
            r.weight
        } else {
            r.weight * r.nominal_mass / m0
        };
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            r.perturbed[0], r.perturbed[1], r.perturbed[2], w
        );
    }
    out
}

/// Writes `contents` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Input(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| Error::Input(format!("writing {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| Error::Input(format!("renaming into {}: {e}", path.display())))
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    config: &'a SvmExperimentConfig,
    seed_used: u64,
    substitutions: &'a [String],
    rng: &'static str,
    training: &'static str,
    preprocessing: &'static str,
    beta_star: [f64; 2],
    beta_hat: [f64; 2],
    b_hat: f64,
    empirical_hinge_risk: f64,
    radii: Vec<RadiusSummary>,
}

#[derive(Serialize)]
struct RadiusSummary {
    radius: f64,
    objective: f64,
    lambda_star: f64,
    primal_value: f64,
    mean_weight: f64,
    converged: bool,
    weak_duality_ok: bool,
    labels_preserved: bool,
    csv: String,
    perturbed_svg: String,
    weights_svg: String,
}

fn stem(r: f64) -> String {
    format!("r{r}")
}

/// Writes per-radius CSV and SVG files plus `run.json` into `dir`. Returns
/// the paths written.
pub fn write_bundle(bundle: &SvmBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Input(format!("creating {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let mut all_points: Vec<[f64; 2]> = bundle.data.features.clone();
    for res in &bundle.results {
        all_points.extend(res.records.iter().map(|r| [r.perturbed[0], r.perturbed[1]]));
    }
    let frame = Frame::fit(&all_points);
    let mut summaries = Vec::new();
    for res in &bundle.results {
        let s = stem(res.radius);
        let csv = format!("worst_case_{s}.csv");
        let perturbed_svg = format!("perturbed_{s}.svg");
        let weights_svg = format!("weights_{s}.svg");
        let perturbed: Vec<[f64; 3]> = res
            .records
            .iter()
            .map(|r| [r.perturbed[0], r.perturbed[1], r.perturbed[2]])
            .collect();
        let weighted: Vec<[f64; 3]> = res.records.iter().map(|r| [r.nominal[0], r.nominal[1], r.weight]).collect();
        let files = [
            (csv.clone(), records_csv(&res.records, bundle.data.labels.len())),
            (
                perturbed_svg.clone(),
                scatter_with_boundary(
                    &perturbed,
                    &frame,
                    bundle.beta_hat,
                    bundle.b_hat,
                    &format!("worst-case samples, r = {}", res.radius),
                ),
            ),
            (
                weights_svg.clone(),
                weight_map(&weighted, &frame, &format!("worst-case weights, r = {}", res.radius)),
            ),
        ];
        for (name, body) in files {
            let path = dir.join(name);
            write_atomic(&path, &body)?;
            written.push(path);
        }
        summaries.push(RadiusSummary {
            radius: res.radius,
            objective: res.objective,
            lambda_star: res.lambda_star,
            primal_value: res.primal_value,
            mean_weight: res.mean_weight,
            converged: res.converged,
            weak_duality_ok: res.weak_duality_ok,
            labels_preserved: res.labels_preserved,
            csv,
            perturbed_svg,
            weights_svg,
        });
    }
    let meta = RunMetadata {
        config: &bundle.config,
        seed_used: bundle.data.seed_used,
        substitutions: &bundle.substitutions,
        rng: "ChaCha8 via seed_from_u64; 53-bit uniforms; Marsaglia polar normals",
        training: "subgradient descent on the average hinge loss, 10000 steps of size 1/sqrt(t) from zero, last iterate",
        preprocessing: "raw features, no standardization, no regularization of beta or the intercept",
        beta_star: bundle.data.beta_star,
        beta_hat: bundle.beta_hat,
        b_hat: bundle.b_hat,
        empirical_hinge_risk: bundle.empirical_hinge_risk,
        radii: summaries,
    };
    let path = dir.join("run.json");
    let mut text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    text.push('\n');
    write_atomic(&path, &text)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn training_beats_the_zero_classifier() {
        let d = draw(3, 32, 1e-4);
        let (beta, b) = train(&d.features, &d.labels);
        assert!(hinge_risk(&d.features, &d.labels, beta, b) < 1.0);
    }

    #[test]
    fn zero_radius_keeps_the_data() {
        let cfg = SvmExperimentConfig {
            radii: vec![0.0],
            ..SvmExperimentConfig::default()
        };
        let bundle = svm_demo(&cfg).unwrap();
        let res = &bundle.results[0];
        for r in &res.records {
            assert_eq!(r.perturbed, r.nominal);
            assert_eq!(r.weight, 1.0);
        }
        assert!((res.objective - bundle.empirical_hinge_risk).abs() < 1e-12);
    }

    #[test]
    fn csv_has_seventeen_digits() {
        let rec = TransportRecord {
            nominal: vec![0.1, 0.2, 1.0, 1.0],
            nominal_mass: 1.0,
            perturbed: vec![0.1, 0.2, 1.0, 1.0],
            weight: 1.0,
        };
        let csv = records_csv(&[rec], 1);
        assert_eq!(csv.lines().next(), Some("x1,x2,y,w"));
        assert!(csv.contains("1.0000000000000001e-1"));
    }
}
