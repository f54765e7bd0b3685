//! Worst-case expected loss over optimal-transport ambiguity sets.
//!
//! A distributionally robust problem `sup { E_μ[ℓ] : μ near ν̂ }` with a
//! piecewise-affine loss `ℓ(v) = max_k a_kᵀv + b_k` and a discrete nominal
//! `ν̂` is rewritten as a transport problem over weighted outcomes `(v, w)`.
//! Wasserstein balls, φ-divergence balls, Sinkhorn balls and the
//! interpolated transport-plus-reweighting family all become a
//! [`LiftedInstance`](instance::LiftedInstance): a lifted cost, a lifted
//! nominal and a budget `r`.
//!
//! - [`divergences`]: the entropy-function catalog, conjugates, Csiszár duals
//!   and generalized φ-divergences with on/off-support decomposition.
//! - [`lifting`]: constructors for each ambiguity family.
//! - [`solvers`]: one-dimensional dual searches over the multiplier `λ`,
//!   d-transforms, and extraction of a worst-case coupling whose primal value
//!   is checked against the dual.
//! - [`oracle`]: brute-force primal checks (grid LPs, mirror ascent, direct
//!   divergence-ball maximization) used to validate the solvers.
//! - [`conic`]: the exponential-cone program of an interpolated KL instance,
//!   its JSON format and a certificate checker.
//! - [`svm`]: worst-case distributions of a linear SVM on synthetic data.
//!
//! ```
//! use otdro::cost::GroundCost;
//! use otdro::divergences::EntropyFunction;
//! use otdro::lifting::build_interpolated;
//! use otdro::loss::{Loss, PiecewiseAffineLoss};
//! use otdro::measure::DiscreteMeasure;
//! use otdro::solvers::{solve_kl_interpolated, SearchOptions};
//!
//! let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![1.0], 0.0), (vec![-1.0], 0.5)])?.into();
//! let nominal = DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0], vec![2.0]])?;
//! let inst = build_interpolated(
//!     loss,
//!     GroundCost::squared_euclidean(),
//!     EntropyFunction::KullbackLeibler,
//!     &nominal,
//!     0.2,
//!     1.0,
//!     1.0,
//!     None,
//! )?;
//! let out = solve_kl_interpolated(&inst, &SearchOptions::default())?;
//! assert!(out.certificate.objective >= inst.nominal_risk()?);
//! assert!(out.diagnostics.weak_duality_ok);
//! # Ok::<(), otdro::error::Error>(())
//! ```

pub mod conic;
pub mod cost;
pub mod divergences;
pub mod error;
pub mod ext;
pub mod instance;
pub mod lifting;
pub mod loss;
pub mod measure;
pub mod oracle;
pub mod plot;
pub mod rng;
pub mod solvers;
pub mod svm;
