//! Entropy functions, their conjugates and Csiszár duals, and the generalized
//! φ-divergence between finitely supported measures.
//!
//! `D_φ(μ, μ̂) = D_ψ(μ̂, μ)` holds for every entry because `φ(0)` equals the
//! recession slope of `ψ`.

mod divergence;
mod entropy;

pub use divergence::{aligned_masses, divergence_decomposed, generalized_divergence};
pub use entropy::EntropyFunction;
