//! Brute-force primal solvers used to certify dual results on small
//! instances.
//!
//! | oracle | problem |
//! |---|---|
//! | [`lp_primal`] | coupling LP over a finite `(v, w)` grid |
//! | [`kl_dro_bisection`] | `max E_p[ℓ]` over a KL ball around a discrete measure |
//! | [`mirror_ascent_kl_ball`] | the same ball, by exponentiated-gradient ascent |
//! | [`phi_primal_direct`] | KL or total-variation ball over a finite candidate set |
//! | [`grid_argmax`] | lattice maximization with two refinement passes |
//! | [`solve_lp`], [`solve_lp_revised`] | two independent dense LP solvers |

mod direct;
mod grid;
mod kl_bisection;
mod lp_primal;
mod mirror;
mod revised;
mod simplex;

pub use direct::{phi_primal_direct, DirectPrimal};
pub use grid::{grid_argmax, lattice, MAX_LATTICE_POINTS, REFINEMENT_LEVELS};
pub use kl_bisection::{kl_dro_bisection, KlDroResult};
pub use lp_primal::{lp_primal, lp_primal_trace, CouplingEntry, CouplingGrid, GridLevel, LpPrimal, OracleReport, TRACE_LEVELS, W_STEP};
pub use mirror::{mirror_ascent_kl_ball, mirror_ascent_kl_cells, KlCell, MirrorResult};
pub use revised::solve_lp_revised;
pub use simplex::{solve_lp, LinearProgram, LpOutcome, Row, Sense, MAX_VARIABLES};
