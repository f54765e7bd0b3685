use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::instance::{LiftedInstance, SigmaFieldSpec};
use crate::lifting::LiftedCost;

use super::grid::lattice;
use super::simplex::{solve_lp, LinearProgram, LpOutcome, Sense, MAX_VARIABLES};

/// Spacing of the default weight grid.
pub const W_STEP: f64 = 0.25;
/// Grid levels in a refinement trace; each halves the outcome step.
pub const TRACE_LEVELS: usize = 3;

/// Finite candidate set for the perturbed atoms `(v, w)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingGrid {
    pub v_points: Vec<Vec<f64>>,
    pub w_points: Vec<f64>,
}

fn sorted_unique(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite grid values"));
    xs.dedup();
    xs
}

/// Whether the cost is infinite unless `v = v̂`.
fn pins_outcomes(cost: &LiftedCost) -> bool {
    matches!(cost, LiftedCost::PhiIdentityGuard { .. } | LiftedCost::SinkhornKlIncrement { .. })
}

impl CouplingGrid {
    /// Outcome lattice of spacing `v_step` over the value domain plus the
    /// nominal outcomes; weights `{0, 0.25, …, w_max} ∪ {1} ∪ extra_w ∪ {ŵ_i}`
    /// with `w_max` raised to at least `n`.
    ///
    /// Costs that pin the outcome (φ and Sinkhorn lifts) only get the nominal
    /// outcomes, since every other lattice point has infinite cost.
    pub fn for_instance(inst: &LiftedInstance, v_step: f64, w_max: f64, extra_w: &[f64]) -> Result<Self> {
        if !(w_max >= 0.0 && w_max.is_finite()) || extra_w.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Parameter("weight grid values must be finite and nonnegative".into()));
        }
        let nominal: Vec<Vec<f64>> = (0..inst.n_atoms()).map(|i| inst.nominal_v(i).to_vec()).collect();
        let mut v_points = if pins_outcomes(&inst.cost) {
            Vec::new()
        } else {
            lattice(&inst.value_domain.lower, &inst.value_domain.upper, v_step)?
        };
        for v in nominal {
            if !v_points.contains(&v) {
                v_points.push(v);
            }
        }
        let top = w_max.max(inst.n_atoms() as f64);
        let steps = (top / W_STEP).ceil() as usize;
        let mut w = Vec::with_capacity(steps + extra_w.len() + 2);
        w.extend((0..=steps).map(|k| k as f64 * W_STEP));
        w.push(1.0);
        w.extend_from_slice(extra_w);
        w.extend((0..inst.n_atoms()).map(|i| inst.nominal_w(i)));
        Ok(CouplingGrid {
            v_points,
            w_points: sorted_unique(w),
        })
    }
}

/// One transport variable `π_{ijl}` with positive mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingEntry {
    pub nominal: usize,
    pub v: usize,
    pub w: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpPrimal {
    pub value: f64,
    pub variables: usize,
    pub coupling: Vec<CouplingEntry>,
}

/// Maximizes `Σ π_{ijl} f(v_j, w_l)` over couplings of the nominal atoms with
/// the grid: each nominal atom ships its full mass, the moment rows of the
/// σ-field hold, and the transport budget is at most `r`. Pairs with infinite
/// cost are left out of the variable set.
pub fn lp_primal(inst: &LiftedInstance, grid: &CouplingGrid) -> Result<LpPrimal> {
    inst.validate()?;
    let active: Vec<usize> = (0..inst.n_atoms()).filter(|&i| inst.nominal_mass(i) > 0.0).collect();
    let losses: Vec<f64> = grid.v_points.iter().map(|v| inst.loss_at(v)).collect::<Result<_>>()?;
    let mut vars: Vec<(usize, usize, usize, f64)> = Vec::new();
    for &i in &active {
        let (v_hat, w_hat) = (inst.nominal_v(i), inst.nominal_w(i));
        for (j, v) in grid.v_points.iter().enumerate() {
            for (l, &w) in grid.w_points.iter().enumerate() {
                if let Ext::Finite(c) = inst.cost.eval(v, w, v_hat, w_hat) {
                    vars.push((i, j, l, c));
                    if vars.len() > MAX_VARIABLES {
                        return Err(Error::TooLarge(format!(
                            "coupling grid has more than {MAX_VARIABLES} finite-cost variables"
                        )));
                    }
                }
            }
        }
    }
    let objective: Vec<f64> = vars.iter().map(|&(_, j, l, _)| losses[j] * grid.w_points[l]).collect();
    let mut lp = LinearProgram::new(objective);
    let nv = vars.len();
    for &i in &active {
        lp.push(
            vars.iter().map(|&(k, ..)| if k == i { 1.0 } else { 0.0 }).collect(),
            Sense::Eq,
            inst.nominal_mass(i),
        );
    }
    match &inst.sigma_field {
        SigmaFieldSpec::Trivial => {
            lp.push(vars.iter().map(|&(_, _, l, _)| grid.w_points[l]).collect(), Sense::Eq, 1.0);
        }
        SigmaFieldSpec::ConditionOnNominalAtom { .. } => {
            let cells = inst.cells();
            let mut ids: Vec<usize> = active.iter().map(|&i| cells[i]).collect();
            ids.sort_unstable();
            ids.dedup();
            for c in ids {
                let row = vars
                    .iter()
                    .map(|&(i, _, l, _)| if cells[i] == c { grid.w_points[l] - 1.0 } else { 0.0 })
                    .collect();
                lp.push(row, Sense::Eq, 0.0);
            }
        }
    }
    lp.push(vars.iter().map(|v| v.3).collect(), Sense::Le, inst.radius);
    match solve_lp(&lp)? {
        LpOutcome::Optimal { x, value } => Ok(LpPrimal {
            value,
            variables: nv,
            coupling: vars
                .iter()
                .zip(&x)
                .filter(|(_, m)| **m > 0.0)
                .map(|(&(i, j, l, _), &m)| CouplingEntry {
                    nominal: i,
                    v: j,
                    w: l,
                    mass: m,
                })
                .collect(),
        }),
        LpOutcome::Infeasible => Err(Error::Infeasible("no coupling on this grid satisfies the constraints".into())),
        LpOutcome::Unbounded => Err(Error::Unbounded("coupling LP is unbounded".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridLevel {
    pub v_step: f64,
    pub value: f64,
    pub variables: usize,
}

/// Grid primal values on nested grids together with the gap to a dual value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub value: f64,
    pub gap_vs_dual: Option<f64>,
    pub grid_trace: Vec<GridLevel>,
}

impl OracleReport {
    /// Values never decrease as the grid is refined (up to `tol`).
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.grid_trace.windows(2).all(|w| w[1].value >= w[0].value - tol)
    }
}

/// Runs [`lp_primal`] at outcome steps `h`, `h/2`, `h/4`. The lattices nest,
/// so the values are nondecreasing.
pub fn lp_primal_trace(inst: &LiftedInstance, v_step: f64, w_max: f64, extra_w: &[f64], dual: Option<f64>) -> Result<OracleReport> {
    let mut trace = Vec::with_capacity(TRACE_LEVELS);
    let mut h = v_step;
    for _ in 0..TRACE_LEVELS {
        let grid = CouplingGrid::for_instance(inst, h, w_max, extra_w)?;
        let out = lp_primal(inst, &grid)?;
        log::debug!("lp_primal step {h}: value {} over {} variables", out.value, out.variables);
        trace.push(GridLevel {
            v_step: h,
            value: out.value,
            variables: out.variables,
        });
        h /= 2.0;
    }
    let value = trace.last().expect("at least one level").value;
    Ok(OracleReport {
        value,
        gap_vs_dual: dual.map(|d| d - value),
        grid_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::GroundCost;
    use crate::lifting::lift_wasserstein;
    use crate::loss::{Loss, PiecewiseAffineLoss};
    use crate::measure::DiscreteMeasure;

    fn identity() -> Loss {
        PiecewiseAffineLoss::from_pairs(vec![(vec![1.0], 0.0)]).unwrap().into()
    }

    fn two_atoms(r: f64) -> LiftedInstance {
        let mu = DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0]]).unwrap();
        lift_wasserstein(identity(), GroundCost::p_norm(1.0).unwrap(), &mu, r, None).unwrap()
    }

    #[test]
    fn zero_radius_is_nominal_risk() {
        let inst = two_atoms(0.0);
        let grid = CouplingGrid::for_instance(&inst, 0.25, 2.0, &[]).unwrap();
        let out = lp_primal(&inst, &grid).unwrap();
        assert!((out.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn budget_moves_mass_right() {
        let inst = two_atoms(0.5);
        let grid = CouplingGrid::for_instance(&inst, 0.25, 2.0, &[]).unwrap();
        assert!((lp_primal(&inst, &grid).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_is_monotone() {
        let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![1.0], 0.0), (vec![-2.0], 0.3)])
            .unwrap()
            .into();
        let mu = DiscreteMeasure::uniform(vec![vec![0.1], vec![0.7]]).unwrap();
        let inst = lift_wasserstein(loss, GroundCost::squared_euclidean(), &mu, 0.2, None).unwrap();
        let report = lp_primal_trace(&inst, 0.3, 2.0, &[], None).unwrap();
        assert_eq!(report.grid_trace.len(), 3);
        assert!(report.is_monotone(1e-12));
    }

    #[test]
    fn weight_grid_contents() {
        let inst = two_atoms(0.1);
        let grid = CouplingGrid::for_instance(&inst, 0.5, 0.5, &[0.3]).unwrap();
        assert!(grid.w_points.contains(&0.0) && grid.w_points.contains(&1.0) && grid.w_points.contains(&0.3));
        assert_eq!(*grid.w_points.last().unwrap(), 2.0);
    }
}
