//! Dense two-phase tableau simplex with Bland's rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of structural variables accepted by the LP oracles.
pub const MAX_VARIABLES: usize = 5_000;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// Dense row `coeffs·x (sense) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `maximize objective·x` subject to `rows`, `x ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        LinearProgram {
            objective,
            rows: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        self.rows.push(Row { coeffs, sense, rhs });
    }

    pub(crate) fn check(&self) -> Result<()> {
        let n = self.n_vars();
        if n > MAX_VARIABLES {
            return Err(Error::TooLarge(format!("{n} LP variables exceed the cap of {MAX_VARIABLES}")));
        }
        for (k, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: row.coeffs.len(),
                });
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::Input(format!("row {k} has non-finite data")));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Input("objective has non-finite data".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

struct Tableau {
    /// `m` rows of `B⁻¹A | B⁻¹b`.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for x in self.t[r].iter_mut() {
            *x /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * y;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost·x` over columns with `allowed[j]`. `Ok(false)` means
    /// unbounded.
    fn run(&mut self, cost: &[f64], allowed: &[bool]) -> Result<bool> {
        let rhs = self.width;
        for _ in 0..MAX_PIVOTS {
            let entering = (0..self.width).find(|&j| {
                allowed[j] && !self.basis.contains(&j) && {
                    let z: f64 = self.basis.iter().zip(&self.t).map(|(&b, row)| cost[b] * row[j]).sum();
                    cost[j] - z > COST_TOL
                }
            });
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[c] > PIVOT_TOL {
                    let ratio = row[rhs] / row[c];
                    let better = match leave {
                        None => true,
                        Some((k, best)) => ratio < best - 1e-12 || (ratio <= best + 1e-12 && self.basis[i] < self.basis[k]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            self.pivot(r, c);
        }
        Err(Error::Numerical(format!("simplex exceeded {MAX_PIVOTS} pivots")))
    }
}

/// Solves `lp` by the two-phase tableau method with Bland's smallest-index
/// rule for both the entering and the leaving variable.
///
/// Phase one minimizes the sum of artificial variables; artificials left in
/// the basis at zero are pivoted out, and rows where that is impossible are
/// dropped as redundant.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.check()?;
    let n = lp.n_vars();
    let m = lp.rows.len();
    let n_slack = lp.rows.iter().filter(|r| r.sense != Sense::Eq).count();
    let n_art = lp.rows.iter().filter(|r| r.sense != Sense::Le || r.rhs < 0.0).count();
    let width = n + n_slack + n_art;
    let mut t = vec![vec![0.0; width + 1]; m];
    let mut basis = vec![0usize; m];
    let mut artificial = vec![false; width];
    let (mut s, mut a) = (n, n + n_slack);
    for (i, row) in lp.rows.iter().enumerate() {
        let flip = if row.rhs < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = flip * row.coeffs[j];
        }
        t[i][width] = flip * row.rhs;
        let slack_sign = match row.sense {
            Sense::Le => Some(1.0),
            Sense::Ge => Some(-1.0),
            Sense::Eq => None,
        };
        if let Some(sign) = slack_sign {
            t[i][s] = flip * sign;
            if t[i][s] > 0.0 {
                basis[i] = s;
                s += 1;
                continue;
            }
            s += 1;
        }
        t[i][a] = 1.0;
        artificial[a] = true;
        basis[i] = a;
        a += 1;
    }
    let mut tab = Tableau { t, basis, width };

    if n_art > 0 {
        let phase1: Vec<f64> = (0..width).map(|j| if artificial[j] { -1.0 } else { 0.0 }).collect();
        let all = vec![true; width];
        tab.run(&phase1, &all)?;
        let infeasibility: f64 = tab
            .basis
            .iter()
            .zip(&tab.t)
            .filter(|(b, _)| artificial[**b])
            .map(|(_, row)| row[width])
            .sum();
        let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if infeasibility > 1e-9 * scale {
            return Ok(LpOutcome::Infeasible);
        }
        let mut i = 0;
        while i < tab.t.len() {
            if artificial[tab.basis[i]] {
                match (0..width).find(|&j| !artificial[j] && tab.t[i][j].abs() > PIVOT_TOL) {
                    Some(c) => tab.pivot(i, c),
                    None => {
                        tab.t.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(&lp.objective);
    let allowed: Vec<bool> = artificial.iter().map(|a| !a).collect();
    if !tab.run(&cost, &allowed)? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = vec![0.0; n];
    for (&b, row) in tab.basis.iter().zip(&tab.t) {
        if b < n {
            x[b] = row[width].max(0.0);
        }
    }
    let value = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
    Ok(LpOutcome::Optimal { x, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6).
        let mut lp = LinearProgram::new(vec![3.0, 5.0]);
        lp.push(vec![1.0, 0.0], Sense::Le, 4.0);
        lp.push(vec![0.0, 2.0], Sense::Le, 12.0);
        lp.push(vec![3.0, 2.0], Sense::Le, 18.0);
        let LpOutcome::Optimal { x, value } = solve_lp(&lp).unwrap() else {
            panic!("optimal expected")
        };
        assert!((value - 36.0).abs() < 1e-12);
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn equality_and_ge_rows() {
        // max x − y, x + y = 2, x ≥ 0.5, y ≥ 0.25 → 1.5.
        let mut lp = LinearProgram::new(vec![1.0, -1.0]);
        lp.push(vec![1.0, 1.0], Sense::Eq, 2.0);
        lp.push(vec![1.0, 0.0], Sense::Ge, 0.5);
        lp.push(vec![0.0, 1.0], Sense::Ge, 0.25);
        assert!((solve_lp(&lp).unwrap().value().unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.push(vec![1.0], Sense::Le, 1.0);
        lp.push(vec![1.0], Sense::Ge, 2.0);
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible);
        let mut lp = LinearProgram::new(vec![1.0, 0.0]);
        lp.push(vec![1.0, -1.0], Sense::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.push(vec![1.0, 1.0], Sense::Eq, 1.0);
        lp.push(vec![2.0, 2.0], Sense::Eq, 2.0);
        assert!((solve_lp(&lp).unwrap().value().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs() {
        // −x ≤ −1 means x ≥ 1; min x is max −x = −1.
        let mut lp = LinearProgram::new(vec![-1.0]);
        lp.push(vec![-1.0], Sense::Le, -1.0);
        assert!((solve_lp(&lp).unwrap().value().unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the largest-coefficient rule.
        let mut lp = LinearProgram::new(vec![0.75, -20.0, 0.5, -6.0]);
        lp.push(vec![0.25, -8.0, -1.0, 9.0], Sense::Le, 0.0);
        lp.push(vec![0.5, -12.0, -0.5, 3.0], Sense::Le, 0.0);
        lp.push(vec![0.0, 0.0, 1.0, 0.0], Sense::Le, 1.0);
        assert!((solve_lp(&lp).unwrap().value().unwrap() - 1.25).abs() < 1e-12);
    }

    #[test]
    fn too_many_variables() {
        let lp = LinearProgram::new(vec![0.0; MAX_VARIABLES + 1]);
        assert!(matches!(solve_lp(&lp), Err(Error::TooLarge(_))));
    }
}
