//! Revised simplex with an explicit basis inverse and Dantzig pricing.
//!
//! Kept separate from the tableau solver so the two can cross-check each
//! other: the standard form, pricing rule and update scheme all differ.

use crate::error::{Error, Result};

use super::simplex::{LinearProgram, LpOutcome, Sense};

const TOL: f64 = 1e-10;
const MAX_ITER: usize = 100_000;
/// Consecutive degenerate pivots after which pricing falls back to the
/// smallest improving index so the method cannot cycle.
const DEGENERATE_LIMIT: usize = 50;

struct Standard {
    /// Column-major constraint matrix.
    cols: Vec<Vec<f64>>,
    b: Vec<f64>,
    n_struct: usize,
    first_artificial: usize,
}

fn standardize(lp: &LinearProgram) -> Standard {
    let m = lp.rows.len();
    let n = lp.n_vars();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| lp.rows.iter().map(|r| r.coeffs[j]).collect()).collect();
    let mut b: Vec<f64> = lp.rows.iter().map(|r| r.rhs).collect();
    for (i, row) in lp.rows.iter().enumerate() {
        let sign = match row.sense {
            Sense::Le => 1.0,
            Sense::Ge => -1.0,
            Sense::Eq => continue,
        };
        let mut col = vec![0.0; m];
        col[i] = sign;
        cols.push(col);
    }
    for i in 0..m {
        if b[i] < 0.0 {
            b[i] = -b[i];
            for col in cols.iter_mut() {
                col[i] = -col[i];
            }
        }
    }
    let first_artificial = cols.len();
    for i in 0..m {
        let mut col = vec![0.0; m];
        col[i] = 1.0;
        cols.push(col);
    }
    Standard {
        cols,
        b,
        n_struct: n,
        first_artificial,
    }
}

struct State {
    binv: Vec<Vec<f64>>,
    basis: Vec<usize>,
    xb: Vec<f64>,
}

impl State {
    fn ftran(&self, col: &[f64]) -> Vec<f64> {
        self.binv.iter().map(|row| row.iter().zip(col).map(|(a, b)| a * b).sum()).collect()
    }

    fn update(&mut self, r: usize, entering: usize, u: &[f64]) {
        let m = self.basis.len();
        let theta = self.xb[r] / u[r];
        for i in 0..m {
            if i != r {
                self.xb[i] -= theta * u[i];
            }
        }
        self.xb[r] = theta;
        let pivot_row: Vec<f64> = self.binv[r].iter().map(|x| x / u[r]).collect();
        for i in 0..m {
            if i != r && u[i] != 0.0 {
                for k in 0..m {
                    self.binv[i][k] -= u[i] * pivot_row[k];
                }
            }
        }
        self.binv[r] = pivot_row;
        self.basis[r] = entering;
    }

    /// Maximizes `cost` over columns with `allowed`; `Ok(false)` on an
    /// unbounded ray.
    fn optimize(&mut self, sf: &Standard, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<bool> {
        let m = self.basis.len();
        let mut degenerate = 0usize;
        for _ in 0..MAX_ITER {
            let y: Vec<f64> = (0..m)
                .map(|k| (0..m).map(|i| cost[self.basis[i]] * self.binv[i][k]).sum())
                .collect();
            let bland = degenerate >= DEGENERATE_LIMIT;
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..sf.cols.len() {
                if !allowed(j) || self.basis.contains(&j) {
                    continue;
                }
                let d = cost[j] - y.iter().zip(&sf.cols[j]).map(|(a, b)| a * b).sum::<f64>();
                if d > TOL && entering.is_none_or(|(_, best)| d > best) {
                    entering = Some((j, d));
                    if bland {
                        break;
                    }
                }
            }
            let Some((c, _)) = entering else {
                return Ok(true);
            };
            let u = self.ftran(&sf.cols[c]);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if u[i] > TOL {
                    let ratio = self.xb[i] / u[i];
                    if leave.is_none_or(|(k, best)| ratio < best || (ratio == best && self.basis[i] < self.basis[k])) {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            degenerate = if ratio <= TOL { degenerate + 1 } else { 0 };
            self.update(r, c, &u);
        }
        Err(Error::Numerical(format!("revised simplex exceeded {MAX_ITER} iterations")))
    }
}

/// Solves `lp` with the revised simplex method.
pub fn solve_lp_revised(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.check()?;
    let sf = standardize(lp);
    let m = sf.b.len();
    let width = sf.cols.len();
    let mut st = State {
        binv: (0..m).map(|i| (0..m).map(|k| if i == k { 1.0 } else { 0.0 }).collect()).collect(),
        basis: (sf.first_artificial..width).collect(),
        xb: sf.b.clone(),
    };
    let phase1: Vec<f64> = (0..width).map(|j| if j >= sf.first_artificial { -1.0 } else { 0.0 }).collect();
    st.optimize(&sf, &phase1, &|_| true)?;
    let residual: f64 = st
        .basis
        .iter()
        .zip(&st.xb)
        .filter(|(b, _)| **b >= sf.first_artificial)
        .map(|(_, x)| *x)
        .sum();
    let scale = 1.0 + sf.b.iter().copied().fold(0.0, f64::max);
    if residual > 1e-9 * scale {
        return Ok(LpOutcome::Infeasible);
    }
    for r in 0..m {
        if st.basis[r] >= sf.first_artificial {
            let swap = (0..sf.first_artificial).filter(|j| !st.basis.contains(j)).find_map(|j| {
                let u = st.ftran(&sf.cols[j]);
                (u[r].abs() > 1e-9).then_some((j, u))
            });
            if let Some((j, u)) = swap {
                st.update(r, j, &u);
            }
        }
    }
    let mut cost = vec![0.0; width];
    cost[..sf.n_struct].copy_from_slice(&lp.objective);
    let first_art = sf.first_artificial;
    if !st.optimize(&sf, &cost, &|j| j < first_art)? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = vec![0.0; sf.n_struct];
    for (&b, &v) in st.basis.iter().zip(&st.xb) {
        if b < sf.n_struct {
            x[b] = v.max(0.0);
        }
    }
    let value = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
    Ok(LpOutcome::Optimal { x, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::simplex::solve_lp;

    #[test]
    fn textbook_maximum() {
        let mut lp = LinearProgram::new(vec![3.0, 5.0]);
        lp.push(vec![1.0, 0.0], Sense::Le, 4.0);
        lp.push(vec![0.0, 2.0], Sense::Le, 12.0);
        lp.push(vec![3.0, 2.0], Sense::Le, 18.0);
        assert!((solve_lp_revised(&lp).unwrap().value().unwrap() - 36.0).abs() < 1e-12);
    }

    #[test]
    fn statuses_match_tableau() {
        let mut infeasible = LinearProgram::new(vec![1.0]);
        infeasible.push(vec![1.0], Sense::Le, 1.0);
        infeasible.push(vec![1.0], Sense::Ge, 2.0);
        let mut unbounded = LinearProgram::new(vec![1.0, 0.0]);
        unbounded.push(vec![1.0, -1.0], Sense::Le, 1.0);
        let mut redundant = LinearProgram::new(vec![1.0, 2.0]);
        redundant.push(vec![1.0, 1.0], Sense::Eq, 1.0);
        redundant.push(vec![2.0, 2.0], Sense::Eq, 2.0);
        for lp in [infeasible, unbounded, redundant] {
            assert_eq!(solve_lp_revised(&lp).unwrap().value(), solve_lp(&lp).unwrap().value());
        }
    }
}
