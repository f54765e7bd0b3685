use crate::error::{Error, Result};
use crate::instance::ValueDomain;

/// Refinement passes after the initial lattice, each ten times finer.
pub const REFINEMENT_LEVELS: usize = 2;
/// Upper bound on lattice points evaluated in one pass.
pub const MAX_LATTICE_POINTS: usize = 20_000_000;

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut pts: Vec<f64> = (0..=count).map(|k| lo + k as f64 * step).collect();
    if hi - pts[pts.len() - 1] > 1e-9 * step {
        pts.push(hi);
    }
    pts
}

/// Every point `lower + k·step` of the box (plus the upper faces), first
/// coordinate slowest.
pub fn lattice(lower: &[f64], upper: &[f64], step: f64) -> Result<Vec<Vec<f64>>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Parameter(format!("lattice step must be positive, got {step}")));
    }
    let mut points = Vec::new();
    let mut best = (lower.to_vec(), f64::NEG_INFINITY);
    scan(
        &mut |v: &[f64]| {
            points.push(v.to_vec());
            f64::NEG_INFINITY
        },
        lower,
        upper,
        step,
        &mut best,
    )?;
    Ok(points)
}

/// Scans the lattice `lower + k·step` (plus the upper face) in lexicographic
/// order, first coordinate slowest. Returns the first maximizer.
fn scan<F: FnMut(&[f64]) -> f64>(f: &mut F, lower: &[f64], upper: &[f64], step: f64, best: &mut (Vec<f64>, f64)) -> Result<()> {
    let axes: Vec<Vec<f64>> = lower.iter().zip(upper).map(|(l, u)| axis(*l, *u, step)).collect();
    let total = axes
        .iter()
        .try_fold(1usize, |acc, a| acc.checked_mul(a.len()))
        .filter(|&t| t <= MAX_LATTICE_POINTS)
        .ok_or_else(|| Error::TooLarge(format!("lattice with step {step} exceeds {MAX_LATTICE_POINTS} points")))?;
    let d = axes.len();
    let mut idx = vec![0usize; d];
    let mut point: Vec<f64> = axes.iter().map(|a| a[0]).collect();
    for _ in 0..total {
        let v = f(&point);
        let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
        if v > best.1 {
            *best = (point.clone(), v);
        }
        for j in (0..d).rev() {
            idx[j] += 1;
            if idx[j] < axes[j].len() {
                point[j] = axes[j][idx[j]];
                break;
            }
            idx[j] = 0;
            point[j] = axes[j][0];
        }
    }
    Ok(())
}

/// Maximizes `f` over the domain box on a lattice of spacing `step`, then
/// refines twice around the incumbent with spacing divided by ten each time.
///
/// Ties keep the first point in scan order; a refinement only replaces the
/// incumbent on strict improvement. `NaN` values count as `−∞`.
pub fn grid_argmax<F: FnMut(&[f64]) -> f64>(mut f: F, domain: &ValueDomain, step: f64) -> Result<(Vec<f64>, f64)> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Parameter(format!("lattice step must be positive, got {step}")));
    }
    let d = domain.dim();
    if d == 0 {
        return Err(Error::Input("empty domain".into()));
    }
    let mut best = (domain.lower.clone(), f64::NEG_INFINITY);
    scan(&mut f, &domain.lower, &domain.upper, step, &mut best)?;
    let mut h = step;
    for _ in 0..REFINEMENT_LEVELS {
        let lo: Vec<f64> = (0..d).map(|j| (best.0[j] - h).max(domain.lower[j])).collect();
        let hi: Vec<f64> = (0..d).map(|j| (best.0[j] + h).min(domain.upper[j])).collect();
        h /= 10.0;
        scan(&mut f, &lo, &hi, h, &mut best)?;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(l: Vec<f64>, u: Vec<f64>) -> ValueDomain {
        ValueDomain::full_space(l, u, 2.0).unwrap()
    }

    #[test]
    fn d_transform_example() {
        let (v, val) = grid_argmax(|v| v[0].abs() - (v[0] - 0.5).powi(2), &dom(vec![-5.0], vec![5.0]), 0.001).unwrap();
        assert!((v[0] - 1.0).abs() <= 0.001);
        assert!((val - 0.75).abs() < 1e-6);
    }

    #[test]
    fn constant_takes_first_point() {
        let (v, val) = grid_argmax(|_| 3.0, &dom(vec![-1.0, 2.0], vec![1.0, 3.0]), 0.5).unwrap();
        assert_eq!(v, vec![-1.0, 2.0]);
        assert_eq!(val, 3.0);
    }

    #[test]
    fn interior_peak_after_refinement() {
        let f = |v: &[f64]| -(v[0] - 0.3141).powi(2) - (v[1] + 0.2718).powi(2);
        let (v, _) = grid_argmax(f, &dom(vec![-1.0, -1.0], vec![1.0, 1.0]), 0.1).unwrap();
        assert!((v[0] - 0.3141).abs() <= 0.001 && (v[1] + 0.2718).abs() <= 0.001);
    }

    #[test]
    fn upper_face_is_scanned() {
        let (v, _) = grid_argmax(|v| v[0], &dom(vec![0.0], vec![1.05]), 0.1).unwrap();
        assert_eq!(v, vec![1.05]);
    }

    #[test]
    fn rejects_bad_step() {
        assert!(grid_argmax(|_| 0.0, &dom(vec![0.0], vec![1.0]), 0.0).is_err());
    }
}
