use crate::cost::GroundCost;
use crate::divergences::EntropyFunction;
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::instance::{LiftedInstance, OutcomeSet};
use crate::lifting::LiftedCost;
use crate::loss::AffinePiece;

use super::format::{CONIC_FORMAT, CONIC_VERSION};
use super::{AffineExpr, Block, Cone, ConeConstraint, ConicMetadata, ConicProgram, Family, LinearRow, RowSense};

/// Cost shapes with a closed-form majorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Shape {
    NormFull { q: Ext },
    NormBox { q: Ext },
    Quadratic,
}

pub(crate) struct Parts<'a> {
    pub ground: &'a GroundCost,
    pub theta1: f64,
    pub theta2: f64,
    pub shape: Shape,
}

pub(crate) fn parts(inst: &LiftedInstance) -> Result<Parts<'_>> {
    let LiftedCost::Interpolated {
        ground,
        phi,
        theta1,
        theta2,
    } = &inst.cost
    else {
        return Err(Error::Unsupported(format!(
            "conic programs are built for interpolated costs, got the {} family",
            inst.cost.family()
        )));
    };
    if *phi != EntropyFunction::KullbackLeibler {
        return Err(Error::Unsupported(format!("conic programs need phi = kullback-leibler, got {phi}")));
    }
    let boxed = inst.value_domain.outcome_set == OutcomeSet::Box;
    let shape = match ground {
        GroundCost::PNorm(_) => {
            let q = ground.dual_exponent().expect("norm costs have a dual exponent");
            if boxed {
                Shape::NormBox { q }
            } else {
                Shape::NormFull { q }
            }
        }
        _ if boxed => {
            return Err(Error::Unsupported(
                "the quadratic-cost program needs a full-space outcome set".into(),
            ))
        }
        _ => Shape::Quadratic,
    };
    if boxed {
        for i in 0..inst.n_atoms() {
            if !inst.value_domain.contains(inst.nominal_v(i)) {
                return Err(Error::Domain(format!("nominal atom {i} lies outside the outcome box")));
            }
        }
    }
    Ok(Parts {
        ground,
        theta1: *theta1,
        theta2: *theta2,
        shape,
    })
}

/// Pieces active at atom `i`, slopes padded to the outcome dimension.
pub(crate) fn atom_pieces(inst: &LiftedInstance, i: usize) -> Result<Vec<AffinePiece>> {
    let d = inst.v_dim();
    Ok(inst
        .loss
        .pieces_at(&inst.nominal_v(i)[..inst.loss.dim()])?
        .pieces()
        .iter()
        .map(|pc| {
            let mut a = pc.a.clone();
            a.resize(d, 0.0);
            AffinePiece::new(a, pc.b)
        })
        .collect())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Best split of `ξ = ω − a` for the box bound: minimizes
/// `σ_V(ω) − ξᵀv̂` over `‖ω − a‖_q ≤ μ`, with `l ≤ v̂ ≤ u`.
///
/// Writing `σ_V(ω) − ωᵀv̂ = Σ_j g_j(ω_j)` with slopes `u_j − v̂_j` for
/// `ω_j > 0` and `v̂_j − l_j` for `ω_j < 0`, each coordinate is shrunk from
/// `a_j` toward zero by `δ_j ∈ [0, |a_j|]`, maximizing `Σ_j c_j δ_j` subject
/// to `‖δ‖_q ≤ μ`. Returns `ω`.
pub(crate) fn box_split(a: &[f64], v_hat: &[f64], lower: &[f64], upper: &[f64], mu: f64, q: Ext) -> Vec<f64> {
    let d = a.len();
    let c: Vec<f64> = (0..d)
        .map(|j| if a[j] > 0.0 { upper[j] - v_hat[j] } else { v_hat[j] - lower[j] }.max(0.0))
        .collect();
    let mag: Vec<f64> = a.iter().map(|x| x.abs()).collect();
    let delta: Vec<f64> = match q {
        Ext::Infinite => mag.iter().map(|m| m.min(mu)).collect(),
        Ext::Finite(q) if q == 1.0 => {
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&x, &y| c[y].partial_cmp(&c[x]).expect("finite").then(x.cmp(&y)));
            let mut left = mu;
            let mut delta = vec![0.0; d];
            for j in order {
                let take = mag[j].min(left);
                delta[j] = take;
                left -= take;
            }
            delta
        }
        Ext::Finite(q) => {
            let total: f64 = mag.iter().map(|m| m.powf(q)).sum();
            if total <= mu.powf(q) {
                mag.clone()
            } else {
                // δ_j(κ) = min(|a_j|, (κ c_j)^{1/(q−1)}), increasing in κ.
                let at = |k: f64| -> Vec<f64> { (0..d).map(|j| mag[j].min((k * c[j]).powf(1.0 / (q - 1.0)))).collect() };
                let used = |k: f64| at(k).iter().map(|x| x.powf(q)).sum::<f64>();
                let (mut lo, mut hi) = (-700.0f64, 700.0f64);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if used(mid.exp()) > mu.powf(q) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                at(lo.exp())
            }
        }
    };
    (0..d).map(|j| a[j].signum() * (mag[j] - delta[j])).collect()
}

struct Layout {
    lambda: usize,
    t: usize,
    eta: usize,
    p: usize,
    xi: usize,
    omega: usize,
    s: usize,
}

/// Builds the conic program of an interpolated KL instance.
///
/// Full-space V uses `σ_V(ω) = 0` only at `ω = 0`, so the `ω` block is
/// dropped and `ξ_ik = −a_k` is substituted; this choice is recorded in the
/// metadata notes.
pub fn build_conic(inst: &LiftedInstance) -> Result<ConicProgram> {
    inst.validate()?;
    let parts = parts(inst)?;
    let n = inst.n_atoms();
    let d = inst.v_dim();
    let pieces: Vec<Vec<AffinePiece>> = (0..n).map(|i| atom_pieces(inst, i)).collect::<Result<_>>()?;
    let total_pieces: usize = pieces.iter().map(Vec::len).sum();
    let boxed = matches!(parts.shape, Shape::NormBox { .. });
    let dual_dim = if boxed { total_pieces * d } else { 0 };
    let lay = Layout {
        lambda: 0,
        t: 1,
        eta: 2,
        p: 2 + n,
        xi: 2 + 2 * n,
        omega: 2 + 2 * n + dual_dim,
        s: 2 + 2 * n + 2 * dual_dim,
    };
    let mut blocks = vec![
        Block {
            name: "lambda".into(),
            start: lay.lambda,
            dim: 1,
        },
        Block {
            name: "t".into(),
            start: lay.t,
            dim: 1,
        },
        Block {
            name: "eta".into(),
            start: lay.eta,
            dim: n,
        },
        Block {
            name: "p".into(),
            start: lay.p,
            dim: n,
        },
    ];
    if boxed {
        blocks.push(Block {
            name: "xi".into(),
            start: lay.xi,
            dim: dual_dim,
        });
        blocks.push(Block {
            name: "omega".into(),
            start: lay.omega,
            dim: dual_dim,
        });
        blocks.push(Block {
            name: "s".into(),
            start: lay.s,
            dim: dual_dim,
        });
    }
    let n_vars = 2 + 2 * n + 3 * dual_dim;
    let (th1, th2) = (parts.theta1, parts.theta2);

    let mut rows = Vec::new();
    let mut majorization = Vec::new();
    let mut support = Vec::new();
    let mut domain = Vec::new();
    let mut norm_cones = Vec::new();
    let mut quad_cones = Vec::new();
    let mut offset = 0;
    for i in 0..n {
        let v_hat = inst.nominal_v(i);
        for (k, pc) in pieces[i].iter().enumerate() {
            match parts.shape {
                Shape::NormFull { q } => {
                    majorization.push(LinearRow {
                        family: Family::Majorization,
                        atom: Some(i),
                        piece: Some(k),
                        terms: vec![(lay.p + i, -1.0)],
                        sense: RowSense::Le,
                        rhs: -(dot(&pc.a, v_hat) + pc.b),
                    });
                    let mut entries = vec![AffineExpr::var(lay.lambda, th1)];
                    entries.extend(pc.a.iter().map(|x| AffineExpr::constant(-x)));
                    norm_cones.push(ConeConstraint {
                        family: Family::NormBound,
                        atom: Some(i),
                        piece: Some(k),
                        cone: Cone::QNorm { q },
                        entries,
                    });
                }
                Shape::NormBox { q } => {
                    let (l, u) = (&inst.value_domain.lower, &inst.value_domain.upper);
                    let xi = lay.xi + offset;
                    let om = lay.omega + offset;
                    let s = lay.s + offset;
                    for j in 0..d {
                        domain.push(LinearRow {
                            family: Family::ConjugateDomain,
                            atom: Some(i),
                            piece: Some(k),
                            terms: vec![(xi + j, 1.0), (om + j, -1.0)],
                            sense: RowSense::Eq,
                            rhs: -pc.a[j],
                        });
                    }
                    for j in 0..d {
                        for bound in [l[j], u[j]] {
                            support.push(LinearRow {
                                family: Family::SupportEpigraph,
                                atom: Some(i),
                                piece: Some(k),
                                terms: vec![(om + j, bound), (s + j, -1.0)],
                                sense: RowSense::Le,
                                rhs: 0.0,
                            });
                        }
                    }
                    let mut terms: Vec<(usize, f64)> = (0..d).map(|j| (s + j, 1.0)).collect();
                    terms.extend((0..d).map(|j| (xi + j, -v_hat[j])));
                    terms.push((lay.p + i, -1.0));
                    majorization.push(LinearRow {
                        family: Family::Majorization,
                        atom: Some(i),
                        piece: Some(k),
                        terms,
                        sense: RowSense::Le,
                        rhs: -pc.b,
                    });
                    let mut entries = vec![AffineExpr::var(lay.lambda, th1)];
                    entries.extend((0..d).map(|j| AffineExpr::var(xi + j, 1.0)));
                    norm_cones.push(ConeConstraint {
                        family: Family::NormBound,
                        atom: Some(i),
                        piece: Some(k),
                        cone: Cone::QNorm { q },
                        entries,
                    });
                    offset += d;
                }
                Shape::Quadratic => {
                    let mut entries = vec![
                        AffineExpr::var(lay.lambda, th1),
                        AffineExpr {
                            terms: vec![(lay.p + i, 2.0)],
                            constant: -2.0 * (dot(&pc.a, v_hat) + pc.b),
                        },
                    ];
                    entries.extend(parts.ground.movable_part(&pc.a).into_iter().map(AffineExpr::constant));
                    quad_cones.push(ConeConstraint {
                        family: Family::QuadraticOffset,
                        atom: Some(i),
                        piece: Some(k),
                        cone: Cone::RotatedQuadratic,
                        entries,
                    });
                }
            }
        }
    }
    rows.extend(domain);
    rows.extend(support);
    rows.extend(majorization);
    let mut aggregate: Vec<(usize, f64)> = (0..n).map(|i| (lay.eta + i, inst.nominal_mass(i))).collect();
    aggregate.push((lay.lambda, -th2));
    rows.push(LinearRow {
        family: Family::Aggregate,
        atom: None,
        piece: None,
        terms: aggregate,
        sense: RowSense::Le,
        rhs: 0.0,
    });

    let mut cones = Vec::new();
    let mut sign = vec![AffineExpr::var(lay.lambda, 1.0)];
    sign.extend((0..n).map(|i| AffineExpr::var(lay.eta + i, 1.0)));
    cones.push(ConeConstraint {
        family: Family::Sign,
        atom: None,
        piece: None,
        cone: Cone::Nonnegative,
        entries: sign,
    });
    for i in 0..n {
        cones.push(ConeConstraint {
            family: Family::ExpCone,
            atom: Some(i),
            piece: None,
            cone: Cone::Exponential,
            entries: vec![
                AffineExpr::var(lay.eta + i, 1.0),
                AffineExpr::var(lay.lambda, th2),
                AffineExpr {
                    terms: vec![(lay.p + i, 1.0), (lay.t, -1.0)],
                    constant: 0.0,
                },
            ],
        });
    }
    cones.extend(norm_cones);
    cones.extend(quad_cones);

    let mut notes = Vec::new();
    match parts.shape {
        Shape::NormFull { .. } => notes.push(
            "full-space outcome set: sigma_V is finite only at omega = 0, so omega is fixed at 0 and xi_ik = -a_k is substituted".into(),
        ),
        Shape::NormBox { .. } => notes.push("box outcome set: sigma_V(omega) = sum_j max(omega_j l_j, omega_j u_j) via the s block".into()),
        Shape::Quadratic => notes.push("quadratic cost: rotated cones encode a_k'v_i + b_k + |a_k|^2/(4 lambda theta1) <= p_i".into()),
    }
    Ok(ConicProgram {
        format: CONIC_FORMAT.into(),
        version: CONIC_VERSION,
        metadata: ConicMetadata {
            ground: serde_json::to_string(parts.ground).expect("costs serialize"),
            outcome_set: if boxed { "box" } else { "full-space" }.into(),
            radius: inst.radius,
            theta1: th1,
            theta2: th2,
            atoms: n,
            notes,
        },
        blocks,
        n_vars,
        objective: AffineExpr {
            terms: vec![(lay.lambda, inst.radius), (lay.t, 1.0)],
            constant: 0.0,
        },
        rows,
        cones,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::build_interpolated;
    use crate::loss::{Loss, PiecewiseAffineLoss};
    use crate::measure::DiscreteMeasure;

    #[test]
    fn single_atom_counts() {
        let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![2.0], 1.0)]).unwrap().into();
        let mu = DiscreteMeasure::point_mass(vec![0.5]);
        let inst = build_interpolated(
            loss,
            GroundCost::p_norm(2.0).unwrap(),
            EntropyFunction::KullbackLeibler,
            &mu,
            0.1,
            1.0,
            1.0,
            None,
        )
        .unwrap();
        let prog = build_conic(&inst).unwrap();
        assert_eq!(prog.count_cones(Family::ExpCone), 1);
        assert_eq!(prog.count_rows(Family::Majorization), 1);
        assert_eq!(prog.count_cones(Family::NormBound), 1);
        assert_eq!(prog.count_rows(Family::Aggregate), 1);
        // a v̂ + b ≤ p reads −p ≤ −(a v̂ + b).
        let row = prog.rows.iter().find(|r| r.family == Family::Majorization).unwrap();
        assert_eq!(row.rhs, -2.0);
        assert_eq!(row.terms, vec![(3, -1.0)]);
    }

    #[test]
    fn hinge_counts() {
        let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![-1.0, 0.5], 1.0), (vec![0.0, 0.0], 0.0)])
            .unwrap()
            .into();
        let mu = DiscreteMeasure::uniform(vec![vec![0.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let inst = build_interpolated(
            loss,
            GroundCost::squared_euclidean(),
            EntropyFunction::KullbackLeibler,
            &mu,
            0.1,
            1.0,
            1.0,
            None,
        )
        .unwrap();
        let prog = build_conic(&inst).unwrap();
        assert_eq!(prog.count_cones(Family::ExpCone), 2);
        assert_eq!(prog.count_cones(Family::QuadraticOffset), 4);
        assert!(prog.block("xi").is_none());
    }

    #[test]
    fn rejects_other_phi() {
        let loss: Loss = PiecewiseAffineLoss::from_pairs(vec![(vec![1.0], 0.0)]).unwrap().into();
        let mu = DiscreteMeasure::point_mass(vec![0.0]);
        let inst = build_interpolated(
            loss,
            GroundCost::squared_euclidean(),
            EntropyFunction::ModifiedChiSquared,
            &mu,
            0.1,
            1.0,
            1.0,
            None,
        )
        .unwrap();
        assert!(matches!(build_conic(&inst), Err(Error::Unsupported(_))));
    }

    #[test]
    fn box_split_one_norm_ball() {
        // q = ∞: each coordinate shrinks by at most μ.
        let om = box_split(&[2.0, -0.5], &[0.0, 0.0], &[-1.0, -1.0], &[1.0, 1.0], 1.0, Ext::Infinite);
        assert_eq!(om, vec![1.0, 0.0]);
    }

    #[test]
    fn box_split_two_norm_budget_binds() {
        let om = box_split(&[3.0, 4.0], &[0.0, 0.0], &[-1.0, -1.0], &[1.0, 1.0], 1.0, Ext::Finite(2.0));
        let shrink: f64 = [3.0 - om[0], 4.0 - om[1]].iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((shrink - 1.0).abs() < 1e-12);
        // Equal slopes give equal shrinkage.
        assert!(((3.0 - om[0]) - (4.0 - om[1])).abs() < 1e-9);
    }
}
