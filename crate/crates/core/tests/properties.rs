use proptest::prelude::*;

use otdro::conic::{build_conic, parse_conic, serialize_conic};
use otdro::cost::GroundCost;
use otdro::divergences::{divergence_decomposed, generalized_divergence, EntropyFunction};
use otdro::ext::Ext;
use otdro::instance::ValueDomain;
use otdro::lifting::{build_interpolated, lift_wasserstein};
use otdro::loss::{Loss, PiecewiseAffineLoss};
use otdro::measure::DiscreteMeasure;
use otdro::oracle::{lp_primal, solve_lp, solve_lp_revised, CouplingGrid, LinearProgram, LpOutcome, Sense};
use otdro::solvers::{
    d_transform, d_transform_grid, kl_dual_objective, solve_general_phi, solve_kl_interpolated, solve_wasserstein, SearchOptions,
};

fn catalog_entry() -> impl Strategy<Value = EntropyFunction> {
    prop::sample::select(EntropyFunction::catalog())
}

/// Masses on a shared pool of five points; zeros allowed, not all zero.
fn masses() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.05f64..1.0], 5)
        .prop_filter("some mass", |m| m.iter().any(|x| *x > 0.0))
        .prop_map(|m| {
            let t: f64 = m.iter().sum();
            m.iter().map(|x| x / t).collect()
        })
}

fn measure(m: &[f64]) -> DiscreteMeasure {
    let (atoms, weights): (Vec<_>, Vec<_>) = m
        .iter()
        .enumerate()
        .filter(|(_, x)| **x > 0.0)
        .map(|(k, x)| (vec![k as f64], *x))
        .unzip();
    DiscreteMeasure::new(atoms, weights).unwrap()
}

fn pieces(dim: usize) -> impl Strategy<Value = Vec<(Vec<f64>, f64)>> {
    prop::collection::vec((prop::collection::vec(-2.0f64..2.0, dim), -1.0f64..1.0), 1..4)
}

fn atoms(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, dim), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn divergence_is_nonnegative_and_vanishes_on_the_diagonal(phi in catalog_entry(), a in masses(), b in masses()) {
        let (mu, mu_hat) = (measure(&a), measure(&b));
        let d = generalized_divergence(&phi, &mu, &mu_hat).unwrap();
        prop_assert!(d >= Ext::ZERO || matches!(d, Ext::Finite(x) if x > -1e-12));
        let same = generalized_divergence(&phi, &mu, &mu).unwrap();
        prop_assert!(matches!(same, Ext::Finite(x) if x.abs() < 1e-12));
    }

    #[test]
    fn csiszar_swap(phi in catalog_entry(), a in masses(), b in masses()) {
        let (mu, mu_hat) = (measure(&a), measure(&b));
        let x = generalized_divergence(&phi, &mu, &mu_hat).unwrap();
        let y = generalized_divergence(&phi.csiszar_dual(), &mu_hat, &mu).unwrap();
        match (x, y) {
            (Ext::Finite(x), Ext::Finite(y)) => prop_assert!((x - y).abs() < 1e-10),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn decomposition_adds_up(phi in catalog_entry(), a in masses(), b in masses()) {
        let (mu, mu_hat) = (measure(&a), measure(&b));
        let (on, off) = divergence_decomposed(&phi, &mu, &mu_hat).unwrap();
        prop_assert_eq!(generalized_divergence(&phi, &mu, &mu_hat).unwrap(), on + off);
        let off_mass: f64 = a.iter().zip(&b).filter(|(_, h)| **h == 0.0).map(|(m, _)| m).sum();
        if off_mass == 0.0 {
            prop_assert_eq!(off, Ext::ZERO);
        }
    }

    #[test]
    fn fenchel_young(phi in catalog_entry(), s in -3.0f64..3.0, t in 0.0f64..10.0) {
        let lhs = phi.conjugate(s);
        if let (Ext::Finite(c), Ext::Finite(p)) = (lhs, phi.value(t)) {
            prop_assert!(c + p >= s * t - 1e-9 * (1.0 + (s * t).abs()));
        }
    }

    #[test]
    fn quadratic_d_transform_dominates_the_lattice(p in pieces(2), v in prop::collection::vec(-1.0f64..1.0, 2), lam in 0.2f64..5.0) {
        let loss: Loss = PiecewiseAffineLoss::from_pairs(p).unwrap().into();
        let cost = GroundCost::squared_euclidean();
        let exact = d_transform(&loss, &cost, lam, &v).unwrap().value.finite().unwrap();
        // Maximizers v + a/(2λ) stay within ±6 for these ranges.
        let domain = ValueDomain::full_space(vec![-6.5, -6.5], vec![6.5, 6.5], 2.0).unwrap();
        let grid = d_transform_grid(&loss, &cost, lam, &v, &domain, 0.1).unwrap().value.finite().unwrap();
        prop_assert!(grid <= exact + 1e-9);
        // The lattice misses by at most the curvature over half a cell.
        prop_assert!(exact - grid <= lam * 0.02 + 0.1 * 2.0 * 2f64.sqrt());
    }

    #[test]
    fn interpolated_kl_risk_is_monotone_with_unit_mean_weight(p in pieces(1), z in atoms(1), r1 in 0.01f64..0.5, dr in 0.01f64..0.5) {
        let loss: Loss = PiecewiseAffineLoss::from_pairs(p).unwrap().into();
        let mu = DiscreteMeasure::uniform(z).unwrap();
        let solve = |r: f64| {
            let inst = build_interpolated(loss.clone(), GroundCost::squared_euclidean(), EntropyFunction::KullbackLeibler, &mu, r, 1.0, 1.0, None).unwrap();
            (solve_kl_interpolated(&inst, &SearchOptions::default()).unwrap(), inst)
        };
        let (small, inst) = solve(r1);
        let (large, _) = solve(r1 + dr);
        let nominal = inst.nominal_risk().unwrap();
        prop_assert!(small.certificate.objective >= nominal - 1e-9);
        prop_assert!(large.certificate.objective >= small.certificate.objective - 1e-9);
        prop_assert!((small.mean_weight() - 1.0).abs() < 1e-8);
        prop_assert!(small.diagnostics.weak_duality_ok);
        // The certificate's λ is no worse than nearby multipliers.
        let at = |l: f64| kl_dual_objective(&inst, l).unwrap().to_f64();
        let lam = small.certificate.lambda_star;
        prop_assert!(small.certificate.objective <= at(lam * 1.1) + 1e-7);
        prop_assert!(small.certificate.objective <= at(lam / 1.1) + 1e-7);
    }

    #[test]
    fn extracted_coupling_attains_the_dual(p in pieces(1), z in atoms(1), r in 0.01f64..1.0, q in prop::sample::select(vec![1.0, 2.0, f64::INFINITY]), theta1 in 0.5f64..2.0) {
        let loss: Loss = PiecewiseAffineLoss::from_pairs(p).unwrap().into();
        let mu = DiscreteMeasure::uniform(z).unwrap();
        for ground in [GroundCost::p_norm(q).unwrap(), GroundCost::squared_euclidean()] {
            let inst = build_interpolated(loss.clone(), ground.clone(), EntropyFunction::KullbackLeibler, &mu, r, theta1, 1.0, None).unwrap();
            let out = solve_kl_interpolated(&inst, &SearchOptions::default()).unwrap();
            let gap = out.certificate.objective - out.diagnostics.primal_value;
            prop_assert!(gap.abs() < 1e-6 * (1.0 + out.certificate.objective.abs()), "interpolated {ground:?}: gap {gap}");
            let inst = build_interpolated(loss.clone(), ground.clone(), EntropyFunction::ModifiedChiSquared, &mu, r, theta1, 1.0, None).unwrap();
            let out = solve_general_phi(&inst, &SearchOptions::default()).unwrap();
            let gap = out.certificate.objective - out.diagnostics.primal_value;
            prop_assert!(gap.abs() < 1e-6 * (1.0 + out.certificate.objective.abs()), "modified-chi2 {ground:?}: gap {gap}");
            let inst = lift_wasserstein(loss.clone(), ground.clone(), &mu, r, None).unwrap();
            let out = solve_wasserstein(&inst, &SearchOptions::default()).unwrap();
            let gap = out.certificate.objective - out.diagnostics.primal_value;
            prop_assert!(gap.abs() < 1e-6 * (1.0 + out.certificate.objective.abs()), "wasserstein {ground:?}: gap {gap}");
        }
    }

    #[test]
    fn lp_grid_never_beats_the_wasserstein_dual(p in pieces(1), z in atoms(1), r in 0.01f64..1.0, norm in any::<bool>()) {
        let loss: Loss = PiecewiseAffineLoss::from_pairs(p).unwrap().into();
        let mu = DiscreteMeasure::uniform(z).unwrap();
        let ground = if norm { GroundCost::p_norm(1.0).unwrap() } else { GroundCost::squared_euclidean() };
        let domain = ValueDomain::full_space(vec![-3.0], vec![3.0], 4.0).unwrap();
        let inst = lift_wasserstein(loss, ground, &mu, r, Some(domain)).unwrap();
        let dual = solve_wasserstein(&inst, &SearchOptions::default()).unwrap().certificate.objective;
        let grid = CouplingGrid::for_instance(&inst, 0.25, 2.0, &[]).unwrap();
        let primal = lp_primal(&inst, &grid).unwrap().value;
        prop_assert!(primal <= dual + 1e-6);
        prop_assert!(primal >= inst.nominal_risk().unwrap() - 1e-9);
    }

    #[test]
    fn conic_serialization_round_trips(p in pieces(2), z in atoms(2), r in 0.01f64..1.0, q in prop::sample::select(vec![1.0, 2.0, f64::INFINITY])) {
        let loss: Loss = PiecewiseAffineLoss::from_pairs(p).unwrap().into();
        let mu = DiscreteMeasure::uniform(z).unwrap();
        let inst = build_interpolated(loss, GroundCost::p_norm(q).unwrap(), EntropyFunction::KullbackLeibler, &mu, r, 1.0, 1.0, None).unwrap();
        let program = build_conic(&inst).unwrap();
        let text = serialize_conic(&program);
        let back = parse_conic(&text).unwrap();
        prop_assert_eq!(&back, &program);
        prop_assert_eq!(serialize_conic(&back), text);
    }

    #[test]
    fn tableau_and_revised_simplex_agree(
        c in prop::collection::vec(-2.0f64..2.0, 4),
        rows in prop::collection::vec((prop::collection::vec(-1.0f64..2.0, 4), 0.5f64..3.0), 1..5),
    ) {
        let mut lp = LinearProgram::new(c);
        for (a, b) in rows {
            lp.push(a, Sense::Le, b);
        }
        // A box keeps every instance bounded.
        for j in 0..4 {
            let mut e = vec![0.0; 4];
            e[j] = 1.0;
            lp.push(e, Sense::Le, 5.0);
        }
        match (solve_lp(&lp).unwrap(), solve_lp_revised(&lp).unwrap()) {
            (LpOutcome::Optimal { value: a, .. }, LpOutcome::Optimal { value: b, .. }) => prop_assert!((a - b).abs() < 1e-8 * (1.0 + a.abs())),
            (a, b) => prop_assert_eq!(a, b),
        }
    }
}
