//! Property tests for the solver's algebraic invariants, checked against
//! dense oracles and brute-force enumeration on small random instances.

mod common;

use common::{dense_jacobian, dense_residual, max_rel_err, random_instance};
use mniqp::heuristics::{auto_interval, RefactorParam, RefactorSchedule};
use mniqp::ipm::max_feasible_steps;
use mniqp::kkt::Direction;
use mniqp::kkt::{assemble, merit, solve_direction, DeltaJacobian, Iterate, KktFormulation};
use mniqp::linsolve::factorize_unlogged;
use mniqp::problem::ProblemClass;
use mniqp::update::{
    descent_check, directional_derivative, inexact_residual, optimal_rank_error, select_indices,
    ShadowPoint,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The merit function is the euclidean norm of the residual as
    /// written in the KKT conditions, nothing more.
    #[test]
    fn merit_matches_dense_oracle(
        seed in any::<u64>(),
        n in 1usize..6,
        m_eq_raw in 0usize..5,
        m_in in 1usize..8,
        mu in 0.0f64..2.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, z) = random_instance(n, m_eq_raw % n, m_in, &mut rng);
        let oracle = dense_residual(&p, &z, mu).norm();
        let got = merit(&p, &z, mu);
        prop_assert!((got - oracle).abs() <= 1e-12 * oracle.max(1.0));
    }

    /// The r pairs of largest magnitude beat every other subset of size
    /// at most r, and patching them achieves exactly the predicted error.
    #[test]
    fn selected_indices_minimize_error_over_all_subsets(
        pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..8),
        r_raw in 0usize..8,
    ) {
        let m = pairs.len();
        let r = r_raw % (m + 1);
        let (dlambda, ds): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let delta = DeltaJacobian { dlambda, ds };
        let mags = delta.pair_magnitudes();

        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << m) {
            if mask.count_ones() as usize > r {
                continue;
            }
            let err: f64 = (0..m)
                .filter(|i| mask & (1 << i) == 0)
                .map(|i| mags[i] * mags[i])
                .sum::<f64>()
                .sqrt();
            best = best.min(err);
        }

        let predicted = optimal_rank_error(&delta, r);
        prop_assert!((predicted - best).abs() <= 1e-9 * best.max(1.0));

        let z = Iterate {
            x: vec![],
            lambda_eq: vec![],
            lambda_in: delta.dlambda.clone(),
            s: delta.ds.clone(),
        };
        let mut shadow = ShadowPoint {
            lambda: vec![0.0; m],
            s: vec![0.0; m],
        };
        let selected = select_indices(&shadow.delta_from(&z), r);
        prop_assert!(selected.len() == r.min(m));
        shadow.patch(&z, &selected);
        let achieved = shadow.error_norm(&z);
        prop_assert!((achieved - best).abs() <= 1e-9 * best.max(1.0));
    }

    /// Patching refreshes exactly the selected pairs and leaves the rest
    /// alone; refreshing every pair makes the shadow Jacobian exact.
    #[test]
    fn patch_refreshes_exactly_the_selected_pairs(
        seed in any::<u64>(),
        n in 1usize..5,
        m_in in 1usize..8,
        r_raw in 0usize..8,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, z) = random_instance(n, 0, m_in, &mut rng);
        let before = common::perturbed_shadow(&z, 0.7, &mut rng);
        let r = r_raw % (m_in + 1);
        let selected = select_indices(&before.delta_from(&z), r);

        let mut after = before.clone();
        after.patch(&z, &selected);
        for i in 0..m_in {
            if selected.contains(&i) {
                prop_assert_eq!(after.lambda[i], z.lambda_in[i]);
                prop_assert_eq!(after.s[i], z.s[i]);
            } else {
                prop_assert_eq!(after.lambda[i], before.lambda[i]);
                prop_assert_eq!(after.s[i], before.s[i]);
            }
        }

        let mut full = before.clone();
        full.patch(&z, &(0..m_in).collect::<Vec<_>>());
        let patched = dense_jacobian(&p, &full.lambda, &full.s);
        let exact = dense_jacobian(&p, &z.lambda_in, &z.s);
        prop_assert_eq!(patched, exact);
    }

    /// An exact Newton direction drives the merit down at rate equal to
    /// the merit itself, passes the descent check, and leaves no linear
    /// residual.
    #[test]
    fn newton_direction_is_merit_descent_with_zero_eta(
        seed in any::<u64>(),
        n in 1usize..6,
        m_eq_raw in 0usize..5,
        m_in in 1usize..8,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, z) = random_instance(n, m_eq_raw % n, m_in, &mut rng);
        let mu = 0.5;
        let kkt = assemble(&p, KktFormulation::Unreduced, &z.lambda_in, &z.s).unwrap();
        let fact = factorize_unlogged(&kkt.system).unwrap();
        let d = solve_direction(&kkt, &fact, &p, &z, mu).unwrap();

        let phi = merit(&p, &z, mu);
        let slope = directional_derivative(&p, &z, mu, &d);
        prop_assert!((slope + phi).abs() <= 1e-9 * phi.max(1.0));
        prop_assert!(descent_check(&p, &z, mu, &d).is_descent);
        prop_assert!(inexact_residual(&p, &z, mu, &d) <= 1e-10);
    }

    /// Fraction-to-boundary steps keep the cone variables strictly
    /// positive and never exceed a full step.
    #[test]
    fn fraction_to_boundary_preserves_positivity(
        s in prop::collection::vec(0.01f64..5.0, 1..10),
        lambda_scale in 0.01f64..5.0,
        dirs in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..10),
    ) {
        let m = s.len().min(dirs.len());
        let z = Iterate {
            x: vec![],
            lambda_eq: vec![],
            lambda_in: s.iter().take(m).map(|v| v * lambda_scale).collect(),
            s: s[..m].to_vec(),
        };
        let d = Direction {
            dx: vec![],
            dlambda_eq: vec![],
            dlambda_in: dirs.iter().take(m).map(|p| p.0).collect(),
            ds: dirs.iter().take(m).map(|p| p.1).collect(),
        };
        let (ap, ad) = max_feasible_steps(&z, &d);
        prop_assert!(ap > 0.0 && ap <= 1.0);
        prop_assert!(ad > 0.0 && ad <= 1.0);
        for i in 0..m {
            prop_assert!(z.s[i] + ap * d.ds[i] > 0.0);
            prop_assert!(z.lambda_in[i] + ad * d.dlambda_in[i] > 0.0);
        }
    }

    /// A fixed interval l refactorizes at iteration 0 and then exactly
    /// every l + 1 iterations: l patched iterations between rebuilds.
    #[test]
    fn refactor_schedule_has_period_interval_plus_one(l in 1usize..20) {
        let sched = RefactorSchedule::new(
            RefactorParam::Fixed(l),
            2,
            10,
            ProblemClass::Small,
        );
        prop_assert_eq!(sched.interval(), Some(l));
        let rebuilds: Vec<usize> = (0..200).filter(|&k| sched.refactor_due(k)).collect();
        let expected: Vec<usize> = (0..200).step_by(l + 1).collect();
        prop_assert_eq!(rebuilds, expected);
    }
}

#[test]
fn auto_interval_follows_the_class_divisor() {
    // rank * m_in / divisor, rounded half away from zero, floored at 1
    assert_eq!(auto_interval(2, 51, ProblemClass::Small), 51);
    assert_eq!(auto_interval(1, 3, ProblemClass::Small), 2);
    assert_eq!(auto_interval(1, 1, ProblemClass::Small), 1);
    assert_eq!(auto_interval(3, 5, ProblemClass::Medium), 2);
    assert_eq!(auto_interval(2, 75, ProblemClass::Large), 2);
    assert_eq!(auto_interval(1, 10, ProblemClass::Large), 1);
}

#[test]
fn never_schedule_rebuilds_only_at_start() {
    let sched = RefactorSchedule::new(RefactorParam::Never, 2, 10, ProblemClass::Small);
    assert_eq!(sched.interval(), None);
    assert!(sched.refactor_due(0));
    assert!((1..500).all(|k| !sched.refactor_due(k)));
}

/// The three Newton system formulations are different factorizations of
/// the same linear map, so their directions coincide.
#[test]
fn formulations_agree_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for trial in 0..25 {
        let n = 2 + (trial % 4);
        let m_eq = trial % n;
        let m_in = 1 + (trial % 7);
        let (p, z) = random_instance(n, m_eq, m_in, &mut rng);
        let mu = 0.3;
        let mut dirs = Vec::new();
        for f in [
            KktFormulation::Unreduced,
            KktFormulation::Reduced,
            KktFormulation::Condensed,
        ] {
            let kkt = assemble(&p, f, &z.lambda_in, &z.s).unwrap();
            let fact = factorize_unlogged(&kkt.system).unwrap();
            dirs.push(solve_direction(&kkt, &fact, &p, &z, mu).unwrap().to_flat());
        }
        assert!(
            max_rel_err(&dirs[0], &dirs[1]) <= 1e-9,
            "trial {trial} reduced"
        );
        assert!(
            max_rel_err(&dirs[0], &dirs[2]) <= 1e-9,
            "trial {trial} condensed"
        );
    }
}
