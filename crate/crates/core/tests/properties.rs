use proptest::prelude::*;

use qfw_core::fw_engine::{gamma, h_bound, iteration_count, qfw_vector_run, RunOptions};
use qfw_core::lmo_vector::{duerr_hoyer_max_find, exact_lmo_l1, exact_lmo_simplex, group_dual_norm};
use qfw_core::oracles::bounded_error_inject;
use qfw_core::problems::{brute_force_lmo_vector, make_l1_quadratic, project_l1};
use qfw_core::{ConstraintSet, Costs, ErrorModel, NoiseMode, QueryLedger, Vector};

fn vector(max_len: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-10.0f64..10.0, 1..max_len).prop_map(Vector::from_vec)
}

fn mode() -> impl Strategy<Value = NoiseMode> {
    prop_oneof![
        Just(NoiseMode::WorstCase),
        Just(NoiseMode::Uniform),
        Just(NoiseMode::Consistent),
        Just(NoiseMode::Zero),
    ]
}

proptest! {
    #[test]
    fn ledger_totals_equal_round_sums(
        charges in prop::collection::vec((0u64..1000, 0u64..1000, 0.0f64..1e6, any::<bool>()), 0..60)
    ) {
        let mut l = QueryLedger::new();
        let mut want = Costs::default();
        for (f, q, t, close) in charges {
            l.charge_function(f);
            l.charge_quantum(q);
            l.charge_time(t);
            want.function_queries += f;
            want.quantum_queries += q;
            want.time_cost += t;
            if close {
                l.close_round();
            }
            prop_assert!(l.is_consistent());
        }
        prop_assert_eq!(l.totals().function_queries, want.function_queries);
        prop_assert_eq!(l.totals().quantum_queries, want.quantum_queries);
    }

    #[test]
    fn injection_respects_bound(g in vector(40), eps in 0.0f64..2.0, m in mode(), seed in any::<u64>()) {
        let out = bounded_error_inject(&g, eps, &ErrorModel::new(m, seed));
        prop_assert_eq!(out.len(), g.len());
        // one rounding of g_i +- eps
        prop_assert!((out - &g).amax() <= eps + 4.0 * f64::EPSILON * g.amax());
    }

    #[test]
    fn exact_lmos_match_enumeration(g in vector(12), r in 0.1f64..5.0) {
        let d = g.len();
        let l1 = ConstraintSet::l1_ball(d, r).unwrap();
        let a = exact_lmo_l1(&g, r).unwrap();
        let b = brute_force_lmo_vector(&l1, &g).unwrap();
        prop_assert!((a.inner_value - b.inner_value).abs() <= 1e-12 * r * g.amax().max(1.0));
        let s = exact_lmo_simplex(&g).unwrap();
        let sb = brute_force_lmo_vector(&ConstraintSet::simplex(d).unwrap(), &g).unwrap();
        prop_assert_eq!(s.inner_value, sb.inner_value);
    }

    #[test]
    fn convex_combinations_of_atoms_stay_feasible(
        gs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 8), 1..40),
        r in 0.1f64..3.0,
    ) {
        let set = ConstraintSet::l1_ball(8, r).unwrap();
        let mut x = Vector::zeros(8);
        for (k, g) in gs.iter().enumerate() {
            let s = exact_lmo_l1(&Vector::from_vec(g.clone()), r).unwrap().s;
            let gm = gamma(k);
            x = &x * (1.0 - gm) + s * gm;
            prop_assert!(set.contains_vector(&x).unwrap());
        }
    }

    #[test]
    fn l1_projection_is_feasible_and_idempotent(v in vector(30), r in 0.1f64..5.0) {
        let p = project_l1(&v, r);
        prop_assert!(p.lp_norm(1) <= r * (1.0 + 1e-12));
        let q = project_l1(&p, r);
        prop_assert!((q - &p).amax() <= 1e-12 * r);
    }

    #[test]
    fn max_find_is_deterministic_and_in_range(
        v in prop::collection::vec(-5.0f64..5.0, 1..200),
        delta in 0.001f64..0.9,
        seed in any::<u64>(),
    ) {
        let m = ErrorModel::new(NoiseMode::Uniform, seed);
        let a = duerr_hoyer_max_find(&v, delta, &m).unwrap();
        let b = duerr_hoyer_max_find(&v, delta, &m).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.index < v.len());
    }

    #[test]
    fn group_dual_norm_dominates_each_restriction(g in prop::collection::vec(-3.0f64..3.0, 6)) {
        let g = Vector::from_vec(g);
        let groups = vec![vec![0, 1, 2], vec![2, 3], vec![4, 5]];
        let (value, idx) = group_dual_norm(&g, &groups, &[1.0, 2.0, f64::INFINITY]).unwrap();
        let inf = g.rows(0, 3).amax();
        let two = (g[2] * g[2] + g[3] * g[3]).sqrt();
        let one = g[4].abs() + g[5].abs();
        prop_assert!((value - inf.max(two).max(one)).abs() <= 1e-12);
        prop_assert!(idx < 3);
    }

    #[test]
    fn schedule_identities_hold(cf in 0.01f64..100.0, eps in 0.001f64..10.0) {
        let t = iteration_count(cf, eps).unwrap();
        prop_assert!(t >= 1);
        if t > 1 {
            prop_assert!(h_bound(cf, t) <= eps * (1.0 + 1e-12));
            prop_assert!(h_bound(cf, t - 1) > eps * (1.0 - 1e-12));
        }
        for k in 0..20 {
            prop_assert!((gamma(k) * (k as f64 + 2.0) - 2.0).abs() < 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn seeded_runs_repeat_exactly(seed in 0u64..1000, m in mode()) {
        let p = make_l1_quadratic(24, 1.0, seed).unwrap();
        let opts = RunOptions { iterations: Some(30), ..Default::default() };
        let model = ErrorModel::new(m, seed);
        let a = qfw_vector_run(&p.objective, &p.set, 0.1, 0.05, &model, p.start.clone(), &opts).unwrap();
        let b = qfw_vector_run(&p.objective, &p.set, 0.1, 0.05, &model, p.start.clone(), &opts).unwrap();
        prop_assert_eq!(&a.rows, &b.rows);
        prop_assert_eq!(&a.final_iterate, &b.final_iterate);
        prop_assert!(a.ledger.is_consistent());
        prop_assert!(a.slack_within_allowance());
        for w in a.rows.windows(2) {
            prop_assert!(w[1].best_gap <= w[0].best_gap);
        }
    }
}
