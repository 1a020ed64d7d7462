use proptest::prelude::*;

use wkam_core::action::{potential_and_barrier, KernelFamily};
use wkam_core::grid::{make_grid, min_lift_displacement, reduce_unit, sup_distance, torus_distance, TorusPoint, ValueField};
use wkam_core::models::{analytic_min_action, golden, LagrangianModel, MatrixField};
use wkam_core::operators::{lo_step, EvolutionState};

fn point(dim: usize) -> impl Strategy<Value = TorusPoint> {
    prop::collection::vec(-3.0f64..3.0, dim).prop_map(|c| TorusPoint::new(&c))
}

fn catalog() -> Vec<LagrangianModel> {
    vec![
        LagrangianModel::integrable(&[golden(), 0.3]).unwrap(),
        LagrangianModel::mechanical(2, 0.8).unwrap(),
        LagrangianModel::periodic_drift(&[0.4, -0.2], &[0.25, 0.1]).unwrap(),
        LagrangianModel::quadratic_shift(MatrixField::Constant([[1.5, 0.2], [0.2, 0.8]]), &[0.1, 0.3], 0.05).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn distance_is_a_bounded_metric(a in point(2), b in point(2), c in point(2)) {
        let ab = torus_distance(&a, &b);
        prop_assert!((ab - torus_distance(&b, &a)).abs() <= 1e-12);
        prop_assert!(ab <= torus_distance(&a, &c) + torus_distance(&c, &b) + 1e-12);
        prop_assert!(ab <= 2f64.sqrt() / 2.0 + 1e-12);
        prop_assert!(ab >= 0.0);
    }

    #[test]
    fn one_dimensional_distance_bound(a in point(1), b in point(1)) {
        prop_assert!(torus_distance(&a, &b) <= 0.5 + 1e-12);
    }

    #[test]
    fn reduction_is_idempotent(x in -1e6f64..1e6) {
        let r = reduce_unit(x);
        prop_assert!((0.0..1.0).contains(&r));
        prop_assert_eq!(reduce_unit(r), r);
    }

    #[test]
    fn lifts_contain_the_shortest_displacement(a in point(2), b in point(2), r in 1usize..3) {
        let d = torus_distance(&a, &b);
        let lifts = min_lift_displacement(&a, &b, r);
        let norm = |v: &Vec<f64>| v.iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assert!((norm(&lifts[0]) - d).abs() <= 1e-12);
        prop_assert!(lifts.windows(2).all(|w| norm(&w[0]) <= norm(&w[1])));
        prop_assert_eq!(lifts.len(), (2 * r + 1).pow(2));
    }

    #[test]
    fn fenchel_inequality(x in point(2), v in prop::collection::vec(-3.0f64..3.0, 2),
                          p in prop::collection::vec(-1.5f64..1.5, 2), t in 0.0f64..3.0) {
        for m in catalog() {
            let l = m.lagrangian(x.coords(), &v, t);
            let h = m.hamiltonian(x.coords(), &p, t).unwrap();
            prop_assert!(p[0] * v[0] + p[1] * v[1] <= l + h + 1e-8, "{}", m.name());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sup_distance_is_shift_invariant_on_dyadic_fields(
        u in prop::collection::vec(-1_000_000i64..1_000_000, 16),
        v in prop::collection::vec(-1_000_000i64..1_000_000, 16),
        c in -1_000_000i64..1_000_000,
    ) {
        // multiples of 2^-10 add without rounding
        let g = make_grid(1, 16).unwrap();
        let to = |w: &Vec<i64>, s: i64| ValueField::new(g, w.iter().map(|k| (k + s) as f64 / 1024.0).collect(), 0.0).unwrap();
        let base = sup_distance(&to(&u, 0), &to(&v, 0)).unwrap();
        let shifted = sup_distance(&to(&u, c), &to(&v, c)).unwrap();
        prop_assert_eq!(base, shifted);
    }

    #[test]
    fn sup_distance_shift_on_real_fields(seed_u in 0u64..1000, seed_v in 1000u64..2000, c in -50.0f64..50.0) {
        let g = make_grid(2, 8).unwrap();
        let u = ValueField::random_smooth(g, 2, seed_u);
        let v = ValueField::random_smooth(g, 2, seed_v);
        let a = sup_distance(&u, &v).unwrap();
        let b = sup_distance(&u.add_constant(c), &v.add_constant(c)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + c.abs()));
    }

    #[test]
    fn positive_definite_velocity_hessian(x in point(2), v in prop::collection::vec(-2.0f64..2.0, 2), t in 0.0f64..1.0) {
        let eps = 1e-3;
        for m in catalog() {
            let l = |a: f64, b: f64| m.lagrangian(x.coords(), &[v[0] + a, v[1] + b], t);
            let h00 = (l(eps, 0.0) - 2.0 * l(0.0, 0.0) + l(-eps, 0.0)) / (eps * eps);
            let h11 = (l(0.0, eps) - 2.0 * l(0.0, 0.0) + l(0.0, -eps)) / (eps * eps);
            let h01 = (l(eps, eps) - l(eps, -eps) - l(-eps, eps) + l(-eps, -eps)) / (4.0 * eps * eps);
            let tr = h00 + h11;
            let det = h00 * h11 - h01 * h01;
            let lambda_min = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
            prop_assert!(lambda_min >= 0.5, "{}: {}", m.name(), lambda_min);
        }
    }

    #[test]
    fn drift_lagrangians_are_time_periodic(x in point(2), v in prop::collection::vec(-2.0f64..2.0, 2), t in -5.0f64..5.0) {
        let m = LagrangianModel::periodic_drift(&[0.4, -0.2], &[0.25, 0.1]).unwrap();
        let a = m.lagrangian(x.coords(), &v, t);
        let b = m.lagrangian(x.coords(), &v, t + 1.0);
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn integrable_hamiltonian_vanishes_at_zero_momentum(x in point(2)) {
        let m = LagrangianModel::integrable(&[golden(), 0.3]).unwrap();
        prop_assert_eq!(m.hamiltonian(x.coords(), &[0.0, 0.0], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn analytic_action_is_nonnegative_and_vanishes_on_the_drift(y in point(2), x in point(2), t0 in 0.0f64..3.0, gap in 0.05f64..4.0) {
        let m = LagrangianModel::integrable(&[golden(), 0.3]).unwrap();
        prop_assert!(analytic_min_action(&m, &y, &x, t0, t0 + gap, 2).unwrap() >= 0.0);
        let reach = y.translate(&[golden() * gap, 0.3 * gap]);
        prop_assert!(analytic_min_action(&m, &y, &reach, t0, t0 + gap, 2).unwrap() < 1e-20);
    }
}

fn families() -> Vec<std::sync::Arc<KernelFamily>> {
    vec![
        KernelFamily::new(&LagrangianModel::mechanical(1, 1.0).unwrap(), &make_grid(1, 64).unwrap(), 0.05, 4.0).unwrap(),
        KernelFamily::new(&LagrangianModel::periodic_drift(&[golden()], &[0.25]).unwrap(), &make_grid(1, 32).unwrap(), 0.05, 4.0).unwrap(),
        KernelFamily::new(&LagrangianModel::integrable(&[golden(), 0.3]).unwrap(), &make_grid(2, 8).unwrap(), 0.1, 4.0).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn operators_are_monotone_equivariant_and_non_expansive(seed in 0u64..10_000, bump in 0.0f64..0.5, c in -20.0f64..20.0) {
        for fam in families() {
            let g = *fam.grid();
            let u = ValueField::random_smooth(g, 2, seed);
            let w = ValueField::random_smooth(g, 2, seed + 1);
            let above = ValueField::new(g, u.samples().iter().zip(w.samples()).map(|(a, b)| a + bump * b.abs()).collect(), 0.0).unwrap();
            let ops: Vec<Box<dyn Fn(&ValueField) -> ValueField>> = vec![
                Box::new(|f: &ValueField| lo_step(f, fam.sub_kernel(0)).unwrap()),
                Box::new(|f: &ValueField| EvolutionState::new(fam.clone(), f.clone()).unwrap().window_min_periodic(2, 0.5).unwrap()),
            ];
            for op in &ops {
                let (tu, tv, tw) = (op(&u), op(&above), op(&w));
                for (a, b) in tu.samples().iter().zip(tv.samples()) {
                    prop_assert!(a <= b);
                }
                let shifted = op(&u.add_constant(c));
                for (a, b) in shifted.samples().iter().zip(tu.samples()) {
                    prop_assert!((a - b - c).abs() <= 1e-12 * (1.0 + c.abs()));
                }
                let before = sup_distance(&u, &w).unwrap();
                prop_assert!(sup_distance(&tu, &tw).unwrap() <= before + 1e-12);
            }
            if fam.model().is_autonomous() {
                let s = |f: &ValueField| EvolutionState::new(fam.clone(), f.clone()).unwrap().window_min_autonomous(0.5, fam.steps_per_period()).unwrap();
                let (tu, tv) = (s(&u), s(&above));
                for (a, b) in tu.samples().iter().zip(tv.samples()) {
                    prop_assert!(a <= b);
                }
                let sh = s(&u.add_constant(c));
                for (a, b) in sh.samples().iter().zip(tu.samples()) {
                    prop_assert!((a - b - c).abs() <= 1e-12 * (1.0 + c.abs()));
                }
                prop_assert!(sup_distance(&tu, &s(&w)).unwrap() <= sup_distance(&u, &w).unwrap() + 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn potential_is_below_barrier(js in 0usize..20, jt in 0usize..20, n in 2usize..5) {
        let fam = KernelFamily::new(&LagrangianModel::periodic_drift(&[0.3], &[0.2]).unwrap(), &make_grid(1, 16).unwrap(), 0.05, 4.0).unwrap();
        let (s, t) = (js as f64 * 0.05, jt as f64 * 0.05);
        let (phi, h) = potential_and_barrier(&fam, s, t, n, 2 * n).unwrap();
        for (p, b) in phi.iter().zip(&h.values) {
            prop_assert!(*p <= *b + 1e-9);
        }
    }
}
