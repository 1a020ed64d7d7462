use wkam_core::action::{min_action, peierls_barrier, KernelFamily};
use wkam_core::grid::{make_grid, sup_distance, ValueField};
use wkam_core::models::{analytic_min_action, golden, LagrangianModel};
use wkam_core::operators::EvolutionState;
use wkam_core::weakkam::{aubry_set, check_domination, weak_kam_from_trace, SpaceTimeField};

// DP minimal action against the closed form, within C·(dt + h²/dt).
#[test]
fn dp_action_tracks_the_closed_form() {
    let n = 64;
    let grid = make_grid(1, n).unwrap();
    let h = grid.spacing();
    for model in [
        LagrangianModel::integrable(&[golden()]).unwrap(),
        LagrangianModel::periodic_drift(&[0.3], &[0.2]).unwrap(),
    ] {
        let dt = 0.05;
        let fam = KernelFamily::new(&model, &grid, dt, 4.0).unwrap();
        let mut worst = 0.0f64;
        for y in [0, 7, 31] {
            for x in (0..n).step_by(5) {
                let dp = fam.min_action(y, x, 0.0, 2.0).unwrap();
                let exact =
                    analytic_min_action(&model, &grid.node_point(y), &grid.node_point(x), 0.0, 2.0, 2).unwrap();
                worst = worst.max((dp - exact).abs());
            }
        }
        assert!(worst <= 2.0 * (dt + h * h / dt), "{}: {worst}", model.name());
    }
}

#[test]
fn one_shot_action_matches_the_family() {
    let m = LagrangianModel::mechanical(1, 0.5).unwrap();
    let g = make_grid(1, 32).unwrap();
    let fam = KernelFamily::new(&m, &g, 0.1, 3.0).unwrap();
    let a = min_action(&m, &g, 3, 20, 0.0, 1.5, 0.1, 3.0).unwrap();
    assert_eq!(a, fam.min_action(3, 20, 0.0, 1.5).unwrap());
}

#[test]
fn aubry_set_is_stable_under_longer_windows() {
    let m = LagrangianModel::mechanical(1, 1.0).unwrap();
    let fam = KernelFamily::new(&m, &make_grid(1, 64).unwrap(), 0.05, 4.0).unwrap();
    let a = aubry_set(&fam, 0.0, 32, 2e-2).unwrap();
    let b = aubry_set(&fam, 0.0, 64, 2e-2).unwrap();
    assert_eq!(a, b);
    assert!(a.contains(&0));
}

// The fixed point, the barrier representation and the trace construction
// give one and the same solution, and it is dominated.
#[test]
fn pendulum_solution_three_ways() {
    let m = LagrangianModel::mechanical(1, 1.0).unwrap();
    let fam = KernelFamily::new(&m, &make_grid(1, 64).unwrap(), 0.05, 4.0).unwrap();
    let grid = *fam.grid();
    let u0 = ValueField::random_smooth(grid, 3, 21);
    let mut state = EvolutionState::new(fam.clone(), u0.clone()).unwrap();
    let limit = state.fixed_point(1e-10, 4000).unwrap();

    let table = peierls_barrier(&fam, 0.0, 0.0, 64).unwrap();
    let rep = ValueField::new(grid, table.represent(u0.samples()), 0.0).unwrap();
    assert!(sup_distance(&limit, &rep).unwrap() < 1e-8);

    let aubry = aubry_set(&fam, 0.0, 64, 1e-9).unwrap();
    let trace: Vec<(usize, f64)> = aubry.iter().map(|&p| (p, limit.samples()[p])).collect();
    let u = weak_kam_from_trace(&trace, &fam, &[0.0], 64).unwrap();
    let from_trace = ValueField::new(grid, u.slice(0).to_vec(), 0.0).unwrap();
    assert!(sup_distance(&limit, &from_trace).unwrap() < 1e-8);

    let field = SpaceTimeField::stationary(&limit, SpaceTimeField::family_lattice(&fam)).unwrap();
    let dom = check_domination(&field, &fam, 300, 1e-9, 8, 4).unwrap();
    assert!(dom.passed(), "{dom:?}");
}
