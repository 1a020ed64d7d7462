// Acceptance suite. One line per criterion, nonzero exit if any fails.
// Run with `cargo test -p wkam-harness --test acceptance`.

use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wkam_core::action::{peierls_barrier, KernelFamily};
use wkam_core::grid::{make_grid, sup_distance, PeriodicGrid, TorusPoint, ValueField};
use wkam_core::models::{golden, golden_direction, LagrangianModel};
use wkam_core::operators::{lo_step, EvolutionState};
use wkam_core::weakkam::{aubry_set, check_domination, extract_calibrated_curve, SpaceTimeField};
use wkam_harness::analytic::{sup_to_constant, AnalyticPath};
use wkam_harness::ergodize::ergodization_probe;
use wkam_harness::rates::{rate_experiment, RateStudy};
use wkam_harness::sharpness::sharpness_example;
use wkam_harness::{run_cli, ExperimentConfig};

const SLACK: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

// ---------------------------------------------------------------- 1

type Op<'a> = Box<dyn Fn(&ValueField) -> Vec<f64> + 'a>;

fn random_field(grid: PeriodicGrid, rng: &mut ChaCha8Rng) -> ValueField {
    let f = ValueField::random_smooth(grid, 3, rng.gen());
    let scale = rng.gen_range(0.1..3.0);
    f.map(|v| scale * v)
}

fn algebra_on(family: &Arc<KernelFamily>, pairs: usize, seed: u64) -> (f64, f64, f64) {
    let grid = *family.grid();
    let mut state = EvolutionState::new(family.clone(), ValueField::constant(grid, 0.0)).unwrap();
    // one fixed normalization so that every field sees the same operator
    let c = state.c_estimate();
    state.set_c_estimate(c);
    let mut ops: Vec<Op> = vec![
        Box::new(|u: &ValueField| lo_step(u, family.sub_kernel(0)).unwrap().into_samples()),
        Box::new(|u: &ValueField| state.window_min_from(u.samples(), 2)),
    ];
    if let Some(p) = family.period_kernel(0) {
        ops.push(Box::new(move |u: &ValueField| lo_step(u, &p).unwrap().into_samples()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mono, mut shift, mut expand) = (f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for _ in 0..pairs {
        let u = random_field(grid, &mut rng);
        let w = random_field(grid, &mut rng);
        // v ≥ u pointwise
        let bump = random_field(grid, &mut rng);
        let lift = bump.min();
        let v = ValueField::new(grid, u.samples().iter().zip(bump.samples()).map(|(a, b)| a + b - lift).collect(), 0.0).unwrap();
        let k = rng.gen_range(-20.0..20.0);
        let uk = u.add_constant(k);
        let uw = sup(u.samples(), w.samples());
        for op in &ops {
            let (tu, tv, tw, tk) = (op(&u), op(&v), op(&w), op(&uk));
            mono = mono.max(tu.iter().zip(&tv).fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b)));
            shift = shift.max(tk.iter().zip(&tu).fold(0.0f64, |m, (a, b)| m.max((a - b - k).abs())));
            expand = expand.max(sup(&tu, &tw) - uw);
        }
    }
    (mono, shift, expand)
}

fn operator_algebra() -> Outcome {
    let pendulum = LagrangianModel::mechanical(1, 1.0).unwrap();
    let f1 = KernelFamily::new(&pendulum, &make_grid(1, 128).unwrap(), 0.05, 4.0).unwrap();
    let flow = LagrangianModel::integrable(&golden_direction()).unwrap();
    let f2 = KernelFamily::new(&flow, &make_grid(2, 32).unwrap(), 0.1, 2.0).unwrap();
    let a = algebra_on(&f1, 200, 11);
    let b = algebra_on(&f2, 200, 12);
    let worst = |i: usize| [a, b].iter().map(|t| [t.0, t.1, t.2][i]).fold(f64::NEG_INFINITY, f64::max);
    let (mono, shift, expand) = (worst(0), worst(1), worst(2));
    outcome(
        mono <= SLACK && shift <= SLACK && expand <= SLACK,
        format!("monotone excess {mono:.1e}, shift error {shift:.1e}, expansion {expand:.1e} (slack {SLACK:.0e})"),
    )
}

// ---------------------------------------------------------------- 2, 4, 6

fn planar_study() -> RateStudy {
    let cfg = ExperimentConfig::from_toml_str(
        "[model]\nkind = \"integrable\"\ndim = 2\nomega = \"golden\"\n[grid]\nresolution = 64\n[experiment]\nseed = 1\n",
    )
    .unwrap();
    rate_experiment(&cfg).unwrap()
}

fn dominance(study: &RateStudy) -> Outcome {
    let worst = study.dominance.iter().map(|r| r.dist_windowed - r.dist_classic).fold(f64::NEG_INFINITY, f64::max);
    let ts: Vec<f64> = study.dominance.iter().map(|r| r.t).collect();
    let all_times = ts == (0..10).map(|k| 2f64.powi(k)).collect::<Vec<_>>();
    outcome(
        all_times && study.dominance.iter().all(|r| r.holds(SLACK)),
        format!("{} times, max(dist_windowed - dist_classic) = {worst:.2e}", ts.len()),
    )
}

fn classic_rate(study: &RateStudy) -> Outcome {
    let r = &study.classic;
    let pass = !r.inconclusive && (-1.3..=-0.7).contains(&r.fitted_slope);
    outcome(
        pass,
        format!(
            "slope {:.3} over {} points, residual {:.3}, floor {:.1e}",
            r.fitted_slope, r.fitted_points, r.residual_of_fit, r.noise_floor
        ),
    )
}

fn windowed_rate(study: &RateStudy) -> Outcome {
    let r = &study.windowed;
    let detail = format!(
        "slope {:.3} over {} points, residual {:.3}{}",
        r.fitted_slope,
        r.fitted_points,
        r.residual_of_fit,
        if r.inconclusive { " (inconclusive fit, dominance decides)" } else { "" }
    );
    let pass = if r.inconclusive { study.dominance_holds } else { r.fitted_slope <= -1.4 && study.dominance_holds };
    outcome(pass, detail)
}

// ---------------------------------------------------------------- 3

fn long_time_limit() -> Outcome {
    let grid = make_grid(1, 512).unwrap();
    let u0 = ValueField::random_smooth(grid, 3, 2024);
    let path = AnalyticPath::new(&[golden()], &u0).unwrap();
    let err = sup_to_constant(&path.classic(2000.0), u0.min());
    outcome(err <= 5e-3, format!("sup |T_2000 u - min u| = {err:.2e} (bound 5e-3)"))
}

// ---------------------------------------------------------------- 5

fn sharpness() -> Outcome {
    let table = sharpness_example(0.3, &[golden()], 6, 512).unwrap();
    let times: Vec<f64> = table.rows.iter().map(|r| r.t_m).collect();
    let fib = times == [3.0, 5.0, 8.0, 13.0, 21.0, 34.0];
    let lo = table.rows.iter().map(|r| r.scaled).fold(f64::INFINITY, f64::min);
    let hi = table.rows.iter().map(|r| r.scaled).fold(f64::NEG_INFINITY, f64::max);
    outcome(
        fib && table.ubar == 0.0 && table.lower_bound_holds && table.upper_probe_hit,
        format!(
            "t_m = {times:?}, t*T_t u(x0) in [{lo:.2e}, {hi:.2e}], lower {:.2e}, probe {:.2e}",
            table.lower_bound, table.upper_probe
        ),
    )
}

// ---------------------------------------------------------------- 7

/// |∫ √(2U)| along the shorter arc from 0 to x, for U = 1 − cos 2πx.
fn pendulum_distance(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    (2.0 / pi) * (1.0 - (pi * x).cos().abs())
}

fn barrier_oracle() -> Outcome {
    let n = 256;
    let model = LagrangianModel::mechanical(1, 1.0).unwrap();
    let family = KernelFamily::new(&model, &make_grid(1, n).unwrap(), 0.05, 4.0).unwrap();
    let table = peierls_barrier(&family, 0.0, 0.0, 64).unwrap();
    let mut err = 0.0f64;
    for y in 0..n {
        for x in 0..n {
            let oracle = pendulum_distance(y as f64 / n as f64) + pendulum_distance(x as f64 / n as f64);
            err = err.max((table.get(y, x) - oracle).abs());
        }
    }
    let u0 = ValueField::random_smooth(*family.grid(), 3, 7);
    let mut state = EvolutionState::new(family, u0.clone()).unwrap();
    let limit = state.fixed_point(1e-9, 4000).unwrap();
    let rep_err = sup(limit.samples(), &table.represent(u0.samples()));
    outcome(
        err <= 2e-2 && rep_err <= 2e-2,
        format!("barrier vs quadrature {err:.2e}, fixed point vs min_y(u0 + h) {rep_err:.2e} (bound 2e-2)"),
    )
}

// ---------------------------------------------------------------- 8

fn drift_pipeline() -> Outcome {
    let model = LagrangianModel::periodic_drift(&[golden()], &[0.25]).unwrap();
    let grid = make_grid(1, 128).unwrap();
    let family = KernelFamily::new(&model, &grid, 0.05, 4.0).unwrap();
    // one kinetic quantum: the cost of a one-node hop over one sub-step
    let floor = grid.spacing().powi(2) / (2.0 * family.dt());
    let state = EvolutionState::new(family.clone(), ValueField::random_smooth(grid, 3, 5)).unwrap();
    let mut gaps = Vec::new();
    let mut prev: Option<ValueField> = None;
    let mut n = 8;
    while n <= 256 {
        let w = state.window_min_periodic(n, 0.0).unwrap();
        if let Some(p) = &prev {
            gaps.push(sup_distance(p, &w).unwrap());
        }
        prev = Some(w);
        n *= 2;
    }
    let cauchy = gaps.windows(2).all(|g| g[1] <= 0.7 * g[0] || g[1] <= floor);
    let u = SpaceTimeField::from_window_limit(&state, 256).unwrap();
    let dom = check_domination(&u, &family, 500, 2e-2, 8, 3).unwrap();
    let nodes = grid.node_count();
    let defect = (0..8)
        .map(|k| extract_calibrated_curve(&u, &family, state.c_estimate(), k * nodes / 8, 0, 10).unwrap().max_defect)
        .fold(0.0f64, f64::max);
    let gap_text: Vec<String> = gaps.iter().map(|g| format!("{g:.1e}")).collect();
    outcome(
        cauchy && dom.passed() && defect <= 1e-2,
        format!(
            "doubling gaps [{}] (floor {floor:.1e}), {} domination violations of {}, calibration defect {defect:.1e}",
            gap_text.join(", "),
            dom.violations,
            dom.checked
        ),
    )
}

// ---------------------------------------------------------------- 9

fn aubry_sets() -> Outcome {
    let pendulum = LagrangianModel::mechanical(1, 1.0).unwrap();
    let fp = KernelFamily::new(&pendulum, &make_grid(1, 256).unwrap(), 0.05, 4.0).unwrap();
    let a = aubry_set(&fp, 0.0, 64, 2e-2).unwrap();
    // {0} up to one neighbouring node on either side
    let pend_ok = !a.is_empty() && a.iter().all(|&x| x <= 1 || x >= 255) && a.contains(&0);
    let flow = LagrangianModel::integrable(&[golden()]).unwrap();
    let fi = KernelFamily::new(&flow, &make_grid(1, 128).unwrap(), 0.05, 4.0).unwrap();
    let b = aubry_set(&fi, 0.0, 64, 2e-2).unwrap();
    outcome(
        pend_ok && b.len() == 128,
        format!("pendulum: {} nodes {:?}..{:?}; integrable: {} of 128 nodes", a.len(), a.first(), a.last(), b.len()),
    )
}

// ---------------------------------------------------------------- 10

fn ergodization() -> Outcome {
    let radii: Vec<f64> = (1..=6).map(|k| 0.5f64.powi(k)).collect();
    let rep = ergodization_probe(&golden_direction(), &radii, &TorusPoint::new(&[0.0, 0.0]), 128, 1e4).unwrap();
    let slope = rep.slope.unwrap_or(f64::NAN);
    outcome(
        rep.timeouts.is_empty() && (slope + 2.0).abs() <= 0.5,
        format!("slope {slope:.3} (target -2 +/- 0.5), residual {:.3}", rep.residual_of_fit.unwrap_or(f64::NAN)),
    )
}

// ---------------------------------------------------------------- 11

const RUNS: [(&str, &str); 5] = [
    ("solve", "[model]\nkind = \"mechanical\"\namplitude = 1.0\n[grid]\nresolution = 64\n[experiment]\nseed = 4\n"),
    ("rates", "[model]\nkind = \"integrable\"\ndim = 2\nomega = \"golden\"\n[grid]\nresolution = 32\n[experiment]\nseed = 9\n"),
    ("aubry", "[model]\nkind = \"mechanical\"\namplitude = 1.0\n[grid]\nresolution = 64\n"),
    ("sharpness", "[model]\nkind = \"integrable\"\nomega = \"golden\"\n"),
    ("ergodize", "[model]\nkind = \"integrable\"\ndim = 2\nomega = \"golden\"\n[grid]\nresolution = 32\n"),
];

fn run_all(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for (cmd, text) in RUNS {
        let cfg = root.join(format!("{cmd}.toml"));
        fs::write(&cfg, text).unwrap();
        let out = root.join(cmd);
        let code = run_cli(["wkam", cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0, "{cmd}");
        let mut names: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for name in names {
            files.push((format!("{cmd}/{}", name.to_string_lossy()), fs::read(out.join(&name)).unwrap()));
        }
    }
    files
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_all(a.path());
    let second = run_all(b.path());
    let differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    outcome(
        first.len() == second.len() && !first.is_empty() && differing.is_empty(),
        format!("{} artifacts compared, differing: {differing:?}", first.len()),
    )
}

// ----------------------------------------------------------------

fn main() {
    let mut failed = 0;
    let mut report = |id: usize, name: &str, budget: u64, shared: Duration, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed() + shared;
        let in_time = took <= Duration::from_secs(budget);
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {id:>2} {name}: {} [{:.1} s of {budget} s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
    };
    let none = Duration::ZERO;
    report(1, "operator algebra", 30, none, &operator_algebra);
    let start = Instant::now();
    let study = planar_study();
    // the shared study counts against each rate budget
    let study_time = start.elapsed();
    report(2, "windowed dominance", 120, study_time, &|| dominance(&study));
    report(3, "long-time limit", 60, none, &long_time_limit);
    report(4, "classic rate", 180, study_time, &|| classic_rate(&study));
    report(5, "sharpness", 30, none, &sharpness);
    report(6, "windowed rate", 180, study_time, &|| windowed_rate(&study));
    report(7, "barrier oracle", 120, none, &barrier_oracle);
    report(8, "drift pipeline", 180, none, &drift_pipeline);
    report(9, "aubry sets", 60, none, &aubry_sets);
    report(10, "ergodization scaling", 60, none, &ergodization);
    report(11, "determinism", 600, none, &determinism);
    println!("{} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
