//! `wkam <subcommand> --config FILE [--out DIR] [--seed N] [--threads N]`.
//!
//! Exit codes: 0 success, 1 a check failed (or a numerical error), 2 bad
//! arguments or configuration.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use wkam_core::action::peierls_barrier;
use wkam_core::operators::EvolutionState;
use wkam_core::weakkam::{
    aubry_from_diagonal, barrier_diagonal, check_domination, extract_calibrated_curve, static_classes, SpaceTimeField,
    VerificationReport,
};

use crate::config::ExperimentConfig;
use crate::ergodize::ergodization_probe;
use crate::error::Result;
use crate::io::{artifact, ensure_dir, read_field_csv, write_dominance_csv, write_field_csv, write_history_csv, write_json, write_table};
use crate::rates::rate_experiment;
use crate::sharpness::sharpness_example;

#[derive(Debug, Parser)]
#[command(name = "wkam", version, about = "Weak KAM experiments on flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory [default: ./out, or output.dir from the config].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides experiment.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Iterate the normalized Lax-Oleinik map to its fixed point.
    Solve(Common),
    /// Classic and windowed convergence rates.
    Rates(Common),
    /// Peierls barrier table h(y, x).
    Barrier(Common),
    /// Aubry set and static classes.
    Aubry(Common),
    /// Check that a field is a backward weak KAM solution.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Field CSV (x_index[,y_index],value).
        #[arg(long)]
        field: PathBuf,
    },
    /// Tent example at the drift's return times.
    Sharpness(Common),
    /// Ergodization times T(R) of a linear flow.
    Ergodize(Common),
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let common = match &cli.command {
        Command::Solve(c) | Command::Rates(c) | Command::Barrier(c) | Command::Aubry(c) | Command::Sharpness(c) | Command::Ergodize(c) => c,
        Command::Verify { common, .. } => common,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(common.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(&cli.command, common)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: &Command, common: &Common) -> Result<i32> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.experiment.seed = seed;
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("./out"));
    ensure_dir(&out)?;
    match cmd {
        Command::Solve(_) => solve(&cfg, &out),
        Command::Rates(_) => rates(&cfg, &out),
        Command::Barrier(_) => barrier(&cfg, &out),
        Command::Aubry(_) => aubry(&cfg, &out),
        Command::Verify { field, .. } => verify(&cfg, &out, field),
        Command::Sharpness(_) => sharpness(&cfg, &out),
        Command::Ergodize(_) => ergodize(&cfg, &out),
    }
}

fn status(ok: bool) -> i32 {
    if ok {
        0
    } else {
        1
    }
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    model: &'a str,
    dim: usize,
    resolution: usize,
    dt: f64,
    v_max: f64,
    seed: u64,
    c_estimate: f64,
    periods: usize,
    final_residual: f64,
    converged: bool,
    min: f64,
    max: f64,
}

fn solve(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let family = cfg.build_family()?;
    let u0 = cfg.initial_field(*family.grid());
    let mut state = EvolutionState::new(family, u0)?;
    let converged = match state.fixed_point(cfg.experiment.tolerance, cfg.experiment.max_periods) {
        Ok(_) => true,
        Err(wkam_core::Error::NonConvergence { .. }) => false,
        Err(e) => return Err(e.into()),
    };
    let hist = state.history();
    write_history_csv(&artifact(out, "history.csv"), hist)?;
    write_field_csv(&artifact(out, "ubar.csv"), state.current())?;
    let summary = SolveSummary {
        model: &cfg.model.kind,
        dim: cfg.model.dim,
        resolution: cfg.grid.resolution,
        dt: cfg.operator.dt,
        v_max: cfg.operator.v_max,
        seed: cfg.experiment.seed,
        c_estimate: state.c_estimate(),
        periods: hist.len(),
        final_residual: hist.last().map_or(f64::NAN, |r| r.residual),
        converged,
        min: state.current().min(),
        max: state.current().max(),
    };
    write_json(&artifact(out, "solve.json"), &summary)?;
    if !converged {
        eprintln!("no fixed point within {} periods", cfg.experiment.max_periods);
    }
    Ok(status(converged))
}

fn rates(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let study = rate_experiment(cfg)?;
    write_json(&artifact(out, "rates.json"), &study)?;
    write_dominance_csv(&artifact(out, "rates.csv"), &study.dominance)?;
    for r in [&study.classic, &study.windowed] {
        if r.inconclusive {
            eprintln!("{} fit inconclusive: residual {:.3}", r.variant, r.residual_of_fit);
        }
    }
    Ok(status(study.dominance_holds))
}

#[derive(Serialize)]
struct BarrierSummary<'a> {
    model: &'a str,
    tau: f64,
    tau_prime: f64,
    window_n: usize,
    normalization: f64,
    diagonal_min: f64,
    diagonal_max: f64,
    max_value: f64,
}

fn barrier(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let family = cfg.build_family()?;
    let table = peierls_barrier(&family, cfg.operator.tau, cfg.tau_prime(), cfg.operator.window_n)?;
    let n = family.grid().node_count();
    write_table(
        &artifact(out, "barrier.csv"),
        &["y_index", "x_index", "value"],
        (0..n * n).map(|k| vec![(k / n).to_string(), (k % n).to_string(), format!("{}", table.values[k])]),
    )?;
    let diag = table.diagonal();
    let summary = BarrierSummary {
        model: &cfg.model.kind,
        tau: table.tau,
        tau_prime: table.tau_prime,
        window_n: table.window_n,
        normalization: table.normalization,
        diagonal_min: diag.iter().copied().fold(f64::INFINITY, f64::min),
        diagonal_max: diag.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        max_value: table.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    write_json(&artifact(out, "barrier.json"), &summary)?;
    Ok(0)
}

#[derive(Serialize)]
struct AubrySummary<'a> {
    model: &'a str,
    tau: f64,
    window_n: usize,
    tol: f64,
    nodes: Vec<usize>,
    classes: Vec<Vec<usize>>,
}

fn aubry(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let family = cfg.build_family()?;
    let (tau, n, tol) = (cfg.operator.tau, cfg.operator.window_n, cfg.experiment.aubry_tol);
    let (diag, classes) = if family.has_dense_period() {
        let table = peierls_barrier(&family, tau, tau, n)?;
        let diag = table.diagonal();
        let nodes = aubry_from_diagonal(&diag, tol);
        let classes = static_classes(&table, &nodes, tol);
        (diag, classes)
    } else {
        (barrier_diagonal(&family, tau, n)?, Vec::new())
    };
    let nodes = aubry_from_diagonal(&diag, tol);
    write_table(
        &artifact(out, "aubry.csv"),
        &["node", "self_barrier", "in_aubry"],
        diag.iter().enumerate().map(|(i, v)| vec![i.to_string(), format!("{v}"), u8::from(*v <= tol).to_string()]),
    )?;
    write_json(&artifact(out, "aubry.json"), &AubrySummary { model: &cfg.model.kind, tau, window_n: n, tol, nodes, classes })?;
    Ok(0)
}

#[derive(Serialize)]
struct VerifyOutput {
    period_defect: f64,
    report: VerificationReport,
}

/// Continues the field through one period with the sub-kernels, then
/// checks periodicity, domination on sampled pairs and calibration of the
/// backward curves from a spread of nodes.
fn verify(cfg: &ExperimentConfig, out: &Path, field_path: &Path) -> Result<i32> {
    let family = cfg.build_family()?;
    let field = read_field_csv(field_path)?;
    family.grid().check_same(field.grid())?;
    let c = EvolutionState::new(family.clone(), field.clone())?.c_estimate();
    let steps = family.steps_per_period();
    let shift = c * family.dt();
    let mut slices = vec![field.samples().to_vec()];
    for j in 0..steps {
        let mut next = family.sub_kernel(j).apply(&slices[j], false);
        next.iter_mut().for_each(|v| *v += shift);
        slices.push(next);
    }
    let wrapped = slices.pop().expect("one slice per sub-step plus the wrap");
    let period_defect = wrapped.iter().zip(field.samples()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let u = SpaceTimeField::new(*family.grid(), SpaceTimeField::family_lattice(&family), slices)?;

    let e = &cfg.experiment;
    let dom = check_domination(&u, &family, e.sample_pairs, e.domination_tol, e.potential_horizon, e.seed)?;
    let nodes = family.grid().node_count();
    let starts: Vec<usize> = (0..8).map(|k| k * nodes / 8).collect();
    let mut max_defect = 0.0f64;
    for x in starts {
        let path = extract_calibrated_curve(&u, &family, c, x, 0, e.span)?;
        max_defect = max_defect.max(path.max_defect);
    }
    let diag = barrier_diagonal(&family, cfg.operator.tau, cfg.operator.window_n)?;
    let aubry_nodes = aubry_from_diagonal(&diag, e.aubry_tol);
    let passed = dom.passed() && max_defect <= e.calibration_tol && period_defect <= e.domination_tol;
    let report = VerificationReport {
        violations: dom.violations,
        checked: dom.checked,
        max_excess: dom.max_excess,
        max_defect,
        aubry_nodes,
        classes: Vec::new(),
        passed,
    };
    write_json(&artifact(out, "verify.json"), &VerifyOutput { period_defect, report })?;
    if !passed {
        eprintln!(
            "verification failed: {} domination violations, calibration defect {max_defect:e}, period defect {period_defect:e}",
            dom.violations
        );
    }
    Ok(status(passed))
}

fn sharpness(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let omega = cfg.omega()?;
    let res = cfg.experiment.analytic_resolution.unwrap_or(if omega.len() == 1 { 512 } else { 64 });
    let table = sharpness_example(cfg.experiment.delta, &omega, cfg.experiment.m_count, res)?;
    write_table(
        &artifact(out, "sharpness.csv"),
        &["m", "t_m", "return_distance", "value", "scaled"],
        table.rows.iter().map(|r| {
            vec![r.m.to_string(), format!("{}", r.t_m), format!("{}", r.return_distance), format!("{}", r.value), format!("{}", r.scaled)]
        }),
    )?;
    write_json(&artifact(out, "sharpness.json"), &table)?;
    Ok(status(table.lower_bound_holds && table.upper_probe_hit))
}

fn ergodize(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let omega = cfg.omega()?;
    let e = &cfg.experiment;
    let rep = ergodization_probe(&omega, &e.radii, &cfg.x0(), cfg.grid.resolution, e.horizon)?;
    write_table(
        &artifact(out, "ergodize.csv"),
        &["radius", "time"],
        rep.rows.iter().map(|r| vec![format!("{}", r.radius), r.time.map_or_else(|| "timeout".to_string(), |t| format!("{t}"))]),
    )?;
    write_json(&artifact(out, "ergodize.json"), &rep)?;
    if !rep.timeouts.is_empty() {
        eprintln!("coverage not reached by t = {} for radii {:?}", e.horizon, rep.timeouts);
    }
    Ok(status(rep.timeouts.is_empty()))
}
