//! Configuration-driven experiment runner: problem registry, error norms,
//! reports and CSV exports.
//!
//! A run writes into its output directory:
//!
//! * `report.json`: resolved config, seed, calibration and per-iteration (or
//!   per-step) errors and solve statistics; identical for identical inputs.
//! * `timings.json`: wall-clock seconds per phase, kept apart so that
//!   `report.json` stays reproducible byte for byte.
//! * `errors.csv`: `iteration,linf,l2`; for the heat problem one row per time
//!   step holding the final iterate of that step.
//! * `config.toml`, `solution.json`, and per iterate `state/.../density.csv`,
//!   `points.csv`, `gammas.csv`.

pub mod config;
pub mod export;
pub mod metrics;
pub mod problems;

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adaptivity::SolutionHistory;
use crate::drivers::{crank_nicolson_march, picard_afcm, solve_stationary};
use crate::error::{AfcmError, Result};
use crate::geometry::{build_partition, Point};
use crate::grf::GammaCalibration;
use crate::par;
use crate::rng::Seeds;
use crate::solution::Solution;

pub use config::ExperimentConfig;
pub use export::{export_adaptation_state, export_field, Window};
pub use metrics::{relative_error_values, relative_errors};
pub use problems::{ExactSolution, ProblemKind};

use problems::{heat_peak_center, setup, ProblemSetup};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub linf: Option<f64>,
    pub l2: Option<f64>,
    pub residual_norm: f64,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub dropped_rows: usize,
    pub interior_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub time: f64,
    /// Monitor mass center of the step's final iterate.
    pub mass_center: Option<Point>,
    /// Exact peak location at `time`.
    pub peak: Point,
    pub iterations: Vec<IterationReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: ProblemKind,
    pub seed: u64,
    /// Fully resolved configuration.
    pub config: ExperimentConfig,
    pub eval_resolution: usize,
    pub gamma_base: Vec<f64>,
    pub calibrations: Vec<GammaCalibration>,
    /// Adaptive iterations of stationary and Picard runs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub iterations: Vec<IterationReport>,
    /// Time steps of the heat problem.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<StepReport>,
    /// Picard changes per adaptive iteration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard_changes: Option<Vec<Vec<f64>>>,
}

impl RunReport {
    /// Rows of `errors.csv`.
    pub fn error_rows(&self) -> Vec<(usize, f64, f64)> {
        let row = |k: usize, it: &IterationReport| it.linf.zip(it.l2).map(|(a, b)| (k, a, b));
        if self.steps.is_empty() {
            self.iterations.iter().filter_map(|it| row(it.iteration, it)).collect()
        } else {
            self.steps
                .iter()
                .filter_map(|s| s.iterations.last().and_then(|it| row(s.step, it)))
                .collect()
        }
    }
}

/// Wall-clock seconds per phase.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Calibration, assembly, solves and adaptation.
    pub drive: f64,
    /// Error norms on the evaluation grid (part of `drive`).
    pub error_norms: f64,
    pub export: f64,
    pub total: f64,
}

/// Everything a run produced, including the final solution.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub timings: Timings,
    pub solution: Solution,
    pub output: PathBuf,
}

/// Loads `path`, applies `AFCM_SEED`, runs and writes the artifacts.
pub fn run_config_file(path: &Path) -> Result<RunOutcome> {
    let cfg = ExperimentConfig::load(path)?.with_env_seed()?;
    run_experiment(&cfg)
}

fn iteration_reports(history: &SolutionHistory) -> Vec<IterationReport> {
    history
        .iterations
        .iter()
        .enumerate()
        .map(|(k, it)| IterationReport {
            iteration: k,
            linf: it.errors.map(|e| e.0),
            l2: it.errors.map(|e| e.1),
            residual_norm: it.stats.residual_norm,
            rows: it.stats.rows,
            cols: it.stats.cols,
            rank: it.stats.rank,
            dropped_rows: it.stats.dropped_rows,
            interior_points: it.collocation.interior_total(),
        })
        .collect()
}

/// Runs the configured experiment and writes its artifacts to `cfg.output`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let cfg = cfg.clone().resolve()?;
    let (nx, ny) = cfg.partition_shape();
    let kind = cfg.problem;
    let partition = build_partition(kind.domain(), nx, ny)?;
    let seeds = Seeds::new(cfg.seed);
    let init = cfg.init_config();
    let adapt = cfg.adapt_config();
    let solve = cfg.solve_config();
    let exact = ExactSolution {
        kind,
        epsilon: cfg.epsilon.unwrap_or(problems::BURGERS_EPSILON),
    };
    let grid = partition.domain.grid(cfg.eval_resolution, cfg.eval_resolution);
    let error_time = Mutex::new(0.0f64);
    let timed_errors = |sol: &Solution, t: f64| {
        let t0 = Instant::now();
        let truth = par::map_collect(&grid, |&x| exact.value(x, t));
        let out = relative_error_values(&sol.values_at(&grid), &truth);
        *error_time.lock().expect("timer lock") += t0.elapsed().as_secs_f64();
        out
    };

    let mut report = RunReport {
        problem: kind,
        seed: cfg.seed,
        config: cfg.clone(),
        eval_resolution: cfg.eval_resolution,
        gamma_base: Vec::new(),
        calibrations: Vec::new(),
        iterations: Vec::new(),
        steps: Vec::new(),
        picard_changes: None,
    };
    // (state directory, history) pairs to export
    let mut states: Vec<(PathBuf, SolutionHistory)> = Vec::new();

    let setup = setup(kind, exact.epsilon, cfg.alpha.unwrap_or(1000.0));
    let probe = |sol: &Solution| timed_errors(sol, 0.0);
    match setup {
        ProblemSetup::Stationary(problem) => {
            let run = solve_stationary(&problem, &partition, &init, &adapt, &solve, &seeds, Some(&probe))?;
            report.gamma_base = run.history.gamma_base.clone();
            report.calibrations = run.calibrations;
            report.iterations = iteration_reports(&run.history);
            states.push((PathBuf::from("state"), run.history));
        }
        ProblemSetup::Picard(lin) => {
            let picard = cfg.picard_config();
            let run = picard_afcm(&lin, &partition, &init, &picard, &adapt, &solve, &seeds, Some(&probe))?;
            report.gamma_base = run.history.gamma_base.clone();
            report.calibrations = run.calibrations;
            report.iterations = iteration_reports(&run.history);
            report.picard_changes = Some(run.changes);
            states.push((PathBuf::from("state"), run.history));
        }
        ProblemSetup::TimeMarch(heat) => {
            let tm = cfg.time_march_config();
            let run = crank_nicolson_march(
                &heat,
                &partition,
                &tm,
                &init,
                &adapt,
                &solve,
                &seeds,
                Some(&timed_errors),
            )?;
            report.calibrations = run.calibrations;
            for (m, step) in run.steps.into_iter().enumerate() {
                report.gamma_base = step.history.gamma_base.clone();
                report.steps.push(StepReport {
                    step: m + 1,
                    time: step.time,
                    mass_center: step.mass_center,
                    peak: heat_peak_center(step.time),
                    iterations: iteration_reports(&step.history),
                });
                states.push((PathBuf::from(format!("state/step{:02}", m + 1)), step.history));
            }
        }
    }
    let drive = start.elapsed().as_secs_f64();

    let t_export = Instant::now();
    let solution = states
        .last()
        .map(|(_, h)| h.last().solution.clone())
        .ok_or_else(|| AfcmError::InvalidArgument("run produced no iterate".into()))?;
    let out = cfg.output.clone();
    std::fs::create_dir_all(&out)?;
    write_json(&out.join("report.json"), &report)?;
    export::write_errors_csv(&out.join("errors.csv"), &report.error_rows())?;
    std::fs::write(out.join("config.toml"), cfg.to_toml()?)?;
    write_json(&out.join("solution.json"), &solution)?;
    if cfg.export_state {
        for (dir, history) in &states {
            for (k, it) in history.iterations.iter().enumerate() {
                export_adaptation_state(
                    &partition,
                    &it.solution.features,
                    &it.collocation,
                    cfg.tau,
                    cfg.density_resolution,
                    &out.join(dir).join(format!("k{k}")),
                )?;
            }
        }
    }
    let timings = Timings {
        drive,
        error_norms: *error_time.lock().expect("timer lock"),
        export: t_export.elapsed().as_secs_f64(),
        total: start.elapsed().as_secs_f64(),
    };
    write_json(&out.join("timings.json"), &timings)?;
    Ok(RunOutcome {
        report,
        timings,
        solution,
        output: out,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Loads `solution.json` from a run directory.
pub fn load_solution(report_dir: &Path) -> Result<Solution> {
    let path = report_dir.join("solution.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| AfcmError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| AfcmError::Config(format!("{}: {e}", path.display())))
}

/// Exports the final field of a finished run; `out` defaults to
/// `<report_dir>/field.csv`.
pub fn export_field_from_dir(
    report_dir: &Path,
    window: Window,
    resolution: usize,
    out: Option<&Path>,
) -> Result<PathBuf> {
    let sol = load_solution(report_dir)?;
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| report_dir.join("field.csv"));
    export_field(&sol, window, resolution, &path)?;
    Ok(path)
}
