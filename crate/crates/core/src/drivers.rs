//! Problem-level drivers: stationary solves, Picard iteration for the
//! space-time Burgers form, and Crank–Nicolson marching for the heat equation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::adaptivity::{
    afcm_iterate, build_monitor, initial_state, sample_monitor_points, AdaptConfig,
    ErrorProbe, InitConfig, SolutionHistory,
};
use crate::assembly::{assemble_and_solve, SolveConfig, SolveStats};
use crate::error::{AfcmError, Result};
use crate::features::FeatureSet;
use crate::geometry::{CollocationSet, Partition, Point};
use crate::grf::GammaCalibration;
use crate::operator::{
    Coefficient, DirichletSides, LinearOperator, OperatorSpec, ProblemDefinition,
};
use crate::rng::Seeds;
use crate::solution::Solution;

/// A finished adaptive run.
#[derive(Clone, Debug)]
pub struct StationaryRun {
    pub history: SolutionHistory,
    pub calibrations: Vec<GammaCalibration>,
}

fn monitor_set(partition: &Partition, adapt: &AdaptConfig, seeds: &Seeds, index: u64) -> Vec<Point> {
    if adapt.iterations == 0 {
        return Vec::new();
    }
    sample_monitor_points(
        &partition.domain,
        adapt.monitor_points,
        &mut seeds.indexed_stream("monitor", index),
    )
}

/// Adaptive solve of a linear problem.
pub fn solve_stationary(
    problem: &ProblemDefinition,
    partition: &Partition,
    init: &InitConfig,
    adapt: &AdaptConfig,
    solve: &SolveConfig,
    seeds: &Seeds,
    probe: Option<ErrorProbe<'_>>,
) -> Result<StationaryRun> {
    let (state, calibrations) = initial_state(partition, init, seeds)?;
    let s = monitor_set(partition, adapt, seeds, 0);
    let history = afcm_iterate(
        partition,
        state,
        adapt,
        seeds,
        0,
        &s,
        |st, _, _| assemble_and_solve(problem, partition, &st.features, &st.collocation, solve),
        probe,
    )?;
    Ok(StationaryRun {
        history,
        calibrations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub iterations: usize,
    /// Under-relaxation of the frozen coefficient, in `(0, 1]`.
    pub relaxation: f64,
    /// Stop early once the iterate change drops below this.
    pub tolerance: Option<f64>,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            iterations: 40,
            relaxation: 1.0,
            tolerance: None,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(AfcmError::InvalidArgument(
                "Picard needs at least one iteration and relaxation in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Builds the linear problem with the nonlinear coefficient frozen at the
/// given iterate (`None` means the zero iterate).
pub type Linearization = Arc<dyn Fn(Option<&Solution>) -> ProblemDefinition + Send + Sync>;

#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub solution: Solution,
    pub stats: SolveStats,
    /// RMS change at the collocation points after each iteration (the first
    /// entry compares against the starting iterate).
    pub changes: Vec<f64>,
}

/// Iterates performed so far must grow this many times in a row to count as
/// divergence.
const DIVERGENCE_RUN: usize = 3;
const DIVERGENCE_FLOOR: f64 = 1e-8;

fn rms_change(points: &[Point], a: &Solution, b: Option<&Solution>) -> f64 {
    let n = points.len().max(1) as f64;
    let s: f64 = points
        .iter()
        .map(|&x| {
            let d = a.value(x) - b.map_or(0.0, |b| b.value(x));
            d * d
        })
        .sum();
    (s / n).sqrt()
}

/// Picard iteration on fixed features and collocation. `start` is the
/// initial frozen iterate; `None` is the zero function.
pub fn picard_solve(
    linearize: &Linearization,
    partition: &Partition,
    features: &FeatureSet,
    colloc: &CollocationSet,
    picard: &PicardConfig,
    solve: &SolveConfig,
    start: Option<&Solution>,
) -> Result<PicardOutcome> {
    picard.validate()?;
    let points: Vec<Point> = colloc
        .per_subdomain
        .iter()
        .flat_map(|s| s.iter().map(|(p, _)| p))
        .collect();
    let mut frozen: Option<Solution> = start.cloned();
    let mut changes: Vec<f64> = Vec::new();
    let mut last: Option<(Solution, SolveStats)> = None;
    for s in 0..picard.iterations {
        let problem = linearize(frozen.as_ref());
        let (sol, stats) = assemble_and_solve(&problem, partition, features, colloc, solve)?;
        let change = rms_change(&points, &sol, last.as_ref().map(|(p, _)| p).or(start));
        changes.push(change);

        if changes.len() > DIVERGENCE_RUN {
            let tail = &changes[changes.len() - DIVERGENCE_RUN - 1..];
            if tail.windows(2).all(|w| w[1] > w[0]) && change > DIVERGENCE_FLOOR {
                return Err(AfcmError::PicardDiverged {
                    step: s + 1,
                    first: tail[0],
                    last: change,
                });
            }
        }

        // relaxation blends coefficients, which is exact on a shared basis
        let next = match (&frozen, picard.relaxation) {
            (Some(w), theta) if theta < 1.0 && w.features == sol.features => {
                let mut blend = sol.clone();
                for (b, old) in blend.coefficients.iter_mut().zip(&w.coefficients) {
                    *b = theta * *b + (1.0 - theta) * old;
                }
                blend
            }
            _ => sol.clone(),
        };
        frozen = Some(next);
        last = Some((sol, stats));
        if matches!(picard.tolerance, Some(tol) if change < tol) {
            break;
        }
    }
    let (solution, stats) = last.expect("at least one Picard iteration");
    Ok(PicardOutcome {
        solution,
        stats,
        changes,
    })
}

#[derive(Clone, Debug)]
pub struct PicardRun {
    pub history: SolutionHistory,
    pub calibrations: Vec<GammaCalibration>,
    /// Picard changes per adaptive iteration.
    pub changes: Vec<Vec<f64>>,
}

/// Adaptive loop around complete Picard solves. Iteration 0 starts from the
/// zero iterate, later iterations warm-start from the previous adaptive
/// iterate.
#[allow(clippy::too_many_arguments)]
pub fn picard_afcm(
    linearize: &Linearization,
    partition: &Partition,
    init: &InitConfig,
    picard: &PicardConfig,
    adapt: &AdaptConfig,
    solve: &SolveConfig,
    seeds: &Seeds,
    probe: Option<ErrorProbe<'_>>,
) -> Result<PicardRun> {
    picard.validate()?;
    let (state, calibrations) = initial_state(partition, init, seeds)?;
    let s = monitor_set(partition, adapt, seeds, 0);
    let mut changes = Vec::new();
    let history = afcm_iterate(
        partition,
        state,
        adapt,
        seeds,
        0,
        &s,
        |st, _, prev| {
            let out = picard_solve(linearize, partition, &st.features, &st.collocation, picard, solve, prev)?;
            changes.push(out.changes);
            Ok((out.solution, out.stats))
        },
        probe,
    )?;
    Ok(PicardRun {
        history,
        calibrations,
        changes,
    })
}

/// `φ_t + φ φ_x − ε φ_xx = f` with time on the second axis, linearised as
/// `φ_y + w φ_x − ε φ_xx` around the frozen iterate `w`.
pub fn burgers_linearization(
    epsilon: f64,
    source: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
    boundary: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
) -> Linearization {
    Arc::new(move |frozen: Option<&Solution>| {
        let mut op = LinearOperator::default();
        op.second[0][0] = Coefficient::Constant(-epsilon);
        op.first[1] = Coefficient::Constant(1.0);
        if let Some(w) = frozen {
            let w = Arc::new(w.clone());
            op.first[0] = Coefficient::field(move |x| w.value(x));
        }
        let f = source.clone();
        let g = boundary.clone();
        ProblemDefinition {
            operator: OperatorSpec::scalar(op),
            source: Arc::new(move |x, _| f(x)),
            boundary: Arc::new(move |x, _| g(x)),
            initial: None,
            dirichlet: DirichletSides::SPACE_TIME,
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeMarchConfig {
    pub dt: f64,
    pub steps: usize,
    pub alpha: f64,
}

impl TimeMarchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || self.steps == 0 || !self.alpha.is_finite() {
            return Err(AfcmError::InvalidArgument(
                "time march needs dt > 0, N >= 1 and finite alpha".into(),
            ));
        }
        Ok(())
    }

    pub fn final_time(&self) -> f64 {
        self.dt * self.steps as f64
    }
}

/// Time-dependent scalar field `u(x, t)`.
pub type SpaceTimeField = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;

/// `φ_t − α Δφ = f` with Dirichlet data `g` and initial data `h`; `Δh` is
/// needed for the first explicit half step.
#[derive(Clone)]
pub struct HeatProblem {
    pub source: SpaceTimeField,
    pub boundary: SpaceTimeField,
    pub initial: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
    pub initial_laplacian: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
}

#[derive(Clone, Debug)]
pub struct TimeStepRecord {
    pub time: f64,
    pub history: SolutionHistory,
    /// Monitor mass center of the step's final iterate on the step's
    /// monitor set.
    pub mass_center: Option<Point>,
    /// Features entering iteration 0 of this step.
    pub entry_features: FeatureSet,
}

#[derive(Clone, Debug)]
pub struct MarchRun {
    pub steps: Vec<TimeStepRecord>,
    pub calibrations: Vec<GammaCalibration>,
}

/// Error probe evaluated at the end time of each step.
pub type TimedProbe<'a> = &'a (dyn Fn(&Solution, f64) -> Result<(f64, f64)> + Sync);

/// One stationary problem per step:
/// `(I − (α dt/2) Δ) φ^{m+1} = φ^m + (α dt/2) Δφ^m + (dt/2)(f^m + f^{m+1})`.
/// The adapted features and collocation of each step seed the next one, and
/// the shape parameters are not recalibrated. A fresh monitor set is drawn at
/// every step.
#[allow(clippy::too_many_arguments)]
pub fn crank_nicolson_march(
    problem: &HeatProblem,
    partition: &Partition,
    tm: &TimeMarchConfig,
    init: &InitConfig,
    adapt: &AdaptConfig,
    solve: &SolveConfig,
    seeds: &Seeds,
    probe: Option<TimedProbe<'_>>,
) -> Result<MarchRun> {
    tm.validate()?;
    let (mut state, calibrations) = initial_state(partition, init, seeds)?;
    let half = tm.alpha * tm.dt / 2.0;
    let mut prev: Option<Arc<Solution>> = None;
    let mut steps = Vec::with_capacity(tm.steps);

    for m in 0..tm.steps {
        let t0 = m as f64 * tm.dt;
        let t1 = t0 + tm.dt;
        let explicit: Arc<dyn Fn(Point) -> f64 + Send + Sync> = match &prev {
            None => {
                let h = problem.initial.clone();
                let lap = problem.initial_laplacian.clone();
                Arc::new(move |x| h(x) + half * lap(x))
            }
            Some(p) => {
                let p = p.clone();
                Arc::new(move |x| {
                    let e = &p.evaluate(x)[0];
                    e.value + half * e.laplacian()
                })
            }
        };
        let f = problem.source.clone();
        let g = problem.boundary.clone();
        let dt = tm.dt;
        let step_problem = ProblemDefinition {
            operator: OperatorSpec::scalar({
                let mut op = LinearOperator::laplacian(-half);
                op.zeroth = Coefficient::Constant(1.0);
                op
            }),
            source: Arc::new(move |x, _| explicit(x) + 0.5 * dt * (f(x, t0) + f(x, t1))),
            boundary: Arc::new(move |x, _| g(x, t1)),
            initial: None,
            dirichlet: DirichletSides::ALL,
        };

        let s = monitor_set(partition, adapt, seeds, m as u64);
        let step_probe = probe.map(|p| move |sol: &Solution| p(sol, t1));
        let entry_features = state.features.clone();
        let history = afcm_iterate(
            partition,
            state,
            adapt,
            seeds,
            m as u64,
            &s,
            |st, _, _| assemble_and_solve(&step_problem, partition, &st.features, &st.collocation, solve),
            step_probe.as_ref().map(|p| p as ErrorProbe<'_>),
        )
        .map_err(|e| e.at_step(m + 1))?;

        let mass_center = if s.is_empty() {
            None
        } else {
            let mon = build_monitor(&history.last().solution, &s, adapt.c1).map_err(|e| e.at_step(m + 1))?;
            Some(mon.mass_center())
        };
        state = history.final_state();
        prev = Some(Arc::new(history.last().solution.clone()));
        steps.push(TimeStepRecord {
            time: t1,
            history,
            mass_center,
            entry_features,
        });
    }
    Ok(MarchRun {
        steps,
        calibrations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_partition, Domain};
    use std::f64::consts::PI;

    fn small_init(j: usize, q: usize) -> InitConfig {
        InitConfig {
            features_per_subdomain: j,
            qx: q,
            qy: q,
            fixed_gamma: Some(1.0),
            ..InitConfig::default()
        }
    }

    #[test]
    fn picard_on_linear_problem_is_idempotent() {
        let d = Domain::new([0.0, 0.0], [1.0, 1.0]).unwrap();
        let part = build_partition(d, 1, 1).unwrap();
        let (state, _) = initial_state(&part, &small_init(40, 12), &Seeds::new(1)).unwrap();
        // advection independent of the iterate
        let lin: Linearization = Arc::new(|_: Option<&Solution>| {
            let mut op = LinearOperator::default();
            op.second[0][0] = Coefficient::Constant(-0.1);
            op.first[1] = Coefficient::Constant(1.0);
            op.first[0] = Coefficient::Constant(0.5);
            ProblemDefinition {
                operator: OperatorSpec::scalar(op),
                source: Arc::new(|x: Point, _| x[0] * x[1]),
                boundary: Arc::new(|x: Point, _| x[0]),
                initial: None,
                dirichlet: DirichletSides::SPACE_TIME,
            }
        });
        let pc = PicardConfig { iterations: 3, ..PicardConfig::default() };
        let out = picard_solve(&lin, &part, &state.features, &state.collocation, &pc, &SolveConfig::default(), None)
            .unwrap();
        assert!(out.changes[1] <= 1e-12);
        assert!(out.changes[2] <= 1e-12);
    }

    #[test]
    fn zero_data_heat_stays_zero() {
        let d = Domain::new([-1.0, -1.0], [1.0, 1.0]).unwrap();
        let part = build_partition(d, 1, 1).unwrap();
        let zero2: SpaceTimeField = Arc::new(|_, _| 0.0);
        let zero: Arc<dyn Fn(Point) -> f64 + Send + Sync> = Arc::new(|_| 0.0);
        let heat = HeatProblem {
            source: zero2.clone(),
            boundary: zero2,
            initial: zero.clone(),
            initial_laplacian: zero,
        };
        let tm = TimeMarchConfig { dt: 0.1, steps: 2, alpha: 1.0 };
        let adapt = AdaptConfig { iterations: 0, ..AdaptConfig::default() };
        let run = crank_nicolson_march(
            &heat, &part, &tm, &small_init(30, 10), &adapt, &SolveConfig::default(), &Seeds::new(2), None,
        )
        .unwrap();
        for st in &run.steps {
            assert!(st.history.last().solution.coefficients.iter().all(|u| *u == 0.0));
        }
    }

    #[test]
    fn carryover_is_bit_identical() {
        let d = Domain::new([-1.0, -1.0], [1.0, 1.0]).unwrap();
        let part = build_partition(d, 1, 1).unwrap();
        let exact = |x: Point, t: f64| t * (PI * x[0]).sin() * (PI * x[1]).sin();
        let heat = HeatProblem {
            source: Arc::new(move |x, t| (1.0 + 2.0 * PI * PI * t) * exact(x, 1.0)),
            boundary: Arc::new(move |x, t| exact(x, t)),
            initial: Arc::new(|_| 0.0),
            initial_laplacian: Arc::new(|_| 0.0),
        };
        let tm = TimeMarchConfig { dt: 0.5, steps: 2, alpha: 1.0 };
        let adapt = AdaptConfig { iterations: 1, monitor_points: 2000, ..AdaptConfig::default() };
        let run = crank_nicolson_march(
            &heat, &part, &tm, &small_init(40, 14), &adapt, &SolveConfig::default(), &Seeds::new(3), None,
        )
        .unwrap();
        assert_eq!(run.steps[1].entry_features, run.steps[0].history.last().solution.features);
        assert_ne!(run.steps[0].entry_features, run.steps[1].entry_features);
    }
}
