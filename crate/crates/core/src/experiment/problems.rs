//! Registered experiments with manufactured exact solutions.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::drivers::{burgers_linearization, HeatProblem, Linearization};
use crate::error::{AfcmError, Result};
use crate::geometry::{Domain, Point};
use crate::operator::{DirichletSides, LinearOperator, OperatorSpec, ProblemDefinition};

/// Peak sharpness shared by the Gaussian examples.
pub const PEAK_K: f64 = 1000.0;
/// Sharpness of `poisson_line_sharp`.
pub const SHARP_LINE_K: f64 = 7000.0;
/// Default viscosity of the Burgers example.
pub const BURGERS_EPSILON: f64 = 0.006;
/// The peak of `heat_peak` moves with velocity `(1/10, 1/10)`.
pub const HEAT_DRIFT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    PoissonOnePeak,
    PoissonTwoPeaks,
    PoissonLine,
    PoissonLineSharp,
    Burgers,
    HeatPeak,
}

/// How a problem is driven.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DriverKind {
    Stationary,
    Picard,
    TimeMarch,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 6] = [
        ProblemKind::PoissonOnePeak,
        ProblemKind::PoissonTwoPeaks,
        ProblemKind::PoissonLine,
        ProblemKind::PoissonLineSharp,
        ProblemKind::Burgers,
        ProblemKind::HeatPeak,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::PoissonOnePeak => "poisson_one_peak",
            ProblemKind::PoissonTwoPeaks => "poisson_two_peaks",
            ProblemKind::PoissonLine => "poisson_line",
            ProblemKind::PoissonLineSharp => "poisson_line_sharp",
            ProblemKind::Burgers => "burgers",
            ProblemKind::HeatPeak => "heat_peak",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ProblemKind::PoissonOnePeak => "-Δφ = f on (-1,1)², φ = exp(-1000(x²+y²))",
            ProblemKind::PoissonTwoPeaks => {
                "-Δφ = f on (-1,1)², two peaks exp(-1000(x²+(y∓2/3)²))"
            }
            ProblemKind::PoissonLine => "-Δφ = f on (-1,1)², φ = exp(-1000(x-y/20)²)",
            ProblemKind::PoissonLineSharp => "-Δφ = f on (-1,1)², φ = exp(-7000(x-y/20)²)",
            ProblemKind::Burgers => {
                "φ_t + φφ_x - εφ_xx = f on (0,1)×(0,1], φ = 1/(1+exp((x-t)/(2ε))), Picard"
            }
            ProblemKind::HeatPeak => {
                "φ_t - αΔφ = f on (-1,1)²×(0,T], moving peak, Crank-Nicolson with carryover"
            }
        }
    }

    pub fn driver(self) -> DriverKind {
        match self {
            ProblemKind::Burgers => DriverKind::Picard,
            ProblemKind::HeatPeak => DriverKind::TimeMarch,
            _ => DriverKind::Stationary,
        }
    }

    /// Computational domain; for Burgers the second axis is time.
    pub fn domain(self) -> Domain {
        let (lo, hi) = match self {
            ProblemKind::Burgers => (0.0, 1.0),
            _ => (-1.0, 1.0),
        };
        Domain::new([lo, lo], [hi, hi]).expect("registry domains are valid")
    }

    pub fn default_partition(self) -> (usize, usize) {
        match self {
            ProblemKind::PoissonLineSharp => (9, 1),
            _ => (3, 3),
        }
    }

    /// Monitor-set size used for the published runs.
    pub fn default_monitor_points(self) -> usize {
        match self {
            ProblemKind::PoissonLine | ProblemKind::PoissonLineSharp => 180_000,
            ProblemKind::Burgers => 90_000,
            _ => 1_260_000,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = AfcmError;

    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ProblemKind::ALL.iter().map(|p| p.name()).collect();
                AfcmError::Config(format!("unknown problem {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// `exp(-k r²)` with `Δ = (4k²r² - 4k) exp(-k r²)`.
fn gaussian(x: Point, c: Point, k: f64) -> (f64, f64) {
    let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
    let v = (-k * r2).exp();
    (v, (4.0 * k * k * r2 - 4.0 * k) * v)
}

/// `exp(-k (x - y/20)²)` and its Laplacian.
fn line(x: Point, k: f64) -> (f64, f64) {
    let u = x[0] - x[1] / 20.0;
    let v = (-k * u * u).exp();
    (v, (1.0 + 1.0 / 400.0) * (4.0 * k * k * u * u - 2.0 * k) * v)
}

fn logistic(x: Point, epsilon: f64) -> f64 {
    1.0 / (1.0 + ((x[0] - x[1]) / (2.0 * epsilon)).exp())
}

/// Center of the heat peak at time `t`.
pub fn heat_peak_center(t: f64) -> Point {
    [HEAT_DRIFT * t, HEAT_DRIFT * t]
}

/// Value and Laplacian of a stationary exact solution.
fn stationary_exact(kind: ProblemKind, x: Point) -> (f64, f64) {
    match kind {
        ProblemKind::PoissonOnePeak => gaussian(x, [0.0, 0.0], PEAK_K),
        ProblemKind::PoissonTwoPeaks => {
            let (a, la) = gaussian(x, [0.0, 2.0 / 3.0], PEAK_K);
            let (b, lb) = gaussian(x, [0.0, -2.0 / 3.0], PEAK_K);
            (a + b, la + lb)
        }
        ProblemKind::PoissonLine => line(x, PEAK_K),
        ProblemKind::PoissonLineSharp => line(x, SHARP_LINE_K),
        _ => unreachable!("not a Poisson problem"),
    }
}

/// Exact solution of a registered problem. `epsilon` is used by Burgers only.
#[derive(Clone, Copy, Debug)]
pub struct ExactSolution {
    pub kind: ProblemKind,
    pub epsilon: f64,
}

impl ExactSolution {
    /// `φ(x)`, or `φ(x, t)` for the heat problem.
    pub fn value(&self, x: Point, t: f64) -> f64 {
        match self.kind {
            ProblemKind::Burgers => logistic(x, self.epsilon),
            ProblemKind::HeatPeak => gaussian(x, heat_peak_center(t), PEAK_K).0,
            k => stationary_exact(k, x).0,
        }
    }
}

/// A problem ready for its driver.
#[derive(Clone)]
pub enum ProblemSetup {
    Stationary(ProblemDefinition),
    Picard(Linearization),
    TimeMarch(HeatProblem),
}

/// Builds the driver input for `kind`. `epsilon` and `alpha` parametrize the
/// Burgers and heat problems.
pub fn setup(kind: ProblemKind, epsilon: f64, alpha: f64) -> ProblemSetup {
    match kind.driver() {
        DriverKind::Stationary => {
            let source = move |x: Point, _| -stationary_exact(kind, x).1;
            let boundary = move |x: Point, _| stationary_exact(kind, x).0;
            ProblemSetup::Stationary(ProblemDefinition {
                operator: OperatorSpec::scalar(LinearOperator::laplacian(-1.0)),
                source: Arc::new(source),
                boundary: Arc::new(boundary),
                initial: None,
                dirichlet: DirichletSides::ALL,
            })
        }
        DriverKind::Picard => {
            // the profile moves at speed 1 instead of 1/2, which leaves
            // f = φ(1 - φ)/(4ε)
            let f = move |x: Point| {
                let p = logistic(x, epsilon);
                p * (1.0 - p) / (4.0 * epsilon)
            };
            ProblemSetup::Picard(burgers_linearization(
                epsilon,
                Arc::new(f),
                Arc::new(move |x| logistic(x, epsilon)),
            ))
        }
        DriverKind::TimeMarch => {
            let source = move |x: Point, t: f64| {
                let c = heat_peak_center(t);
                let (v, lap) = gaussian(x, c, PEAK_K);
                let dt = 2.0 * PEAK_K * HEAT_DRIFT * ((x[0] - c[0]) + (x[1] - c[1])) * v;
                dt - alpha * lap
            };
            ProblemSetup::TimeMarch(HeatProblem {
                source: Arc::new(source),
                boundary: Arc::new(|x, t| gaussian(x, heat_peak_center(t), PEAK_K).0),
                initial: Arc::new(|x| gaussian(x, [0.0, 0.0], PEAK_K).0),
                initial_laplacian: Arc::new(|x| gaussian(x, [0.0, 0.0], PEAK_K).1),
            })
        }
    }
}
