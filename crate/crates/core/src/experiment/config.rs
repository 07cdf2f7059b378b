//! Experiment configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adaptivity::{AdaptConfig, InitConfig};
use crate::assembly::SolveConfig;
use crate::drivers::{PicardConfig, TimeMarchConfig};
use crate::error::{AfcmError, Result};
use crate::grf::{default_gamma_grid, GrfConfig};

use super::problems::{ProblemKind, BURGERS_EPSILON};

/// Environment variable overriding `seed`.
pub const SEED_ENV: &str = "AFCM_SEED";

/// Every field has a default; keys are spelled as in the parameter table
/// (`J`, `K`, `m`, `c`, `c1`, `c2`, `tau`, `eta`, `L`, ...). Problem-dependent
/// fields left out are filled in by [`ExperimentConfig::resolve`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub seed: u64,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    /// Features per subdomain.
    #[serde(rename = "J")]
    pub j: usize,
    pub qx: usize,
    pub qy: usize,
    /// Continuity points per shared edge; defaults to `qx` / `qy`.
    pub interface_points: Option<usize>,
    #[serde(rename = "K")]
    pub k: usize,
    pub m: Option<usize>,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub tau: f64,
    pub eta: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub gamma_grid: Vec<f64>,
    /// Skips the GRF calibration when set.
    pub gamma: Option<f64>,
    /// One calibration shared by every subdomain.
    pub shared_gamma: bool,
    pub rank_tol: f64,
    /// Relative residual change that stops the adaptive loop early.
    pub early_stop: Option<f64>,
    pub picard_iterations: usize,
    pub picard_tolerance: Option<f64>,
    pub relaxation: f64,
    pub epsilon: Option<f64>,
    pub dt: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub alpha: Option<f64>,
    /// Side of the uniform grid used for error norms.
    pub eval_resolution: usize,
    /// Side of the grid written to `density.csv`.
    pub density_resolution: usize,
    /// Write per-iteration `density.csv`, `points.csv` and `gammas.csv`.
    pub export_state: bool,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::PoissonOnePeak,
            seed: 0,
            nx: None,
            ny: None,
            j: 400,
            qx: 79,
            qy: 79,
            interface_points: None,
            k: 4,
            m: None,
            c: 1.0,
            c1: 0.01,
            c2: 50.0,
            tau: 0.2,
            eta: 0.5,
            l: 10,
            gamma_grid: default_gamma_grid(),
            gamma: None,
            shared_gamma: true,
            rank_tol: 1e-10,
            early_stop: None,
            picard_iterations: 40,
            picard_tolerance: None,
            relaxation: 1.0,
            epsilon: None,
            dt: None,
            n: None,
            alpha: None,
            eval_resolution: 257,
            density_resolution: 101,
            export_state: true,
            output: PathBuf::from("afcm-out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| AfcmError::Config(e.to_string()))
    }

    /// Reads a config file; a relative `output` is taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AfcmError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if cfg.output.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output = dir.join(&cfg.output);
            }
        }
        Ok(cfg)
    }

    /// Applies `AFCM_SEED` if it is set.
    pub fn with_env_seed(mut self) -> Result<Self> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| AfcmError::Config(format!("{SEED_ENV}={v:?} is not a u64")))?;
        }
        Ok(self)
    }

    /// Fills problem-dependent defaults and checks every field.
    pub fn resolve(mut self) -> Result<Self> {
        let (nx, ny) = self.problem.default_partition();
        self.nx.get_or_insert(nx);
        self.ny.get_or_insert(ny);
        self.m.get_or_insert(self.problem.default_monitor_points());
        match self.problem {
            ProblemKind::Burgers => {
                self.epsilon.get_or_insert(BURGERS_EPSILON);
            }
            ProblemKind::HeatPeak => {
                self.dt.get_or_insert(0.2);
                self.n.get_or_insert(10);
                self.alpha.get_or_insert(1000.0);
            }
            _ => {}
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(AfcmError::Config(msg.to_string()));
        let positive = [
            ("nx", self.nx.unwrap_or(1)),
            ("ny", self.ny.unwrap_or(1)),
            ("J", self.j),
            ("qx", self.qx),
            ("qy", self.qy),
            ("L", self.l),
            ("picard_iterations", self.picard_iterations),
            ("eval_resolution", self.eval_resolution),
            ("density_resolution", self.density_resolution),
        ];
        for (name, v) in positive {
            if v == 0 {
                return bad(&format!("{name} must be positive"));
            }
        }
        if self.qx < 2 || self.qy < 2 {
            return bad("qx and qy must be at least 2");
        }
        if self.interface_points == Some(0) {
            return bad("interface_points must be positive");
        }
        for (name, v) in [("c", self.c), ("c1", self.c1), ("c2", self.c2), ("eta", self.eta)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau must lie in (0, 1)");
        }
        if !(self.rank_tol >= 0.0) {
            return bad("rank_tol must be non-negative");
        }
        if self.gamma_grid.is_empty() || self.gamma_grid.iter().any(|g| !(*g > 0.0)) {
            return bad("gamma_grid must be a non-empty list of positive values");
        }
        if self.gamma.is_some_and(|g| !(g > 0.0)) {
            return bad("gamma must be positive");
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return bad("relaxation must lie in (0, 1]");
        }
        if self.epsilon.is_some_and(|e| !(e > 0.0)) {
            return bad("epsilon must be positive");
        }
        if self.dt.is_some_and(|d| !(d > 0.0)) || self.n == Some(0) {
            return bad("dt and N must be positive");
        }
        if self.m == Some(0) && self.k > 0 {
            return bad("m must be positive when K > 0");
        }
        Ok(())
    }

    pub fn partition_shape(&self) -> (usize, usize) {
        let (nx, ny) = self.problem.default_partition();
        (self.nx.unwrap_or(nx), self.ny.unwrap_or(ny))
    }

    pub fn init_config(&self) -> InitConfig {
        InitConfig {
            features_per_subdomain: self.j,
            qx: self.qx,
            qy: self.qy,
            interface_points: self.interface_points,
            grf: GrfConfig {
                eta: self.eta,
                realizations: self.l,
                ..GrfConfig::default()
            },
            gamma_grid: self.gamma_grid.clone(),
            shared_gamma: self.shared_gamma,
            fixed_gamma: self.gamma,
        }
    }

    pub fn adapt_config(&self) -> AdaptConfig {
        AdaptConfig {
            c1: self.c1,
            c2: self.c2,
            iterations: self.k,
            monitor_points: self.m.unwrap_or_else(|| self.problem.default_monitor_points()),
            early_stop: self.early_stop,
        }
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            rescale: self.c,
            rank_tol: self.rank_tol,
        }
    }

    pub fn picard_config(&self) -> PicardConfig {
        PicardConfig {
            iterations: self.picard_iterations,
            relaxation: self.relaxation,
            tolerance: self.picard_tolerance,
        }
    }

    pub fn time_march_config(&self) -> TimeMarchConfig {
        TimeMarchConfig {
            dt: self.dt.unwrap_or(0.2),
            steps: self.n.unwrap_or(10),
            alpha: self.alpha.unwrap_or(1000.0),
        }
    }

    /// Resolved config as TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| AfcmError::Config(e.to_string()))
    }
}
