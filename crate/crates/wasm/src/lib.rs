//! wasm-bindgen wrapper used by `www/index.html`: solves `-Δφ = f` for a
//! Gaussian peak `exp(-k r²)` on `(-1, 1)²` with a few adaptive iterations and
//! exposes the iterates as flat arrays for canvas drawing.

use std::sync::Arc;

use afcm::adaptivity::{AdaptConfig, InitConfig, SolutionHistory};
use afcm::assembly::SolveConfig;
use afcm::drivers::solve_stationary;
use afcm::experiment::export::density_grid;
use afcm::experiment::relative_error_values;
use afcm::geometry::{build_partition, Domain, Point};
use afcm::operator::{DirichletSides, LinearOperator, OperatorSpec, ProblemDefinition};
use afcm::rng::Seeds;
use wasm_bindgen::prelude::*;

const ERROR_GRID: usize = 65;

fn peak(k: f64) -> impl Fn(Point) -> (f64, f64) + Copy + Send + Sync {
    move |x: Point| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let v = (-k * r2).exp();
        (v, (4.0 * k * k * r2 - 4.0 * k) * v)
    }
}

#[wasm_bindgen]
pub struct Demo {
    sharpness: f64,
    history: SolutionHistory,
}

#[wasm_bindgen]
impl Demo {
    /// Runs the whole loop. `gamma <= 0` calibrates the shape parameter.
    #[wasm_bindgen(constructor)]
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        sharpness: f64,
        subdomains: usize,
        features: usize,
        points: usize,
        iterations: usize,
        monitor: usize,
        gamma: f64,
        seed: u32,
    ) -> Result<Demo, JsError> {
        if !(sharpness > 0.0) {
            return Err(JsError::new("sharpness must be positive"));
        }
        let domain = Domain::new([-1.0, -1.0], [1.0, 1.0])?;
        let partition = build_partition(domain, subdomains, subdomains)?;
        let f = peak(sharpness);
        let problem = ProblemDefinition {
            operator: OperatorSpec::scalar(LinearOperator::laplacian(-1.0)),
            source: Arc::new(move |x, _| -f(x).1),
            boundary: Arc::new(move |x, _| f(x).0),
            initial: None,
            dirichlet: DirichletSides::ALL,
        };
        let init = InitConfig {
            features_per_subdomain: features,
            qx: points,
            qy: points,
            fixed_gamma: (gamma > 0.0).then_some(gamma),
            ..InitConfig::default()
        };
        let adapt = AdaptConfig {
            iterations,
            monitor_points: monitor,
            ..AdaptConfig::default()
        };
        let grid = domain.grid(ERROR_GRID, ERROR_GRID);
        let truth: Vec<f64> = grid.iter().map(|&x| f(x).0).collect();
        let probe = |s: &afcm::solution::Solution| relative_error_values(&s.values_at(&grid), &truth);
        let run = solve_stationary(
            &problem,
            &partition,
            &init,
            &adapt,
            &SolveConfig::default(),
            &Seeds::new(seed.into()),
            Some(&probe),
        )?;
        Ok(Demo {
            sharpness,
            history: run.history,
        })
    }

    /// Number of stored iterates (`K + 1`).
    pub fn iterations(&self) -> usize {
        self.history.iterations.len()
    }

    pub fn gamma(&self) -> f64 {
        self.history.gamma_base[0]
    }

    /// `[linf_0, l2_0, linf_1, l2_1, ...]`.
    pub fn errors(&self) -> Vec<f64> {
        self.history
            .iterations
            .iter()
            .flat_map(|it| {
                let (a, b) = it.errors.unwrap_or((f64::NAN, f64::NAN));
                [a, b]
            })
            .collect()
    }

    fn iterate(&self, k: usize) -> Result<&afcm::adaptivity::IterationRecord, JsError> {
        self.history
            .iterations
            .get(k)
            .ok_or_else(|| JsError::new(&format!("no iterate {k}")))
    }

    /// Values of iterate `k` on a `res × res` grid, rows along `x`.
    pub fn field(&self, k: usize, res: usize) -> Result<Vec<f64>, JsError> {
        let sol = &self.iterate(k)?.solution;
        Ok(sol.values_at(&sol.partition.domain.grid(res, res)))
    }

    pub fn exact(&self, res: usize) -> Vec<f64> {
        let f = peak(self.sharpness);
        let d = &self.history.last().solution.partition.domain;
        d.grid(res, res).into_iter().map(|x| f(x).0).collect()
    }

    /// Hyperplane density of iterate `k` with bandwidth `tau`.
    pub fn density(&self, k: usize, res: usize, tau: f64) -> Result<Vec<f64>, JsError> {
        let sol = &self.iterate(k)?.solution;
        let grid = density_grid(&sol.partition, &sol.features, tau, res)?;
        Ok(grid.into_iter().map(|(_, v)| v).collect())
    }

    /// Interior collocation points of iterate `k` as `[x0, y0, x1, y1, ...]`.
    pub fn points(&self, k: usize) -> Result<Vec<f64>, JsError> {
        let it = self.iterate(k)?;
        Ok(it
            .collocation
            .per_subdomain
            .iter()
            .flat_map(|s| s.interior.iter().flat_map(|p| [p[0], p[1]]))
            .collect())
    }

    /// Feature anchors and shape parameters as `[x, y, gamma, ...]`.
    pub fn gammas(&self, k: usize) -> Result<Vec<f64>, JsError> {
        let sol = &self.iterate(k)?.solution;
        Ok(sol
            .features
            .iter()
            .flat_map(|f| {
                let x = sol.partition.subdomains[f.subdomain].to_global(f.plane.anchor);
                [x[0], x[1], f.shape]
            })
            .collect())
    }
}
