//! Gaussian random field sampling and grid-search calibration of the shape
//! parameter.

use faer::{Mat, Side};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{AfcmError, Result};
use crate::features::{Activation, Hyperplane};
use crate::geometry::{Point, Subdomain};
use crate::lstsq::lstsq_multi;
use crate::par;

/// Largest number of fit points used per subdomain.
pub const MAX_FIT_POINTS: usize = 900;

const MAX_JITTER: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrfConfig {
    /// Correlation length.
    pub eta: f64,
    /// Number of realizations.
    pub realizations: usize,
    /// Initial diagonal regularisation of the covariance.
    pub jitter: f64,
}

impl Default for GrfConfig {
    fn default() -> Self {
        Self {
            eta: 0.5,
            realizations: 10,
            jitter: 1e-10,
        }
    }
}

impl GrfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || self.realizations == 0 || !(self.jitter >= 0.0) {
            return Err(AfcmError::InvalidArgument(format!(
                "GRF config needs eta > 0, L >= 1, jitter >= 0 (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// `exp(-|x - y|² / (2 η²))`.
#[inline]
pub fn se_covariance(x: Point, y: Point, eta: f64) -> f64 {
    let dx = x[0] - y[0];
    let dy = x[1] - y[1];
    (-(dx * dx + dy * dy) / (2.0 * eta * eta)).exp()
}

/// Cholesky factor of the covariance at a fixed point set, reusable across
/// realizations.
#[derive(Clone, Debug)]
pub struct GrfSampler {
    factor: Mat<f64>,
    /// Jitter that made the factorization succeed.
    pub jitter: f64,
}

impl GrfSampler {
    pub fn new(points: &[Point], cfg: &GrfConfig) -> Result<Self> {
        cfg.validate()?;
        if points.is_empty() {
            return Err(AfcmError::InvalidArgument("GRF needs at least one point".into()));
        }
        let n = points.len();
        let cov = Mat::from_fn(n, n, |i, j| se_covariance(points[i], points[j], cfg.eta));
        let mut jitter = cfg.jitter;
        loop {
            let mut k = cov.clone();
            for i in 0..n {
                k[(i, i)] += jitter;
            }
            if let Ok(llt) = k.llt(Side::Lower) {
                return Ok(Self {
                    factor: llt.L().to_owned(),
                    jitter,
                });
            }
            if jitter >= MAX_JITTER {
                return Err(AfcmError::Factorization { jitter });
            }
            jitter = if jitter == 0.0 { 1e-10 } else { (jitter * 10.0).min(MAX_JITTER) };
        }
    }

    pub fn len(&self) -> usize {
        self.factor.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One realization `L z`, `z ~ N(0, I)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.len();
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        (0..n)
            .map(|i| (0..=i).map(|j| self.factor[(i, j)] * z[j]).sum())
            .collect()
    }
}

/// One realization of the zero-mean, unit-variance field at `points`.
pub fn simulate_grf<R: Rng + ?Sized>(
    points: &[Point],
    cfg: &GrfConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(GrfSampler::new(points, cfg)?.sample(rng))
}

/// Default γ sweep `0.2, 0.4, ..., 8.0`.
pub fn default_gamma_grid() -> Vec<f64> {
    (1..=40).map(|i| i as f64 * 0.2).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaCalibration {
    pub gamma: f64,
    pub grid: Vec<f64>,
    /// Mean fitting loss per grid value.
    pub losses: Vec<f64>,
}

/// Evenly strided subset of at most `max` points.
pub fn subsample_points(points: &[Point], max: usize) -> Vec<Point> {
    if points.len() <= max {
        return points.to_vec();
    }
    (0..max).map(|i| points[i * points.len() / max]).collect()
}

/// Grid search for the shape parameter: for each candidate all features share
/// `γ`, every GRF realization is fitted by least squares, and the candidate
/// with the smallest mean residual sum of squares wins (first one on ties).
///
/// The field is sampled in local coordinates of `sub`, so the result does not
/// depend on the subdomain size.
pub fn calibrate_gamma<R: Rng + ?Sized>(
    sub: &Subdomain,
    planes: &[Hyperplane],
    colloc: &[Point],
    cfg: &GrfConfig,
    grid: &[f64],
    rng: &mut R,
) -> Result<GammaCalibration> {
    if grid.is_empty() {
        return Err(AfcmError::InvalidArgument("empty gamma grid".into()));
    }
    if planes.is_empty() {
        return Err(AfcmError::EmptyFeatures);
    }
    if colloc.is_empty() {
        return Err(AfcmError::InvalidArgument("no fit points for gamma calibration".into()));
    }
    if grid.iter().any(|g| !(*g > 0.0)) {
        return Err(AfcmError::InvalidArgument("gamma grid values must be positive".into()));
    }
    let local: Vec<Point> = subsample_points(colloc, MAX_FIT_POINTS)
        .into_iter()
        .map(|x| sub.to_local(x))
        .collect();
    let sampler = GrfSampler::new(&local, cfg)?;
    let fields: Vec<Vec<f64>> = (0..cfg.realizations).map(|_| sampler.sample(rng)).collect();
    let rhs = Mat::from_fn(local.len(), fields.len(), |i, l| fields[l][i]);

    let losses = par::map_collect(grid, |&gamma| fit_loss(&local, planes, gamma, &rhs));
    let losses = losses.into_iter().collect::<Result<Vec<f64>>>()?;
    let best = argmin(&losses);
    Ok(GammaCalibration {
        gamma: grid[best],
        grid: grid.to_vec(),
        losses,
    })
}

fn fit_loss(local: &[Point], planes: &[Hyperplane], gamma: f64, rhs: &Mat<f64>) -> Result<f64> {
    let phi = Mat::from_fn(local.len(), planes.len(), |q, j| {
        Activation::Tanh3.eval_all(gamma * planes[j].signed_distance(local[q]))[0]
    });
    let (coef, _) = lstsq_multi(phi.as_ref(), rhs.as_ref(), 1e-10)?;
    let fit = &phi * &coef;
    let mut total = 0.0;
    for l in 0..rhs.ncols() {
        for q in 0..rhs.nrows() {
            let r = fit[(q, l)] - rhs[(q, l)];
            total += r * r;
        }
    }
    Ok(total / rhs.ncols() as f64)
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::init_uniform_features;
    use crate::geometry::{build_partition, Domain};
    use crate::rng::Seeds;

    #[test]
    fn covariance_at_zero_lag() {
        assert_eq!(se_covariance([0.3, 0.1], [0.3, 0.1], 0.5), 1.0);
        let s = GrfSampler::new(&[[0.0, 0.0]], &GrfConfig::default()).unwrap();
        assert!((s.factor[(0, 0)].powi(2) - (1.0 + 1e-10)).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_moments() {
        let cfg = GrfConfig::default();
        let pts = [[0.0, 0.0], [10.0 * cfg.eta, 0.0]];
        let s = GrfSampler::new(&pts, &cfg).unwrap();
        let mut rng = Seeds::new(4).stream("grf");
        let n = 500;
        let draws: Vec<Vec<f64>> = (0..n).map(|_| s.sample(&mut rng)).collect();
        let mean0 = draws.iter().map(|d| d[0]).sum::<f64>() / n as f64;
        let mean1 = draws.iter().map(|d| d[1]).sum::<f64>() / n as f64;
        assert!(mean0.abs() < 0.1, "{mean0}");
        let cov = draws.iter().map(|d| (d[0] - mean0) * (d[1] - mean1)).sum::<f64>() / n as f64;
        let v0 = draws.iter().map(|d| (d[0] - mean0).powi(2)).sum::<f64>() / n as f64;
        let v1 = draws.iter().map(|d| (d[1] - mean1).powi(2)).sum::<f64>() / n as f64;
        let corr = cov / (v0 * v1).sqrt();
        assert!(corr.abs() < 0.1, "{corr}");
    }

    #[test]
    fn near_duplicate_points_escalate_jitter() {
        let pts = vec![[0.25, 0.5]; 30];
        let cfg = GrfConfig { jitter: 0.0, ..GrfConfig::default() };
        let s = GrfSampler::new(&pts, &cfg).unwrap();
        assert!(s.jitter > 0.0);
    }

    #[test]
    fn same_seed_bit_identical() {
        let d = Domain::new([-1.0, -1.0], [1.0, 1.0]).unwrap();
        let pts = d.grid(12, 12);
        let a = simulate_grf(&pts, &GrfConfig::default(), &mut Seeds::new(8).stream("grf")).unwrap();
        let b = simulate_grf(&pts, &GrfConfig::default(), &mut Seeds::new(8).stream("grf")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn calibration_returns_exhaustive_argmin() {
        let d = Domain::new([-1.0, -1.0], [1.0, 1.0]).unwrap();
        let part = build_partition(d, 1, 1).unwrap();
        let planes = init_uniform_features(40, &mut Seeds::new(1).stream("features"));
        let pts = d.grid(15, 15);
        let grid = [0.5, 1.0, 2.0, 4.0];
        let cal = calibrate_gamma(
            &part.subdomains[0],
            &planes,
            &pts,
            &GrfConfig::default(),
            &grid,
            &mut Seeds::new(1).stream("grf"),
        )
        .unwrap();
        assert!(grid.contains(&cal.gamma));
        let min = cal.losses.iter().cloned().fold(f64::INFINITY, f64::min);
        let i = grid.iter().position(|g| *g == cal.gamma).unwrap();
        assert_eq!(cal.losses[i], min);

        let single = calibrate_gamma(
            &part.subdomains[0],
            &planes,
            &pts,
            &GrfConfig::default(),
            &[2.0],
            &mut Seeds::new(1).stream("grf"),
        )
        .unwrap();
        assert_eq!(single.gamma, 2.0);
    }

    #[test]
    fn subsample_respects_cap() {
        let d = Domain::new([0.0, 0.0], [1.0, 1.0]).unwrap();
        let pts = d.grid(40, 40);
        let s = subsample_points(&pts, MAX_FIT_POINTS);
        assert_eq!(s.len(), MAX_FIT_POINTS);
        assert_eq!(s[0], pts[0]);
        assert_eq!(subsample_points(&pts[..10], 900).len(), 10);
    }
}
