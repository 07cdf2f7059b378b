//! The adaptive feature capture loop: a gradient-based monitor density on a
//! fixed uniform sample set drives weighted resampling of feature hyperplanes,
//! shape parameters and interior collocation points.

use rand::seq::index::sample_weighted;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::SolveStats;
use crate::error::{AfcmError, Result};
use crate::features::{
    init_uniform_features, random_direction, FeatureFunction, FeatureSet, Hyperplane,
};
use crate::geometry::{sample_collocation, CollocationSet, Domain, Partition, Point};
use crate::grf::{calibrate_gamma, default_gamma_grid, GammaCalibration, GrfConfig};
use crate::par;
use crate::rng::Seeds;
use crate::solution::Solution;

/// Sampled monitor set `S` with the density `p ∝ |∇φ̃| + c1`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonitorSet {
    pub points: Vec<Point>,
    pub owners: Vec<usize>,
    pub gradients: Vec<f64>,
    pub masses: Vec<f64>,
}

impl MonitorSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `Σ p(x) x`.
    pub fn mass_center(&self) -> Point {
        let mut c = [0.0; 2];
        for (p, x) in self.masses.iter().zip(&self.points) {
            c[0] += p * x[0];
            c[1] += p * x[1];
        }
        c
    }
}

/// `m` points drawn uniformly from the domain.
pub fn sample_monitor_points<R: Rng + ?Sized>(domain: &Domain, m: usize, rng: &mut R) -> Vec<Point> {
    (0..m)
        .map(|_| {
            [
                rng.random_range(domain.lower[0]..domain.upper[0]),
                rng.random_range(domain.lower[1]..domain.upper[1]),
            ]
        })
        .collect()
}

/// Masses from precomputed gradient magnitudes.
pub fn monitor_masses(gradients: &[f64], c1: f64) -> Vec<f64> {
    let total: f64 = gradients.iter().map(|g| g + c1).sum();
    gradients.iter().map(|g| (g + c1) / total).collect()
}

pub fn build_monitor(sol: &Solution, points: &[Point], c1: f64) -> Result<MonitorSet> {
    if points.is_empty() {
        return Err(AfcmError::InvalidArgument("monitor set is empty".into()));
    }
    if !(c1 > 0.0) {
        return Err(AfcmError::InvalidArgument("c1 must be positive".into()));
    }
    let gradients = sol.gradient_norms_at(points);
    if let Some(i) = gradients.iter().position(|g| !g.is_finite()) {
        return Err(AfcmError::NonFiniteGradient {
            x: points[i][0],
            y: points[i][1],
        });
    }
    let masses = monitor_masses(&gradients, c1);
    let owners = points.iter().map(|&x| sol.partition.locate(x)).collect();
    Ok(MonitorSet {
        points: points.to_vec(),
        owners,
        gradients,
        masses,
    })
}

/// `k` distinct indices drawn without replacement, inclusion driven by
/// `masses` (Efraimidis–Spirakis exponential keys).
pub fn weighted_sample<R: Rng + ?Sized>(masses: &[f64], k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if k > masses.len() {
        return Err(AfcmError::SampleTooLarge {
            requested: k,
            available: masses.len(),
        });
    }
    let idx = sample_weighted(rng, masses.len(), |i| masses[i], k)
        .map_err(|e| AfcmError::InvalidArgument(format!("weighted sampling: {e}")))?;
    Ok(idx.into_vec())
}

/// A sampled monitor point with its gradient magnitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub point: Point,
    pub gradient: f64,
}

/// Groups the chosen monitor indices by owning subdomain, keeping draw order.
pub fn group_samples(monitor: &MonitorSet, chosen: &[usize], subdomains: usize) -> Vec<Vec<Sample>> {
    let mut out = vec![Vec::new(); subdomains];
    for &i in chosen {
        out[monitor.owners[i]].push(Sample {
            point: monitor.points[i],
            gradient: monitor.gradients[i],
        });
    }
    out
}

/// New hyperplanes through the samples with
/// `γ_nj = γ_n (|∇φ̃(x_j)| + c2) / min_j (|∇φ̃| + c2)`. Subdomains without
/// samples come back empty.
pub fn regenerate_features<R: Rng + ?Sized>(
    partition: &Partition,
    samples: &[Vec<Sample>],
    gamma_base: &[f64],
    c2: f64,
    rng: &mut R,
) -> FeatureSet {
    let per = samples
        .iter()
        .enumerate()
        .map(|(n, group)| {
            let sub = &partition.subdomains[n];
            let min = group
                .iter()
                .map(|s| s.gradient + c2)
                .fold(f64::INFINITY, f64::min);
            group
                .iter()
                .map(|s| {
                    let plane = Hyperplane::through(random_direction(rng), sub.to_local(s.point));
                    let ratio = (s.gradient + c2) / min;
                    FeatureFunction {
                        plane,
                        shape: gamma_base[n] * ratio,
                        subdomain: n,
                    }
                })
                .collect()
        })
        .collect();
    FeatureSet::new(per)
}

/// Keeps boundary and interface points, replaces interior points.
pub fn regenerate_collocation(prev: &CollocationSet, interior: Vec<Vec<Point>>) -> CollocationSet {
    CollocationSet {
        per_subdomain: prev
            .per_subdomain
            .iter()
            .zip(interior)
            .map(|(p, inner)| {
                let mut q = p.clone();
                q.interior = inner;
                q
            })
            .collect(),
    }
}

/// Below this many sampled interior points a subdomain keeps its old ones.
pub const MIN_INTERIOR_SAMPLES: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptConfig {
    pub c1: f64,
    pub c2: f64,
    /// Adaptation iterations `K`.
    pub iterations: usize,
    /// Size `m` of the monitor set.
    pub monitor_points: usize,
    /// Stop once the residual's relative change stays below this for two
    /// consecutive iterations.
    pub early_stop: Option<f64>,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            c1: 0.01,
            c2: 50.0,
            iterations: 4,
            monitor_points: 100_000,
            early_stop: None,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self, features: usize, interior: usize) -> Result<()> {
        if !(self.c1 > 0.0) || !(self.c2 > 0.0) {
            return Err(AfcmError::InvalidArgument("c1 and c2 must be positive".into()));
        }
        if self.iterations > 0 && self.monitor_points < features + interior {
            return Err(AfcmError::InvalidArgument(format!(
                "monitor set of {} points is smaller than features + interior points ({})",
                self.monitor_points,
                features + interior
            )));
        }
        Ok(())
    }
}

/// Initial uniform features and collocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    pub features_per_subdomain: usize,
    pub qx: usize,
    pub qy: usize,
    pub interface_points: Option<usize>,
    pub grf: GrfConfig,
    pub gamma_grid: Vec<f64>,
    /// Calibrate once and reuse for every subdomain.
    pub shared_gamma: bool,
    /// Skip calibration and use this value.
    pub fixed_gamma: Option<f64>,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            features_per_subdomain: 400,
            qx: 40,
            qy: 40,
            interface_points: None,
            grf: GrfConfig::default(),
            gamma_grid: default_gamma_grid(),
            shared_gamma: true,
            fixed_gamma: None,
        }
    }
}

/// Features, collocation and base shape parameters entering an iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct AfcmState {
    pub features: FeatureSet,
    pub collocation: CollocationSet,
    pub gamma_base: Vec<f64>,
}

/// Uniform features (Gaussian directions, `U[0, 1]` offsets) with calibrated
/// shape, on a tensor-grid collocation.
pub fn initial_state(
    partition: &Partition,
    init: &InitConfig,
    seeds: &Seeds,
) -> Result<(AfcmState, Vec<GammaCalibration>)> {
    if init.features_per_subdomain == 0 {
        return Err(AfcmError::InvalidArgument("J_n must be positive".into()));
    }
    let collocation = sample_collocation(partition, init.qx, init.qy, init.interface_points)?;
    let mut rng = seeds.stream("features");
    let planes: Vec<Vec<Hyperplane>> = (0..partition.len())
        .map(|_| init_uniform_features(init.features_per_subdomain, &mut rng))
        .collect();

    let mut calibrations = Vec::new();
    let gamma_base: Vec<f64> = match init.fixed_gamma {
        Some(g) if g > 0.0 => vec![g; partition.len()],
        Some(g) => {
            return Err(AfcmError::InvalidArgument(format!("fixed gamma must be positive, got {g}")))
        }
        None => {
            let targets: Vec<usize> = if init.shared_gamma {
                vec![0]
            } else {
                (0..partition.len()).collect()
            };
            for &n in &targets {
                let pts: Vec<Point> = collocation.per_subdomain[n].iter().map(|(p, _)| p).collect();
                let cal = calibrate_gamma(
                    &partition.subdomains[n],
                    &planes[n],
                    &pts,
                    &init.grf,
                    &init.gamma_grid,
                    &mut seeds.indexed_stream("grf", n as u64),
                )?;
                calibrations.push(cal);
            }
            if init.shared_gamma {
                vec![calibrations[0].gamma; partition.len()]
            } else {
                calibrations.iter().map(|c| c.gamma).collect()
            }
        }
    };

    let features = FeatureSet::new(
        planes
            .into_iter()
            .enumerate()
            .map(|(n, ps)| ps.into_iter().map(|p| p.with_shape(gamma_base[n], n)).collect())
            .collect(),
    );
    Ok((
        AfcmState {
            features,
            collocation,
            gamma_base,
        },
        calibrations,
    ))
}

#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub solution: Solution,
    pub collocation: CollocationSet,
    pub stats: SolveStats,
    /// Relative `(L∞, L²)` errors when an exact solution is known.
    pub errors: Option<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct SolutionHistory {
    pub iterations: Vec<IterationRecord>,
    pub gamma_base: Vec<f64>,
    /// Monitor set of the last adaptation step, if any ran.
    pub monitor: Option<MonitorSet>,
}

impl SolutionHistory {
    pub fn last(&self) -> &IterationRecord {
        self.iterations.last().expect("history is never empty")
    }

    /// State that produced the last iterate.
    pub fn final_state(&self) -> AfcmState {
        let last = self.last();
        AfcmState {
            features: last.solution.features.clone(),
            collocation: last.collocation.clone(),
            gamma_base: self.gamma_base.clone(),
        }
    }
}

/// Optional error measurement applied to every iterate.
pub type ErrorProbe<'a> = &'a (dyn Fn(&Solution) -> Result<(f64, f64)> + Sync);

/// Runs iteration 0 on `state` and then `K` adaptation steps. `solve`
/// receives the current state, the iteration index and the previous
/// iterate.
///
/// The monitor set `S` is fixed for the whole loop. Subdomains that receive
/// no feature samples keep their previous features, and subdomains with fewer
/// than [`MIN_INTERIOR_SAMPLES`] interior samples keep their previous
/// interior points.
pub fn afcm_iterate<S>(
    partition: &Partition,
    state: AfcmState,
    adapt: &AdaptConfig,
    seeds: &Seeds,
    stream_index: u64,
    monitor_points: &[Point],
    mut solve: S,
    probe: Option<ErrorProbe<'_>>,
) -> Result<SolutionHistory>
where
    S: FnMut(&AfcmState, usize, Option<&Solution>) -> Result<(Solution, SolveStats)>,
{
    let features_total = state.features.total();
    let interior_total = state.collocation.interior_total();
    adapt.validate(features_total, interior_total)?;

    let record = |state: &AfcmState, k: usize, prev: Option<&Solution>, solve: &mut S| {
        let (solution, stats) = solve(state, k, prev).map_err(|e| e.at_iteration(k))?;
        let errors = probe.map(|p| p(&solution)).transpose().map_err(|e| e.at_iteration(k))?;
        Ok::<_, AfcmError>(IterationRecord {
            solution,
            collocation: state.collocation.clone(),
            stats,
            errors,
        })
    };

    let mut history = SolutionHistory {
        iterations: vec![record(&state, 0, None, &mut solve)?],
        gamma_base: state.gamma_base.clone(),
        monitor: None,
    };
    let mut state = state;
    let mut rng = seeds.indexed_stream("wrs", stream_index);
    for k in 1..=adapt.iterations {
        let prev = &history.last().solution;
        let monitor = build_monitor(prev, monitor_points, adapt.c1).map_err(|e| e.at_iteration(k))?;

        let chosen = weighted_sample(&monitor.masses, features_total, &mut rng)?;
        let groups = group_samples(&monitor, &chosen, partition.len());
        let mut features = regenerate_features(partition, &groups, &state.gamma_base, adapt.c2, &mut rng);
        for (n, fs) in features.per_subdomain.iter_mut().enumerate() {
            if fs.is_empty() {
                *fs = state.features.per_subdomain[n].clone();
            }
        }

        let chosen = weighted_sample(&monitor.masses, interior_total, &mut rng)?;
        let groups = group_samples(&monitor, &chosen, partition.len());
        let interior: Vec<Vec<Point>> = groups
            .into_iter()
            .enumerate()
            .map(|(n, g)| {
                if g.len() < MIN_INTERIOR_SAMPLES {
                    state.collocation.per_subdomain[n].interior.clone()
                } else {
                    g.into_iter().map(|s| s.point).collect()
                }
            })
            .collect();
        let collocation = regenerate_collocation(&state.collocation, interior);

        state = AfcmState {
            features,
            collocation,
            gamma_base: state.gamma_base,
        };
        let prev = history.last().solution.clone();
        history.iterations.push(record(&state, k, Some(&prev), &mut solve)?);
        history.monitor = Some(monitor);

        if let Some(tol) = adapt.early_stop {
            if stagnated(&history, tol) {
                break;
            }
        }
    }
    Ok(history)
}

fn stagnated(history: &SolutionHistory, tol: f64) -> bool {
    let r: Vec<f64> = history.iterations.iter().map(|it| it.stats.residual_norm).collect();
    if r.len() < 3 {
        return false;
    }
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
    let n = r.len();
    rel(r[n - 1], r[n - 2]) < tol && rel(r[n - 2], r[n - 3]) < tol
}

/// Parallel gradient magnitudes, exposed for diagnostics.
pub fn gradient_magnitudes(sol: &Solution, points: &[Point]) -> Vec<f64> {
    par::map_collect(points, |&x| sol.gradient_norm(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_partition;
    use crate::features::hyperplane_distance;
    use proptest::prelude::*;
    use rand::Rng;

    fn square() -> Domain {
        Domain::new([-1.0, -1.0], [1.0, 1.0]).unwrap()
    }

    #[test]
    fn mass_examples() {
        let m = monitor_masses(&[0.0, 1.0], 0.01);
        assert!((m[0] / m[1] - 0.01 / 1.01).abs() < 1e-15);
        let u = monitor_masses(&[3.0; 8], 0.01);
        assert!(u.iter().all(|p| (p - 0.125).abs() < 1e-15));
    }

    #[test]
    fn weighted_sample_examples() {
        let mut rng = Seeds::new(1).stream("wrs");
        let masses = vec![0.25; 4];
        let mut all = weighted_sample(&masses, 4, &mut rng).unwrap();
        all.sort();
        assert_eq!(all, vec![0, 1, 2, 3]);
        assert!(matches!(
            weighted_sample(&masses, 5, &mut rng),
            Err(AfcmError::SampleTooLarge { requested: 5, available: 4 })
        ));
        let mut heavy = vec![0.001 / 9.0; 10];
        heavy[3] = 0.999;
        let hits = (0..1000)
            .filter(|_| weighted_sample(&heavy, 1, &mut rng).unwrap() == vec![3])
            .count();
        assert!(hits >= 990, "{hits}");
    }

    #[test]
    fn regenerated_feature_examples() {
        let part = build_partition(square(), 1, 1).unwrap();
        let mut rng = Seeds::new(2).stream("wrs");
        let samples = vec![vec![
            Sample { point: [0.1, 0.2], gradient: 0.0 },
            Sample { point: [-0.3, 0.5], gradient: 100.0 },
        ]];
        let fs = regenerate_features(&part, &samples, &[3.4], 50.0, &mut rng);
        let g: Vec<f64> = fs.iter().map(|f| f.shape).collect();
        assert!((g[0] - 3.4).abs() < 1e-12);
        assert!((g[1] - 10.2).abs() < 1e-12);
        for (f, s) in fs.iter().zip(&samples[0]) {
            assert!(hyperplane_distance(&f.plane, s.point) <= 1e-12);
        }
        let flat = vec![vec![
            Sample { point: [0.1, 0.2], gradient: 7.0 },
            Sample { point: [0.4, 0.2], gradient: 7.0 },
        ]];
        let fs = regenerate_features(&part, &flat, &[2.0], 50.0, &mut rng);
        assert!(fs.iter().all(|f| f.shape == 2.0));
    }

    #[test]
    fn collocation_regeneration_keeps_frame() {
        let part = build_partition(square(), 2, 1).unwrap();
        let prev = sample_collocation(&part, 5, 5, None).unwrap();
        let next = regenerate_collocation(&prev, vec![vec![[-0.5, 0.1]], vec![]]);
        for (a, b) in prev.per_subdomain.iter().zip(&next.per_subdomain) {
            assert_eq!(a.boundary, b.boundary);
            assert_eq!(a.interface, b.interface);
        }
        assert_eq!(next.per_subdomain[0].interior.len(), 1);
        assert!(next.per_subdomain[1].interior.is_empty());
    }

    #[test]
    fn rank_agreement_of_inclusion_frequencies() {
        let masses: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let total: f64 = masses.iter().sum();
        let masses: Vec<f64> = masses.iter().map(|m| m / total).collect();
        let mut rng = Seeds::new(3).stream("wrs");
        let mut counts = vec![0usize; 20];
        for _ in 0..10_000 {
            for i in weighted_sample(&masses, 5, &mut rng).unwrap() {
                counts[i] += 1;
            }
        }
        let rank = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
            let mut r = vec![0.0; v.len()];
            for (k, &i) in idx.iter().enumerate() {
                r[i] = k as f64;
            }
            r
        };
        let rc = rank(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>());
        let rm = rank(&masses);
        let n = 20.0;
        let d2: f64 = rc.iter().zip(&rm).map(|(a, b)| (a - b).powi(2)).sum();
        let spearman = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
        assert!(spearman > 0.9, "{spearman}");
    }

    proptest! {
        #[test]
        fn masses_positive_and_normalised(g in proptest::collection::vec(0.0f64..1e4, 1..200), c1 in 1e-4f64..1.0) {
            let m = monitor_masses(&g, c1);
            prop_assert!(m.iter().all(|p| *p > 0.0));
            prop_assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn weighted_sample_has_no_duplicates(seed in 0u64..1000, k in 0usize..50) {
            let masses: Vec<f64> = (0..50).map(|i| 1.0 + (i % 7) as f64).collect();
            let mut rng = Seeds::new(seed).stream("wrs");
            let mut s = weighted_sample(&masses, k, &mut rng).unwrap();
            s.sort();
            s.dedup();
            prop_assert_eq!(s.len(), k);
        }

        #[test]
        fn amplified_gamma_and_anchored_planes(
            grads in proptest::collection::vec(0.0f64..1e3, 1..40),
            base in 0.2f64..8.0,
            seed in 0u64..100,
        ) {
            let part = build_partition(square(), 1, 1).unwrap();
            let mut rng = Seeds::new(seed).stream("pts");
            let samples: Vec<Sample> = grads
                .iter()
                .map(|&g| Sample { point: [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], gradient: g })
                .collect();
            let fs = regenerate_features(&part, &[samples.clone()], &[base], 50.0, &mut rng);
            for (f, s) in fs.iter().zip(&samples) {
                prop_assert!(f.shape >= base);
                prop_assert!(hyperplane_distance(&f.plane, part.subdomains[0].to_local(s.point)) <= 1e-12);
            }
        }
    }
}
