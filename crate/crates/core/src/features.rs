//! Reparameterised random feature functions `σ(γ (a · x̃ + r))`.
//!
//! A feature is a partition hyperplane `a · x̃ + r = 0` in the local
//! coordinates of its subdomain plus a shape parameter `γ` that sets the
//! steepness of the pre-activation along the normal `a`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{AfcmError, Result};
use crate::geometry::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// `tanh(z)^3`
    #[default]
    Tanh3,
}

impl Activation {
    /// Value (`order = 0`) or derivative of order 1 or 2.
    pub fn eval(self, z: f64, order: usize) -> f64 {
        let d = self.eval_all(z);
        match order {
            0..=2 => d[order],
            _ => panic!("activation derivative of order {order} is not available"),
        }
    }

    /// `[σ(z), σ'(z), σ''(z)]`.
    #[inline]
    pub fn eval_all(self, z: f64) -> [f64; 3] {
        match self {
            Activation::Tanh3 => {
                let t = z.tanh();
                let s = 1.0 - t * t;
                [t * t * t, 3.0 * t * t * s, 6.0 * t * s * (1.0 - 2.0 * t * t)]
            }
        }
    }
}

/// Free function form of [`Activation::eval`] for the shipped activation.
pub fn activation(z: f64, order: usize) -> f64 {
    Activation::Tanh3.eval(z, order)
}

/// Location parameters `(a, r)` of a partition hyperplane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    /// Unit normal.
    pub normal: Point,
    pub offset: f64,
    /// A point of the hyperplane in local coordinates: the foot of the
    /// perpendicular from the origin for uniform draws, the generating sample
    /// for adapted features.
    pub anchor: Point,
}

impl Hyperplane {
    /// Normalises `direction` and uses `offset` as `r`.
    pub fn from_direction(direction: Point, offset: f64) -> Self {
        let norm = direction[0].hypot(direction[1]);
        let normal = [direction[0] / norm, direction[1] / norm];
        Self {
            normal,
            offset,
            anchor: [-offset * normal[0], -offset * normal[1]],
        }
    }

    /// Hyperplane with normal along `direction` passing through `x_local`.
    pub fn through(direction: Point, x_local: Point) -> Self {
        let norm = direction[0].hypot(direction[1]);
        let normal = [direction[0] / norm, direction[1] / norm];
        Self {
            normal,
            offset: -(normal[0] * x_local[0] + normal[1] * x_local[1]),
            anchor: x_local,
        }
    }

    #[inline]
    pub fn signed_distance(&self, x_local: Point) -> f64 {
        self.normal[0] * x_local[0] + self.normal[1] * x_local[1] + self.offset
    }

    pub fn with_shape(self, shape: f64, subdomain: usize) -> FeatureFunction {
        FeatureFunction {
            plane: self,
            shape,
            subdomain,
        }
    }
}

/// `|a · x̃ + r|`.
pub fn hyperplane_distance(plane: &Hyperplane, x_local: Point) -> f64 {
    plane.signed_distance(x_local).abs()
}

/// Fraction of hyperplanes passing within `tau` of `x_local`.
pub fn hyperplane_density<'a, I>(planes: I, x_local: Point, tau: f64) -> Result<f64>
where
    I: IntoIterator<Item = &'a Hyperplane>,
{
    let (hits, total) = planes.into_iter().fold((0usize, 0usize), |(h, t), p| {
        (h + usize::from(hyperplane_distance(p, x_local) < tau), t + 1)
    });
    if total == 0 {
        return Err(AfcmError::EmptyFeatures);
    }
    Ok(hits as f64 / total as f64)
}

/// Standard Gaussian direction, normalised.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Point {
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        if x != 0.0 || y != 0.0 {
            return [x, y];
        }
    }
}

/// Uniformly distributed hyperplanes: Gaussian normal direction, offset `U[0, 1]`.
pub fn init_uniform_features<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<Hyperplane> {
    (0..count)
        .map(|_| {
            let dir = random_direction(rng);
            let offset: f64 = rng.random::<f64>();
            Hyperplane::from_direction(dir, offset)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureFunction {
    pub plane: Hyperplane,
    pub shape: f64,
    pub subdomain: usize,
}

impl FeatureFunction {
    #[inline]
    pub fn preactivation(&self, x_local: Point) -> f64 {
        self.shape * self.plane.signed_distance(x_local)
    }
}

/// Features grouped by owning subdomain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub per_subdomain: Vec<Vec<FeatureFunction>>,
    pub activation: Activation,
}

impl FeatureSet {
    pub fn new(per_subdomain: Vec<Vec<FeatureFunction>>) -> Self {
        Self {
            per_subdomain,
            activation: Activation::Tanh3,
        }
    }

    pub fn total(&self) -> usize {
        self.per_subdomain.iter().map(Vec::len).sum()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.per_subdomain.iter().map(Vec::len).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &FeatureFunction> {
        self.per_subdomain.iter().flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seeds;

    #[test]
    fn normalisation_example() {
        let h = Hyperplane::from_direction([3.0, 4.0], 0.5);
        assert!((h.normal[0] - 0.6).abs() < 1e-15);
        assert!((h.normal[1] - 0.8).abs() < 1e-15);
        assert_eq!(h.offset, 0.5);
        assert!(hyperplane_distance(&h, h.anchor) < 1e-15);
    }

    #[test]
    fn same_seed_same_features() {
        let a = init_uniform_features(50, &mut Seeds::new(3).stream("features"));
        let b = init_uniform_features(50, &mut Seeds::new(3).stream("features"));
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_features_invariants() {
        let planes = init_uniform_features(2000, &mut Seeds::new(11).stream("features"));
        for p in &planes {
            assert!((p.normal[0].hypot(p.normal[1]) - 1.0).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&p.offset));
        }
    }

    #[test]
    fn distance_examples() {
        let h = Hyperplane::from_direction([1.0, 0.0], 0.0);
        assert!((hyperplane_distance(&h, [0.3, 0.7]) - 0.3).abs() < 1e-15);
        let h = Hyperplane::from_direction([0.0, 1.0], -0.5);
        assert_eq!(hyperplane_distance(&h, [0.0, 0.5]), 0.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = Hyperplane::from_direction([s, s], 0.0);
        assert!((hyperplane_distance(&h, [1.0, 1.0]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn density_examples() {
        let through = Hyperplane::through([0.3, -1.0], [0.2, 0.1]);
        assert_eq!(hyperplane_density([&through], [0.2, 0.1], 0.2).unwrap(), 1.0);
        let far = Hyperplane::from_direction([1.0, 0.0], -0.5);
        assert_eq!(hyperplane_density([&far], [0.0, 0.3], 0.2).unwrap(), 0.0);
        assert!(matches!(
            hyperplane_density(std::iter::empty(), [0.0, 0.0], 0.2),
            Err(AfcmError::EmptyFeatures)
        ));
    }

    #[test]
    fn monte_carlo_density_is_tau() {
        // uniform hyperplanes: E[D] = tau for |x| <= 1 - tau
        let tau = 0.2;
        let planes = init_uniform_features(2000, &mut Seeds::new(5).stream("features"));
        let mut rng = Seeds::new(5).stream("points");
        let mut acc = 0.0;
        let n = 100;
        let mut k = 0;
        while k < n {
            let x: Point = [rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8)];
            if x[0].hypot(x[1]) > 0.8 {
                continue;
            }
            acc += hyperplane_density(&planes, x, tau).unwrap();
            k += 1;
        }
        let mean = acc / n as f64;
        assert!((mean - tau).abs() <= 0.02, "mean density {mean}");
    }

    #[test]
    fn activation_at_zero_and_saturation() {
        assert_eq!(activation(0.0, 0), 0.0);
        assert_eq!(activation(0.0, 1), 0.0);
        assert_eq!(activation(0.0, 2), 0.0);
        // tanh(z) = (1 - e^{-2z}) / (1 + e^{-2z}); at z = 10 the cube sits
        // 1.2366e-8 below one
        let e = (-20.0f64).exp();
        let oracle = ((1.0 - e) / (1.0 + e)).powi(3);
        assert!((activation(10.0, 0) - oracle).abs() < 1e-15);
        assert!((1.0 - oracle - 1.2366e-8).abs() < 1e-12);
        assert!((activation(20.0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn activation_derivatives_match_differences() {
        let h = 1e-5;
        for i in 0..=600 {
            let z = -3.0 + 6.0 * i as f64 / 600.0;
            let d = Activation::Tanh3.eval_all(z);
            let fd1 = (activation(z + h, 0) - activation(z - h, 0)) / (2.0 * h);
            let fd2 = (activation(z + h, 1) - activation(z - h, 1)) / (2.0 * h);
            let scale1 = d[1].abs().max(1e-3);
            let scale2 = d[2].abs().max(1e-3);
            assert!((d[1] - fd1).abs() / scale1 < 1e-6, "z={z}");
            assert!((d[2] - fd2).abs() / scale2 < 1e-6, "z={z}");
        }
    }
}
