//! The assembled approximation `Σ_n ψ_n(x) Σ_j u_nj φ_nj(x)`.

use serde::{Deserialize, Serialize};

use crate::features::FeatureSet;
use crate::geometry::{pou_weight_1d, Partition, Point, PouKind, DIM};
use crate::operator::{basis_derivatives, basis_value, BasisEval};
use crate::par;

/// Column layout shared by assembly and evaluation: the block of subdomain `n`
/// starts at `offset(n)` and holds `components` consecutive runs of `J_n`
/// coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnLayout {
    offsets: Vec<usize>,
    counts: Vec<usize>,
    components: usize,
}

impl ColumnLayout {
    pub fn new(counts: &[usize], components: usize) -> Self {
        let mut offsets = Vec::with_capacity(counts.len());
        let mut acc = 0;
        for &c in counts {
            offsets.push(acc);
            acc += c * components;
        }
        Self {
            offsets,
            counts: counts.to_vec(),
            components,
        }
    }

    #[inline]
    pub fn column(&self, subdomain: usize, component: usize, feature: usize) -> usize {
        self.offsets[subdomain] + component * self.counts[subdomain] + feature
    }

    pub fn count(&self, subdomain: usize) -> usize {
        self.counts[subdomain]
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() * self.components
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub partition: Partition,
    pub features: FeatureSet,
    pub coefficients: Vec<f64>,
    pub components: usize,
    pub pou: PouKind,
}

impl Solution {
    pub fn new(
        partition: Partition,
        features: FeatureSet,
        coefficients: Vec<f64>,
        components: usize,
    ) -> Self {
        debug_assert_eq!(coefficients.len(), features.total() * components);
        Self {
            partition,
            features,
            coefficients,
            components,
            pou: PouKind::Indicator,
        }
    }

    /// Identically zero solution on the given features.
    pub fn zero(partition: Partition, features: FeatureSet, components: usize) -> Self {
        let n = features.total() * components;
        Self::new(partition, features, vec![0.0; n], components)
    }

    pub fn layout(&self) -> ColumnLayout {
        ColumnLayout::new(&self.features.counts(), self.components)
    }

    /// Subdomains contributing at `x` with their PoU weights. The indicator
    /// PoU picks the owning subdomain only, so points on faces are not
    /// counted twice.
    fn contributors(&self, x: Point) -> Vec<(usize, PouTerms)> {
        match self.pou {
            PouKind::Indicator => vec![(self.partition.locate(x), PouTerms::ONE)],
            PouKind::Smooth => self
                .partition
                .subdomains
                .iter()
                .enumerate()
                .filter_map(|(n, sub)| {
                    let t = PouTerms::smooth(sub.to_local(x), sub.radius);
                    (t.value != 0.0).then_some((n, t))
                })
                .collect(),
        }
    }

    /// Value of component 0.
    pub fn value(&self, x: Point) -> f64 {
        self.values(x)[0]
    }

    pub fn values(&self, x: Point) -> Vec<f64> {
        let layout = self.layout();
        let act = self.features.activation;
        let mut out = vec![0.0; self.components];
        for (n, w) in self.contributors(x) {
            let sub = &self.partition.subdomains[n];
            for (j, f) in self.features.per_subdomain[n].iter().enumerate() {
                let v = basis_value(act, f, sub, x) * w.value;
                for (i, o) in out.iter_mut().enumerate() {
                    *o += self.coefficients[layout.column(n, i, j)] * v;
                }
            }
        }
        out
    }

    /// Value, gradient and Hessian per component.
    pub fn evaluate(&self, x: Point) -> Vec<BasisEval> {
        let layout = self.layout();
        let act = self.features.activation;
        let mut out = vec![BasisEval::default(); self.components];
        for (n, w) in self.contributors(x) {
            let sub = &self.partition.subdomains[n];
            let mut local = vec![BasisEval::default(); self.components];
            for (j, f) in self.features.per_subdomain[n].iter().enumerate() {
                let e = basis_derivatives(act, f, sub, x);
                for (i, acc) in local.iter_mut().enumerate() {
                    let u = self.coefficients[layout.column(n, i, j)];
                    if u != 0.0 {
                        acc.add_assign(&e.scaled(u));
                    }
                }
            }
            for (acc, u) in out.iter_mut().zip(&local) {
                acc.add_assign(&w.apply(u));
            }
        }
        out
    }

    /// `|∇φ̃|` for scalar problems, Frobenius norm of the Jacobian otherwise.
    pub fn gradient_norm(&self, x: Point) -> f64 {
        self.evaluate(x)
            .iter()
            .map(|e| e.gradient.iter().map(|g| g * g).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn values_at(&self, points: &[Point]) -> Vec<f64> {
        par::map_collect(points, |&x| self.value(x))
    }

    pub fn gradient_norms_at(&self, points: &[Point]) -> Vec<f64> {
        par::map_collect(points, |&x| self.gradient_norm(x))
    }

    /// Same features and partition, coefficients multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coefficients.iter_mut().for_each(|u| *u *= s);
        out
    }
}

/// PoU weight with its global gradient and Hessian.
#[derive(Clone, Copy, Debug)]
struct PouTerms {
    value: f64,
    gradient: [f64; DIM],
    hessian: [[f64; DIM]; DIM],
}

impl PouTerms {
    const ONE: Self = Self {
        value: 1.0,
        gradient: [0.0; DIM],
        hessian: [[0.0; DIM]; DIM],
    };

    fn smooth(xl: Point, radius: Point) -> Self {
        let w: Vec<(f64, f64, f64)> = (0..DIM)
            .map(|i| {
                let (v, d) = pou_weight_1d(PouKind::Smooth, xl[i]);
                (v, d / radius[i], smooth_second(xl[i]) / (radius[i] * radius[i]))
            })
            .collect();
        Self {
            value: w[0].0 * w[1].0,
            gradient: [w[0].1 * w[1].0, w[0].0 * w[1].1],
            hessian: [
                [w[0].2 * w[1].0, w[0].1 * w[1].1],
                [w[0].1 * w[1].1, w[0].0 * w[1].2],
            ],
        }
    }

    /// Product rule for `ψ u`.
    fn apply(&self, u: &BasisEval) -> BasisEval {
        let mut out = u.scaled(self.value);
        for i in 0..DIM {
            out.gradient[i] += self.gradient[i] * u.value;
            for j in 0..DIM {
                out.hessian[i][j] += self.gradient[i] * u.gradient[j]
                    + u.gradient[i] * self.gradient[j]
                    + self.hessian[i][j] * u.value;
            }
        }
        out
    }
}

fn smooth_second(t: f64) -> f64 {
    use std::f64::consts::PI;
    let a = t.abs();
    if a <= 0.75 || a > 1.25 {
        0.0
    } else if t < 0.0 {
        -2.0 * PI * PI * (2.0 * PI * t).sin()
    } else {
        2.0 * PI * PI * (2.0 * PI * t).sin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{init_uniform_features, Activation, Hyperplane};
    use crate::geometry::{build_partition, Domain};
    use crate::rng::Seeds;
    use rand::Rng;

    fn random_solution(nx: usize, ny: usize, j: usize, seed: u64) -> Solution {
        let d = Domain::new([-1.0, -1.0], [1.0, 1.0]).unwrap();
        let part = build_partition(d, nx, ny).unwrap();
        let mut rng = Seeds::new(seed).stream("features");
        let per: Vec<_> = (0..part.len())
            .map(|n| {
                init_uniform_features(j, &mut rng)
                    .into_iter()
                    .map(|p| p.with_shape(2.0, n))
                    .collect()
            })
            .collect();
        let fs = FeatureSet::new(per);
        let coef = (0..fs.total()).map(|_| rng.random_range(-1.0..1.0)).collect();
        Solution::new(part, fs, coef, 1)
    }

    #[test]
    fn single_feature_unit_coefficient() {
        let d = Domain::new([-1.0, -1.0], [1.0, 1.0]).unwrap();
        let part = build_partition(d, 1, 1).unwrap();
        let f = Hyperplane::from_direction([0.6, 0.8], 0.3).with_shape(1.7, 0);
        let sol = Solution::new(part, FeatureSet::new(vec![vec![f]]), vec![1.0], 1);
        let x = [0.2, -0.5];
        let z = 1.7 * (0.6 * 0.2 + 0.8 * -0.5 + 0.3);
        assert!((sol.value(x) - Activation::Tanh3.eval(z, 0)).abs() < 1e-15);
    }

    #[test]
    fn zero_coefficients_give_zero() {
        let s = random_solution(2, 2, 10, 1).scaled(0.0);
        let e = s.evaluate([0.3, -0.7]);
        assert_eq!(e[0], BasisEval::default());
    }

    #[test]
    fn linear_in_coefficients() {
        let s = random_solution(2, 2, 20, 2);
        let t = s.scaled(-3.5);
        let mut rng = Seeds::new(2).stream("pts");
        for _ in 0..50 {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            assert!((t.value(x) + 3.5 * s.value(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_differences() {
        let s = random_solution(2, 2, 20, 3);
        let mut rng = Seeds::new(3).stream("pts");
        let h = 1e-6;
        for _ in 0..50 {
            // stay away from the faces at 0
            let x = [rng.random_range(0.05..0.95), rng.random_range(-0.95..-0.05)];
            let e = s.evaluate(x)[0];
            let gx = (s.value([x[0] + h, x[1]]) - s.value([x[0] - h, x[1]])) / (2.0 * h);
            let gy = (s.value([x[0], x[1] + h]) - s.value([x[0], x[1] - h])) / (2.0 * h);
            let scale = e.gradient[0].hypot(e.gradient[1]).max(1.0);
            assert!((e.gradient[0] - gx).abs() / scale < 1e-6);
            assert!((e.gradient[1] - gy).abs() / scale < 1e-6);
        }
    }

    #[test]
    fn smooth_pou_gradient_matches_differences() {
        let mut s = random_solution(2, 1, 15, 4);
        s.pou = PouKind::Smooth;
        let h = 1e-6;
        // overlap band around the face x = 0 is |x| <= 0.25
        for &x in &[[0.1, 0.2], [-0.2, -0.4], [0.0, 0.3], [0.6, 0.1]] {
            let e = s.evaluate(x)[0];
            let gx = (s.value([x[0] + h, x[1]]) - s.value([x[0] - h, x[1]])) / (2.0 * h);
            let g2 = (s.evaluate([x[0] + h, x[1]])[0].gradient[0]
                - s.evaluate([x[0] - h, x[1]])[0].gradient[0])
                / (2.0 * h);
            assert!((e.gradient[0] - gx).abs() < 1e-6 * gx.abs().max(1.0));
            assert!((e.hessian[0][0] - g2).abs() < 1e-5 * g2.abs().max(1.0));
        }
    }

    #[test]
    fn layout_columns_are_a_bijection() {
        let l = ColumnLayout::new(&[3, 5, 2], 2);
        let mut seen = vec![false; l.total()];
        for (n, &c) in [3, 5, 2].iter().enumerate() {
            for i in 0..2 {
                for j in 0..c {
                    let col = l.column(n, i, j);
                    assert!(!seen[col]);
                    seen[col] = true;
                }
            }
        }
        assert!(seen.iter().all(|s| *s));
    }
}
