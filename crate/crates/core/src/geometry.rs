//! Rectangular domains, their uniform partition into subdomains, the local
//! transform onto `[-1, 1]^2`, partition-of-unity weights and the tensor-grid
//! collocation layout.

use serde::{Deserialize, Serialize};

use crate::error::{AfcmError, Result};

/// A point in the plane. For space-time problems the second coordinate is time.
pub type Point = [f64; 2];

pub const DIM: usize = 2;

/// Axis-aligned rectangle `[lower, upper]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: Point,
    pub upper: Point,
}

impl Domain {
    pub fn new(lower: Point, upper: Point) -> Result<Self> {
        if (0..DIM).any(|i| !(lower[i] < upper[i])) {
            return Err(AfcmError::InvalidArgument(format!(
                "domain corners must satisfy lower < upper, got {lower:?} and {upper:?}"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn dimension(&self) -> usize {
        DIM
    }

    pub fn area(&self) -> f64 {
        (self.upper[0] - self.lower[0]) * (self.upper[1] - self.lower[1])
    }

    pub fn contains(&self, x: Point) -> bool {
        (0..DIM).all(|i| x[i] >= self.lower[i] && x[i] <= self.upper[i])
    }

    /// Uniform `nx × ny` grid over the closure, row-major in `y`.
    pub fn grid(&self, nx: usize, ny: usize) -> Vec<Point> {
        let xs = linspace(self.lower[0], self.upper[0], nx);
        let ys = linspace(self.lower[1], self.upper[1], ny);
        ys.iter()
            .flat_map(|&y| xs.iter().map(move |&x| [x, y]))
            .collect()
    }
}

/// `n` equally spaced values from `a` to `b` with exact endpoints.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (a + b)],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// One cell `Ω_n` of the partition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subdomain {
    pub center: Point,
    /// Per-axis half width.
    pub radius: Point,
    /// `(ix, iy)` position in the partition grid.
    pub grid_index: (usize, usize),
    pub lower: Point,
    pub upper: Point,
}

impl Subdomain {
    fn from_bounds(lower: Point, upper: Point, grid_index: (usize, usize)) -> Self {
        Self {
            center: [0.5 * (lower[0] + upper[0]), 0.5 * (lower[1] + upper[1])],
            radius: [0.5 * (upper[0] - lower[0]), 0.5 * (upper[1] - lower[1])],
            grid_index,
            lower,
            upper,
        }
    }

    /// `(x - x_n) / r_n` componentwise.
    pub fn to_local(&self, x: Point) -> Point {
        [
            (x[0] - self.center[0]) / self.radius[0],
            (x[1] - self.center[1]) / self.radius[1],
        ]
    }

    pub fn to_global(&self, xl: Point) -> Point {
        [
            self.center[0] + self.radius[0] * xl[0],
            self.center[1] + self.radius[1] * xl[1],
        ]
    }

    /// Closed-rectangle membership.
    pub fn contains(&self, x: Point) -> bool {
        (0..DIM).all(|i| x[i] >= self.lower[i] && x[i] <= self.upper[i])
    }

    pub fn area(&self) -> f64 {
        4.0 * self.radius[0] * self.radius[1]
    }
}

/// Free function form of [`Subdomain::to_local`].
pub fn to_local(sub: &Subdomain, x: Point) -> Point {
    sub.to_local(x)
}

/// Uniform `nx × ny` tiling of a [`Domain`]. Subdomains are stored row-major:
/// index `iy * nx + ix`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub domain: Domain,
    pub subdomains: Vec<Subdomain>,
    pub nx: usize,
    pub ny: usize,
    x_faces: Vec<f64>,
    y_faces: Vec<f64>,
}

pub fn build_partition(domain: Domain, nx: usize, ny: usize) -> Result<Partition> {
    if nx == 0 || ny == 0 {
        return Err(AfcmError::InvalidArgument(format!(
            "partition counts must be positive, got {nx} x {ny}"
        )));
    }
    let x_faces = linspace(domain.lower[0], domain.upper[0], nx + 1);
    let y_faces = linspace(domain.lower[1], domain.upper[1], ny + 1);
    let mut subdomains = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            subdomains.push(Subdomain::from_bounds(
                [x_faces[ix], y_faces[iy]],
                [x_faces[ix + 1], y_faces[iy + 1]],
                (ix, iy),
            ));
        }
    }
    Ok(Partition {
        domain,
        subdomains,
        nx,
        ny,
        x_faces,
        y_faces,
    })
}

impl Partition {
    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subdomains.is_empty()
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Owning subdomain of `x`. Points on a shared face belong to the
    /// lower-index side; points outside the domain are clamped onto it.
    pub fn locate(&self, x: Point) -> usize {
        let ix = face_slot(&self.x_faces, x[0]);
        let iy = face_slot(&self.y_faces, x[1]);
        self.index(ix, iy)
    }

    pub fn x_faces(&self) -> &[f64] {
        &self.x_faces
    }

    pub fn y_faces(&self) -> &[f64] {
        &self.y_faces
    }
}

fn face_slot(faces: &[f64], v: f64) -> usize {
    let cells = faces.len() - 1;
    // first cell whose upper face is >= v
    let slot = faces[1..].partition_point(|&f| f < v);
    slot.min(cells - 1)
}

/// Partition-of-unity flavour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PouKind {
    /// `1` on `[-1, 1]`, `0` elsewhere.
    #[default]
    Indicator,
    /// Sine blend on `3/4 ≤ |x| ≤ 5/4`.
    Smooth,
}

/// One-dimensional weight and its derivative with respect to the local coordinate.
pub fn pou_weight_1d(kind: PouKind, t: f64) -> (f64, f64) {
    use std::f64::consts::PI;
    match kind {
        PouKind::Indicator => {
            if (-1.0..=1.0).contains(&t) {
                (1.0, 0.0)
            } else {
                (0.0, 0.0)
            }
        }
        PouKind::Smooth => {
            let a = t.abs();
            if a <= 0.75 {
                (1.0, 0.0)
            } else if a > 1.25 {
                (0.0, 0.0)
            } else if t < 0.0 {
                (
                    0.5 * (1.0 + (2.0 * PI * t).sin()),
                    PI * (2.0 * PI * t).cos(),
                )
            } else {
                (
                    0.5 * (1.0 - (2.0 * PI * t).sin()),
                    -PI * (2.0 * PI * t).cos(),
                )
            }
        }
    }
}

/// Product of the per-axis weights at a local point of any dimension.
pub fn pou_weight(kind: PouKind, x_local: &[f64]) -> f64 {
    x_local
        .iter()
        .map(|&t| pou_weight_1d(kind, t).0)
        .product()
}

/// Role of a collocation point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointRole {
    Interior,
    Boundary,
    Interface,
}

/// Neighbor across a shared face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceLink {
    pub neighbor: usize,
    /// Axis normal to the shared face.
    pub axis: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterfacePoint {
    pub point: Point,
    /// One link per neighbor whose face contains the point (two at interior
    /// cross corners).
    pub links: Vec<InterfaceLink>,
}

/// Collocation points of one subdomain.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SubdomainPoints {
    pub interior: Vec<Point>,
    /// Points on the outer boundary of the domain.
    pub boundary: Vec<Point>,
    /// Points on faces shared with neighbors.
    pub interface: Vec<InterfacePoint>,
}

impl SubdomainPoints {
    pub fn len(&self) -> usize {
        self.interior.len() + self.boundary.len() + self.interface.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every point with its role, interior first.
    pub fn iter(&self) -> impl Iterator<Item = (Point, PointRole)> + '_ {
        self.interior
            .iter()
            .map(|&p| (p, PointRole::Interior))
            .chain(self.boundary.iter().map(|&p| (p, PointRole::Boundary)))
            .chain(
                self.interface
                    .iter()
                    .map(|ip| (ip.point, PointRole::Interface)),
            )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollocationSet {
    pub per_subdomain: Vec<SubdomainPoints>,
}

impl CollocationSet {
    pub fn total(&self) -> usize {
        self.per_subdomain.iter().map(SubdomainPoints::len).sum()
    }

    pub fn interior_total(&self) -> usize {
        self.per_subdomain.iter().map(|s| s.interior.len()).sum()
    }
}

/// Tensor-grid collocation: `qx × qy` points per subdomain including its frame.
///
/// Frame points on `∂Ω` are tagged boundary; frame points on shared faces are
/// tagged interface with links to every neighbor sharing that face. When
/// `points_per_interface_edge` is given, the points strictly inside each
/// shared edge are respaced to that count (endpoints included in the count);
/// `None` keeps the grid spacing, i.e. `qx` (resp. `qy`) points per edge.
pub fn sample_collocation(
    partition: &Partition,
    qx: usize,
    qy: usize,
    points_per_interface_edge: Option<usize>,
) -> Result<CollocationSet> {
    if qx < 2 || qy < 2 {
        return Err(AfcmError::InvalidArgument(format!(
            "collocation grid needs at least 2 points per axis, got {qx} x {qy}"
        )));
    }
    if matches!(points_per_interface_edge, Some(p) if p < 2) {
        return Err(AfcmError::InvalidArgument(
            "interface edges need at least 2 points".into(),
        ));
    }
    let per_subdomain = partition
        .subdomains
        .iter()
        .map(|sub| subdomain_points(partition, sub, qx, qy, points_per_interface_edge))
        .collect();
    Ok(CollocationSet { per_subdomain })
}

fn subdomain_points(
    partition: &Partition,
    sub: &Subdomain,
    qx: usize,
    qy: usize,
    edge_override: Option<usize>,
) -> SubdomainPoints {
    let (gx, gy) = sub.grid_index;
    let xs = linspace(sub.lower[0], sub.upper[0], qx);
    let ys = linspace(sub.lower[1], sub.upper[1], qy);
    let has_left = gx > 0;
    let has_right = gx + 1 < partition.nx;
    let has_below = gy > 0;
    let has_above = gy + 1 < partition.ny;

    let links_at = |left: bool, right: bool, below: bool, above: bool| {
        let mut links = Vec::new();
        if left && has_left {
            links.push(InterfaceLink { neighbor: partition.index(gx - 1, gy), axis: 0 });
        }
        if right && has_right {
            links.push(InterfaceLink { neighbor: partition.index(gx + 1, gy), axis: 0 });
        }
        if below && has_below {
            links.push(InterfaceLink { neighbor: partition.index(gx, gy - 1), axis: 1 });
        }
        if above && has_above {
            links.push(InterfaceLink { neighbor: partition.index(gx, gy + 1), axis: 1 });
        }
        links
    };

    let mut pts = SubdomainPoints::default();
    for (iy, &y) in ys.iter().enumerate() {
        for (ix, &x) in xs.iter().enumerate() {
            let left = ix == 0;
            let right = ix == qx - 1;
            let below = iy == 0;
            let above = iy == qy - 1;
            if !(left || right || below || above) {
                pts.interior.push([x, y]);
                continue;
            }
            let on_outer = (left && !has_left)
                || (right && !has_right)
                || (below && !has_below)
                || (above && !has_above);
            if on_outer {
                pts.boundary.push([x, y]);
                continue;
            }
            let corner = (left || right) && (below || above);
            if edge_override.is_some() && !corner {
                // respaced below
                continue;
            }
            pts.interface.push(InterfacePoint {
                point: [x, y],
                links: links_at(left, right, below, above),
            });
        }
    }

    if let Some(p) = edge_override {
        let inner = |a: f64, b: f64| {
            let v = linspace(a, b, p);
            v[1..p - 1].to_vec()
        };
        let vertical = [(has_left, sub.lower[0], true), (has_right, sub.upper[0], false)];
        for (present, x, is_left) in vertical {
            if present {
                for y in inner(sub.lower[1], sub.upper[1]) {
                    pts.interface.push(InterfacePoint {
                        point: [x, y],
                        links: links_at(is_left, !is_left, false, false),
                    });
                }
            }
        }
        let horizontal = [(has_below, sub.lower[1], true), (has_above, sub.upper[1], false)];
        for (present, y, is_below) in horizontal {
            if present {
                for x in inner(sub.lower[0], sub.upper[0]) {
                    pts.interface.push(InterfacePoint {
                        point: [x, y],
                        links: links_at(false, false, is_below, !is_below),
                    });
                }
            }
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square() -> Domain {
        Domain::new([-1.0, -1.0], [1.0, 1.0]).unwrap()
    }

    #[test]
    fn three_by_three_partition_radii() {
        let p = build_partition(square(), 3, 3).unwrap();
        assert_eq!(p.len(), 9);
        for s in &p.subdomains {
            assert!((s.radius[0] - 1.0 / 3.0).abs() < 1e-15);
            assert!((s.radius[1] - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_split() {
        let p = build_partition(square(), 1, 1).unwrap();
        assert_eq!(p.subdomains[0].center, [0.0, 0.0]);
        assert_eq!(p.subdomains[0].radius, [1.0, 1.0]);
    }

    #[test]
    fn unit_square_split_in_two() {
        let d = Domain::new([0.0, 0.0], [1.0, 1.0]).unwrap();
        let p = build_partition(d, 2, 1).unwrap();
        assert_eq!(p.subdomains[0].center, [0.25, 0.5]);
        assert_eq!(p.subdomains[1].center, [0.75, 0.5]);
        assert_eq!(p.subdomains[0].radius, [0.25, 0.5]);
        assert_eq!(p.subdomains[1].radius, [0.25, 0.5]);
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(build_partition(square(), 0, 2).is_err());
        assert!(build_partition(square(), 2, 0).is_err());
        assert!(Domain::new([1.0, 0.0], [0.0, 1.0]).is_err());
    }

    #[test]
    fn local_transform_examples() {
        let unit = Subdomain::from_bounds([-1.0, -1.0], [1.0, 1.0], (0, 0));
        assert_eq!(unit.to_local([0.5, 0.5]), [0.5, 0.5]);
        let s = Subdomain::from_bounds([0.0, 0.0], [0.5, 1.0], (0, 0));
        assert_eq!(s.to_local([0.5, 1.0]), [1.0, 1.0]);
        assert_eq!(s.to_local(s.center), [0.0, 0.0]);
    }

    #[test]
    fn corners_map_to_unit_square_corners() {
        let d = Domain::new([-0.3, 2.0], [1.7, 5.5]).unwrap();
        let p = build_partition(d, 3, 4).unwrap();
        for s in &p.subdomains {
            for c in [
                s.lower,
                s.upper,
                [s.lower[0], s.upper[1]],
                [s.upper[0], s.lower[1]],
            ] {
                let l = s.to_local(c);
                for v in l {
                    assert!((v.abs() - 1.0).abs() < 1e-14, "{l:?}");
                }
            }
        }
    }

    #[test]
    fn pou_examples() {
        assert_eq!(pou_weight(PouKind::Indicator, &[0.5, -0.9]), 1.0);
        assert_eq!(pou_weight(PouKind::Indicator, &[1.2, 0.0]), 0.0);
        assert!((pou_weight(PouKind::Smooth, &[1.0]) - 0.5).abs() < 1e-15);
        assert!(pou_weight(PouKind::Smooth, &[1.25]).abs() < 1e-15);
        assert!(pou_weight(PouKind::Smooth, &[-1.25]).abs() < 1e-15);
        assert_eq!(pou_weight(PouKind::Smooth, &[0.7, -0.2]), 1.0);
    }

    #[test]
    fn smooth_pou_derivative_matches_difference() {
        let h = 1e-6;
        for &t in &[-1.2, -1.0, -0.8, 0.8, 0.9, 1.1, 1.24] {
            let (_, d) = pou_weight_1d(PouKind::Smooth, t);
            let fd = (pou_weight_1d(PouKind::Smooth, t + h).0
                - pou_weight_1d(PouKind::Smooth, t - h).0)
                / (2.0 * h);
            assert!((d - fd).abs() < 1e-6, "t={t}: {d} vs {fd}");
        }
    }

    #[test]
    fn single_subdomain_three_by_three_grid() {
        let p = build_partition(square(), 1, 1).unwrap();
        let c = sample_collocation(&p, 3, 3, None).unwrap();
        let s = &c.per_subdomain[0];
        assert_eq!(s.len(), 9);
        assert_eq!(s.boundary.len(), 8);
        assert_eq!(s.interior, vec![[0.0, 0.0]]);
        assert!(s.interface.is_empty());
    }

    #[test]
    fn full_scale_grid_counts() {
        let p = build_partition(square(), 3, 3).unwrap();
        let c = sample_collocation(&p, 79, 79, None).unwrap();
        for s in &c.per_subdomain {
            assert_eq!(s.len(), 79 * 79);
            assert_eq!(s.interior.len(), 77 * 77);
        }
    }

    #[test]
    fn shared_face_points_are_tagged_with_neighbors() {
        let d = Domain::new([0.0, 0.0], [1.0, 1.0]).unwrap();
        let p = build_partition(d, 2, 1).unwrap();
        let c = sample_collocation(&p, 5, 5, None).unwrap();
        let left = &c.per_subdomain[0];
        let right = &c.per_subdomain[1];
        assert_eq!(left.interface.len(), 3);
        assert_eq!(right.interface.len(), 3);
        for (a, b) in left.interface.iter().zip(&right.interface) {
            assert_eq!(a.point[0], 0.5);
            assert_eq!(a.point, b.point);
            assert_eq!(a.links, vec![InterfaceLink { neighbor: 1, axis: 0 }]);
            assert_eq!(b.links, vec![InterfaceLink { neighbor: 0, axis: 0 }]);
        }
        // face endpoints lie on the outer boundary
        assert!(left.boundary.contains(&[0.5, 0.0]));
        assert!(left.boundary.contains(&[0.5, 1.0]));
    }

    #[test]
    fn cross_corner_links_both_neighbors() {
        let p = build_partition(square(), 2, 2).unwrap();
        let c = sample_collocation(&p, 4, 4, None).unwrap();
        let corner = c.per_subdomain[0]
            .interface
            .iter()
            .find(|ip| ip.point == [0.0, 0.0])
            .unwrap();
        assert_eq!(
            corner.links,
            vec![
                InterfaceLink { neighbor: 1, axis: 0 },
                InterfaceLink { neighbor: 2, axis: 1 }
            ]
        );
    }

    #[test]
    fn respaced_interface_edges() {
        let p = build_partition(square(), 2, 1).unwrap();
        let c = sample_collocation(&p, 6, 6, Some(9)).unwrap();
        // 9 points per edge, both endpoints on the outer boundary
        assert_eq!(c.per_subdomain[0].interface.len(), 7);
        let a: Vec<_> = c.per_subdomain[0].interface.iter().map(|p| p.point).collect();
        let b: Vec<_> = c.per_subdomain[1].interface.iter().map(|p| p.point).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn locate_prefers_lower_index_on_faces() {
        let p = build_partition(square(), 2, 2).unwrap();
        assert_eq!(p.locate([0.0, 0.0]), 0);
        assert_eq!(p.locate([0.5, 0.0]), 1);
        assert_eq!(p.locate([0.0, 0.5]), 2);
        assert_eq!(p.locate([1.0, 1.0]), 3);
        assert_eq!(p.locate([-1.0, -1.0]), 0);
    }

    #[test]
    fn smooth_pou_partition_of_unity_on_overlap() {
        // adjacent unit subdomains centred at 0 and 2
        for i in 0..=200 {
            let x = 0.75 + 0.5 * i as f64 / 200.0;
            let a = pou_weight_1d(PouKind::Smooth, x).0;
            let b = pou_weight_1d(PouKind::Smooth, x - 2.0).0;
            assert!((a + b - 1.0).abs() < 1e-12, "x={x}: {}", a + b);
        }
    }

    proptest! {
        #[test]
        fn indicator_weights_sum_to_one(x in -0.999f64..0.999, y in -0.999f64..0.999) {
            let p = build_partition(square(), 3, 2).unwrap();
            let on_face = p.x_faces().iter().any(|&f| f == x) || p.y_faces().iter().any(|&f| f == y);
            prop_assume!(!on_face);
            let total: f64 = p
                .subdomains
                .iter()
                .map(|s| pou_weight(PouKind::Indicator, &s.to_local([x, y])))
                .sum();
            prop_assert_eq!(total, 1.0);
        }

        #[test]
        fn local_transform_round_trip(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let p = build_partition(Domain::new([-2.0, 0.5], [3.0, 1.5]).unwrap(), 3, 5).unwrap();
            for s in &p.subdomains {
                let back = s.to_global(s.to_local([x, y]));
                prop_assert!((back[0] - x).abs() <= 1e-14 * (1.0 + x.abs()));
                prop_assert!((back[1] - y).abs() <= 1e-14 * (1.0 + y.abs()));
            }
        }

        #[test]
        fn collocation_counts_cover_grid(nx in 1usize..4, ny in 1usize..4, qx in 2usize..9, qy in 2usize..9) {
            let p = build_partition(square(), nx, ny).unwrap();
            let c = sample_collocation(&p, qx, qy, None).unwrap();
            for (s, pts) in p.subdomains.iter().zip(&c.per_subdomain) {
                prop_assert_eq!(pts.len(), qx * qy);
                for (x, role) in pts.iter() {
                    prop_assert!(s.contains(x));
                    if role == PointRole::Boundary {
                        let d = &p.domain;
                        prop_assert!(x[0] == d.lower[0] || x[0] == d.upper[0] || x[1] == d.lower[1] || x[1] == d.upper[1]);
                    }
                }
                for ip in &pts.interface {
                    for l in &ip.links {
                        prop_assert!(p.subdomains[l.neighbor].contains(ip.point));
                    }
                }
            }
        }
    }
}
