//! Linear second-order operators, problem definitions and the analytic
//! derivatives of a single feature function.

use std::fmt;
use std::sync::Arc;

use crate::features::{Activation, FeatureFunction};
use crate::geometry::{Domain, Point, Subdomain, DIM};

/// Scalar coefficient field of the global point.
pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Field with one value per solution component: `f(x, component)`.
pub type ComponentField = Arc<dyn Fn(Point, usize) -> f64 + Send + Sync>;

#[derive(Clone, Default)]
pub enum Coefficient {
    #[default]
    Zero,
    Constant(f64),
    Field(ScalarField),
}

impl Coefficient {
    #[inline]
    pub fn at(&self, x: Point) -> f64 {
        match self {
            Coefficient::Zero => 0.0,
            Coefficient::Constant(c) => *c,
            Coefficient::Field(f) => f(x),
        }
    }

    pub fn field<F>(f: F) -> Self
    where
        F: Fn(Point) -> f64 + Send + Sync + 'static,
    {
        Coefficient::Field(Arc::new(f))
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Zero => write!(f, "Zero"),
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Field(_) => write!(f, "Field(..)"),
        }
    }
}

/// `Σ a_ij ∂_ij u + Σ b_i ∂_i u + c u` for one solution component.
#[derive(Clone, Debug, Default)]
pub struct LinearOperator {
    pub second: [[Coefficient; DIM]; DIM],
    pub first: [Coefficient; DIM],
    pub zeroth: Coefficient,
}

impl LinearOperator {
    pub fn identity() -> Self {
        Self {
            zeroth: Coefficient::Constant(1.0),
            ..Self::default()
        }
    }

    /// `scale · Δ`.
    pub fn laplacian(scale: f64) -> Self {
        let mut op = Self::default();
        op.second[0][0] = Coefficient::Constant(scale);
        op.second[1][1] = Coefficient::Constant(scale);
        op
    }

    /// Coefficients frozen at `x`.
    #[inline]
    pub fn at(&self, x: Point) -> PointOperator {
        PointOperator {
            second: [
                [self.second[0][0].at(x), self.second[0][1].at(x)],
                [self.second[1][0].at(x), self.second[1][1].at(x)],
            ],
            first: [self.first[0].at(x), self.first[1].at(x)],
            zeroth: self.zeroth.at(x),
        }
    }
}

/// A [`LinearOperator`] with its coefficients evaluated at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointOperator {
    pub second: [[f64; DIM]; DIM],
    pub first: [f64; DIM],
    pub zeroth: f64,
}

impl PointOperator {
    #[inline]
    pub fn apply(&self, e: &BasisEval) -> f64 {
        let mut acc = self.zeroth * e.value;
        for i in 0..DIM {
            acc += self.first[i] * e.gradient[i];
            for j in 0..DIM {
                acc += self.second[i][j] * e.hessian[i][j];
            }
        }
        acc
    }
}

/// Interior operator per solution component; the boundary operator is the
/// Dirichlet trace.
#[derive(Clone, Debug)]
pub struct OperatorSpec {
    pub components: Vec<LinearOperator>,
}

impl OperatorSpec {
    pub fn scalar(op: LinearOperator) -> Self {
        Self {
            components: vec![op],
        }
    }
}

/// Which sides of the rectangle carry Dirichlet rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DirichletSides {
    pub left: bool,
    pub right: bool,
    pub bottom: bool,
    pub top: bool,
}

impl DirichletSides {
    pub const ALL: Self = Self {
        left: true,
        right: true,
        bottom: true,
        top: true,
    };

    /// Space-time layout: spatial walls plus the initial line `t = t0`.
    pub const SPACE_TIME: Self = Self {
        left: true,
        right: true,
        bottom: true,
        top: false,
    };
}

/// Where a boundary point gets its Dirichlet value from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundarySource {
    None,
    Boundary,
    Initial,
}

/// `L φ = f` in the domain, `φ = g` on the Dirichlet sides and, for
/// space-time problems, `φ = h` on the initial line.
#[derive(Clone)]
pub struct ProblemDefinition {
    pub operator: OperatorSpec,
    pub source: ComponentField,
    pub boundary: ComponentField,
    pub initial: Option<ComponentField>,
    pub dirichlet: DirichletSides,
}

impl fmt::Debug for ProblemDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDefinition")
            .field("operator", &self.operator)
            .field("components", &self.components())
            .field("has_initial", &self.initial.is_some())
            .field("dirichlet", &self.dirichlet)
            .finish()
    }
}

impl ProblemDefinition {
    pub fn components(&self) -> usize {
        self.operator.components.len()
    }

    /// Dirichlet data source for a point of `∂Ω`.
    pub fn boundary_source(&self, domain: &Domain, x: Point) -> BoundarySource {
        let d = &self.dirichlet;
        let on_wall = (d.left && x[0] == domain.lower[0])
            || (d.right && x[0] == domain.upper[0])
            || (d.top && x[1] == domain.upper[1]);
        let on_bottom = d.bottom && x[1] == domain.lower[1];
        if on_wall {
            BoundarySource::Boundary
        } else if on_bottom {
            if self.initial.is_some() {
                BoundarySource::Initial
            } else {
                BoundarySource::Boundary
            }
        } else {
            BoundarySource::None
        }
    }

    pub fn boundary_value(&self, src: BoundarySource, x: Point, component: usize) -> f64 {
        match (src, &self.initial) {
            (BoundarySource::Initial, Some(h)) => h(x, component),
            _ => (self.boundary)(x, component),
        }
    }
}

/// Value, gradient and Hessian of one feature at a global point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BasisEval {
    pub value: f64,
    pub gradient: [f64; DIM],
    pub hessian: [[f64; DIM]; DIM],
}

impl BasisEval {
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = *self;
        out.value *= s;
        for i in 0..DIM {
            out.gradient[i] *= s;
            for j in 0..DIM {
                out.hessian[i][j] *= s;
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.value += other.value;
        for i in 0..DIM {
            self.gradient[i] += other.gradient[i];
            for j in 0..DIM {
                self.hessian[i][j] += other.hessian[i][j];
            }
        }
    }

    pub fn laplacian(&self) -> f64 {
        (0..DIM).map(|i| self.hessian[i][i]).sum()
    }
}

/// Chain rule through the local transform: `∂_i φ = σ'(z) γ a_i / r_i`,
/// `∂_ij φ = σ''(z) γ² a_i a_j / (r_i r_j)` with `z = γ (a · x̃ + r)`.
#[inline]
pub fn basis_derivatives(
    activation: Activation,
    f: &FeatureFunction,
    sub: &Subdomain,
    x: Point,
) -> BasisEval {
    let xl = sub.to_local(x);
    let [s0, s1, s2] = activation.eval_all(f.preactivation(xl));
    let w = [
        f.shape * f.plane.normal[0] / sub.radius[0],
        f.shape * f.plane.normal[1] / sub.radius[1],
    ];
    BasisEval {
        value: s0,
        gradient: [s1 * w[0], s1 * w[1]],
        hessian: [
            [s2 * w[0] * w[0], s2 * w[0] * w[1]],
            [s2 * w[1] * w[0], s2 * w[1] * w[1]],
        ],
    }
}

/// Value only, skipping derivative work.
#[inline]
pub fn basis_value(activation: Activation, f: &FeatureFunction, sub: &Subdomain, x: Point) -> f64 {
    activation.eval_all(f.preactivation(sub.to_local(x)))[0]
}

/// `L_component φ(x)` for one feature.
pub fn apply_operator(
    op: &OperatorSpec,
    activation: Activation,
    f: &FeatureFunction,
    sub: &Subdomain,
    x: Point,
    component: usize,
) -> f64 {
    let e = basis_derivatives(activation, f, sub, x);
    op.components[component].at(x).apply(&e)
}
