//! Rescaled least-squares assembly with `C¹` continuity rows across
//! subdomain faces.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{AfcmError, Result};
use crate::features::FeatureSet;
use crate::geometry::{CollocationSet, Partition, Point, PointRole, DIM};
use crate::lstsq::solve_dense;
use crate::operator::{basis_derivatives, BasisEval, BoundarySource, ProblemDefinition};
use crate::par;
use crate::solution::{ColumnLayout, Solution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowTag {
    Pde,
    Boundary,
    ContinuityValue,
    ContinuityGradient,
}

/// Column identity: `(subdomain, feature, component)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ColumnKey {
    pub subdomain: usize,
    pub feature: usize,
    pub component: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Target max-abs entry of every row after rescaling.
    pub rescale: f64,
    /// Relative singular value cutoff.
    pub rank_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            rescale: 1.0,
            rank_tol: 1e-10,
        }
    }
}

pub struct LinearSystem {
    pub matrix: Mat<f64>,
    pub rhs: Vec<f64>,
    pub tags: Vec<RowTag>,
    /// Rescaling factor applied to each kept row.
    pub scales: Vec<f64>,
    pub columns: Vec<ColumnKey>,
    pub layout: ColumnLayout,
    /// Rows removed because every entry was zero.
    pub dropped_rows: usize,
}

impl LinearSystem {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn count(&self, tag: RowTag) -> usize {
        self.tags.iter().filter(|t| **t == tag).count()
    }
}

/// `c / max_j |entry_j|`, or `None` for a row without any nonzero entry.
pub fn rescaling_factor(entries: &[f64], c: f64) -> Option<f64> {
    let max = entries.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (max > 0.0).then(|| c / max)
}

/// Per-row factors for a batch of rows.
pub fn compute_rescaling<'a, I>(rows: I, c: f64) -> Vec<Option<f64>>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    rows.into_iter().map(|r| rescaling_factor(r, c)).collect()
}

struct Row {
    tag: RowTag,
    /// Contiguous runs `(first column, values)`.
    segments: Vec<(usize, Vec<f64>)>,
    rhs: f64,
}

impl Row {
    fn max_abs(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|(_, v)| v.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

struct PointTask {
    subdomain: usize,
    point: Point,
    role: PointRole,
    /// Index into the subdomain's interface list.
    interface: Option<usize>,
}

fn point_tasks(colloc: &CollocationSet) -> Vec<PointTask> {
    let mut tasks = Vec::with_capacity(colloc.total());
    for (n, pts) in colloc.per_subdomain.iter().enumerate() {
        for &p in &pts.interior {
            tasks.push(PointTask { subdomain: n, point: p, role: PointRole::Interior, interface: None });
        }
        for &p in &pts.boundary {
            tasks.push(PointTask { subdomain: n, point: p, role: PointRole::Boundary, interface: None });
        }
        for (k, ip) in pts.interface.iter().enumerate() {
            tasks.push(PointTask {
                subdomain: n,
                point: ip.point,
                role: PointRole::Interface,
                interface: Some(k),
            });
        }
    }
    tasks
}

fn evals(partition: &Partition, features: &FeatureSet, n: usize, x: Point) -> Vec<BasisEval> {
    let sub = &partition.subdomains[n];
    features.per_subdomain[n]
        .iter()
        .map(|f| basis_derivatives(features.activation, f, sub, x))
        .collect()
}

fn rows_at(
    task: &PointTask,
    problem: &ProblemDefinition,
    partition: &Partition,
    features: &FeatureSet,
    colloc: &CollocationSet,
    layout: &ColumnLayout,
) -> Vec<Row> {
    let n = task.subdomain;
    let x = task.point;
    let e = evals(partition, features, n, x);
    let mut rows = Vec::new();
    for (i, op) in problem.operator.components.iter().enumerate() {
        let pop = op.at(x);
        rows.push(Row {
            tag: RowTag::Pde,
            segments: vec![(layout.column(n, i, 0), e.iter().map(|b| pop.apply(b)).collect())],
            rhs: (problem.source)(x, i),
        });
    }
    match task.role {
        PointRole::Interior => {}
        PointRole::Boundary => {
            let src = problem.boundary_source(&partition.domain, x);
            if src != BoundarySource::None {
                for i in 0..problem.components() {
                    rows.push(Row {
                        tag: RowTag::Boundary,
                        segments: vec![(layout.column(n, i, 0), e.iter().map(|b| b.value).collect())],
                        rhs: problem.boundary_value(src, x, i),
                    });
                }
            }
        }
        PointRole::Interface => {
            let ip = &colloc.per_subdomain[n].interface[task.interface.unwrap_or(0)];
            for link in ip.links.iter().filter(|l| l.neighbor > n) {
                let m = link.neighbor;
                let em = evals(partition, features, m, x);
                for i in 0..problem.components() {
                    let jump = |tag, f: &dyn Fn(&BasisEval) -> f64| Row {
                        tag,
                        segments: vec![
                            (layout.column(n, i, 0), e.iter().map(f).collect()),
                            (layout.column(m, i, 0), em.iter().map(|b| -f(b)).collect()),
                        ],
                        rhs: 0.0,
                    };
                    rows.push(jump(RowTag::ContinuityValue, &|b| b.value));
                    for axis in 0..DIM {
                        rows.push(jump(RowTag::ContinuityGradient, &|b| b.gradient[axis]));
                    }
                }
            }
        }
    }
    rows
}

/// Builds the rescaled system: PDE rows at every collocation point, Dirichlet
/// rows at boundary points on Dirichlet sides, and value plus gradient jump
/// rows at interface points (emitted once per pair of neighbors).
pub fn assemble_system(
    problem: &ProblemDefinition,
    partition: &Partition,
    features: &FeatureSet,
    colloc: &CollocationSet,
    rescale: f64,
) -> Result<LinearSystem> {
    if !(rescale > 0.0) {
        return Err(AfcmError::InvalidArgument("rescaling constant must be positive".into()));
    }
    let nsub = partition.len();
    if features.per_subdomain.len() != nsub || colloc.per_subdomain.len() != nsub {
        return Err(AfcmError::InvalidArgument(format!(
            "partition has {nsub} subdomains, features {}, collocation {}",
            features.per_subdomain.len(),
            colloc.per_subdomain.len()
        )));
    }
    for n in 0..nsub {
        if features.per_subdomain[n].is_empty() {
            return Err(AfcmError::InvalidArgument(format!("subdomain {n} has no features")));
        }
        if colloc.per_subdomain[n].is_empty() {
            return Err(AfcmError::InvalidArgument(format!(
                "subdomain {n} has no collocation points"
            )));
        }
    }
    let components = problem.components();
    if components == 0 {
        return Err(AfcmError::InvalidArgument("problem has no components".into()));
    }
    let layout = ColumnLayout::new(&features.counts(), components);
    let cols = layout.total();

    let tasks = point_tasks(colloc);
    let per_point = par::map_collect(&tasks, |t| rows_at(t, problem, partition, features, colloc, &layout));

    let mut kept = Vec::new();
    let mut dropped = 0;
    for row in per_point.into_iter().flatten() {
        let max = row.max_abs();
        if max > 0.0 {
            kept.push((row, rescale / max));
        } else if max.is_nan() {
            kept.push((row, 1.0));
        } else {
            dropped += 1;
        }
    }
    if kept.len() < cols {
        return Err(AfcmError::Underdetermined {
            rows: kept.len(),
            cols,
            dropped,
        });
    }

    let mut matrix = Mat::<f64>::zeros(kept.len(), cols);
    let mut rhs = Vec::with_capacity(kept.len());
    let mut tags = Vec::with_capacity(kept.len());
    let mut scales = Vec::with_capacity(kept.len());
    for (r, (row, s)) in kept.iter().enumerate() {
        for (start, vals) in &row.segments {
            for (k, v) in vals.iter().enumerate() {
                matrix[(r, start + k)] = v * s;
            }
        }
        rhs.push(row.rhs * s);
        tags.push(row.tag);
        scales.push(*s);
    }

    let mut columns = Vec::with_capacity(cols);
    for n in 0..nsub {
        for i in 0..components {
            for j in 0..layout.count(n) {
                columns.push(ColumnKey { subdomain: n, feature: j, component: i });
            }
        }
    }

    Ok(LinearSystem {
        matrix,
        rhs,
        tags,
        scales,
        columns,
        layout,
        dropped_rows: dropped,
    })
}

/// Coefficients, residual norm of the rescaled system and numerical rank.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSolution {
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    pub rank: usize,
}

pub fn solve_lstsq(system: &LinearSystem, rank_tol: f64) -> Result<SystemSolution> {
    let s = solve_dense(system.matrix.as_ref(), &system.rhs, rank_tol)?;
    Ok(SystemSolution {
        coefficients: s.coefficients,
        residual_norm: s.residual_norm,
        rank: s.rank,
    })
}

/// Diagnostics of one assemble-and-solve pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub rows: usize,
    pub cols: usize,
    pub dropped_rows: usize,
    pub rank: usize,
    pub residual_norm: f64,
}

pub fn assemble_and_solve(
    problem: &ProblemDefinition,
    partition: &Partition,
    features: &FeatureSet,
    colloc: &CollocationSet,
    cfg: &SolveConfig,
) -> Result<(Solution, SolveStats)> {
    let system = assemble_system(problem, partition, features, colloc, cfg.rescale)?;
    let sol = solve_lstsq(&system, cfg.rank_tol)?;
    let stats = SolveStats {
        rows: system.rows(),
        cols: system.cols(),
        dropped_rows: system.dropped_rows,
        rank: sol.rank,
        residual_norm: sol.residual_norm,
    };
    drop(system);
    Ok((
        Solution::new(partition.clone(), features.clone(), sol.coefficients, problem.components()),
        stats,
    ))
}
