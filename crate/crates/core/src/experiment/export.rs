//! CSV writers for error histories, fields and adaptation state.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{AfcmError, Result};
use crate::features::{hyperplane_density, FeatureSet};
use crate::geometry::{CollocationSet, Domain, Partition, Point, PointRole};
use crate::par;
use crate::solution::Solution;

/// Scientific notation with ten significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.9e}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

/// `iteration,linf,l2`, one row per entry.
pub fn write_errors_csv(path: &Path, rows: &[(usize, f64, f64)]) -> Result<()> {
    let mut out = String::from("iteration,linf,l2\n");
    for (k, linf, l2) in rows {
        let _ = writeln!(out, "{k},{},{}", fmt_num(*linf), fmt_num(*l2));
    }
    write_text(path, &out)
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub lower: Point,
    pub upper: Point,
}

impl Window {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) {
            return Err(AfcmError::Config(format!(
                "window needs x0 < x1 and y0 < y1, got {x0},{y0},{x1},{y1}"
            )));
        }
        Ok(Self {
            lower: [x0, y0],
            upper: [x1, y1],
        })
    }

    /// Parses `x0,y0,x1,y1`.
    pub fn parse(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| AfcmError::Config(format!("window {s:?} is not four numbers")))?;
        match v[..] {
            [x0, y0, x1, y1] => Self::new(x0, y0, x1, y1),
            _ => Err(AfcmError::Config(format!("window {s:?} is not four numbers"))),
        }
    }

    pub fn full(domain: &Domain) -> Self {
        Self {
            lower: domain.lower,
            upper: domain.upper,
        }
    }

    fn inside(&self, domain: &Domain) -> bool {
        (0..2).all(|i| self.lower[i] >= domain.lower[i] && self.upper[i] <= domain.upper[i])
    }

    /// `resolution × resolution` points, row-major in `y`.
    pub fn grid(&self, resolution: usize) -> Vec<Point> {
        let d = Domain {
            lower: self.lower,
            upper: self.upper,
        };
        d.grid(resolution, resolution)
    }
}

/// Values and gradient norms of `sol` on a uniform grid over `window`.
pub fn export_field(sol: &Solution, window: Window, resolution: usize, path: &Path) -> Result<()> {
    if resolution < 2 {
        return Err(AfcmError::Config("resolution must be at least 2".into()));
    }
    if !window.inside(&sol.partition.domain) {
        return Err(AfcmError::Config(format!(
            "window {:?}..{:?} leaves the domain {:?}..{:?}",
            window.lower, window.upper, sol.partition.domain.lower, sol.partition.domain.upper
        )));
    }
    let pts = window.grid(resolution);
    let rows = par::map_collect(&pts, |&x| {
        let e = &sol.evaluate(x)[0];
        (e.value, e.gradient[0].hypot(e.gradient[1]))
    });
    let mut out = String::from("x,y,value,grad_norm\n");
    for (x, (v, g)) in pts.iter().zip(rows) {
        let _ = writeln!(out, "{},{},{},{}", fmt_num(x[0]), fmt_num(x[1]), fmt_num(v), fmt_num(g));
    }
    write_text(path, &out)
}

/// Hyperplane density of the owning subdomain's features on a uniform grid.
pub fn density_grid(
    partition: &Partition,
    features: &FeatureSet,
    tau: f64,
    resolution: usize,
) -> Result<Vec<(Point, f64)>> {
    let pts = partition.domain.grid(resolution, resolution);
    let d = par::map_collect(&pts, |&x| {
        let n = partition.locate(x);
        let xl = partition.subdomains[n].to_local(x);
        hyperplane_density(features.per_subdomain[n].iter().map(|f| &f.plane), xl, tau)
    });
    pts.into_iter()
        .zip(d)
        .map(|(x, v)| v.map(|v| (x, v)))
        .collect()
}

fn role_name(r: PointRole) -> &'static str {
    match r {
        PointRole::Interior => "interior",
        PointRole::Boundary => "boundary",
        PointRole::Interface => "interface",
    }
}

/// Writes `density.csv`, `points.csv` and `gammas.csv` for one iterate into
/// `dir`.
pub fn export_adaptation_state(
    partition: &Partition,
    features: &FeatureSet,
    collocation: &CollocationSet,
    tau: f64,
    resolution: usize,
    dir: &Path,
) -> Result<()> {
    let mut out = String::from("x,y,density\n");
    for (x, v) in density_grid(partition, features, tau, resolution)? {
        let _ = writeln!(out, "{},{},{}", fmt_num(x[0]), fmt_num(x[1]), fmt_num(v));
    }
    write_text(&dir.join("density.csv"), &out)?;

    let mut out = String::from("x,y,subdomain,role\n");
    for (n, sp) in collocation.per_subdomain.iter().enumerate() {
        for (x, role) in sp.iter() {
            let _ = writeln!(out, "{},{},{n},{}", fmt_num(x[0]), fmt_num(x[1]), role_name(role));
        }
    }
    write_text(&dir.join("points.csv"), &out)?;

    let mut out = String::from("x,y,subdomain,gamma\n");
    for (n, fs) in features.per_subdomain.iter().enumerate() {
        let sub = &partition.subdomains[n];
        for f in fs {
            let x = sub.to_global(f.plane.anchor);
            let _ = writeln!(out, "{},{},{n},{}", fmt_num(x[0]), fmt_num(x[1]), fmt_num(f.shape));
        }
    }
    write_text(&dir.join("gammas.csv"), &out)
}

/// Parses a CSV written by this module into a header and numeric rows;
/// non-numeric cells become `NaN`.
pub fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| AfcmError::Config(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    Ok((header, rows))
}
