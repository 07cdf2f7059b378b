//! Relative error norms.

use crate::error::{AfcmError, Result};
use crate::geometry::Point;
use crate::par;
use crate::solution::Solution;

/// Relative `(L∞, L²)` errors of `approx` against `exact` sampled at the same
/// points.
pub fn relative_error_values(approx: &[f64], exact: &[f64]) -> Result<(f64, f64)> {
    if approx.is_empty() || approx.len() != exact.len() {
        return Err(AfcmError::InvalidArgument(format!(
            "error norms need matching non-empty samples ({} vs {})",
            approx.len(),
            exact.len()
        )));
    }
    let (mut emax, mut e2, mut umax, mut u2) = (0.0f64, 0.0, 0.0f64, 0.0);
    for (a, u) in approx.iter().zip(exact) {
        let e = a - u;
        emax = emax.max(e.abs());
        e2 += e * e;
        umax = umax.max(u.abs());
        u2 += u * u;
    }
    if umax == 0.0 {
        return Err(AfcmError::ZeroExactNorm);
    }
    if !emax.is_finite() {
        return Err(AfcmError::InvalidArgument("approximation is not finite on the grid".into()));
    }
    Ok((emax / umax, (e2 / u2).sqrt()))
}

/// Relative errors of `sol` against `exact` on `grid`.
pub fn relative_errors<F>(sol: &Solution, exact: F, grid: &[Point]) -> Result<(f64, f64)>
where
    F: Fn(Point) -> f64 + Sync,
{
    let approx = sol.values_at(grid);
    let truth = par::map_collect(grid, |&x| exact(x));
    relative_error_values(&approx, &truth)
}
