//! Dense minimum-norm least squares.
//!
//! Tall systems are first reduced with a Householder QR of the augmented
//! matrix `[A | B]`, which yields `R` and `Qᵀ B` in one pass. The rank is then
//! revealed by a thin SVD of the square factor `R`: singular values below
//! `rank_tol · σ_max` are discarded and the minimum-norm solution
//! `V Σ⁺ Uᵀ (Qᵀ B)` is returned. Everything runs sequentially so repeated solves
//! of the same system are bit-identical.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::qr::no_pivoting::factor as qr_factor;
use faer::{Mat, MatRef, Par};

use crate::error::{AfcmError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LstsqSolution {
    pub coefficients: Vec<f64>,
    /// `‖A x − b‖₂` of the returned solution.
    pub residual_norm: f64,
    pub rank: usize,
}

/// Minimum-norm solution of `min ‖A x − b‖₂`.
pub fn solve_dense(a: MatRef<'_, f64>, b: &[f64], rank_tol: f64) -> Result<LstsqSolution> {
    let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let (x, rank) = lstsq_multi(a, rhs.as_ref(), rank_tol)?;
    let coefficients: Vec<f64> = (0..x.nrows()).map(|i| x[(i, 0)]).collect();
    let residual_norm = residual_norm(a, &coefficients, b);
    Ok(LstsqSolution {
        coefficients,
        residual_norm,
        rank,
    })
}

/// `‖A x − b‖₂`.
pub fn residual_norm(a: MatRef<'_, f64>, x: &[f64], b: &[f64]) -> f64 {
    let xm = Mat::from_fn(x.len(), 1, |i, _| x[i]);
    let ax = a * &xm;
    (0..b.len())
        .map(|i| {
            let r = ax[(i, 0)] - b[i];
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// Minimum-norm least squares for several right-hand sides at once.
/// Returns the solution matrix and the numerical rank.
pub fn lstsq_multi(
    a: MatRef<'_, f64>,
    b: MatRef<'_, f64>,
    rank_tol: f64,
) -> Result<(Mat<f64>, usize)> {
    let (m, n) = a.shape();
    let k = b.ncols();
    if m == 0 || n == 0 {
        return Err(AfcmError::InvalidArgument("empty least-squares matrix".into()));
    }
    if b.nrows() != m {
        return Err(AfcmError::InvalidArgument(format!(
            "right-hand side has {} rows, matrix has {m}",
            b.nrows()
        )));
    }
    check_finite(a, b)?;

    if m < n {
        return truncated_svd_solve(a, b, rank_tol);
    }

    let mut aug = Mat::<f64>::zeros(m, n + k);
    aug.as_mut().get_mut(.., ..n).copy_from(a);
    aug.as_mut().get_mut(.., n..).copy_from(b);
    householder_qr_in_place(&mut aug);
    let r = aug.as_ref().get(..n, ..n);
    let r = Mat::from_fn(n, n, |i, j| if i <= j { r[(i, j)] } else { 0.0 });
    let qtb = aug.as_ref().get(..n, n..).to_owned();
    truncated_svd_solve(r.as_ref(), qtb.as_ref(), rank_tol)
}

fn check_finite(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(AfcmError::NonFiniteEntry { row: i, col: j });
            }
        }
    }
    for j in 0..b.ncols() {
        for i in 0..b.nrows() {
            if !b[(i, j)].is_finite() {
                return Err(AfcmError::NonFiniteRhs { row: i });
            }
        }
    }
    Ok(())
}

fn householder_qr_in_place(mat: &mut Mat<f64>) {
    let (m, n) = mat.shape();
    let size = m.min(n);
    let par = Par::Seq;
    let block_size = qr_factor::recommended_block_size::<f64>(m, n);
    let mut coeff = Mat::<f64>::zeros(block_size, size);
    let mut mem = MemBuffer::new(qr_factor::qr_in_place_scratch::<f64>(
        m,
        n,
        block_size,
        par,
        Default::default(),
    ));
    qr_factor::qr_in_place(
        mat.as_mut(),
        coeff.as_mut(),
        par,
        MemStack::new(&mut mem),
        Default::default(),
    );
}

fn truncated_svd_solve(
    a: MatRef<'_, f64>,
    b: MatRef<'_, f64>,
    rank_tol: f64,
) -> Result<(Mat<f64>, usize)> {
    let svd = a.thin_svd().map_err(|_| AfcmError::SvdFailed)?;
    let s = svd.S().column_vector();
    let u = svd.U();
    let v = svd.V();
    let smax = (0..s.nrows()).map(|i| s[i]).fold(0.0f64, f64::max);
    let cutoff = rank_tol * smax;
    let rank = (0..s.nrows()).filter(|&i| s[i] > cutoff && s[i] > 0.0).count();
    // singular values come sorted in decreasing order
    let ur = u.get(.., ..rank);
    let vr = v.get(.., ..rank);
    let mut c = ur.transpose() * b;
    for i in 0..rank {
        let inv = 1.0 / s[i];
        for j in 0..c.ncols() {
            c[(i, j)] *= inv;
        }
    }
    Ok((vr * &c, rank))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seeds;
    use rand::Rng;

    fn mat(rows: &[&[f64]]) -> Mat<f64> {
        Mat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn square_full_rank_is_exact() {
        let a = mat(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 2.0]]);
        let b = [1.0, 2.0, 3.0];
        let sol = solve_dense(a.as_ref(), &b, 1e-10).unwrap();
        assert_eq!(sol.rank, 3);
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(sol.residual_norm <= 1e-10 * bn);
    }

    #[test]
    fn duplicated_column_gives_minimum_norm() {
        // columns 0 and 1 identical; the minimum-norm solution splits weight evenly.
        // Oracle: pinv(A) b by hand. With A = [c c], c = (1,2,2)ᵀ, |c|² = 9,
        // pinv(A) = [c c]ᵀ / (2 |c|²), so x = (cᵀb / 18) (1, 1).
        let a = mat(&[&[1.0, 1.0], &[2.0, 2.0], &[2.0, 2.0]]);
        let b = [1.0, 0.0, 4.0];
        let oracle = (1.0 + 0.0 + 8.0) / 18.0;
        let sol = solve_dense(a.as_ref(), &b, 1e-10).unwrap();
        assert_eq!(sol.rank, 1);
        for &x in &sol.coefficients {
            assert!((x - oracle).abs() < 1e-10, "{x} vs {oracle}");
        }
    }

    #[test]
    fn wide_system_minimum_norm() {
        let a = mat(&[&[1.0, 2.0, 3.0]]);
        let sol = solve_dense(a.as_ref(), &[14.0], 1e-12).unwrap();
        // x = aᵀ b / |a|² = (1,2,3)
        for (x, e) in sol.coefficients.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let a = mat(&[&[1.0, f64::NAN], &[0.0, 1.0]]);
        assert!(matches!(
            solve_dense(a.as_ref(), &[1.0, 1.0], 1e-10),
            Err(AfcmError::NonFiniteEntry { row: 0, col: 1 })
        ));
        let a = mat(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(
            solve_dense(a.as_ref(), &[1.0, f64::INFINITY], 1e-10),
            Err(AfcmError::NonFiniteRhs { row: 1 })
        ));
    }

    #[test]
    fn residual_is_optimal_against_perturbations() {
        let mut rng = Seeds::new(1).stream("lstsq");
        let a = Mat::from_fn(40, 12, |_, _| rng.random_range(-1.0..1.0));
        let b: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sol = solve_dense(a.as_ref(), &b, 1e-12).unwrap();
        let zero = residual_norm(a.as_ref(), &vec![0.0; 12], &b);
        assert!(sol.residual_norm <= zero);
        for _ in 0..100 {
            let x: Vec<f64> = sol
                .coefficients
                .iter()
                .map(|v| v + 1e-3 * rng.random_range(-1.0..1.0))
                .collect();
            assert!(sol.residual_norm <= residual_norm(a.as_ref(), &x, &b));
        }
    }

    #[test]
    fn repeated_solves_are_bit_identical() {
        let mut rng = Seeds::new(2).stream("lstsq");
        let a = Mat::from_fn(200, 60, |_, _| rng.random_range(-1.0..1.0));
        let b: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x1 = solve_dense(a.as_ref(), &b, 1e-10).unwrap();
        let x2 = solve_dense(a.as_ref(), &b, 1e-10).unwrap();
        assert_eq!(x1, x2);
    }
}
