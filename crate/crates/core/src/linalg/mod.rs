//! Dense kernels for desk-scale problems.
//!
//! Matrices are `nalgebra::DMatrix<f64>`; gradients are stacked as rows.

mod newton;
mod nnls;
mod simplex;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

pub use newton::{newton_solve, NewtonOptions, NewtonSolution};
pub use nnls::{nnls, NnlsResult};
pub use simplex::{simplex_lp, Bound, LinearProgram, LpSolution, LpStatus, LP_FEAS_TOL};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative rank threshold used when callers do not supply one.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("requested {requested} pivots but numerical rank is {rank}")]
    RankTooSmall { requested: usize, rank: usize },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),
    #[error("empty matrix")]
    Empty,
    #[error("singular Jacobian at Newton iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("map evaluation failed at Newton iteration {iteration}: {message}")]
    Evaluation { iteration: usize, message: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("iteration cap of {cap} exceeded")]
    IterationCap { cap: usize, best: Option<NnlsResult> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankInfo {
    pub rank: usize,
    /// Singular values, non-increasing.
    pub singular_values: Vec<f64>,
    pub tolerance_used: f64,
}

fn check_finite(m: &Matrix) -> Result<(), LinalgError> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite)
    }
}

/// Square (or tall) copy of `m` padded with zero rows so the SVD yields a full
/// right singular basis.
fn padded(m: &Matrix) -> Matrix {
    let (r, c) = m.shape();
    if r >= c {
        return m.clone();
    }
    let mut p = Matrix::zeros(c, c);
    p.view_mut((0, 0), (r, c)).copy_from(m);
    p
}

/// Singular values sorted non-increasing with the matching right singular
/// vectors as columns of the second matrix.
fn sorted_svd(m: &Matrix) -> (Vec<f64>, Matrix) {
    let c = m.ncols();
    let svd = padded(m).svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = Matrix::zeros(c, c);
    for (k, &i) in order.iter().enumerate() {
        v.set_column(k, &v_t.row(i).transpose());
    }
    (values, v)
}

fn threshold(largest: f64, tol_rel: f64) -> f64 {
    if largest > 0.0 {
        tol_rel * largest
    } else {
        tol_rel
    }
}

/// Rank from singular values, counting those above `tol_rel · σ_max`
/// (or above `tol_rel` when the matrix is zero).
pub fn numerical_rank(m: &Matrix, tol_rel: f64) -> Result<RankInfo, LinalgError> {
    check_finite(m)?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(RankInfo {
            rank: 0,
            singular_values: vec![],
            tolerance_used: tol_rel,
        });
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let tol = threshold(sv[0], tol_rel);
    Ok(RankInfo {
        rank: sv.iter().filter(|&&s| s > tol).count(),
        singular_values: sv,
        tolerance_used: tol,
    })
}

/// Orthonormal basis (as columns) of the numerical nullspace of `m`.
pub fn nullspace_basis(m: &Matrix, tol_rel: f64) -> Result<Matrix, LinalgError> {
    check_finite(m)?;
    let c = m.ncols();
    if c == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    if m.nrows() == 0 {
        return Ok(Matrix::identity(c, c));
    }
    let (sv, v) = sorted_svd(m);
    let tol = threshold(sv[0], tol_rel);
    let rank = sv.iter().filter(|&&s| s > tol).count();
    Ok(v.columns(rank, c - rank).into_owned())
}

/// Greedy column pivoting: picks `r` columns of `m`, each time the column with
/// the largest component orthogonal to those already chosen. Ties go to the
/// smallest index. The result is sorted ascending.
pub fn pivot_select(m: &Matrix, r: usize, tol_rel: f64) -> Result<Vec<usize>, LinalgError> {
    let rank = numerical_rank(m, tol_rel)?.rank;
    if r > rank {
        return Err(LinalgError::RankTooSmall { requested: r, rank });
    }
    let mut work = m.clone();
    let mut chosen = Vec::with_capacity(r);
    for _ in 0..r {
        let norms: Vec<f64> = (0..work.ncols())
            .map(|j| {
                if chosen.contains(&j) {
                    f64::NEG_INFINITY
                } else {
                    work.column(j).norm()
                }
            })
            .collect();
        let best = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pick = norms
            .iter()
            .position(|&v| v >= best * (1.0 - 1e-12))
            .expect("at least one candidate");
        let q = work.column(pick) / norms[pick];
        for j in 0..work.ncols() {
            if chosen.contains(&j) || j == pick {
                continue;
            }
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                let proj = q.dot(&work.column(j));
                let updated = work.column(j) - &q * proj;
                work.set_column(j, &updated);
            }
        }
        chosen.push(pick);
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Smallest eigenvalue of a symmetric matrix and a unit eigenvector whose
/// largest-magnitude entry is positive.
pub fn min_eig_sym(h: &Matrix) -> Result<(f64, Vector), LinalgError> {
    check_finite(h)?;
    let n = h.nrows();
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    if h.ncols() != n {
        return Err(LinalgError::Dimension(format!("expected a square matrix, got {}x{}", n, h.ncols())));
    }
    let scale = h.amax().max(1.0);
    let asym = (h - h.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(LinalgError::Asymmetric(asym));
    }
    let sym = (h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let k = eig.eigenvalues.imin();
    let mut v = eig.eigenvectors.column(k).normalize();
    let lead = v.iamax();
    if v[lead] < 0.0 {
        v = -v;
    }
    Ok((eig.eigenvalues[k], v))
}

/// Minimum-norm least-squares solution of `a x ≈ b`.
pub fn lstsq(a: &Matrix, b: &Vector) -> Vector {
    if a.ncols() == 0 {
        return Vector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = if smax > 0.0 { 1e-12 * smax } else { 1e-300 };
    svd.solve(b, eps).expect("U and V^T were computed")
}

/// Stacks row vectors into a matrix with `ncols` columns.
pub fn stack_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>, ncols: usize) -> Matrix {
    let rows: Vec<&[f64]> = rows.into_iter().collect();
    Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Serializes a matrix as a list of rows.
pub fn serialize_rows<S: serde::Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        stack_rows(rows.iter().copied(), rows[0].len())
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numerical_rank(&m(&[&[0.0, -2.0], &[0.0, -2.0]]), 1e-8).unwrap().rank, 1);
        assert_eq!(numerical_rank(&Matrix::identity(3, 3), 1e-8).unwrap().rank, 3);
        assert_eq!(numerical_rank(&m(&[&[2e-3, -1.0], &[0.0, -1.0]]), 1e-8).unwrap().rank, 2);
        let zero = numerical_rank(&Matrix::zeros(2, 3), 1e-8).unwrap();
        assert_eq!((zero.rank, zero.tolerance_used), (0, 1e-8));
    }

    #[test]
    fn rank_rejects_nan() {
        assert_eq!(numerical_rank(&m(&[&[f64::NAN]]), 1e-8), Err(LinalgError::NonFinite));
    }

    #[test]
    fn nullspace_examples() {
        let b = nullspace_basis(&m(&[&[0.0, -2.0]]), 1e-8).unwrap();
        assert_eq!(b.shape(), (2, 1));
        assert!((b[(0, 0)].abs() - 1.0).abs() < 1e-14 && b[(1, 0)].abs() < 1e-14);
        assert_eq!(nullspace_basis(&Matrix::identity(3, 3), 1e-8).unwrap().ncols(), 0);
        let z = nullspace_basis(&Matrix::zeros(2, 3), 1e-8).unwrap();
        assert!((z.transpose() * &z - Matrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn pivot_examples() {
        // two parallel constraint gradients, stored as columns
        let g = m(&[&[0.0, 0.0], &[-1.0, -1.0]]);
        assert_eq!(pivot_select(&g, 1, 1e-8).unwrap(), vec![0]);
        let d = m(&[&[5.0, 0.0], &[0.0, 3.0]]);
        assert_eq!(pivot_select(&d, 2, 1e-8).unwrap(), vec![0, 1]);
        let z = m(&[&[0.0, 1.0], &[0.0, 2.0]]);
        assert_eq!(pivot_select(&z, 1, 1e-8).unwrap(), vec![1]);
        assert_eq!(pivot_select(&z, 2, 1e-8), Err(LinalgError::RankTooSmall { requested: 2, rank: 1 }));
    }

    #[test]
    fn min_eig_examples() {
        let (v, e) = min_eig_sym(&m(&[&[2.0, 0.0], &[0.0, 0.0]])).unwrap();
        assert_eq!(v, 0.0);
        assert!((e[1] - 1.0).abs() < 1e-15);
        let (v, e) = min_eig_sym(&(-Matrix::identity(3, 3))).unwrap();
        assert!((v + 1.0).abs() < 1e-15 && (e.norm() - 1.0).abs() < 1e-14);
        let (v, _) = min_eig_sym(&(Matrix::identity(2, 2) * (2.0 * (0.0 - 0.5)))).unwrap();
        assert!((v + 1.0).abs() < 1e-15);
        assert!(matches!(
            min_eig_sym(&m(&[&[1.0, 2.0], &[0.0, 1.0]])),
            Err(LinalgError::Asymmetric(_))
        ));
    }

    fn small_matrix() -> impl Strategy<Value = Matrix> {
        (1usize..5, 1usize..5, 0usize..4).prop_flat_map(|(r, c, k)| {
            // product of random factors with inner dimension k gives rank <= k
            (
                proptest::collection::vec(-3i32..4, r * k),
                proptest::collection::vec(-3i32..4, k * c),
            )
                .prop_map(move |(a, b)| {
                    let a = Matrix::from_fn(r, k, |i, j| a[i * k + j] as f64);
                    let b = Matrix::from_fn(k, c, |i, j| b[i * c + j] as f64);
                    a * b
                })
        })
    }

    proptest! {
        #[test]
        fn rank_is_permutation_invariant(mat in small_matrix(), seed in 0u64..1000) {
            let r0 = numerical_rank(&mat, 1e-8).unwrap().rank;
            let (rows, cols) = mat.shape();
            let shift = seed as usize;
            let shuffled = Matrix::from_fn(rows, cols, |i, j| {
                mat[((i + shift) % rows, cols - 1 - (j + shift) % cols)]
            });
            prop_assert_eq!(numerical_rank(&shuffled, 1e-8).unwrap().rank, r0);
        }

        #[test]
        fn nullspace_is_orthonormal_and_annihilating(mat in small_matrix()) {
            let b = nullspace_basis(&mat, 1e-8).unwrap();
            let rank = numerical_rank(&mat, 1e-8).unwrap().rank;
            prop_assert_eq!(b.ncols(), mat.ncols() - rank);
            if b.ncols() > 0 {
                let gram = b.transpose() * &b;
                prop_assert!((gram - Matrix::identity(b.ncols(), b.ncols())).amax() <= 1e-12);
                let norm = mat.norm().max(1.0);
                prop_assert!((&mat * &b).amax() <= 10.0 * 1e-8 * norm);
            }
        }
    }
}
