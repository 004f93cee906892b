//! Cyclic Jacobi eigensolver for small dense complex Hermitian matrices.
//!
//! Each rotation annihilates one off-diagonal pivot with a complex plane
//! rotation (a phase to make the pivot real followed by the classical
//! symmetric rotation). Sweeps repeat until the off-diagonal Frobenius norm
//! drops below `CONVERGENCE_FACTOR · ‖H‖_F` of the input matrix.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::EsrError;
use crate::spin::identity;
use crate::Result;

/// Off-diagonal Frobenius norm target, relative to the input norm.
pub const CONVERGENCE_FACTOR: f64 = 1e-13;
/// Hermiticity rejection threshold, relative to the input norm.
pub const HERMITICITY_FACTOR: f64 = 1e-10;
/// Fixed sweep budget; Jacobi converges quadratically, so for the ≤ 12×12
/// matrices in this crate a handful of sweeps suffices.
const MAX_SWEEPS: usize = 64;

/// Eigenvalues (ascending) and the unitary matrix of eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: Array2<Complex64>,
}

impl Eigensystem {
    /// The k-th eigenvector column.
    pub fn vector(&self, k: usize) -> ndarray::ArrayView1<'_, Complex64> {
        self.vectors.column(k)
    }
}

fn frobenius(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn off_diagonal_norm(a: &Array2<Complex64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

fn hermiticity_residual(a: &Array2<Complex64>) -> f64 {
    let n = a.nrows();
    let mut max = 0.0f64;
    for i in 0..n {
        for j in i..n {
            max = max.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    max
}

/// Diagonalizes a Hermitian matrix.
///
/// Rejects non-square or non-Hermitian input (residual above
/// `HERMITICITY_FACTOR` relative to ‖H‖_F) and reports the remaining
/// residual if the sweep budget is exhausted.
pub fn eigensolve(h: &Array2<Complex64>) -> Result<Eigensystem> {
    let n = h.nrows();
    if n == 0 || h.ncols() != n {
        return Err(EsrError::param(
            "matrix",
            format!("expected a non-empty square matrix, got {}x{}", n, h.ncols()),
        ));
    }

    let norm = frobenius(h);
    let herm_tol = HERMITICITY_FACTOR * norm.max(f64::MIN_POSITIVE);
    let residual = hermiticity_residual(h);
    if residual > herm_tol {
        return Err(EsrError::NotHermitian {
            residual,
            tolerance: herm_tol,
        });
    }

    let mut a = h.clone();
    // Symmetrize so rounding in the input cannot bias the iteration.
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)].conj());
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = identity(n);
    let target = CONVERGENCE_FACTOR * norm;

    let mut converged = off_diagonal_norm(&a) <= target;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        converged = off_diagonal_norm(&a) <= target;
    }
    if !converged {
        return Err(EsrError::EigenNotConverged {
            sweeps,
            residual: off_diagonal_norm(&a),
            target,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = Array2::<Complex64>::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = v[(row, src)];
        }
    }
    Ok(Eigensystem { values, vectors })
}

/// One complex Jacobi rotation annihilating the (p, q) pivot of `a`,
/// accumulated into `v`.
fn rotate(a: &mut Array2<Complex64>, v: &mut Array2<Complex64>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r; // e^{iα}
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;

    let theta = (aqq - app) / (2.0 * r);
    let t = if theta >= 0.0 {
        1.0 / (theta + (1.0 + theta * theta).sqrt())
    } else {
        -1.0 / (-theta + (1.0 + theta * theta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = a.nrows();
    let s_phase = phase * s; // s·e^{iα}
    let s_phase_conj = s_phase.conj(); // s·e^{−iα}

    // Diagonal block.
    a[(p, p)] = Complex64::new(app * c * c - 2.0 * r * s * c + aqq * s * s, 0.0);
    a[(q, q)] = Complex64::new(app * s * s + 2.0 * r * s * c + aqq * c * c, 0.0);
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);

    // Remaining rows/columns: H ← U†HU with U_pp = U_qq = c,
    // U_pq = s·e^{iα}, U_qp = −s·e^{−iα}.
    for j in 0..n {
        if j == p || j == q {
            continue;
        }
        let hjp = a[(j, p)];
        let hjq = a[(j, q)];
        let new_jp = hjp * c - hjq * s_phase_conj;
        let new_jq = hjp * s_phase + hjq * c;
        a[(j, p)] = new_jp;
        a[(p, j)] = new_jp.conj();
        a[(j, q)] = new_jq;
        a[(q, j)] = new_jq.conj();
    }

    for j in 0..n {
        let vjp = v[(j, p)];
        let vjq = v[(j, q)];
        v[(j, p)] = vjp * c - vjq * s_phase_conj;
        v[(j, q)] = vjp * s_phase + vjq * c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{adjoint, max_abs_diff};

    fn from_rows(rows: &[&[(f64, f64)]]) -> Array2<Complex64> {
        let n = rows.len();
        let mut a = Array2::<Complex64>::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            for (j, &(re, im)) in row.iter().enumerate() {
                a[(i, j)] = Complex64::new(re, im);
            }
        }
        a
    }

    #[test]
    fn diagonal_input_is_identity_eigenvectors() {
        let a = from_rows(&[&[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (2.0, 0.0)]]);
        let eig = eigensolve(&a).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0]);
        assert!(max_abs_diff(&eig.vectors, &identity(2)) < 1e-15);
    }

    #[test]
    fn pauli_x_spectrum() {
        let a = from_rows(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]]);
        let eig = eigensolve(&a).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn complex_pivot_handled() {
        // Pauli-y: eigenvalues ±1 with genuinely complex rotation.
        let a = from_rows(&[&[(0.0, 0.0), (0.0, -1.0)], &[(0.0, 1.0), (0.0, 0.0)]]);
        let eig = eigensolve(&a).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        // V†AV is diagonal with the eigenvalues.
        let d = adjoint(&eig.vectors).dot(&a).dot(&eig.vectors);
        assert!((d[(0, 0)].re + 1.0).abs() < 1e-13);
        assert!(d[(0, 1)].norm() < 1e-13);
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = from_rows(&[&[(0.0, 0.0), (1.0, 0.0)], &[(0.5, 0.0), (0.0, 0.0)]]);
        match eigensolve(&a) {
            Err(EsrError::NotHermitian { .. }) => {}
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn zero_matrix_converges_immediately() {
        let a = Array2::<Complex64>::zeros((3, 3));
        let eig = eigensolve(&a).unwrap();
        assert_eq!(eig.values, vec![0.0; 3]);
    }
}
