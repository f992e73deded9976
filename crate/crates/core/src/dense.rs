//! Small dense linear-algebra helpers.
//!
//! These back the independent oracles in the test suites (dense Kronecker
//! products, Cholesky solves, smallest-eigenvalue probes) and the direct
//! tridiagonal solver used by the 1D reference problems. Everything here is
//! meant for matrices at desk scale; nothing is tuned.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::krylov::LinearOperator;

/// Dense Kronecker product a ⊗ b.
pub fn kron(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let v = a[[i, j]];
            if v == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = v * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Cholesky factor L (lower triangular, A = L·Lᵀ). Fails when the matrix is
/// not positive definite.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidOperator("cholesky of a non-square matrix".into()));
    }
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::InvalidOperator(format!(
                        "matrix not positive definite (pivot {sum:e} at {i})"
                    )));
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solve A x = b for SPD A via Cholesky.
pub fn solve_spd(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let l = cholesky(a)?;
    Ok(cholesky_solve(&l, b))
}

/// Solve L Lᵀ x = b given the Cholesky factor.
pub fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        for k in 0..i {
            let v = y[k];
            y[i] -= l[[i, k]] * v;
        }
        y[i] /= l[[i, i]];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let v = y[k];
            y[i] -= l[[k, i]] * v;
        }
        y[i] /= l[[i, i]];
    }
    y
}

/// Materialize a linear operator by applying it to unit vectors.
pub fn operator_to_dense(op: &dyn LinearOperator) -> Array2<f64> {
    let n = op.dim();
    let mut out = Array2::zeros((n, n));
    let mut e = Array1::zeros(n);
    for j in 0..n {
        e[j] = 1.0;
        let col = op.apply(e.view());
        for i in 0..n {
            out[[i, j]] = col[i];
        }
        e[j] = 0.0;
    }
    out
}

/// Smallest eigenvalue of an SPD matrix by inverse power iteration.
pub fn min_eigenvalue_spd(a: &Array2<f64>, iterations: usize) -> Result<f64> {
    let n = a.nrows();
    let l = cholesky(a)?;
    let mut x = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    for _ in 0..iterations {
        let y = cholesky_solve(&l, &x);
        let norm = y.dot(&y).sqrt();
        if norm == 0.0 {
            return Err(Error::NumericalBreakdown("inverse power iteration collapsed".into()));
        }
        x = y / norm;
    }
    Ok(x.dot(&a.dot(&x)) / x.dot(&x))
}

/// Direct Thomas solve of a tridiagonal system given as a dense matrix.
/// Entries outside the three central diagonals are ignored; FE matrices of
/// 1D hat bases are tridiagonal by construction.
pub fn solve_tridiagonal(a: &Array2<f64>, rhs: &Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    if a.ncols() != n || rhs.len() != n {
        return Err(Error::InvalidOperator("tridiagonal solve dimension mismatch".into()));
    }
    if n == 0 {
        return Ok(Array1::zeros(0));
    }
    let mut diag: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    let upper: Vec<f64> = (0..n - 1).map(|i| a[[i, i + 1]]).collect();
    let lower: Vec<f64> = (0..n - 1).map(|i| a[[i + 1, i]]).collect();
    let mut b = rhs.to_vec();
    for i in 1..n {
        if diag[i - 1] == 0.0 {
            return Err(Error::NumericalBreakdown("zero pivot in tridiagonal solve".into()));
        }
        let m = lower[i - 1] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        b[i] -= m * b[i - 1];
    }
    if diag[n - 1] == 0.0 {
        return Err(Error::NumericalBreakdown("zero pivot in tridiagonal solve".into()));
    }
    let mut x = vec![0.0; n];
    x[n - 1] = b[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = (b[i] - upper[i] * x[i + 1]) / diag[i];
    }
    Ok(Array1::from_vec(x))
}
