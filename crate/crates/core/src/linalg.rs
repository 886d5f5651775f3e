//! Small dense linear algebra kit: Cholesky factorization, triangular
//! solves, and compensated summation. Dimensions in this crate stay in the
//! tens-to-hundreds, so a straightforward pure-Rust implementation is
//! sufficient and keeps the build free of BLAS.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Lower-triangular Cholesky factor `L` of a symmetric positive definite
/// matrix, `A = L Lᵀ`.
pub fn cholesky(a: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solve `L x = b` with `L` lower triangular (forward substitution).
pub fn solve_lower(l: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    debug_assert_eq!(b.len(), n);
    let mut x = b.to_owned();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[[i, k]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Solve `Lᵀ x = b` with `L` lower triangular (back substitution).
pub fn solve_lower_transpose(l: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    debug_assert_eq!(b.len(), n);
    let mut x = b.to_owned();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Solve `A x = b` given the Cholesky factor `L` of `A`.
pub fn chol_solve(l: &ArrayView2<f64>, b: &ArrayView1<f64>) -> Array1<f64> {
    let y = solve_lower(l, b);
    solve_lower_transpose(l, &y.view())
}

/// Solve `A X = B` column-wise given the Cholesky factor `L` of `A`.
pub fn chol_solve_mat(l: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Array2<f64> {
    let mut x = Array2::<f64>::zeros(b.dim());
    for (j, col) in b.columns().into_iter().enumerate() {
        let xj = chol_solve(l, &col);
        x.column_mut(j).assign(&xj);
    }
    x
}

/// Inverse of an SPD matrix from its Cholesky factor.
pub fn chol_inverse(l: &ArrayView2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let eye = Array2::<f64>::eye(n);
    chol_solve_mat(l, &eye.view())
}

/// `log det A = 2 Σ log L_ii` for `A = L Lᵀ`.
pub fn chol_log_det(l: &ArrayView2<f64>) -> f64 {
    l.diag().iter().map(|d| d.ln()).sum::<f64>() * 2.0
}

/// `y = L x` for lower-triangular `L` (skips the known zeros).
pub fn lower_matvec(l: &ArrayView2<f64>, x: &ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut s = 0.0;
        for k in 0..=i {
            s += l[[i, k]] * x[k];
        }
        y[i] = s;
    }
    y
}

/// Compensated (Neumaier) sum. Keeps reductions insensitive to operand
/// order at the 1e-12 relative level required by the permutation
/// invariants.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Compensated accumulator for vector sums.
pub struct KahanVec {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl KahanVec {
    pub fn zeros(dim: usize) -> Self {
        Self {
            sum: vec![0.0; dim],
            comp: vec![0.0; dim],
        }
    }

    /// Accumulate `scale * v`.
    pub fn add_scaled(&mut self, scale: f64, v: &[f64]) {
        for ((s, c), x) in self.sum.iter_mut().zip(self.comp.iter_mut()).zip(v) {
            let v = scale * x;
            let t = *s + v;
            if s.abs() >= v.abs() {
                *c += (*s - t) + v;
            } else {
                *c += (v - t) + *s;
            }
            *s = t;
        }
    }

    pub fn into_array(self) -> Array1<f64> {
        Array1::from_vec(
            self.sum
                .into_iter()
                .zip(self.comp)
                .map(|(s, c)| s + c)
                .collect(),
        )
    }
}

/// Frobenius norm of the difference of two matrices, relative to the norm
/// of the second. Used throughout the tests for covariance comparisons.
pub fn rel_frobenius_distance(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> f64 {
    let num = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let den = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}
