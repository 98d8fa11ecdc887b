//! Small dense helpers shared by the geometry modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::ad::Scalar;

/// Inverse of a row-major `n x n` matrix by Gauss-Jordan elimination with
/// partial pivoting on values. Returns `None` if a pivot vanishes.
pub fn inverse<S: Scalar>(m: &[S], n: usize) -> Option<Vec<S>> {
    let mut a = m.to_vec();
    let mut inv: Vec<S> = (0..n * n)
        .map(|k| S::cst(if k / n == k % n { 1.0 } else { 0.0 }))
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i * n + col]
                    .value()
                    .abs()
                    .total_cmp(&a[j * n + col].value().abs())
            })
            .unwrap();
        if a[pivot * n + col].value().abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
                inv.swap(pivot * n + k, col * n + k);
            }
        }
        let p = a[col * n + col];
        for k in 0..n {
            a[col * n + k] = a[col * n + k] / p;
            inv[col * n + k] = inv[col * n + k] / p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col];
            if f.value() == 0.0 {
                continue;
            }
            for k in 0..n {
                a[row * n + k] = a[row * n + k] - f * a[col * n + k];
                inv[row * n + k] = inv[row * n + k] - f * inv[col * n + k];
            }
        }
    }
    Some(inv)
}

pub fn to_matrix(m: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, m)
}

/// `(negative, positive, zero)` eigenvalue counts with `|lambda| <= tol`
/// counted as zero.
pub fn inertia(m: &DMatrix<f64>, tol: f64) -> (usize, usize, usize) {
    let eig = SymmetricEigen::new(m.clone());
    let mut counts = (0, 0, 0);
    for &l in eig.eigenvalues.iter() {
        if l.abs() <= tol {
            counts.2 += 1;
        } else if l < 0.0 {
            counts.0 += 1;
        } else {
            counts.1 += 1;
        }
    }
    counts
}

/// Orthonormal frame of a non-degenerate symmetric bilinear form.
///
/// Returns the frame vectors as matrix columns and the sign `g(e_a, e_a)`
/// of each. Negative directions come first.
pub fn orthonormal_frame(g: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = g.nrows();
    let eig = SymmetricEigen::new(g.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut frame = DMatrix::zeros(n, n);
    let mut signs = Vec::with_capacity(n);
    for (col, &k) in order.iter().enumerate() {
        let l = eig.eigenvalues[k];
        let v = eig.eigenvectors.column(k) / l.abs().sqrt();
        frame.set_column(col, &v);
        signs.push(l.signum());
    }
    (frame, signs)
}

/// Bilinear form `u^T g v`.
pub fn form(g: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (u.transpose() * g * v)[(0, 0)]
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

/// Numerical rank from singular values, relative to the largest.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0f64, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}
