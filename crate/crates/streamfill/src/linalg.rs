//! Dense symmetric linear algebra for exact GP inference: Cholesky
//! factorization, triangular solves, and inversion from the factor.
//! Matrices are row-major `Vec<f64>` with explicit dimension.

/// In-place lower Cholesky of a symmetric positive-definite matrix.
/// On success the lower triangle (diagonal included) holds L with
/// `L·Lᵀ = A`; the strict upper triangle is zeroed. Fails on a
/// non-positive pivot.
pub(crate) fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<(), ()> {
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(());
        }
        let ljj = diag.sqrt();
        a[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut sum = a[i * n + j];
            let (ri, rj) = (i * n, j * n);
            for k in 0..j {
                sum -= a[ri + k] * a[rj + k];
            }
            a[ri + j] = sum / ljj;
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            a[i * n + j] = 0.0;
        }
    }
    Ok(())
}

/// Solve `L x = b` in place (forward substitution).
pub(crate) fn solve_lower(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * b[k];
        }
        b[i] = sum / l[i * n + i];
    }
}

/// Solve `Lᵀ x = b` in place (back substitution).
pub(crate) fn solve_lower_transpose(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut sum = b[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * b[k];
        }
        b[i] = sum / l[i * n + i];
    }
}

/// Solve `A x = b` given the lower Cholesky factor of A.
pub(crate) fn solve_spd(l: &[f64], n: usize, b: &mut [f64]) {
    solve_lower(l, n, b);
    solve_lower_transpose(l, n, b);
}

/// Full inverse of A from its lower Cholesky factor (column-by-column
/// solves against the identity). Output is row-major and symmetric.
pub(crate) fn inverse_from_cholesky(l: &[f64], n: usize) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.iter_mut().for_each(|v| *v = 0.0);
        col[j] = 1.0;
        solve_spd(l, n, &mut col);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    inv
}

/// `log |A|` from the lower Cholesky factor of A.
pub(crate) fn log_det_from_cholesky(l: &[f64], n: usize) -> f64 {
    2.0 * (0..n).map(|i| l[i * n + i].ln()).sum::<f64>()
}
