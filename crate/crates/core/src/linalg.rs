//! Minimal dense linear algebra for the fixed-size checks used in this crate.
//!
//! Only what the covariance validity tests and the polynomial fit need:
//! a cyclic Jacobi eigensolver for small symmetric matrices and a pivoted
//! Gaussian solve for normal equations.

/// Eigenvalues of a small real symmetric matrix via cyclic Jacobi rotations.
///
/// Converges quadratically; for the 4x4 and 8x8 matrices used here the
/// result is accurate to close to machine precision. The input is not
/// checked for symmetry; the strictly lower triangle is ignored.
pub(crate) fn symmetric_eigenvalues<const N: usize>(mut a: [[f64; N]; N]) -> [f64; N] {
    let scale: f64 = a
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
        .max(1.0);

    for _sweep in 0..64 {
        let mut off = 0.0_f64;
        for i in 0..N {
            for j in (i + 1)..N {
                off = off.max(a[i][j].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                // Classic Jacobi rotation annihilating a[p][q].
                let tau = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..N {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }

    let mut eigs = [0.0_f64; N];
    for (i, e) in eigs.iter_mut().enumerate() {
        *e = a[i][i];
    }
    eigs.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
    eigs
}

/// Solve `a x = b` in place by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot falls below `tol` times the matrix scale,
/// which callers treat as rank deficiency.
pub(crate) fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, tol: f64) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    let scale: f64 = a
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
        .max(1.0);

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .expect("finite pivots")
            })
            .expect("non-empty column");
        if a[pivot_row][col].abs() < tol * scale {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);

        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}
