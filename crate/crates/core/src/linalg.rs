//! Small dense linear algebra helpers shared by the Newton solver, the
//! sensitivity machinery, and the simplex basis extraction. Everything here
//! is plain Gaussian elimination with partial pivoting; problem sizes in this
//! crate are tiny.

/// Solve `A x = b` for square `A` (row-major). Returns `None` when the matrix
/// is numerically singular.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    assert!(a.iter().all(|row| row.len() == n), "matrix must be square");
    assert_eq!(b.len(), n, "right-hand side dimension mismatch");
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if m[row][col].abs() > m[pivot][col].abs() {
                pivot = row;
            }
        }
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        x.swap(col, pivot);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= m[col][col];
        for row in 0..col {
            x[row] -= m[row][col] * x[col];
        }
        m[col][col] = 1.0;
    }
    Some(x)
}

/// Numerical rank of a (possibly rectangular) row-major matrix.
pub fn rank(a: &[Vec<f64>], tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let rows = a.len();
    let cols = a[0].len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rank = 0;
    let mut row = 0;
    for col in 0..cols {
        let mut pivot = row;
        for r in row..rows {
            if m[r][col].abs() > m[pivot][col].abs() {
                pivot = r;
            }
        }
        if row >= rows || m[pivot][col].abs() <= tol {
            continue;
        }
        m.swap(row, pivot);
        for r in (row + 1)..rows {
            let f = m[r][col] / m[row][col];
            for k in col..cols {
                m[r][k] -= f * m[row][k];
            }
        }
        rank += 1;
        row += 1;
        if row == rows {
            break;
        }
    }
    rank
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y <- y + c * x`
pub fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

/// Matrix-vector product for a row-major matrix.
pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, x)).collect()
}

/// Transposed matrix-vector product: `Aᵀ x` for a row-major matrix.
pub fn mat_t_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a[0].len()];
    for (row, xi) in a.iter().zip(x) {
        axpy(&mut out, *xi, row);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve(&a, &[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn solve_detects_singular() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve(&a, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn rank_counts_independent_rows() {
        let a = vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0], vec![1.0, 1.0, 2.0]];
        assert_eq!(rank(&a, 1e-10), 2);
        let b = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(rank(&b, 1e-10), 2);
    }
}
