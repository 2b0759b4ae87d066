//! Dense linear algebra for small matrices.
//!
//! Everything here targets the crate's working sizes (chart dimensions up to
//! a handful, layer matrices up to a few hundred rows), so plain Gaussian
//! elimination and power iteration are used throughout. No blocking, no
//! pivoting heroics beyond what correctness needs.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

/// Relative pivot tolerance below which elimination reports singularity.
const PIVOT_REL_TOL: f64 = 1e-13;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &ArrayView2<f64>, b: &[f64], context: &'static str) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::Shape(format!(
            "solve needs square system, got {}x{} with rhs {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let mut m = a.to_owned();
    let mut x: Vec<f64> = b.to_vec();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = m[[col, col]].abs();
        for row in col + 1..n {
            let v = m[[row, col]].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = row;
            }
        }
        if pivot_val < PIVOT_REL_TOL * scale {
            return Err(Error::SingularMatrix {
                context,
                pivot: pivot_val,
                tolerance: PIVOT_REL_TOL * scale,
            });
        }
        if pivot_row != col {
            for j in 0..n {
                m.swap([col, j], [pivot_row, j]);
            }
            x.swap(col, pivot_row);
        }
        for row in col + 1..n {
            let f = m[[row, col]] / m[[col, col]];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[[row, j]] -= f * m[[col, j]];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for j in col + 1..n {
            s -= m[[col, j]] * x[j];
        }
        x[col] = s / m[[col, col]];
    }
    Ok(x)
}

/// Matrix inverse via column-by-column solves.
pub fn inverse(a: &ArrayView2<f64>, context: &'static str) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut out = Array2::zeros((n, n));
    let mut e = vec![0.0; n];
    for col in 0..n {
        e[col] = 1.0;
        let x = solve(a, &e, context)?;
        e[col] = 0.0;
        for row in 0..n {
            out[[row, col]] = x[row];
        }
    }
    Ok(out)
}

/// Determinant via LU with partial pivoting; zero when a pivot vanishes.
pub fn determinant(a: &ArrayView2<f64>) -> f64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "determinant needs a square matrix");
    let mut m = a.to_owned();
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = m[[col, col]].abs();
        for row in col + 1..n {
            let v = m[[row, col]].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = row;
            }
        }
        if pivot_val == 0.0 {
            return 0.0;
        }
        if pivot_row != col {
            for j in 0..n {
                m.swap([col, j], [pivot_row, j]);
            }
            det = -det;
        }
        det *= m[[col, col]];
        for row in col + 1..n {
            let f = m[[row, col]] / m[[col, col]];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[[row, j]] -= f * m[[col, j]];
            }
        }
    }
    det
}

/// Largest singular value by power iteration on AᵀA.
///
/// Deterministic: starts from a fixed dense vector, runs a fixed iteration
/// budget with one early exit on stagnation. Accurate to far better than the
/// percent level whenever the top singular value is separated, which is all
/// the callers need.
pub fn operator_norm(a: &ArrayView2<f64>) -> f64 {
    let (rows, cols) = (a.nrows(), a.ncols());
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    // Fixed pseudo-random start avoids accidental orthogonality to the top
    // singular vector without introducing seed plumbing.
    let mut v: Array1<f64> = Array1::from_shape_fn(cols, |i| {
        let x = (i as f64 + 1.0) * 0.754_877_666_246_692_9;
        (x - x.floor()) + 0.25
    });
    let norm0 = v.dot(&v).sqrt();
    v.mapv_inplace(|x| x / norm0);
    let mut sigma = 0.0;
    for _ in 0..200 {
        let av = a.dot(&v);
        let atav = a.t().dot(&av);
        let lambda = atav.dot(&atav).sqrt();
        if lambda == 0.0 {
            return 0.0;
        }
        let next_sigma = lambda.sqrt();
        let rel = (next_sigma - sigma).abs() / next_sigma.max(1e-300);
        sigma = next_sigma;
        v = atav / lambda;
        if rel < 1e-14 {
            break;
        }
    }
    sigma
}

/// Orthonormalizes `vectors` under a caller-supplied inner product
/// (modified Gram–Schmidt). Fails when the set is numerically dependent.
pub fn gram_schmidt_with_inner<F>(
    vectors: &[Vec<f64>],
    inner: F,
    context: &'static str,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for b in &basis {
            let c = inner(&w, b);
            for (wi, bi) in w.iter_mut().zip(b.iter()) {
                *wi -= c * bi;
            }
        }
        let norm2 = inner(&w, &w);
        let original = inner(v, v).max(1e-300);
        if norm2 <= 1e-24 * original {
            return Err(Error::SingularMatrix {
                context,
                pivot: norm2.sqrt(),
                tolerance: (1e-24 * original).sqrt(),
            });
        }
        let norm = norm2.sqrt();
        for wi in w.iter_mut() {
            *wi /= norm;
        }
        basis.push(w);
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn solve_recovers_known_solution() {
        let a = array![[2.0, 1.0], [1.0, 3.0]];
        let x = solve(&a.view(), &[5.0, 10.0], "test").unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn solve_rejects_singular() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(solve(&a.view(), &[1.0, 2.0], "test").is_err());
    }

    #[test]
    fn inverse_times_original_is_identity() {
        let a = array![[4.0, 7.0], [2.0, 6.0]];
        let inv = inverse(&a.view(), "test").unwrap();
        let prod = a.dot(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[[i, j]] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn determinant_matches_closed_form() {
        let a = array![[3.0, 8.0], [4.0, 6.0]];
        assert!((determinant(&a.view()) - (-14.0)).abs() < 1e-12);
        let singular = array![[1.0, 2.0], [2.0, 4.0]];
        assert_eq!(determinant(&singular.view()), 0.0);
    }

    #[test]
    fn determinant_3x3() {
        let a = array![[6.0, 1.0, 1.0], [4.0, -2.0, 5.0], [2.0, 8.0, 7.0]];
        assert!((determinant(&a.view()) - (-306.0)).abs() < 1e-10);
    }

    #[test]
    fn operator_norm_of_diagonal_is_max_entry() {
        let a = array![[3.0, 0.0], [0.0, -7.0]];
        assert!((operator_norm(&a.view()) - 7.0).abs() < 1e-10);
    }

    #[test]
    fn operator_norm_of_scaled_rotation() {
        let c = (0.3f64).cos();
        let s = (0.3f64).sin();
        let a = array![[2.0 * c, -2.0 * s], [2.0 * s, 2.0 * c]];
        assert!((operator_norm(&a.view()) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn operator_norm_rectangular() {
        // Column vector (3, 4): norm 5.
        let a = array![[3.0], [4.0]];
        assert!((operator_norm(&a.view()) - 5.0).abs() < 1e-10);
    }

    #[test]
    fn gram_schmidt_euclidean() {
        let vecs = vec![vec![2.0, 0.0], vec![1.0, 1.0]];
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let basis = gram_schmidt_with_inner(&vecs, dot, "test").unwrap();
        assert!((dot(&basis[0], &basis[0]) - 1.0).abs() < 1e-12);
        assert!((dot(&basis[1], &basis[1]) - 1.0).abs() < 1e-12);
        assert!(dot(&basis[0], &basis[1]).abs() < 1e-12);
    }

    #[test]
    fn gram_schmidt_rejects_dependent_set() {
        let vecs = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        assert!(gram_schmidt_with_inner(&vecs, dot, "test").is_err());
    }

    #[test]
    fn gram_schmidt_with_weighted_inner() {
        // Inner product diag(1, 4): vector (0, 1) has norm 2.
        let w = |a: &[f64], b: &[f64]| a[0] * b[0] + 4.0 * a[1] * b[1];
        let basis = gram_schmidt_with_inner(&[vec![0.0, 1.0]], w, "test").unwrap();
        assert!((basis[0][1] - 0.5).abs() < 1e-12);
    }
}
