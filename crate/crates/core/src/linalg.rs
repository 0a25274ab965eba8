//! Small dense linear-algebra kernels: a Jacobi eigensolver for symmetric
//! matrices (PCA projections) and Gaussian elimination (ridge logistic fits).
//! Matrices here are tiny (at most a few hundred rows), so simplicity and
//! determinism win over asymptotics.

use ndarray::{Array1, Array2};

use crate::num::{real, Real};

/// Eigen-decomposition of a symmetric matrix via cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` sorted by descending eigenvalue;
/// eigenvectors are the columns of the returned matrix.
pub fn symmetric_eigen<T: Real>(matrix: &Array2<T>) -> (Array1<T>, Array2<T>) {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "symmetric_eigen needs a square matrix");
    let mut a = matrix.clone();
    let mut v = Array2::<T>::eye(n);

    let tol: T = real(1e-12);
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[[p, q]] * a[[p, q]];
            }
        }
        if off.sqrt() <= tol * real(n as f64) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.abs() <= tol {
                    continue;
                }
                let app = a[[p, p]];
                let aqq = a[[q, q]];
                let theta = (aqq - app) / (real::<T>(2.0) * apq);
                // stable tangent of the rotation angle
                let t = {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;

                for i in 0..n {
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = c * aip - s * aiq;
                    a[[i, q]] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[[p, j]];
                    let aqj = a[[q, j]];
                    a[[p, j]] = c * apj - s * aqj;
                    a[[q, j]] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[[j, j]]
            .partial_cmp(&a[[i, i]])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let mut vectors = Array2::<T>::zeros((n, n));
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors[[row, new_col]] = v[[row, old_col]];
        }
    }
    (values, vectors)
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` if the system is singular to working precision.
pub fn solve<T: Real>(a: &Array2<T>, b: &Array1<T>) -> Option<Array1<T>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.len());
    let mut m = a.clone();
    let mut x = b.clone();

    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if m[[row, col]].abs() > m[[pivot, col]].abs() {
                pivot = row;
            }
        }
        if m[[pivot, col]].abs() <= real(1e-300) {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m[[col, j]];
                m[[col, j]] = m[[pivot, j]];
                m[[pivot, j]] = tmp;
            }
            let tmp = x[col];
            x[col] = x[pivot];
            x[pivot] = tmp;
        }
        for row in (col + 1)..n {
            let factor = m[[row, col]] / m[[col, col]];
            if factor == T::zero() {
                continue;
            }
            for j in col..n {
                m[[row, j]] = m[[row, j]] - factor * m[[col, j]];
            }
            x[row] = x[row] - factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for j in (col + 1)..n {
            acc = acc - m[[col, j]] * x[j];
        }
        x[col] = acc / m[[col, col]];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eigen_of_diagonal() {
        let m: Array2<f64> = array![[3.0, 0.0], [0.0, 1.0]];
        let (vals, vecs) = symmetric_eigen(&m);
        assert!((vals[0] - 3.0).abs() < 1e-10);
        assert!((vals[1] - 1.0).abs() < 1e-10);
        assert!(vecs[[0, 0]].abs() > 0.999);
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let m: Array2<f64> = array![[2.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 1.0]];
        let (vals, vecs) = symmetric_eigen(&m);
        // check A v = lambda v column by column
        for j in 0..3 {
            for i in 0..3 {
                let mut av = 0.0;
                for k in 0..3 {
                    av += m[[i, k]] * vecs[[k, j]];
                }
                assert!((av - vals[j] * vecs[[i, j]]).abs() < 1e-8, "col {j} row {i}");
            }
        }
        // eigenvalues descending
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
    }

    #[test]
    fn solve_known_system() {
        let a: Array2<f64> = array![[2.0, 1.0], [1.0, 3.0]];
        let b = array![3.0, 5.0];
        let x = solve(&a, &b).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12);
        assert!((x[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn solve_singular_returns_none() {
        let a: Array2<f64> = array![[1.0, 2.0], [2.0, 4.0]];
        let b = array![1.0, 2.0];
        assert!(solve(&a, &b).is_none());
    }
}
