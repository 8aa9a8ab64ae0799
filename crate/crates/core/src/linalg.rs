//! Dense linear algebra kernels: symmetric eigendecomposition and Cholesky solves.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{FclsError, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a dense symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and an orthonormal matrix whose
/// column `k` is the eigenvector of eigenvalue `k`. Only the upper triangle
/// of `a` is trusted to be meaningful; the input is symmetrised first.
///
/// Rotations are never applied to an exactly zero off-diagonal entry, so a
/// block-diagonal input (e.g. the Laplacian of a disconnected graph) yields
/// eigenvectors supported on a single block.
pub fn symmetric_eigen<T: Scalar>(a: ArrayView2<'_, T>) -> Result<(Array1<T>, Array2<T>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(FclsError::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(FclsError::InvalidArgument(
            "non-finite entry in symmetric eigensolver input".into(),
        ));
    }

    let mut m = Array2::<T>::zeros((n, n));
    for i in 0..n {
        m[[i, i]] = a[[i, i]];
        for j in (i + 1)..n {
            let v = a[[i, j]];
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    let mut v = Array2::<T>::eye(n);

    let frob = m.iter().map(|&x| x * x).sum::<T>().sqrt();
    let target = T::epsilon() * frob;
    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        if off_diagonal_norm(&m) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let two = T::lit(2.0);
                let theta = (m[[q, q]] - m[[p, p]]) / (two * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(T::one()));
                let c = T::one() / t.hypot(T::one());
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s);
            }
        }
    }
    if !converged {
        let off = off_diagonal_norm(&m);
        if off > target {
            return Err(FclsError::EigenFailure {
                sweeps: MAX_SWEEPS,
                off_norm: off.as_f64(),
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[[i, i]]
            .partial_cmp(&m[[j, j]])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut vectors = Array2::<T>::zeros((n, n));
    for (k, &i) in order.iter().enumerate() {
        vectors.column_mut(k).assign(&v.column(i));
    }
    Ok((values, vectors))
}

fn off_diagonal_norm<T: Scalar>(m: &Array2<T>) -> T {
    let n = m.nrows();
    let mut acc = T::zero();
    for p in 0..n {
        for q in (p + 1)..n {
            acc += m[[p, q]] * m[[p, q]];
        }
    }
    (acc + acc).sqrt()
}

fn rotate<T: Scalar>(m: &mut Array2<T>, v: &mut Array2<T>, p: usize, q: usize, c: T, s: T) {
    let n = m.nrows();
    for k in 0..n {
        let akp = m[[k, p]];
        let akq = m[[k, q]];
        m[[k, p]] = c * akp - s * akq;
        m[[k, q]] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = m[[p, k]];
        let aqk = m[[q, k]];
        m[[p, k]] = c * apk - s * aqk;
        m[[q, k]] = s * apk + c * aqk;
    }
    m[[p, q]] = T::zero();
    m[[q, p]] = T::zero();
    for k in 0..n {
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = c * vkp - s * vkq;
        v[[k, q]] = s * vkp + c * vkq;
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<T: Scalar>(a: ArrayView2<'_, T>) -> Result<Array2<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(FclsError::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    let scale = (0..n).map(|i| a[[i, i]].abs()).fold(T::zero(), T::max);
    let floor = T::epsilon() * scale * T::from_usize(n.max(1)).unwrap();
    let mut l = Array2::<T>::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > floor) {
            return Err(FclsError::RankDeficient { pivot: j, size: n });
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut acc = a[[i, j]];
            for k in 0..j {
                acc -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = acc / ljj;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` given the factor from [`cholesky`].
pub fn cholesky_solve<T: Scalar>(l: &Array2<T>, b: &Array1<T>) -> Array1<T> {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        let mut acc = y[i];
        for k in 0..i {
            acc -= l[[i, k]] * y[k];
        }
        y[i] = acc / l[[i, i]];
    }
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in (i + 1)..n {
            acc -= l[[k, i]] * y[k];
        }
        y[i] = acc / l[[i, i]];
    }
    y
}

/// Solves the symmetric positive definite system `a x = b`.
pub fn spd_solve<T: Scalar>(a: ArrayView2<'_, T>, b: &Array1<T>) -> Result<Array1<T>> {
    let l = cholesky(a)?;
    Ok(cholesky_solve(&l, b))
}

pub(crate) fn max_abs<T: Scalar>(xs: impl IntoIterator<Item = T>) -> T {
    xs.into_iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}
