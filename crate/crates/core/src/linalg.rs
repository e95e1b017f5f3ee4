//! Small dense linear algebra for Newton steps and collinearity checks.

use ndarray::{Array1, Array2, ArrayView1};

use crate::scalar::Scalar;

/// Lower Cholesky factor of a symmetric positive-definite matrix, or `None`
/// when a pivot falls below `rel_tol` times the largest diagonal entry.
pub fn cholesky<T: Scalar>(a: &Array2<T>, rel_tol: T) -> Option<Array2<T>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "cholesky needs a square matrix");
    let scale = (0..n).map(|i| a[[i, i]].abs()).fold(T::zero(), T::max);
    let floor = rel_tol * scale.max(T::min_positive_value());
    let mut l = Array2::<T>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > floor) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the lower factor `L`.
pub fn cholesky_solve<T: Scalar>(l: &Array2<T>, b: &Array1<T>) -> Array1<T> {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    y
}

pub fn cholesky_inverse<T: Scalar>(l: &Array2<T>) -> Array2<T> {
    let n = l.nrows();
    let mut inv = Array2::zeros((n, n));
    for j in 0..n {
        let mut e = Array1::zeros(n);
        e[j] = T::one();
        inv.column_mut(j).assign(&cholesky_solve(l, &e));
    }
    inv
}

/// Residual sum of squares of `target` after least-squares projection onto
/// the span of `predictors` (all columns given already centered).
///
/// Uses modified Gram–Schmidt with one re-orthogonalization pass. A
/// predictor whose remaining norm is below `rel_tol` of its original norm is
/// linearly dependent on earlier ones and is skipped, so rank-deficient
/// predictor sets are handled.
pub fn projection_residual<T: Scalar>(
    target: ArrayView1<'_, T>,
    predictors: &[ArrayView1<'_, T>],
    rel_tol: T,
) -> T {
    let mut basis: Vec<Array1<T>> = Vec::with_capacity(predictors.len());
    for p in predictors {
        let original = p.dot(p).sqrt();
        if original == T::zero() {
            continue;
        }
        let mut v = p.to_owned();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.scaled_add(-c, q);
            }
        }
        let norm = v.dot(&v).sqrt();
        if norm > rel_tol * original {
            v.mapv_inplace(|x| x / norm);
            basis.push(v);
        }
    }
    let mut r = target.to_owned();
    for _ in 0..2 {
        for q in &basis {
            let c = q.dot(&r);
            r.scaled_add(-c, q);
        }
    }
    r.dot(&r)
}
