//! Dense Cholesky factorization and triangular solves on row-major storage.

use ndarray::{Array2, ArrayView2};

use crate::scalar::Real;

/// Lower-triangular `L` with `L L^T = a`, or `None` when a pivot is not
/// strictly positive (matrix not numerically positive definite).
pub fn cholesky_lower<T: Real>(a: ArrayView2<'_, T>) -> Option<Array2<T>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = Array2::<T>::zeros((n, n));
    {
        let data = l.as_slice_mut().expect("fresh array is contiguous");
        for i in 0..n {
            for j in 0..=i {
                let (row_i, row_j) = (i * n, j * n);
                let dot = data[row_i..row_i + j]
                    .iter()
                    .zip(&data[row_j..row_j + j])
                    .fold(T::zero(), |acc, (x, y)| acc + *x * *y);
                let value = a[[i, j]] - dot;
                if i == j {
                    if !(value > T::zero()) || !value.is_finite() {
                        return None;
                    }
                    data[row_i + i] = value.sqrt();
                } else {
                    data[row_i + j] = value / data[row_j + j];
                }
            }
        }
    }
    Some(l)
}

/// Solves `L y = b` in place for lower-triangular `L`.
pub fn forward_substitute<T: Real>(l: ArrayView2<'_, T>, b: &mut [T]) {
    let n = b.len();
    let data = l.as_slice().expect("factor is contiguous");
    for i in 0..n {
        let row = &data[i * n..i * n + i];
        let mut acc = b[i];
        for (lk, yk) in row.iter().zip(b[..i].iter()) {
            acc -= *lk * *yk;
        }
        b[i] = acc / data[i * n + i];
    }
}

/// `log det(L L^T) = 2 sum log L_ii`.
pub fn log_det_from_factor<T: Real>(l: ArrayView2<'_, T>) -> T {
    l.diag().iter().map(|d| d.ln()).sum::<T>() * T::lit(2.0)
}
