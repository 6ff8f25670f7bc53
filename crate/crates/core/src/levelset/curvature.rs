use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::scalar::Real;

/// `div(grad phi / |grad phi|)` in pixel units, by the staggered
/// half-point scheme of Chan and Vese with replicated borders.
///
/// Rows are the vertical axis; each half-point coefficient uses the exact
/// difference across the half point and a central difference along it.
pub fn curvature_div<T: Real>(phi: ArrayView2<'_, T>, eps_curv: T) -> Array2<T> {
    let (h, w) = phi.dim();
    let mut out = Array2::<T>::zeros((h, w));
    if h == 0 || w == 0 {
        return out;
    }
    let eps2 = eps_curv * eps_curv;
    let half = T::lit(0.5);
    let at = |r: isize, c: isize| -> T {
        let r = r.clamp(0, h as isize - 1) as usize;
        let c = c.clamp(0, w as isize - 1) as usize;
        phi[[r, c]]
    };
    let inv_norm = |a: T, b: T| T::one() / (a * a + b * b + eps2).sqrt();

    out.as_slice_mut()
        .expect("fresh array is contiguous")
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(r, row)| {
            let r = r as isize;
            for (c, k) in row.iter_mut().enumerate() {
                let c = c as isize;
                let p = at(r, c);
                let (east, west, south, north) = (at(r, c + 1), at(r, c - 1), at(r + 1, c), at(r - 1, c));
                let c1 = inv_norm(east - p, half * (south - north));
                let c2 = inv_norm(p - west, half * (at(r + 1, c - 1) - at(r - 1, c - 1)));
                let c3 = inv_norm(south - p, half * (east - west));
                let c4 = inv_norm(p - north, half * (at(r - 1, c + 1) - at(r - 1, c - 1)));
                *k = c1 * (east - p) - c2 * (p - west) + c3 * (south - p) - c4 * (p - north);
            }
        });
    out
}
