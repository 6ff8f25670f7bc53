//! Discrete objective whose ascent the evolution approximates, and its exact
//! gradient, used to check the implemented update direction.
//!
//! `F(phi) = sum_x [L0 H_a(phi) + L1 (1 - H_a(phi)) - beta H_a(phi)] - alpha Len(phi)`
//! with `Len(phi) = sum_x delta_a(phi) |grad phi|_eps`, where the gradient
//! uses forward differences with replicated borders.

use ndarray::{Array2, ArrayView2, Zip};

use super::regularized::{delta_reg, delta_reg_prime, heaviside_reg};
use super::SolverParams;
use crate::error::{Error, Result};
use crate::scalar::Real;

fn check_same<T>(a: ArrayView2<'_, T>, b: ArrayView2<'_, T>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Forward differences `(phi[r][c+1] - phi, phi[r+1][c] - phi)`, zero on the
/// last column / row.
fn forward_diffs<T: Real>(phi: ArrayView2<'_, T>, r: usize, c: usize) -> (T, T) {
    let (h, w) = phi.dim();
    let p = phi[[r, c]];
    let dx = if c + 1 < w { phi[[r, c + 1]] - p } else { T::zero() };
    let dy = if r + 1 < h { phi[[r + 1, c]] - p } else { T::zero() };
    (dx, dy)
}

/// `sum_x delta_a(phi) sqrt(dx^2 + dy^2 + eps^2)`.
pub fn regularized_length<T: Real>(phi: ArrayView2<'_, T>, a: T, eps: T) -> T {
    let eps2 = eps * eps;
    phi.indexed_iter()
        .map(|((r, c), &p)| {
            let (dx, dy) = forward_diffs(phi, r, c);
            delta_reg(p, a) * (dx * dx + dy * dy + eps2).sqrt()
        })
        .sum()
}

/// Exact gradient of [`regularized_length`] with respect to every pixel.
pub fn length_gradient<T: Real>(phi: ArrayView2<'_, T>, a: T, eps: T) -> Array2<T> {
    let (h, w) = phi.dim();
    let eps2 = eps * eps;
    let mut grad = Array2::<T>::zeros((h, w));
    for r in 0..h {
        for c in 0..w {
            let p = phi[[r, c]];
            let (dx, dy) = forward_diffs(phi, r, c);
            let g = (dx * dx + dy * dy + eps2).sqrt();
            grad[[r, c]] += delta_reg_prime(p, a) * g;
            let weight = delta_reg(p, a) / g;
            if c + 1 < w {
                grad[[r, c + 1]] += weight * dx;
                grad[[r, c]] -= weight * dx;
            }
            if r + 1 < h {
                grad[[r + 1, c]] += weight * dy;
                grad[[r, c]] -= weight * dy;
            }
        }
    }
    grad
}

/// Discrete objective `F` for per-pixel log-density fields `l0`, `l1`.
pub fn discrete_energy<T: Real>(
    phi: ArrayView2<'_, T>,
    l0: ArrayView2<'_, T>,
    l1: ArrayView2<'_, T>,
    params: &SolverParams<T>,
) -> Result<T> {
    check_same(phi, l0)?;
    check_same(phi, l1)?;
    let mut region = T::zero();
    Zip::from(phi).and(l0).and(l1).for_each(|&p, &a, &b| {
        let hv = heaviside_reg(p, params.a);
        region += a * hv + b * (T::one() - hv) - params.beta * hv;
    });
    let length = if params.alpha > T::zero() {
        regularized_length(phi, params.a, params.eps_curv)
    } else {
        T::zero()
    };
    Ok(region - params.alpha * length)
}

/// Exact gradient of [`discrete_energy`].
pub fn energy_gradient<T: Real>(
    phi: ArrayView2<'_, T>,
    l0: ArrayView2<'_, T>,
    l1: ArrayView2<'_, T>,
    params: &SolverParams<T>,
) -> Result<Array2<T>> {
    check_same(phi, l0)?;
    check_same(phi, l1)?;
    let mut grad = Array2::<T>::zeros(phi.dim());
    Zip::from(&mut grad).and(phi).and(l0).and(l1).for_each(|g, &p, &a, &b| {
        *g = delta_reg(p, params.a) * (a - b - params.beta);
    });
    if params.alpha > T::zero() {
        let lg = length_gradient(phi, params.a, params.eps_curv);
        Zip::from(&mut grad).and(&lg).for_each(|g, &l| *g -= params.alpha * l);
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_field(seed: u64, h: usize, w: usize, scale: f64) -> Array2<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_simple_fn((h, w), || rng.random_range(-scale..scale))
    }

    #[test]
    fn length_gradient_matches_finite_differences() {
        let phi = random_field(1, 9, 7, 2.0);
        let g = length_gradient(phi.view(), 1.0, 1e-3);
        let h = 1e-6;
        for r in 0..9 {
            for c in 0..7 {
                let mut up = phi.clone();
                up[[r, c]] += h;
                let mut dn = phi.clone();
                dn[[r, c]] -= h;
                let fd = (regularized_length(up.view(), 1.0, 1e-3) - regularized_length(dn.view(), 1.0, 1e-3)) / (2.0 * h);
                assert!((fd - g[[r, c]]).abs() < 1e-6 * (1.0 + fd.abs()), "({r},{c}) fd {fd} vs {}", g[[r, c]]);
            }
        }
    }

    #[test]
    fn flat_field_has_minimal_length() {
        let flat = Array2::from_elem((6, 6), 0.0f64);
        let eps = 1e-8;
        let expected = 36.0 * delta_reg(0.0, 1.0) * eps;
        assert!((regularized_length(flat.view(), 1.0f64, eps) - expected).abs() < 1e-20);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let phi = Array2::<f64>::zeros((3, 3));
        let other = Array2::<f64>::zeros((3, 2));
        let p = SolverParams::default();
        assert!(discrete_energy(phi.view(), other.view(), phi.view(), &p).is_err());
        assert!(energy_gradient(phi.view(), phi.view(), other.view(), &p).is_err());
    }
}
