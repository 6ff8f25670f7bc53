use ndarray::{Array2, ArrayView2, Zip};

use super::curvature::curvature_div;
use super::regularized::delta_reg;
use super::{LevelSet, SolverParams, PHI_CLAMP};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Ascent direction `delta_a(phi) [alpha kappa - beta + driving]`.
///
/// The curvature term is skipped when `alpha == 0`.
pub fn functional_derivative<T: Real>(
    phi: ArrayView2<'_, T>,
    driving: ArrayView2<'_, T>,
    params: &SolverParams<T>,
) -> Result<Array2<T>> {
    if phi.dim() != driving.dim() {
        return Err(Error::ShapeMismatch {
            expected: phi.dim(),
            found: driving.dim(),
        });
    }
    let mut out = Array2::<T>::zeros(phi.dim());
    if params.alpha > T::zero() {
        let kappa = curvature_div(phi, params.eps_curv);
        Zip::from(&mut out)
            .and(phi)
            .and(driving)
            .and(&kappa)
            .for_each(|o, &p, &d, &k| {
                *o = delta_reg(p, params.a) * (params.alpha * k - params.beta + d);
            });
    } else {
        Zip::from(&mut out).and(phi).and(driving).for_each(|o, &p, &d| {
            *o = delta_reg(p, params.a) * (d - params.beta);
        });
    }
    Ok(out)
}

/// One explicit Euler step `phi + dt * functional_derivative`, clamped to
/// `[-PHI_CLAMP, PHI_CLAMP]`.
pub fn evolve_step<T: Real>(
    phi: &LevelSet<T>,
    driving: ArrayView2<'_, T>,
    params: &SolverParams<T>,
) -> Result<LevelSet<T>> {
    step_checked(phi, driving, params, 0)
}

fn step_checked<T: Real>(
    phi: &LevelSet<T>,
    driving: ArrayView2<'_, T>,
    params: &SolverParams<T>,
    step: usize,
) -> Result<LevelSet<T>> {
    let mut next = functional_derivative(phi.values(), driving, params)?;
    let bound = T::lit(PHI_CLAMP);
    let mut finite = true;
    Zip::from(&mut next).and(phi.values()).for_each(|n, &p| {
        let v = p + params.dt * *n;
        finite &= v.is_finite();
        *n = v.max(-bound).min(bound);
    });
    if !finite {
        return Err(Error::Diverged { step });
    }
    Ok(LevelSet { values: next })
}

/// Fraction of pixels on which `phi > 0` differs between `a` and `b`.
pub fn sign_change_fraction<T: Real>(a: ArrayView2<'_, T>, b: ArrayView2<'_, T>) -> f64 {
    let changed = Zip::from(a)
        .and(b)
        .fold(0usize, |acc, &x, &y| acc + usize::from((x > T::zero()) != (y > T::zero())));
    changed as f64 / a.len().max(1) as f64
}

/// Repeats [`evolve_step`] up to `inner_steps` times, stopping early once a
/// step flips fewer than `sign_change_tol` of the pixels.
pub fn run_evolution<T: Real>(
    phi0: &LevelSet<T>,
    driving: ArrayView2<'_, T>,
    params: &SolverParams<T>,
) -> Result<(LevelSet<T>, usize)> {
    params.validate()?;
    let tol = params.sign_change_tol.as_f64();
    let mut phi = phi0.clone();
    for step in 0..params.inner_steps {
        let next = step_checked(&phi, driving, params, step)?;
        let changed = sign_change_fraction(phi.values(), next.values());
        phi = next;
        if changed < tol {
            return Ok((phi, step + 1));
        }
    }
    Ok((phi, params.inner_steps))
}
