//! Level-set representation of the two-region partition and its explicit
//! gradient-ascent evolution.

mod curvature;
mod energy;
mod evolve;
mod regularized;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use curvature::curvature_div;
pub use energy::{discrete_energy, energy_gradient, length_gradient, regularized_length};
pub use evolve::{evolve_step, functional_derivative, run_evolution, sign_change_fraction};
pub use regularized::{delta_reg, delta_reg_prime, heaviside_reg};

/// Bound applied to `|phi|` after every step.
pub const PHI_CLAMP: f64 = 100.0;

/// Level-set function on the working grid; `phi > 0` is region 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet<T> {
    values: Array2<T>,
}

impl<T: Real> LevelSet<T> {
    pub fn new(values: Array2<T>) -> Result<Self> {
        if let Some(((row, col), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> ArrayView2<'_, T> {
        self.values.view()
    }

    pub fn into_values(self) -> Array2<T> {
        self.values
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    /// Number of pixels with `phi > 0`.
    pub fn positive_count(&self) -> usize {
        self.values.iter().filter(|&&v| v > T::zero()).count()
    }

    pub fn negated(&self) -> Self {
        Self {
            values: self.values.mapv(|v| -v),
        }
    }
}

/// Spherical cap `0.25 - ((x - 0.5)^2 + (y - 0.5)^2)` sampled at pixel
/// centers of the unit square, `x` along columns.
pub fn init_phi<T: Real>(height: usize, width: usize) -> Result<LevelSet<T>> {
    if height < 2 || width < 2 {
        return Err(Error::InvalidDimensions {
            height,
            width,
            reason: "level set must be at least 2x2",
        });
    }
    let values = Array2::from_shape_fn((height, width), |(r, c)| {
        let x = (c as f64 + 0.5) / width as f64 - 0.5;
        let y = (r as f64 + 0.5) / height as f64 - 0.5;
        T::lit(0.25 - (x * x + y * y))
    });
    Ok(LevelSet { values })
}

/// Weights and step controls of the evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams<T> {
    /// Boundary-length weight.
    pub alpha: T,
    /// Area weight on region 0.
    pub beta: T,
    /// Width of the smoothed Heaviside and delta.
    pub a: T,
    pub dt: T,
    /// Floor added under the gradient magnitude in the curvature term.
    pub eps_curv: T,
    /// Evolution steps between statistics updates.
    pub inner_steps: usize,
    /// Stop once the fraction of pixels changing sign falls below this.
    pub sign_change_tol: T,
    pub max_outer_iters: usize,
}

impl<T: Real> Default for SolverParams<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(0.1),
            beta: T::lit(0.01),
            a: T::one(),
            dt: T::one(),
            eps_curv: T::lit(1e-8),
            inner_steps: 10,
            sign_change_tol: T::lit(1e-4),
            max_outer_iters: 100,
        }
    }
}

impl<T: Real> SolverParams<T> {
    /// Same parameters in another scalar type.
    pub fn cast<U: Real>(&self) -> SolverParams<U> {
        let c = |v: T| U::lit(v.as_f64());
        SolverParams {
            alpha: c(self.alpha),
            beta: c(self.beta),
            a: c(self.a),
            dt: c(self.dt),
            eps_curv: c(self.eps_curv),
            inner_steps: self.inner_steps,
            sign_change_tol: c(self.sign_change_tol),
            max_outer_iters: self.max_outer_iters,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter(what.to_string()))
            }
        };
        check(self.alpha >= T::zero() && self.alpha.is_finite(), "alpha must be finite and >= 0")?;
        check(self.beta >= T::zero() && self.beta.is_finite(), "beta must be finite and >= 0")?;
        check(self.a > T::zero() && self.a.is_finite(), "a must be finite and > 0")?;
        check(self.dt > T::zero() && self.dt.is_finite(), "dt must be finite and > 0")?;
        check(self.eps_curv > T::zero() && self.eps_curv.is_finite(), "eps_curv must be > 0")?;
        check(
            self.sign_change_tol >= T::zero() && self.sign_change_tol < T::one(),
            "sign_change_tol must lie in [0, 1)",
        )?;
        check(self.max_outer_iters >= 1, "max_outer_iters must be >= 1")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_center_and_corner() {
        let phi = init_phi::<f64>(101, 101).unwrap();
        assert!((phi.values()[[50, 50]] - 0.25).abs() < 1e-12);
        let corner = phi.values()[[0, 0]];
        assert!((corner + 0.25).abs() < 0.01, "{corner}");
    }

    #[test]
    fn cap_zero_set_is_half_radius_circle() {
        let n = 200;
        let phi = init_phi::<f64>(n, n).unwrap();
        for ((r, c), &v) in phi.values().indexed_iter() {
            let x = (c as f64 + 0.5) / n as f64 - 0.5;
            let y = (r as f64 + 0.5) / n as f64 - 0.5;
            assert_eq!(v > 0.0, x * x + y * y < 0.25);
        }
    }

    #[test]
    fn cap_rejects_tiny_grids() {
        assert!(init_phi::<f64>(1, 5).is_err());
    }

    #[test]
    fn default_params_validate() {
        SolverParams::<f64>::default().validate().unwrap();
        let bad = SolverParams::<f64> {
            dt: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverParams::<f64> {
            sign_change_tol: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn params_deserialize_with_defaults() {
        let p: SolverParams<f64> = serde_json::from_str(r#"{"alpha": 2.5}"#).unwrap();
        assert_eq!(p.alpha, 2.5);
        assert_eq!(p.inner_steps, 10);
    }
}
