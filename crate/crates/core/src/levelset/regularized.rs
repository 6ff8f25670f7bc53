use std::f64::consts::PI;

use crate::scalar::Real;

/// Smoothed step `1/2 (1 + 2/pi atan(z/a))`.
pub fn heaviside_reg<T: Real>(z: T, a: T) -> T {
    let half = T::lit(0.5);
    half * (T::one() + T::lit(2.0 / PI) * (z / a).atan())
}

/// Derivative of [`heaviside_reg`]: `a / (pi (a^2 + z^2))`.
pub fn delta_reg<T: Real>(z: T, a: T) -> T {
    a / (T::lit(PI) * (a * a + z * z))
}

/// Derivative of [`delta_reg`]: `-2 a z / (pi (a^2 + z^2)^2)`.
pub fn delta_reg_prime<T: Real>(z: T, a: T) -> T {
    let s = a * a + z * z;
    -T::lit(2.0) * a * z / (T::lit(PI) * s * s)
}
