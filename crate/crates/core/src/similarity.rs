//! Self-similar variables: `s = (x²+y²)/a² + z²/b²` in 3D, `eta = (x²+y²)/a²` in 2D.

use crate::error::{Error, Result};

pub(crate) fn check_scale(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::State(format!(
            "scale factor {name} must be positive, got {v}"
        )))
    }
}

pub fn similarity_s(x: f64, y: f64, z: f64, a: f64, b: f64) -> Result<f64> {
    check_scale("a", a)?;
    check_scale("b", b)?;
    Ok((x * x + y * y) / (a * a) + z * z / (b * b))
}

pub fn similarity_eta(x: f64, y: f64, a: f64) -> Result<f64> {
    check_scale("a", a)?;
    Ok((x * x + y * y) / (a * a))
}
