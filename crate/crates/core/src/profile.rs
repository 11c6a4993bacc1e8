//! The self-similar density profile `f(s)`.
//!
//! For `gamma = 1` the profile is the Gaussian-type `alpha exp(-lambda s / 2K)`.
//! For `gamma > 1` it is `max(alpha - c s, 0)^(1/(gamma-1))` with
//! `c = lambda (gamma-1) / (2 K gamma)`; when `lambda > 0` the support ends at
//! `s* = alpha / c`. Both branches satisfy `lambda + 2 K gamma f^(gamma-2) f' = 0`
//! wherever `f > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::PhysParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    params: PhysParams,
    cutoff_s: Option<f64>,
}

/// Derivative of the profile. `smooth` is false only at a cutoff boundary
/// where the profile is not C¹ (`gamma >= 2`); `value` is then the
/// interior-side limit, which is infinite for `gamma > 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSlope {
    pub value: f64,
    pub smooth: bool,
}

impl DensityProfile {
    pub fn new(params: PhysParams) -> Self {
        let cutoff_s = if !params.is_isothermal() && params.lambda() > 0.0 {
            Some(params.alpha() / linear_coefficient(&params))
        } else {
            None
        };
        Self { params, cutoff_s }
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    /// Support boundary `s*`, present iff `gamma > 1` and `lambda > 0`.
    pub fn cutoff_s(&self) -> Option<f64> {
        self.cutoff_s
    }

    /// `c = lambda (gamma-1) / (2 K gamma)` for `gamma > 1`; for the
    /// isothermal branch this is the exponent rate `lambda / 2K`.
    pub fn coefficient(&self) -> f64 {
        if self.params.is_isothermal() {
            self.params.lambda() / (2.0 * self.params.k())
        } else {
            linear_coefficient(&self.params)
        }
    }

    /// True when `s` lies strictly inside the support.
    pub fn in_support(&self, s: f64) -> bool {
        self.params.alpha() > 0.0 && self.cutoff_s.is_none_or(|c| s < c)
    }

    /// C¹ regularity at the cutoff surface: always for `gamma = 1` or
    /// `lambda <= 0`; for `lambda > 0` only when `gamma < 2`.
    pub fn is_c1(&self) -> bool {
        self.params.is_isothermal() || self.params.lambda() <= 0.0 || self.params.gamma() < 2.0
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        check_s(s)?;
        let p = &self.params;
        if p.alpha() == 0.0 {
            return Ok(0.0);
        }
        if p.is_isothermal() {
            return Ok(p.alpha() * (-self.coefficient() * s).exp());
        }
        let base = p.alpha() - self.coefficient() * s;
        if base <= 0.0 {
            Ok(0.0)
        } else {
            Ok(base.powf(1.0 / (p.gamma() - 1.0)))
        }
    }

    pub fn derivative(&self, s: f64) -> Result<ProfileSlope> {
        check_s(s)?;
        let p = &self.params;
        let smooth = |value| ProfileSlope {
            value,
            smooth: true,
        };
        if p.alpha() == 0.0 {
            return Ok(smooth(0.0));
        }
        if p.is_isothermal() {
            let rate = self.coefficient();
            return Ok(smooth(-rate * p.alpha() * (-rate * s).exp()));
        }
        // f' = -(lambda / 2 K gamma) * base^((2-gamma)/(gamma-1))
        let scale = -p.lambda() / (2.0 * p.k() * p.gamma());
        let exponent = (2.0 - p.gamma()) / (p.gamma() - 1.0);
        if let Some(cut) = self.cutoff_s {
            if s > cut {
                return Ok(smooth(0.0));
            }
            if s == cut {
                return Ok(if p.gamma() < 2.0 {
                    smooth(0.0)
                } else if p.gamma() == 2.0 {
                    ProfileSlope {
                        value: scale,
                        smooth: false,
                    }
                } else {
                    ProfileSlope {
                        value: f64::NEG_INFINITY,
                        smooth: false,
                    }
                });
            }
        }
        let base = p.alpha() - self.coefficient() * s;
        Ok(smooth(scale * base.powf(exponent)))
    }
}

fn linear_coefficient(p: &PhysParams) -> f64 {
    p.lambda() * (p.gamma() - 1.0) / (2.0 * p.k() * p.gamma())
}

fn check_s(s: f64) -> Result<()> {
    if s >= 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "similarity variable must be a finite value ≥ 0, got {s}"
        )))
    }
}
