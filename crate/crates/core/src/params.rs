//! Physical constants of a solution family.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Adiabatic indices closer to one than this are evaluated with the
/// isothermal (exponential) branch.
pub const ISOTHERMAL_EPS: f64 = 1e-12;

/// Constants defining one rotational self-similar family: pressure law
/// `P = K rho^gamma`, separation constant `lambda`, profile amplitude
/// `alpha`, rotation constant `xi`, and the viscosity `mu` used only by the
/// Navier-Stokes check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct PhysParams {
    k: f64,
    gamma: f64,
    lambda: f64,
    alpha: f64,
    xi: f64,
    mu: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    #[serde(rename = "K")]
    k: f64,
    gamma: f64,
    lambda: f64,
    alpha: f64,
    xi: f64,
    #[serde(default)]
    mu: f64,
}

impl TryFrom<RawParams> for PhysParams {
    type Error = crate::Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        PhysParams::new(raw.k, raw.gamma, raw.lambda, raw.alpha, raw.xi)?.with_mu(raw.mu)
    }
}

impl From<PhysParams> for RawParams {
    fn from(p: PhysParams) -> Self {
        RawParams {
            k: p.k,
            gamma: p.gamma,
            lambda: p.lambda,
            alpha: p.alpha,
            xi: p.xi,
            mu: p.mu,
        }
    }
}

fn finite(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(name, format!("must be finite, got {v}")))
    }
}

impl PhysParams {
    /// Validates `K > 0`, `gamma >= 1`, `alpha >= 0`. `xi = 0` is accepted
    /// (irrotational degenerate family) and reported by [`is_rotational`].
    ///
    /// [`is_rotational`]: PhysParams::is_rotational
    pub fn new(k: f64, gamma: f64, lambda: f64, alpha: f64, xi: f64) -> Result<Self> {
        let k = finite("K", k)?;
        let gamma = finite("gamma", gamma)?;
        let lambda = finite("lambda", lambda)?;
        let alpha = finite("alpha", alpha)?;
        let xi = finite("xi", xi)?;
        if k <= 0.0 {
            return Err(invalid("K", format!("K must be > 0, got {k}")));
        }
        if gamma < 1.0 {
            return Err(invalid("gamma", format!("gamma must be ≥ 1, got {gamma}")));
        }
        if alpha < 0.0 {
            return Err(invalid("alpha", format!("alpha must be ≥ 0, got {alpha}")));
        }
        Ok(Self {
            k,
            gamma,
            lambda,
            alpha,
            xi,
            mu: 0.0,
        })
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        let mu = finite("mu", mu)?;
        if mu < 0.0 {
            return Err(invalid("mu", format!("mu must be ≥ 0, got {mu}")));
        }
        self.mu = mu;
        Ok(self)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// True when the isothermal branch (`gamma = 1`) applies.
    pub fn is_isothermal(&self) -> bool {
        self.gamma - 1.0 < ISOTHERMAL_EPS
    }

    /// False for the degenerate `xi = 0` family.
    pub fn is_rotational(&self) -> bool {
        self.xi != 0.0
    }

    /// Pressure `K rho^gamma`.
    pub fn pressure(&self, rho: f64) -> f64 {
        if rho == 0.0 {
            0.0
        } else {
            self.k * rho.powf(self.gamma)
        }
    }
}
