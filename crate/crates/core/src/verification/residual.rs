//! Second-order central-difference residuals of the mass and momentum
//! equations, `rho_t + div(rho u)` and `rho (u_t + (u·∇)u) + ∇P - mu Δu`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fields::{FieldSample, FieldSource};

/// Residuals below this magnitude are at the rounding floor; no order is
/// inferred from them.
pub const ROUNDING_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedOrder {
    pub mass: Option<f64>,
    pub momentum: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `(t, x, y, z)`.
    pub point: [f64; 4],
    pub stencil_h: f64,
    pub mass_residual: f64,
    pub momentum_residual: [f64; 3],
    pub ns_momentum_residual: [f64; 3],
    pub mu: f64,
    /// The stencil touches the support boundary; the residual is reported
    /// but carries no convergence claim.
    pub kink_crossing: bool,
    /// From comparing against the `h/2` stencil, when computed.
    pub observed_order: Option<ObservedOrder>,
}

impl ResidualReport {
    pub fn momentum_norm(&self) -> f64 {
        norm(&self.momentum_residual)
    }

    pub fn ns_momentum_norm(&self) -> f64 {
        norm(&self.ns_momentum_residual)
    }
}

pub(crate) fn norm(v: &[f64; 3]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

struct Stencil {
    center: FieldSample,
    /// `[axis][0 = minus, 1 = plus]`
    space: [[FieldSample; 2]; 3],
    time: [FieldSample; 2],
}

fn gather<S: FieldSource + ?Sized>(src: &S, pt: [f64; 4], h: f64) -> Result<Stencil> {
    let (center, space) = gather_space(src, pt, h)?;
    let [t, x, y, z] = pt;
    let time = [src.sample(t - h, x, y, z)?, src.sample(t + h, x, y, z)?];
    Ok(Stencil {
        center,
        space,
        time,
    })
}

type SpaceStencil = (FieldSample, [[FieldSample; 2]; 3]);

fn gather_space<S: FieldSource + ?Sized>(src: &S, pt: [f64; 4], h: f64) -> Result<SpaceStencil> {
    let [t, x, y, z] = pt;
    let center = src.sample(t, x, y, z)?;
    let mut space = [[center; 2]; 3];
    for (axis, pair) in space.iter_mut().enumerate() {
        for (side, slot) in pair.iter_mut().enumerate() {
            let d = if side == 0 { -h } else { h };
            let mut q = [x, y, z];
            q[axis] += d;
            *slot = src.sample(t, q[0], q[1], q[2])?;
        }
    }
    Ok((center, space))
}

fn kink_crossing(st: &Stencil, cutoff: Option<f64>, h: f64) -> bool {
    let Some(s_star) = cutoff else {
        return false;
    };
    let all = std::iter::once(&st.center)
        .chain(st.space.iter().flatten())
        .chain(st.time.iter());
    let (mut inside, mut outside) = (false, false);
    for sample in all {
        if sample.s < s_star {
            inside = true;
        } else {
            outside = true;
        }
    }
    let grad_s = norm(&std::array::from_fn(|axis| {
        (st.space[axis][1].s - st.space[axis][0].s) / (2.0 * h)
    }));
    (inside && outside) || (st.center.s - s_star).abs() <= 2.0 * h * grad_s
}

/// Residuals at one point for stencil size `h` and viscosity `mu`.
#[allow(clippy::too_many_arguments)]
pub fn residual_at<S: FieldSource + ?Sized>(
    src: &S,
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    h: f64,
    mu: f64,
) -> Result<ResidualReport> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("h", format!("stencil size must be positive, got {h}")));
    }
    let pt = [t, x, y, z];
    let st = gather(src, pt, h)?;
    let c = &st.center;
    let inv2h = 1.0 / (2.0 * h);
    let inv_h2 = 1.0 / (h * h);

    let mut mass = (st.time[1].rho - st.time[0].rho) * inv2h;
    for axis in 0..3 {
        let [m, p] = &st.space[axis];
        mass += (p.rho * p.u[axis] - m.rho * m.u[axis]) * inv2h;
    }

    let mut momentum = [0.0; 3];
    let mut laplacian = [0.0; 3];
    for i in 0..3 {
        let mut accel = (st.time[1].u[i] - st.time[0].u[i]) * inv2h;
        for j in 0..3 {
            let [m, p] = &st.space[j];
            accel += c.u[j] * (p.u[i] - m.u[i]) * inv2h;
            laplacian[i] += (p.u[i] - 2.0 * c.u[i] + m.u[i]) * inv_h2;
        }
        let [m, p] = &st.space[i];
        momentum[i] = c.rho * accel + (p.p - m.p) * inv2h;
    }
    let ns = std::array::from_fn(|i| momentum[i] - mu * laplacian[i]);

    Ok(ResidualReport {
        point: pt,
        stencil_h: h,
        mass_residual: mass,
        momentum_residual: momentum,
        ns_momentum_residual: ns,
        mu,
        kink_crossing: kink_crossing(&st, src.cutoff_s(), h),
        observed_order: None,
    })
}

pub fn euler_residual<S: FieldSource + ?Sized>(
    src: &S,
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    h: f64,
) -> Result<ResidualReport> {
    residual_at(src, t, x, y, z, h, 0.0)
}

#[allow(clippy::too_many_arguments)]
pub fn navier_stokes_residual<S: FieldSource + ?Sized>(
    src: &S,
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    h: f64,
    mu: f64,
) -> Result<ResidualReport> {
    if !(mu >= 0.0) {
        return Err(invalid("mu", format!("viscosity must be ≥ 0, got {mu}")));
    }
    residual_at(src, t, x, y, z, h, mu)
}

fn order(coarse: f64, fine: f64) -> Option<f64> {
    (coarse.abs() > ROUNDING_FLOOR && fine.abs() > 0.0).then(|| (coarse / fine).abs().log2())
}

/// Residuals at `h`, with the observed order from a second evaluation at
/// `h/2`.
#[allow(clippy::too_many_arguments)]
pub fn refined_residual<S: FieldSource + ?Sized>(
    src: &S,
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    h: f64,
    mu: f64,
) -> Result<ResidualReport> {
    let mut coarse = residual_at(src, t, x, y, z, h, mu)?;
    let fine = residual_at(src, t, x, y, z, 0.5 * h, mu)?;
    coarse.observed_order = Some(ObservedOrder {
        mass: order(coarse.mass_residual, fine.mass_residual),
        momentum: order(coarse.ns_momentum_norm(), fine.ns_momentum_norm()),
    });
    coarse.kink_crossing |= fine.kink_crossing;
    Ok(coarse)
}

/// Central-difference curl of the velocity at time `t`.
pub fn fd_curl<S: FieldSource + ?Sized>(
    src: &S,
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    h: f64,
) -> Result<[f64; 3]> {
    let (_, space) = gather_space(src, [t, x, y, z], h)?;
    let d = |i: usize, j: usize| (space[j][1].u[i] - space[j][0].u[i]) / (2.0 * h);
    Ok([d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)])
}

/// Seven-point Laplacian of each velocity component at time `t`.
pub fn fd_velocity_laplacian<S: FieldSource + ?Sized>(
    src: &S,
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    h: f64,
) -> Result<[f64; 3]> {
    let (center, space) = gather_space(src, [t, x, y, z], h)?;
    Ok(std::array::from_fn(|i| {
        (0..3)
            .map(|j| (space[j][1].u[i] - 2.0 * center.u[i] + space[j][0].u[i]) / (h * h))
            .sum()
    }))
}
