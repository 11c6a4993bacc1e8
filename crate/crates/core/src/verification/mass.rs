//! Total mass by quadrature of the density field.
//!
//! Both schemes follow the current scale factors: the tensor box has
//! half-widths `R a`, `R a`, `R b`, and the ellipsoid scheme maps the
//! support `s < s*` onto the unit ball through
//! `(x, y, z) = sqrt(s*) r (a sinθ cosφ, a sinθ sinφ, b cosθ)`. Densities are
//! always obtained from the field evaluator at physical points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Field3D, TrajectoryField3D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Quadrature {
    /// Midpoint rule with `cells` cells per axis on the box `|X| <= radius`
    /// in scaled coordinates `X = x/a, Y = y/a, Z = z/b`.
    TensorMidpoint { cells: usize, radius: f64 },
    /// Midpoint rule in `(r, cosθ, φ)` over the support ellipsoid.
    SupportEllipsoid {
        radial: usize,
        polar: usize,
        azimuthal: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadOptions {
    /// Scheme; chosen from the profile when absent.
    pub scheme: Option<Quadrature>,
    /// Disables the Richardson step (`(4 I_2n - I_n) / 3`).
    pub no_richardson: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassBudget {
    pub t: f64,
    pub total_mass: f64,
    pub quadrature: Quadrature,
    pub richardson: bool,
    /// Difference between the refined and the coarse midpoint sums.
    pub refinement_delta: f64,
}

/// Default scheme for a profile, or a configuration error when the
/// density is not integrable without an explicit truncation box.
pub fn default_quadrature(field: &Field3D) -> Result<Quadrature> {
    let p = &field.params;
    if p.alpha() == 0.0 {
        return Ok(Quadrature::TensorMidpoint {
            cells: 2,
            radius: 1.0,
        });
    }
    if field.profile.cutoff_s().is_some() {
        return Ok(Quadrature::SupportEllipsoid {
            radial: 256,
            polar: 8,
            azimuthal: 16,
        });
    }
    if p.is_isothermal() && p.lambda() > 0.0 {
        // exp(-rate R²) = e^-40 is far below double precision relative to the peak.
        let rate = field.profile.coefficient();
        return Ok(Quadrature::TensorMidpoint {
            cells: 96,
            radius: (40.0 / rate).sqrt(),
        });
    }
    Err(Error::Config(
        "density is not integrable over all space for these parameters (needs gamma = 1 with \
         lambda > 0, or lambda > 0 for compact support); give a truncation radius"
            .into(),
    ))
}

fn midpoint(i: usize, n: usize, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (i as f64 + 0.5) / n as f64
}

fn tensor_sum(field: &Field3D, cells: usize, radius: f64) -> Result<f64> {
    let (a, b) = (field.state.a, field.state.b);
    let d = 2.0 * radius / cells as f64;
    let volume = d * d * d * a * a * b;
    let slabs: Vec<f64> = (0..cells)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let z = b * midpoint(k, cells, -radius, radius);
            let mut acc = 0.0;
            for j in 0..cells {
                let y = a * midpoint(j, cells, -radius, radius);
                for i in 0..cells {
                    let x = a * midpoint(i, cells, -radius, radius);
                    acc += field.eval(x, y, z)?.rho;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(slabs.iter().sum::<f64>() * volume)
}

fn ellipsoid_sum(field: &Field3D, radial: usize, polar: usize, azimuthal: usize) -> Result<f64> {
    let s_star = field
        .profile
        .cutoff_s()
        .ok_or_else(|| Error::Config("ellipsoid quadrature needs a compact support".into()))?;
    let (a, b) = (field.state.a, field.state.b);
    let scale = s_star.sqrt();
    let dr = 1.0 / radial as f64;
    let du = 2.0 / polar as f64;
    let dphi = std::f64::consts::TAU / azimuthal as f64;
    let jacobian = a * a * b * scale.powi(3);
    let shells: Vec<f64> = (0..radial)
        .into_par_iter()
        .map(|ir| -> Result<f64> {
            let r = midpoint(ir, radial, 0.0, 1.0);
            let mut acc = 0.0;
            for iu in 0..polar {
                let u = midpoint(iu, polar, -1.0, 1.0);
                let sin_theta = (1.0 - u * u).sqrt();
                for ip in 0..azimuthal {
                    let phi = midpoint(ip, azimuthal, 0.0, std::f64::consts::TAU);
                    let x = a * scale * r * sin_theta * phi.cos();
                    let y = a * scale * r * sin_theta * phi.sin();
                    let z = b * scale * r * u;
                    acc += field.eval(x, y, z)?.rho;
                }
            }
            Ok(acc * r * r)
        })
        .collect::<Result<_>>()?;
    Ok(shells.iter().sum::<f64>() * jacobian * dr * du * dphi)
}

fn scheme_sum(field: &Field3D, q: &Quadrature, refine: usize) -> Result<f64> {
    match *q {
        Quadrature::TensorMidpoint { cells, radius } => tensor_sum(field, cells * refine, radius),
        Quadrature::SupportEllipsoid {
            radial,
            polar,
            azimuthal,
        } => ellipsoid_sum(field, radial * refine, polar, azimuthal),
    }
}

fn check_scheme(q: &Quadrature) -> Result<()> {
    let ok = match *q {
        Quadrature::TensorMidpoint { cells, radius } => {
            cells >= 1 && radius > 0.0 && radius.is_finite()
        }
        Quadrature::SupportEllipsoid {
            radial,
            polar,
            azimuthal,
        } => radial >= 1 && polar >= 1 && azimuthal >= 1,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("invalid quadrature {q:?}")))
    }
}

/// Total mass of a frozen field.
pub fn field_mass(field: &Field3D, t: f64, opts: &QuadOptions) -> Result<MassBudget> {
    let q = match opts.scheme {
        Some(q) => q,
        None => default_quadrature(field)?,
    };
    check_scheme(&q)?;
    let coarse = scheme_sum(field, &q, 1)?;
    let fine = scheme_sum(field, &q, 2)?;
    let richardson = !opts.no_richardson;
    let total_mass = if richardson {
        (4.0 * fine - coarse) / 3.0
    } else {
        fine
    };
    Ok(MassBudget {
        t,
        total_mass,
        quadrature: q,
        richardson,
        refinement_delta: fine - coarse,
    })
}

/// Total mass at time `t` along an integrated trajectory.
pub fn total_mass(source: &TrajectoryField3D, t: f64, opts: &QuadOptions) -> Result<MassBudget> {
    field_mass(&source.at(t)?, t, opts)
}
