//! Numerical certification of the exact fields: PDE residuals by finite
//! differences, total-mass quadrature, and regularity of the cutoff profile.

mod mass;
mod regularity;
mod residual;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use mass::{default_quadrature, field_mass, total_mass, MassBudget, QuadOptions, Quadrature};
pub use regularity::{cutoff_regularity_check, RegularityReport};
pub use residual::{
    euler_residual, fd_curl, fd_velocity_laplacian, navier_stokes_residual, refined_residual,
    residual_at, ObservedOrder, ResidualReport, ROUNDING_FLOOR,
};

use crate::error::Result;
use crate::fields::FieldSource;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
}

impl Percentiles {
    /// Nearest-rank percentiles; `None` for an empty input.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let rank = |q: f64| v[((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
        Some(Self {
            p50: rank(0.5),
            p90: rank(0.9),
            p99: rank(0.99),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub points: usize,
    pub kink_crossings: usize,
    pub mass_abs: Option<Percentiles>,
    pub momentum_norm: Option<Percentiles>,
    pub ns_momentum_norm: Option<Percentiles>,
    pub mass_order: Option<Percentiles>,
    pub momentum_order: Option<Percentiles>,
    pub min_mass_order: Option<f64>,
    pub min_momentum_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub records: Vec<ResidualReport>,
    pub summary: ReportSummary,
}

impl VerificationReport {
    pub fn from_records(records: Vec<ResidualReport>) -> Self {
        let smooth: Vec<&ResidualReport> = records.iter().filter(|r| !r.kink_crossing).collect();
        let collect = |f: &dyn Fn(&ResidualReport) -> Option<f64>| -> Vec<f64> {
            smooth.iter().filter_map(|r| f(r)).collect()
        };
        let mass_orders = collect(&|r| r.observed_order.and_then(|o| o.mass));
        let momentum_orders = collect(&|r| r.observed_order.and_then(|o| o.momentum));
        let min = |v: &[f64]| v.iter().copied().reduce(f64::min);
        let summary = ReportSummary {
            points: records.len(),
            kink_crossings: records.len() - smooth.len(),
            mass_abs: Percentiles::of(&collect(&|r| Some(r.mass_residual.abs()))),
            momentum_norm: Percentiles::of(&collect(&|r| Some(r.momentum_norm()))),
            ns_momentum_norm: Percentiles::of(&collect(&|r| Some(r.ns_momentum_norm()))),
            mass_order: Percentiles::of(&mass_orders),
            momentum_order: Percentiles::of(&momentum_orders),
            min_mass_order: min(&mass_orders),
            min_momentum_order: min(&momentum_orders),
        };
        Self { records, summary }
    }
}

/// Refined residuals at every point, evaluated in parallel; records keep
/// the order of `points`.
pub fn verify_points<S: FieldSource>(
    src: &S,
    points: &[[f64; 4]],
    h: f64,
    mu: f64,
) -> Result<VerificationReport> {
    let records = points
        .par_iter()
        .map(|&[t, x, y, z]| refined_residual(src, t, x, y, z, h, mu))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerificationReport::from_records(records))
}
