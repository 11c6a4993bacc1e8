use serde::{Deserialize, Serialize};

use crate::profile::DensityProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// C¹ at the support boundary: `gamma = 1`, or `lambda <= 0`, or `gamma < 2`.
    pub c1: bool,
    /// Limit of the one-sided difference quotient of `f` at `s*`: zero in
    /// the C¹ case, finite for `gamma = 2`, `-inf` for `gamma > 2`.
    pub boundary_slope: f64,
    pub cutoff_s: Option<f64>,
    /// Exponent `p` of the quotient `q(eps) ~ eps^p`, estimated from two
    /// offsets below `s*`.
    pub quotient_exponent: Option<f64>,
    /// The numerical quotients agree with `c1`.
    pub numerically_consistent: bool,
}

const EXPONENT_SLACK: f64 = 1e-3;

fn quotient(profile: &DensityProfile, s_star: f64, eps: f64) -> f64 {
    let inner = profile.eval(s_star - eps).unwrap_or(0.0);
    let edge = profile.eval(s_star).unwrap_or(0.0);
    (edge - inner) / eps
}

/// Decides C¹ regularity of the cutoff profile and cross-checks it with
/// one-sided difference quotients at the support boundary.
pub fn cutoff_regularity_check(profile: &DensityProfile) -> RegularityReport {
    let c1 = profile.is_c1();
    let Some(s_star) = profile.cutoff_s().filter(|&s| s > 0.0) else {
        return RegularityReport {
            c1,
            boundary_slope: 0.0,
            cutoff_s: profile.cutoff_s(),
            quotient_exponent: None,
            numerically_consistent: c1,
        };
    };
    let (e1, e2) = (1e-6 * s_star, 1e-8 * s_star);
    let (q1, q2) = (quotient(profile, s_star, e1), quotient(profile, s_star, e2));
    let exponent = if q1 == 0.0 || q2 == 0.0 {
        // Underflowed: the profile vanishes faster than any power we can resolve.
        f64::INFINITY
    } else {
        (q2.abs() / q1.abs()).ln() / (e2 / e1).ln()
    };
    let boundary_slope = if exponent > EXPONENT_SLACK {
        0.0
    } else if exponent < -EXPONENT_SLACK {
        f64::NEG_INFINITY
    } else {
        q2
    };
    let numerically_consistent = if c1 {
        exponent > -EXPONENT_SLACK
    } else {
        exponent < EXPONENT_SLACK
    };
    RegularityReport {
        c1,
        boundary_slope,
        cutoff_s: Some(s_star),
        quotient_exponent: Some(exponent),
        numerically_consistent,
    }
}
