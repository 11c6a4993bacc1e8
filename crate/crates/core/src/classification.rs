//! Lifespan classification of the 3D family and periodicity checks.
//!
//! Decision table (the `b` equation drives every case):
//!
//! | lambda | gamma | b1    | verdict                          |
//! |--------|-------|-------|----------------------------------|
//! | > 0    | any   | any   | global                           |
//! | = 0    | any   | >= 0  | global                           |
//! | = 0    | any   | < 0   | blowup at `T = -b0/b1`           |
//! | < 0    | = 1   | any   | blowup                           |
//! | < 0    | > 1   | <= 0  | blowup                           |
//! | < 0    | > 1   | > 0   | undecided                        |
//!
//! Numerical probing of the undecided case can only ever report a detected
//! collapse or "still undecided at the horizon"; it never reports global
//! existence.

use serde::{Deserialize, Serialize};

use crate::emden::{
    emden_rhs_2d, integrate_2d, integrate_3d, EmdenState2D, EmdenState3D, IntegrateOptions,
    Trajectory3D, TrajectoryEnd,
};
use crate::error::{Error, Result};
use crate::params::PhysParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Global,
    FiniteTimeBlowup {
        #[serde(rename = "T")]
        t: Option<f64>,
    },
    UnknownOpenCase,
}

/// Row of the decision table that produced an analytic verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorollaryCase {
    /// lambda > 0
    PositiveLambda,
    /// lambda = 0, b1 >= 0
    ZeroLambdaNonnegativeB1,
    /// lambda = 0, b1 < 0
    ZeroLambdaNegativeB1,
    /// lambda < 0, gamma = 1
    NegativeLambdaIsothermal,
    /// lambda < 0, gamma > 1, b1 <= 0
    NegativeLambdaNonpositiveB1,
    /// lambda < 0, gamma > 1, b1 > 0
    Open,
}

impl CorollaryCase {
    pub fn id(&self) -> &'static str {
        match self {
            CorollaryCase::PositiveLambda => "1",
            CorollaryCase::ZeroLambdaNonnegativeB1 => "2a",
            CorollaryCase::ZeroLambdaNegativeB1 => "2b",
            CorollaryCase::NegativeLambdaIsothermal => "3a",
            CorollaryCase::NegativeLambdaNonpositiveB1 => "3b",
            CorollaryCase::Open => "open",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "snake_case")]
pub enum Basis {
    Analytic { case: CorollaryCase },
    /// Integrator outcome up to `t_horizon`; numerical evidence, not proof.
    NumericalEvidence { t_horizon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    #[serde(flatten)]
    pub verdict: Verdict,
    #[serde(flatten)]
    pub basis: Basis,
}

pub fn corollary_case(p: &PhysParams, ic: &EmdenState3D) -> CorollaryCase {
    let lam = p.lambda();
    if lam > 0.0 {
        CorollaryCase::PositiveLambda
    } else if lam == 0.0 {
        if ic.b_dot >= 0.0 {
            CorollaryCase::ZeroLambdaNonnegativeB1
        } else {
            CorollaryCase::ZeroLambdaNegativeB1
        }
    } else if p.is_isothermal() {
        CorollaryCase::NegativeLambdaIsothermal
    } else if ic.b_dot <= 0.0 {
        CorollaryCase::NegativeLambdaNonpositiveB1
    } else {
        CorollaryCase::Open
    }
}

/// Analytic verdict from the decision table.
pub fn classify_3d(p: &PhysParams, ic: &EmdenState3D) -> Classification {
    let case = corollary_case(p, ic);
    let verdict = match case {
        CorollaryCase::PositiveLambda | CorollaryCase::ZeroLambdaNonnegativeB1 => Verdict::Global,
        // b'' = 0, so b = b0 + b1 (t - t0) vanishes at t0 - b0/b1.
        CorollaryCase::ZeroLambdaNegativeB1 => Verdict::FiniteTimeBlowup {
            t: Some(ic.t - ic.b / ic.b_dot),
        },
        CorollaryCase::NegativeLambdaIsothermal | CorollaryCase::NegativeLambdaNonpositiveB1 => {
            Verdict::FiniteTimeBlowup { t: None }
        }
        CorollaryCase::Open => Verdict::UnknownOpenCase,
    };
    Classification {
        verdict,
        basis: Basis::Analytic { case },
    }
}

/// Integrates an undecided configuration to `t_horizon` at relative
/// tolerance `tol` and reports what the integrator saw.
pub fn probe_open_case(
    p: &PhysParams,
    ic: &EmdenState3D,
    t_horizon: f64,
    tol: f64,
) -> Result<Classification> {
    if corollary_case(p, ic) != CorollaryCase::Open {
        return Err(Error::Misuse(
            "probing applies only to lambda < 0, gamma > 1, b1 > 0".into(),
        ));
    }
    let opts = IntegrateOptions::new(tol, tol * 1e-2);
    let traj = integrate_3d(p, ic, t_horizon, &opts)?;
    let verdict = match traj.termination {
        TrajectoryEnd::BlowupDetected { t_est, .. } => Verdict::FiniteTimeBlowup { t: Some(t_est) },
        TrajectoryEnd::ReachedTEnd => Verdict::UnknownOpenCase,
        TrajectoryEnd::StepFailure { t, reason } => {
            return Err(Error::Numerical(format!(
                "integration failed at t={t} ({reason:?}) before the horizon"
            )))
        }
    };
    Ok(Classification {
        verdict,
        basis: Basis::NumericalEvidence { t_horizon },
    })
}

/// Pericenter-to-pericenter period of the 2D Emden equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodEstimate {
    pub period: f64,
    /// `|(a, a')(t0 + period) - (a, a')(t0)|`.
    pub return_error: f64,
    /// Poincaré section used.
    pub method: String,
}

pub const PERICENTER_SECTION: &str = "pericenter: a_dot = 0, a_ddot > 0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PeriodOutcome {
    /// The initial state is an equilibrium `a = a*`, `a' = 0`.
    FixedPoint { a_star: f64 },
    Periodic(PeriodEstimate),
    /// No second section crossing before `t_max`.
    NotDetected,
}

impl PeriodOutcome {
    pub fn estimate(&self) -> Option<&PeriodEstimate> {
        match self {
            PeriodOutcome::Periodic(e) => Some(e),
            _ => None,
        }
    }
}

/// Detects periodic motion of the 2D scale factor from successive upward
/// zero crossings of `a'`. `tol` is the integrator's relative tolerance and
/// the equilibrium threshold.
pub fn detect_period_2d(
    p: &PhysParams,
    ic: &EmdenState2D,
    t_max: f64,
    tol: f64,
) -> Result<PeriodOutcome> {
    let rates = emden_rhs_2d(ic, p)?;
    let accel_scale = (p.xi() * p.xi() / ic.a.powi(3)).max(p.lambda().abs() / ic.a);
    if ic.a_dot.abs() <= tol * ic.a && rates.a_ddot.abs() <= tol * accel_scale.max(tol) {
        return Ok(PeriodOutcome::FixedPoint { a_star: ic.a });
    }
    let opts = IntegrateOptions::new(tol, tol * 1e-2);
    let traj = integrate_2d(p, ic, t_max, &opts)?;

    let mut crossings = Vec::with_capacity(2);
    for seg in traj.step_segments() {
        let (t0, t1) = (seg.t_start(), seg.t_end());
        if seg.eval(t0)[1] < 0.0 && seg.eval(t1)[1] >= 0.0 {
            let (mut lo, mut hi) = (t0, t1);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if seg.eval(mid)[1] < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            crossings.push(0.5 * (lo + hi));
            if crossings.len() == 2 {
                break;
            }
        }
    }
    let [first, second] = crossings[..] else {
        return Ok(PeriodOutcome::NotDetected);
    };
    let period = second - first;
    let start = [ic.a, ic.a_dot];
    let back = traj
        .state_at(ic.t + period)
        .ok_or_else(|| Error::Numerical("return time outside the trajectory".into()))?;
    let return_error = ((back.a - start[0]).powi(2) + (back.a_dot - start[1]).powi(2)).sqrt();
    Ok(PeriodOutcome::Periodic(PeriodEstimate {
        period,
        return_error,
        method: PERICENTER_SECTION.to_string(),
    }))
}

/// For `lambda < 0`, `b'' < 0` everywhere, so `b'` must decrease strictly
/// along the samples and `b` cannot be periodic. Returns whether the samples
/// satisfy this.
pub fn check_no_period_3d(p: &PhysParams, traj: &Trajectory3D) -> Result<bool> {
    if !(p.lambda() < 0.0) {
        return Err(Error::Misuse(
            "the monotonicity check applies to lambda < 0 trajectories".into(),
        ));
    }
    Ok(traj.samples.windows(2).all(|w| w[1].b_dot < w[0].b_dot))
}
