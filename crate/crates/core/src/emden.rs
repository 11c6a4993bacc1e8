//! The Emden system governing the scale factors.
//!
//! 3D: `a'' = xi²/a³ + lambda / (a^(2γ-1) b^(γ-1))`, `b'' = lambda / (a^(2γ-2) b^γ)`.
//! 2D: `a'' = xi²/a³ + lambda / a^(2γ-1)`.
//!
//! Both systems are conservative. With the potential
//! `V(a,b) = xi²/(2a²) + lambda/(2γ-2) a^(2-2γ) b^(1-γ)` one has
//! `∂V/∂a = -a''` and `∂V/∂b = -b''/2`, so
//! `E = ½a'² + ¼b'² + V` is a first integral. For `γ = 1` the power
//! potential is replaced by `-lambda ln a - (lambda/2) ln b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, IntegratorOptions, OdeSystem, Solution, StepFailureReason, Termination};
use crate::params::PhysParams;
use crate::similarity::check_scale;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmdenState3D {
    pub t: f64,
    pub a: f64,
    pub a_dot: f64,
    pub b: f64,
    pub b_dot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmdenState2D {
    pub t: f64,
    pub a: f64,
    pub a_dot: f64,
}

impl EmdenState3D {
    pub fn new(t: f64, a: f64, a_dot: f64, b: f64, b_dot: f64) -> Result<Self> {
        let s = Self {
            t,
            a,
            a_dot,
            b,
            b_dot,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_scale("a", self.a)?;
        check_scale("b", self.b)?;
        if !(self.t.is_finite() && self.a_dot.is_finite() && self.b_dot.is_finite()) {
            return Err(Error::State("state must be finite".into()));
        }
        Ok(())
    }

    fn to_array(self) -> [f64; 4] {
        [self.a, self.a_dot, self.b, self.b_dot]
    }

    fn from_array(t: f64, y: [f64; 4]) -> Self {
        Self {
            t,
            a: y[0],
            a_dot: y[1],
            b: y[2],
            b_dot: y[3],
        }
    }
}

impl EmdenState2D {
    pub fn new(t: f64, a: f64, a_dot: f64) -> Result<Self> {
        let s = Self { t, a, a_dot };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_scale("a", self.a)?;
        if !(self.t.is_finite() && self.a_dot.is_finite()) {
            return Err(Error::State("state must be finite".into()));
        }
        Ok(())
    }

    fn to_array(self) -> [f64; 2] {
        [self.a, self.a_dot]
    }

    fn from_array(t: f64, y: [f64; 2]) -> Self {
        Self {
            t,
            a: y[0],
            a_dot: y[1],
        }
    }
}

/// Time derivatives of a 3D state: `(a', a'', b', b'')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates3D {
    pub a_dot: f64,
    pub a_ddot: f64,
    pub b_dot: f64,
    pub b_ddot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates2D {
    pub a_dot: f64,
    pub a_ddot: f64,
}

fn accelerations_3d(p: &PhysParams, a: f64, b: f64) -> (f64, f64) {
    let centrifugal = p.xi() * p.xi() / (a * a * a);
    if p.lambda() == 0.0 {
        return (centrifugal, 0.0);
    }
    let g = p.gamma();
    let lam = p.lambda();
    if p.is_isothermal() {
        (centrifugal + lam / a, lam / b)
    } else {
        (
            centrifugal + lam / (a.powf(2.0 * g - 1.0) * b.powf(g - 1.0)),
            lam / (a.powf(2.0 * g - 2.0) * b.powf(g)),
        )
    }
}

fn acceleration_2d(p: &PhysParams, a: f64) -> f64 {
    let centrifugal = p.xi() * p.xi() / (a * a * a);
    if p.lambda() == 0.0 {
        centrifugal
    } else if p.is_isothermal() {
        centrifugal + p.lambda() / a
    } else {
        centrifugal + p.lambda() / a.powf(2.0 * p.gamma() - 1.0)
    }
}

pub fn emden_rhs_3d(state: &EmdenState3D, p: &PhysParams) -> Result<Rates3D> {
    state.validate()?;
    let (a_ddot, b_ddot) = accelerations_3d(p, state.a, state.b);
    Ok(Rates3D {
        a_dot: state.a_dot,
        a_ddot,
        b_dot: state.b_dot,
        b_ddot,
    })
}

pub fn emden_rhs_2d(state: &EmdenState2D, p: &PhysParams) -> Result<Rates2D> {
    state.validate()?;
    Ok(Rates2D {
        a_dot: state.a_dot,
        a_ddot: acceleration_2d(p, state.a),
    })
}

/// Which first-integral formula was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyBranch {
    Isothermal,
    Polytropic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmdenEnergy {
    pub value: f64,
    pub branch: EnergyBranch,
}

fn branch(p: &PhysParams) -> EnergyBranch {
    if p.is_isothermal() {
        EnergyBranch::Isothermal
    } else {
        EnergyBranch::Polytropic
    }
}

pub fn energy_3d(state: &EmdenState3D, p: &PhysParams) -> Result<EmdenEnergy> {
    state.validate()?;
    let (a, b) = (state.a, state.b);
    let kinetic = 0.5 * state.a_dot * state.a_dot + 0.25 * state.b_dot * state.b_dot;
    let centrifugal = p.xi() * p.xi() / (2.0 * a * a);
    let lam = p.lambda();
    let pressure = if lam == 0.0 {
        0.0
    } else if p.is_isothermal() {
        -lam * a.ln() - 0.5 * lam * b.ln()
    } else {
        let g = p.gamma();
        lam / (2.0 * g - 2.0) * a.powf(2.0 - 2.0 * g) * b.powf(1.0 - g)
    };
    Ok(EmdenEnergy {
        value: kinetic + centrifugal + pressure,
        branch: branch(p),
    })
}

pub fn energy_2d(state: &EmdenState2D, p: &PhysParams) -> Result<EmdenEnergy> {
    state.validate()?;
    let a = state.a;
    let lam = p.lambda();
    let pressure = if lam == 0.0 {
        0.0
    } else if p.is_isothermal() {
        -lam * a.ln()
    } else {
        let g = p.gamma();
        lam / (2.0 * g - 2.0) * a.powf(2.0 - 2.0 * g)
    };
    Ok(EmdenEnergy {
        value: 0.5 * state.a_dot * state.a_dot + p.xi() * p.xi() / (2.0 * a * a) + pressure,
        branch: branch(p),
    })
}

struct System3D<'a>(&'a PhysParams);
struct System2D<'a>(&'a PhysParams);

impl OdeSystem<4> for System3D<'_> {
    fn rhs(&self, _t: f64, y: &[f64; 4]) -> Option<[f64; 4]> {
        if !(y[0] > 0.0 && y[2] > 0.0) {
            return None;
        }
        let (a_ddot, b_ddot) = accelerations_3d(self.0, y[0], y[2]);
        Some([y[1], a_ddot, y[3], b_ddot])
    }

    fn scale_indices(&self) -> &[usize] {
        &[0, 2]
    }
}

impl OdeSystem<2> for System2D<'_> {
    fn rhs(&self, _t: f64, y: &[f64; 2]) -> Option<[f64; 2]> {
        if !(y[0] > 0.0) {
            return None;
        }
        Some([y[1], acceleration_2d(self.0, y[0])])
    }

    fn scale_indices(&self) -> &[usize] {
        &[0]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntegrateOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Blowup floor relative to each initial scale factor.
    pub floor_factor: f64,
    /// Sample times; when empty every accepted step end is recorded.
    pub dense_times: Vec<f64>,
}

impl IntegrateOptions {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::standard()
        }
    }

    pub fn standard() -> Self {
        let o = IntegratorOptions::default();
        Self {
            rel_tol: o.rel_tol,
            abs_tol: o.abs_tol,
            max_steps: o.max_steps,
            floor_factor: o.floor_factor,
            dense_times: Vec::new(),
        }
    }

    pub fn with_dense_times(mut self, times: Vec<f64>) -> Self {
        self.dense_times = times;
        self
    }

    fn validate(&self) -> Result<IntegratorOptions> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(self.rel_tol) || !in_unit(self.abs_tol) {
            return Err(Error::Config(format!(
                "tolerances must lie in (0, 1): rel_tol={}, abs_tol={}",
                self.rel_tol, self.abs_tol
            )));
        }
        if !in_unit(self.floor_factor) {
            return Err(Error::Config(format!(
                "blowup floor factor must lie in (0, 1), got {}",
                self.floor_factor
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        Ok(IntegratorOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_steps: self.max_steps,
            floor_factor: self.floor_factor,
            initial_step: None,
        })
    }
}

/// Which scale factor collapsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleFactor {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "termination", rename_all = "snake_case")]
pub enum TrajectoryEnd {
    ReachedTEnd,
    BlowupDetected {
        t_est: f64,
        which: ScaleFactor,
        /// Interval enclosing the floor crossing; its width is the error
        /// estimate of `t_est`.
        bracket: (f64, f64),
    },
    StepFailure {
        t: f64,
        reason: FailureKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    MaxSteps,
    StepUnderflow,
    InvalidInitialState,
}

impl TrajectoryEnd {
    fn from_ode(term: Termination, scale_of: impl Fn(usize) -> ScaleFactor) -> Self {
        match term {
            Termination::ReachedEnd => TrajectoryEnd::ReachedTEnd,
            Termination::Blowup {
                t_est,
                component,
                bracket,
            } => TrajectoryEnd::BlowupDetected {
                t_est,
                which: scale_of(component),
                bracket,
            },
            Termination::StepFailure { t, reason } => TrajectoryEnd::StepFailure {
                t,
                reason: match reason {
                    StepFailureReason::MaxStepsExceeded => FailureKind::MaxSteps,
                    StepFailureReason::StepSizeUnderflow => FailureKind::StepUnderflow,
                    StepFailureReason::InvalidInitialState => FailureKind::InvalidInitialState,
                },
            },
        }
    }

    pub fn blowup_time(&self) -> Option<f64> {
        match self {
            TrajectoryEnd::BlowupDetected { t_est, .. } => Some(*t_est),
            _ => None,
        }
    }
}

/// Integrated Emden trajectory: samples at the requested times plus the
/// full dense solution for evaluation at arbitrary times.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub samples: Vec<S>,
    pub termination: TrajectoryEnd,
    dense: DenseSolution,
}

#[derive(Debug, Clone)]
enum DenseSolution {
    ThreeD(Solution<4>),
    TwoD(Solution<2>),
}

pub type Trajectory3D = Trajectory<EmdenState3D>;
pub type Trajectory2D = Trajectory<EmdenState2D>;

impl<S> Trajectory<S> {
    /// Time interval covered by the dense solution.
    pub fn span(&self) -> (f64, f64) {
        match &self.dense {
            DenseSolution::ThreeD(s) => (s.t0, s.t_last),
            DenseSolution::TwoD(s) => (s.t0, s.t_last),
        }
    }

    pub fn accepted_steps(&self) -> usize {
        match &self.dense {
            DenseSolution::ThreeD(s) => s.accepted_steps,
            DenseSolution::TwoD(s) => s.accepted_steps,
        }
    }
}

impl Trajectory3D {
    pub fn state_at(&self, t: f64) -> Option<EmdenState3D> {
        match &self.dense {
            DenseSolution::ThreeD(s) => s.state_at(t).map(|y| EmdenState3D::from_array(t, y)),
            DenseSolution::TwoD(_) => None,
        }
    }

    /// Replaces the stored samples; used to build synthetic trajectories.
    pub fn with_samples(mut self, samples: Vec<EmdenState3D>) -> Self {
        self.samples = samples;
        self
    }

    pub fn last_state(&self) -> EmdenState3D {
        match &self.dense {
            DenseSolution::ThreeD(s) => EmdenState3D::from_array(s.t_last, s.y_last),
            DenseSolution::TwoD(_) => unreachable!(),
        }
    }
}

impl Trajectory2D {
    pub fn state_at(&self, t: f64) -> Option<EmdenState2D> {
        match &self.dense {
            DenseSolution::TwoD(s) => s.state_at(t).map(|y| EmdenState2D::from_array(t, y)),
            DenseSolution::ThreeD(_) => None,
        }
    }

    pub fn last_state(&self) -> EmdenState2D {
        match &self.dense {
            DenseSolution::TwoD(s) => EmdenState2D::from_array(s.t_last, s.y_last),
            DenseSolution::ThreeD(_) => unreachable!(),
        }
    }

    /// Step-end times and states of the dense solution, in order.
    pub(crate) fn step_segments(&self) -> &[ode::Segment<2>] {
        match &self.dense {
            DenseSolution::TwoD(s) => s.segments(),
            DenseSolution::ThreeD(_) => &[],
        }
    }
}

fn check_horizon(t0: f64, t_end: f64) -> Result<()> {
    if !(t_end.is_finite() && t_end > t0) {
        return Err(Error::Config(format!(
            "t_end must exceed the initial time {t0}, got {t_end}"
        )));
    }
    Ok(())
}

fn sample_times<const N: usize>(sol: &Solution<N>, requested: &[f64]) -> Vec<(f64, [f64; N])> {
    if requested.is_empty() {
        std::iter::once((sol.t0, sol.y0))
            .chain(sol.segments().iter().map(|seg| {
                let t = seg.t_end().min(sol.t_last);
                (t, sol.state_at(t).unwrap_or(sol.y_last))
            }))
            .collect()
    } else {
        requested
            .iter()
            .filter_map(|&t| sol.state_at(t).map(|y| (t, y)))
            .collect()
    }
}

fn check_dense_times(t0: f64, t_end: f64, times: &[f64]) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for &t in times {
        if !(t >= t0 && t <= t_end) {
            return Err(Error::Config(format!(
                "sample time {t} outside [{t0}, {t_end}]"
            )));
        }
        if t <= prev {
            return Err(Error::Config("sample times must be strictly increasing".into()));
        }
        prev = t;
    }
    Ok(())
}

/// Integrates the 3D Emden system from `initial` to `t_end`.
pub fn integrate_3d(
    p: &PhysParams,
    initial: &EmdenState3D,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory3D> {
    initial.validate()?;
    check_horizon(initial.t, t_end)?;
    check_dense_times(initial.t, t_end, &opts.dense_times)?;
    let ode_opts = opts.validate()?;
    let sol = ode::integrate(&System3D(p), initial.t, initial.to_array(), t_end, &ode_opts);
    let samples = sample_times(&sol, &opts.dense_times)
        .into_iter()
        .map(|(t, y)| EmdenState3D::from_array(t, y))
        .collect();
    let termination = TrajectoryEnd::from_ode(sol.termination, |c| {
        if c == 0 {
            ScaleFactor::A
        } else {
            ScaleFactor::B
        }
    });
    Ok(Trajectory {
        samples,
        termination,
        dense: DenseSolution::ThreeD(sol),
    })
}

/// Integrates the 2D Emden equation from `initial` to `t_end`.
pub fn integrate_2d(
    p: &PhysParams,
    initial: &EmdenState2D,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory2D> {
    initial.validate()?;
    check_horizon(initial.t, t_end)?;
    check_dense_times(initial.t, t_end, &opts.dense_times)?;
    let ode_opts = opts.validate()?;
    let sol = ode::integrate(&System2D(p), initial.t, initial.to_array(), t_end, &ode_opts);
    let samples = sample_times(&sol, &opts.dense_times)
        .into_iter()
        .map(|(t, y)| EmdenState2D::from_array(t, y))
        .collect();
    let termination = TrajectoryEnd::from_ode(sol.termination, |_| ScaleFactor::A);
    Ok(Trajectory {
        samples,
        termination,
        dense: DenseSolution::TwoD(sol),
    })
}
