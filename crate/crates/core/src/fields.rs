//! Pointwise evaluation of the exact solution fields.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::emden::{EmdenState2D, EmdenState3D, Trajectory2D, Trajectory3D};
use crate::error::{Error, Result};
use crate::params::PhysParams;
use crate::profile::DensityProfile;
use crate::similarity::{similarity_eta, similarity_s};

/// Primitive variables at one space-time point. In 2D `u[2]` is zero and
/// `s` holds the planar variable `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub rho: f64,
    pub u: [f64; 3],
    pub s: f64,
    pub p: f64,
}

/// Anything that can be sampled in space and time; the residual operators
/// are written against this.
pub trait FieldSource: Sync {
    fn sample(&self, t: f64, x: f64, y: f64, z: f64) -> Result<FieldSample>;

    /// Support boundary in the similarity variable, if the density has
    /// compact support.
    fn cutoff_s(&self) -> Option<f64> {
        None
    }
}

#[allow(clippy::too_many_arguments)]
fn rotational_sample(
    profile_value: f64,
    a: f64,
    a_dot: f64,
    b: f64,
    b_dot: f64,
    swirl: f64,
    [x, y, z]: [f64; 3],
    s: f64,
    pressure: impl Fn(f64) -> f64,
) -> FieldSample {
    let rho = profile_value / (a * a * b);
    let stretch = a_dot / a;
    FieldSample {
        rho,
        u: [
            stretch * x - swirl * y,
            swirl * x + stretch * y,
            b_dot / b * z,
        ],
        s,
        p: pressure(rho),
    }
}

/// The 3D rotational solution frozen at one Emden state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Field3D {
    pub params: PhysParams,
    pub profile: DensityProfile,
    pub state: EmdenState3D,
}

impl Field3D {
    pub fn new(params: PhysParams, state: EmdenState3D) -> Result<Self> {
        state.validate()?;
        Ok(Self {
            params,
            profile: DensityProfile::new(params),
            state,
        })
    }

    /// Angular velocity `xi / a²` of the planar rotation.
    pub fn swirl(&self) -> f64 {
        self.params.xi() / (self.state.a * self.state.a)
    }

    pub fn eval(&self, x: f64, y: f64, z: f64) -> Result<FieldSample> {
        let st = &self.state;
        let s = similarity_s(x, y, z, st.a, st.b)?;
        let f = self.profile.eval(s)?;
        Ok(rotational_sample(
            f,
            st.a,
            st.a_dot,
            st.b,
            st.b_dot,
            self.swirl(),
            [x, y, z],
            s,
            |rho| self.params.pressure(rho),
        ))
    }

    /// `∂u_i/∂x_j`; the velocity is linear so this is position independent.
    pub fn velocity_gradient(&self) -> [[f64; 3]; 3] {
        let st = &self.state;
        let stretch = st.a_dot / st.a;
        let w = self.swirl();
        [
            [stretch, -w, 0.0],
            [w, stretch, 0.0],
            [0.0, 0.0, st.b_dot / st.b],
        ]
    }

    /// Curl of the velocity, `(0, 0, 2 xi / a²)` for this family.
    pub fn vorticity(&self) -> [f64; 3] {
        let g = self.velocity_gradient();
        [g[2][1] - g[1][2], g[0][2] - g[2][0], g[1][0] - g[0][1]]
    }

    /// Laplacian of the velocity. Every component is linear in space, so
    /// all second derivatives vanish.
    pub fn velocity_laplacian(&self) -> [f64; 3] {
        [0.0; 3]
    }

    /// Membership in the open support ellipsoid `s < s*` (the whole space
    /// when there is no cutoff and `alpha > 0`).
    pub fn in_support(&self, x: f64, y: f64, z: f64) -> Result<bool> {
        let s = similarity_s(x, y, z, self.state.a, self.state.b)?;
        Ok(self.profile.in_support(s))
    }
}

pub fn eval_field_3d(field: &Field3D, x: f64, y: f64, z: f64) -> Result<FieldSample> {
    field.eval(x, y, z)
}

pub fn vorticity_3d(field: &Field3D, _x: f64, _y: f64, _z: f64) -> [f64; 3] {
    field.vorticity()
}

pub fn velocity_laplacian(field: &Field3D, _x: f64, _y: f64, _z: f64) -> [f64; 3] {
    field.velocity_laplacian()
}

/// The planar rotational solution with `rho = f(eta) / a²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Field2D {
    pub params: PhysParams,
    pub profile: DensityProfile,
    pub state: EmdenState2D,
}

impl Field2D {
    pub fn new(params: PhysParams, state: EmdenState2D) -> Result<Self> {
        state.validate()?;
        Ok(Self {
            params,
            profile: DensityProfile::new(params),
            state,
        })
    }

    pub fn swirl(&self) -> f64 {
        self.params.xi() / (self.state.a * self.state.a)
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<FieldSample> {
        let st = &self.state;
        let eta = similarity_eta(x, y, st.a)?;
        let f = self.profile.eval(eta)?;
        Ok(rotational_sample(
            f,
            st.a,
            st.a_dot,
            1.0,
            0.0,
            self.swirl(),
            [x, y, 0.0],
            eta,
            |rho| self.params.pressure(rho),
        ))
    }

    pub fn vorticity(&self) -> f64 {
        2.0 * self.swirl()
    }

    pub fn velocity_laplacian(&self) -> [f64; 2] {
        [0.0; 2]
    }
}

pub fn eval_field_2d(field: &Field2D, x: f64, y: f64) -> Result<FieldSample> {
    field.eval(x, y)
}

/// A scalar function with access to its exact derivative.
pub trait ScalarFunction: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
}

/// Adapts a pair of closures `(value, derivative)`.
pub struct FnWithDerivative<F, D> {
    value: F,
    derivative: D,
}

impl<F, D> FnWithDerivative<F, D>
where
    F: Fn(f64) -> f64 + Send + Sync,
    D: Fn(f64) -> f64 + Send + Sync,
{
    pub fn new(value: F, derivative: D) -> Self {
        Self { value, derivative }
    }
}

impl<F, D> ScalarFunction for FnWithDerivative<F, D>
where
    F: Fn(f64) -> f64 + Send + Sync,
    D: Fn(f64) -> f64 + Send + Sync,
{
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }
}

/// Shared handle to a scalar function.
pub type ScalarFn = Arc<dyn ScalarFunction>;

/// The general mass-conserving family
/// `rho = f(s)/(a² b)`, `u = (a'/a x - G y, G x + a'/a y, b'/b z)` with
/// arbitrary profile `f >= 0`, angular rate `G(t)` and positive scale
/// factors `a(t)`, `b(t)`. Only the mass equation holds for this family.
#[derive(Clone)]
pub struct GeneralMassFamily {
    pub f: ScalarFn,
    pub g: ScalarFn,
    pub a: ScalarFn,
    pub b: ScalarFn,
    /// Pressure law used to fill `FieldSample::p`; zero pressure when absent.
    pub pressure_law: Option<PhysParams>,
}

impl GeneralMassFamily {
    pub fn new(f: ScalarFn, g: ScalarFn, a: ScalarFn, b: ScalarFn) -> Self {
        Self {
            f,
            g,
            a,
            b,
            pressure_law: None,
        }
    }

    /// Specializes to the exact 3D family: `G = xi / a²` with `a`, `b`
    /// taken from an Emden trajectory.
    pub fn from_trajectory(params: PhysParams, traj: Arc<Trajectory3D>) -> Self {
        let profile = DensityProfile::new(params);
        let state = move |traj: &Trajectory3D, t: f64| {
            traj.state_at(t)
                .unwrap_or_else(|| panic!("time {t} outside the trajectory"))
        };
        let (ta, tad, tb, tbd, tg) = (
            traj.clone(),
            traj.clone(),
            traj.clone(),
            traj.clone(),
            traj.clone(),
        );
        let xi = params.xi();
        Self {
            f: Arc::new(FnWithDerivative::new(
                move |s| profile.eval(s).unwrap_or(0.0),
                move |s| profile.derivative(s).map(|d| d.value).unwrap_or(0.0),
            )),
            g: Arc::new(FnWithDerivative::new(
                move |t| {
                    let a = state(&tg, t).a;
                    xi / (a * a)
                },
                move |t| {
                    let st = state(&traj, t);
                    -2.0 * xi * st.a_dot / (st.a * st.a * st.a)
                },
            )),
            a: Arc::new(FnWithDerivative::new(
                move |t| state(&ta, t).a,
                move |t| state(&tad, t).a_dot,
            )),
            b: Arc::new(FnWithDerivative::new(
                move |t| state(&tb, t).b,
                move |t| state(&tbd, t).b_dot,
            )),
            pressure_law: Some(params),
        }
    }

    pub fn eval(&self, t: f64, x: f64, y: f64, z: f64) -> Result<FieldSample> {
        let a = self.a.value(t);
        let b = self.b.value(t);
        let s = similarity_s(x, y, z, a, b)?;
        let f = self.f.value(s);
        if !(f >= 0.0) {
            return Err(Error::Domain(format!("profile must be nonnegative, got {f}")));
        }
        Ok(rotational_sample(
            f,
            a,
            self.a.derivative(t),
            b,
            self.b.derivative(t),
            self.g.value(t),
            [x, y, z],
            s,
            |rho| self.pressure_law.map_or(0.0, |p| p.pressure(rho)),
        ))
    }
}

impl std::fmt::Debug for GeneralMassFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneralMassFamily")
            .field("pressure_law", &self.pressure_law)
            .finish_non_exhaustive()
    }
}

pub fn eval_general_mass_family(
    g: &GeneralMassFamily,
    t: f64,
    x: f64,
    y: f64,
    z: f64,
) -> Result<FieldSample> {
    g.eval(t, x, y, z)
}

impl FieldSource for GeneralMassFamily {
    fn sample(&self, t: f64, x: f64, y: f64, z: f64) -> Result<FieldSample> {
        self.eval(t, x, y, z)
    }
}

/// The 3D solution along an integrated Emden trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryField3D {
    pub params: PhysParams,
    pub profile: DensityProfile,
    pub trajectory: Trajectory3D,
}

impl TrajectoryField3D {
    pub fn new(params: PhysParams, trajectory: Trajectory3D) -> Self {
        Self {
            params,
            profile: DensityProfile::new(params),
            trajectory,
        }
    }

    /// Snapshot at time `t`; times past a detected blowup are rejected.
    pub fn at(&self, t: f64) -> Result<Field3D> {
        let state = self.trajectory.state_at(t).ok_or_else(|| {
            let (t0, t1) = self.trajectory.span();
            Error::State(format!("time {t} outside the integrated interval [{t0}, {t1}]"))
        })?;
        Ok(Field3D {
            params: self.params,
            profile: self.profile,
            state,
        })
    }
}

impl FieldSource for TrajectoryField3D {
    fn sample(&self, t: f64, x: f64, y: f64, z: f64) -> Result<FieldSample> {
        self.at(t)?.eval(x, y, z)
    }

    fn cutoff_s(&self) -> Option<f64> {
        self.profile.cutoff_s()
    }
}

/// The 2D solution along an integrated trajectory, extended as a
/// z-independent 3D field with `u_3 = 0`.
#[derive(Debug, Clone)]
pub struct TrajectoryField2D {
    pub params: PhysParams,
    pub profile: DensityProfile,
    pub trajectory: Trajectory2D,
}

impl TrajectoryField2D {
    pub fn new(params: PhysParams, trajectory: Trajectory2D) -> Self {
        Self {
            params,
            profile: DensityProfile::new(params),
            trajectory,
        }
    }

    pub fn at(&self, t: f64) -> Result<Field2D> {
        let state = self.trajectory.state_at(t).ok_or_else(|| {
            let (t0, t1) = self.trajectory.span();
            Error::State(format!("time {t} outside the integrated interval [{t0}, {t1}]"))
        })?;
        Ok(Field2D {
            params: self.params,
            profile: self.profile,
            state,
        })
    }
}

impl FieldSource for TrajectoryField2D {
    fn sample(&self, t: f64, x: f64, y: f64, _z: f64) -> Result<FieldSample> {
        self.at(t)?.eval(x, y)
    }

    fn cutoff_s(&self) -> Option<f64> {
        self.profile.cutoff_s()
    }
}
