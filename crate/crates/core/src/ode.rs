//! Adaptive Dormand–Prince 5(4) integrator with continuous (dense) output
//! and detection of scale-factor collapse.
//!
//! Step control follows the PI controller of Hairer, Nørsett & Wanner.
//! Every accepted step keeps its interpolation coefficients so the solution
//! can be evaluated at any time inside the integrated interval.

/// A first-order system `y' = F(t, y)` on a fixed-size state.
pub trait OdeSystem<const N: usize> {
    /// Right-hand side, or `None` when `y` lies outside the domain of the
    /// system (e.g. a nonpositive scale factor).
    fn rhs(&self, t: f64, y: &[f64; N]) -> Option<[f64; N]>;

    /// Components that must remain positive. Crossing
    /// `floor_factor * initial value` on one of them ends the integration.
    fn scale_indices(&self) -> &[usize];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Budget of accepted steps.
    pub max_steps: usize,
    /// The blowup floor is `floor_factor` times the initial value of each
    /// scale component.
    pub floor_factor: f64,
    pub initial_step: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
            floor_factor: 1e-10,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    ReachedEnd,
    /// A scale component reached its floor (or the step size underflowed
    /// while it collapsed). `bracket` encloses the event time.
    Blowup {
        t_est: f64,
        component: usize,
        bracket: (f64, f64),
    },
    StepFailure {
        t: f64,
        reason: StepFailureReason,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepFailureReason {
    MaxStepsExceeded,
    StepSizeUnderflow,
    InvalidInitialState,
}

/// One accepted step with its quartic interpolant.
#[derive(Debug, Clone, Copy)]
pub struct Segment<const N: usize> {
    t0: f64,
    h: f64,
    cont: [[f64; N]; 5],
}

impl<const N: usize> Segment<N> {
    pub fn t_start(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let c = &self.cont;
        std::array::from_fn(|i| {
            c[0][i]
                + theta
                    * (c[1][i] + theta1 * (c[2][i] + theta * (c[3][i] + theta1 * c[4][i])))
        })
    }
}

/// Output of [`integrate`]: the step interpolants plus how the run ended.
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub t0: f64,
    pub y0: [f64; N],
    /// Last time covered by the solution (the event time after a blowup).
    pub t_last: f64,
    pub y_last: [f64; N],
    pub termination: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    segments: Vec<Segment<N>>,
}

impl<const N: usize> Solution<N> {
    pub fn segments(&self) -> &[Segment<N>] {
        &self.segments
    }

    /// Dense state at `t`, or `None` outside `[t0, t_last]`.
    pub fn state_at(&self, t: f64) -> Option<[f64; N]> {
        if !(t >= self.t0 && t <= self.t_last) {
            return None;
        }
        if t == self.t0 {
            return Some(self.y0);
        }
        if t == self.t_last {
            return Some(self.y_last);
        }
        let idx = self
            .segments
            .partition_point(|seg| seg.t_end() < t)
            .min(self.segments.len().checked_sub(1)?);
        Some(self.segments[idx].eval(t))
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
/// A scale component below this fraction of its initial value counts as
/// collapsing when the step size underflows.
const COLLAPSE_RATIO: f64 = 1e-3;

fn error_norm<const N: usize>(
    y: &[f64; N],
    y_new: &[f64; N],
    err: &[f64; N],
    opts: &IntegratorOptions,
) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sk = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            (err[i] / sk).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    t: f64,
    y: &[f64; N],
    f0: &[f64; N],
    span: f64,
    opts: &IntegratorOptions,
) -> f64 {
    let sk: [f64; N] = std::array::from_fn(|i| opts.abs_tol + opts.rel_tol * y[i].abs());
    let norm = |v: &[f64; N]| {
        ((0..N).map(|i| (v[i] / sk[i]).powi(2)).sum::<f64>() / N as f64).sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(span);
    let y1: [f64; N] = std::array::from_fn(|i| y[i] + h0 * f0[i]);
    let d2 = match sys.rhs(t + h0, &y1) {
        Some(f1) => {
            let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
            norm(&diff) / h0
        }
        None => return (h0 * 1e-3).max(f64::EPSILON * t.abs().max(1.0)),
    };
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates `sys` from `(t0, y0)` to `t_end`.
///
/// The run ends early with [`Termination::Blowup`] when a scale component
/// drops below its floor; the event time is located on the step
/// interpolant to within `rel_tol * |t|`.
pub fn integrate<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &IntegratorOptions,
) -> Solution<N> {
    let mut sol = Solution {
        t0,
        y0,
        t_last: t0,
        y_last: y0,
        termination: Termination::ReachedEnd,
        accepted_steps: 0,
        rejected_steps: 0,
        segments: Vec::new(),
    };
    let floors: Vec<(usize, f64)> = sys
        .scale_indices()
        .iter()
        .map(|&i| (i, opts.floor_factor * y0[i]))
        .collect();

    let Some(mut k1) = sys.rhs(t0, &y0) else {
        sol.termination = Termination::StepFailure {
            t: t0,
            reason: StepFailureReason::InvalidInitialState,
        };
        return sol;
    };
    let span = t_end - t0;
    let mut t = t0;
    let mut y = y0;
    let mut h = opts
        .initial_step
        .unwrap_or_else(|| initial_step(sys, t0, &y0, &k1, span, opts));
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut domain_failure = false;

    loop {
        if t >= t_end {
            break;
        }
        if sol.accepted_steps >= opts.max_steps {
            sol.termination = Termination::StepFailure {
                t,
                reason: StepFailureReason::MaxStepsExceeded,
            };
            break;
        }
        let h_min = 16.0 * f64::EPSILON * t.abs().max(f64::MIN_POSITIVE);
        if h < h_min {
            let collapsing = domain_failure
                || floors
                    .iter()
                    .any(|&(i, _)| y[i] < COLLAPSE_RATIO * y0[i]);
            sol.termination = if collapsing {
                let component = floors
                    .iter()
                    .map(|&(i, _)| i)
                    .min_by(|&i, &j| (y[i] / y0[i]).total_cmp(&(y[j] / y0[j])))
                    .unwrap_or(0);
                Termination::Blowup {
                    t_est: t,
                    component,
                    bracket: (t, t + h_min),
                }
            } else {
                Termination::StepFailure {
                    t,
                    reason: StepFailureReason::StepSizeUnderflow,
                }
            };
            break;
        }
        if t + h > t_end {
            h = t_end - t;
        }

        let Some((y_new, k, err)) = step(sys, t, &y, &k1, h) else {
            domain_failure = true;
            sol.rejected_steps += 1;
            h *= 0.25;
            last_rejected = true;
            continue;
        };
        let err_norm = error_norm(&y, &y_new, &err, opts);
        if !err_norm.is_finite() {
            sol.rejected_steps += 1;
            h *= 0.25;
            last_rejected = true;
            continue;
        }

        let fac11 = err_norm.powf(0.2 - BETA * 0.75);
        let mut fac = fac11 / fac_old.powf(BETA);
        fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = h / fac;

        if err_norm <= 1.0 {
            fac_old = err_norm.max(1e-4);
            sol.accepted_steps += 1;
            domain_failure = false;

            let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let bspl: [f64; N] = std::array::from_fn(|i| h * k[0][i] - ydiff[i]);
            let seg = Segment {
                t0: t,
                h,
                cont: [
                    y,
                    ydiff,
                    bspl,
                    std::array::from_fn(|i| ydiff[i] - h * k[6][i] - bspl[i]),
                    std::array::from_fn(|i| {
                        h * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>()
                    }),
                ],
            };
            let t_new = if t + h >= t_end { t_end } else { t + h };

            let crossing = floors
                .iter()
                .filter(|&&(i, floor)| y_new[i] < floor)
                .map(|&(i, floor)| (locate_crossing(&seg, i, floor, opts.rel_tol), i))
                .min_by(|a, b| a.0 .0.total_cmp(&b.0 .0));
            sol.segments.push(seg);
            if let Some(((t_est, bracket), component)) = crossing {
                sol.t_last = t_est;
                sol.y_last = seg.eval(t_est);
                sol.termination = Termination::Blowup {
                    t_est,
                    component,
                    bracket,
                };
                return sol;
            }

            t = t_new;
            y = y_new;
            k1 = k[6];
            sol.t_last = t;
            sol.y_last = y;
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new;
        } else {
            sol.rejected_steps += 1;
            h_new = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
            last_rejected = true;
            h = h_new;
        }
    }
    sol
}

type Stages<const N: usize> = [[f64; N]; 7];

fn step<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> Option<([f64; N], Stages<N>, [f64; N])> {
    let mut k = [[0.0; N]; 7];
    k[0] = *k1;
    for s in 1..7 {
        let ys: [f64; N] =
            std::array::from_fn(|i| y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>());
        if s == 6 {
            let f = sys.rhs(t + h, &ys)?;
            k[6] = f;
            let err: [f64; N] =
                std::array::from_fn(|i| h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>());
            if ys.iter().chain(err.iter()).any(|v| !v.is_finite()) {
                return None;
            }
            return Some((ys, k, err));
        }
        k[s] = sys.rhs(t + C[s] * h, &ys)?;
    }
    unreachable!()
}

/// Bisects the interpolant of `seg` for `y[i] = floor`; returns the
/// midpoint and the final bracket.
fn locate_crossing<const N: usize>(
    seg: &Segment<N>,
    i: usize,
    floor: f64,
    rel_tol: f64,
) -> (f64, (f64, f64)) {
    let mut lo = seg.t_start();
    let mut hi = seg.t_end();
    for _ in 0..200 {
        let width_goal = (rel_tol * hi.abs()).max(4.0 * f64::EPSILON * hi.abs());
        if hi - lo <= width_goal {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if seg.eval(mid)[i] < floor {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (0.5 * (lo + hi), (lo, hi))
}
