//! Mode dispatch for batch runs: integrate, sample, verify, classify, sweep.

use std::fs::File;
use std::io::{self, BufWriter, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::classification::{
    classify_3d, corollary_case, detect_period_2d, probe_open_case, Classification,
    CorollaryCase, PeriodOutcome,
};
use crate::config::{Grid, InitialCondition, Mode, RunConfig, Tolerances};
use crate::emden::{
    energy_2d, energy_3d, integrate_2d, integrate_3d, EmdenState2D, EmdenState3D,
    IntegrateOptions, Trajectory2D, Trajectory3D, TrajectoryEnd,
};
use crate::error::{Error, Result};
use crate::fields::{FieldSample, TrajectoryField2D, TrajectoryField3D};
use crate::params::PhysParams;
use crate::verification::{verify_points, VerificationReport};

pub const FIELD_HEADER: &str = "x,y,z,t,rho,u1,u2,u3,s,p";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Label attached to integrator outcomes in the undecided regime.
pub const EVIDENCE_LABEL: &str = "numerical evidence, not proof";

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Complete,
    /// The trajectory collapsed before the last requested time; output
    /// covers only the times before the event.
    BlowupTruncated(TrajectoryEnd),
}

impl RunStatus {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Complete => EXIT_OK,
            RunStatus::BlowupTruncated(_) => EXIT_BLOWUP,
        }
    }
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::Misuse(_) => EXIT_CONFIG,
        Error::Domain(_) | Error::State(_) | Error::Numerical(_) => EXIT_NUMERICAL,
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn integrate_options(tol: &Tolerances, dense_times: Vec<f64>) -> IntegrateOptions {
    IntegrateOptions {
        rel_tol: tol.rel_tol,
        abs_tol: tol.abs_tol,
        max_steps: tol.max_steps,
        floor_factor: tol.floor_factor,
        dense_times,
    }
}

fn require_mode(config: &RunConfig) -> Result<Mode> {
    config
        .mode
        .ok_or_else(|| Error::Config("no mode given (use a subcommand or `mode = ...`)".into()))
}

/// Runs `config`, writing to its output path (or stdout).
pub fn run(config: &RunConfig) -> Result<RunStatus> {
    match &config.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| {
                Error::Config(format!("cannot write output {}: {e}", path.display()))
            })?;
            let mut w = BufWriter::new(file);
            let status = run_to(config, &mut w)?;
            w.flush().map_err(io_err)?;
            Ok(status)
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            let status = run_to(config, &mut w)?;
            w.flush().map_err(io_err)?;
            Ok(status)
        }
    }
}

fn io_err(e: io::Error) -> Error {
    Error::Config(format!("write failed: {e}"))
}

/// Runs `config`, writing the mode's output to `out`.
pub fn run_to(config: &RunConfig, out: &mut dyn Write) -> Result<RunStatus> {
    match require_mode(config)? {
        Mode::Integrate => run_integrate(config, out),
        Mode::Sample => run_sample(config, out),
        Mode::Verify => run_verify(config, out),
        Mode::Classify => run_classify(config, out),
        Mode::Sweep => run_sweep(config, out),
    }
}

enum Integrated {
    ThreeD(Trajectory3D),
    TwoD(Trajectory2D),
}

impl Integrated {
    fn termination(&self) -> TrajectoryEnd {
        match self {
            Integrated::ThreeD(t) => t.termination,
            Integrated::TwoD(t) => t.termination,
        }
    }
}

fn integrate_config(config: &RunConfig, t_end: f64, dense: Vec<f64>) -> Result<Integrated> {
    let opts = integrate_options(&config.tolerances, dense);
    Ok(match &config.ic {
        InitialCondition::ThreeD(ic) => {
            Integrated::ThreeD(integrate_3d(&config.params, ic, t_end, &opts)?)
        }
        InitialCondition::TwoD(ic) => {
            Integrated::TwoD(integrate_2d(&config.params, ic, t_end, &opts)?)
        }
    })
}

fn check_numerical(end: &TrajectoryEnd) -> Result<()> {
    if let TrajectoryEnd::StepFailure { t, reason } = end {
        return Err(Error::Numerical(format!(
            "integration failed at t={t} ({reason:?})"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct Sample3DRecord {
    t: f64,
    a: f64,
    a_dot: f64,
    b: f64,
    b_dot: f64,
    energy: f64,
}

#[derive(Serialize)]
struct Sample2DRecord {
    t: f64,
    a: f64,
    a_dot: f64,
    energy: f64,
}

#[derive(Serialize)]
struct TerminationRecord<'a> {
    #[serde(flatten)]
    end: TrajectoryEnd,
    #[serde(skip_serializing_if = "Option::is_none")]
    evidence: Option<&'a str>,
}

fn json_line(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string(value).map_err(|e| Error::Numerical(e.to_string()))?;
    writeln!(out, "{text}").map_err(io_err)
}

fn run_integrate(config: &RunConfig, out: &mut dyn Write) -> Result<RunStatus> {
    let traj = integrate_config(config, config.t_end, config.times.clone())?;
    let p = &config.params;
    let end = traj.termination();
    match &traj {
        Integrated::ThreeD(t) => {
            for s in &t.samples {
                json_line(
                    out,
                    &Sample3DRecord {
                        t: s.t,
                        a: s.a,
                        a_dot: s.a_dot,
                        b: s.b,
                        b_dot: s.b_dot,
                        energy: energy_3d(s, p)?.value,
                    },
                )?;
            }
        }
        Integrated::TwoD(t) => {
            for s in &t.samples {
                json_line(
                    out,
                    &Sample2DRecord {
                        t: s.t,
                        a: s.a,
                        a_dot: s.a_dot,
                        energy: energy_2d(s, p)?.value,
                    },
                )?;
            }
        }
    }
    let open = matches!(&config.ic, InitialCondition::ThreeD(ic) if corollary_case(p, ic) == CorollaryCase::Open);
    json_line(
        out,
        &TerminationRecord {
            end,
            evidence: open.then_some(EVIDENCE_LABEL),
        },
    )?;
    check_numerical(&end)?;
    Ok(match end {
        TrajectoryEnd::BlowupDetected { .. } => RunStatus::BlowupTruncated(end),
        _ => RunStatus::Complete,
    })
}

fn require_grid(config: &RunConfig) -> Result<Grid> {
    config
        .grid
        .ok_or_else(|| Error::Config("this mode needs `grid.x`, `grid.y` (and `grid.z` in 3D)".into()))
}

fn require_times(config: &RunConfig) -> Result<&[f64]> {
    if config.times.is_empty() {
        Err(Error::Config("this mode needs `times`".into()))
    } else {
        Ok(&config.times)
    }
}

fn csv_row(buf: &mut String, [x, y, z, t]: [f64; 4], s: &FieldSample) {
    use std::fmt::Write as _;
    let _ = writeln!(
        buf,
        "{},{},{},{},{},{},{},{},{},{}",
        fmt_f64(x),
        fmt_f64(y),
        fmt_f64(z),
        fmt_f64(t),
        fmt_f64(s.rho),
        fmt_f64(s.u[0]),
        fmt_f64(s.u[1]),
        fmt_f64(s.u[2]),
        fmt_f64(s.s),
        fmt_f64(s.p)
    );
}

/// Writes the field table; rows are ordered with x fastest, then y, z, t,
/// so row `ix + nx (iy + ny (iz + nz it))` holds grid node `(ix, iy, iz)`
/// at the `it`-th time.
fn run_sample(config: &RunConfig, out: &mut dyn Write) -> Result<RunStatus> {
    let grid = require_grid(config)?;
    let times = require_times(config)?;
    let t_last = *times.last().unwrap_or(&config.t_end);
    let traj = integrate_config(config, t_last.max(f64::MIN_POSITIVE), Vec::new())?;
    let end = traj.termination();
    check_numerical(&end)?;

    let xs = grid.x.points();
    let ys = grid.y.points();
    let zs = grid.z.map_or(vec![0.0], |z| z.points());
    writeln!(out, "{FIELD_HEADER}").map_err(io_err)?;

    let sources: (Option<TrajectoryField3D>, Option<TrajectoryField2D>) = match traj {
        Integrated::ThreeD(t) => (Some(TrajectoryField3D::new(config.params, t)), None),
        Integrated::TwoD(t) => (None, Some(TrajectoryField2D::new(config.params, t))),
    };
    let covered = |t: f64| match &sources {
        (Some(f), _) => f.trajectory.state_at(t).is_some(),
        (_, Some(f)) => f.trajectory.state_at(t).is_some(),
        _ => false,
    };

    for &t in times {
        if !covered(t) {
            return Ok(RunStatus::BlowupTruncated(end));
        }
        let slabs: Vec<String> = zs
            .par_iter()
            .map(|&z| -> Result<String> {
                let mut buf = String::new();
                match &sources {
                    (Some(f), _) => {
                        let field = f.at(t)?;
                        for &y in &ys {
                            for &x in &xs {
                                csv_row(&mut buf, [x, y, z, t], &field.eval(x, y, z)?);
                            }
                        }
                    }
                    (_, Some(f)) => {
                        let field = f.at(t)?;
                        for &y in &ys {
                            for &x in &xs {
                                csv_row(&mut buf, [x, y, z, t], &field.eval(x, y)?);
                            }
                        }
                    }
                    _ => unreachable!(),
                }
                Ok(buf)
            })
            .collect::<Result<_>>()?;
        for slab in slabs {
            out.write_all(slab.as_bytes()).map_err(io_err)?;
        }
    }
    Ok(RunStatus::Complete)
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    params: &'a PhysParams,
    stencil_h: f64,
    refined_h: f64,
    #[serde(flatten)]
    report: VerificationReport,
}

fn run_verify(config: &RunConfig, out: &mut dyn Write) -> Result<RunStatus> {
    let grid = require_grid(config)?;
    let times = require_times(config)?;
    let h = config.stencil_h;
    if times[0] - h < 0.0 {
        return Err(Error::Config(format!(
            "verification times must be ≥ h = {h} so the time stencil stays after t = 0"
        )));
    }
    let horizon = times[times.len() - 1] + 2.0 * h;
    let traj = integrate_config(config, horizon, Vec::new())?;
    let end = traj.termination();
    check_numerical(&end)?;
    if end.blowup_time().is_some_and(|tb| tb < horizon) {
        return Ok(RunStatus::BlowupTruncated(end));
    }

    let zs = grid.z.map_or(vec![0.0], |z| z.points());
    let mut points = Vec::new();
    for &t in times {
        for &z in &zs {
            for y in grid.y.points() {
                for x in grid.x.points() {
                    points.push([t, x, y, z]);
                }
            }
        }
    }
    let mu = config.params.mu();
    let report = match traj {
        Integrated::ThreeD(t) => verify_points(&TrajectoryField3D::new(config.params, t), &points, h, mu)?,
        Integrated::TwoD(t) => verify_points(&TrajectoryField2D::new(config.params, t), &points, h, mu)?,
    };
    let text = serde_json::to_string_pretty(&VerifyOutput {
        params: &config.params,
        stencil_h: h,
        refined_h: 0.5 * h,
        report,
    })
    .map_err(|e| Error::Numerical(e.to_string()))?;
    writeln!(out, "{text}").map_err(io_err)?;
    Ok(RunStatus::Complete)
}

#[derive(Serialize)]
struct ClassifyOutput<'a> {
    params: &'a PhysParams,
    ic: &'a EmdenState3D,
    #[serde(flatten)]
    classification: Classification,
    #[serde(skip_serializing_if = "Option::is_none")]
    probe: Option<Classification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    evidence: Option<&'static str>,
}

#[derive(Serialize)]
struct Period2DOutput<'a> {
    params: &'a PhysParams,
    ic: &'a EmdenState2D,
    t_max: f64,
    period: PeriodOutcome,
}

fn run_classify(config: &RunConfig, out: &mut dyn Write) -> Result<RunStatus> {
    let p = &config.params;
    let text = match &config.ic {
        InitialCondition::ThreeD(ic) => {
            let classification = classify_3d(p, ic);
            let probe = match (corollary_case(p, ic), config.probe_horizon) {
                (CorollaryCase::Open, Some(horizon)) => {
                    Some(probe_open_case(p, ic, horizon, config.tolerances.rel_tol)?)
                }
                _ => None,
            };
            let evidence = probe.is_some().then_some(EVIDENCE_LABEL);
            serde_json::to_string_pretty(&ClassifyOutput {
                params: p,
                ic,
                classification,
                probe,
                evidence,
            })
        }
        InitialCondition::TwoD(ic) => {
            let period = detect_period_2d(p, ic, config.t_end, config.tolerances.rel_tol)?;
            serde_json::to_string_pretty(&Period2DOutput {
                params: p,
                ic,
                t_max: config.t_end,
                period,
            })
        }
    }
    .map_err(|e| Error::Numerical(e.to_string()))?;
    writeln!(out, "{text}").map_err(io_err)?;
    Ok(RunStatus::Complete)
}

/// One point of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub params: PhysParams,
    pub ic: InitialCondition,
    pub verdict: String,
    pub case: String,
    /// Analytic event time when known.
    pub t_analytic: Option<f64>,
    /// Numerical event time (3D) or detected period (2D).
    pub t_est: Option<f64>,
}

fn apply_override(
    base: (PhysParams, InitialCondition),
    name: &str,
    v: f64,
) -> Result<(PhysParams, InitialCondition)> {
    let (p, ic) = base;
    let mut c = [p.k(), p.gamma(), p.lambda(), p.alpha(), p.xi()];
    let mut mu = p.mu();
    let mut ic = ic;
    match name {
        "K" => c[0] = v,
        "gamma" => c[1] = v,
        "lambda" => c[2] = v,
        "alpha" => c[3] = v,
        "xi" => c[4] = v,
        "mu" => mu = v,
        "a0" | "a1" | "b0" | "b1" => {
            ic = match ic {
                InitialCondition::ThreeD(mut s) => {
                    match name {
                        "a0" => s.a = v,
                        "a1" => s.a_dot = v,
                        "b0" => s.b = v,
                        _ => s.b_dot = v,
                    }
                    s.validate()?;
                    InitialCondition::ThreeD(s)
                }
                InitialCondition::TwoD(mut s) => {
                    match name {
                        "a0" => s.a = v,
                        "a1" => s.a_dot = v,
                        _ => return Err(Error::Config(format!("`{name}` is not a 2D key"))),
                    }
                    s.validate()?;
                    InitialCondition::TwoD(s)
                }
            }
        }
        _ => return Err(Error::Config(format!("cannot sweep `{name}`"))),
    }
    let p = PhysParams::new(c[0], c[1], c[2], c[3], c[4])?.with_mu(mu)?;
    Ok((p, ic))
}

/// Cartesian product of the swept values, the last swept key varying fastest.
pub fn sweep_points(config: &RunConfig) -> Result<Vec<(PhysParams, InitialCondition)>> {
    let mut points = vec![(config.params, config.ic)];
    for (name, values) in &config.sweep {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for base in &points {
            for &v in values {
                next.push(apply_override(*base, name, v).map_err(|e| {
                    Error::Config(format!("sweep.{name} = {v}: {e}"))
                })?);
            }
        }
        points = next;
    }
    Ok(points)
}

fn sweep_row(config: &RunConfig, p: PhysParams, ic: InitialCondition) -> Result<SweepRow> {
    let opts = integrate_options(&config.tolerances, Vec::new());
    match ic {
        InitialCondition::ThreeD(s) => {
            let c = classify_3d(&p, &s);
            let traj = integrate_3d(&p, &s, config.t_end, &opts)?;
            let (verdict, t_analytic) = match c.verdict {
                crate::classification::Verdict::Global => ("global", None),
                crate::classification::Verdict::FiniteTimeBlowup { t } => ("finite_time_blowup", t),
                crate::classification::Verdict::UnknownOpenCase => ("unknown_open_case", None),
            };
            let case = corollary_case(&p, &s).id().to_string();
            Ok(SweepRow {
                params: p,
                ic,
                verdict: verdict.into(),
                case,
                t_analytic,
                t_est: traj.termination.blowup_time(),
            })
        }
        InitialCondition::TwoD(s) => {
            let outcome = detect_period_2d(&p, &s, config.t_end, config.tolerances.rel_tol)?;
            let (verdict, t_est) = match &outcome {
                PeriodOutcome::FixedPoint { .. } => ("fixed_point", None),
                PeriodOutcome::Periodic(e) => ("periodic", Some(e.period)),
                PeriodOutcome::NotDetected => ("not_detected", None),
            };
            Ok(SweepRow {
                params: p,
                ic,
                verdict: verdict.into(),
                case: "2d".into(),
                t_analytic: None,
                t_est,
            })
        }
    }
}

pub fn sweep(config: &RunConfig) -> Result<Vec<SweepRow>> {
    sweep_points(config)?
        .into_par_iter()
        .map(|(p, ic)| sweep_row(config, p, ic))
        .collect()
}

fn run_sweep(config: &RunConfig, out: &mut dyn Write) -> Result<RunStatus> {
    let rows = sweep(config)?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let three_d = config.ic.dim() == 3;
    let header = if three_d {
        "K,gamma,lambda,alpha,xi,a0,a1,b0,b1,case,verdict,T_analytic,T_est"
    } else {
        "K,gamma,lambda,alpha,xi,a0,a1,case,verdict,T_analytic,T_est"
    };
    writeln!(out, "{header}").map_err(io_err)?;
    for r in rows {
        let p = &r.params;
        let mut cols = vec![
            fmt_f64(p.k()),
            fmt_f64(p.gamma()),
            fmt_f64(p.lambda()),
            fmt_f64(p.alpha()),
            fmt_f64(p.xi()),
        ];
        match r.ic {
            InitialCondition::ThreeD(s) => cols.extend([s.a, s.a_dot, s.b, s.b_dot].map(fmt_f64)),
            InitialCondition::TwoD(s) => cols.extend([s.a, s.a_dot].map(fmt_f64)),
        }
        cols.extend([r.case, r.verdict, opt(r.t_analytic), opt(r.t_est)]);
        writeln!(out, "{}", cols.join(",")).map_err(io_err)?;
    }
    Ok(RunStatus::Complete)
}
