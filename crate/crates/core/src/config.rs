//! Run configuration: `key = value` lines with `#` comments.
//!
//! Recognized keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `mode` | `integrate`, `sample`, `verify`, `classify`, `sweep` | set by the subcommand |
//! | `dim` | `2` or `3` | `3` |
//! | `K`, `gamma`, `lambda`, `alpha`, `xi`, `mu` | physical constants | `K = 1`, `mu = 0` |
//! | `a0`, `a1`, `b0`, `b1` | initial scale factors and rates (`b*` only in 3D) | required |
//! | `t_end` | integration horizon | last of `times`, else 1 |
//! | `times` | comma-separated output times | empty |
//! | `grid.x`, `grid.y`, `grid.z` | `min:max:count` | none |
//! | `rel_tol`, `abs_tol`, `max_steps`, `floor_factor` | integrator controls | `1e-10`, `1e-12`, `1000000`, `1e-10` |
//! | `h` | residual stencil size | `1e-3` |
//! | `output` | output path (stdout when absent) | none |
//! | `probe.horizon` | horizon for numerically probing the undecided case | none |
//! | `sweep.<name>` | values (`v1,v2,...` or `min:max:count`) of a constant or initial value | none |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::emden::{EmdenState2D, EmdenState3D};
use crate::error::{Error, Result};
use crate::params::PhysParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Integrate,
    Sample,
    Verify,
    Classify,
    Sweep,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Integrate => "integrate",
            Mode::Sample => "sample",
            Mode::Verify => "verify",
            Mode::Classify => "classify",
            Mode::Sweep => "sweep",
        }
    }

    fn parse(v: &str) -> Option<Self> {
        Some(match v {
            "integrate" => Mode::Integrate,
            "sample" => Mode::Sample,
            "verify" => Mode::Verify,
            "classify" => Mode::Classify,
            "sweep" => Mode::Sweep,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    ThreeD(EmdenState3D),
    TwoD(EmdenState2D),
}

impl InitialCondition {
    pub fn dim(&self) -> u8 {
        match self {
            InitialCondition::ThreeD(_) => 3,
            InitialCondition::TwoD(_) => 2,
        }
    }
}

/// Uniformly spaced axis including both end points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn point(&self, i: usize) -> f64 {
        if self.count <= 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.point(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x: Axis,
    pub y: Axis,
    /// Absent for 2D runs.
    pub z: Option<Axis>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub floor_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
            floor_factor: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub params: PhysParams,
    pub ic: InitialCondition,
    pub t_end: f64,
    pub times: Vec<f64>,
    pub grid: Option<Grid>,
    pub tolerances: Tolerances,
    pub stencil_h: f64,
    pub output: Option<PathBuf>,
    pub probe_horizon: Option<f64>,
    /// Swept keys with their values, in declaration order.
    pub sweep: Vec<(String, Vec<f64>)>,
}

/// Keys that may be swept.
pub const SWEEPABLE: [&str; 10] = [
    "K", "gamma", "lambda", "alpha", "xi", "mu", "a0", "a1", "b0", "b1",
];

const KEYS: [&str; 25] = [
    "mode",
    "dim",
    "K",
    "gamma",
    "lambda",
    "alpha",
    "xi",
    "mu",
    "a0",
    "a1",
    "b0",
    "b1",
    "t_end",
    "times",
    "grid.x",
    "grid.y",
    "grid.z",
    "rel_tol",
    "abs_tol",
    "max_steps",
    "floor_factor",
    "h",
    "output",
    "probe.horizon",
    "sweep.*",
];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    /// 1-based source line; 0 for command-line overrides.
    line: usize,
}

/// Raw key/value entries, later assignments winning.
#[derive(Debug, Clone, Default)]
pub struct ConfigEntries {
    entries: BTreeMap<String, Entry>,
    order: Vec<String>,
}

fn known_key(key: &str) -> bool {
    if let Some(name) = key.strip_prefix("sweep.") {
        return SWEEPABLE.contains(&name);
    }
    KEYS.contains(&key)
}

impl ConfigEntries {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {line}: expected `key = value`, got `{content}`"))
            })?;
            out.insert(key.trim(), value.trim(), line)?;
        }
        Ok(out)
    }

    /// Applies a `key=value` override (command-line flags).
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            Error::Config(format!("override `{assignment}` must have the form key=value"))
        })?;
        self.insert(key.trim(), value.trim(), 0)
    }

    pub fn set_value(&mut self, key: &str, value: &str) -> Result<()> {
        self.insert(key, value, 0)
    }

    fn insert(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        if !known_key(key) {
            return Err(Error::Config(format!("{}unknown key `{key}`", at(line))));
        }
        if !self.entries.contains_key(key) {
            self.order.push(key.to_string());
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
            },
        );
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|e| parse_number(key, &e.value, e.line))
            .transpose()
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.number(key)?
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    pub fn build(&self) -> Result<RunConfig> {
        let mode = match self.get("mode") {
            Some(e) => Some(Mode::parse(&e.value).ok_or_else(|| {
                Error::Config(format!(
                    "{}key `mode`: unknown mode `{}`",
                    at(e.line),
                    e.value
                ))
            })?),
            None => None,
        };
        let dim = match self.get("dim") {
            None => 3,
            Some(e) => match e.value.as_str() {
                "2" => 2,
                "3" => 3,
                other => {
                    return Err(Error::Config(format!(
                        "{}key `dim`: must be 2 or 3, got `{other}`",
                        at(e.line)
                    )))
                }
            },
        };

        let with_key = |key: &'static str, e: Error| match (e, self.get(key)) {
            (Error::InvalidParameter { reason, .. }, entry) => Error::Config(format!(
                "{}key `{key}`: {reason}",
                entry.map_or(String::new(), |e| at(e.line))
            )),
            (other, _) => other,
        };
        let k = self.number("K")?.unwrap_or(1.0);
        let gamma = self.required("gamma")?;
        let lambda = self.required("lambda")?;
        let alpha = self.required("alpha")?;
        let xi = self.required("xi")?;
        let params = PhysParams::new(k, gamma, lambda, alpha, xi).map_err(|e| match &e {
            Error::InvalidParameter { name, .. } => with_key(name, e.clone()),
            _ => e,
        })?;
        let params = params
            .with_mu(self.number("mu")?.unwrap_or(0.0))
            .map_err(|e| with_key("mu", e))?;

        let positive = |key: &'static str| -> Result<f64> {
            let v = self.required(key)?;
            if v > 0.0 {
                Ok(v)
            } else {
                Err(Error::Config(format!(
                    "{}key `{key}`: initial scale factor must be > 0, got {v}",
                    self.get(key).map_or(String::new(), |e| at(e.line))
                )))
            }
        };
        let a0 = positive("a0")?;
        let a1 = self.required("a1")?;
        let ic = if dim == 3 {
            let b0 = positive("b0")?;
            let b1 = self.required("b1")?;
            InitialCondition::ThreeD(EmdenState3D::new(0.0, a0, a1, b0, b1)?)
        } else {
            for key in ["b0", "b1", "grid.z", "sweep.b0", "sweep.b1"] {
                if self.get(key).is_some() {
                    return Err(Error::Config(format!("key `{key}` is not used in 2D runs")));
                }
            }
            InitialCondition::TwoD(EmdenState2D::new(0.0, a0, a1)?)
        };

        let times = match self.get("times") {
            Some(e) => parse_list("times", &e.value, e.line)?,
            None => Vec::new(),
        };
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("key `times`: must be strictly increasing".into()));
        }
        let t_end = match self.number("t_end")? {
            Some(t) => t,
            None => times.last().copied().filter(|&t| t > 0.0).unwrap_or(1.0),
        };
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::Config(format!("key `t_end`: must be > 0, got {t_end}")));
        }
        if let Some(&bad) = times.iter().find(|&&t| !(0.0..=t_end).contains(&t)) {
            return Err(Error::Config(format!(
                "key `times`: {bad} lies outside [0, t_end = {t_end}]"
            )));
        }

        let axis = |key: &str| -> Result<Option<Axis>> {
            self.get(key)
                .map(|e| parse_axis(key, &e.value, e.line))
                .transpose()
        };
        let gx = axis("grid.x")?;
        let gy = axis("grid.y")?;
        let gz = axis("grid.z")?;
        let grid = match (gx, gy) {
            (None, None) if gz.is_none() => None,
            (Some(x), Some(y)) => {
                if dim == 3 && gz.is_none() {
                    return Err(Error::Config("missing required key `grid.z`".into()));
                }
                Some(Grid { x, y, z: gz })
            }
            _ => {
                return Err(Error::Config(
                    "grid needs both `grid.x` and `grid.y`".into(),
                ))
            }
        };

        let defaults = Tolerances::default();
        let tolerances = Tolerances {
            rel_tol: self.number("rel_tol")?.unwrap_or(defaults.rel_tol),
            abs_tol: self.number("abs_tol")?.unwrap_or(defaults.abs_tol),
            max_steps: match self.get("max_steps") {
                Some(e) => e.value.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
                    Error::Config(format!(
                        "{}key `max_steps`: expected a positive integer, got `{}`",
                        at(e.line),
                        e.value
                    ))
                })?,
                None => defaults.max_steps,
            },
            floor_factor: self.number("floor_factor")?.unwrap_or(defaults.floor_factor),
        };
        for (key, v) in [
            ("rel_tol", tolerances.rel_tol),
            ("abs_tol", tolerances.abs_tol),
            ("floor_factor", tolerances.floor_factor),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("key `{key}`: must lie in (0, 1), got {v}")));
            }
        }
        let stencil_h = self.number("h")?.unwrap_or(1e-3);
        if !(stencil_h > 0.0 && stencil_h.is_finite()) {
            return Err(Error::Config(format!("key `h`: must be > 0, got {stencil_h}")));
        }
        let probe_horizon = self.number("probe.horizon")?;
        if let Some(hz) = probe_horizon {
            if !(hz > 0.0 && hz.is_finite()) {
                return Err(Error::Config(format!(
                    "key `probe.horizon`: must be > 0, got {hz}"
                )));
            }
        }

        let mut sweep = Vec::new();
        for key in &self.order {
            if let Some(name) = key.strip_prefix("sweep.") {
                let e = &self.entries[key];
                let values = if e.value.contains(':') {
                    parse_axis(key, &e.value, e.line)?.points()
                } else {
                    parse_list(key, &e.value, e.line)?
                };
                if values.is_empty() {
                    return Err(Error::Config(format!("key `{key}`: no values")));
                }
                sweep.push((name.to_string(), values));
            }
        }

        Ok(RunConfig {
            mode,
            params,
            ic,
            t_end,
            times,
            grid,
            tolerances,
            stencil_h,
            output: self.get("output").map(|e| PathBuf::from(&e.value)),
            probe_horizon,
            sweep,
        })
    }
}

fn at(line: usize) -> String {
    if line == 0 {
        "override: ".to_string()
    } else {
        format!("line {line}: ")
    }
}

fn parse_number(key: &str, v: &str, line: usize) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Config(format!("{}key `{key}`: malformed number `{v}`", at(line))))
}

fn parse_list(key: &str, v: &str, line: usize) -> Result<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|item| parse_number(key, item.trim(), line))
        .collect()
}

fn parse_axis(key: &str, v: &str, line: usize) -> Result<Axis> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    let [min, max, count] = parts[..] else {
        return Err(Error::Config(format!(
            "{}key `{key}`: expected `min:max:count`, got `{v}`",
            at(line)
        )));
    };
    let min = parse_number(key, min, line)?;
    let max = parse_number(key, max, line)?;
    let count = count.parse::<usize>().map_err(|_| {
        Error::Config(format!("{}key `{key}`: malformed count `{count}`", at(line)))
    })?;
    // A grid axis with a single point must be degenerate; sweeps take the minimum.
    let single_ok = key.starts_with("sweep.") || min == max;
    if count == 0 || (count == 1 && !single_ok) || max < min {
        return Err(Error::Config(format!(
            "{}key `{key}`: need min ≤ max and count ≥ 2 (or count = 1 with min = max), got `{v}`",
            at(line)
        )));
    }
    Ok(Axis { min, max, count })
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    ConfigEntries::parse(text)?.build()
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn axis_text(a: &Axis) -> String {
    format!("{}:{}:{}", num(a.min), num(a.max), a.count)
}

/// Renders a config in the file format; `parse_config` inverts it.
pub fn serialize_config(c: &RunConfig) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    if let Some(m) = c.mode {
        line("mode", m.as_str().into());
    }
    line("dim", c.ic.dim().to_string());
    let p = &c.params;
    line("K", num(p.k()));
    line("gamma", num(p.gamma()));
    line("lambda", num(p.lambda()));
    line("alpha", num(p.alpha()));
    line("xi", num(p.xi()));
    line("mu", num(p.mu()));
    match &c.ic {
        InitialCondition::ThreeD(s) => {
            line("a0", num(s.a));
            line("a1", num(s.a_dot));
            line("b0", num(s.b));
            line("b1", num(s.b_dot));
        }
        InitialCondition::TwoD(s) => {
            line("a0", num(s.a));
            line("a1", num(s.a_dot));
        }
    }
    line("t_end", num(c.t_end));
    if !c.times.is_empty() {
        line(
            "times",
            c.times.iter().map(|&t| num(t)).collect::<Vec<_>>().join(","),
        );
    }
    if let Some(g) = &c.grid {
        line("grid.x", axis_text(&g.x));
        line("grid.y", axis_text(&g.y));
        if let Some(z) = &g.z {
            line("grid.z", axis_text(z));
        }
    }
    line("rel_tol", num(c.tolerances.rel_tol));
    line("abs_tol", num(c.tolerances.abs_tol));
    line("max_steps", c.tolerances.max_steps.to_string());
    line("floor_factor", num(c.tolerances.floor_factor));
    line("h", num(c.stencil_h));
    if let Some(o) = &c.output {
        line("output", o.display().to_string());
    }
    if let Some(hz) = c.probe_horizon {
        line("probe.horizon", num(hz));
    }
    for (name, values) in &c.sweep {
        line(
            &format!("sweep.{name}"),
            values.iter().map(|&v| num(v)).collect::<Vec<_>>().join(","),
        );
    }
    out
}
