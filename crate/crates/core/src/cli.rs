//! Scenario runner: one JSON config in, `report.json` plus CSV tables out.
//!
//! Exit codes: 0 completed, 1 output could not be written, 2 invalid
//! config, 3 numerical failure, 4 a guard stopped a task.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::eigen::{lambda_curve, lambda_diagnostics, richardson, write_curve_csv};
use crate::error::Error;
use crate::exec::Exec;
use crate::frontsim::{auto_half_width, run_front, speed_estimate, spreading_verdict, FrontOptions, MIN_FIT_POINTS};
use crate::orbits::{OrbitOptions, PeriodicOrbit};
use crate::speeds::{analyze_with, check_hypotheses_with, invasion_potential, Certificate, Orbits, SpeedOptions, SpeedReport};
use crate::system::{ModelExprs, SystemSpec};
use crate::weinberger::{Recursion, RecursionOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_GUARD: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Eigen,
    Orbit,
    Check,
    Speed,
    Weinberger,
    Front,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Eigen => "eigen",
            Task::Orbit => "orbit",
            Task::Check => "check",
            Task::Speed => "speed",
            Task::Weinberger => "weinberger",
            Task::Front => "front",
        }
    }

    fn requires(self) -> &'static [Task] {
        match self {
            Task::Eigen | Task::Orbit => &[],
            Task::Check | Task::Speed => &[Task::Orbit],
            Task::Weinberger | Task::Front => &[Task::Speed],
        }
    }
}

/// Adds every prerequisite and returns the tasks in execution order.
pub fn resolve_tasks(requested: &[Task]) -> Vec<Task> {
    let mut out: Vec<Task> = Vec::new();
    let mut stack: Vec<Task> = requested.to_vec();
    while let Some(t) = stack.pop() {
        if !out.contains(&t) {
            out.push(t);
            stack.extend_from_slice(t.requires());
        }
    }
    out.sort();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Discretization {
    /// Time nodes per period.
    pub nt: usize,
    /// Space nodes per spatial period.
    pub nx: usize,
    /// Overrides `nt` with `round(omega / dt)`.
    pub dt: Option<f64>,
    /// Overrides `nx` with `round(ell / dx)`.
    pub dx: Option<f64>,
    /// Half-width of the front simulation domain; sized from the speed
    /// estimate when absent.
    #[serde(rename = "A")]
    pub half_width: Option<f64>,
    /// Periods simulated by the front task.
    #[serde(rename = "T")]
    pub periods: usize,
    pub threshold: f64,
    pub discard: f64,
    /// Slopes tabulated by the eigen task.
    pub mu_grid: Vec<f64>,
    pub recursion_half_width: Option<f64>,
    pub recursion_cells: Option<usize>,
    pub recursion_cap: usize,
    pub bisection_steps: usize,
    pub c_range: Option<[f64; 2]>,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            nt: 200,
            nx: 64,
            dt: None,
            dx: None,
            half_width: None,
            periods: 40,
            threshold: 0.5,
            discard: 0.3,
            mu_grid: (0..9).map(|i| -2.0 + 0.5 * i as f64).collect(),
            recursion_half_width: None,
            recursion_cells: None,
            recursion_cap: 2000,
            bisection_steps: 6,
            c_range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelExprs,
    #[serde(default)]
    pub discretization: Discretization,
    pub tasks: Vec<Task>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("speedlab-out")
}

impl ScenarioConfig {
    pub fn from_json(src: &str) -> Result<Self, Failure> {
        serde_json::from_str(src).map_err(|e| Failure {
            code: EXIT_INVALID,
            kind: "SchemaError".into(),
            message: e.to_string(),
            task: None,
        })
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let src = fs::read_to_string(path).map_err(|e| Failure {
            code: EXIT_INVALID,
            kind: "IoError".into(),
            message: format!("{}: {e}", path.display()),
            task: None,
        })?;
        Self::from_json(&src)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Machine-readable reason for a non-zero exit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    #[serde(skip)]
    pub code: i32,
    pub kind: String,
    pub message: String,
    pub task: Option<String>,
}

impl Failure {
    fn from_error(e: &Error, task: Option<Task>) -> Self {
        Self { code: exit_code(e), kind: e.kind().into(), message: e.to_string(), task: task.map(|t| t.name().into()) }
    }

    fn guard(kind: &str, message: String, task: Task) -> Self {
        Self { code: EXIT_GUARD, kind: kind.into(), message, task: Some(task.name().into()) }
    }

    fn io(e: std::io::Error, path: &Path) -> Self {
        Self { code: EXIT_IO, kind: "IoError".into(), message: format!("{}: {e}", path.display()), task: None }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Eval { .. } | Error::Invalid(_) | Error::NonElliptic { .. } => EXIT_INVALID,
        Error::SingularSolve(_) | Error::Blowup { .. } | Error::NoConvergence { .. } => EXIT_NUMERICAL,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_GUARD,
    }
}

fn status_of(code: i32) -> &'static str {
    match code {
        EXIT_OK => "ok",
        EXIT_IO => "io-failure",
        EXIT_INVALID => "validation-failure",
        EXIT_NUMERICAL => "numerical-failure",
        _ => "guard-abort",
    }
}

/// A config that passed validation, with the grid built.
#[derive(Debug, Clone)]
pub struct Plan {
    pub config: ScenarioConfig,
    pub tasks: Vec<Task>,
    pub nt: usize,
    pub nx: usize,
    pub system: SystemSpec,
}

impl Plan {
    pub fn has(&self, t: Task) -> bool {
        self.tasks.contains(&t)
    }

    pub fn summary(&self) -> Value {
        json!({
            "tasks": self.tasks.iter().map(|t| t.name()).collect::<Vec<_>>(),
            "grid": { "nt": self.nt, "nx": self.nx, "omega": self.system.omega(), "ell": self.system.ell() },
            "output": self.config.output,
        })
    }
}

fn invalid(message: String) -> Failure {
    Failure { code: EXIT_INVALID, kind: "InvalidInput".into(), message, task: None }
}

/// Checks the schema-level constraints, resolves task dependencies and
/// samples every coefficient.
pub fn validate(config: &ScenarioConfig) -> Result<Plan, Failure> {
    let m = &config.model;
    let d = &config.discretization;
    if !(m.omega > 0.0 && m.omega.is_finite() && m.ell > 0.0 && m.ell.is_finite()) {
        return Err(invalid(format!("omega and ell must be positive, got {} and {}", m.omega, m.ell)));
    }
    if config.tasks.is_empty() {
        return Err(invalid("task list is empty".into()));
    }
    let grid = |step: Option<f64>, period: f64, fallback: usize, name: &str| -> Result<usize, Failure> {
        match step {
            Some(h) if h > 0.0 && h.is_finite() => Ok((period / h).round().max(1.0) as usize),
            Some(h) => Err(invalid(format!("{name} must be positive, got {h}"))),
            None => Ok(fallback),
        }
    };
    let nt = grid(d.dt, m.omega, d.nt, "dt")?;
    let nx = grid(d.dx, m.ell, d.nx, "dx")?;
    if nt < 2 || nx < 4 {
        return Err(invalid(format!("grid too coarse: nt = {nt}, nx = {nx} (need nt >= 2, nx >= 4)")));
    }
    if d.mu_grid.len() < 3 || d.mu_grid.iter().any(|v| !v.is_finite()) || d.mu_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("mu_grid must be strictly increasing with at least 3 finite points".into()));
    }
    if !(d.threshold > 0.0 && d.threshold < 1.0) {
        return Err(invalid(format!("threshold must lie in (0, 1), got {}", d.threshold)));
    }
    if !(0.0..1.0).contains(&d.discard) {
        return Err(invalid(format!("discard must lie in [0, 1), got {}", d.discard)));
    }
    let kept = ((d.periods + 1) as f64 * (1.0 - d.discard)).floor() as usize;
    if kept < MIN_FIT_POINTS {
        return Err(invalid(format!("T = {} keeps only {kept} fit points after discard (need {MIN_FIT_POINTS})", d.periods)));
    }
    if let Some(a) = d.half_width {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid(format!("A must be positive, got {a}")));
        }
    }
    if let Some([lo, hi]) = d.c_range {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(invalid(format!("c_range must be an increasing pair, got [{lo}, {hi}]")));
        }
    }
    if d.bisection_steps == 0 || d.recursion_cap == 0 {
        return Err(invalid("bisection_steps and recursion_cap must be positive".into()));
    }
    let system = SystemSpec::from_exprs(m, nt, nx).map_err(|e| Failure::from_error(&e, None))?;
    Ok(Plan { config: config.clone(), tasks: resolve_tasks(&config.tasks), nt, nx, system })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Repeat the speed computation on a doubled grid.
    pub refine: bool,
    /// Suppress progress lines on stderr.
    pub quiet: bool,
    pub exec: Exec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub report: Value,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
}

/// Per-task results gathered before the report is assembled.
#[derive(Default)]
struct Section {
    values: Map<String, Value>,
    files: Vec<(String, Vec<u8>)>,
    failure: Option<Failure>,
}

impl Section {
    fn failed(f: Failure) -> Self {
        Self { failure: Some(f), ..Self::default() }
    }

    fn file(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) {
        let mut buf = Vec::new();
        write(&mut buf).expect("writing to memory");
        self.files.push((name.to_string(), buf));
    }

    fn merge(&mut self, other: Section) {
        self.values.extend(other.values);
        self.files.extend(other.files);
        if self.failure.is_none() {
            self.failure = other.failure;
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

struct Runner<'a> {
    plan: &'a Plan,
    exec: Exec,
    quiet: bool,
}

impl Runner<'_> {
    fn progress(&self, msg: &str) {
        if !self.quiet {
            eprintln!("speedlab: {msg}");
        }
    }

    fn speed_options(&self) -> SpeedOptions {
        SpeedOptions { exec: self.exec, ..SpeedOptions::default() }
    }

    fn eigen(&self) -> Section {
        self.progress("eigen");
        let sys = &self.plan.system;
        let grid = &self.plan.config.discretization.mu_grid;
        let (r1, r2) = self.exec.join(
            || lambda_diagnostics(&sys.d1, &sys.g1, &sys.b1, grid, None, 1e-8, self.exec),
            || lambda_diagnostics(&sys.d2, &sys.g2, &sys.b2, grid, None, 1e-8, self.exec),
        );
        let mut s = Section::default();
        match (r1, r2) {
            (Ok(a), Ok(b)) => {
                s.file("lambda1_curve.csv", |w| write_curve_csv(w, &a.curve));
                s.file("lambda2_curve.csv", |w| write_curve_csv(w, &b.curve));
                s.values.insert("eigen".into(), json!({ "species1": a, "species2": b }));
            }
            (Err(e), _) | (_, Err(e)) => return Section::failed(Failure::from_error(&e, Some(Task::Eigen))),
        }
        s
    }

    fn orbits(&self) -> Result<(Orbits, Section), Failure> {
        self.progress("orbit");
        let orbits = Orbits::compute(&self.plan.system, &OrbitOptions::default(), &self.speed_options())
            .map_err(|e| Failure::from_error(&e, Some(Task::Orbit)))?;
        let mut s = Section::default();
        let summary = |o: &PeriodicOrbit| {
            json!({
                "extinct": o.extinct,
                "residual": o.residual,
                "periods": o.periods,
                "min": o.min_value(),
                "max": o.max_value(),
            })
        };
        s.values.insert("orbits".into(), json!({ "u1": summary(&orbits.u1), "u2": summary(&orbits.u2) }));
        s.file("u1_star.csv", |w| orbits.u1.write_csv(w));
        s.file("u2_star.csv", |w| orbits.u2.write_csv(w));
        Ok((orbits, s))
    }

    /// Speed analysis when requested, else the hypothesis checks alone.
    fn speeds(&self, orbits: &Orbits) -> (Option<f64>, Section) {
        let sys = &self.plan.system;
        let opts = self.speed_options();
        let mut s = Section::default();
        if self.plan.has(Task::Speed) {
            self.progress("speed");
            let report = match analyze_with(sys, orbits, &opts) {
                Ok(r) => r,
                Err(e) => return (None, Section::failed(Failure::from_error(&e, Some(Task::Speed)))),
            };
            if report.c0_plus.is_some() {
                let mut mus: Vec<f64> = self.plan.config.discretization.mu_grid.iter().copied().filter(|&m| m > 0.0).collect();
                if let Some(mu0) = report.mu0 {
                    mus.push(mu0);
                }
                mus.sort_by(f64::total_cmp);
                mus.dedup();
                let curve = invasion_potential(sys, &orbits.u2)
                    .and_then(|m0| lambda_curve(&sys.d1, &sys.g1, &m0, &mus, &opts.eigen, self.exec));
                match curve {
                    Ok(c) => s.file("lambda0_curve.csv", |w| write_curve_csv(w, &c)),
                    Err(e) => return (None, Section::failed(Failure::from_error(&e, Some(Task::Speed)))),
                }
            }
            if let Value::Object(m) = to_value(&report) {
                s.values.extend(m);
            }
            (report.c0_plus, s)
        } else {
            self.progress("check");
            let h = match check_hypotheses_with(sys, orbits, &opts) {
                Ok(h) => h,
                Err(e) => return (None, Section::failed(Failure::from_error(&e, Some(Task::Check)))),
            };
            let certificates: Vec<(&str, &Certificate)> = vec![
                ("H1", &h.h1),
                ("H2", &h.h2),
                ("H3", &h.h3),
                ("H4", &h.h4),
                ("H5", &h.h5),
                ("M", &h.m),
                ("P1", &h.p1),
                ("P2", &h.p2),
                ("PropC", &h.prop_c),
            ];
            let map: Map<String, Value> = certificates.into_iter().map(|(k, c)| (k.to_string(), to_value(c))).collect();
            s.values.insert("certificates".into(), Value::Object(map));
            s.values.insert("c1_plus".into(), to_value(&h.c1_plus));
            s.values.insert("c2_minus".into(), to_value(&h.c2_minus));
            s.values.insert("lambda2_at_zero".into(), to_value(&h.lambda2_at_zero));
            (None, s)
        }
    }

    fn weinberger(&self, orbits: &Orbits, c0: Option<f64>) -> Section {
        self.progress("weinberger");
        let sys = &self.plan.system;
        let d = &self.plan.config.discretization;
        let ell = sys.ell();
        let [c_lo, c_hi] = d.c_range.unwrap_or([0.0, 4.0 * (sys.d1.max() * sys.b1.max().max(0.0)).sqrt()]);
        let half_width = d
            .recursion_half_width
            .unwrap_or_else(|| (24.0 * ell).max((4.2 * c_hi.abs().max(c_lo.abs()) * sys.omega()).ceil()));
        let cells = d
            .recursion_cells
            .unwrap_or_else(|| (2.0 * half_width * sys.nx() as f64 / ell).round() as usize)
            .max(200);
        let opts = RecursionOptions { cap: d.recursion_cap, bisection_steps: d.bisection_steps, exec: self.exec, ..RecursionOptions::default() };
        let fail = |e: Error| Section::failed(Failure::from_error(&e, Some(Task::Weinberger)));
        let rec = match Recursion::new(sys, &orbits.u1, &orbits.u2, half_width, cells) {
            Ok(r) => r.with_exec(self.exec),
            Err(e) => return fail(e),
        };
        let brackets = match rec.bracket_speeds(c_lo, c_hi, &opts) {
            Ok(b) => b,
            Err(e) => return fail(e),
        };
        let c_profile = brackets.cstar.c_lo;
        let limit = match rec.limit(c_profile, 1, &opts) {
            Ok(l) => l,
            Err(e) => return fail(e),
        };
        let mut s = Section::default();
        s.file("brackets.csv", |w| brackets.write_csv(w));
        s.file("profile.csv", |w| limit.profile.write_csv(w, limit.iterations));
        s.values.insert(
            "weinberger".into(),
            json!({
                "half_width": half_width,
                "cells": cells,
                "beta": rec.beta(),
                "c_range": [c_lo, c_hi],
                "bisection_steps": d.bisection_steps,
                "cstar": brackets.cstar,
                "cbar": brackets.cbar,
                "contains_c0": c0.map(|c| json!({ "cstar": brackets.cstar.contains(c), "cbar": brackets.cbar.contains(c) })),
                "classifications": brackets.trace,
                "profile": {
                    "c": c_profile,
                    "iterations": limit.iterations,
                    "cap_reached": limit.cap_reached,
                    "last_change": limit.last_change,
                    "monotone_defect": limit.monotone_defect,
                },
            }),
        );
        s
    }

    fn front(&self, orbits: &Orbits, c0: Option<f64>) -> Section {
        self.progress("front");
        let sys = &self.plan.system;
        let d = &self.plan.config.discretization;
        let half_width = d
            .half_width
            .unwrap_or_else(|| auto_half_width(sys, speed_estimate(sys, c0), d.periods));
        let opts = FrontOptions { threshold: d.threshold, exec: self.exec, ..FrontOptions::default() };
        let run = match run_front(sys, &orbits.u1, &orbits.u2, half_width, d.periods, &opts) {
            Ok(r) => r,
            Err(e) => return Section::failed(Failure::from_error(&e, Some(Task::Front))),
        };
        let verdict = spreading_verdict(&run, &orbits.u1, &orbits.u2, c0, d.discard);
        let mut s = Section::default();
        s.file("front_trace.csv", |w| run.trace.write_csv(w));
        s.file("front_final.csv", |w| run.last.write_csv(w));
        s.values.insert(
            "front".into(),
            json!({
                "half_width": half_width,
                "periods": d.periods,
                "aborted": run.trace.aborted,
                "verdict": verdict,
            }),
        );
        if let Some(why) = &run.trace.aborted {
            s.failure = Some(Failure::guard("DomainTooSmall", why.clone(), Task::Front));
        }
        s
    }

    /// Orbit, then check/speed, then the recursion and the simulation side
    /// by side.
    fn chain(&self) -> Section {
        let (orbits, mut s) = match self.orbits() {
            Ok(v) => v,
            Err(f) => return Section::failed(f),
        };
        let want_w = self.plan.has(Task::Weinberger);
        let want_f = self.plan.has(Task::Front);
        if !(self.plan.has(Task::Check) || self.plan.has(Task::Speed)) {
            return s;
        }
        let (c0, speed) = self.speeds(&orbits);
        let speed_failed = speed.failure.is_some();
        s.merge(speed);
        if speed_failed || !(want_w || want_f) {
            return s;
        }
        if orbits.u1.extinct {
            let task = if want_w { Task::Weinberger } else { Task::Front };
            s.merge(Section::failed(Failure::guard(
                "NotMonostable",
                "u1* is extinct, so there is no invasion front".into(),
                task,
            )));
            return s;
        }
        let (w, f) = self.exec.join(
            || want_w.then(|| self.weinberger(&orbits, c0)),
            || want_f.then(|| self.front(&orbits, c0)),
        );
        for part in [w, f].into_iter().flatten() {
            s.merge(part);
        }
        s
    }

    fn refine(&self) -> Section {
        self.progress("refine");
        let (nt, nx) = (self.plan.nt, self.plan.nx);
        let fine_sys = match SystemSpec::from_exprs(&self.plan.config.model, 2 * nt, 2 * nx) {
            Ok(s) => s,
            Err(e) => return Section::failed(Failure::from_error(&e, None)),
        };
        let opts = self.speed_options();
        let run = |sys: &SystemSpec| {
            let orbits = Orbits::compute(sys, &OrbitOptions::default(), &opts)?;
            analyze_with(sys, &orbits, &opts)
        };
        let (coarse, fine) = self.exec.join(|| run(&self.plan.system), || run(&fine_sys));
        let (coarse, fine) = match (coarse, fine) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return Section::failed(Failure::from_error(&e, None)),
        };
        let pick = |r: &SpeedReport| [("c0_plus", r.c0_plus), ("c1_plus", r.c1_plus), ("c2_minus", r.c2_minus)];
        let mut extrapolated = Map::new();
        let mut error = Map::new();
        for ((name, a), (_, b)) in pick(&coarse).into_iter().zip(pick(&fine)) {
            let (x, e) = match (a, b) {
                (Some(a), Some(b)) => {
                    let (x, e) = richardson(a, b);
                    (Some(x), Some(e))
                }
                _ => (None, None),
            };
            extrapolated.insert(name.into(), to_value(&x));
            error.insert(name.into(), to_value(&e));
        }
        let level = |r: &SpeedReport, nt: usize, nx: usize| {
            json!({ "nt": nt, "nx": nx, "c0_plus": r.c0_plus, "c1_plus": r.c1_plus, "c2_minus": r.c2_minus })
        };
        let mut s = Section::default();
        s.values.insert(
            "refine".into(),
            json!({
                "coarse": level(&coarse, nt, nx),
                "fine": level(&fine, 2 * nt, 2 * nx),
                "extrapolated": extrapolated,
                "error_estimate": error,
            }),
        );
        s
    }
}

fn base_report(status: i32, reason: Option<&Failure>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("status".into(), json!(status_of(status)));
    m.insert("exit_code".into(), json!(status));
    m.insert("reason".into(), to_value(&reason));
    for key in ["c0_plus", "mu0", "c1_plus", "c2_minus"] {
        m.insert(key.into(), Value::Null);
    }
    m.insert("certificates".into(), json!({}));
    m
}

fn write_outputs(dir: &Path, report: &Value, files: &[(String, Vec<u8>)]) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(e, dir))?;
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Failure::io(e, &path))?;
    }
    let path = dir.join("report.json");
    let file = File::create(&path).map_err(|e| Failure::io(e, &path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, report)
        .map_err(std::io::Error::from)
        .and_then(|_| writeln!(w))
        .and_then(|_| w.flush())
        .map_err(|e| Failure::io(e, &path))
}

/// Validates, runs every resolved task and writes `report.json` and the
/// task tables into the configured output directory.
pub fn run_scenario(config: &ScenarioConfig, opts: &RunOptions) -> Outcome {
    let plan = match validate(config) {
        Ok(p) => p,
        Err(f) => {
            let report = Value::Object(base_report(f.code, Some(&f)));
            let code = match write_outputs(&config.output, &report, &[]) {
                Ok(()) => f.code,
                Err(io) => io.code,
            };
            return Outcome { exit_code: code, report, files: vec!["report.json".into()] };
        }
    };
    let runner = Runner { plan: &plan, exec: opts.exec, quiet: opts.quiet };
    let needs_chain = plan.tasks.iter().any(|&t| t != Task::Eigen);
    let (eigen, chain) = opts.exec.join(
        || plan.has(Task::Eigen).then(|| runner.eigen()),
        || if needs_chain { runner.chain() } else { Section::default() },
    );
    let mut all = eigen.unwrap_or_default();
    all.merge(chain);
    if opts.refine && all.failure.is_none() && (plan.has(Task::Speed) || plan.has(Task::Check)) {
        all.merge(runner.refine());
    }

    let code = all.failure.as_ref().map_or(EXIT_OK, |f| f.code);
    let mut report = base_report(code, all.failure.as_ref());
    report.insert("tasks".into(), json!(plan.tasks.iter().map(|t| t.name()).collect::<Vec<_>>()));
    report.insert("grid".into(), json!({ "nt": plan.nt, "nx": plan.nx, "omega": plan.system.omega(), "ell": plan.system.ell() }));
    report.extend(all.values);
    let report = Value::Object(report);
    all.files.sort_by(|a, b| a.0.cmp(&b.0));
    let mut files: Vec<String> = all.files.iter().map(|(n, _)| n.clone()).collect();
    files.push("report.json".into());
    let code = match write_outputs(&config.output, &report, &all.files) {
        Ok(()) => code,
        Err(io) => {
            if !opts.quiet {
                eprintln!("speedlab: {}", io.message);
            }
            io.code
        }
    };
    Outcome { exit_code: code, report, files }
}

/// Names accepted by [`demo`].
pub const DEMOS: [&str; 4] = ["constants", "seasonal", "phenotypes", "fisher"];

/// Shipped scenarios:
/// `constants` is the constant-coefficient competition instance with a
/// linearly determinate speed `2 sqrt(1.7)`; `seasonal` replaces `b2` by
/// a seasonal rate with mean one; `phenotypes` is two phenotypes sharing a
/// spatially even, seasonally forced growth rate; `fisher` decouples the
/// species so the first one spreads at the Fisher speed 2.
pub fn demo(name: &str) -> Option<ScenarioConfig> {
    let mut d = Discretization::default();
    let (model, tasks) = match name {
        "constants" => {
            let mut m = ModelExprs::constants(1.0, 0.5, 2.0, 1.0, 1.0, 0.3, 1.2, 1.0);
            m.ell = 3.0;
            d.nt = 40;
            d.nx = 30;
            d.half_width = Some(120.0);
            (m, vec![Task::Eigen, Task::Speed, Task::Front])
        }
        "seasonal" => {
            let mut m = ModelExprs::constants(1.0, 0.5, 2.0, 1.0, 1.0, 0.3, 1.2, 1.0);
            m.b2 = "1 + 0.5*sin(2*pi*t)".into();
            d.nx = 8;
            (m, vec![Task::Speed])
        }
        "phenotypes" => {
            let a = "0.2 + cos(2*pi*x)*(1 + 0.5*sin(2*pi*t))";
            let mut m = ModelExprs::constants(0.05, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0);
            m.b1 = a.into();
            m.b2 = a.into();
            d.nt = 100;
            d.nx = 32;
            (m, vec![Task::Eigen, Task::Speed])
        }
        "fisher" => {
            let m = ModelExprs::constants(1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0);
            d.nx = 8;
            (m, vec![Task::Speed])
        }
        _ => return None,
    };
    Some(ScenarioConfig { model, discretization: d, tasks, output: PathBuf::from(format!("demo-{name}")) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dependencies_close() {
        assert_eq!(resolve_tasks(&[Task::Front]), vec![Task::Orbit, Task::Speed, Task::Front]);
        assert_eq!(resolve_tasks(&[Task::Eigen]), vec![Task::Eigen]);
        assert_eq!(
            resolve_tasks(&[Task::Weinberger, Task::Check]),
            vec![Task::Orbit, Task::Check, Task::Speed, Task::Weinberger]
        );
    }

    #[test]
    fn schema_rejects_unknown_keys() {
        let src = r#"{"model": {"d1":"1","d2":"1","b1":"1","b2":"1","a11":"1","a12":"0","a21":"0","a22":"1"},
                      "tasks": ["orbit"], "colour": 1}"#;
        let err = ScenarioConfig::from_json(src).unwrap_err();
        assert_eq!(err.code, EXIT_INVALID);
        assert_eq!(err.kind, "SchemaError");
    }

    #[test]
    fn defaults_fill_optional_fields() {
        let src = r#"{"model": {"d1":"1","d2":"1","b1":"1","b2":"1","a11":"1","a12":"0","a21":"0","a22":"1"},
                      "tasks": ["orbit"], "discretization": {"nx": 8, "dt": 0.02}}"#;
        let cfg = ScenarioConfig::from_json(src).unwrap();
        assert_eq!(cfg.model.g1, "0");
        assert_eq!(cfg.model.omega, 1.0);
        let plan = validate(&cfg).unwrap();
        assert_eq!((plan.nt, plan.nx), (50, 8));
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut cfg = demo("fisher").unwrap();
        cfg.model.d1 = "0".into();
        let f = validate(&cfg).unwrap_err();
        assert_eq!((f.code, f.kind.as_str()), (EXIT_INVALID, "NonEllipticError"));

        let mut cfg = demo("fisher").unwrap();
        cfg.model.b1 = "1 +".into();
        assert_eq!(validate(&cfg).unwrap_err().kind, "ParseError");

        let mut cfg = demo("fisher").unwrap();
        cfg.discretization.periods = 5;
        assert_eq!(validate(&cfg).unwrap_err().code, EXIT_INVALID);
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&Error::NoConvergence { iterations: 1, last_change: 1.0 }), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::Blowup { bound: 1.0, value: 2.0, t: 0.0 }), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::ShiftOutOfRange { shift: 1.0, half_width: 1.0 }), EXIT_GUARD);
        assert_eq!(exit_code(&Error::Invalid("x".into())), EXIT_INVALID);
    }

    #[test]
    fn demos_validate() {
        for name in DEMOS {
            let cfg = demo(name).unwrap();
            let round = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(round, cfg);
            validate(&cfg).unwrap();
        }
        assert!(demo("nope").is_none());
    }

    #[test]
    fn check_task_records_failed_hypothesis() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = demo("fisher").unwrap();
        cfg.model.b2 = "-1".into();
        cfg.tasks = vec![Task::Check];
        cfg.output = dir.path().join("out");
        let out = run_scenario(&cfg, &RunOptions { quiet: true, ..RunOptions::default() });
        assert_eq!(out.exit_code, EXIT_OK);
        assert_eq!(out.report["certificates"]["H1"]["verdict"], "fail");
        assert!(dir.path().join("out/report.json").exists());
        assert!(dir.path().join("out/u2_star.csv").exists());
    }

    #[test]
    fn guard_abort_when_front_leaves_domain() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = demo("fisher").unwrap();
        cfg.tasks = vec![Task::Front];
        cfg.discretization.half_width = Some(12.0);
        cfg.discretization.periods = 20;
        cfg.output = dir.path().to_path_buf();
        let out = run_scenario(&cfg, &RunOptions { quiet: true, ..RunOptions::default() });
        assert_eq!(out.exit_code, EXIT_GUARD);
        assert_eq!(out.report["status"], "guard-abort");
        assert_eq!(out.report["reason"]["kind"], "DomainTooSmall");
        assert!(dir.path().join("front_trace.csv").exists());
    }
}
