//! Runs configured scenarios and writes their artifacts.
//!
//! Each run directory receives a `manifest.json` listing every file with the
//! module that produced it, a content hash, and the resolved parameters.
//! Nothing time- or host-dependent is written, so identical configs give
//! identical directories.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::config::{Config, ConfigError, Point, Value};
use crate::diagnostics::{self, all_passed, EllipticSummary, Verdict};
use crate::elliptic::{self, ContinuationSchedule, EllipticProblem, SolveError, SolverOptions};
use crate::generators::{Generator, GeneratorError};
use crate::grid::{fmt_num, forward_diff, Field, GridError, PeriodicGrid};
use crate::nonlinearity::{NonlinearW, NonlinearityError};
use crate::orlicz::{self, OrliczError, OrliczPhi};
use crate::parabolic::{self, EvolutionProblem, EvolveError, EvolutionError, StepRecord, TraceSummary};
use crate::svg::{line_chart, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Elliptic,
    Evolve,
    Orlicz,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Elliptic => "elliptic",
            Mode::Evolve => "evolve",
            Mode::Orlicz => "orlicz",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Mode::Elliptic => &[
                "mode", "n", "seed", "svg", "w", "w_breakpoints", "w_slopes", "w_alpha", "f", "h", "gamma",
                "epsilon", "continuation", "gamma_schedule", "epsilon_schedule", "tol", "max_iter",
            ],
            Mode::Evolve => &[
                "mode", "n", "seed", "svg", "w", "w_breakpoints", "w_slopes", "w_alpha", "u0", "dt", "t_end",
                "gamma", "snapshot_stride", "mollify_eps", "tol_ext", "viscosity", "step_continuation",
                "stop_at_extinction",
            ],
            Mode::Orlicz => &["mode", "n", "seed", "svg", "field", "levels", "delta", "budget"],
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("line {line}: {source}")]
    Generator {
        line: usize,
        #[source]
        source: GeneratorError,
    },
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Orlicz(#[from] OrliczError),
    #[error("solver failed: {0}")]
    Solve(#[from] SolveError),
    #[error("evolution failed: {0}")]
    Evolve(#[from] Box<EvolveError>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Report { path: PathBuf, msg: String },
    #[error("config declares mode `{declared}` but `{requested}` was requested")]
    ModeMismatch { declared: String, requested: String },
    #[error("sweep point {index} ({overrides}): {source}")]
    Point {
        index: usize,
        overrides: String,
        #[source]
        source: Box<ScenarioError>,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Where and how to run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub workers: usize,
    /// Overrides the config's `seed` unless a sweep sets it.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointOutcome {
    pub index: usize,
    pub dir: PathBuf,
    pub overrides: BTreeMap<String, String>,
    pub verdicts: Vec<Verdict>,
}

impl PointOutcome {
    pub fn passed(&self) -> bool {
        all_passed(&self.verdicts)
    }
}

#[derive(Debug)]
pub struct RunSummary {
    pub mode: Mode,
    pub points: Vec<Result<PointOutcome, ScenarioError>>,
}

impl RunSummary {
    pub fn errors(&self) -> impl Iterator<Item = &ScenarioError> {
        self.points.iter().filter_map(|p| p.as_ref().err())
    }
}

/// 64-bit FNV-1a, for manifest content hashes.
fn fnv1a(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestFile {
    pub path: String,
    pub module: String,
    pub bytes: usize,
    pub fnv1a: String,
}

struct Writer {
    dir: PathBuf,
    files: Vec<ManifestFile>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, ScenarioError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, rel: &str, module: &str, contents: &str) -> Result<(), ScenarioError> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, contents).map_err(io_err(&path))?;
        self.files.push(ManifestFile {
            path: rel.to_string(),
            module: module.to_string(),
            bytes: contents.len(),
            fnv1a: fnv1a(contents.as_bytes()),
        });
        Ok(())
    }

    fn finish(mut self, mode: Mode, params: &BTreeMap<String, String>) -> Result<(), ScenarioError> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = json!({
            "mode": mode.name(),
            "version": env!("CARGO_PKG_VERSION"),
            "params": params,
            "files": self.files,
        });
        let text = serde_json::to_string_pretty(&manifest).expect("serializable") + "\n";
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(io_err(&path))
    }
}

fn nonlinearity(cfg: &Config) -> Result<NonlinearW, ScenarioError> {
    let name = cfg.str_opt("w")?.unwrap_or_else(|| "abs".to_string());
    let w = if name == "custom" {
        let b = cfg
            .num_list_opt("w_breakpoints")?
            .ok_or_else(|| ConfigError::Missing("w_breakpoints".into()))?;
        let s = cfg
            .num_list_opt("w_slopes")?
            .ok_or_else(|| ConfigError::Missing("w_slopes".into()))?;
        if b.len() != s.len() {
            return Err(ConfigError::Type {
                line: cfg.line_of("w_slopes"),
                key: "w_slopes".into(),
                msg: format!("{} slopes for {} breakpoints", s.len(), b.len()),
            }
            .into());
        }
        NonlinearW::custom(b.into_iter().zip(s).collect())?
    } else {
        NonlinearW::by_name(&name).map_err(|e| ConfigError::Type {
            line: cfg.line_of("w"),
            key: "w".into(),
            msg: e.to_string(),
        })?
    };
    Ok(match cfg.f64_opt("w_alpha")? {
        Some(a) => w.with_alpha(a)?,
        None => w,
    })
}

fn sample(cfg: &Config, key: &str, grid: PeriodicGrid, seed: u64) -> Result<(Field, Generator), ScenarioError> {
    let call = cfg.call_req(key)?;
    let line = cfg.line_of(key);
    let gen = Generator::parse(&call).map_err(|source| ScenarioError::Generator { line, source })?;
    let field = gen
        .sample(grid, seed)
        .map_err(|source| ScenarioError::Generator { line, source })?;
    Ok((field, gen))
}

fn grid_of(cfg: &Config) -> Result<PeriodicGrid, ScenarioError> {
    let n = cfg.usize_opt("n")?.unwrap_or(256);
    PeriodicGrid::new(n).map_err(|e| {
        ConfigError::Type {
            line: cfg.line_of("n"),
            key: "n".into(),
            msg: e.to_string(),
        }
        .into()
    })
}

fn field_rows(u: &Field, xi: &[f64], p: &[f64]) -> String {
    let g = u.grid();
    let mut out = String::from("x,u,xi,p\n");
    for (i, v) in u.values().iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_num(g.cell(i)),
            fmt_num(*v),
            fmt_num(xi[i]),
            fmt_num(p[i])
        ));
    }
    out
}

fn json_pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn profile(u: &Field) -> Vec<(f64, f64)> {
    let g = u.grid();
    u.values().iter().enumerate().map(|(i, &v)| (g.cell(i), v)).collect()
}

fn run_elliptic(cfg: &Config, seed: u64, w: &mut Writer) -> Result<Vec<Verdict>, ScenarioError> {
    let grid = grid_of(cfg)?;
    let (f, gen) = sample(cfg, "f", grid, seed)?;
    let wf = nonlinearity(cfg)?;
    let h = cfg.f64_req("h")?;
    let gamma = cfg.f64_or("gamma", elliptic::GAMMA_MIN)?;
    let epsilon = cfg.f64_or("epsilon", elliptic::GAMMA_MIN)?;
    let mut opts = SolverOptions::for_grid(grid.n());
    if let Some(t) = cfg.f64_opt("tol")? {
        opts.tol = t;
    }
    if let Some(m) = cfg.usize_opt("max_iter")? {
        opts.max_iter = m;
    }
    let problem = EllipticProblem::new(f.clone(), h, wf.clone(), gamma, epsilon)?;
    let (solution, trace) = if cfg.bool_or("continuation", true)? {
        let schedule = match (cfg.num_list_opt("gamma_schedule")?, cfg.num_list_opt("epsilon_schedule")?) {
            (None, None) => ContinuationSchedule::down_to(gamma, epsilon),
            (g, e) => {
                let g = g.unwrap_or_else(|| vec![gamma; e.as_ref().map_or(1, Vec::len)]);
                let e = e.unwrap_or_else(|| vec![epsilon; g.len()]);
                ContinuationSchedule {
                    gammas: g,
                    epsilons: e,
                }
            }
        };
        let (sol, tr) = elliptic::continue_epsilon(&problem, &schedule, &opts).map_err(|e| e.source)?;
        (sol, Some(tr))
    } else {
        (elliptic::minimize(&problem, &f, &opts)?, None)
    };
    // The reported problem is the final stage.
    let last = EllipticProblem {
        gamma: trace.as_ref().and_then(|t| t.stages.last()).map_or(gamma, |s| s.gamma),
        epsilon: trace.as_ref().and_then(|t| t.stages.last()).map_or(epsilon, |s| s.epsilon),
        ..problem
    };
    let summary = EllipticSummary::new(&last, &solution, &opts, trace);
    let verdicts = diagnostics::elliptic_suite(&summary);
    let p = forward_diff(&solution.u);
    w.write(
        "solution.csv",
        "elliptic",
        &field_rows(&solution.u, solution.xi.values(), p.values()),
    )?;
    w.write(
        "report.json",
        "diagnostics",
        &json_pretty(&json!({
            "kind": "elliptic",
            "data": gen.to_string(),
            "report": solution.report,
            "summary": summary,
            "verdicts": verdicts,
        })),
    )?;
    if cfg.bool_or("svg", false)? {
        let chart = line_chart(
            &format!("{} resolvent, h = {h}", wf.name()),
            "x",
            &[Series::new("f", profile(&f)), Series::new("u", profile(&solution.u))],
        );
        w.write("solution.svg", "svg", &chart)?;
    }
    Ok(verdicts)
}

const TRACE_HEADER: &str = "t,energy,modulus_G,mean,dist_to_mean,dissipation";

fn trace_csv(records: &[StepRecord]) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_num(r.t),
            fmt_num(r.energy),
            fmt_num(r.modulus_g),
            fmt_num(r.mean),
            fmt_num(r.dist_to_mean),
            fmt_num(r.dissipation)
        ));
    }
    out
}

/// Overwrites the CSV columns of `summary.records` with the values in
/// `text`, recomputing per-step dissipation from the cumulative column.
pub fn apply_trace_csv(summary: &mut TraceSummary, text: &str, path: &Path) -> Result<(), ScenarioError> {
    let bad = |msg: String| ScenarioError::Report {
        path: path.to_path_buf(),
        msg,
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(TRACE_HEADER) {
        return Err(bad(format!("expected header `{TRACE_HEADER}`")));
    }
    let rows: Vec<&str> = lines.collect();
    if rows.len() != summary.records.len() {
        return Err(bad(format!(
            "{} rows but the report holds {} records",
            rows.len(),
            summary.records.len()
        )));
    }
    let mut prev_d = 0.0;
    for (k, row) in rows.iter().enumerate() {
        let vals: Vec<f64> = row
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(format!("row {}: {e}", k + 2)))?;
        if vals.len() != 6 {
            return Err(bad(format!("row {}: expected 6 columns", k + 2)));
        }
        let r = &mut summary.records[k];
        r.t = vals[0];
        r.energy = vals[1];
        r.modulus_g = vals[2];
        r.mean = vals[3];
        r.dist_to_mean = vals[4];
        r.dissipation = vals[5];
        r.step_dissipation = if k == 0 { 0.0 } else { vals[5] - prev_d };
        prev_d = vals[5];
    }
    Ok(())
}

fn run_evolve(cfg: &Config, seed: u64, w: &mut Writer) -> Result<Vec<Verdict>, ScenarioError> {
    let grid = grid_of(cfg)?;
    let (u0, gen) = sample(cfg, "u0", grid, seed)?;
    let wf = nonlinearity(cfg)?;
    let mut problem = EvolutionProblem::new(
        u0,
        wf.clone(),
        cfg.f64_or("gamma", parabolic::DEFAULT_GAMMA)?,
        cfg.f64_req("dt")?,
        cfg.f64_req("t_end")?,
    )?
    .with_mollify_eps(cfg.f64_or("mollify_eps", 0.0)?)?
    .with_viscosity(cfg.f64_or("viscosity", 0.0)?)?
    .with_stop_at_extinction(cfg.bool_or("stop_at_extinction", true)?)
    .with_step_continuation(cfg.bool_or("step_continuation", false)?);
    if let Some(t) = cfg.f64_opt("tol_ext")? {
        problem = problem.with_tol_ext(t)?;
    }
    let stride = cfg.usize_opt("snapshot_stride")?.unwrap_or(10);
    let trace = parabolic::evolve(&problem, stride).map_err(Box::new)?;
    let s = &trace.summary;
    let verdicts = diagnostics::evolution_suite(s);
    let extinction = parabolic::extinction_report(s, &wf).ok();

    w.write("trace.csv", "parabolic", &trace_csv(&s.records))?;
    for snap in &trace.snapshots {
        w.write(
            &format!("snapshots/u_{:06}.csv", snap.step),
            "parabolic",
            &snap.u.to_csv(),
        )?;
    }
    w.write(
        "report.json",
        "diagnostics",
        &json_pretty(&json!({
            "kind": "evolve",
            "data": gen.to_string(),
            "newton_iterations": s.records.iter().map(|r| r.newton_iters).sum::<usize>(),
            "extinction": extinction,
            "summary": s,
            "verdicts": verdicts,
        })),
    )?;
    if cfg.bool_or("svg", false)? {
        let waterfall: Vec<Series> = trace
            .snapshots
            .iter()
            .map(|sn| Series::new(format!("t = {:.4}", sn.t), profile(&sn.u)))
            .collect();
        w.write(
            "evolution.svg",
            "svg",
            &line_chart(&format!("{} flow", wf.name()), "x", &waterfall),
        )?;
        let e0 = s.initial().energy.abs().max(f64::MIN_POSITIVE);
        let g0 = s.initial().modulus_g.abs().max(f64::MIN_POSITIVE);
        let curves = vec![
            Series::new("E / E(0)", s.records.iter().map(|r| (r.t, r.energy / e0)).collect()),
            Series::new("G / G(0)", s.records.iter().map(|r| (r.t, r.modulus_g / g0)).collect()),
        ];
        w.write("curves.svg", "svg", &line_chart("energy and modulus", "t", &curves))?;
    }
    Ok(verdicts)
}

fn orlicz_budget(cfg: &Config) -> Result<Vec<f64>, ScenarioError> {
    Ok(match cfg.num_list_opt("budget")? {
        Some(b) => b,
        None => orlicz::default_budget(cfg.usize_opt("levels")?.unwrap_or(orlicz::DEFAULT_LEVELS)),
    })
}

fn run_orlicz(cfg: &Config, seed: u64, w: &mut Writer) -> Result<Vec<Verdict>, ScenarioError> {
    let grid = grid_of(cfg)?;
    let (field, gen) = sample(cfg, "field", grid, seed)?;
    let budget = orlicz_budget(cfg)?;
    let delta = cfg.f64_or("delta", orlicz::DEFAULT_DELTA)?;
    let g = forward_diff(&field);
    let phi = orlicz::build_phi_from_samples(g.values(), grid.dx(), &budget, delta)?;
    let verdicts = diagnostics::orlicz_suite(&phi, g.values(), grid.dx(), &budget);
    w.write("phi.json", "orlicz", &(phi.to_json() + "\n"))?;
    w.write("field.csv", "generators", &field.to_csv())?;
    w.write(
        "report.json",
        "diagnostics",
        &json_pretty(&json!({
            "kind": "orlicz",
            "data": gen.to_string(),
            "budget": budget,
            "modulus_g": orlicz::modulus_g(&phi, &g),
            "c0": phi.c0(),
            "c1": phi.c1(),
            "verdicts": verdicts,
        })),
    )?;
    if cfg.bool_or("svg", false)? {
        let top = phi.levels().last().copied().unwrap_or(1.0) * 1.2 + 1.0;
        let pts = |f: &dyn Fn(f64) -> f64| -> Vec<(f64, f64)> {
            (0..=400).map(|i| {
                let p = -top + 2.0 * top * i as f64 / 400.0;
                (p, f(p))
            })
            .collect()
        };
        let chart = line_chart(
            "Orlicz modulus",
            "p",
            &[
                Series::new("Phi", pts(&|p| phi.eval(p))),
                Series::new("C0 Phi~ + C1", pts(&|p| phi.comparison_bound(p))),
            ],
        );
        w.write("phi.svg", "svg", &chart)?;
    }
    Ok(verdicts)
}

fn run_point(mode: Mode, point: &Point, dir: &Path, seed: Option<u64>) -> Result<PointOutcome, ScenarioError> {
    let cfg = &point.config;
    let swept_seed = point.overrides.iter().any(|(k, _)| k == "seed");
    let seed = match (swept_seed, seed) {
        (false, Some(s)) => s,
        _ => cfg.u64_opt("seed")?.unwrap_or(0),
    };
    let mut writer = Writer::new(dir)?;
    let verdicts = match mode {
        Mode::Elliptic => run_elliptic(cfg, seed, &mut writer)?,
        Mode::Evolve => run_evolve(cfg, seed, &mut writer)?,
        Mode::Orlicz => run_orlicz(cfg, seed, &mut writer)?,
    };
    let mut params = cfg.rendered();
    params.insert("seed".into(), seed.to_string());
    writer.finish(mode, &params)?;
    Ok(PointOutcome {
        index: point.index,
        dir: dir.to_path_buf(),
        overrides: point
            .overrides
            .iter()
            .map(|(k, v)| (k.clone(), v.to_string()))
            .collect(),
        verdicts,
    })
}

fn render_overrides(o: &[(String, Value)]) -> String {
    o.iter().map(|(k, v)| format!("{k} = {v}")).collect::<Vec<_>>().join(", ")
}

/// Parses `text`, expands sweeps, and runs every point.
pub fn run(mode: Mode, text: &str, opts: &RunOptions) -> Result<RunSummary, ScenarioError> {
    let cfg = Config::parse(text)?;
    cfg.check_keys(mode.name(), mode.keys())?;
    if let Some(declared) = cfg.str_opt("mode")? {
        if declared != mode.name() {
            return Err(ScenarioError::ModeMismatch {
                declared,
                requested: mode.name().into(),
            });
        }
    }
    let points = cfg.expand();
    if points.len() == 1 && cfg.sweeps.is_empty() {
        let outcome = run_point(mode, &points[0], &opts.out, opts.seed);
        return Ok(RunSummary {
            mode,
            points: vec![outcome],
        });
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .expect("thread pool");
    let outcomes: Vec<Result<PointOutcome, ScenarioError>> = pool.install(|| {
        points
            .par_iter()
            .map(|p| {
                run_point(mode, p, &opts.out.join(p.dir_name()), opts.seed).map_err(|e| ScenarioError::Point {
                    index: p.index,
                    overrides: render_overrides(&p.overrides),
                    source: Box::new(e),
                })
            })
            .collect()
    });

    let index: Vec<_> = points
        .iter()
        .map(|p| {
            json!({
                "dir": p.dir_name(),
                "overrides": p.overrides.iter().map(|(k, v)| (k.clone(), v.to_string())).collect::<BTreeMap<_, _>>(),
            })
        })
        .collect();
    let manifest = json!({
        "mode": mode.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "params": cfg.rendered(),
        "sweep": cfg.sweeps.iter().map(|(k, e)| (k.clone(), e.value.to_string())).collect::<BTreeMap<_, _>>(),
        "points": index,
    });
    fs::create_dir_all(&opts.out).map_err(io_err(&opts.out))?;
    let path = opts.out.join("manifest.json");
    fs::write(&path, json_pretty(&manifest)).map_err(io_err(&path))?;
    Ok(RunSummary { mode, points: outcomes })
}

#[derive(Debug, Deserialize)]
struct StoredReport {
    kind: String,
    #[serde(default)]
    summary: Option<serde_json::Value>,
    #[serde(default)]
    budget: Option<Vec<f64>>,
}

/// Verdicts for one stored report.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutcome {
    pub report: PathBuf,
    pub verdicts: Vec<Verdict>,
}

fn verify_one(report: &Path) -> Result<VerifyOutcome, ScenarioError> {
    let text = fs::read_to_string(report).map_err(io_err(report))?;
    let bad = |msg: String| ScenarioError::Report {
        path: report.to_path_buf(),
        msg,
    };
    let stored: StoredReport = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let dir = report.parent().unwrap_or(Path::new("."));
    let verdicts = match stored.kind.as_str() {
        "elliptic" => {
            let s: EllipticSummary = serde_json::from_value(stored.summary.ok_or_else(|| bad("no summary".into()))?)
                .map_err(|e| bad(e.to_string()))?;
            diagnostics::elliptic_suite(&s)
        }
        "evolve" => {
            let mut s: TraceSummary =
                serde_json::from_value(stored.summary.ok_or_else(|| bad("no summary".into()))?)
                    .map_err(|e| bad(e.to_string()))?;
            let csv = dir.join("trace.csv");
            if csv.exists() {
                let t = fs::read_to_string(&csv).map_err(io_err(&csv))?;
                apply_trace_csv(&mut s, &t, &csv)?;
            }
            diagnostics::evolution_suite(&s)
        }
        "orlicz" => {
            let phi_path = dir.join("phi.json");
            let field_path = dir.join("field.csv");
            let phi = OrliczPhi::from_json(&fs::read_to_string(&phi_path).map_err(io_err(&phi_path))?)?;
            let field = Field::from_csv(&fs::read_to_string(&field_path).map_err(io_err(&field_path))?)?;
            let budget = stored
                .budget
                .unwrap_or_else(|| orlicz::default_budget(phi.levels().len()));
            let g = forward_diff(&field);
            diagnostics::orlicz_suite(&phi, g.values(), field.grid().dx(), &budget)
        }
        other => return Err(bad(format!("unknown report kind `{other}`"))),
    };
    Ok(VerifyOutcome {
        report: report.to_path_buf(),
        verdicts,
    })
}

/// Re-checks a `report.json`, or every report below a run directory
/// (including sweep points), in sorted path order.
pub fn verify(path: &Path) -> Result<Vec<VerifyOutcome>, ScenarioError> {
    if path.is_file() {
        return Ok(vec![verify_one(path)?]);
    }
    let mut reports = Vec::new();
    let direct = path.join("report.json");
    if direct.is_file() {
        reports.push(direct);
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(path)
        .map_err(io_err(path))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join("report.json").is_file())
        .collect();
    subdirs.sort();
    reports.extend(subdirs.into_iter().map(|d| d.join("report.json")));
    if reports.is_empty() {
        return Err(ScenarioError::Report {
            path: path.to_path_buf(),
            msg: "no report.json found".into(),
        });
    }
    reports.iter().map(|r| verify_one(r)).collect()
}
