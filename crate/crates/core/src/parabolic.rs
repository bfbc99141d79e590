//! Implicit Euler for `u_t = (W^γ_p(u_x))_x`, each step realized as the
//! exact minimization of `E^γ(v) + ‖v - u_k‖²/(2dt)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elliptic::{newton_solve, SolveError, SolverOptions};
use crate::grid::{forward_diff_slice, DualField, Field, GridError};
use crate::kernel;
use crate::nonlinearity::{energy_of_gradient, NonlinearW, RegularizedW};
use crate::orlicz::{self, OrliczPhi};

/// Poincaré constant on the unit torus: `‖u - ū‖_{L²} ≤ ½ ∫|u_x|`.
pub const POINCARE_CONSTANT: f64 = 0.5;

/// Default smoothing radius held during evolution.
pub const DEFAULT_GAMMA: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("invalid evolution problem: {0}")]
    Invalid(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// A failed step, with everything computed before it.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("step {step} at t = {time:e} failed: {source}")]
pub struct EvolveError {
    pub step: usize,
    pub time: f64,
    #[source]
    pub source: SolveError,
    pub partial: Box<TraceSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionProblem {
    pub u0: Field,
    pub w: NonlinearW,
    pub gamma: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Radius of the initial-data mollifier; 0 disables it.
    pub mollify_eps: f64,
    /// Extra `(ν/2)p²` in the integrand. Off by default: it shifts the flux
    /// by `ν·p` at steep ramps.
    pub viscosity: f64,
    /// Extinction threshold on `‖u - ū‖_{L²}`; `None` means `1e-8·‖u_0‖`.
    pub tol_ext: Option<f64>,
    pub stop_at_extinction: bool,
    /// Re-run a short γ continuation (from `1e-2` down) inside every step.
    pub step_continuation: bool,
}

impl EvolutionProblem {
    pub fn new(u0: Field, w: NonlinearW, gamma: f64, dt: f64, t_end: f64) -> Result<Self, EvolutionError> {
        let p = Self {
            u0,
            w,
            gamma,
            dt,
            t_end,
            mollify_eps: 0.0,
            viscosity: 0.0,
            tol_ext: None,
            stop_at_extinction: true,
            step_continuation: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), EvolutionError> {
        let bad = |m: String| Err(EvolutionError::Invalid(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return bad(format!("t_end must be at least dt, got {}", self.t_end));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.mollify_eps >= 0.0 && self.mollify_eps.is_finite()) {
            return bad(format!("mollify_eps must be nonnegative, got {}", self.mollify_eps));
        }
        if !(self.viscosity >= 0.0 && self.viscosity.is_finite()) {
            return bad(format!("viscosity must be nonnegative, got {}", self.viscosity));
        }
        if let Some(t) = self.tol_ext {
            if !(t >= 0.0 && t.is_finite()) {
                return bad(format!("tol_ext must be nonnegative, got {t}"));
            }
        }
        Ok(())
    }

    pub fn with_mollify_eps(mut self, eps: f64) -> Result<Self, EvolutionError> {
        self.mollify_eps = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_viscosity(mut self, viscosity: f64) -> Result<Self, EvolutionError> {
        self.viscosity = viscosity;
        self.validate()?;
        Ok(self)
    }

    pub fn with_tol_ext(mut self, tol: f64) -> Result<Self, EvolutionError> {
        self.tol_ext = Some(tol);
        self.validate()?;
        Ok(self)
    }

    pub fn with_stop_at_extinction(mut self, stop: bool) -> Self {
        self.stop_at_extinction = stop;
        self
    }

    pub fn with_step_continuation(mut self, on: bool) -> Self {
        self.step_continuation = on;
        self
    }

    pub fn integrand(&self) -> Result<RegularizedW, SolveError> {
        Ok(RegularizedW::new(self.w.clone(), self.gamma, self.viscosity)?)
    }

    pub fn n_steps(&self) -> usize {
        let r = self.t_end / self.dt;
        let k = r.round();
        if (r - k).abs() <= 1e-9 * r.max(1.0) {
            k as usize
        } else {
            r.ceil() as usize
        }
    }

    pub fn extinction_tolerance(&self) -> f64 {
        self.tol_ext.unwrap_or(1e-8 * self.u0.l2_norm())
    }

    fn gamma_schedule(&self) -> Vec<f64> {
        let mut gs = Vec::new();
        if self.step_continuation {
            let mut g = 1e-2;
            while g > self.gamma * (1.0 + 1e-12) {
                gs.push(g);
                g *= 0.1;
            }
        }
        gs.push(self.gamma);
        gs
    }
}

/// Periodic convolution with the kernel scaled to radius `eps`, using
/// normalized discrete weights. Radii below one cell leave `u0` unchanged.
pub fn mollify_initial(u0: &Field, eps: f64) -> Field {
    let dx = u0.grid().dx();
    let n = u0.len();
    if !(eps >= dx) {
        return u0.clone();
    }
    let reach = ((eps / dx).floor() as usize).min(n / 2);
    let mut weights: Vec<f64> = (0..=reach).map(|j| kernel::density(j as f64 * dx / eps)).collect();
    let total = weights[0] + 2.0 * weights[1..].iter().sum::<f64>();
    for w in &mut weights {
        *w /= total;
    }
    let v = u0.values();
    let out = (0..n)
        .map(|i| {
            let mut acc = weights[0] * v[i];
            for (j, w) in weights.iter().enumerate().skip(1) {
                acc += w * (v[(i + j) % n] + v[(i + n - j % n) % n]);
            }
            acc
        })
        .collect();
    Field::from_raw(u0.grid(), out)
}

/// Result of one implicit Euler step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub u: Field,
    pub xi: DualField,
    /// `(u_{k+1} - u_k)/dt`.
    pub u_t: Field,
    pub newton_iters: usize,
    /// `E^γ(u_k)`.
    pub energy_before: f64,
    /// `E^γ(u_{k+1})`.
    pub energy_after: f64,
    /// `dt·‖u_t‖²`.
    pub dissipation: f64,
}

impl StepOutcome {
    /// `dt‖u_t‖² + E^γ(u_{k+1}) - E^γ(u_k)`; nonpositive for an exact step.
    pub fn energy_excess(&self) -> f64 {
        self.dissipation + self.energy_after - self.energy_before
    }
}

fn step_options() -> SolverOptions {
    // Tolerance far below what is needed; the Newton decrement ends the solve
    // once rounding dominates.
    SolverOptions {
        tol: 1e-15,
        max_iter: 400,
        ..SolverOptions::default()
    }
}

/// One implicit Euler step from `state`.
pub fn step(state: &Field, problem: &EvolutionProblem) -> Result<StepOutcome, SolveError> {
    problem.validate().map_err(|e| SolveError::InvalidProblem(e.to_string()))?;
    let w = problem.integrand()?;
    step_with(state, problem, &w)
}

fn step_with(state: &Field, problem: &EvolutionProblem, w: &RegularizedW) -> Result<StepOutcome, SolveError> {
    let grid = state.grid();
    let dx = grid.dx();
    let f = state.values();
    let opts = step_options();
    let energy_before = energy_of_gradient(w, &forward_diff_slice(f, dx), dx);

    let solve_chain = |gammas: &[f64]| -> Result<_, SolveError> {
        let mut u = f.to_vec();
        let mut out = None;
        for &g in gammas {
            let wg = RegularizedW::new(problem.w.clone(), g, problem.viscosity)?;
            let o = newton_solve(f, problem.dt, &wg, u, &opts)?;
            u = o.u.clone();
            out = Some(o);
        }
        Ok(out.expect("nonempty schedule"))
    };
    let schedule = problem.gamma_schedule();
    let out = match solve_chain(&schedule) {
        Ok(o) => o,
        Err(SolveError::NonConvergence { .. }) if !problem.step_continuation => {
            log::debug!("step fell back to gamma continuation");
            let fallback = problem.clone().with_step_continuation(true).gamma_schedule();
            solve_chain(&fallback)?
        }
        Err(e) => return Err(e),
    };

    let energy_after = energy_of_gradient(w, &out.p, dx);
    let u_t: Vec<f64> = out.u.iter().zip(f).map(|(a, b)| (a - b) / problem.dt).collect();
    let dissipation = problem.dt * dx * u_t.iter().map(|v| v * v).sum::<f64>();
    Ok(StepOutcome {
        u: Field::from_raw(grid, out.u),
        xi: DualField::from_raw(grid, out.xi),
        u_t: Field::from_raw(grid, u_t),
        newton_iters: out.iterations,
        energy_before,
        energy_after,
        dissipation,
    })
}

/// Diagnostics recorded after every accepted step (and once for the initial
/// state, with `step = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    /// `E^γ(u_k)`, the energy the step minimizes.
    pub energy: f64,
    /// Unsmoothed `E(u_k)`.
    pub energy_exact: f64,
    pub modulus_g: f64,
    pub mean: f64,
    pub dist_to_mean: f64,
    /// Cumulative `Σ dt‖u_t‖²`.
    pub dissipation: f64,
    /// `dt‖u_t‖²` for this step alone.
    pub step_dissipation: f64,
    pub xi_bound: f64,
    /// `max_i |p_i|`.
    pub max_slope: f64,
    pub inclusion_gap: f64,
    /// `max_i dx·Φ(p_i)`.
    pub max_cell_phi: f64,
    pub newton_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub n: usize,
    pub w: NonlinearW,
    pub gamma: f64,
    pub dt: f64,
    pub t_end: f64,
    pub mollify_eps: f64,
    pub viscosity: f64,
    pub tol_ext: f64,
    /// `‖u_0‖` and `‖u_0 - ū‖` after mollification.
    pub u0_l2: f64,
    pub u0_dist_to_mean: f64,
    /// Modulus built from the (mollified) initial gradient.
    pub phi: OrliczPhi,
    pub records: Vec<StepRecord>,
    pub extinction_time: Option<f64>,
}

impl TraceSummary {
    pub fn initial(&self) -> &StepRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &StepRecord {
        self.records.last().expect("trace has an initial record")
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    /// Least-squares slope of `-ln‖u - ū‖` against `t` over records whose
    /// time is at least `from_t` and whose distance is above `floor`.
    pub fn fitted_decay_rate(&self, from_t: f64, floor: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .records
            .iter()
            .filter(|r| r.t >= from_t && r.dist_to_mean > floor)
            .map(|r| (r.t, r.dist_to_mean.ln()))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let m = pts.len() as f64;
        let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
        let (mt, my) = (st / m, sy / m);
        let (num, den) = pts
            .iter()
            .fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt) * (t - mt)));
        Some(-num / den)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub u: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionTrace {
    pub summary: TraceSummary,
    /// Every `snapshot_stride`-th state, plus the first and last.
    pub snapshots: Vec<Snapshot>,
    pub initial_state: Field,
    pub final_state: Field,
}

#[allow(clippy::too_many_arguments)]
fn record_for(
    step: usize,
    t: f64,
    u: &Field,
    xi: &[f64],
    w: &RegularizedW,
    phi: &OrliczPhi,
    dissipation: f64,
    step_dissipation: f64,
    newton_iters: usize,
) -> StepRecord {
    let dx = u.grid().dx();
    let p = forward_diff_slice(u.values(), dx);
    let base = w.base();
    let inclusion_gap = p
        .iter()
        .zip(xi)
        .map(|(&q, &x)| base.graph_distance(q, x))
        .fold(0.0, f64::max);
    let max_cell_phi = p.iter().map(|&q| dx * phi.eval(q)).fold(0.0, f64::max);
    StepRecord {
        step,
        t,
        energy: energy_of_gradient(w, &p, dx),
        energy_exact: energy_of_gradient(base, &p, dx),
        modulus_g: orlicz::modulus_of_samples(phi, &p, dx),
        mean: u.mean(),
        dist_to_mean: u.l2_distance_to_mean(),
        dissipation,
        step_dissipation,
        xi_bound: xi.iter().fold(0.0, |m, v| m.max(v.abs())),
        max_slope: p.iter().fold(0.0, |m, v| m.max(v.abs())),
        inclusion_gap,
        max_cell_phi,
        newton_iters,
    }
}

/// Runs implicit Euler to `t_end`, or until `‖u - ū‖ ≤ tol_ext` when
/// `stop_at_extinction` is set. `snapshot_stride = 0` keeps only the first
/// and last states.
pub fn evolve(problem: &EvolutionProblem, snapshot_stride: usize) -> Result<EvolutionTrace, EvolveError> {
    let invalid = |source: SolveError| EvolveError {
        step: 0,
        time: 0.0,
        source,
        partial: Box::new(TraceSummary {
            n: problem.u0.len(),
            w: problem.w.clone(),
            gamma: problem.gamma,
            dt: problem.dt,
            t_end: problem.t_end,
            mollify_eps: problem.mollify_eps,
            viscosity: problem.viscosity,
            tol_ext: problem.extinction_tolerance(),
            u0_l2: problem.u0.l2_norm(),
            u0_dist_to_mean: problem.u0.l2_distance_to_mean(),
            phi: OrliczPhi::from_parts(vec![0.0], vec![1.0], orlicz::DEFAULT_DELTA).expect("valid"),
            records: Vec::new(),
            extinction_time: None,
        }),
    };
    problem
        .validate()
        .map_err(|e| invalid(SolveError::InvalidProblem(e.to_string())))?;
    let w = problem.integrand().map_err(invalid)?;
    let u0 = mollify_initial(&problem.u0, problem.mollify_eps);
    let dx = u0.grid().dx();
    let g0 = DualField::from_raw(u0.grid(), forward_diff_slice(u0.values(), dx));
    let phi = orlicz::build_phi(&g0, &orlicz::default_budget(orlicz::DEFAULT_LEVELS))
        .map_err(|e| invalid(e.into()))?;
    let tol_ext = problem.extinction_tolerance();
    let xi0: Vec<f64> = g0.values().iter().map(|&q| w.d1(q)).collect();

    let mut summary = TraceSummary {
        n: u0.len(),
        w: problem.w.clone(),
        gamma: problem.gamma,
        dt: problem.dt,
        t_end: problem.t_end,
        mollify_eps: problem.mollify_eps,
        viscosity: problem.viscosity,
        tol_ext,
        u0_l2: u0.l2_norm(),
        u0_dist_to_mean: u0.l2_distance_to_mean(),
        phi: phi.clone(),
        records: vec![record_for(0, 0.0, &u0, &xi0, &w, &phi, 0.0, 0.0, 0)],
        extinction_time: None,
    };
    let mut snapshots = vec![Snapshot {
        step: 0,
        t: 0.0,
        u: u0.clone(),
    }];

    let mut state = u0.clone();
    if summary.u0_dist_to_mean <= tol_ext {
        summary.extinction_time = Some(0.0);
    }
    let n_steps = problem.n_steps();
    let mut dissipation = 0.0;
    let mut k = 0;
    while k < n_steps && !(problem.stop_at_extinction && summary.extinction_time.is_some()) {
        let t = (k + 1) as f64 * problem.dt;
        let out = match step_with(&state, problem, &w) {
            Ok(o) => o,
            Err(source) => {
                return Err(EvolveError {
                    step: k + 1,
                    time: t,
                    source,
                    partial: Box::new(summary),
                })
            }
        };
        dissipation += out.dissipation;
        let rec = record_for(
            k + 1,
            t,
            &out.u,
            out.xi.values(),
            &w,
            &phi,
            dissipation,
            out.dissipation,
            out.newton_iters,
        );
        log::debug!(
            "step {} t {:.4e} E {:.6e} dist {:.3e} iters {}",
            k + 1,
            t,
            rec.energy,
            rec.dist_to_mean,
            out.newton_iters
        );
        if summary.extinction_time.is_none() && rec.dist_to_mean <= tol_ext {
            summary.extinction_time = Some(t);
        }
        summary.records.push(rec);
        state = out.u;
        k += 1;
        if snapshot_stride > 0 && k % snapshot_stride == 0 {
            snapshots.push(Snapshot {
                step: k,
                t,
                u: state.clone(),
            });
        }
    }
    if snapshots.last().map(|s| s.step) != Some(k) {
        snapshots.push(Snapshot {
            step: k,
            t: summary.last().t,
            u: state.clone(),
        });
    }
    Ok(EvolutionTrace {
        summary,
        snapshots,
        initial_state: u0,
        final_state: state,
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtinctionError {
    #[error("extinction bound needs alpha > 0 (nonlinearity `{0}` has alpha = 0)")]
    NotApplicable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtinctionStatus {
    Extinct,
    /// Horizon reached before the bound: the run cannot decide.
    Inconclusive,
    /// Horizon passed the bound without extinction.
    NotExtinct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionReport {
    pub status: ExtinctionStatus,
    pub t_ext_observed: Option<f64>,
    /// `C_p‖u_0 - ū‖/α`.
    pub t_ext_bound: f64,
    /// `C_p‖u_0‖`, the bound read literally with α absorbed and ū dropped.
    pub t_ext_bound_literal: f64,
    /// Observed times are first steps below tolerance, so they carry ±dt.
    pub uncertainty: f64,
    pub tolerance: f64,
    pub horizon: f64,
    pub passed: bool,
}

/// Compares the observed extinction time with `C_p‖u_0 - ū‖/α + 2dt`.
pub fn extinction_report(trace: &TraceSummary, w: &NonlinearW) -> Result<ExtinctionReport, ExtinctionError> {
    let alpha = w.alpha();
    if alpha <= 0.0 {
        return Err(ExtinctionError::NotApplicable(w.name().to_string()));
    }
    let bound = POINCARE_CONSTANT * trace.u0_dist_to_mean / alpha;
    let tolerance = 2.0 * trace.dt;
    let horizon = trace.last().t;
    let (status, passed) = match trace.extinction_time {
        Some(t) => (ExtinctionStatus::Extinct, t <= bound + tolerance),
        None if horizon > bound + tolerance => (ExtinctionStatus::NotExtinct, false),
        None => (ExtinctionStatus::Inconclusive, false),
    };
    Ok(ExtinctionReport {
        status,
        t_ext_observed: trace.extinction_time,
        t_ext_bound: bound,
        t_ext_bound_literal: POINCARE_CONSTANT * trace.u0_l2,
        uncertainty: trace.dt,
        tolerance,
        horizon,
        passed,
    })
}
