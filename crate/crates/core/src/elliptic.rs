//! The regularized elliptic problem
//!
//! ```text
//! (u - f)/h = (W^γ_p(u_x) + ε u_x)_x    on the torus,
//! ```
//!
//! solved as the minimization of the discrete, strictly convex functional
//!
//! ```text
//! F(u) = dx·Σ [ (u_i - f_i)²/(2h) + W^γ(p_i) + (ε/2) p_i² ],   p = forward_diff(u).
//! ```
//!
//! The Hessian of `F` is a symmetric positive definite cyclic tridiagonal
//! matrix with diagonal at least `dx/h`, so each Newton direction costs O(n).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{backward_div_slice, forward_diff, forward_diff_slice, DualField, Field, GridError};
use crate::linalg::{CyclicTridiagonal, LinalgError};
use crate::nonlinearity::{energy, Integrand, NonlinearW, NonlinearityError, RegularizedW};
use crate::orlicz::{self, OrliczError, OrliczPhi};

/// Default smallest smoothing radius reached by continuation.
pub const GAMMA_MIN: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("Newton did not converge after {iterations} iterations (gradient {gradient_norm:.3e}); retry from a larger gamma")]
    NonConvergence { iterations: usize, gradient_norm: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Orlicz(#[from] OrliczError),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("continuation stage {stage} (gamma {gamma:e}, epsilon {epsilon:e}): {source}")]
pub struct ContinuationError {
    pub stage: usize,
    pub gamma: f64,
    pub epsilon: f64,
    #[source]
    pub source: SolveError,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AprioriError {
    #[error("a-priori bounds need alpha > 0 (nonlinearity `{0}` has alpha = 0)")]
    NotApplicable(String),
}

/// Newton controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop when the Euclidean gradient's max-norm drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Backtracking factor.
    pub backtrack: f64,
}

impl SolverOptions {
    /// Gradient tolerance `1e-10·n`.
    pub fn for_grid(n: usize) -> Self {
        Self {
            tol: 1e-10 * n as f64,
            ..Self::default()
        }
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            armijo: 1e-4,
            backtrack: 0.5,
        }
    }
}

/// `(u - f)/h = (W^γ_p(u_x) + ε u_x)_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticProblem {
    pub f: Field,
    pub h: f64,
    pub w: NonlinearW,
    pub gamma: f64,
    pub epsilon: f64,
}

impl EllipticProblem {
    pub fn new(f: Field, h: f64, w: NonlinearW, gamma: f64, epsilon: f64) -> Result<Self, SolveError> {
        let p = Self {
            f,
            h,
            w,
            gamma,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(SolveError::InvalidProblem(format!("h must be positive, got {}", self.h)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(SolveError::InvalidProblem(format!(
                "epsilon must be nonnegative, got {}",
                self.epsilon
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(SolveError::InvalidProblem(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    /// `W^γ + (ε/2)p²`.
    pub fn integrand(&self) -> Result<RegularizedW, SolveError> {
        Ok(RegularizedW::new(self.w.clone(), self.gamma, self.epsilon)?)
    }

    /// The discrete functional `F`.
    pub fn objective(&self, u: &Field) -> Result<f64, SolveError> {
        let w = self.integrand()?;
        Ok(objective_raw(self.f.values(), self.h, &w, u.values()))
    }

    /// Euclidean gradient of `F`.
    pub fn gradient(&self, u: &Field) -> Result<Vec<f64>, SolveError> {
        let w = self.integrand()?;
        let dx = self.f.grid().dx();
        let p = forward_diff_slice(u.values(), dx);
        let xi: Vec<f64> = p.iter().map(|&q| w.d1(q)).collect();
        Ok(gradient_raw(self.f.values(), self.h, u.values(), &xi, dx))
    }

    /// Hessian of `F` at `u`.
    pub fn hessian(&self, u: &Field) -> Result<CyclicTridiagonal, SolveError> {
        let w = self.integrand()?;
        let dx = self.f.grid().dx();
        let p = forward_diff_slice(u.values(), dx);
        let c: Vec<f64> = p.iter().map(|&q| w.d2(q)).collect();
        Ok(hessian_raw(&c, self.h, dx))
    }

    /// `F(0) = W^γ(0) + ‖f‖²/(2h)`.
    pub fn objective_at_zero(&self) -> Result<f64, SolveError> {
        let zero = Field::constant(self.f.grid(), 0.0);
        self.objective(&zero)
    }
}

pub(crate) fn objective_raw(f: &[f64], h: f64, w: &RegularizedW, u: &[f64]) -> f64 {
    let n = u.len();
    let dx = 1.0 / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let d = u[i] - f[i];
        let p = (u[(i + 1) % n] - u[i]) / dx;
        acc += d * d / (2.0 * h) + w.value(p);
    }
    dx * acc
}

fn gradient_raw(f: &[f64], h: f64, u: &[f64], xi: &[f64], dx: f64) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| dx * (u[i] - f[i]) / h - (xi[i] - xi[(i + n - 1) % n]))
        .collect()
}

fn hessian_raw(c: &[f64], h: f64, dx: f64) -> CyclicTridiagonal {
    let n = c.len();
    let mass = dx / h;
    CyclicTridiagonal {
        diag: (0..n).map(|i| mass + (c[i] + c[(i + n - 1) % n]) / dx).collect(),
        off: c.iter().map(|v| -v / dx).collect(),
    }
}

/// Raw Newton output.
#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub xi: Vec<f64>,
    pub iterations: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    /// Objective after every accepted iterate, starting with the initial guess.
    pub objective_history: Vec<f64>,
}

/// Damped Newton with Armijo backtracking, followed by a short pure-Newton
/// polish once the decrement is below what the objective can resolve.
pub(crate) fn newton_solve(
    f: &[f64],
    h: f64,
    w: &RegularizedW,
    u_init: Vec<f64>,
    opts: &SolverOptions,
) -> Result<NewtonOutcome, SolveError> {
    let n = f.len();
    let dx = 1.0 / n as f64;
    let target_mean = f.iter().sum::<f64>() / n as f64;
    let mut u = u_init;
    let mut fval = objective_raw(f, h, w, &u);
    let mut history = vec![fval];
    let mut polish_steps = 0usize;
    let mut last_polish_dec = f64::INFINITY;

    for iter in 0..=opts.max_iter {
        let p = forward_diff_slice(&u, dx);
        let mut xi = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        for &q in &p {
            let (d1, d2) = w.derivatives(q);
            xi.push(d1);
            c.push(d2);
        }
        let grad = gradient_raw(f, h, &u, &xi, dx);
        let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));

        let finish = |u: Vec<f64>, iterations: usize, history: Vec<f64>| -> NewtonOutcome {
            let mut u = u;
            // The exact minimizer conserves the mean; remove rounding drift.
            let shift = target_mean - u.iter().sum::<f64>() / n as f64;
            for v in &mut u {
                *v += shift;
            }
            let p = forward_diff_slice(&u, dx);
            let xi: Vec<f64> = p.iter().map(|&q| w.d1(q)).collect();
            let grad = gradient_raw(f, h, &u, &xi, dx);
            NewtonOutcome {
                objective: objective_raw(f, h, w, &u),
                gradient_norm: grad.iter().fold(0.0f64, |m, g| m.max(g.abs())),
                u,
                p,
                xi,
                iterations,
                objective_history: history,
            }
        };

        if gnorm <= opts.tol {
            return Ok(finish(u, iter, history));
        }
        if iter == opts.max_iter {
            return Err(SolveError::NonConvergence {
                iterations: iter,
                gradient_norm: gnorm,
            });
        }

        let hess = hessian_raw(&c, h, dx);
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        let step = hess.solve(&rhs)?;
        let dec: f64 = -grad.iter().zip(&step).map(|(g, s)| g * s).sum::<f64>();
        let fscale = fval.abs().max(1.0);
        if !(dec.is_finite()) {
            return Err(SolveError::NonConvergence {
                iterations: iter,
                gradient_norm: gnorm,
            });
        }
        if dec <= 0.0 {
            return Ok(finish(u, iter, history));
        }

        // Below ~1e-10 relative the objective cannot distinguish a good step
        // from a bad one; take full steps until the decrement stagnates.
        if 0.5 * dec <= 1e-10 * fscale {
            if dec >= 0.25 * last_polish_dec || polish_steps >= 8 || 0.5 * dec <= 1e-30 * fscale {
                return Ok(finish(u, iter, history));
            }
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, s)| a + s).collect();
            let ft = objective_raw(f, h, w, &trial);
            if ft <= fval + 1e-13 * fscale {
                u = trial;
                fval = ft.min(fval);
                history.push(fval);
                polish_steps += 1;
                last_polish_dec = dec;
                continue;
            }
        }

        let mut t = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            let ft = objective_raw(f, h, w, &trial);
            if ft <= fval - opts.armijo * t * dec {
                break Some((trial, ft));
            }
            t *= opts.backtrack;
            if t < 1e-14 {
                break None;
            }
        };
        match accepted {
            Some((trial, ft)) => {
                u = trial;
                fval = ft;
                history.push(fval);
            }
            None if 0.5 * dec <= 1e-8 * fscale => return Ok(finish(u, iter, history)),
            None => {
                return Err(SolveError::NonConvergence {
                    iterations: iter,
                    gradient_norm: gnorm,
                })
            }
        }
    }
    unreachable!("loop returns at max_iter")
}

/// Per-solve record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub newton_iters: usize,
    pub objective_value: f64,
    /// `max_i |(u_i - f_i)/h - (ξ_i - ξ_{i-1})/dx|`.
    pub weak_residual: f64,
    /// Residual attainable in double precision for this solution's scales.
    pub residual_floor: f64,
    pub gradient_norm: f64,
    /// Graph distance of `(p_i, ξ_i)` to `∂W`, maximized over interfaces.
    pub inclusion_gap: f64,
    /// Unsmoothed energy `dx·Σ W(p_i)`.
    pub energy: f64,
    /// `G(u_x)` for the modulus built from `f_x`, when one was supplied.
    pub modulus_g: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticSolution {
    pub u: Field,
    /// `ξ_i = W^γ_p(p_i) + ε p_i`.
    pub xi: DualField,
    pub report: SolveReport,
}

impl EllipticSolution {
    pub fn gradient(&self) -> DualField {
        forward_diff(&self.u)
    }
}

/// `max_i |(u_i - f_i)/h - (ξ_i - ξ_{i-1})/dx|`.
pub fn weak_residual(u: &Field, f: &Field, xi: &DualField, h: f64) -> f64 {
    let div = backward_div_slice(xi.values(), u.grid().dx());
    u.values()
        .iter()
        .zip(f.values())
        .zip(&div)
        .map(|((a, b), d)| ((a - b) / h - d).abs())
        .fold(0.0, f64::max)
}

fn residual_floor(u: &[f64], f: &[f64], xi: &[f64], c_max: f64, h: f64, dx: f64) -> f64 {
    let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ximax = xi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    8.0 * f64::EPSILON * ((umax + fmax) / h + 2.0 * ximax / dx + 4.0 * c_max * umax / (dx * dx))
}

/// Max over interfaces of the graph distance to `∂W`; see
/// [`NonlinearW::graph_distance`].
pub fn check_inclusion(solution: &EllipticSolution, w: &NonlinearW) -> f64 {
    inclusion_gap(w, &solution.gradient(), &solution.xi)
}

pub fn inclusion_gap(w: &NonlinearW, p: &DualField, xi: &DualField) -> f64 {
    p.values()
        .iter()
        .zip(xi.values())
        .map(|(&q, &x)| w.graph_distance(q, x))
        .fold(0.0, f64::max)
}

/// `max_i dist(ξ_i, ∂W(p_i))` without the graph relaxation. Large whenever a
/// tiny nonzero slope carries an interior flux value at a kink.
pub fn pointwise_inclusion_gap(w: &NonlinearW, p: &DualField, xi: &DualField) -> f64 {
    p.values()
        .iter()
        .zip(xi.values())
        .map(|(&q, &x)| w.subdiff(q).distance(x))
        .fold(0.0, f64::max)
}

fn assemble(
    problem: &EllipticProblem,
    out: NewtonOutcome,
    phi: Option<&OrliczPhi>,
) -> Result<EllipticSolution, SolveError> {
    let grid = problem.f.grid();
    let dx = grid.dx();
    let w = problem.integrand()?;
    let c_max = out.p.iter().map(|&q| w.d2(q)).fold(0.0, f64::max);
    let floor = residual_floor(&out.u, problem.f.values(), &out.xi, c_max, problem.h, dx);
    let u = Field::new(grid, out.u)?;
    let xi = DualField::new(grid, out.xi)?;
    let p = DualField::new(grid, out.p)?;
    let report = SolveReport {
        newton_iters: out.iterations,
        objective_value: out.objective,
        weak_residual: weak_residual(&u, &problem.f, &xi, problem.h),
        residual_floor: floor,
        gradient_norm: out.gradient_norm,
        inclusion_gap: inclusion_gap(&problem.w, &p, &xi),
        energy: energy(&problem.w, &u),
        modulus_g: phi.map(|phi| orlicz::modulus_g(phi, &p)),
    };
    Ok(EllipticSolution { u, xi, report })
}

/// Builds the default modulus for `f_x`.
pub fn data_modulus(f: &Field) -> Result<OrliczPhi, SolveError> {
    Ok(orlicz::build_phi(
        &forward_diff(f),
        &orlicz::default_budget(orlicz::DEFAULT_LEVELS),
    )?)
}

fn has_zero_variation(f: &Field) -> bool {
    let v = f.values();
    v.iter().all(|&x| x == v[0])
}

fn solve_with(
    problem: &EllipticProblem,
    u_init: &Field,
    opts: &SolverOptions,
    phi: Option<&OrliczPhi>,
) -> Result<(EllipticSolution, Vec<f64>), SolveError> {
    problem.validate()?;
    if u_init.grid() != problem.f.grid() {
        return Err(GridError::GridMismatch(u_init.len(), problem.f.len()).into());
    }
    if !(opts.tol > 0.0) {
        return Err(SolveError::InvalidProblem(format!("tol must be positive, got {}", opts.tol)));
    }
    let w = problem.integrand()?;
    let out = if has_zero_variation(&problem.f) {
        let u = problem.f.values().to_vec();
        let dx = problem.f.grid().dx();
        let p = forward_diff_slice(&u, dx);
        let xi = p.iter().map(|&q| w.d1(q)).collect();
        let objective = objective_raw(problem.f.values(), problem.h, &w, &u);
        NewtonOutcome {
            u,
            p,
            xi,
            iterations: 0,
            objective,
            gradient_norm: 0.0,
            objective_history: vec![objective],
        }
    } else {
        newton_solve(problem.f.values(), problem.h, &w, u_init.values().to_vec(), opts)?
    };
    let history = out.objective_history.clone();
    Ok((assemble(problem, out, phi)?, history))
}

/// Minimizes the discrete functional starting from `u_init`.
pub fn minimize(
    problem: &EllipticProblem,
    u_init: &Field,
    opts: &SolverOptions,
) -> Result<EllipticSolution, SolveError> {
    let phi = data_modulus(&problem.f)?;
    Ok(solve_with(problem, u_init, opts, Some(&phi))?.0)
}

/// Like [`minimize`], also returning the objective after every accepted
/// Newton iterate.
pub fn minimize_with_history(
    problem: &EllipticProblem,
    u_init: &Field,
    opts: &SolverOptions,
) -> Result<(EllipticSolution, Vec<f64>), SolveError> {
    solve_with(problem, u_init, opts, None)
}

/// Paired `(γ, ε)` stages, both nonincreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationSchedule {
    pub gammas: Vec<f64>,
    pub epsilons: Vec<f64>,
}

impl ContinuationSchedule {
    /// Geometric `1e-2 → 1e-6` in both parameters.
    pub fn standard() -> Self {
        Self::down_to(GAMMA_MIN, GAMMA_MIN)
    }

    /// Decades from `1e-2` down to the targets, which close the schedule;
    /// the shorter list is padded with its last entry.
    pub fn down_to(gamma: f64, epsilon: f64) -> Self {
        let decades = |target: f64| {
            let mut v = Vec::new();
            let mut x = 1e-2;
            // a zero target (no viscosity) closes a schedule that reached 1e-6
            let floor = if target > 0.0 { target } else { GAMMA_MIN };
            while x > floor * (1.0 + 1e-9) {
                v.push(x);
                x *= 0.1;
            }
            v.push(floor);
            if target <= 0.0 {
                v.push(0.0);
            }
            v
        };
        let (mut gammas, mut epsilons) = (decades(gamma), decades(epsilon));
        let len = gammas.len().max(epsilons.len());
        gammas.resize(len, gamma);
        epsilons.resize(len, epsilon);
        Self { gammas, epsilons }
    }

    pub fn single(gamma: f64, epsilon: f64) -> Self {
        Self {
            gammas: vec![gamma],
            epsilons: vec![epsilon],
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: String| Err(SolveError::InvalidProblem(m));
        if self.gammas.is_empty() || self.gammas.len() != self.epsilons.len() {
            return bad("gamma and epsilon schedules must be nonempty and of equal length".into());
        }
        if self.gammas.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("gamma schedule entries must be positive".into());
        }
        if self.epsilons.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("epsilon schedule entries must be nonnegative".into());
        }
        for (name, s) in [("gamma", &self.gammas), ("epsilon", &self.epsilons)] {
            if s.windows(2).any(|w| w[1] > w[0]) {
                return bad(format!("{name} schedule must be nonincreasing"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationStage {
    pub gamma: f64,
    pub epsilon: f64,
    pub newton_iters: usize,
    pub objective_value: f64,
    pub weak_residual: f64,
    pub modulus_g: f64,
    /// `‖u_k - u_{k-1}‖_{L²}`; absent for the first stage.
    pub l2_change: Option<f64>,
    /// `G(u_x) ≤ G(f_x) + tol` at this stage.
    pub modulus_bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationTrace {
    pub stages: Vec<ContinuationStage>,
    /// `G(f_x)`.
    pub modulus_g_data: f64,
    pub phi: OrliczPhi,
}

impl ContinuationTrace {
    pub fn modulus_bounded(&self) -> bool {
        self.stages.iter().all(|s| s.modulus_bounded)
    }

    /// Ratios of successive `l2_change` values.
    pub fn contraction_rates(&self) -> Vec<f64> {
        let changes: Vec<f64> = self.stages.iter().filter_map(|s| s.l2_change).collect();
        changes.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Warm-started chain of solves along the schedule, starting from `u = f`.
pub fn continue_epsilon(
    problem: &EllipticProblem,
    schedule: &ContinuationSchedule,
    opts: &SolverOptions,
) -> Result<(EllipticSolution, ContinuationTrace), ContinuationError> {
    let stage_err = |stage: usize, gamma: f64, epsilon: f64, source: SolveError| ContinuationError {
        stage,
        gamma,
        epsilon,
        source,
    };
    schedule
        .validate()
        .map_err(|e| stage_err(0, problem.gamma, problem.epsilon, e))?;
    let phi = data_modulus(&problem.f).map_err(|e| stage_err(0, problem.gamma, problem.epsilon, e))?;
    let g_data = orlicz::modulus_g(&phi, &forward_diff(&problem.f));
    let tol_g = 1e-8 * g_data.abs().max(1.0);

    let mut current = problem.f.clone();
    let mut stages = Vec::with_capacity(schedule.gammas.len());
    let mut last: Option<EllipticSolution> = None;
    for (k, (&gamma, &epsilon)) in schedule.gammas.iter().zip(&schedule.epsilons).enumerate() {
        let stage_problem = EllipticProblem {
            gamma,
            epsilon,
            ..problem.clone()
        };
        let (sol, _) = solve_with(&stage_problem, &current, opts, Some(&phi))
            .map_err(|e| stage_err(k, gamma, epsilon, e))?;
        let g = sol.report.modulus_g.unwrap_or(f64::NAN);
        let l2_change = last
            .as_ref()
            .map(|prev| prev.u.l2_distance(&sol.u).expect("same grid"));
        log::debug!(
            "continuation stage {k}: gamma {gamma:e} epsilon {epsilon:e} iters {} G {g:.6e}",
            sol.report.newton_iters
        );
        stages.push(ContinuationStage {
            gamma,
            epsilon,
            newton_iters: sol.report.newton_iters,
            objective_value: sol.report.objective_value,
            weak_residual: sol.report.weak_residual,
            modulus_g: g,
            l2_change,
            modulus_bounded: g <= g_data + tol_g,
        });
        current = sol.u.clone();
        last = Some(sol);
    }
    let trace = ContinuationTrace {
        stages,
        modulus_g_data: g_data,
        phi,
    };
    Ok((last.expect("nonempty schedule"), trace))
}

/// Bounds implied by `F_f(u) ≤ F_f(0)` and the literal displayed constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub alpha: f64,
    /// `F^γ_f(0) = W^γ(0) + ‖f‖²/(2h)`.
    pub objective_at_zero: f64,
    /// Discrete total variation of `u`.
    pub tv: f64,
    /// `F^γ_f(0)/α`.
    pub tv_bound: f64,
    pub tv_holds: bool,
    /// `‖u - f‖_{L²}`.
    pub l2_change: f64,
    /// `√(2h·F^γ_f(0))`.
    pub l2_change_bound: f64,
    pub l2_change_holds: bool,
    /// `|Du| ≤ ‖f‖²/α` read without the `1/(2h)` factor.
    pub literal_tv_bound: f64,
    pub literal_tv_holds: bool,
    /// `‖u‖ ≤ 4‖f‖²`.
    pub literal_l2_bound: f64,
    pub literal_l2_holds: bool,
}

impl AprioriReport {
    pub fn passed(&self) -> bool {
        self.tv_holds && self.l2_change_holds
    }
}

pub fn apriori_bounds(solution: &EllipticSolution, problem: &EllipticProblem) -> Result<AprioriReport, AprioriError> {
    let alpha = problem.w.alpha();
    if alpha <= 0.0 {
        return Err(AprioriError::NotApplicable(problem.w.name().to_string()));
    }
    let f0 = problem.objective_at_zero().expect("validated problem");
    let tv = solution.u.total_variation();
    let l2_change = solution.u.l2_distance(&problem.f).expect("same grid");
    let f_sq = problem.f.l2_norm().powi(2);
    let slack = 1e-12 * f0.abs().max(1.0);
    let tv_bound = f0 / alpha;
    let l2_change_bound = (2.0 * problem.h * f0).sqrt();
    let l2 = solution.u.l2_norm();
    Ok(AprioriReport {
        alpha,
        objective_at_zero: f0,
        tv,
        tv_bound,
        tv_holds: tv <= tv_bound + slack,
        l2_change,
        l2_change_bound,
        l2_change_holds: l2_change <= l2_change_bound + slack,
        literal_tv_bound: f_sq / alpha,
        literal_tv_holds: tv <= f_sq / alpha + slack,
        literal_l2_bound: 4.0 * f_sq,
        literal_l2_holds: l2 <= 4.0 * f_sq + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;

    fn plateau(n: usize, a: f64) -> Field {
        Field::from_fn(PeriodicGrid::new(n).unwrap(), |x| if x < 0.5 { a } else { -a })
    }

    #[test]
    fn constant_datum_is_fixed_point() {
        let f = Field::constant(PeriodicGrid::new(16).unwrap(), 2.5);
        for w in NonlinearW::catalog() {
            let prob = EllipticProblem::new(f.clone(), 0.1, w.clone(), 1e-3, 1e-4).unwrap();
            let sol = minimize(&prob, &f, &SolverOptions::for_grid(16)).unwrap();
            assert_eq!(sol.u, f);
            assert!(sol.xi.max_abs() < 1e-15);
            assert_eq!(sol.report.newton_iters, 0);
            assert!(check_inclusion(&sol, &w) < 1e-15);
        }
    }

    #[test]
    fn rejects_invalid_problems() {
        let f = plateau(8, 1.0);
        assert!(matches!(
            EllipticProblem::new(f.clone(), 0.0, NonlinearW::abs(), 1e-3, 0.0),
            Err(SolveError::InvalidProblem(_))
        ));
        assert!(EllipticProblem::new(f.clone(), -1.0, NonlinearW::abs(), 1e-3, 0.0).is_err());
        assert!(EllipticProblem::new(f.clone(), 0.1, NonlinearW::abs(), 0.0, 0.0).is_err());
        assert!(EllipticProblem::new(f, 0.1, NonlinearW::abs(), 1e-3, -1.0).is_err());
    }

    #[test]
    fn plateau_shrinks_by_four_h() {
        let (a, h) = (1.0, 0.05);
        let f = plateau(64, a);
        let prob = EllipticProblem::new(f.clone(), h, NonlinearW::abs(), 1e-6, 0.0).unwrap();
        let sol = minimize(&prob, &f, &SolverOptions::for_grid(64)).unwrap();
        for (i, &v) in sol.u.values().iter().enumerate() {
            let expect = if i < 32 { a - 4.0 * h } else { -(a - 4.0 * h) };
            assert!((v - expect).abs() < 1e-5, "cell {i}: {v}");
        }
        // brute force over plateau-constant candidates c on the upper half
        let fcost = |c: f64| (c - a) * (c - a) / (2.0 * h) + 4.0 * c;
        let best = (0..=100_000)
            .map(|k| k as f64 * 1e-5)
            .min_by(|x, y| fcost(*x).total_cmp(&fcost(*y)))
            .unwrap();
        assert!((sol.u.values()[5] - best).abs() < 2e-5);
        assert!(check_inclusion(&sol, &NonlinearW::abs()) <= 1e-5);
    }

    #[test]
    fn large_step_collapses_to_mean() {
        let f = plateau(32, 1.0);
        let prob = EllipticProblem::new(f.clone(), 0.3, NonlinearW::abs(), 1e-6, 0.0).unwrap();
        let sol = minimize(&prob, &f, &SolverOptions::for_grid(32)).unwrap();
        assert!(sol.u.max_abs() < 1e-6);
    }

    #[test]
    fn objective_history_is_monotone() {
        let g = PeriodicGrid::new(48).unwrap();
        let f = Field::from_fn(g, |x| (2.0 * std::f64::consts::PI * x).sin() + if x < 0.3 { 0.5 } else { 0.0 });
        for w in NonlinearW::catalog() {
            let prob = EllipticProblem::new(f.clone(), 0.02, w, 1e-2, 1e-3).unwrap();
            let (sol, hist) = minimize_with_history(&prob, &f, &SolverOptions::for_grid(48)).unwrap();
            for pair in hist.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-13 * pair[0].abs().max(1.0));
            }
            assert!(sol.report.objective_value <= prob.objective(&f).unwrap());
        }
    }

    #[test]
    fn hessian_is_spd_with_mass_floor() {
        let g = PeriodicGrid::new(20).unwrap();
        let f = Field::from_fn(g, |x| (x * 9.0).cos());
        let prob = EllipticProblem::new(f.clone(), 0.07, NonlinearW::two_kink(), 0.05, 1e-3).unwrap();
        let hess = prob.hessian(&f).unwrap();
        assert!(hess.gershgorin_lower_bound() >= g.dx() / 0.07 * (1.0 - 1e-12));
        for i in 0..20 {
            assert!(hess.diag[i] > 0.0);
        }
    }

    #[test]
    fn continuation_single_stage_equals_minimize() {
        let f = plateau(32, 0.5);
        let prob = EllipticProblem::new(f.clone(), 0.05, NonlinearW::abs(), 1e-3, 1e-3).unwrap();
        let opts = SolverOptions::for_grid(32);
        let direct = minimize(&prob, &f, &opts).unwrap();
        let (cont, trace) = continue_epsilon(&prob, &ContinuationSchedule::single(1e-3, 1e-3), &opts).unwrap();
        assert_eq!(direct.u, cont.u);
        assert_eq!(trace.stages.len(), 1);
        assert!(trace.modulus_bounded());
    }

    #[test]
    fn schedule_validation() {
        let std = ContinuationSchedule::standard();
        assert!(std.validate().is_ok());
        assert_eq!(std.gammas.len(), 5);
        assert_eq!(std.epsilons.last(), Some(&1e-6));
        let zero = ContinuationSchedule::down_to(1e-4, 0.0);
        assert!(zero.validate().is_ok());
        assert_eq!(zero.epsilons.len(), 6);
        assert_eq!(zero.epsilons.last(), Some(&0.0));
        assert_eq!(zero.gammas.last(), Some(&1e-4));
        let bad = ContinuationSchedule {
            gammas: vec![1e-3, 1e-2],
            epsilons: vec![1e-3, 1e-4],
        };
        assert!(bad.validate().is_err());
        let mismatch = ContinuationSchedule {
            gammas: vec![1e-3],
            epsilons: vec![1e-3, 1e-4],
        };
        assert!(mismatch.validate().is_err());
    }

    #[test]
    fn apriori_examples() {
        let g = PeriodicGrid::new(32).unwrap();
        let zero = Field::constant(g, 0.0);
        let prob = EllipticProblem::new(zero.clone(), 0.05, NonlinearW::abs(), 1e-6, 0.0).unwrap();
        let sol = minimize(&prob, &zero, &SolverOptions::for_grid(32)).unwrap();
        assert!(apriori_bounds(&sol, &prob).unwrap().passed());

        let f = plateau(32, 1.0);
        let prob = EllipticProblem::new(f.clone(), 0.05, NonlinearW::abs(), 1e-6, 0.0).unwrap();
        let sol = minimize(&prob, &f, &SolverOptions::for_grid(32)).unwrap();
        let rep = apriori_bounds(&sol, &prob).unwrap();
        // F_f(0) = ‖f‖²/(2h) + W^γ(0)
        let expect = 1.0 / (2.0 * 0.05) + 35.0 / 128.0 * 1e-6;
        assert!((rep.objective_at_zero - expect).abs() < 1e-12);
        assert!(rep.passed());
        assert!((rep.tv - 3.2).abs() < 1e-4);
        // the literal reading ‖f‖²/α = 1 is violated by TV = 3.2
        assert!(!rep.literal_tv_holds);

        let smooth = Field::from_fn(g, |x| (2.0 * std::f64::consts::PI * x).sin());
        let prob = EllipticProblem::new(smooth.clone(), 0.05, NonlinearW::minimal_surface(), 1e-3, 0.0).unwrap();
        let sol = minimize(&prob, &smooth, &SolverOptions::for_grid(32)).unwrap();
        assert!(matches!(apriori_bounds(&sol, &prob), Err(AprioriError::NotApplicable(_))));
    }
}
