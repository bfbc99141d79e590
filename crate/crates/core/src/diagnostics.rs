//! Pass/fail checks of the estimates a solution or trajectory must satisfy.
//!
//! Suites consume serializable summaries, so stored reports can be checked
//! again without re-solving. Every function here is pure.

use serde::{Deserialize, Serialize};

use crate::elliptic::{
    apriori_bounds, AprioriReport, ContinuationTrace, EllipticProblem, EllipticSolution, SolverOptions,
};
use crate::grid::forward_diff;
use crate::nonlinearity::{NonlinearW, RegularizedW};
use crate::orlicz::{self, OrliczPhi};
use crate::parabolic::{extinction_report, ExtinctionStatus, TraceSummary};

/// Relative tolerance for identities that hold exactly in exact arithmetic.
pub const EXACT_REL_TOL: f64 = 1e-8;
/// Absolute tolerance for mean conservation.
pub const MEAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    /// `measured ≤ bound + tolerance`, or `true` when not applicable.
    pub passed: bool,
    pub applicable: bool,
    pub measured: f64,
    pub bound: f64,
    pub tolerance: f64,
    /// The estimate being checked, in words.
    pub anchor: String,
    /// Step or cell that attains `measured` (the first failing one on failure).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Verdict {
    pub fn check(name: &str, anchor: &str, measured: f64, bound: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: measured <= bound + tolerance,
            applicable: true,
            measured,
            bound,
            tolerance,
            anchor: anchor.to_string(),
            index: None,
            note: None,
        }
    }

    pub fn not_applicable(name: &str, anchor: &str, reason: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            applicable: false,
            measured: 0.0,
            bound: 0.0,
            tolerance: 0.0,
            anchor: anchor.to_string(),
            index: None,
            note: Some(reason.into()),
        }
    }

    fn at(mut self, index: Option<usize>) -> Self {
        self.index = index;
        self
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn failed(&self) -> bool {
        self.applicable && !self.passed
    }
}

pub fn all_passed(verdicts: &[Verdict]) -> bool {
    verdicts.iter().all(|v| !v.failed())
}

/// Everything the elliptic checks need, detached from the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticSummary {
    pub n: usize,
    pub h: f64,
    pub w: NonlinearW,
    pub gamma: f64,
    pub epsilon: f64,
    pub solver_tol: f64,
    pub f_mean: f64,
    pub u_mean: f64,
    pub xi_max: f64,
    pub max_slope: f64,
    pub newton_iters: usize,
    pub objective_value: f64,
    pub weak_residual: f64,
    pub residual_floor: f64,
    pub inclusion_gap: f64,
    pub energy: f64,
    /// `G(u_x)` and `G(f_x)` for the modulus built from `f_x`.
    pub modulus_g: f64,
    pub modulus_g_data: f64,
    pub apriori: Option<AprioriReport>,
    pub continuation: Option<ContinuationTrace>,
}

impl EllipticSummary {
    pub fn new(
        problem: &EllipticProblem,
        solution: &EllipticSolution,
        opts: &SolverOptions,
        continuation: Option<ContinuationTrace>,
    ) -> Self {
        let fx = forward_diff(&problem.f);
        let ux = forward_diff(&solution.u);
        let (g, g_data) = match &continuation {
            Some(tr) => (
                tr.stages.last().map(|s| s.modulus_g).unwrap_or(f64::NAN),
                tr.modulus_g_data,
            ),
            None => {
                let phi = orlicz::build_phi(&fx, &orlicz::default_budget(orlicz::DEFAULT_LEVELS))
                    .expect("finite data");
                (orlicz::modulus_g(&phi, &ux), orlicz::modulus_g(&phi, &fx))
            }
        };
        let r = &solution.report;
        Self {
            n: problem.f.len(),
            h: problem.h,
            w: problem.w.clone(),
            gamma: problem.gamma,
            epsilon: problem.epsilon,
            solver_tol: opts.tol,
            f_mean: problem.f.mean(),
            u_mean: solution.u.mean(),
            xi_max: solution.xi.max_abs(),
            max_slope: ux.max_abs(),
            newton_iters: r.newton_iters,
            objective_value: r.objective_value,
            weak_residual: r.weak_residual,
            residual_floor: r.residual_floor,
            inclusion_gap: r.inclusion_gap,
            energy: r.energy,
            modulus_g: g,
            modulus_g_data: g_data,
            apriori: apriori_bounds(solution, problem).ok(),
            continuation,
        }
    }
}

/// What a suite runs on.
#[derive(Debug, Clone, Copy)]
pub enum Subject<'a> {
    Elliptic(&'a EllipticSummary),
    Evolution(&'a TraceSummary),
}

pub fn run_suite(subject: Subject<'_>) -> Vec<Verdict> {
    match subject {
        Subject::Elliptic(s) => elliptic_suite(s),
        Subject::Evolution(t) => evolution_suite(t),
    }
}

fn rel(scale: f64) -> f64 {
    EXACT_REL_TOL * scale.abs().max(1.0)
}

pub fn elliptic_suite(s: &EllipticSummary) -> Vec<Verdict> {
    let mut out = Vec::new();
    out.push(Verdict::check(
        "mean_conservation",
        "the resolvent preserves the spatial average",
        (s.u_mean - s.f_mean).abs(),
        0.0,
        MEAN_TOL * s.f_mean.abs().max(1.0),
    ));
    let dx = 1.0 / s.n as f64;
    out.push(Verdict::check(
        "weak_residual",
        "(u - f)/h equals the discrete divergence of the flux",
        s.weak_residual,
        0.0,
        (s.solver_tol / dx).max(s.residual_floor),
    ));
    out.push(Verdict::check(
        "dual_bound",
        "the flux is bounded by the recession slope",
        s.xi_max,
        s.w.w_inf(),
        s.epsilon * s.max_slope + 1e-12,
    ));
    out.push(Verdict::check(
        "inclusion",
        "the flux is a selection of the subdifferential of W at u_x",
        s.inclusion_gap,
        0.0,
        10.0 * s.gamma + s.epsilon * s.max_slope,
    ));
    out.push(Verdict::check(
        "modulus_bound",
        "the Orlicz modulus of u_x does not exceed that of f_x",
        s.modulus_g,
        s.modulus_g_data,
        rel(s.modulus_g_data),
    ));
    if let Some(tr) = &s.continuation {
        let (worst, idx) = tr
            .stages
            .iter()
            .enumerate()
            .map(|(i, st)| (st.modulus_g, i))
            .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
        out.push(
            Verdict::check(
                "continuation_modulus_bound",
                "the modulus bound holds uniformly along the continuation",
                worst,
                tr.modulus_g_data,
                rel(tr.modulus_g_data),
            )
            .at(Some(idx)),
        );
    }
    match &s.apriori {
        Some(a) => {
            out.push(
                Verdict::check(
                    "apriori_tv",
                    "comparison with u = 0 bounds the total variation",
                    a.tv,
                    a.tv_bound,
                    rel(a.tv_bound),
                )
                .with_note(format!(
                    "literal reading |f|^2/alpha = {:.6e} holds: {}",
                    a.literal_tv_bound, a.literal_tv_holds
                )),
            );
            out.push(
                Verdict::check(
                    "apriori_l2",
                    "comparison with u = 0 bounds the L2 change",
                    a.l2_change,
                    a.l2_change_bound,
                    rel(a.l2_change_bound),
                )
                .with_note(format!(
                    "literal reading 4|f|^2 = {:.6e} holds: {}",
                    a.literal_l2_bound, a.literal_l2_holds
                )),
            );
        }
        None => {
            let why = format!("nonlinearity `{}` has alpha = 0", s.w.name());
            out.push(Verdict::not_applicable(
                "apriori_tv",
                "comparison with u = 0 bounds the total variation",
                why.clone(),
            ));
            out.push(Verdict::not_applicable(
                "apriori_l2",
                "comparison with u = 0 bounds the L2 change",
                why,
            ));
        }
    }
    out
}

/// Largest value of `f` over consecutive record pairs, with the first index
/// where it exceeds `limit` (or the argmax when nothing does).
fn worst_pair<F: Fn(usize) -> f64>(len: usize, f: F, limit: f64) -> (f64, Option<usize>) {
    let mut worst = f64::NEG_INFINITY;
    let mut arg = None;
    let mut first_bad = None;
    for k in 1..len {
        let v = f(k);
        if v > worst || v.is_nan() {
            worst = v;
            arg = Some(k);
        }
        if first_bad.is_none() && !(v <= limit) {
            first_bad = Some(k);
        }
    }
    if len < 2 {
        return (0.0, None);
    }
    (worst, first_bad.or(arg))
}

pub fn evolution_suite(t: &TraceSummary) -> Vec<Verdict> {
    let r = &t.records;
    let mut out = Vec::new();
    if r.is_empty() {
        out.push(Verdict::check("records", "a trace holds at least its initial state", 0.0, -1.0, 0.0));
        return out;
    }
    let first = &r[0];

    let bad_times = r.windows(2).filter(|p| !(p[1].t > p[0].t)).count();
    let first_bad = r.windows(2).position(|p| !(p[1].t > p[0].t)).map(|i| i + 1);
    out.push(
        Verdict::check(
            "times_increasing",
            "one record per accepted step at strictly increasing times",
            bad_times as f64,
            0.0,
            0.0,
        )
        .at(first_bad),
    );

    let mean_tol = MEAN_TOL * first.mean.abs().max(1.0);
    let (drift, idx) = worst_pair(r.len(), |k| (r[k].mean - first.mean).abs(), mean_tol);
    out.push(
        Verdict::check(
            "mean_conservation",
            "the spatial average is preserved",
            drift.max(0.0),
            0.0,
            mean_tol,
        )
        .at(idx),
    );

    let e_tol = rel(first.energy);
    let (excess, idx) = worst_pair(
        r.len(),
        |k| r[k].step_dissipation + r[k].energy - r[k - 1].energy,
        e_tol,
    );
    out.push(
        Verdict::check(
            "energy_dissipation",
            "dt |u_t|^2 + E(u_{k+1}) <= E(u_k) at every step",
            excess,
            0.0,
            e_tol,
        )
        .at(idx),
    );

    let last = r.last().unwrap();
    out.push(Verdict::check(
        "cumulative_dissipation",
        "total dissipation plus final energy stays below the initial energy",
        last.dissipation + last.energy,
        first.energy,
        e_tol,
    ));

    let gap = RegularizedW::new(t.w.clone(), t.gamma, 0.0)
        .map(|w| w.jensen_gap_bound())
        .unwrap_or(0.0);
    let (e_max, idx) = worst_pair(r.len(), |k| r[k].energy_exact, first.energy_exact + gap + e_tol);
    out.push(
        Verdict::check(
            "energy_bound",
            "E(u(t)) <= E(u_0), up to the smoothing offset",
            e_max.max(first.energy_exact),
            first.energy_exact,
            gap + e_tol,
        )
        .at(idx),
    );

    let g_tol = rel(first.modulus_g);
    let (g_inc, idx) = worst_pair(r.len(), |k| r[k].modulus_g - r[k - 1].modulus_g, g_tol);
    out.push(
        Verdict::check(
            "modulus_monotone",
            "the Orlicz modulus of u_x is nonincreasing in time",
            g_inc,
            0.0,
            g_tol,
        )
        .at(idx),
    );

    let cell_bound = first.max_cell_phi.max(first.modulus_g);
    let (cell_max, idx) = worst_pair(r.len(), |k| r[k].max_cell_phi, cell_bound + g_tol);
    out.push(
        Verdict::check(
            "no_jump_creation",
            "no single cell concentrates more Orlicz mass than the data allows",
            cell_max.max(first.max_cell_phi),
            cell_bound,
            g_tol,
        )
        .at(idx),
    );

    let max_slope = r.iter().map(|x| x.max_slope).fold(0.0, f64::max);
    let xi_tol = t.viscosity * max_slope + 1e-12;
    let (xi_max, idx) = worst_pair(r.len(), |k| r[k].xi_bound, t.w.w_inf() + xi_tol);
    out.push(
        Verdict::check(
            "dual_bound",
            "the flux is bounded by the recession slope",
            xi_max.max(0.0),
            t.w.w_inf(),
            xi_tol,
        )
        .at(idx),
    );

    let inc_tol = 10.0 * t.gamma + t.viscosity * max_slope;
    let (inc, idx) = worst_pair(r.len(), |k| r[k].inclusion_gap, inc_tol);
    out.push(
        Verdict::check(
            "inclusion",
            "the flux is a selection of the subdifferential of W at u_x",
            inc.max(0.0),
            0.0,
            inc_tol,
        )
        .at(idx),
    );

    let ext_anchor = "finite extinction before C_p |u_0 - mean|/alpha";
    match extinction_report(t, &t.w) {
        Err(e) => out.push(Verdict::not_applicable("extinction_bound", ext_anchor, e.to_string())),
        Ok(rep) => {
            let note = format!(
                "status {:?}; literal reading C_p |u_0| = {:.6e}",
                rep.status, rep.t_ext_bound_literal
            );
            match rep.status {
                ExtinctionStatus::Inconclusive => out.push(Verdict::not_applicable(
                    "extinction_bound",
                    ext_anchor,
                    format!("horizon {:.6e} ends before the bound; {note}", rep.horizon),
                )),
                _ => {
                    let mut v = Verdict::check(
                        "extinction_bound",
                        ext_anchor,
                        rep.t_ext_observed.unwrap_or(rep.horizon),
                        rep.t_ext_bound,
                        rep.tolerance,
                    )
                    .with_note(note);
                    if rep.status == ExtinctionStatus::NotExtinct {
                        v.passed = false;
                    }
                    out.push(v);
                }
            }
        }
    }
    out
}

/// Structural checks of a constructed modulus against its data.
pub fn orlicz_suite(phi: &OrliczPhi, samples: &[f64], dx: f64, budget: &[f64]) -> Vec<Verdict> {
    let mut out = Vec::new();
    let levels = phi.levels();
    let (excess, idx) = levels
        .iter()
        .zip(budget)
        .enumerate()
        .map(|(k, (&t, &b))| (orlicz::tail_mass(samples, dx, t) - b, k))
        .fold((f64::NEG_INFINITY, None), |a, (v, k)| if v > a.0 { (v, Some(k)) } else { a });
    out.push(
        Verdict::check(
            "tail_budget",
            "the tail mass above level k is at most the k-th budget",
            excess,
            0.0,
            0.0,
        )
        .at(idx),
    );

    let start = levels.len().saturating_sub(5);
    let slopes: Vec<f64> = levels[start..].iter().map(|&t| phi.deriv(t)).collect();
    let flat = slopes.windows(2).filter(|w| !(w[1] > w[0])).count();
    out.push(Verdict::check(
        "superlinearity",
        "the slope of the modulus strictly increases over the last five levels",
        flat as f64,
        0.0,
        0.0,
    ));

    let m = 10_000;
    let (worst, at) = (0..m)
        .map(|i| {
            let p = -100.0 + 200.0 * i as f64 / (m - 1) as f64;
            (phi.eval(p) - phi.comparison_bound(p), i)
        })
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
    out.push(
        Verdict::check(
            "comparison",
            "the smoothed modulus is dominated by C0 times the raw one plus C1 on [-100, 100]",
            worst,
            0.0,
            1e-12 * phi.c1().max(1.0),
        )
        .at(Some(at)),
    );
    out
}
