//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use singflow::diagnostics::{all_passed, orlicz_suite};
use singflow::elliptic::{self, ContinuationSchedule, EllipticProblem, SolverOptions};
use singflow::generators::Generator;
use singflow::grid::{forward_diff, Field, PeriodicGrid};
use singflow::nonlinearity::NonlinearW;
use singflow::orlicz::{build_phi, default_budget, DEFAULT_LEVELS};
use singflow::parabolic::{evolve, extinction_report, EvolutionProblem, ExtinctionStatus, TraceSummary};
use singflow::scenario::{self, Mode, RunOptions};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn plateau(n: usize) -> Field {
    Generator::Plateau { a: 1.0 }.sample(PeriodicGrid::new(n).unwrap(), 0).unwrap()
}

fn random_pl(n: usize, seed: u64) -> Field {
    Generator::RandomPl { knots: 8, amp: 1.0 }
        .sample(PeriodicGrid::new(n).unwrap(), seed)
        .unwrap()
}

fn max_mean_drift(s: &TraceSummary) -> f64 {
    let m0 = s.initial().mean;
    s.records.iter().map(|r| (r.mean - m0).abs()).fold(0.0, f64::max)
}

/// Shared outputs reused by later criteria.
#[derive(Default)]
struct Shared {
    c1_trace: Option<TraceSummary>,
    c2_gaps: Vec<(f64, f64, f64)>,
    c1_drift: f64,
    c3_runs: Vec<(String, u64, TraceSummary)>,
}

fn criterion_1(sh: &mut Shared) -> Outcome {
    let start = Instant::now();
    let problem = EvolutionProblem::new(plateau(512), NonlinearW::abs(), 1e-6, 1e-3, 0.4).unwrap();
    let trace = match evolve(&problem, 0) {
        Ok(t) => t.summary,
        Err(e) => return outcome(false, format!("evolution failed: {e}")),
    };
    let elapsed = start.elapsed();
    sh.c1_drift = max_mean_drift(&trace);
    let t = trace.extinction_time;
    sh.c1_trace = Some(trace);
    match t {
        Some(t) => outcome(
            (t - 0.25).abs() <= 5e-3 && elapsed <= Duration::from_secs(30),
            format!("T = {t:.4}, |T - 0.25| = {:.1e}, runtime {:.2?}", (t - 0.25).abs(), elapsed),
        ),
        None => outcome(false, format!("no extinction by t = 0.4, runtime {elapsed:.2?}")),
    }
}

fn criterion_2(sh: &mut Shared) -> Outcome {
    let start = Instant::now();
    let n = 256;
    let w = NonlinearW::abs();
    let opts = SolverOptions::for_grid(n);
    let schedule = ContinuationSchedule::standard();
    let mut detail = Vec::new();
    let mut ok = true;
    for h in [0.05, 0.3] {
        let problem = EllipticProblem::new(plateau(n), h, w.clone(), 1e-6, 1e-6).unwrap();
        let (sol, _) = match elliptic::continue_epsilon(&problem, &schedule, &opts) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("h = {h}: {e}")),
        };
        let u = sol.u.values();
        sh.c2_gaps.push((h, sol.report.inclusion_gap, sol.xi.max_abs()));
        if h < 0.25 {
            let upper = u[..n / 2].iter().map(|v| (v - 0.8).abs()).fold(0.0, f64::max);
            let lower = u[n / 2..].iter().map(|v| (v + 0.8).abs()).fold(0.0, f64::max);
            let err = upper.max(lower);
            ok &= err <= 1e-3;
            detail.push(format!("h=0.05 height error {err:.1e}"));
        } else {
            let mean = sol.u.mean();
            let dev = u.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
            ok &= dev <= 1e-6;
            detail.push(format!("h=0.3 deviation from mean {dev:.1e}"));
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed <= Duration::from_secs(5);
    detail.push(format!("runtime {elapsed:.2?}"));
    outcome(ok, detail.join(", "))
}

fn criterion_3(sh: &mut Shared) -> Outcome {
    let start = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for w in NonlinearW::catalog() {
        for seed in 0..20u64 {
            let p = EvolutionProblem::new(random_pl(128, seed), w.clone(), 1e-6, 1e-3, 0.25)
                .unwrap()
                .with_stop_at_extinction(false);
            match evolve(&p, 0) {
                Ok(t) => {
                    let s = t.summary;
                    for pair in s.records.windows(2) {
                        worst = worst.max(pair[1].modulus_g - pair[0].modulus_g);
                    }
                    sh.c3_runs.push((w.name().to_string(), seed, s));
                }
                Err(e) => failures.push(format!("{} seed {seed}: {e}", w.name())),
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && worst <= 1e-8 && elapsed <= Duration::from_secs(120);
    let mut detail = format!(
        "{} runs, max G increase {worst:.1e}, runtime {elapsed:.2?}",
        sh.c3_runs.len()
    );
    if !failures.is_empty() {
        detail += &format!(", failed: {}", failures.join("; "));
    }
    outcome(ok, detail)
}

fn criterion_4(sh: &Shared) -> Outcome {
    if sh.c3_runs.len() != 80 {
        return outcome(false, format!("only {} of 80 runs available", sh.c3_runs.len()));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut at = String::new();
    let mut steps = 0;
    for (name, seed, s) in &sh.c3_runs {
        for pair in s.records.windows(2) {
            steps += 1;
            let v = pair[1].step_dissipation + pair[1].energy - pair[0].energy;
            if v > worst {
                worst = v;
                at = format!("{name} seed {seed} step {}", pair[1].step);
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("{steps} steps, max violation {worst:.1e} ({at})"),
    )
}

fn criterion_5(sh: &Shared) -> Outcome {
    let tol = 1e-3;
    let mut ok = true;
    let mut detail = Vec::new();
    match &sh.c1_trace {
        Some(t) => {
            let gap = t.records.iter().map(|r| r.inclusion_gap).fold(0.0, f64::max);
            let xi = t.records.iter().map(|r| r.xi_bound).fold(0.0, f64::max);
            ok &= gap <= tol && xi <= 1.0 + tol;
            detail.push(format!("evolution gap {gap:.1e} max|xi| {xi:.6}"));
        }
        None => {
            ok = false;
            detail.push("evolution output missing".into());
        }
    }
    if sh.c2_gaps.len() != 2 {
        ok = false;
        detail.push("elliptic outputs missing".into());
    }
    for &(h, gap, xi) in &sh.c2_gaps {
        ok &= gap <= tol && xi <= 1.0 + tol;
        detail.push(format!("h={h} gap {gap:.1e} max|xi| {xi:.6}"));
    }
    outcome(ok, detail.join(", "))
}

fn criterion_6(sh: &Shared) -> Outcome {
    let mut worst = sh.c1_drift;
    let mut min_steps = sh.c1_trace.as_ref().map_or(0, |t| t.records.len() - 1);
    for (_, _, s) in &sh.c3_runs {
        worst = worst.max(max_mean_drift(s));
        min_steps = min_steps.min(s.records.len() - 1);
    }
    outcome(
        worst <= 1e-12 && min_steps >= 250 && !sh.c3_runs.is_empty(),
        format!("{} runs, shortest {min_steps} steps, max drift {worst:.1e}", sh.c3_runs.len() + 1),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let grid = PeriodicGrid::new(256).unwrap();
    let budget = default_budget(DEFAULT_LEVELS);
    let mut failed = Vec::new();
    for seed in 0..10u64 {
        let gen = if seed % 2 == 0 {
            Generator::Random { modes: 6, amp: 1.0 }
        } else {
            Generator::RandomPl { knots: 10, amp: 2.0 }
        };
        let u = gen.sample(grid, seed).unwrap();
        let g = forward_diff(&u);
        let phi = match build_phi(&g, &budget) {
            Ok(p) => p,
            Err(e) => {
                failed.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let verdicts = orlicz_suite(&phi, g.values(), grid.dx(), &budget);
        for v in verdicts.iter().filter(|v| v.failed()) {
            failed.push(format!("seed {seed}: {}", v.name));
        }
        if !all_passed(&verdicts) && failed.is_empty() {
            failed.push(format!("seed {seed}"));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failed.is_empty() && elapsed <= Duration::from_secs(10),
        if failed.is_empty() {
            format!("10 fields, all checks hold, runtime {elapsed:.2?}")
        } else {
            format!("failed: {}", failed.join("; "))
        },
    )
}

fn criterion_8() -> Outcome {
    let dt = 1e-3;
    let mut ok = true;
    let mut lines = Vec::new();
    for w in [NonlinearW::abs(), NonlinearW::two_kink()] {
        let mut passed = 0;
        let mut worst_ratio: f64 = 0.0;
        let mut stuck = Vec::new();
        for seed in 0..10u64 {
            let u0 = random_pl(128, seed);
            let bound = 0.5 * u0.l2_distance_to_mean() / w.alpha();
            let horizon = bound + 2.0 * dt + 0.05;
            let p = EvolutionProblem::new(u0, w.clone(), 1e-6, dt, horizon).unwrap();
            let trace = match evolve(&p, 0) {
                Ok(t) => t.summary,
                Err(e) => {
                    stuck.push(format!("seed {seed}: {e}"));
                    continue;
                }
            };
            let rep = extinction_report(&trace, &w).expect("alpha > 0");
            match (rep.status, rep.t_ext_observed) {
                (ExtinctionStatus::Extinct, Some(t)) if t <= rep.t_ext_bound + 2.0 * dt => {
                    passed += 1;
                    worst_ratio = worst_ratio.max(t / rep.t_ext_bound);
                }
                _ => stuck.push(format!(
                    "seed {seed} dist {:.2e} at t={:.3} vs bound {:.3}",
                    trace.last().dist_to_mean,
                    trace.last().t,
                    rep.t_ext_bound
                )),
            }
        }
        ok &= passed == 10;
        let mut line = format!("{}: {passed}/10 within bound", w.name());
        if passed > 0 {
            line += &format!(" (max T/bound {worst_ratio:.2})");
        }
        if let Some(first) = stuck.first() {
            line += &format!(", e.g. {first}");
        }
        lines.push(line);
    }
    let ms = random_pl(64, 0);
    let p = EvolutionProblem::new(ms, NonlinearW::minimal_surface(), 1e-6, 1e-2, 0.05).unwrap();
    let na = extinction_report(&evolve(&p, 0).unwrap().summary, &NonlinearW::minimal_surface()).is_err();
    ok &= na;
    lines.push(format!(
        "minimal_surface {}",
        if na { "NotApplicable" } else { "unexpectedly applicable" }
    ));
    outcome(ok, lines.join("; "))
}

/// Plain Nelder-Mead with restarts, used as a derivative-free oracle.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], scale: f64, iters: usize) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut best = x0.to_vec();
    let mut best_f = f(x0);
    let mut step = scale;
    for _ in 0..8 {
        let mut simplex: Vec<(Vec<f64>, f64)> = (0..=d)
            .map(|k| {
                let mut x = best.clone();
                if k > 0 {
                    x[k - 1] += step;
                }
                let fx = f(&x);
                (x, fx)
            })
            .collect();
        for _ in 0..iters {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let centroid: Vec<f64> = (0..d)
                .map(|j| simplex[..d].iter().map(|s| s.0[j]).sum::<f64>() / d as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                (0..d).map(|j| centroid[j] + t * (simplex[d].0[j] - centroid[j])).collect()
            };
            let xr = along(-1.0);
            let fr = f(&xr);
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = f(&xe);
                simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[d - 1].1 {
                simplex[d] = (xr, fr);
            } else {
                let xc = if fr < simplex[d].1 { along(-0.5) } else { along(0.5) };
                let fc = f(&xc);
                if fc < simplex[d].1.min(fr) {
                    simplex[d] = (xc, fc);
                } else {
                    let x0 = simplex[0].0.clone();
                    for s in simplex.iter_mut().skip(1) {
                        for j in 0..d {
                            s.0[j] = x0[j] + 0.5 * (s.0[j] - x0[j]);
                        }
                        s.1 = f(&s.0);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best_f {
            best_f = simplex[0].1;
            best = simplex[0].0.clone();
        }
        step *= 0.1;
    }
    (best, best_f)
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let catalog = NonlinearW::catalog();
    let mut worst_fd: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(4..=48);
        let grid = PeriodicGrid::new(n).unwrap();
        let f = Field::new(grid, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let u = Field::new(grid, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let w = catalog[rng.random_range(0..catalog.len())].clone();
        let h = rng.random_range(0.01..1.0);
        let gamma = 10f64.powf(rng.random_range(-2.0..-0.5));
        let eps = rng.random_range(0.0..1e-2);
        let prob = EllipticProblem::new(f, h, w, gamma, eps).unwrap();
        let grad = prob.gradient(&u).unwrap();
        let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(1e-300);
        // the step must resolve the smoothing width gamma in slope units
        let step = 1e-2 * gamma * grid.dx();
        let at = |i: usize, t: f64| {
            let mut v = u.values().to_vec();
            v[i] += t;
            prob.objective(&Field::new(grid, v).unwrap()).unwrap()
        };
        for i in 0..n {
            let fd = (8.0 * (at(i, step) - at(i, -step)) - (at(i, 2.0 * step) - at(i, -2.0 * step))) / (12.0 * step);
            worst_fd = worst_fd.max((fd - grad[i]).abs() / scale);
        }
    }

    let mut worst_gap = f64::NEG_INFINITY;
    for trial in 0..10 {
        let n = 4 + trial % 5;
        let grid = PeriodicGrid::new(n).unwrap();
        let f = Field::new(grid, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let w = catalog[trial % catalog.len()].clone();
        let prob = EllipticProblem::new(f.clone(), 0.1, w, 1e-2, 1e-3).unwrap();
        let sol = elliptic::minimize(&prob, &f, &SolverOptions::for_grid(n)).unwrap();
        let newton = prob.objective(&sol.u).unwrap();
        let obj = |x: &[f64]| prob.objective(&Field::new(grid, x.to_vec()).unwrap()).unwrap();
        let (_, oracle) = nelder_mead(&obj, f.values(), 0.5, 4000);
        // positive when the derivative-free oracle found a lower value
        worst_gap = worst_gap.max(newton - oracle);
    }
    outcome(
        worst_fd <= 1e-6 && worst_gap <= 1e-6,
        format!("max FD relative error {worst_fd:.1e} on 50 instances, Newton minus oracle objective {worst_gap:.1e} on n <= 8"),
    )
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn criterion_10() -> Outcome {
    let configs = [
        (Mode::Elliptic, "f = plateau(1)\nw = \"abs\"\nh = 0.05\nn = 128\n"),
        (
            Mode::Evolve,
            "u0 = random_pl(8, 1)\nw = \"two_kink\"\nn = 64\nt_end = 0.05\nsweep.dt = [1e-2, 5e-3]\nsweep.seed = [1, 2]\n",
        ),
        (Mode::Orlicz, "field = random(6, 1)\nn = 128\nseed = 4\n"),
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut compared = 0;
    for (k, (mode, text)) in configs.iter().enumerate() {
        let mut trees = Vec::new();
        for (run, workers) in [(0, 1), (1, 3)] {
            let out = tmp.path().join(format!("c{k}_{run}"));
            let opts = RunOptions {
                out: out.clone(),
                workers,
                seed: None,
            };
            let summary = match scenario::run(*mode, text, &opts) {
                Ok(s) => s,
                Err(e) => return outcome(false, format!("{} config failed: {e}", mode.name())),
            };
            if let Some(e) = summary.errors().next() {
                return outcome(false, format!("{} point failed: {e}", mode.name()));
            }
            trees.push(read_tree(&out));
        }
        if trees[0] != trees[1] {
            let diff: Vec<_> = trees[0]
                .iter()
                .filter(|(k, v)| trees[1].get(*k) != Some(v))
                .map(|(k, _)| k.clone())
                .collect();
            return outcome(false, format!("{} outputs differ: {diff:?}", mode.name()));
        }
        compared += trees[0].len();
    }

    // the binary must agree with the library byte for byte
    let cfg = tmp.path().join("evolve.cfg");
    std::fs::write(&cfg, configs[1].1).unwrap();
    let out = tmp.path().join("bin");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_singflow"))
        .args(["evolve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--workers", "2"])
        .env("SINGFLOW_LOG", "quiet")
        .status()
        .unwrap();
    if !status.success() || read_tree(&out) != read_tree(&tmp.path().join("c1_0")) {
        return outcome(false, "CLI output differs from library output".into());
    }
    outcome(true, format!("{compared} files identical across runs and worker counts, CLI matches"))
}

fn main() {
    let mut sh = Shared::default();
    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "plateau extinction time", criterion_1(&mut sh)),
        (2, "elliptic plateau shrinkage", criterion_2(&mut sh)),
        (3, "modulus monotone along trajectories", criterion_3(&mut sh)),
        (4, "per-step energy dissipation", criterion_4(&sh)),
        (5, "dual bound and inclusion", criterion_5(&sh)),
        (6, "mean conservation", criterion_6(&sh)),
        (7, "Orlicz construction", criterion_7()),
        (8, "extinction bound", criterion_8()),
        (9, "solver correctness", criterion_9()),
        (10, "determinism", criterion_10()),
    ];
    let mut failed = 0;
    for (k, name, o) in &results {
        println!(
            "{} criterion {k:>2} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", results.len());
        std::process::exit(1);
    }
    println!("all {} criteria pass", results.len());
}
