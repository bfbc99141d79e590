//! Superlinear convex moduli `Φ` adapted to a given integrable function.
//!
//! Construction, for samples `g` of an integrable function:
//!
//! 1. **Levels.** For a budget `b_1, b_2, …` pick `t_k` minimal with tail mass
//!    `∫_{|g|>t_k} |g| ≤ b_k`, then push the levels apart so they are strictly
//!    increasing. `Φ̃` is the even function with `Φ̃(0) = 0` and slope
//!    `slopes[k]` on `[t_k, t_{k+1})`, zero slope before `t_1`. Beyond the
//!    stored levels the last gap and the last slope increment repeat, so `Φ̃`
//!    grows quadratically and `Φ̃(t)/t → ∞`.
//! 2. **Shift.** `Φ̂_δ(p) = Φ̃(|p| - δ)` for `|p| > δ`, `Φ̃(0)` otherwise.
//! 3. **Mollify.** `Φ = Φ̂_δ * φ_δ` with the kernel from [`crate::kernel`].
//!
//! Each level contributes a term `c (|p| - b)_+` to `Φ̂_δ`, whose mollification
//! has the same closed form as a smoothed kink, so `Φ`, `Φ'` and `Φ''` are
//! evaluated exactly without quadrature.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::DualField;
use crate::kernel;

pub const DEFAULT_DELTA: f64 = 0.5;
pub const DEFAULT_LEVELS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrliczError {
    #[error("cannot build a modulus from empty data")]
    EmptyData,
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("budget needs at least 2 entries, got {0}")]
    BudgetTooShort(usize),
    #[error("budget entries must be positive and finite (entry {0})")]
    InvalidBudget(usize),
    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("invalid modulus record: {0}")]
    InvalidRecord(String),
    #[error("sample count {got} does not match grid size {expected}")]
    SizeMismatch { expected: usize, got: usize },
}

/// `2^{-k}` for `k = 1..=len`.
pub fn default_budget(len: usize) -> Vec<f64> {
    (1..=len).map(|k| 0.5f64.powi(k as i32)).collect()
}

/// Serialized form of [`OrliczPhi`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PhiRecord {
    levels: Vec<f64>,
    slopes: Vec<f64>,
    delta: f64,
}

/// The modulus `Φ`. Serializes to `{levels, slopes, delta}`; every other
/// quantity is derived from those three fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhiRecord", into = "PhiRecord")]
pub struct OrliczPhi {
    levels: Vec<f64>,
    slopes: Vec<f64>,
    delta: f64,
    /// Slope increments at each stored level.
    weights: Vec<f64>,
    ext_gap: f64,
    ext_increment: f64,
}

impl TryFrom<PhiRecord> for OrliczPhi {
    type Error = OrliczError;

    fn try_from(r: PhiRecord) -> Result<Self, Self::Error> {
        OrliczPhi::from_parts(r.levels, r.slopes, r.delta)
    }
}

impl From<OrliczPhi> for PhiRecord {
    fn from(p: OrliczPhi) -> Self {
        PhiRecord {
            levels: p.levels,
            slopes: p.slopes,
            delta: p.delta,
        }
    }
}

impl OrliczPhi {
    pub fn from_parts(levels: Vec<f64>, slopes: Vec<f64>, delta: f64) -> Result<Self, OrliczError> {
        let bad = |m: &str| Err(OrliczError::InvalidRecord(m.to_string()));
        if !(delta > 0.0 && delta < 1.0) {
            return Err(OrliczError::InvalidDelta(delta));
        }
        if levels.len() < 2 || levels.len() != slopes.len() {
            return bad("need at least two levels and one slope per level");
        }
        if levels.iter().chain(&slopes).any(|v| !v.is_finite()) {
            return bad("levels and slopes must be finite");
        }
        if levels[0] <= 0.0 || levels.windows(2).any(|w| w[1] <= w[0]) {
            return bad("levels must be positive and strictly increasing");
        }
        if slopes[0] <= 0.0 || slopes.windows(2).any(|w| w[1] <= w[0]) {
            return bad("slopes must be positive and strictly increasing");
        }
        let mut weights = Vec::with_capacity(slopes.len());
        let mut prev = 0.0;
        for &s in &slopes {
            weights.push(s - prev);
            prev = s;
        }
        let k = levels.len();
        let ext_gap = levels[k - 1] - levels[k - 2];
        let ext_increment = slopes[k - 1] - slopes[k - 2];
        Ok(Self {
            levels,
            slopes,
            delta,
            weights,
            ext_gap,
            ext_increment,
        })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `C_0 = φ(0)/δ`.
    pub fn c0(&self) -> f64 {
        kernel::peak() / self.delta
    }

    /// `C_1 = C_0·max{1, Φ̃(0)}`.
    pub fn c1(&self) -> f64 {
        self.c0() * self.tilde(0.0).max(1.0)
    }

    /// Level `k` (0-based) including the periodic extension past the stored
    /// levels: `(t_k, slope increment at t_k)`.
    fn level(&self, k: usize) -> (f64, f64) {
        if k < self.levels.len() {
            (self.levels[k], self.weights[k])
        } else {
            let j = (k + 1 - self.levels.len()) as f64;
            (*self.levels.last().unwrap() + j * self.ext_gap, self.ext_increment)
        }
    }

    /// Number of extension levels `t_K + j·gap` (j ≥ 1) with `t_K + j·gap ≤ x`.
    fn extension_count_below(&self, x: f64) -> usize {
        let last = *self.levels.last().unwrap();
        if x < last + self.ext_gap {
            return 0;
        }
        let mut m = ((x - last) / self.ext_gap).floor() as usize;
        // guard against rounding in the division
        while m > 0 && last + m as f64 * self.ext_gap > x {
            m -= 1;
        }
        while last + (m + 1) as f64 * self.ext_gap <= x {
            m += 1;
        }
        m
    }

    /// The unsmoothed, unshifted modulus `Φ̃(p) = Σ_k c_k (|p| - t_k)_+`.
    pub fn tilde(&self, p: f64) -> f64 {
        let x = p.abs();
        let mut v = 0.0;
        for (t, c) in self.levels.iter().zip(&self.weights) {
            if *t < x {
                v += c * (x - t);
            }
        }
        let m = self.extension_count_below(x) as f64;
        if m > 0.0 {
            let last = *self.levels.last().unwrap();
            v += self.ext_increment * (m * (x - last) - self.ext_gap * m * (m + 1.0) / 2.0);
        }
        v
    }

    /// The shifted modulus `Φ̂_δ`.
    pub fn shifted(&self, p: f64) -> f64 {
        if p.abs() <= self.delta {
            self.tilde(0.0)
        } else {
            self.tilde(p.abs() - self.delta)
        }
    }

    /// `(Φ, Φ', Φ'')` at `p`.
    pub fn eval_all(&self, p: f64) -> (f64, f64, f64) {
        let d = self.delta;
        let x = p.abs();
        let sign = if p < 0.0 { -1.0 } else { 1.0 };
        let mut v = self.tilde(0.0);
        let mut d1 = 0.0;
        let mut d2 = 0.0;

        // Terms whose kink b = δ + t satisfies b ≤ x - δ are exactly linear
        // on the kernel support; sum the extension part of those in closed form.
        let full_ext = self.extension_count_below(x - 2.0 * d);
        let stored = self.levels.len();
        let term = |b: f64, c: f64| {
            let (sm, sp) = ((x - b) / d, (x + b) / d);
            (
                c * (0.5 * d * (kernel::abs_conv(sm) + kernel::abs_conv(sp)) - b),
                c * 0.5 * (kernel::abs_conv_d1(sm) + kernel::abs_conv_d1(sp)),
                c * 0.5 * (kernel::abs_conv_d2(sm) + kernel::abs_conv_d2(sp)) / d,
            )
        };
        let mut add = |(a, b, c): (f64, f64, f64)| {
            v += a;
            d1 += b;
            d2 += c;
        };
        for k in 0..stored {
            let (t, c) = self.level(k);
            let b = d + t;
            if b < x + d {
                add(term(b, c));
            }
        }
        if full_ext > 0 {
            let m = full_ext as f64;
            let base = d + *self.levels.last().unwrap();
            let inc = self.ext_increment;
            add((inc * (m * (x - base) - self.ext_gap * m * (m + 1.0) / 2.0), inc * m, 0.0));
        }
        let mut k = stored + full_ext;
        loop {
            let (t, c) = self.level(k);
            let b = d + t;
            if b >= x + d {
                break;
            }
            add(term(b, c));
            k += 1;
        }
        (v, sign * d1, d2)
    }

    /// `Φ(p)`.
    pub fn eval(&self, p: f64) -> f64 {
        self.eval_all(p).0
    }

    pub fn deriv(&self, p: f64) -> f64 {
        self.eval_all(p).1
    }

    /// Right-hand side of the comparison `Φ(p) ≤ C_0 Φ̃(p) + C_1`.
    pub fn comparison_bound(&self, p: f64) -> f64 {
        self.c0() * self.tilde(p) + self.c1()
    }

    /// JSON record `{levels, slopes, delta}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, OrliczError> {
        serde_json::from_str(text).map_err(|e| OrliczError::InvalidRecord(e.to_string()))
    }
}

/// Tail mass `dx·Σ_{|g_i| > t} |g_i|`.
pub fn tail_mass(samples: &[f64], dx: f64, t: f64) -> f64 {
    dx * samples.iter().map(|v| v.abs()).filter(|&a| a > t).sum::<f64>()
}

/// Builds `Φ` for the interface samples `g` with the given budget and the
/// default shift radius.
pub fn build_phi(g: &DualField, budget: &[f64]) -> Result<OrliczPhi, OrliczError> {
    build_phi_from_samples(g.values(), g.grid().dx(), budget, DEFAULT_DELTA)
}

/// Same as [`build_phi`] on raw samples with quadrature weight `dx`.
pub fn build_phi_from_samples(
    samples: &[f64],
    dx: f64,
    budget: &[f64],
    delta: f64,
) -> Result<OrliczPhi, OrliczError> {
    if samples.is_empty() {
        return Err(OrliczError::EmptyData);
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(OrliczError::NonFinite(i));
    }
    if budget.len() < 2 {
        return Err(OrliczError::BudgetTooShort(budget.len()));
    }
    if let Some(i) = budget.iter().position(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(OrliczError::InvalidBudget(i));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(OrliczError::InvalidDelta(delta));
    }

    let mut sorted: Vec<f64> = samples.iter().map(|v| v.abs()).collect();
    sorted.sort_by(f64::total_cmp);
    // suffix[j] = dx·Σ_{i ≥ j} sorted[i]
    let mut suffix = vec![0.0; sorted.len() + 1];
    for j in (0..sorted.len()).rev() {
        suffix[j] = suffix[j + 1] + dx * sorted[j];
    }
    let tail_at = |t: f64| -> f64 {
        let first_above = sorted.partition_point(|&v| v <= t);
        suffix[first_above]
    };
    let minimal_level = |b: f64| -> f64 {
        if tail_at(0.0) <= b {
            return 0.0;
        }
        // tail is nonincreasing in t and jumps only at sample values
        let idx = sorted.partition_point(|&v| tail_at(v) > b);
        sorted[idx.min(sorted.len() - 1)]
    };

    let max_abs = *sorted.last().unwrap();
    let k = budget.len();
    let gap_min = delta.max(max_abs / k as f64);
    let mut levels = Vec::with_capacity(k);
    let mut prev = 0.0;
    for &b in budget {
        let t = minimal_level(b).max(prev + gap_min);
        levels.push(t);
        prev = t;
    }
    let slopes: Vec<f64> = (1..=k).map(|s| s as f64).collect();
    OrliczPhi::from_parts(levels, slopes, delta)
}

/// `G(g) = dx·Σ Φ(g_i)`.
pub fn modulus_g(phi: &OrliczPhi, g: &DualField) -> f64 {
    modulus_of_samples(phi, g.values(), g.grid().dx())
}

pub fn modulus_of_samples(phi: &OrliczPhi, samples: &[f64], dx: f64) -> f64 {
    dx * samples.iter().map(|&v| phi.eval(v)).sum::<f64>()
}

/// Outcome of the finite-dimensional lower-semicontinuity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LscVerdict {
    /// `min` of `G(g_n)` over the second half of the sequence.
    pub liminf: f64,
    pub limit_value: f64,
    /// Largest `|⟨g_n - g, ψ⟩|` over the test family for the last element.
    pub weak_gap: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Test family for the discrete weak topology: constants and the first four
/// Fourier modes, sampled at interfaces.
fn weak_test_family(n: usize) -> Vec<Vec<f64>> {
    let dx = 1.0 / n as f64;
    let mut fam = vec![vec![1.0; n]];
    for m in 1..=4 {
        let w = 2.0 * std::f64::consts::PI * m as f64;
        fam.push((0..n).map(|i| (w * (i as f64 + 0.5) * dx).sin()).collect());
        fam.push((0..n).map(|i| (w * (i as f64 + 0.5) * dx).cos()).collect());
    }
    fam
}

/// Checks `liminf G(g_n) ≥ G(g) - tol` along a sequence converging weakly.
pub fn lsc_check(
    phi: &OrliczPhi,
    sequence: &[DualField],
    limit: &DualField,
    tol: f64,
) -> Result<LscVerdict, OrliczError> {
    if sequence.is_empty() {
        return Err(OrliczError::EmptyData);
    }
    let n = limit.len();
    if let Some(bad) = sequence.iter().find(|g| g.len() != n) {
        return Err(OrliczError::SizeMismatch {
            expected: n,
            got: bad.len(),
        });
    }
    let values: Vec<f64> = sequence.iter().map(|g| modulus_g(phi, g)).collect();
    let liminf = values[values.len() / 2..]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let limit_value = modulus_g(phi, limit);
    let last = sequence.last().unwrap();
    let dx = limit.grid().dx();
    let weak_gap = weak_test_family(n)
        .iter()
        .map(|psi| {
            dx * last
                .values()
                .iter()
                .zip(limit.values())
                .zip(psi)
                .map(|((a, b), w)| (a - b) * w)
                .sum::<f64>()
        })
        .fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(LscVerdict {
        liminf,
        limit_value,
        weak_gap,
        tolerance: tol,
        passed: liminf >= limit_value - tol,
    })
}
