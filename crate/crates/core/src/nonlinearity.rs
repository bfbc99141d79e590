//! Convex, even, linear-growth integrands `W` and their smoothings `W^γ`.
//!
//! Every supported integrand is a sum of piecewise-linear "kink" terms and an
//! optional multiple of `√(1+p²)`:
//!
//! ```text
//! W(p) = Σ_k w_k (|p - b_k| + |p + b_k|)/2  +  m·√(1+p²)
//! ```
//!
//! with `b_k ≥ 0`, `w_k > 0`, `m ≥ 0`. The recession slope is
//! `W^∞ = Σ w_k + m`. Smoothing convolves with the scaled bump from
//! [`crate::kernel`]; the kink terms have closed forms and the smooth term
//! uses the kernel-weighted quadrature.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{forward_diff_slice, Field};
use crate::kernel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error("smoothing radius must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("viscosity weight must be nonnegative and finite, got {0}")]
    InvalidViscosity(f64),
    #[error("unknown nonlinearity `{0}` (expected abs, two_kink, minimal_surface, abs_plus_ms or custom)")]
    UnknownKind(String),
    #[error("invalid custom nonlinearity: {0}")]
    InvalidCustom(String),
    #[error("alpha must be nonnegative and finite, got {0}")]
    InvalidAlpha(f64),
}

/// Catalog entry for an integrand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WKind {
    /// `|p|`
    Abs,
    /// `|p+1| + |p-1|`
    TwoKink,
    /// `√(1+p²)`
    MinimalSurface,
    /// `|p| + √(1+p²)`
    AbsPlusMs,
    /// Piecewise-linear even function given on `p ≥ 0` by `(breakpoint,
    /// slope)` pairs: the slope is `s_j` on `(b_j, b_{j+1})` and zero on
    /// `[0, b_1)`. `W(0) = 0`.
    Custom { pairs: Vec<(f64, f64)> },
}

impl WKind {
    pub fn name(&self) -> &'static str {
        match self {
            WKind::Abs => "abs",
            WKind::TwoKink => "two_kink",
            WKind::MinimalSurface => "minimal_surface",
            WKind::AbsPlusMs => "abs_plus_ms",
            WKind::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Kink {
    at: f64,
    weight: f64,
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }

    /// Distance from `v` to the interval (zero inside).
    pub fn distance(&self, v: f64) -> f64 {
        if v < self.lo {
            self.lo - v
        } else if v > self.hi {
            v - self.hi
        } else {
            0.0
        }
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }
}

/// Left and right derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSided {
    pub left: f64,
    pub right: f64,
}

/// Anything that can be integrated over a gradient field.
pub trait Integrand {
    fn value(&self, p: f64) -> f64;
}

/// Discrete energy `dx·Σ W(p_i)` with `p` the forward difference of `u`.
pub fn energy<I: Integrand + ?Sized>(w: &I, u: &Field) -> f64 {
    let dx = u.grid().dx();
    energy_of_gradient(w, &forward_diff_slice(u.values(), dx), dx)
}

pub(crate) fn energy_of_gradient<I: Integrand + ?Sized>(w: &I, p: &[f64], dx: f64) -> f64 {
    dx * p.iter().map(|&q| w.value(q)).sum::<f64>()
}

/// A convex, even integrand with linear growth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WRepr", into = "WRepr")]
pub struct NonlinearW {
    kind: WKind,
    kinks: Vec<Kink>,
    smooth_weight: f64,
    offset: f64,
    alpha: f64,
    w_inf: f64,
}

/// Serialized form: the catalog entry plus the stored coercivity constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct WRepr {
    #[serde(flatten)]
    kind: WKind,
    alpha: f64,
}

impl TryFrom<WRepr> for NonlinearW {
    type Error = NonlinearityError;

    fn try_from(repr: WRepr) -> Result<Self, Self::Error> {
        NonlinearW::from_kind(repr.kind)?.with_alpha(repr.alpha)
    }
}

impl From<NonlinearW> for WRepr {
    fn from(w: NonlinearW) -> Self {
        WRepr {
            kind: w.kind,
            alpha: w.alpha,
        }
    }
}

impl NonlinearW {
    pub fn abs() -> Self {
        Self::from_kind(WKind::Abs).expect("catalog entry")
    }

    pub fn two_kink() -> Self {
        Self::from_kind(WKind::TwoKink).expect("catalog entry")
    }

    pub fn minimal_surface() -> Self {
        Self::from_kind(WKind::MinimalSurface).expect("catalog entry")
    }

    pub fn abs_plus_ms() -> Self {
        Self::from_kind(WKind::AbsPlusMs).expect("catalog entry")
    }

    /// The four catalog integrands.
    pub fn catalog() -> Vec<NonlinearW> {
        vec![
            Self::abs(),
            Self::two_kink(),
            Self::minimal_surface(),
            Self::abs_plus_ms(),
        ]
    }

    pub fn by_name(name: &str) -> Result<Self, NonlinearityError> {
        match name {
            "abs" => Ok(Self::abs()),
            "two_kink" => Ok(Self::two_kink()),
            "minimal_surface" => Ok(Self::minimal_surface()),
            "abs_plus_ms" => Ok(Self::abs_plus_ms()),
            other => Err(NonlinearityError::UnknownKind(other.to_string())),
        }
    }

    pub fn custom(pairs: Vec<(f64, f64)>) -> Result<Self, NonlinearityError> {
        Self::from_kind(WKind::Custom { pairs })
    }

    pub fn from_kind(kind: WKind) -> Result<Self, NonlinearityError> {
        let (kinks, smooth_weight, offset, alpha) = match &kind {
            WKind::Abs => (vec![Kink { at: 0.0, weight: 1.0 }], 0.0, 0.0, 1.0),
            WKind::TwoKink => (vec![Kink { at: 1.0, weight: 2.0 }], 0.0, 0.0, 2.0),
            WKind::MinimalSurface => (Vec::new(), 1.0, 0.0, 0.0),
            WKind::AbsPlusMs => (vec![Kink { at: 0.0, weight: 1.0 }], 1.0, 0.0, 1.0),
            WKind::Custom { pairs } => {
                let (kinks, offset, alpha) = custom_kinks(pairs)?;
                (kinks, 0.0, offset, alpha)
            }
        };
        let w_inf = kinks.iter().map(|k| k.weight).sum::<f64>() + smooth_weight;
        Ok(Self {
            kind,
            kinks,
            smooth_weight,
            offset,
            alpha,
            w_inf,
        })
    }

    /// Overrides the stored coercivity constant.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self, NonlinearityError> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(NonlinearityError::InvalidAlpha(alpha));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn kind(&self) -> &WKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Coercivity constant with `W(p) ≥ α|p|` (zero when none is claimed).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Recession slope `W^∞`.
    pub fn w_inf(&self) -> f64 {
        self.w_inf
    }

    /// True when there are no kinks.
    pub fn is_smooth(&self) -> bool {
        self.kinks.is_empty()
    }

    /// All kink locations, both signs, ascending.
    pub fn kink_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .kinks
            .iter()
            .flat_map(|k| if k.at == 0.0 { vec![0.0] } else { vec![-k.at, k.at] })
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    pub fn eval(&self, p: f64) -> f64 {
        let mut v = self.offset;
        for k in &self.kinks {
            v += k.weight * kink_term(p, k.at);
        }
        if self.smooth_weight != 0.0 {
            v += self.smooth_weight * (1.0 + p * p).sqrt();
        }
        v
    }

    fn smooth_slope(&self, p: f64) -> f64 {
        if self.smooth_weight == 0.0 {
            0.0
        } else {
            self.smooth_weight * p / (1.0 + p * p).sqrt()
        }
    }

    pub fn right_deriv(&self, p: f64) -> f64 {
        let sgn = |x: f64| if x >= 0.0 { 1.0 } else { -1.0 };
        let mut d = self.smooth_slope(p);
        for k in &self.kinks {
            d += k.weight * 0.5 * (sgn(p - k.at) + sgn(p + k.at));
        }
        d
    }

    pub fn left_deriv(&self, p: f64) -> f64 {
        let sgn = |x: f64| if x > 0.0 { 1.0 } else { -1.0 };
        let mut d = self.smooth_slope(p);
        for k in &self.kinks {
            d += k.weight * 0.5 * (sgn(p - k.at) + sgn(p + k.at));
        }
        d
    }

    pub fn onesided(&self, p: f64) -> OneSided {
        OneSided {
            left: self.left_deriv(p),
            right: self.right_deriv(p),
        }
    }

    /// `∂W(p) = [W_p^-(p), W_p^+(p)]`.
    pub fn subdiff(&self, p: f64) -> Interval {
        Interval {
            lo: self.left_deriv(p),
            hi: self.right_deriv(p),
        }
    }

    /// Distance from `(p, ξ)` to the graph of `∂W`, measured in the max-norm
    /// of the `(p, ξ)` plane: the smallest `r` such that some `q` with
    /// `|q - p| ≤ r` has `dist(ξ, ∂W(q)) ≤ r`.
    ///
    /// Candidates are `q = p` and the kink locations; this gives an upper
    /// bound that is exact for purely piecewise-linear `W`.
    pub fn graph_distance(&self, p: f64, xi: f64) -> f64 {
        let mut best = self.subdiff(p).distance(xi);
        for q in self.kink_points() {
            let r = (q - p).abs().max(self.subdiff(q).distance(xi));
            best = best.min(r);
        }
        best
    }

    /// `W^γ = W * ρ_γ`.
    pub fn smooth(&self, gamma: f64) -> Result<RegularizedW, NonlinearityError> {
        RegularizedW::new(self.clone(), gamma, 0.0)
    }
}

impl Integrand for NonlinearW {
    fn value(&self, p: f64) -> f64 {
        self.eval(p)
    }
}

/// `(|p - b| + |p + b|)/2`, or `|p|` at `b = 0`.
fn kink_term(p: f64, at: f64) -> f64 {
    if at == 0.0 {
        p.abs()
    } else {
        0.5 * ((p - at).abs() + (p + at).abs())
    }
}

fn custom_kinks(pairs: &[(f64, f64)]) -> Result<(Vec<Kink>, f64, f64), NonlinearityError> {
    let bad = |m: &str| Err(NonlinearityError::InvalidCustom(m.to_string()));
    if pairs.is_empty() {
        return bad("at least one (breakpoint, slope) pair is required");
    }
    let mut kinks = Vec::new();
    let mut prev_b = -1.0;
    let mut prev_s = 0.0;
    for &(b, s) in pairs {
        if !(b.is_finite() && s.is_finite()) {
            return bad("breakpoints and slopes must be finite");
        }
        if b < 0.0 {
            return bad("breakpoints must be nonnegative; W is the even extension, so asymmetric recession slopes cannot be expressed");
        }
        if b <= prev_b {
            return bad("breakpoints must be strictly increasing");
        }
        if s < prev_s {
            return bad("slopes must be nondecreasing (convexity)");
        }
        if s > prev_s {
            kinks.push(Kink {
                at: b,
                weight: s - prev_s,
            });
        }
        prev_b = b;
        prev_s = s;
    }
    if prev_s <= 0.0 {
        return bad("the last slope (recession slope) must be positive");
    }
    // Kink terms are `b_k` at the origin; shift so that W(0) = 0.
    let offset = -kinks.iter().map(|k| k.weight * k.at).sum::<f64>();
    let alpha = if pairs[0].0 == 0.0 { pairs[0].1 } else { 0.0 };
    Ok((kinks, offset, alpha))
}

/// `W^γ + (viscosity/2)·p²`, the C² integrand the solvers work with.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedW {
    base: NonlinearW,
    gamma: f64,
    viscosity: f64,
}

impl RegularizedW {
    pub fn new(base: NonlinearW, gamma: f64, viscosity: f64) -> Result<Self, NonlinearityError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(NonlinearityError::NonPositiveGamma(gamma));
        }
        if !(viscosity >= 0.0 && viscosity.is_finite()) {
            return Err(NonlinearityError::InvalidViscosity(viscosity));
        }
        Ok(Self {
            base,
            gamma,
            viscosity,
        })
    }

    pub fn with_viscosity(mut self, viscosity: f64) -> Result<Self, NonlinearityError> {
        if !(viscosity >= 0.0 && viscosity.is_finite()) {
            return Err(NonlinearityError::InvalidViscosity(viscosity));
        }
        self.viscosity = viscosity;
        Ok(self)
    }

    pub fn base(&self) -> &NonlinearW {
        &self.base
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn viscosity(&self) -> f64 {
        self.viscosity
    }

    /// Upper bound on `W^γ - W`: `35γ/128` per unit of kink weight plus
    /// `γ²/18` per unit of the `√(1+p²)` term.
    pub fn jensen_gap_bound(&self) -> f64 {
        let kink_mass: f64 = self.base.kinks.iter().map(|k| k.weight).sum();
        kink_mass * kernel::FIRST_ABS_MOMENT * self.gamma
            + self.base.smooth_weight * self.gamma * self.gamma / 18.0
    }

    /// Smoothed integrand without the viscous part.
    pub fn eval_smoothed(&self, p: f64) -> f64 {
        let g = self.gamma;
        let abs_g = |x: f64| if x.abs() >= g { x.abs() } else { g * kernel::abs_conv(x / g) };
        let mut v = self.base.offset;
        for k in &self.base.kinks {
            v += k.weight
                * if k.at == 0.0 {
                    abs_g(p)
                } else {
                    0.5 * (abs_g(p - k.at) + abs_g(p + k.at))
                };
        }
        if self.base.smooth_weight != 0.0 {
            let q: f64 = kernel::quadrature()
                .iter()
                .map(|&(s, w)| {
                    let x = p - g * s;
                    w * (1.0 + x * x).sqrt()
                })
                .sum();
            v += self.base.smooth_weight * q;
        }
        v
    }

    pub fn eval(&self, p: f64) -> f64 {
        self.eval_smoothed(p) + 0.5 * self.viscosity * p * p
    }

    /// First derivative, viscous part included.
    pub fn d1(&self, p: f64) -> f64 {
        self.derivatives(p).0
    }

    /// Second derivative, viscous part included.
    pub fn d2(&self, p: f64) -> f64 {
        self.derivatives(p).1
    }

    /// `(W^γ_p + ν p, W^γ_pp + ν)` in one pass.
    pub fn derivatives(&self, p: f64) -> (f64, f64) {
        let g = self.gamma;
        let mut d1 = self.viscosity * p;
        let mut d2 = self.viscosity;
        for k in &self.base.kinks {
            if k.at == 0.0 {
                let s = p / g;
                d1 += k.weight * kernel::abs_conv_d1(s);
                d2 += k.weight * kernel::abs_conv_d2(s) / g;
            } else {
                let (sm, sp) = ((p - k.at) / g, (p + k.at) / g);
                d1 += 0.5 * k.weight * (kernel::abs_conv_d1(sm) + kernel::abs_conv_d1(sp));
                d2 += 0.5 * k.weight * (kernel::abs_conv_d2(sm) + kernel::abs_conv_d2(sp)) / g;
            }
        }
        let m = self.base.smooth_weight;
        if m != 0.0 {
            for &(s, w) in kernel::quadrature() {
                let x = p - g * s;
                let r = (1.0 + x * x).sqrt();
                d1 += m * w * x / r;
                d2 += m * w / (r * r * r);
            }
        }
        (d1, d2)
    }
}

impl Integrand for RegularizedW {
    fn value(&self, p: f64) -> f64 {
        self.eval(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use proptest::prelude::*;

    fn all_kinds() -> Vec<NonlinearW> {
        let mut v = NonlinearW::catalog();
        v.push(NonlinearW::custom(vec![(0.0, 0.5), (0.5, 1.0), (2.0, 3.0)]).unwrap());
        v
    }

    #[test]
    fn subdifferential_examples() {
        let abs = NonlinearW::abs();
        assert_eq!(abs.subdiff(0.0), Interval { lo: -1.0, hi: 1.0 });

        let ms = NonlinearW::minimal_surface();
        let d = ms.subdiff(1.0);
        assert!(d.is_singleton());
        assert!((d.lo - 1.0 / 2f64.sqrt()).abs() < 1e-15);

        // sum rule; cross-check with one-sided finite differences
        let tk = NonlinearW::two_kink();
        assert_eq!(tk.subdiff(1.0), Interval { lo: 0.0, hi: 2.0 });
        let h = 1e-7;
        let right = (tk.eval(1.0 + h) - tk.eval(1.0)) / h;
        let left = (tk.eval(1.0) - tk.eval(1.0 - h)) / h;
        assert!((right - 2.0).abs() < 1e-6 && left.abs() < 1e-6);
    }

    #[test]
    fn catalog_constants() {
        let expect = [("abs", 1.0, 1.0), ("two_kink", 2.0, 2.0), ("minimal_surface", 0.0, 1.0), ("abs_plus_ms", 1.0, 2.0)];
        for (w, (name, alpha, w_inf)) in NonlinearW::catalog().iter().zip(expect) {
            assert_eq!(w.name(), name);
            assert_eq!(w.alpha(), alpha);
            assert_eq!(w.w_inf(), w_inf);
        }
        assert!(matches!(NonlinearW::by_name("huber"), Err(NonlinearityError::UnknownKind(_))));
    }

    #[test]
    fn custom_validation() {
        let w = NonlinearW::custom(vec![(0.0, 1.0), (1.0, 3.0)]).unwrap();
        assert_eq!(w.eval(0.0), 0.0);
        assert!((w.eval(2.0) - 4.0).abs() < 1e-15);
        assert_eq!(w.w_inf(), 3.0);
        assert_eq!(w.alpha(), 1.0);
        assert!(NonlinearW::custom(vec![(-1.0, 1.0)]).is_err());
        assert!(NonlinearW::custom(vec![(0.0, 2.0), (1.0, 1.0)]).is_err());
        assert!(NonlinearW::custom(vec![(0.0, 0.0)]).is_err());
        assert!(NonlinearW::custom(vec![]).is_err());
        // same shape as the catalog two-kink up to a constant
        let c = NonlinearW::custom(vec![(1.0, 2.0)]).unwrap();
        for p in [-3.0, -0.5, 0.0, 0.7, 1.5] {
            assert!((c.eval(p) + 2.0 - NonlinearW::two_kink().eval(p)).abs() < 1e-14);
        }
    }

    #[test]
    fn serde_round_trip() {
        for w in all_kinds() {
            let s = serde_json::to_string(&w).unwrap();
            let back: NonlinearW = serde_json::from_str(&s).unwrap();
            assert_eq!(back, w);
        }
        let s = serde_json::to_string(&NonlinearW::abs()).unwrap();
        assert_eq!(s, r#"{"kind":"abs","alpha":1.0}"#);
    }

    #[test]
    fn smoothed_abs_closed_form() {
        let g = 0.1;
        let r = NonlinearW::abs().smooth(g).unwrap();
        assert!((r.eval(0.0) - kernel::FIRST_ABS_MOMENT * g).abs() < 1e-16);
        assert!(r.eval(0.0) > 0.0);
        assert_eq!(r.d1(0.0), 0.0);
        for p in [0.1, 0.25, -0.3, 5.0] {
            assert!((r.eval(p) - p.abs()).abs() < 1e-15);
            assert_eq!(r.d1(p), p.signum());
        }
        // quadrature oracle for the convolution at interior points
        for p in [0.03, -0.07] {
            let m = 20000;
            let hq = 2.0 / m as f64;
            let oracle: f64 = (0..m)
                .map(|i| {
                    let s = -1.0 + (i as f64 + 0.5) * hq;
                    (p - g * s).abs() * kernel::density(s) * hq
                })
                .sum();
            assert!((r.eval(p) - oracle).abs() < 1e-9);
        }
        assert!(matches!(NonlinearW::abs().smooth(0.0), Err(NonlinearityError::NonPositiveGamma(_))));
        assert!(NonlinearW::abs().smooth(-1.0).is_err());
    }

    #[test]
    fn smoothed_derivatives_match_finite_differences() {
        for w in all_kinds() {
            let r = w.smooth(0.3).unwrap().with_viscosity(0.01).unwrap();
            for &p in &[-2.1, -0.95, -0.2, 0.0, 0.11, 0.8, 1.05, 3.0] {
                let h = 1e-5;
                let fd1 = (r.eval(p + h) - r.eval(p - h)) / (2.0 * h);
                let fd2 = (r.d1(p + h) - r.d1(p - h)) / (2.0 * h);
                assert!((r.d1(p) - fd1).abs() < 1e-7, "{} p={p}", w.name());
                assert!((r.d2(p) - fd2).abs() < 1e-5, "{} p={p}", w.name());
            }
        }
    }

    #[test]
    fn energy_examples() {
        let g = PeriodicGrid::new(32).unwrap();
        let c = Field::constant(g, 1.3);
        for w in all_kinds() {
            assert!((energy(&w, &c) - w.eval(0.0)).abs() < 1e-14);
        }
        let a = 0.6;
        let u = Field::from_fn(g, |x| if x < 0.5 { a } else { -a });
        assert!((energy(&NonlinearW::abs(), &u) - 4.0 * a).abs() < 1e-13);
        let zero = Field::constant(g, 0.0);
        assert!((energy(&NonlinearW::minimal_surface(), &zero) - 1.0).abs() < 1e-14);

        let r = NonlinearW::abs().smooth(1e-3).unwrap().with_viscosity(0.5).unwrap();
        let p = crate::grid::forward_diff(&u);
        let visc: f64 = 0.25 * g.dx() * p.values().iter().map(|q| q * q).sum::<f64>();
        assert!((energy(&r, &u) - (4.0 * a + visc + g.dx() * 30.0 * r.eval_smoothed(0.0))).abs() < 1e-9);
    }

    #[test]
    fn smoothed_derivative_converges_at_smooth_points() {
        for w in all_kinds() {
            let pts = [-3.3, -1.7, -0.6, -0.35, 0.2, 0.45, 0.77, 1.3, 2.6, 4.1];
            for &gamma in &[1e-1, 1e-2, 1e-3] {
                let r = w.smooth(gamma).unwrap();
                for &p in &pts {
                    let d = w.subdiff(p);
                    assert!(d.is_singleton());
                    assert!((r.d1(p) - d.lo).abs() <= 10.0 * gamma, "{} p={p} γ={gamma}", w.name());
                }
            }
        }
    }

    #[test]
    fn graph_distance_near_kinks() {
        let abs = NonlinearW::abs();
        // tiny slope with a mid-range flux sits next to the vertical segment at 0
        assert!(abs.graph_distance(1e-7, 0.3) <= 1e-7);
        assert_eq!(abs.graph_distance(2.0, 1.0), 0.0);
        assert!((abs.graph_distance(2.0, 0.5) - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn even_convex_and_bounded_slopes(p in -50.0f64..50.0, q in -50.0f64..50.0, idx in 0usize..5) {
            let w = &all_kinds()[idx];
            prop_assert!((w.eval(p) - w.eval(-p)).abs() <= 1e-12 * (1.0 + w.eval(p).abs()));
            let mid = w.eval(0.5 * (p + q));
            prop_assert!(mid <= 0.5 * (w.eval(p) + w.eval(q)) + 1e-12 * (1.0 + mid.abs()));
            let d = w.subdiff(p);
            prop_assert!(d.lo <= d.hi);
            let bound = Interval { lo: -w.w_inf(), hi: w.w_inf() };
            prop_assert!(d.is_subset_of(&bound));
            prop_assert!(w.subdiff(0.0).contains(0.0));
        }

        #[test]
        fn jensen_ordering_and_gap(p in -20.0f64..20.0, gamma in 1e-4f64..0.5, idx in 0usize..5) {
            let w = &all_kinds()[idx];
            let r = w.smooth(gamma).unwrap();
            let diff = r.eval(p) - w.eval(p);
            prop_assert!(diff >= -1e-12, "W^γ < W by {}", -diff);
            prop_assert!(diff <= r.jensen_gap_bound() + 1e-12);
        }

        #[test]
        fn smoothed_derivative_monotone_and_bounded(p in -20.0f64..20.0, q in -20.0f64..20.0, gamma in 1e-4f64..0.5, idx in 0usize..5) {
            let w = &all_kinds()[idx];
            let r = w.smooth(gamma).unwrap();
            let (dp, hp) = r.derivatives(p);
            prop_assert!((p - q) * (dp - r.d1(q)) >= -1e-12);
            prop_assert!(dp.abs() <= w.w_inf() + 1e-12);
            prop_assert!(hp >= 0.0);
            prop_assert!((r.eval(p) - r.eval(-p)).abs() < 1e-12 * (1.0 + r.eval(p)));
        }

        #[test]
        fn linear_growth_ratio_approaches_recession_slope(idx in 0usize..5) {
            let w = &all_kinds()[idx];
            let mut prev = 0.0;
            for k in 3..12 {
                let t = 10f64.powi(k / 3) * (1.0 + (k % 3) as f64);
                let ratio = w.eval(t) / t;
                prop_assert!(ratio <= w.w_inf() + 1e-12 + w.eval(0.0).abs() / t);
                if k > 3 { prop_assert!((w.w_inf() - ratio).abs() <= (w.w_inf() - prev).abs() + 1e-12); }
                prev = ratio;
            }
        }
    }
}
