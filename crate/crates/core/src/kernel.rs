//! The smoothing kernel shared by every mollification in the crate.
//!
//! The kernel is the normalized triweight bump `ρ(s) = 35/32 (1 - s²)³` on
//! `[-1, 1]`. It is even, C² across the support boundary, has unit mass and
//! attains its maximum at the origin. Scaled copies `ρ_r(x) = ρ(x / r) / r`
//! are used for the integrand smoothing, for the Orlicz construction and for
//! mollifying initial data.
//!
//! Because ρ is a polynomial, the convolution of `|x|` against it has a closed
//! form, which is what makes smoothing of piecewise-linear integrands cheap.

use std::sync::OnceLock;

const NORM: f64 = 35.0 / 32.0;

/// `∫ |t| ρ(t) dt`, which is also the value of `|·| * ρ` at the origin.
pub const FIRST_ABS_MOMENT: f64 = 35.0 / 128.0;

/// Number of Gauss–Legendre nodes used for smooth convolutions.
const QUAD_NODES: usize = 24;

/// Kernel density on `[-1, 1]`; zero outside.
pub fn density(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - s * s;
    NORM * q * q * q
}

/// Peak value `ρ(0)`.
pub fn peak() -> f64 {
    NORM
}

/// Odd antiderivative of `(1 - s²)³`.
fn poly_antiderivative(s: f64) -> f64 {
    let s2 = s * s;
    s * (1.0 + s2 * (-1.0 + s2 * (0.6 - s2 / 7.0)))
}

/// Cumulative distribution `∫_{-1}^{s} ρ`.
pub fn cdf(s: f64) -> f64 {
    if s <= -1.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        0.5 + NORM * poly_antiderivative(s)
    }
}

/// `a(s) = ∫ |s - t| ρ(t) dt`. Equals `|s|` outside the support.
pub fn abs_conv(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        return s.abs();
    }
    let s2 = s * s;
    FIRST_ABS_MOMENT
        + 2.0 * NORM * s2 * (0.5 + s2 * (-0.25 + s2 * (0.1 - s2 / 56.0)))
}

/// `a'(s) = 2 cdf(s) - 1`.
pub fn abs_conv_d1(s: f64) -> f64 {
    if s >= 1.0 {
        1.0
    } else if s <= -1.0 {
        -1.0
    } else {
        2.0 * NORM * poly_antiderivative(s)
    }
}

/// `a''(s) = 2 ρ(s)`.
pub fn abs_conv_d2(s: f64) -> f64 {
    2.0 * density(s)
}

/// Nodes and weights of a symmetric quadrature for `∫ g(s) ρ(s) ds`.
///
/// Weights are normalized to sum to one and the node set is exactly
/// symmetric, so the discrete measure has unit mass and zero mean. Jensen's
/// inequality therefore holds for the quadrature itself, not just for the
/// integral it approximates.
pub fn quadrature() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let half = gauss_legendre_positive(QUAD_NODES);
        let mut rule = Vec::with_capacity(QUAD_NODES);
        for &(x, w) in half.iter().rev() {
            rule.push((-x, w * density(x)));
        }
        for &(x, w) in &half {
            rule.push((x, w * density(x)));
        }
        let total: f64 = rule.iter().map(|&(_, w)| w).sum();
        for node in &mut rule {
            node.1 /= total;
        }
        rule
    })
}

/// Positive Gauss–Legendre nodes (ascending) and weights for even `n`.
fn gauss_legendre_positive(n: usize) -> Vec<(f64, f64)> {
    debug_assert!(n.is_multiple_of(2));
    let mut out = Vec::with_capacity(n / 2);
    for k in 0..n / 2 {
        // Chebyshev-like initial guess for the k-th largest root.
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson on [a, b]; independent of the closed forms above.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
        let h = (b - a) / m as f64;
        let mut acc = f(a) + f(b);
        for i in 1..m {
            let x = a + i as f64 * h;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        acc * h / 3.0
    }

    #[test]
    fn unit_mass_and_peak() {
        let mass = simpson(density, -1.0, 1.0, 2000);
        assert!((mass - 1.0).abs() < 1e-12);
        assert_eq!(peak(), density(0.0));
        assert!(density(0.3) < peak());
    }

    #[test]
    fn abs_conv_matches_quadrature() {
        for &s in &[-1.5f64, -0.9, -0.4, 0.0, 0.1, 0.55, 0.99, 2.0] {
            let oracle = simpson(|t| (s - t).abs() * density(t), -1.0, s.clamp(-1.0, 1.0), 4000)
                + simpson(|t| (s - t).abs() * density(t), s.clamp(-1.0, 1.0), 1.0, 4000);
            assert!((abs_conv(s) - oracle).abs() < 1e-11, "s = {s}");
        }
        assert!((abs_conv(0.0) - FIRST_ABS_MOMENT).abs() < 1e-15);
        assert!((abs_conv(1.0) - 1.0).abs() < 1e-15);
        // continuity from inside the support
        assert!((abs_conv(1.0 - 1e-9) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for &s in &[-0.8, -0.2, 0.0, 0.35, 0.7] {
            let h = 1e-6;
            let fd1 = (abs_conv(s + h) - abs_conv(s - h)) / (2.0 * h);
            let fd2 = (abs_conv_d1(s + h) - abs_conv_d1(s - h)) / (2.0 * h);
            assert!((abs_conv_d1(s) - fd1).abs() < 1e-8);
            assert!((abs_conv_d2(s) - fd2).abs() < 1e-6);
            assert!((abs_conv_d1(s) - (2.0 * cdf(s) - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn quadrature_is_symmetric_with_unit_mass() {
        let rule = quadrature();
        assert_eq!(rule.len(), QUAD_NODES);
        let mass: f64 = rule.iter().map(|r| r.1).sum();
        assert!((mass - 1.0).abs() < 1e-15);
        for k in 0..rule.len() {
            let (x, w) = rule[k];
            let (y, v) = rule[rule.len() - 1 - k];
            assert_eq!(x, -y);
            assert_eq!(w, v);
        }
        // second moment of ρ is 1/9
        let m2: f64 = rule.iter().map(|&(x, w)| w * x * x).sum();
        assert!((m2 - 1.0 / 9.0).abs() < 1e-14);
        // smooth integrand against the bump
        let q: f64 = rule.iter().map(|&(x, w)| w * (1.0 + x * x).sqrt()).sum();
        let oracle = simpson(|t| (1.0 + t * t).sqrt() * density(t), -1.0, 1.0, 4000);
        assert!((q - oracle).abs() < 1e-12);
    }
}
