//! Closed-form references: shrinking circles, the convergence-test solution,
//! the self-similar Bernoulli lemniscate and the theory constants.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{ChenError, Result};

/// Radius of a shrinking round circle, `(r₀⁴ − 4t)^{1/4}`.
pub fn circle_radius(r0: f64, t: f64) -> Result<f64> {
    let r4 = r0.powi(4) - 4.0 * t;
    if !(t >= 0.0) || !(r4 >= 0.0) {
        return Err(ChenError::Domain(format!(
            "t = {t} outside the lifespan [0, {}) of a radius-{r0} circle",
            r0.powi(4) / 4.0
        )));
    }
    Ok(r4.powf(0.25))
}

/// Upper bound `L₀⁴ / (64 ω⁴ π⁴)` on the maximal existence time
/// (`ω = 0` uses `ω⁴ = 1`). Equality holds for round circles.
pub fn lifespan_bound(l0: f64, omega: i64) -> f64 {
    let w = if omega == 0 { 1.0 } else { omega as f64 };
    l0.powi(4) / (64.0 * w.powi(4) * PI.powi(4))
}

/// Auxiliary time of the convergence test, `σ(t) = t − ¼ ln(1 − 4t)`.
pub fn sigma_of_t(t: f64) -> Result<f64> {
    if !(0.0..0.25).contains(&t) {
        return Err(ChenError::Domain(format!("t = {t} outside [0, 1/4)")));
    }
    Ok(t - 0.25 * (-4.0 * t).ln_1p())
}

/// Inverse of [`sigma_of_t`] by Newton's method safeguarded with bisection.
pub fn t_of_sigma(sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(ChenError::Domain(format!("sigma = {sigma} must be finite and ≥ 0")));
    }
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, sigma.min(0.25));
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = t - 0.25 * (-4.0 * t).ln_1p() - sigma;
        if f > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let df = 1.0 + 1.0 / (1.0 - 4.0 * t);
        let mut next = t - f / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-16 * t.max(1e-300) || hi - lo <= f64::EPSILON * hi {
            return Ok(next);
        }
        t = next;
    }
    Ok(t)
}

/// `g(u, σ) = u + (1/50) e^{−16π²σ} sin(4πu)`, a solution of `g_σ = g_uu`.
pub fn convtest_g(u: f64, sigma: f64) -> f64 {
    u + (-16.0 * PI * PI * sigma).exp() * (4.0 * PI * u).sin() / 50.0
}

/// Exact position of the convergence test at parameter `u` and auxiliary
/// time `σ`, on the circle of radius `(1 − 4t)^{1/4}`.
pub fn convtest_reference(u: f64, sigma: f64) -> Result<[f64; 2]> {
    let t = t_of_sigma(sigma)?;
    convtest_reference_at(u, sigma, t)
}

/// As [`convtest_reference`] but with the physical time `t` supplied, e.g.
/// the numerically integrated one.
pub fn convtest_reference_at(u: f64, sigma: f64, t: f64) -> Result<[f64; 2]> {
    let r = circle_radius(1.0, t)?;
    let angle = 2.0 * PI * convtest_g(u, sigma);
    Ok([r * angle.cos(), r * angle.sin()])
}

/// Final auxiliary time of the convergence test, `σ_f = (1 + 2 ln 2)/8`,
/// at which `t = 1/8`.
pub fn convtest_sigma_final() -> f64 {
    (1.0 + 2.0 * std::f64::consts::LN_2) / 8.0
}

/// `EOC_N = log₂ E_{N/2} − log₂ E_N` for a doubling sequence of `N`.
pub fn eoc(ns: &[usize], errors: &[f64]) -> Result<Vec<f64>> {
    if ns.len() != errors.len() {
        return Err(ChenError::DimensionMismatch {
            expected: ns.len(),
            got: errors.len(),
        });
    }
    if let Some(w) = ns.windows(2).find(|w| w[1] != 2 * w[0]) {
        return Err(ChenError::InvalidConfig(format!(
            "N sequence must double, got {} then {}",
            w[0], w[1]
        )));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0)) {
        return Err(ChenError::Domain(format!("errors must be positive, got {e}")));
    }
    Ok(errors.windows(2).map(|e| e[0].log2() - e[1].log2()).collect())
}

/// Lifespan of the self-similar lemniscate, `T = 1/132`.
pub const LEMNISCATE_LIFESPAN: f64 = 1.0 / 132.0;

/// Closed-form geometry of the Bernoulli lemniscate
/// `β(θ) = (cos θ, sin θ cos θ) / (1 + sin²θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemniscateSample {
    pub theta: f64,
    pub position: [f64; 2],
    /// `|∂_θ β| = (1 + sin²θ)^{−1/2}`.
    pub speed: f64,
    pub tangent: [f64; 2],
    pub normal: [f64; 2],
    pub curvature: f64,
    /// `⟨β, ν⟩`.
    pub support: f64,
    pub k_s: f64,
    pub k_ss: f64,
    pub k_cubed: f64,
}

pub fn lemniscate(theta: f64) -> LemniscateSample {
    let (s, c) = theta.sin_cos();
    let den = 1.0 + s * s;
    let v = den.sqrt().recip();
    let v3 = v * v * v;
    let k = 3.0 * v * c;
    let support = -v3 * c * c * c;
    LemniscateSample {
        theta,
        position: [c / den, s * c / den],
        speed: v,
        tangent: [v3 * (s * s * s - 3.0 * s), v3 * (1.0 - 3.0 * s * s)],
        normal: [v3 * (3.0 * s * s - 1.0), v3 * (s * s * s - 3.0 * s)],
        curvature: k,
        support,
        k_s: -3.0 * s - 3.0 * v * v * s * c * c,
        k_ss: -6.0 * v3 * c * c * c,
        k_cubed: k * k * k,
    }
}

/// Scale factor `h(t) = (1 − 132t)^{1/4}` of the shrinking lemniscate.
pub fn lemniscate_scale(t: f64) -> Result<f64> {
    if !(0.0..LEMNISCATE_LIFESPAN).contains(&t) {
        return Err(ChenError::Domain(format!("t = {t} outside [0, 1/132)")));
    }
    Ok((1.0 - 132.0 * t).powf(0.25))
}

/// Length of the unit Bernoulli lemniscate, `∫₀^{2π} (1 + sin²θ)^{−1/2} dθ`.
pub fn lemniscate_length() -> f64 {
    static LENGTH: OnceLock<f64> = OnceLock::new();
    *LENGTH.get_or_init(|| {
        // Four congruent quarters.
        4.0 * adaptive_simpson(&|t: f64| (1.0 + t.sin().powi(2)).sqrt().recip(), 0.0, PI / 2.0, 1e-13)
    })
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        floor: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol.max(floor) {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, floor, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, floor, depth - 1)
    }
    // Start from 16 panels so an oscillatory integrand cannot fool the first
    // three-point estimate.
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let x = |k: usize| a + h * k as f64 / 2.0;
    let fx: Vec<f64> = (0..=2 * PANELS).map(|k| f(x(k))).collect();
    // Absolute rounding floor; without it halved tolerances can stay out of
    // reach and the recursion would run to full depth everywhere.
    let scale = fx.iter().map(|v| v.abs()).sum::<f64>() * (b - a).abs() / fx.len() as f64;
    let floor = 1e-15 * scale;
    (0..PANELS)
        .map(|p| {
            let (l, r) = (x(2 * p), x(2 * p + 2));
            let (fa, fm, fb) = (fx[2 * p], fx[2 * p + 1], fx[2 * p + 2]);
            let whole = simpson(fa, fm, fb, l, r);
            recurse(f, l, r, fa, fm, fb, whole, tol / PANELS as f64, floor, 40)
        })
        .sum()
}

/// The remainder coefficient `R₀(ε₀)` whose smallness (`R₀ < 8`) gives the
/// convexity of `L⁴` near the ω-circle.
pub fn r0_coefficient(eps: f64, omega: u32) -> f64 {
    let w = omega as f64 * PI;
    let big = eps + 16.0 * w.powi(4);
    let root = big.sqrt();
    let s2 = std::f64::consts::SQRT_2;
    eps * 205.0 / (6.0 * w.powi(3))
        + eps / (8.0 * w.powi(3))
        + eps.cbrt() * 3.0 * 96f64.powf(4.0 / 3.0) / (64.0 * w.powi(4) * 4f64.cbrt()) * big
        + eps * 7.0 / (4.0 * w.powi(4)) * big
        + eps.sqrt() * 61.0 / (s2 * w.powf(2.5)) * big
        + eps * eps * 5.0 / (8.0 * w.powi(7)) * root
        + eps.powf(1.5) * 10.0 / (s2 * w.powf(5.5)) * root
        + eps * root * 30.0 / w.powi(4)
        + eps.sqrt() * 40.0 / (s2 * w.powf(3.5)) * root
}

/// The root `ε₁` of `R₀(ε₁) = 8`, by bisection on a doubling bracket.
pub fn epsilon1(omega: u32) -> Result<f64> {
    if omega == 0 {
        return Err(ChenError::Domain("epsilon1 needs omega ≥ 1".into()));
    }
    let target = 8.0;
    let mut hi = 1e-12;
    while r0_coefficient(hi, omega) <= target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if r0_coefficient(mid, omega) > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
