//! The density bound `p̄(x)` for the maximum, the EPC density `p^E(x)`,
//! their tails, the sphere variant, and the complementary-term functions
//! `T_j` and `R_j`.
//!
//! For a convex polyhedron with coefficients `g_j`,
//!
//! ```text
//! p̄(x) = φ(x) { g_0 + Σ_{j≥1} [ (|ρ′|/π)^{j/2} H̄_j(x) + R_j(x) ] g_j }
//! ```
//!
//! and `p^E` is the same expression without the `R_j`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::geometry::{sphere_area, FaceDecomposition, GeometryKind};
use crate::hermite::{
    eval_unchecked, integrate_adaptive, orthonormal_values, scaled_tail_integrals, AdaptiveOptions,
    HermiteKind, QuadratureRule,
};
use crate::model::IsotropicModel;
use crate::special::{gamma_fn, norm_pdf, norm_sf, SQRT_2PI};

/// Largest `j` accepted by [`t_series`].
pub const MAX_T_DEGREE: usize = 60;
/// Width of the window `[u, u + TAIL_WINDOW]` used for complementary tails.
pub const TAIL_WINDOW: f64 = 40.0;
/// Relative disagreement between the Gauss rule and the adaptive integral
/// above which the adaptive value is used.
pub const CROSS_CHECK_TOL: f64 = 1e-7;

/// Shared default 64-node rule, built once.
pub fn default_rule() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(QuadratureRule::default)
}

/// Per-dimension contributions to `p̄(x)` and `p^E(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundBreakdown {
    pub x: f64,
    /// Index `j = 0..=d0`; entry 0 is `φ(x) g_0`.
    pub principal_by_j: Vec<f64>,
    /// Index `j = 0..=d0`; entry `j ≥ 1` is `φ(x) R_j(x) g_j`, entry 0 is 0.
    pub complementary_by_j: Vec<f64>,
    pub pbar: f64,
    #[serde(rename = "pE")]
    pub pe: f64,
}

/// `T_j(v) = e^{−v²/2} Σ_{k<j} H_k(v)²/(2^k k!) − H_j(v) I_{j−1}(v)/(2^j (j−1)!)`.
///
/// Evaluated in orthonormal scaling: with `χ_k = c_k H_k(v)`,
/// `T_j = √π e^{−v²/2} Σ_{k<j} χ_k² − √(πj/2) χ_j c_{j−1} I_{j−1}(v)`.
pub fn t_series(j: usize, v: f64) -> Result<f64> {
    if j == 0 || j > MAX_T_DEGREE {
        return Err(Error::SizeCap {
            what: "T_j index",
            value: j,
            max: MAX_T_DEGREE,
        });
    }
    if !v.is_finite() {
        return precondition("t_series: v must be finite");
    }
    Ok(t_unchecked(j, v))
}

fn t_unchecked(j: usize, v: f64) -> f64 {
    let chi = orthonormal_values(j, v, false);
    let scaled = scaled_tail_integrals(j - 1, v);
    let sum_sq: f64 = chi[..j].iter().map(|c| c * c).sum();
    let pi = std::f64::consts::PI;
    pi.sqrt() * (-0.5 * v * v).exp() * sum_sq - (pi * j as f64 / 2.0).sqrt() * chi[j] * scaled[j - 1]
}

/// `∫ f(y) e^{−y²/2} dy` by the rule, cross-checked against adaptive
/// Gauss–Kronrod on `[center − half, center + half]`. Returns the rule value
/// when the two agree to [`CROSS_CHECK_TOL`], the adaptive value otherwise.
fn cross_checked<F: Fn(f64) -> f64>(f: F, rule: &QuadratureRule, center: f64, half: f64) -> Result<f64> {
    let by_rule = rule.integrate(&f);
    let opts = AdaptiveOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-11,
        max_intervals: 4000,
    };
    let adaptive = integrate_adaptive(|y| f(y) * (-0.5 * y * y).exp(), center - half, center + half, opts)?.value;
    match by_rule {
        Ok(r) if (r - adaptive).abs() <= CROSS_CHECK_TOL * adaptive.abs() => Ok(r),
        _ => Ok(adaptive),
    }
}

/// `R_j(x) = (2ρ″/(π|ρ′|))^{j/2} Γ((j+1)/2)/π · ∫ T_j(v(y)) e^{−y²/2} dy`
/// with `v(y) = −((1−γ²)^{1/2} y − γx)/√2`.
///
/// For `γ = 1` the integrand is constant and the integral is
/// `√(2π) T_j(γx/√2)`.
pub fn r_correction(m: &IsotropicModel, j: usize, x: f64, rule: &QuadratureRule) -> Result<f64> {
    m.ensure_valid()?;
    if j == 0 || j > MAX_T_DEGREE {
        return Err(Error::SizeCap {
            what: "R_j index",
            value: j,
            max: MAX_T_DEGREE,
        });
    }
    if !x.is_finite() {
        return precondition("r_correction: x must be finite");
    }
    let (r1, r2) = (m.rho1_0().abs(), m.rho2_0());
    let jf = j as f64;
    let pref = (2.0 * r2 / (std::f64::consts::PI * r1)).powf(jf / 2.0) * gamma_fn((jf + 1.0) / 2.0)
        / std::f64::consts::PI;
    let gamma = m.gamma();
    let s2 = m.one_minus_gamma2();
    let integral = if s2 == 0.0 {
        SQRT_2PI * t_unchecked(j, gamma * x / std::f64::consts::SQRT_2)
    } else {
        let s = s2.sqrt();
        let v = |y: f64| -(s * y - gamma * x) / std::f64::consts::SQRT_2;
        cross_checked(|y| t_unchecked(j, v(y)), rule, 0.0, TAIL_WINDOW + x.abs())?
    };
    Ok(pref * integral)
}

fn check_geometry(geom: &FaceDecomposition) -> Result<()> {
    if geom.kind == GeometryKind::SphereSurface {
        return precondition("spheres use sphere_pbar, not the polyhedral formula");
    }
    if geom.g.len() != geom.d0 + 1 || geom.g.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::InvalidGeometry("g coefficients must be d0 + 1 nonnegative numbers".into()));
    }
    Ok(())
}

fn principal_terms(m: &IsotropicModel, geom: &FaceDecomposition, x: f64) -> Vec<f64> {
    let phi = norm_pdf(x);
    let he = eval_all_modified(geom.d0, x);
    let base = m.rho1_0().abs() / std::f64::consts::PI;
    (0..=geom.d0)
        .map(|j| {
            if j == 0 {
                phi * geom.g[0]
            } else {
                phi * base.powf(j as f64 / 2.0) * he[j] * geom.g[j]
            }
        })
        .collect()
}

fn eval_all_modified(n: usize, x: f64) -> Vec<f64> {
    crate::hermite::values_unchecked(HermiteKind::Modified, n, x)
}

/// Breakdown of `p̄(x)` using an explicit quadrature rule.
pub fn pbar_density_with(
    m: &IsotropicModel,
    geom: &FaceDecomposition,
    x: f64,
    rule: &QuadratureRule,
) -> Result<BoundBreakdown> {
    m.ensure_valid()?;
    check_geometry(geom)?;
    let principal = principal_terms(m, geom, x);
    let phi = norm_pdf(x);
    let mut complementary = vec![0.0; geom.d0 + 1];
    for j in 1..=geom.d0 {
        if geom.g[j] != 0.0 {
            complementary[j] = phi * r_correction(m, j, x, rule)? * geom.g[j];
        }
    }
    let pe: f64 = principal.iter().sum();
    let pbar = pe + complementary.iter().sum::<f64>();
    Ok(BoundBreakdown {
        x,
        principal_by_j: principal,
        complementary_by_j: complementary,
        pbar,
        pe,
    })
}

/// Breakdown of `p̄(x)` with the default 64-node rule.
pub fn pbar_density(m: &IsotropicModel, geom: &FaceDecomposition, x: f64) -> Result<BoundBreakdown> {
    pbar_density_with(m, geom, x, default_rule())
}

/// EPC density `p^E(x) = φ(x){g_0 + Σ_j (|ρ′|/π)^{j/2} H̄_j(x) g_j}`.
pub fn pe_density(m: &IsotropicModel, geom: &FaceDecomposition, x: f64) -> Result<f64> {
    m.ensure_valid()?;
    check_geometry(geom)?;
    Ok(principal_terms(m, geom, x).iter().sum())
}

/// Tails `∫_u^∞ p̄` and `∫_u^∞ p^E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub u: f64,
    pub pbar_tail: f64,
    #[serde(rename = "pE_tail")]
    pub pe_tail: f64,
    /// Error estimate of the adaptive integral of the complementary part.
    pub quadrature_error: f64,
    /// Envelope estimate of the complementary mass beyond `u + 40`.
    pub truncation_bound: f64,
}

/// `∫_u^∞ p^E` in closed form via `∫_u^∞ H̄_j φ = H̄_{j−1}(u) φ(u)`.
pub fn pe_tail(m: &IsotropicModel, geom: &FaceDecomposition, u: f64) -> Result<f64> {
    m.ensure_valid()?;
    check_geometry(geom)?;
    if u == f64::NEG_INFINITY {
        return Ok(geom.g[0]);
    }
    let phi = norm_pdf(u);
    let he = eval_all_modified(geom.d0.saturating_sub(1), u);
    let base = m.rho1_0().abs() / std::f64::consts::PI;
    let mut total = geom.g[0] * norm_sf(u);
    for j in 1..=geom.d0 {
        total += base.powf(j as f64 / 2.0) * geom.g[j] * he[j - 1] * phi;
    }
    Ok(total)
}

/// Upper bound `P{M > u} ≤ ∫_u^∞ p̄(x) dx` together with the EPC tail.
pub fn tail_bound(m: &IsotropicModel, geom: &FaceDecomposition, u: f64, rule: &QuadratureRule) -> Result<TailBound> {
    let pe = pe_tail(m, geom, u)?;
    if !u.is_finite() {
        return precondition("tail_bound: u must be finite");
    }
    let integrand = |x: f64| -> f64 {
        let phi = norm_pdf(x);
        if phi == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for j in 1..=geom.d0 {
            if geom.g[j] != 0.0 {
                s += geom.g[j] * r_correction(m, j, x, rule).unwrap_or(f64::NAN);
            }
        }
        phi * s
    };
    let (comp, err, trunc) = if geom.d0 == 0 {
        (0.0, 0.0, 0.0)
    } else {
        // absolute tolerance follows the size of the answer so deep tails
        // keep their relative accuracy
        let opts = AdaptiveOptions {
            abs_tol: (1e-14 * pe).max(f64::MIN_POSITIVE),
            rel_tol: 1e-12,
            max_intervals: 2000,
        };
        let est = integrate_adaptive(integrand, u, u + TAIL_WINDOW, opts)?;
        let end = u + TAIL_WINDOW;
        (est.value, est.error, integrand(end) / end.max(1.0))
    };
    Ok(TailBound {
        u,
        pbar_tail: pe + comp,
        pe_tail: pe,
        quadrature_error: err,
        truncation_bound: trunc,
    })
}

/// `p̄(x)` for the unit sphere `S^{d−1} ⊂ R^d`:
///
/// ```text
/// φ(x) σ_{d−1} ∫ [ (|ρ′|/π)^{(d−1)/2} H̄_{d−1}(x + cy) + R_{d−1}(x + cy) ] φ(y) dy
/// ```
///
/// with `c = (2|ρ′|)^{−1/2}` and `σ_{d−1} = 2π^{d/2}/Γ(d/2)`.
pub fn sphere_pbar(m: &IsotropicModel, d: usize, x: f64, rule: &QuadratureRule) -> Result<f64> {
    m.ensure_valid()?;
    if !(2..=20).contains(&d) {
        return precondition(format!("sphere dimension {d} outside 2..=20"));
    }
    if !x.is_finite() {
        return precondition("sphere_pbar: x must be finite");
    }
    let j = d - 1;
    let r1 = m.rho1_0().abs();
    let c = 1.0 / (2.0 * r1).sqrt();
    let coef = (r1 / std::f64::consts::PI).powf(j as f64 / 2.0);
    let f = |y: f64| {
        let z = x + c * y;
        coef * eval_unchecked(HermiteKind::Modified, j, z) + r_correction(m, j, z, rule).unwrap_or(f64::NAN)
    };
    let integral = cross_checked(f, rule, 0.0, TAIL_WINDOW)? / SQRT_2PI;
    Ok(norm_pdf(x) * sphere_area(d) * integral)
}

/// Extra Gaussian decay rate `γ²/(3 − γ²)` of the complementary term
/// relative to `φ(x)`.
pub fn complementary_decay_rate(m: &IsotropicModel) -> f64 {
    let g2 = m.gamma() * m.gamma();
    g2 / (3.0 - g2)
}
