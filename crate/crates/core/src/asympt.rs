//! Second-order error exponents.
//!
//! All isotropic computations are carried out for the normalized model
//! (`ρ′(0) = −1/2`, unit-speed field), obtained by rescaling space by
//! `√(2|ρ′(0)|)`; lengths passed in are in the caller's units and are
//! rescaled here. Suprema over continuous ranges use a dense grid (half
//! log-spaced towards the singular endpoint) followed by golden-section
//! refinement around the best node; analytic limits at the singular endpoint
//! are added as explicit candidates.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::model::IsotropicModel;
use crate::special::{gamma_fn, norm_pdf};

/// Grid size for suprema.
pub const GRID_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentComponents {
    pub sigma2: f64,
    pub lambda_bar: f64,
    pub kappa: f64,
}

/// Lower bound (or limit, when `exact`) of `−2x^{−2} log[p̄(x) − p_M(x)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub rate: f64,
    pub components: ExponentComponents,
    pub exact: bool,
}

/// A supremum with its maximizer; `argmax = None` means the supremum is the
/// analytic limit at the singular endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Supremum {
    pub value: f64,
    pub argmax: Option<f64>,
}

/// `1 + 1/(σ² + λ̄κ²)`; a zero denominator gives `+∞`.
pub fn exponent_general(sigma2: f64, lambda_bar: f64, kappa: f64) -> Result<ExponentReport> {
    for (name, v) in [("sigma2", sigma2), ("lambda_bar", lambda_bar), ("kappa", kappa)] {
        if !(v >= 0.0) {
            return precondition(format!("{name} must be nonnegative, got {v}"));
        }
    }
    let spread = if lambda_bar == 0.0 { 0.0 } else { lambda_bar * kappa * kappa };
    let denom = sigma2 + spread;
    let rate = if denom == 0.0 { f64::INFINITY } else { 1.0 + 1.0 / denom };
    Ok(ExponentReport {
        rate,
        components: ExponentComponents {
            sigma2,
            lambda_bar,
            kappa,
        },
        exact: false,
    })
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a) <= 1e-14 * b.abs().max(1e-300) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Supremum of `f` over `(lo, hi]` (or `[lo, hi]` when `lo > 0`).
pub(crate) fn grid_sup<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    log_near_lo: bool,
    limit_at_lo: Option<f64>,
    points: usize,
) -> Supremum {
    let mut grid: Vec<f64> = Vec::with_capacity(points + 1);
    let n_lin = if log_near_lo { points / 2 } else { points };
    if log_near_lo {
        let zmin = (lo + 1e-3 * (hi - lo)).max(lo + 1e-300);
        let n_log = points - n_lin;
        let (l0, l1) = ((zmin - lo).ln(), (hi - lo).ln());
        for i in 0..n_log {
            grid.push(lo + (l0 + (l1 - l0) * i as f64 / (n_log - 1) as f64).exp());
        }
    }
    let start = if lo == 0.0 || log_near_lo { 1 } else { 0 };
    for i in start..=n_lin {
        grid.push(lo + (hi - lo) * i as f64 / n_lin as f64);
    }
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();

    let values: Vec<f64> = grid.iter().map(|&z| f(z)).collect();
    let mut best = None;
    for (i, v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some(b) if values[b] >= *v => {}
            _ => best = Some(i),
        }
    }
    let mut sup = Supremum {
        value: f64::NEG_INFINITY,
        argmax: None,
    };
    if let Some(i) = best {
        sup = Supremum {
            value: values[i],
            argmax: Some(grid[i]),
        };
        let a = if i > 0 { grid[i - 1] } else { grid[i] };
        let b = if i + 1 < grid.len() { grid[i + 1] } else { grid[i] };
        if b > a {
            let (z, v) = golden_max(&f, a, b);
            if v > sup.value {
                sup = Supremum {
                    value: v,
                    argmax: Some(z),
                };
            }
        }
    }
    if let Some(l) = limit_at_lo {
        if l >= sup.value {
            sup = Supremum {
                value: l,
                argmax: None,
            };
        }
    }
    sup
}

fn check_diameter(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return precondition(format!("diameter must be positive and finite, got {delta}"));
    }
    Ok(())
}

/// `(1 − ρ²(z²) − 4ρ′²(z²) z²)/(1 − ρ(z²))²` for the normalized model.
pub fn isotropic_variance_ratio(n: &IsotropicModel, z: f64) -> f64 {
    let x = z * z;
    let omr = n.one_minus_rho(x);
    let r1 = n.rho1(x);
    (omr * (2.0 - omr) - 4.0 * r1 * r1 * x) / (omr * omr)
}

/// Below this normalized distance the variance ratio is replaced by its
/// limit: its numerator cancels to `O(z⁴)` from terms of size `z²`, so the
/// rounding error grows like `ε/z²`, while the ratio itself is `limit + O(z²)`.
pub const VARIANCE_RATIO_FLOOR: f64 = 1e-3;

fn variance_sup(n: &IsotropicModel, hi: f64, points: usize) -> Supremum {
    let limit = 12.0 * n.rho2_0() - 1.0;
    if hi <= VARIANCE_RATIO_FLOOR {
        return Supremum {
            value: limit,
            argmax: None,
        };
    }
    // the floor is a regular point, so the grid is linear and includes it
    grid_sup(
        |z| isotropic_variance_ratio(n, z),
        VARIANCE_RATIO_FLOOR,
        hi,
        false,
        Some(limit),
        points,
    )
}

/// `σ_t² = sup_{z ∈ (0, Δ]}` of [`isotropic_variance_ratio`], with the
/// `z → 0` limit `12ρ″ − 1` as a candidate. `delta` is the diameter of `S`.
pub fn sigma2_isotropic(m: &IsotropicModel, delta: f64) -> Result<Supremum> {
    m.ensure_valid()?;
    check_diameter(delta)?;
    let n = m.normalized();
    let limit = 12.0 * n.rho2_0() - 1.0;
    let sup = variance_sup(&n, delta * m.length_scale(), GRID_POINTS);
    if m.is_monotone() && (sup.value - limit).abs() > 1e-6 * limit.abs().max(1.0) {
        return Err(Error::Hypothesis(format!(
            "model is flagged monotone but the variance ratio reaches {} above the limit {limit}",
            sup.value
        )));
    }
    Ok(sup)
}

/// Exponent for convex `S`, monotone `ρ`: `1 + 1/(12ρ″ − 1)` (normalized
/// `ρ″`). The rate is a genuine limit here.
pub fn exponent_convex(m: &IsotropicModel) -> Result<ExponentReport> {
    m.ensure_valid()?;
    if !m.is_monotone() {
        return Err(Error::Hypothesis(
            "the convex exponent needs rho'(x) <= 0 for all x >= 0".into(),
        ));
    }
    let sigma2 = 12.0 * m.normalized().rho2_0() - 1.0;
    Ok(ExponentReport {
        rate: 1.0 + 1.0 / sigma2,
        components: ExponentComponents {
            sigma2,
            lambda_bar: 1.0,
            kappa: 0.0,
        },
        exact: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZDeltaExponent {
    pub report: ExponentReport,
    /// Supremum of the variance ratio.
    pub variance_sup: Supremum,
    /// Supremum of `2ρ′(z²) z/(1 − ρ(z²))`; `κ = max(0, ·)`.
    pub kappa_sup: Supremum,
}

/// Exponent `1 + 1/Z_Δ` for isotropic fields without the monotonicity
/// assumption, `Z_Δ = σ² + κ²` with
/// `κ = max(0, sup_{z ∈ (0, Δ]} 2ρ′(z²) z/(1 − ρ(z²)))`.
pub fn z_delta_exponent(m: &IsotropicModel, delta: f64) -> Result<ZDeltaExponent> {
    m.ensure_valid()?;
    check_diameter(delta)?;
    let n = m.normalized();
    let hi = delta * m.length_scale();
    let variance_sup = variance_sup(&n, hi, GRID_POINTS);
    let kappa_sup = grid_sup(
        |z| {
            let x = z * z;
            2.0 * n.rho1(x) * z / n.one_minus_rho(x)
        },
        0.0,
        hi,
        true,
        None,
        GRID_POINTS,
    );
    let kappa = kappa_sup.value.max(0.0);
    let z = variance_sup.value + kappa * kappa;
    Ok(ZDeltaExponent {
        report: ExponentReport {
            rate: 1.0 + 1.0 / z,
            components: ExponentComponents {
                sigma2: variance_sup.value,
                lambda_bar: 1.0,
                kappa,
            },
            exact: false,
        },
        variance_sup,
        kappa_sup,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusKappa {
    /// `κ_t` at `‖t‖ = a` (normalized units).
    pub value: f64,
    /// Supremum over the radial range `z ∈ [2a, a + b]`.
    pub radial: Supremum,
    /// Supremum over `θ ∈ [0, π]`; the `θ → 0` limit is `1/a`.
    pub angular: Supremum,
}

/// `κ_t` on the inner circle of the annulus `{a ≤ ‖t‖ ≤ b}`.
pub fn kappa_annulus(m: &IsotropicModel, a: f64, b: f64) -> Result<AnnulusKappa> {
    m.ensure_valid()?;
    if !(a > 0.0 && b > a && b.is_finite()) {
        return precondition(format!("annulus needs 0 < a < b, got a = {a}, b = {b}"));
    }
    let n = m.normalized();
    let (a, b) = (a * m.length_scale(), b * m.length_scale());
    let radial = grid_sup(
        |z| {
            let x = z * z;
            -2.0 * n.rho1(x) * z / n.one_minus_rho(x)
        },
        2.0 * a,
        a + b,
        false,
        None,
        GRID_POINTS,
    );
    let angular = grid_sup(
        |theta| angular_integrand(&n, a, theta),
        0.0,
        std::f64::consts::PI,
        true,
        Some(1.0 / a),
        GRID_POINTS,
    );
    Ok(AnnulusKappa {
        value: radial.value.max(angular.value),
        radial,
        angular,
    })
}

/// `−2aρ′(2a²(1 − cos θ))(1 − cos θ)/(1 − ρ(2a²(1 − cos θ)))` for the
/// normalized model `n` and normalized radius `a`.
pub fn angular_integrand(n: &IsotropicModel, a: f64, theta: f64) -> f64 {
    let w = 2.0 * (0.5 * theta).sin().powi(2);
    let x = 2.0 * a * a * w;
    -2.0 * a * n.rho1(x) * w / n.one_minus_rho(x)
}

/// A one-dimensional stationary covariance `Γ` with its derivative and its
/// speed `λ = −Γ″(0)`.
#[derive(Clone)]
pub struct Profile1d {
    value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    deriv: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    speed: f64,
}

impl std::fmt::Debug for Profile1d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Profile1d").field("speed", &self.speed).finish()
    }
}

impl Profile1d {
    pub fn new(
        value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        deriv: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        speed: f64,
    ) -> Result<Self> {
        if (value(0.0) - 1.0).abs() > 1e-12 {
            return precondition("one-dimensional profile must satisfy Γ(0) = 1");
        }
        if !(speed > 0.0 && speed.is_finite()) {
            return precondition("profile speed −Γ″(0) must be positive");
        }
        Ok(Self { value, deriv, speed })
    }

    /// `Γ(u) = e^{−u²/(2ℓ²)}`, speed `1/ℓ²`.
    pub fn gaussian(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return precondition("Gaussian kernel scale must be positive");
        }
        let s2 = scale * scale;
        Self::new(
            Arc::new(move |u| (-0.5 * u * u / s2).exp()),
            Arc::new(move |u| -u / s2 * (-0.5 * u * u / s2).exp()),
            1.0 / s2,
        )
    }

    pub fn value(&self, u: f64) -> f64 {
        (self.value)(u)
    }

    pub fn deriv(&self, u: f64) -> f64 {
        (self.deriv)(u)
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }
}

fn check_points(profiles: &[Profile1d], s: &[f64], t: &[f64]) -> Result<()> {
    if profiles.is_empty() || s.len() != profiles.len() || t.len() != profiles.len() {
        return precondition("profiles, s and t must have the same positive length");
    }
    if s == t {
        return precondition("s and t must differ");
    }
    Ok(())
}

/// `Var(X(s) | X(t), X′(t))/(1 − r(s, t))²` for the separable covariance
/// `Π Γ_i(s_i − t_i)`:
///
/// ```text
/// (1 − Π Γ_i² − Σ_i Γ_i′²/λ_i · Π_{k≠i} Γ_k²) / (1 − Π Γ_i)²
/// ```
///
/// which is the familiar form when every `λ_i = 1`.
pub fn sigma2_separable(profiles: &[Profile1d], s: &[f64], t: &[f64]) -> Result<f64> {
    check_points(profiles, s, t)?;
    Ok(separable_ratio(profiles, &s.iter().zip(t).map(|(a, b)| a - b).collect::<Vec<_>>()))
}

fn separable_ratio(profiles: &[Profile1d], h: &[f64]) -> f64 {
    let g: Vec<f64> = profiles.iter().zip(h).map(|(p, &u)| p.value(u)).collect();
    let prod: f64 = g.iter().product();
    let mut num = 1.0 - prod * prod;
    for (i, p) in profiles.iter().enumerate() {
        let others: f64 = g.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, v)| v * v).product();
        let d = p.deriv(h[i]);
        num -= d * d / p.speed() * others;
    }
    num / ((1.0 - prod) * (1.0 - prod))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableSweep {
    pub value: f64,
    /// Maximizing displacement `s − t`.
    pub argmax_h: Vec<f64>,
}

/// Maximum of [`sigma2_separable`] over displacements `s − t` on the grid
/// `{0, L_i/(n−1), …, L_i}` per axis (the kernels are even, so nonnegative
/// displacements cover every pair in the rectangle).
pub fn sigma2_separable_sweep(profiles: &[Profile1d], sides: &[f64], points_per_axis: usize) -> Result<SeparableSweep> {
    if sides.len() != profiles.len() || sides.iter().any(|s| !(*s > 0.0)) {
        return precondition("one positive side per profile is required");
    }
    if points_per_axis < 2 {
        return precondition("need at least 2 grid points per axis");
    }
    let d = sides.len();
    let mut idx = vec![0usize; d];
    let mut best = SeparableSweep {
        value: f64::NEG_INFINITY,
        argmax_h: vec![0.0; d],
    };
    loop {
        // advance odometer first: the all-zero displacement is excluded
        let mut k = 0;
        while k < d {
            idx[k] += 1;
            if idx[k] < points_per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
        let h: Vec<f64> = idx
            .iter()
            .zip(sides)
            .map(|(&i, &l)| l * i as f64 / (points_per_axis - 1) as f64)
            .collect();
        let v = separable_ratio(profiles, &h);
        if v > best.value {
            best = SeparableSweep { value: v, argmax_h: h };
        }
    }
    Ok(best)
}

/// `dist(−Λ_t^{−1} r_{01}(s, t), C_t)/(1 − r(s, t))` for the separable field
/// on the rectangle `Π [0, L_i]`, where `C_t` is the cone of directions
/// `t − s` at `t`.
pub fn separable_kappa_ratio(profiles: &[Profile1d], sides: &[f64], s: &[f64], t: &[f64]) -> Result<f64> {
    check_points(profiles, s, t)?;
    if sides.len() != profiles.len() {
        return precondition("one side per profile is required");
    }
    for ((&si, &ti), &l) in s.iter().zip(t).zip(sides) {
        if !(0.0..=l).contains(&si) || !(0.0..=l).contains(&ti) {
            return precondition("s and t must lie in the rectangle");
        }
    }
    let h: Vec<f64> = s.iter().zip(t).map(|(a, b)| a - b).collect();
    let g: Vec<f64> = profiles.iter().zip(&h).map(|(p, &u)| p.value(u)).collect();
    let mut dist2 = 0.0;
    for i in 0..profiles.len() {
        let others: f64 = g.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, v)| v).product();
        let y = profiles[i].deriv(h[i]) * others / profiles[i].speed();
        let violation = if t[i] == 0.0 {
            y.max(0.0)
        } else if t[i] == sides[i] {
            (-y).max(0.0)
        } else {
            0.0
        };
        dist2 += violation * violation;
    }
    let r: f64 = g.iter().product();
    Ok(dist2.sqrt() / (1.0 - r))
}

/// Laplace-method equivalent of `p̄(x) − p_M(x)` for a one-parameter process
/// with non-constant variance maximal at an interior point `t_0`:
///
/// ```text
/// (1 − v″/2)/(k C_k^{1/k}) · E|ξ|^{1/(2k) − 1} · x^{1 − 1/k} φ(x)
/// ```
///
/// with `C_k = −v^{(2k)}(t_0)/(2k)! + (v″)²/4 · 1_{k=2}` and
/// `E|ξ|^p = 2^{p/2} Γ((p+1)/2)/√π`.
pub fn pm_equiv_1d(v2k: f64, vpp: f64, k: usize, x: f64) -> Result<f64> {
    if k == 0 {
        return precondition("k must be positive");
    }
    if !(v2k < 0.0) || !(vpp <= 0.0) {
        return precondition("need v^(2k)(t0) < 0 and v''(t0) <= 0");
    }
    if k >= 2 && !(x > 0.0) {
        return precondition("x must be positive when k >= 2");
    }
    let two_k_fact = gamma_fn(2.0 * k as f64 + 1.0);
    let ck = -v2k / two_k_fact + if k == 2 { 0.25 * vpp * vpp } else { 0.0 };
    if !(ck > 0.0) {
        return precondition(format!("C_k = {ck} must be positive"));
    }
    let kf = k as f64;
    let p = 1.0 / (2.0 * kf) - 1.0;
    let moment = 2f64.powf(p / 2.0) * gamma_fn((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt();
    let power = if k == 1 { 1.0 } else { x.powf(1.0 - 1.0 / kf) };
    Ok((1.0 - vpp / 2.0) / (kf * ck.powf(1.0 / kf)) * moment * power * norm_pdf(x))
}
