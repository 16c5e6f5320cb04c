//! Hermite polynomials and the Gaussian integrals built on them.
//!
//! Two families are provided. The physicists' polynomials `H_n` are
//! orthogonal for `e^{-x²}`; the modified polynomials `H̄_n` (probabilists'
//! convention) are orthogonal for `e^{-x²/2}`. They are related by
//! `H̄_n(x) = 2^{-n/2} H_n(x/√2)`.
//!
//! All evaluation goes through three-term recurrences.

mod adaptive;
mod quadrature;

pub use adaptive::{integrate_adaptive, AdaptiveEstimate, AdaptiveOptions};
pub use quadrature::{gauss_weight_integrate, QuadratureRule, WeightKind};

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::special::{norm_sf, SQRT_2PI};

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 200;

/// `π^{-1/4}`, the normalizing constant `c_0`.
pub(crate) const PI_POW_MINUS_QUARTER: f64 = 0.751_125_544_464_942_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HermiteKind {
    /// `H_{n+1} = 2x H_n − 2n H_{n−1}`.
    Physicists,
    /// `H̄_{n+1} = x H̄_n − n H̄_{n−1}`.
    Modified,
}

fn check_degree(n: usize) -> Result<()> {
    if n > MAX_DEGREE {
        return Err(Error::SizeCap {
            what: "Hermite degree",
            value: n,
            max: MAX_DEGREE,
        });
    }
    Ok(())
}

/// Value of `H_n(x)` or `H̄_n(x)`.
pub fn hermite_eval(kind: HermiteKind, n: usize, x: f64) -> Result<f64> {
    check_degree(n)?;
    Ok(eval_unchecked(kind, n, x))
}

/// Values of the polynomials of degree `0..=n` at `x`.
pub fn hermite_values(kind: HermiteKind, n: usize, x: f64) -> Result<Vec<f64>> {
    check_degree(n)?;
    Ok(values_unchecked(kind, n, x))
}

pub(crate) fn eval_unchecked(kind: HermiteKind, n: usize, x: f64) -> f64 {
    let (scale, step) = match kind {
        HermiteKind::Physicists => (2.0, 2.0),
        HermiteKind::Modified => (1.0, 1.0),
    };
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = scale * x;
    for k in 1..n {
        let next = scale * x * cur - step * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub(crate) fn values_unchecked(kind: HermiteKind, n: usize, x: f64) -> Vec<f64> {
    let (scale, step) = match kind {
        HermiteKind::Physicists => (2.0, 2.0),
        HermiteKind::Modified => (1.0, 1.0),
    };
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(scale * x);
    }
    for k in 1..n {
        let next = scale * x * out[k] - step * k as f64 * out[k - 1];
        out.push(next);
    }
    out
}

/// Double factorial with the convention `(−1)!! = 0!! = 1`.
pub fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// `e^{-v²/2} · h` without forming `e^{-v²/2}` separately, so that a large
/// polynomial value times a tiny weight does not turn into `inf · 0`.
fn gauss_weighted(h: f64, v: f64) -> f64 {
    if h == 0.0 || !v.is_finite() {
        return 0.0;
    }
    let w = (-0.5 * v * v).exp();
    if w > 1e-280 && h.abs() < 1e280 {
        h * w
    } else {
        h.signum() * (h.abs().ln() - 0.5 * v * v).exp()
    }
}

/// `I_n(v) = ∫_v^∞ e^{-t²/2} H_n(t) dt` for physicists' `H_n`.
///
/// Closed form: `2 e^{-v²/2} Σ_k 2^k (n−1)!!/(n−1−2k)!! H_{n−1−2k}(v)`
/// plus, for even `n`, `2^{n/2}(n−1)!! √(2π) (1 − Φ(v))`. `v` may be `−∞`.
pub fn tail_integral(n: usize, v: f64) -> Result<f64> {
    check_degree(n)?;
    if v.is_nan() {
        return precondition("tail_integral: v is NaN");
    }
    if v == f64::INFINITY {
        return Ok(0.0);
    }
    let h = if n >= 1 {
        values_unchecked(HermiteKind::Physicists, n - 1, if v.is_finite() { v } else { 0.0 })
    } else {
        Vec::new()
    };
    let mut sum = 0.0;
    let mut coef = 1.0;
    let mut k = 0usize;
    while 2 * k < n {
        // k runs over 0..=⌊(n−1)/2⌋
        let m = n - 1 - 2 * k;
        if v.is_finite() {
            sum += 2.0 * gauss_weighted(coef * h[m], v);
        }
        coef *= 2.0 * (n as f64 - 1.0 - 2.0 * k as f64);
        k += 1;
    }
    if n.is_multiple_of(2) {
        // coef = 2^{n/2} (n−1)!! here
        let tail = if v == f64::NEG_INFINITY { 1.0 } else { norm_sf(v) };
        sum += coef * SQRT_2PI * tail;
    }
    Ok(sum)
}

/// `I_n(−∞) = 1_{n even} 2^{n/2} (n−1)!! √(2π)`.
pub fn tail_integral_full_line(n: usize) -> Result<f64> {
    check_degree(n)?;
    if n % 2 == 1 {
        return Ok(0.0);
    }
    Ok(2f64.powi(n as i32 / 2) * double_factorial(n as i64 - 1) * SQRT_2PI)
}

/// `J_n(x) = ∫ e^{-y²/2} H_n(ay + bx) dy = (2b)^n √(2π) H̄_n(x)`, valid when
/// `a² + b² = 1/2`.
pub fn weighted_integral(n: usize, x: f64, a: f64, b: f64) -> Result<f64> {
    check_degree(n)?;
    if (a * a + b * b - 0.5).abs() > 1e-12 {
        return precondition(format!(
            "weighted_integral requires a² + b² = 1/2, got {}",
            a * a + b * b
        ));
    }
    Ok((2.0 * b).powi(n as i32) * SQRT_2PI * eval_unchecked(HermiteKind::Modified, n, x))
}

/// `c_k = (2^k k! √π)^{-1/2}` for `k = 0..=n`, built by `c_k = c_{k−1}/√(2k)`.
#[cfg(test)]
pub(crate) fn norm_consts(n: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(n + 1);
    c.push(PI_POW_MINUS_QUARTER);
    for k in 1..=n {
        c.push(c[k - 1] / (2.0 * k as f64).sqrt());
    }
    c
}

/// Orthonormal Hermite values `c_k H_k(v)` for `k = 0..=n`, optionally times
/// `e^{-v²/2}`.
///
/// The scaled recurrence `χ_{k+1} = √(2/(k+1)) v χ_k − √(k/(k+1)) χ_{k−1}`
/// keeps every term of moderate size.
pub(crate) fn orthonormal_values(n: usize, v: f64, weighted: bool) -> Vec<f64> {
    let start = if weighted {
        PI_POW_MINUS_QUARTER * (-0.5 * v * v).exp()
    } else {
        PI_POW_MINUS_QUARTER
    };
    let mut out = Vec::with_capacity(n + 1);
    out.push(start);
    if n >= 1 {
        out.push(std::f64::consts::SQRT_2 * v * start);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * v * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// Scaled tail integrals `c_k I_k(v)` for `k = 0..=n`.
///
/// Uses `c_k I_k = √(2/k) ψ_{k−1} + √((k−1)/k) c_{k−2} I_{k−2}` with
/// `ψ_k = c_k H_k(v) e^{-v²/2}`, which follows from
/// `I_k = 2 e^{-v²/2} H_{k−1}(v) + 2(k−1) I_{k−2}`. `v` may be `±∞`.
pub(crate) fn scaled_tail_integrals(n: usize, v: f64) -> Vec<f64> {
    let psi = if v.is_finite() {
        orthonormal_values(n.saturating_sub(1), v, true)
    } else {
        vec![0.0; n.max(1)]
    };
    let tail = if v == f64::NEG_INFINITY {
        1.0
    } else if v == f64::INFINITY {
        0.0
    } else {
        norm_sf(v)
    };
    let mut out = Vec::with_capacity(n + 1);
    out.push(PI_POW_MINUS_QUARTER * SQRT_2PI * tail);
    if n >= 1 {
        out.push(std::f64::consts::SQRT_2 * psi[0]);
    }
    for k in 2..=n {
        let kf = k as f64;
        let next = (2.0 / kf).sqrt() * psi[k - 1] + ((kf - 1.0) / kf).sqrt() * out[k - 2];
        out.push(next);
    }
    out
}
