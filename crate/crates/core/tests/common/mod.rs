//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the library's Hermite recurrences, tail integrals or
//! `T_j` series; the oracles go through explicit sums, closed forms and
//! composite Simpson integration. Only the normal tail is shared.

#![allow(dead_code)]

use maxbound::model::IsotropicModel;
use maxbound::randmat::expected_absdet_shifted_goe;
use maxbound::special::norm_sf;

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Composite Simpson rule with `n` (rounded up to even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Physicists' Hermite polynomial from its explicit coefficient sum
/// `H_n(v) = n! Σ_i (−1)^i (2v)^{n−2i}/(i!(n−2i)!)`.
pub fn hermite_explicit(n: u32, v: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..=n / 2 {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * (2.0 * v).powi((n - 2 * i) as i32) / (factorial(i) * factorial(n - 2 * i));
    }
    factorial(n) * s
}

/// Probabilists' Hermite polynomial from its explicit coefficient sum
/// `He_n(x) = n! Σ_i (−1)^i x^{n−2i}/(2^i i!(n−2i)!)`.
pub fn modified_hermite_explicit(n: u32, x: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..=n / 2 {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * x.powi((n - 2 * i) as i32) / (2f64.powi(i as i32) * factorial(i) * factorial(n - 2 * i));
    }
    factorial(n) * s
}

/// Closed forms of `T_1`, `T_2`, `T_3`.
pub fn t_closed_form(j: usize, v: f64) -> f64 {
    let p = phi(v);
    let q = norm_sf(v);
    match j {
        1 => SQRT_2PI * (p - v * q),
        2 => 2.0 * SQRT_2PI * p,
        3 => (std::f64::consts::PI / 2.0).sqrt() * (3.0 * (2.0 * v * v + 1.0) * p - (2.0 * v * v - 3.0) * v * q),
        _ => panic!("closed form only for j = 1, 2, 3"),
    }
}

/// The density bound evaluated from the conditional-expectation form: for
/// each face dimension `j`, the Hessian law at a critical point is
/// `√(8ρ″) (G_j − ν I)` with `ν = −((1−γ²)^{1/2} y − γx)/√2`, `y ~ N(0,1)`, so
///
/// `p̄(x) = φ(x) [g_0 + Σ_j g_j (2ρ″/(π|ρ′|))^{j/2} ∫ E|det(G_j − ν(y))| φ(y) dy]`.
///
/// `E|det|` comes from the GOE eigenvalue density, the `y` integral from
/// Simpson's rule.
pub fn pbar_goe_path(m: &IsotropicModel, g: &[f64], x: f64) -> f64 {
    let r1 = m.rho1_0().abs();
    let r2 = m.rho2_0();
    let gamma = r1 / r2.sqrt();
    let s = (1.0 - gamma * gamma).max(0.0).sqrt();
    let mut total = g[0];
    for (j, &gj) in g.iter().enumerate().skip(1) {
        let nu = |y: f64| -(s * y - gamma * x) / std::f64::consts::SQRT_2;
        let e = if s == 0.0 {
            expected_absdet_shifted_goe(j, nu(0.0)).unwrap()
        } else {
            simpson(|y| expected_absdet_shifted_goe(j, nu(y)).unwrap() * phi(y), -14.0, 14.0, 4000)
        };
        total += gj * (2.0 * r2 / (std::f64::consts::PI * r1)).powf(j as f64 / 2.0) * e;
    }
    phi(x) * total
}

/// Elementary symmetric polynomial `e_j` by summing over all `j`-subsets.
pub fn elementary_symmetric_by_subsets(sides: &[f64], j: usize) -> f64 {
    let d = sides.len();
    let mut s = 0.0;
    for mask in 0u32..(1 << d) {
        if mask.count_ones() as usize == j {
            s += (0..d).filter(|i| mask & (1 << i) != 0).map(|i| sides[i]).product::<f64>();
        }
    }
    s
}

/// Least-squares coefficients of `y ≈ X β`.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let x = nalgebra::DMatrix::from_fn(rows.len(), rows[0].len(), |i, k| rows[i][k]);
    let y = nalgebra::DVector::from_column_slice(y);
    x.svd(true, true).solve(&y, 1e-14).unwrap().iter().copied().collect()
}
