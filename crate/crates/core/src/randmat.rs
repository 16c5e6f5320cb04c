//! GOE eigenvalue density, the expected absolute determinant of a shifted
//! GOE matrix, GOE and conditional-Hessian samplers, and Monte Carlo oracles.
//!
//! GOE(n): symmetric `n × n` matrices with independent centred Gaussian
//! entries on and above the diagonal, `Var g_ii = 1`, `Var g_ik = 1/2`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::hermite::{orthonormal_values, scaled_tail_integrals};
use crate::mc::substream;
use crate::model::IsotropicModel;
use crate::special::gamma_fn;

pub use crate::mc::McEstimate;

/// Largest matrix size accepted by [`goe_eigen_density`].
pub const MAX_GOE_SIZE: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoeEvaluation {
    pub n: usize,
    pub nu: f64,
    /// `q_n(ν)`, expected number of eigenvalues per unit length at `ν`.
    pub density: f64,
    /// `E|det(G_n − νI_n)|`.
    pub absdet_mean: f64,
}

fn check_size(n: usize, max: usize) -> Result<()> {
    if n == 0 {
        return precondition("GOE size must be positive");
    }
    if n > max {
        return Err(Error::SizeCap {
            what: "GOE size",
            value: n,
            max,
        });
    }
    Ok(())
}

/// `q_n(ν)` when `weighted`, otherwise `e^{ν²/2} q_n(ν)`.
///
/// Hermite series
///
/// ```text
/// Σ_{k<n} ψ_k² + ½√(n/2) ψ_{n−1} [c_n I_n(−∞) − 2 c_n I_n(ν)]
///   + 1_{n odd} ψ_{n−1}/(c_{n−1} I_{n−1}(−∞))
/// ```
///
/// with `ψ_k = c_k H_k(ν) e^{−ν²/2}` and `c_k = (2^k k! √π)^{−1/2}`. All terms are carried in orthonormal
/// scaling so no factorial is ever formed.
fn density_series(n: usize, nu: f64, weighted: bool) -> f64 {
    let chi = orthonormal_values(n - 1, nu, false);
    let w = (-0.5 * nu * nu).exp();
    let tail = scaled_tail_integrals(n, nu);
    let full = scaled_tail_integrals(n, f64::NEG_INFINITY);

    let sum_sq: f64 = chi.iter().map(|c| c * c).sum();
    let last = chi[n - 1];
    let nf = n as f64;
    let mut rest = 0.5 * (nf / 2.0).sqrt() * last * (full[n] - 2.0 * tail[n]);
    if n % 2 == 1 {
        rest += last / full[n - 1];
    }
    if weighted {
        if w == 0.0 {
            return 0.0;
        }
        w * (w * sum_sq + rest)
    } else {
        w * sum_sq + rest
    }
}

/// One-point eigenvalue density `q_n(ν)` of GOE(n), normalized so that
/// `∫ q_n = n`.
pub fn goe_eigen_density(n: usize, nu: f64) -> Result<f64> {
    check_size(n, MAX_GOE_SIZE)?;
    if nu.is_nan() {
        return precondition("goe_eigen_density: nu is NaN");
    }
    if nu.is_infinite() {
        return Ok(0.0);
    }
    Ok(density_series(n, nu, true).max(0.0))
}

/// `E|det(G_n − νI_n)| = 2^{3/2} Γ((n+3)/2) e^{ν²/2} q_{n+1}(ν)/(n+1)`.
pub fn expected_absdet_shifted_goe(n: usize, nu: f64) -> Result<f64> {
    check_size(n, MAX_GOE_SIZE - 1)?;
    if !nu.is_finite() {
        return precondition("expected_absdet_shifted_goe: nu must be finite");
    }
    let nf = n as f64;
    let scaled = density_series(n + 1, nu, false);
    Ok((2.0 * std::f64::consts::SQRT_2 * gamma_fn((nf + 3.0) / 2.0) * scaled / (nf + 1.0)).max(0.0))
}

/// Density and absolute determinant together.
pub fn evaluate_goe(n: usize, nu: f64) -> Result<GoeEvaluation> {
    Ok(GoeEvaluation {
        n,
        nu,
        density: goe_eigen_density(n, nu)?,
        absdet_mean: expected_absdet_shifted_goe(n, nu)?,
    })
}

/// One GOE(n) draw. Entries are drawn row by row over the upper triangle.
pub fn sample_goe<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(n, n);
    let off = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in i..n {
            let z: f64 = rng.sample(StandardNormal);
            let v = if i == j { z } else { off * z };
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Monte Carlo estimate of `E|det(G_n − νI_n)|`, one substream per replicate.
pub fn mc_absdet(n: usize, nu: f64, reps: usize, seed: u64) -> Result<McEstimate> {
    check_size(n, MAX_GOE_SIZE)?;
    if reps < 2 {
        return precondition("mc_absdet needs at least 2 replicates");
    }
    let samples: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r as u64);
            let mut g = sample_goe(n, &mut rng);
            for i in 0..n {
                g[(i, i)] -= nu;
            }
            g.determinant().abs()
        })
        .collect();
    Ok(McEstimate::from_samples(&samples, seed))
}

/// One draw of the Hessian law conditional on `X(t) = x` at a critical point:
/// `√(8ρ″) G_j + 2√(ρ″ − ρ′²) ξ I_j + 2ρ′x I_j`.
pub fn conditional_hessian_sample<R: Rng + ?Sized>(
    model: &IsotropicModel,
    j: usize,
    x: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    model.ensure_valid()?;
    if j == 0 {
        return precondition("conditional_hessian_sample needs j >= 1");
    }
    let r1 = model.rho1_0();
    let r2 = model.rho2_0();
    let mut z = sample_goe(j, rng) * (8.0 * r2).sqrt();
    let xi: f64 = rng.sample(StandardNormal);
    let shift = 2.0 * (r2 - r1 * r1).max(0.0).sqrt() * xi + 2.0 * r1 * x;
    for i in 0..j {
        z[(i, i)] += shift;
    }
    Ok(z)
}
