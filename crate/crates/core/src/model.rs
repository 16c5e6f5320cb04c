//! Isotropic covariance models `E X(s)X(t) = ρ(‖s − t‖²)`.
//!
//! A model carries the profile and its first two derivatives as callables
//! (the argument is the squared distance) and caches `ρ′(0)`, `ρ″(0)` and
//! `γ = |ρ′(0)|/√ρ″(0)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{integrate_adaptive, AdaptiveOptions};

pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Serializable description of a built-in family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    /// `ρ(x) = e^{−cx}`.
    SquaredExponential { c: f64 },
    /// `ρ(x) = (1 + cx)^{−β}`.
    Rational { c: f64, beta: f64 },
}

#[derive(Clone)]
pub struct IsotropicModel {
    rho: Profile,
    rho1: Profile,
    rho2: Profile,
    /// `1 − ρ(x)`, evaluated without cancellation when the family allows it.
    omr: Profile,
    rho1_0: f64,
    rho2_0: f64,
    gamma: f64,
    monotone: bool,
    spec: Option<ModelSpec>,
}

impl fmt::Debug for IsotropicModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IsotropicModel")
            .field("rho1_0", &self.rho1_0)
            .field("rho2_0", &self.rho2_0)
            .field("gamma", &self.gamma)
            .field("monotone", &self.monotone)
            .field("spec", &self.spec)
            .finish()
    }
}

impl IsotropicModel {
    /// Model from user-supplied callables. No validation is done here; run
    /// [`validate_model`] before trusting the result.
    pub fn from_profile(rho: Profile, rho1: Profile, rho2: Profile, monotone: bool) -> Self {
        let rho1_0 = rho1(0.0);
        let rho2_0 = rho2(0.0);
        let gamma = if rho2_0 > 0.0 {
            (rho1_0.abs() / rho2_0.sqrt()).min(1.0)
        } else {
            f64::NAN
        };
        let (r, d) = (rho.clone(), rho1.clone());
        // near 0, 1 − ρ(x) = −∫_0^x ρ′ avoids the cancellation in 1 − ρ(x)
        let omr: Profile = Arc::new(move |x| {
            let v = r(x);
            if !(v > 0.5 && x > 0.0) {
                return 1.0 - v;
            }
            let opts = AdaptiveOptions {
                abs_tol: 0.0,
                rel_tol: 1e-13,
                max_intervals: 50,
            };
            match integrate_adaptive(|t| d(t), 0.0, x, opts) {
                Ok(est) => -est.value,
                Err(_) => 1.0 - v,
            }
        });
        Self {
            rho,
            rho1,
            rho2,
            omr,
            rho1_0,
            rho2_0,
            gamma,
            monotone,
            spec: None,
        }
    }

    pub fn squared_exponential(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidModel(format!("squared exponential needs c > 0, got {c}")));
        }
        let mut m = Self::from_profile(
            Arc::new(move |x| (-c * x).exp()),
            Arc::new(move |x| -c * (-c * x).exp()),
            Arc::new(move |x| c * c * (-c * x).exp()),
            true,
        );
        m.omr = Arc::new(move |x| -(-c * x).exp_m1());
        m.gamma = 1.0;
        m.spec = Some(ModelSpec::SquaredExponential { c });
        Ok(m)
    }

    pub fn rational(c: f64, beta: f64) -> Result<Self> {
        if !(c > 0.0 && beta > 0.0 && c.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "rational model needs c, beta > 0, got c = {c}, beta = {beta}"
            )));
        }
        let mut m = Self::from_profile(
            Arc::new(move |x| (1.0 + c * x).powf(-beta)),
            Arc::new(move |x| -c * beta * (1.0 + c * x).powf(-beta - 1.0)),
            Arc::new(move |x| c * c * beta * (beta + 1.0) * (1.0 + c * x).powf(-beta - 2.0)),
            true,
        );
        m.omr = Arc::new(move |x| -(-beta * (c * x).ln_1p()).exp_m1());
        m.gamma = (beta / (beta + 1.0)).sqrt();
        m.spec = Some(ModelSpec::Rational { c, beta });
        Ok(m)
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        match *spec {
            ModelSpec::SquaredExponential { c } => Self::squared_exponential(c),
            ModelSpec::Rational { c, beta } => Self::rational(c, beta),
        }
    }

    pub fn rho(&self, x: f64) -> f64 {
        (self.rho)(x)
    }

    pub fn rho1(&self, x: f64) -> f64 {
        (self.rho1)(x)
    }

    pub fn rho2(&self, x: f64) -> f64 {
        (self.rho2)(x)
    }

    /// `1 − ρ(x)`.
    pub fn one_minus_rho(&self, x: f64) -> f64 {
        (self.omr)(x)
    }

    /// `ρ′(0)`, negative for a valid model.
    pub fn rho1_0(&self) -> f64 {
        self.rho1_0
    }

    /// `ρ″(0)`, positive for a valid model.
    pub fn rho2_0(&self) -> f64 {
        self.rho2_0
    }

    /// `γ = |ρ′(0)|/√ρ″(0) ∈ (0, 1]`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Whether `ρ′(x) ≤ 0` for all `x ≥ 0`.
    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn spec(&self) -> Option<&ModelSpec> {
        self.spec.as_ref()
    }

    /// `1 − γ²`, clamped at zero.
    pub fn one_minus_gamma2(&self) -> f64 {
        (1.0 - self.gamma * self.gamma).max(0.0)
    }

    /// Structural checks needed by every evaluator.
    pub fn ensure_valid(&self) -> Result<()> {
        let rho0 = self.rho(0.0);
        if !((rho0 - 1.0).abs() <= 1e-12) {
            return Err(Error::InvalidModel(format!("rho(0) = {rho0}, expected 1")));
        }
        if !(self.rho1_0 < 0.0 && self.rho1_0.is_finite()) {
            return Err(Error::InvalidModel(format!("rho'(0) = {} must be negative", self.rho1_0)));
        }
        let excess = self.rho2_0 - self.rho1_0 * self.rho1_0;
        if !(self.rho2_0.is_finite() && excess >= -1e-12) {
            return Err(Error::InvalidModel(format!(
                "rho''(0) - rho'(0)^2 = {excess} must be nonnegative"
            )));
        }
        Ok(())
    }

    /// Model of the same field after rescaling space by `√(2|ρ′(0)|)`, so
    /// that the new profile has `ρ′(0) = −1/2` and `ρ″(0) = ρ″/(4ρ′²)`.
    pub fn normalized(&self) -> Self {
        let lam = 1.0 / (2.0 * self.rho1_0.abs());
        let (r0, r1, r2) = (self.rho.clone(), self.rho1.clone(), self.rho2.clone());
        let omr = self.omr.clone();
        Self {
            rho: Arc::new(move |x| r0(lam * x)),
            omr: Arc::new(move |x| omr(lam * x)),
            rho1: Arc::new(move |x| lam * r1(lam * x)),
            rho2: Arc::new(move |x| lam * lam * r2(lam * x)),
            rho1_0: -0.5,
            rho2_0: self.rho2_0 * lam * lam,
            gamma: self.gamma,
            monotone: self.monotone,
            spec: None,
        }
    }

    /// Factor mapping lengths to the coordinates of [`normalized`](Self::normalized).
    pub fn length_scale(&self) -> f64 {
        (2.0 * self.rho1_0.abs()).sqrt()
    }
}

/// One failed check from [`validate_model`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum ModelFailure {
    Normalization { rho0: f64 },
    DerivativeSign { rho1_0: f64 },
    VarianceBound { excess: f64 },
    FirstDerivative { x: f64, analytic: f64, numeric: f64 },
    SecondDerivative { x: f64, analytic: f64, numeric: f64 },
    Monotonicity { x: f64, rho1: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub failures: Vec<ModelFailure>,
}

impl ModelReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks normalization, signs at 0, and the derivative callables against
/// central differences (step `1e−5`, shrunk for steep profiles) on a grid of squared distances.
pub fn validate_model(m: &IsotropicModel) -> ModelReport {
    let mut failures = Vec::new();
    let rho0 = m.rho(0.0);
    if !((rho0 - 1.0).abs() <= 1e-12) {
        failures.push(ModelFailure::Normalization { rho0 });
    }
    if !(m.rho1_0 < 0.0) {
        failures.push(ModelFailure::DerivativeSign { rho1_0: m.rho1_0 });
    }
    let excess = m.rho2_0 - m.rho1_0 * m.rho1_0;
    if !(excess >= -1e-12) {
        failures.push(ModelFailure::VarianceBound { excess });
    }

    let h = 1e-5 / m.rho1_0.abs().max(1.0);
    let spacing = if m.rho1_0 < 0.0 { 0.05 / m.rho1_0.abs() } else { 0.05 };
    let mut first_done = false;
    let mut second_done = false;
    let mut mono_done = false;
    for k in 0..=200 {
        let x = h + k as f64 * spacing;
        let d1 = m.rho1(x);
        let num1 = (m.rho(x + h) - m.rho(x - h)) / (2.0 * h);
        if !first_done && !((d1 - num1).abs() <= 1e-6 * d1.abs().max(1.0)) {
            failures.push(ModelFailure::FirstDerivative {
                x,
                analytic: d1,
                numeric: num1,
            });
            first_done = true;
        }
        let d2 = m.rho2(x);
        let num2 = (m.rho1(x + h) - m.rho1(x - h)) / (2.0 * h);
        if !second_done && !((d2 - num2).abs() <= 1e-6 * d2.abs().max(1.0)) {
            failures.push(ModelFailure::SecondDerivative {
                x,
                analytic: d2,
                numeric: num2,
            });
            second_done = true;
        }
        if m.monotone && !mono_done && !(d1 <= 1e-12) {
            failures.push(ModelFailure::Monotonicity { x, rho1: d1 });
            mono_done = true;
        }
    }
    ModelReport { failures }
}
