//! Gauss rules for the weight `e^{-y²/2}` on the real line.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::special::SQRT_2PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    ExpMinusY2Over2,
}

/// Nodes and positive weights approximating `∫ f(y) e^{-y²/2} dy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    weight_kind: WeightKind,
}

/// Default number of nodes.
pub const DEFAULT_NODES: usize = 64;

/// Orthonormal probabilists' Hermite values `p_0..=p_n` at `y`.
fn orthonormal(n: usize, y: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0 / SQRT_2PI.sqrt());
    if n >= 1 {
        p.push(y * p[0]);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (y * p[k] - kf.sqrt() * p[k - 1]) / (kf + 1.0).sqrt();
        p.push(next);
    }
    p
}

impl QuadratureRule {
    /// Explicit rule; validates lengths, positivity and finiteness.
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return precondition("quadrature rule needs equally many nodes and weights, at least one");
        }
        if nodes.iter().any(|x| !x.is_finite()) || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return precondition("quadrature nodes must be finite and weights positive");
        }
        Ok(Self {
            nodes,
            weights,
            weight_kind: WeightKind::ExpMinusY2Over2,
        })
    }

    /// `n`-point Gauss–Hermite rule for `e^{-y²/2}`.
    ///
    /// Golub–Welsch eigenvalues give the nodes, one Newton polish on the
    /// orthonormal recurrence sharpens them, and the weights come from the
    /// Christoffel function `1/Σ p_k(y)²`.
    pub fn gauss_hermite(n: usize) -> Result<Self> {
        if n == 0 || n > 200 {
            return precondition(format!("gauss_hermite: node count {n} outside 1..=200"));
        }
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(|a, b| a.total_cmp(b));
        for y in nodes.iter_mut() {
            for _ in 0..2 {
                let p = orthonormal(n, *y);
                let deriv = (n as f64).sqrt() * p[n - 1];
                if deriv != 0.0 {
                    *y -= p[n] / deriv;
                }
            }
        }
        // exact symmetry
        for i in 0..n / 2 {
            let m = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            nodes[i] = -m;
            nodes[n - 1 - i] = m;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let weights = nodes
            .iter()
            .map(|&y| 1.0 / orthonormal(n - 1, y).iter().map(|p| p * p).sum::<f64>())
            .collect();
        Self::new(nodes, weights)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_kind(&self) -> WeightKind {
        self.weight_kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(y_i)`; errors at the first node where `f` is not finite.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let mut sum = 0.0;
        for (&y, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(y);
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand { node: y, value: v });
            }
            sum += w * v;
        }
        Ok(sum)
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::gauss_hermite(DEFAULT_NODES).expect("default Gauss-Hermite rule")
    }
}

/// `∫ f(y) e^{-y²/2} dy` by the given rule.
pub fn gauss_weight_integrate<F: Fn(f64) -> f64>(f: F, rule: &QuadratureRule) -> Result<f64> {
    rule.integrate(f)
}
