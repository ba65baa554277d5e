//! Truncated-normal averaging over the atom–mode coupling strength.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SpectrumError;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Chebyshev-like initial guess, refined by Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Normal distribution of coupling strengths truncated to `[g_min, g_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GDistribution {
    pub g_mean: f64,
    pub g_sigma: f64,
    pub g_min: f64,
    pub g_max: f64,
    pub n_nodes: usize,
}

impl GDistribution {
    pub fn validate(&self) -> Result<(), SpectrumError> {
        if !(self.g_min < self.g_max) {
            return Err(SpectrumError::Domain(format!(
                "truncation bounds must satisfy g_min < g_max, got [{}, {}]",
                self.g_min, self.g_max
            )));
        }
        if !(self.g_sigma >= 0.0) || !self.g_mean.is_finite() {
            return Err(SpectrumError::Domain(format!(
                "invalid mean/standard deviation ({}, {})",
                self.g_mean, self.g_sigma
            )));
        }
        if self.n_nodes == 0 {
            return Err(SpectrumError::Domain("at least one quadrature node is required".into()));
        }
        Ok(())
    }

    /// Nodes and weights are fixed by the truncation interval; only the weights
    /// depend on the mean and width.
    pub fn nodes(&self) -> Vec<f64> {
        if self.is_degenerate() {
            return vec![self.mode()];
        }
        let (x, _) = gauss_legendre(self.n_nodes);
        let half = 0.5 * (self.g_max - self.g_min);
        let mid = 0.5 * (self.g_max + self.g_min);
        x.iter().map(|&x| mid + half * x).collect()
    }

    /// Most probable coupling within the bounds.
    pub fn mode(&self) -> f64 {
        self.g_mean.clamp(self.g_min, self.g_max)
    }

    /// A zero width or a single node collapses the average onto [`Self::mode`].
    pub fn is_degenerate(&self) -> bool {
        self.g_sigma == 0.0 || self.n_nodes == 1
    }

    /// Normalized weights at [`Self::nodes`].
    pub fn weights(&self) -> Result<Vec<f64>, SpectrumError> {
        self.validate()?;
        if self.is_degenerate() {
            return Ok(vec![1.0]);
        }
        let (x, w) = gauss_legendre(self.n_nodes);
        let half = 0.5 * (self.g_max - self.g_min);
        let mid = 0.5 * (self.g_max + self.g_min);
        let raw: Vec<f64> = x
            .iter()
            .zip(&w)
            .map(|(&x, &w)| {
                let z = (mid + half * x - self.g_mean) / self.g_sigma;
                w * (-0.5 * z * z).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(SpectrumError::Domain(
                "distribution has no mass inside the truncation interval".into(),
            ));
        }
        Ok(raw.into_iter().map(|r| r / total).collect())
    }

    /// `(node, weight)` pairs.
    pub fn quadrature(&self) -> Result<Vec<(f64, f64)>, SpectrumError> {
        Ok(self.nodes().into_iter().zip(self.weights()?).collect())
    }
}
