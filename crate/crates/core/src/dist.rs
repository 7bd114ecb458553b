use crate::error::{Error, Result};
use crate::tol::Tolerances;

/// A probability distribution with full support on the states `0..n`.
///
/// Every entry is strictly positive and the entries sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerances(probs, &Tolerances::default())
    }

    pub fn with_tolerances(probs: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("empty distribution".into()));
        }
        if let Some((x, &p)) = probs.iter().enumerate().find(|(_, &p)| p <= 0.0 || p.is_nan()) {
            return Err(Error::InvalidArgument(format!(
                "distribution must have full support, but entry {x} is {p}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol.algebra {
            return Err(Error::InvalidArgument(format!(
                "distribution sums to {sum}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Normalises strictly positive weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty weight vector".into()));
        }
        if let Some((x, &w)) = weights.iter().enumerate().find(|(_, &w)| w <= 0.0 || w.is_nan()) {
            return Err(Error::InvalidArgument(format!(
                "weights must be strictly positive, but entry {x} is {w}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        Ok(Self {
            probs: weights.iter().map(|w| w / sum).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution needs at least one state");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn get(&self, x: usize) -> f64 {
        self.probs[x]
    }

    /// Total mass of a set of states.
    pub fn mass<'a, I: IntoIterator<Item = &'a usize>>(&self, states: I) -> f64 {
        states.into_iter().map(|&x| self.probs[x]).sum()
    }

    /// Restriction to `states`, renormalised.
    pub fn restrict(&self, states: &[usize]) -> Result<Distribution> {
        let weights: Vec<f64> = states.iter().map(|&x| self.probs[x]).collect();
        Distribution::from_weights(&weights)
    }

    /// `<f, g>_pi`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n());
        debug_assert_eq!(g.len(), self.n());
        f.iter()
            .zip(g)
            .zip(&self.probs)
            .map(|((a, b), p)| a * b * p)
            .sum()
    }

    /// `pi`-mean of `f`.
    pub fn mean(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.probs).map(|(a, p)| a * p).sum()
    }

    /// Squared `pi`-norm of `f`.
    pub fn norm_sq(&self, f: &[f64]) -> f64 {
        self.inner(f, f)
    }

    /// Maximum absolute difference to another distribution on the same space.
    pub fn max_diff(&self, other: &Distribution) -> f64 {
        self.probs
            .iter()
            .zip(other.probs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
