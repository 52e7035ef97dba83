use crate::error::{invalid, Result};

const SIMPLEX_TOL: f64 = 1e-9;

/// A probability vector over one player's actions.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("weights", "empty strategy"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("weights", "negative or non-finite weight"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(invalid("weights", format!("sum is {total}, expected 1")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn pure(n: usize, action: usize) -> Self {
        let mut w = vec![0.0; n];
        w[action] = 1.0;
        Self(w)
    }

    /// Wraps weights already known to be on the simplex.
    pub(crate) fn from_raw(weights: Vec<f64>) -> Self {
        debug_assert!((weights.iter().sum::<f64>() - 1.0).abs() <= 1e-6, "weights off the simplex");
        Self(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    /// Inverse-CDF draw from a uniform variate `u ∈ [0,1)`.
    pub fn sample_with(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (k, w) in self.0.iter().enumerate() {
            acc += w;
            if u < acc {
                return k;
            }
        }
        self.0.iter().rposition(|w| *w > 0.0).unwrap_or(self.0.len() - 1)
    }
}

impl std::ops::Index<usize> for MixedStrategy {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}
