//! Probability vectors on the K-simplex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of a [`TopicDistribution`].
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A length-K probability vector: entries in `[0, 1]`, summing to one.
///
/// Serializes as a bare JSON array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TopicDistribution {
    probs: Vec<f64>,
}

impl TopicDistribution {
    /// Validates `probs` without renormalizing.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_simplex(&probs)?;
        Ok(TopicDistribution { probs })
    }

    /// Normalizes non-negative weights. Fails when the weights sum to zero or
    /// contain a negative or non-finite entry.
    pub fn from_weights(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(TopicDistribution { probs: weights })
    }

    pub fn uniform(k: usize) -> Self {
        TopicDistribution {
            probs: vec![1.0 / k as f64; k],
        }
    }

    pub fn one_hot(k: usize, hot: usize) -> Self {
        let mut probs = vec![0.0; k];
        probs[hot] = 1.0;
        TopicDistribution { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn argmax(&self) -> usize {
        self.probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Reorders components: entry `i` of the result is entry `perm[i]` of self.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        TopicDistribution {
            probs: perm.iter().map(|&p| self.probs[p]).collect(),
        }
    }

    pub fn l1_distance(&self, other: &TopicDistribution) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

impl TryFrom<Vec<f64>> for TopicDistribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        TopicDistribution::new(v)
    }
}

impl From<TopicDistribution> for Vec<f64> {
    fn from(d: TopicDistribution) -> Vec<f64> {
        d.probs
    }
}

impl AsRef<[f64]> for TopicDistribution {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

pub(crate) fn check_simplex(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty vector".into()));
    }
    if let Some(bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidDistribution(format!(
            "entry {bad} outside [0, 1]"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidDistribution(format!("sums to {sum}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_off_simplex() {
        assert!(TopicDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(TopicDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(TopicDistribution::new(vec![]).is_err());
        assert!(TopicDistribution::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn from_weights_normalizes() {
        let d = TopicDistribution::from_weights(vec![1.0, 3.0]).unwrap();
        assert_eq!(d.as_slice(), &[0.25, 0.75]);
        assert!(TopicDistribution::from_weights(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn json_is_a_bare_array() {
        let d = TopicDistribution::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(serde_json::to_string(&d).unwrap(), "[0.25,0.75]");
        let bad: std::result::Result<TopicDistribution, _> = serde_json::from_str("[0.3,0.3]");
        assert!(bad.is_err());
    }
}
