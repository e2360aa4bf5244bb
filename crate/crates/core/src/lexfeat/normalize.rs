use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureVector, N_FEATURES};
use crate::error::{Error, Result};

pub const NORMALIZER_EPSILON: f64 = 1e-6;

/// Per-feature z-score transform `(x - mean) / (sd + eps)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: [f64; N_FEATURES],
    /// Sample (n - 1) standard deviation.
    pub sd: [f64; N_FEATURES],
    pub epsilon: f64,
    pub fitted_on: usize,
}

impl Normalizer {
    pub fn fit(vectors: &[FeatureVector]) -> Result<Self> {
        if vectors.len() < 2 {
            return Err(Error::param(format!(
                "normalizer needs at least 2 vectors, got {}",
                vectors.len()
            )));
        }
        let n = vectors.len() as f64;
        let mut mean = [0.0; N_FEATURES];
        for v in vectors {
            for (m, x) in mean.iter_mut().zip(v.0) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut sd = [0.0; N_FEATURES];
        for v in vectors {
            for ((s, x), m) in sd.iter_mut().zip(v.0).zip(mean) {
                *s += (x - m) * (x - m);
            }
        }
        sd.iter_mut().for_each(|s| *s = (*s / (n - 1.0)).sqrt());
        Ok(Self {
            mean,
            sd,
            epsilon: NORMALIZER_EPSILON,
            fitted_on: vectors.len(),
        })
    }

    pub fn apply(&self, v: &FeatureVector) -> FeatureVector {
        let mut out = [0.0; N_FEATURES];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (v.0[i] - self.mean[i]) / (self.sd[i] + self.epsilon);
        }
        FeatureVector(out)
    }

    pub fn apply_all(&self, vs: &[FeatureVector]) -> Vec<FeatureVector> {
        vs.iter().map(|v| self.apply(v)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("normalizer serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let n: Normalizer = serde_json::from_str(s)?;
        if !(n.epsilon > 0.0) || n.sd.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::param(
                "normalizer has negative sd or non-positive epsilon",
            ));
        }
        Ok(n)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> Vec<FeatureVector> {
        values
            .iter()
            .map(|&x| {
                let mut v = FeatureVector::zeros();
                v.0[0] = x;
                v.0[1] = 5.0;
                v
            })
            .collect()
    }

    #[test]
    fn fit_examples() {
        let n = Normalizer::fit(&column(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(n.mean[0], 2.0);
        assert_eq!(n.sd[0], 1.0);
        assert_eq!(n.mean[1], 5.0);
        assert_eq!(n.sd[1], 0.0);
        assert!(Normalizer::fit(&column(&[1.0])).is_err());
    }

    #[test]
    fn apply_examples() {
        let n = Normalizer::fit(&column(&[1.0, 2.0, 3.0])).unwrap();
        let out = n.apply(&column(&[3.0])[0]);
        assert!((out.0[0] - 1.0 / (1.0 + 1e-6)).abs() < 1e-15);
        assert!((out.0[0] - 0.999999).abs() < 1e-9);
        assert_eq!(out.0[1], 0.0);
        assert_eq!(n.apply(&column(&[2.0])[0]).0[0], 0.0);
    }

    #[test]
    fn json_round_trip() {
        let n = Normalizer::fit(&column(&[0.1, 0.7, 3.3])).unwrap();
        assert_eq!(Normalizer::from_json(&n.to_json()).unwrap(), n);
    }
}
