use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a campaign's measurement ensemble is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    Gaussian,
    Coordinate,
    CustomPath(PathBuf),
}

/// How per-trial noise is drawn. The budget epsilon may be positive even
/// with `None` noise (a declared budget without realized noise).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    None,
    /// Uniform on the sphere of radius epsilon.
    SphereUniformAtEps,
    /// Uniform direction with radius u * epsilon, u uniform on [0, 1].
    SphereUniformScaled,
}

/// A seeded recovery campaign: problem shape, solver weights, noise model,
/// and trial count. Identical configs produce identical outputs byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    pub rank: usize,
    pub k: usize,
    pub t: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub ensemble_kind: EnsembleKind,
    pub noise_kind: NoiseKind,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::invalid("config", "n1 and n2 must be positive"));
        }
        if self.m == 0 {
            return Err(Error::invalid("config", "m must be positive"));
        }
        if self.rank == 0 || self.rank > self.n1.min(self.n2) {
            return Err(Error::invalid(
                "config",
                format!(
                    "rank must be in 1..={}, got {}",
                    self.n1.min(self.n2),
                    self.rank
                ),
            ));
        }
        if self.k == 0 || self.k > self.n1.min(self.n2) {
            return Err(Error::invalid(
                "config",
                format!("k must be in 1..={}, got {}", self.n1.min(self.n2), self.k),
            ));
        }
        if !self.t.is_finite() || self.t <= 1.0 {
            return Err(Error::invalid("config", format!("t must exceed 1, got {}", self.t)));
        }
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return Err(Error::invalid(
                "config",
                format!("lambda must be positive, got {}", self.lambda),
            ));
        }
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::invalid(
                "config",
                format!("epsilon must be nonnegative, got {}", self.epsilon),
            ));
        }
        if self.trials == 0 {
            return Err(Error::invalid("config", "trials must be >= 1"));
        }
        if self.ensemble_kind == EnsembleKind::Coordinate && self.m != self.n1 * self.n2 {
            return Err(Error::invalid(
                "config",
                format!(
                    "coordinate ensembles require m = n1*n2 = {}, got {}",
                    self.n1 * self.n2,
                    self.m
                ),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig {
            n1: 5,
            n2: 5,
            m: 20,
            rank: 1,
            k: 1,
            t: 2.0,
            lambda: 0.1,
            epsilon: 0.05,
            ensemble_kind: EnsembleKind::Gaussian,
            noise_kind: NoiseKind::SphereUniformAtEps,
            trials: 10,
            seed: 42,
        }
    }

    #[test]
    fn validation_catches_bad_fields() {
        assert!(base().validate().is_ok());
        let mut c = base();
        c.rank = 6;
        assert!(c.validate().is_err());
        let mut c = base();
        c.t = 1.0;
        assert!(c.validate().is_err());
        let mut c = base();
        c.ensemble_kind = EnsembleKind::Coordinate;
        assert!(c.validate().is_err());
        c.m = 25;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn json_round_trip() {
        let c = base();
        let s = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
        // kebab-case kinds on the wire
        assert!(s.contains("\"gaussian\""));
        assert!(s.contains("sphere-uniform-at-eps"));
    }
}
