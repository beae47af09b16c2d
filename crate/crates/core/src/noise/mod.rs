//! Synthetic noisy-label dataset on a hypersphere, a small trainable model,
//! and per-sample angular trajectories.
//!
//! Two kinds of label noise are produced:
//!
//! * Type-I: a sample of an identity that belongs to no class is filed under
//!   some class label.
//! * Type-II: one identity is split across two class labels; every sample of
//!   both classes is affected.

mod dataset;
mod drift;
mod train;

pub use dataset::{generate_dataset, Dataset, Sample};
pub use drift::{drift_statistics, DriftRow, Quadrants};
pub use train::{train, AngularTrajectory, TrainingRun};

use std::fmt;

use crate::error::{Error, Result};
use crate::margin::{Family, LossSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseLabel {
    Clean,
    TypeI,
    TypeII,
}

impl NoiseLabel {
    pub const ALL: [NoiseLabel; 3] = [NoiseLabel::Clean, NoiseLabel::TypeI, NoiseLabel::TypeII];

    pub fn name(self) -> &'static str {
        match self {
            NoiseLabel::Clean => "clean",
            NoiseLabel::TypeI => "type1",
            NoiseLabel::TypeII => "type2",
        }
    }
}

impl fmt::Display for NoiseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything needed to generate the toy dataset and train on it.
#[derive(Debug, Clone, PartialEq)]
pub struct ToySpec {
    pub input_dim: usize,
    pub embed_dim: usize,
    pub class_count: usize,
    pub samples_per_class: usize,
    pub type1_fraction: f64,
    /// Identities split across two class labels each.
    pub type2_pair_count: usize,
    /// Norm scale of the Gaussian perturbation around an identity direction.
    pub dispersion: f64,
    pub loss: LossSpec,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ToySpec {
    /// The desk-scale configuration: 16 classes of 20 samples in 32
    /// dimensions, embedded into 8, trained with ExpFace (m = 0.7, s = 64).
    fn default() -> Self {
        Self {
            input_dim: 32,
            embed_dim: 8,
            class_count: 16,
            samples_per_class: 20,
            type1_fraction: 0.1,
            type2_pair_count: 2,
            dispersion: 0.3,
            loss: LossSpec::with_defaults(Family::ExpFace),
            learning_rate: 3e-4,
            epochs: 100,
            batch_size: 16,
            seed: 7,
        }
    }
}

impl ToySpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.input_dim < 2 {
            return fail(format!("input_dim must be >= 2, got {}", self.input_dim));
        }
        if self.embed_dim < 2 {
            return fail(format!("embed_dim must be >= 2, got {}", self.embed_dim));
        }
        if self.class_count < 2 {
            return fail(format!("class_count must be >= 2, got {}", self.class_count));
        }
        if self.samples_per_class < 1 {
            return fail("samples_per_class must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.type1_fraction) {
            return fail(format!("type1_fraction must lie in [0, 1), got {}", self.type1_fraction));
        }
        if 2 * self.type2_pair_count > self.class_count {
            return fail(format!(
                "type2_pair_count {} needs {} classes, only {} available",
                self.type2_pair_count,
                2 * self.type2_pair_count,
                self.class_count
            ));
        }
        if !(self.dispersion.is_finite() && self.dispersion > 0.0) {
            return fail(format!("dispersion must be > 0, got {}", self.dispersion));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return fail(format!("learning_rate must be >= 0, got {}", self.learning_rate));
        }
        if self.epochs < 1 {
            return fail("epochs must be >= 1".into());
        }
        if self.batch_size < 1 {
            return fail("batch_size must be >= 1".into());
        }
        Ok(())
    }

    /// Type-I samples per unpaired class.
    pub fn type1_per_class(&self) -> usize {
        (self.type1_fraction * self.samples_per_class as f64).round() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_is_valid() {
        ToySpec::default().validate().unwrap();
        assert_eq!(ToySpec::default().type1_per_class(), 2);
    }

    #[test]
    fn infeasible_specs_are_rejected() {
        let bad = [
            ToySpec { type2_pair_count: 9, ..ToySpec::default() },
            ToySpec { type1_fraction: 1.0, ..ToySpec::default() },
            ToySpec { epochs: 0, ..ToySpec::default() },
            ToySpec { dispersion: 0.0, ..ToySpec::default() },
            ToySpec { learning_rate: -1.0, ..ToySpec::default() },
            ToySpec { class_count: 1, type2_pair_count: 0, ..ToySpec::default() },
        ];
        for spec in bad {
            assert!(matches!(spec.validate(), Err(Error::Config(_))), "{spec:?}");
        }
    }
}
