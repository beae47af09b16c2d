use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{NoiseLabel, ToySpec};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: usize,
    /// Unit-norm raw input.
    pub input: Vec<f64>,
    pub label: usize,
    pub noise: NoiseLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    /// Identity direction behind each class label.
    pub class_identities: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn count(&self, noise: NoiseLabel) -> usize {
        self.samples.iter().filter(|s| s.noise == noise).count()
    }
}

pub(crate) fn unit_gaussian<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn perturbed<R: Rng>(rng: &mut R, identity: &[f64], dispersion: f64) -> Vec<f64> {
    // per-coordinate sd chosen so the perturbation has expected norm ~ dispersion
    let sd = dispersion / (identity.len() as f64).sqrt();
    let v: Vec<f64> = identity
        .iter()
        .map(|&c| c + sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Builds the labelled dataset. Classes `2p` and `2p + 1` for
/// `p < type2_pair_count` share one identity; every other class gets
/// `type1_per_class()` samples drawn from a fresh, unassigned identity.
pub fn generate_dataset(spec: &ToySpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let paired = 2 * spec.type2_pair_count;

    let mut class_identities: Vec<Vec<f64>> = Vec::with_capacity(spec.class_count);
    for c in 0..spec.class_count {
        if c < paired && c % 2 == 1 {
            let shared = class_identities[c - 1].clone();
            class_identities.push(shared);
        } else {
            class_identities.push(unit_gaussian(&mut rng, spec.input_dim));
        }
    }

    let n_type1 = spec.type1_per_class();
    let mut samples = Vec::with_capacity(spec.class_count * spec.samples_per_class);
    for (c, identity) in class_identities.iter().enumerate() {
        for k in 0..spec.samples_per_class {
            let (input, noise) = if c < paired {
                (perturbed(&mut rng, identity, spec.dispersion), NoiseLabel::TypeII)
            } else if k >= spec.samples_per_class - n_type1 {
                let stranger = unit_gaussian(&mut rng, spec.input_dim);
                (perturbed(&mut rng, &stranger, spec.dispersion), NoiseLabel::TypeI)
            } else {
                (perturbed(&mut rng, identity, spec.dispersion), NoiseLabel::Clean)
            };
            samples.push(Sample { id: samples.len(), input, label: c, noise });
        }
    }
    Ok(Dataset { samples, class_identities })
}
