use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::{generate_dataset, unit_gaussian, Dataset};
use super::{NoiseLabel, ToySpec};
use crate::error::{Error, Result};
use crate::gradient::backward;
use crate::margin::{angle_between, batch_loss, Angle, BatchInput};

/// Angles of one sample after every epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularTrajectory {
    pub sample_id: usize,
    pub noise: NoiseLabel,
    /// `(theta_pos, theta_neg_mean)` per epoch: angle to the labelled center
    /// and mean angle to every other center.
    pub per_epoch: Vec<(Angle, Angle)>,
}

impl AngularTrajectory {
    pub fn last(&self) -> (Angle, Angle) {
        *self.per_epoch.last().expect("trajectory has at least one epoch")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    pub trajectories: Vec<AngularTrajectory>,
    /// Sample-weighted mean mini-batch loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Angles under the freshly initialized model, before any update.
    pub initial: Vec<(Angle, Angle)>,
}

/// `input -> tanh(hidden) -> embedding`, plus the class-center matrix.
struct Model {
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<Vec<f64>>,
    b2: Vec<f64>,
    centers: Vec<Vec<f64>>,
}

struct Grads {
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<Vec<f64>>,
    b2: Vec<f64>,
}

fn uniform_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    let bound = 1.0 / (cols as f64).sqrt();
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.random_range(-bound..bound)).collect())
        .collect()
}

fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

impl Model {
    fn init<R: Rng>(spec: &ToySpec, rng: &mut R) -> Self {
        let hidden = 2 * spec.embed_dim;
        Self {
            w1: uniform_matrix(rng, hidden, spec.input_dim),
            b1: vec![0.0; hidden],
            w2: uniform_matrix(rng, spec.embed_dim, hidden),
            b2: vec![0.0; spec.embed_dim],
            centers: (0..spec.class_count)
                .map(|_| unit_gaussian(rng, spec.embed_dim))
                .collect(),
        }
    }

    /// Returns `(hidden activations, embedding)`.
    fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let h: Vec<f64> = matvec(&self.w1, x)
            .into_iter()
            .zip(&self.b1)
            .map(|(a, b)| (a + b).tanh())
            .collect();
        let e = matvec(&self.w2, &h)
            .into_iter()
            .zip(&self.b2)
            .map(|(a, b)| a + b)
            .collect();
        (h, e)
    }

    fn zero_grads(&self) -> Grads {
        Grads {
            w1: vec![vec![0.0; self.w1[0].len()]; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![vec![0.0; self.w2[0].len()]; self.w2.len()],
            b2: vec![0.0; self.b2.len()],
        }
    }

    fn is_finite(&self) -> bool {
        self.w1
            .iter()
            .chain(&self.w2)
            .chain(&self.centers)
            .flatten()
            .chain(&self.b1)
            .chain(&self.b2)
            .all(|v| v.is_finite())
    }

    fn angles(&self, data: &Dataset) -> Result<Vec<(Angle, Angle)>> {
        data.samples
            .iter()
            .map(|s| {
                let (_, e) = self.forward(&s.input);
                let mut neg_sum = 0.0;
                let mut pos = Angle::ZERO;
                for (j, w) in self.centers.iter().enumerate() {
                    let a = angle_between(&e, w)?;
                    if j == s.label {
                        pos = a;
                    } else {
                        neg_sum += a.radians();
                    }
                }
                let neg = neg_sum / (self.centers.len() - 1) as f64;
                Ok((pos, Angle::saturating(neg.min(PI))))
            })
            .collect()
    }
}

fn axpy(dst: &mut [f64], alpha: f64, src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += alpha * s;
    }
}

/// Mini-batch gradient descent on the margin-softmax loss, recording every
/// sample's angles at the end of each epoch.
pub fn train(spec: &ToySpec) -> Result<TrainingRun> {
    let data = generate_dataset(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let mut model = Model::init(spec, &mut rng);

    let initial = model.angles(&data)?;
    let mut per_sample: Vec<Vec<(Angle, Angle)>> =
        vec![Vec::with_capacity(spec.epochs); data.samples.len()];
    let mut epoch_losses = Vec::with_capacity(spec.epochs);
    let mut order: Vec<usize> = (0..data.samples.len()).collect();
    let lr = spec.learning_rate;

    for epoch in 1..=spec.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(spec.batch_size) {
            let mut hidden = Vec::with_capacity(batch.len());
            let mut embeddings = Vec::with_capacity(batch.len());
            for &i in batch {
                let (h, e) = model.forward(&data.samples[i].input);
                hidden.push(h);
                embeddings.push(e);
            }
            let labels = batch.iter().map(|&i| data.samples[i].label).collect();
            let input = BatchInput::new(embeddings, model.centers.clone(), labels)
                .map_err(|_| Error::Diverged { epoch, loss: f64::NAN })?;
            let loss = batch_loss(&input, &spec.loss);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            loss_sum += loss * batch.len() as f64;

            let g = backward(&input, &spec.loss);
            let mut grads = model.zero_grads();
            for (k, &i) in batch.iter().enumerate() {
                let ge = &g.features[k];
                let h = &hidden[k];
                axpy(&mut grads.b2, 1.0, ge);
                for (row, &gek) in grads.w2.iter_mut().zip(ge) {
                    axpy(row, gek, h);
                }
                // back through w2 and tanh
                let ga: Vec<f64> = (0..h.len())
                    .map(|u| {
                        let gh: f64 = model.w2.iter().zip(ge).map(|(row, &gek)| row[u] * gek).sum();
                        gh * (1.0 - h[u] * h[u])
                    })
                    .collect();
                axpy(&mut grads.b1, 1.0, &ga);
                for (row, &gau) in grads.w1.iter_mut().zip(&ga) {
                    axpy(row, gau, &data.samples[i].input);
                }
            }

            for (w, g) in model.w1.iter_mut().zip(&grads.w1) {
                axpy(w, -lr, g);
            }
            axpy(&mut model.b1, -lr, &grads.b1);
            for (w, g) in model.w2.iter_mut().zip(&grads.w2) {
                axpy(w, -lr, g);
            }
            axpy(&mut model.b2, -lr, &grads.b2);
            for (w, g) in model.centers.iter_mut().zip(&g.centers) {
                axpy(w, -lr, g);
            }
        }
        let epoch_loss = loss_sum / data.samples.len() as f64;
        if !epoch_loss.is_finite() || !model.is_finite() {
            return Err(Error::Diverged { epoch, loss: epoch_loss });
        }
        epoch_losses.push(epoch_loss);

        let angles = model
            .angles(&data)
            .map_err(|_| Error::Diverged { epoch, loss: epoch_loss })?;
        for (traj, a) in per_sample.iter_mut().zip(angles) {
            traj.push(a);
        }
    }

    let trajectories = data
        .samples
        .iter()
        .zip(per_sample)
        .map(|(s, per_epoch)| AngularTrajectory { sample_id: s.id, noise: s.noise, per_epoch })
        .collect();
    Ok(TrainingRun { trajectories, epoch_losses, initial })
}
