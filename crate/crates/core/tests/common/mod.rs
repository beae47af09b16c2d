#![allow(dead_code)]

use expface::{backward, batch_loss, BatchInput, LossSpec};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

/// Gaussian features and centers with labels `i % C`.
pub fn seeded_batch(seed: u64, n: usize, c: usize, d: usize) -> BatchInput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = gaussian_rows(&mut rng, n, d);
    let centers = gaussian_rows(&mut rng, c, d);
    let labels = (0..n).map(|i| i % c).collect();
    BatchInput::new(features, centers, labels).unwrap()
}

/// Worst coordinate-wise relative error of `backward` against central
/// differences of `batch_loss`, over every feature and center entry.
pub fn backward_vs_fd(input: &BatchInput, spec: &LossSpec, h: f64) -> f64 {
    let g = backward(input, spec);
    let f = input.features().to_vec();
    let w = input.centers().to_vec();
    let labels = input.labels().to_vec();
    let loss = |f: Vec<Vec<f64>>, w: Vec<Vec<f64>>| {
        batch_loss(&BatchInput::new(f, w, labels.clone()).unwrap(), spec)
    };
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1.0);
    let mut worst: f64 = 0.0;
    for i in 0..f.len() {
        for k in 0..f[i].len() {
            let (mut up, mut dn) = (f.clone(), f.clone());
            up[i][k] += h;
            dn[i][k] -= h;
            let num = (loss(up, w.clone()) - loss(dn, w.clone())) / (2.0 * h);
            worst = worst.max(rel(g.features[i][k], num));
        }
    }
    for j in 0..w.len() {
        for k in 0..w[j].len() {
            let (mut up, mut dn) = (w.clone(), w.clone());
            up[j][k] += h;
            dn[j][k] -= h;
            let num = (loss(f.clone(), up) - loss(f.clone(), dn)) / (2.0 * h);
            worst = worst.max(rel(g.centers[j][k], num));
        }
    }
    worst
}
