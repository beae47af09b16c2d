use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use super::{AngularTrajectory, NoiseLabel};
use crate::error::{Error, Result};

/// Final-epoch occupancy of the four regions cut by `pi/2` on both axes.
/// "upper" means `theta_neg_mean > pi/2`, "right" means `theta_pos > pi/2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Quadrants {
    pub lower_left: usize,
    pub lower_right: usize,
    pub upper_left: usize,
    pub upper_right: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftRow {
    pub noise: NoiseLabel,
    pub count: usize,
    pub median_theta_pos: f64,
    pub median_theta_neg_mean: f64,
    pub mean_theta_pos: f64,
    pub mean_theta_neg_mean: f64,
    pub quadrants: Quadrants,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// One summary row per noise label present, in `Clean, TypeI, TypeII` order.
pub fn drift_statistics(trajectories: &[AngularTrajectory]) -> Result<Vec<DriftRow>> {
    if trajectories.is_empty() {
        return Err(Error::Precondition("no trajectories to summarize".into()));
    }
    let mut groups: BTreeMap<NoiseLabel, Vec<(f64, f64)>> = BTreeMap::new();
    for t in trajectories {
        let (p, n) = t.last();
        groups.entry(t.noise).or_default().push((p.radians(), n.radians()));
    }
    Ok(groups
        .into_iter()
        .map(|(noise, finals)| {
            let pos: Vec<f64> = finals.iter().map(|f| f.0).collect();
            let neg: Vec<f64> = finals.iter().map(|f| f.1).collect();
            let mut quadrants = Quadrants::default();
            for &(p, n) in &finals {
                match (p > FRAC_PI_2, n > FRAC_PI_2) {
                    (false, false) => quadrants.lower_left += 1,
                    (true, false) => quadrants.lower_right += 1,
                    (false, true) => quadrants.upper_left += 1,
                    (true, true) => quadrants.upper_right += 1,
                }
            }
            DriftRow {
                noise,
                count: finals.len(),
                mean_theta_pos: mean(&pos),
                mean_theta_neg_mean: mean(&neg),
                median_theta_pos: median(pos),
                median_theta_neg_mean: median(neg),
                quadrants,
            }
        })
        .collect())
}
