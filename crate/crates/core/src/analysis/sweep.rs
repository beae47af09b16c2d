use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gradient::{d_loss, TransitionContext};
use crate::margin::{similarity, Angle, LossSpec, ANGLE_EPS};

/// One point of a similarity, gradient or margin curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub theta: Angle,
    pub value: f64,
}

/// A gradient curve plus the grid indices whose value was borrowed from the
/// nearest differentiable neighbour (SphereFace breakpoints).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCurve {
    pub samples: Vec<CurveSample>,
    pub substituted: Vec<usize>,
}

fn uniform_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * i as f64 })
}

/// `T(theta)` on a uniform grid over `[0, pi]`, endpoints included.
pub fn sweep_similarity(spec: &LossSpec, grid_size: usize) -> Result<Vec<CurveSample>> {
    if grid_size < 2 {
        return Err(Error::Precondition(format!("grid_size must be >= 2, got {grid_size}")));
    }
    Ok(uniform_grid(0.0, PI, grid_size)
        .map(|t| {
            let theta = Angle::saturating(t);
            CurveSample { theta, value: similarity(spec, theta) }
        })
        .collect())
}

/// `dL/dtheta` on a uniform grid over `[eps, pi - eps]`.
pub fn sweep_gradient(
    spec: &LossSpec,
    ctx: &TransitionContext,
    grid_size: usize,
) -> Result<GradientCurve> {
    if grid_size < 2 {
        return Err(Error::Precondition(format!("grid_size must be >= 2, got {grid_size}")));
    }
    let grid: Vec<Angle> = uniform_grid(ANGLE_EPS, PI - ANGLE_EPS, grid_size)
        .map(Angle::saturating)
        .collect();
    let mut values = Vec::with_capacity(grid_size);
    for &theta in &grid {
        match d_loss(spec, theta, ctx) {
            Ok(v) => values.push(Some(v)),
            Err(Error::NonDifferentiable { .. }) => values.push(None),
            Err(e) => return Err(e),
        }
    }

    let mut substituted = Vec::new();
    let mut samples = Vec::with_capacity(grid_size);
    for (i, &theta) in grid.iter().enumerate() {
        let value = match values[i] {
            Some(v) => v,
            None => {
                substituted.push(i);
                nearest_defined(&values, i).ok_or_else(|| {
                    Error::Precondition("no differentiable point on the gradient grid".into())
                })?
            }
        };
        samples.push(CurveSample { theta, value });
    }
    Ok(GradientCurve { samples, substituted })
}

fn nearest_defined(values: &[Option<f64>], i: usize) -> Option<f64> {
    (1..values.len()).find_map(|off| {
        let left = i.checked_sub(off).and_then(|j| values[j]);
        let right = values.get(i + off).copied().flatten();
        left.or(right)
    })
}
