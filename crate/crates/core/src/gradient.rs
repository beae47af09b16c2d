//! Analytic derivatives of the margin functions, the single-sample loss used
//! for gradient-curve analysis, the batch backward pass, and a central
//! finite-difference checker.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::margin::{similarity_at, Angle, BatchInput, Family, LossSpec, ANGLE_EPS};

/// Distance from a SphereFace breakpoint below which the derivative is undefined.
pub const BREAKPOINT_TOLERANCE: f64 = 1e-9;

/// Central-difference step for scalar curves.
pub const SCALAR_FD_STEP: f64 = 1e-6;

/// Central-difference step for the batch loss.
pub const BATCH_FD_STEP: f64 = 1e-5;

/// Grid points closer than this to a SphereFace breakpoint are skipped by the checker.
pub const CHECK_BREAKPOINT_EXCLUSION: f64 = 1e-4;

/// The `(b, C, s)` triple that collapses the batch loss onto a single angle:
/// `L(theta) = ln(1 + exp(-s T(theta) + s cos b + ln(C - 1)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionContext {
    b: Angle,
    class_count: usize,
    scale: f64,
}

impl TransitionContext {
    pub fn new(b: f64, class_count: usize, scale: f64) -> Result<Self> {
        if !(b > 0.0 && b < PI) {
            return Err(Error::Config(format!("b must lie in (0, pi), got {b}")));
        }
        if class_count < 2 {
            return Err(Error::Config(format!("class count must be >= 2, got {class_count}")));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Config(format!("scale must be finite and > 0, got {scale}")));
        }
        Ok(Self { b: Angle::saturating(b), class_count, scale })
    }

    pub fn b(&self) -> Angle {
        self.b
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `s cos b + ln(C - 1)`: the aggregated negative logit.
    pub fn negative_logit(&self) -> f64 {
        self.scale * self.b.radians().cos() + ((self.class_count - 1) as f64).ln()
    }

    /// Similarity level at which the positive probability is exactly 1/2.
    pub fn transition_level(&self) -> f64 {
        self.b.radians().cos() + ((self.class_count - 1) as f64).ln() / self.scale
    }
}

impl Default for TransitionContext {
    /// `b = pi/2`, `C = 10573` (CASIA-WebFace identities), `s = 64`.
    fn default() -> Self {
        Self { b: Angle::RIGHT, class_count: 10573, scale: 64.0 }
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `1 / (1 + e^-x)` branching on the sign of `x`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn breakpoint_branch(spec: &LossSpec, theta: f64) -> Option<i64> {
    if spec.family() != Family::SphereFace {
        return None;
    }
    let m = spec.margin();
    let k = (m * theta / PI).round();
    if k >= 1.0 && (theta - k * PI / m).abs() < BREAKPOINT_TOLERANCE {
        Some(k as i64)
    } else {
        None
    }
}

/// `T'(theta)` on a fixed SphereFace branch `k` (ignored for other families).
fn derivative_on_branch(spec: &LossSpec, theta: f64, k: i64) -> f64 {
    let m = spec.margin();
    match spec.family() {
        Family::Plain | Family::CosFace => -theta.sin(),
        Family::SphereFace => {
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            sign * m * (m * theta).sin()
        }
        Family::ArcFace => -(theta + m).sin(),
        Family::ExpFaceNaive => -(theta.powf(m)).sin() * m * theta.powf(m - 1.0),
        Family::ExpFace => {
            let u = theta / PI;
            -(PI * u.powf(m)).sin() * m * u.powf(m - 1.0)
        }
    }
}

/// Derivative used by the backward pass: at a SphereFace breakpoint the
/// left piece is taken.
pub(crate) fn derivative_left(spec: &LossSpec, theta: f64) -> f64 {
    let k = match breakpoint_branch(spec, theta) {
        Some(k) => k - 1,
        None => (spec.margin() * theta / PI).floor() as i64,
    };
    derivative_on_branch(spec, theta, k)
}

/// `dT/dtheta`. The angle is first pulled into `[ANGLE_EPS, pi - ANGLE_EPS]`.
pub fn d_similarity(spec: &LossSpec, theta: Angle) -> Result<f64> {
    let t = theta.interior();
    if breakpoint_branch(spec, t).is_some() {
        return Err(Error::NonDifferentiable { theta: t });
    }
    let k = (spec.margin() * t / PI).floor() as i64;
    Ok(derivative_on_branch(spec, t, k))
}

fn loss_exponent(spec: &LossSpec, theta: f64, ctx: &TransitionContext) -> f64 {
    -ctx.scale * similarity_at(spec, theta) + ctx.negative_logit()
}

/// Single-sample loss with the negatives collapsed onto their mean angle `b`.
pub fn scalar_loss(spec: &LossSpec, theta: Angle, ctx: &TransitionContext) -> f64 {
    softplus(loss_exponent(spec, theta.radians(), ctx))
}

/// `dL/dtheta = -s T'(theta) sigma(-s T(theta) + s cos b + ln(C - 1))`.
pub fn d_loss(spec: &LossSpec, theta: Angle, ctx: &TransitionContext) -> Result<f64> {
    let dt = d_similarity(spec, theta)?;
    let z = loss_exponent(spec, theta.interior(), ctx);
    Ok(-ctx.scale * dt * logistic(z))
}

/// Gradients of [`crate::margin::batch_loss`] with respect to every raw
/// feature row and every raw center.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchGradients {
    pub features: Vec<Vec<f64>>,
    pub centers: Vec<Vec<f64>>,
}

/// Exact gradient of the batch loss, chained through L2 normalization.
///
/// For a raw vector `v` with direction `v_hat` and a unit partner `w_hat`,
/// `d cos / d v = (w_hat - (v_hat . w_hat) v_hat) / |v|`.
pub fn backward(input: &BatchInput, spec: &LossSpec) -> BatchGradients {
    let n = input.features().len();
    let d = input.dim();
    let s = spec.scale();
    let (units, center_norms) = input.unit_centers();

    let mut g_feat = vec![vec![0.0; d]; n];
    // accumulated dL/d(unit center) before projection
    let mut g_unit_centers = vec![vec![0.0; d]; units.len()];

    for (i, g_feat_i) in g_feat.iter_mut().enumerate() {
        let (cos, x_unit, x_norm) = input.cosines(i, &units);
        let y = input.labels()[i];
        let logits = crate::margin::sample_logits(spec, &cos, y);
        let lse = crate::margin::log_sum_exp(&logits);

        // dL_i / d cos_ji
        let mut g_cos: Vec<f64> = logits.iter().map(|z| (z - lse).exp()).collect();
        g_cos[y] -= 1.0;
        for (j, g) in g_cos.iter_mut().enumerate() {
            if j == y {
                let raw = cos[y].acos();
                let dlogit = if (ANGLE_EPS..=PI - ANGLE_EPS).contains(&raw) {
                    // d theta / d cos = -1 / sin theta
                    s * derivative_left(spec, raw) * (-1.0 / raw.sin())
                } else {
                    0.0
                };
                *g *= dlogit;
            } else {
                *g *= s;
            }
            *g /= n as f64;
        }

        // feature gradient: sum_j g_j (w_hat_j - c_j x_hat) / |x|
        let gx = g_feat_i;
        for (j, w) in units.iter().enumerate() {
            let g = g_cos[j];
            if g == 0.0 {
                continue;
            }
            for k in 0..d {
                gx[k] += g * (w[k] - cos[j] * x_unit[k]) / x_norm;
            }
            for k in 0..d {
                g_unit_centers[j][k] += g * x_unit[k];
            }
        }
    }

    // project through center normalization: (I - w_hat w_hat^T) g / |w|
    let g_centers = g_unit_centers
        .iter()
        .zip(&units)
        .zip(&center_norms)
        .map(|((g, w), &wn)| {
            let gw: f64 = g.iter().zip(w).map(|(a, b)| a * b).sum();
            g.iter().zip(w).map(|(gk, wk)| (gk - gw * wk) / wn).collect()
        })
        .collect();

    BatchGradients { features: g_feat, centers: g_centers }
}

/// `(f(x + h) - f(x - h)) / 2h`.
pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Error between an analytic and a numeric derivative, relative to
/// `max(|analytic|, |numeric|, 1)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheckReport {
    pub grid: Vec<Angle>,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
}

/// Compares [`d_loss`] with a central difference of [`scalar_loss`] on a
/// uniform grid over `[ANGLE_EPS, pi - ANGLE_EPS]`. SphereFace grid points
/// within `CHECK_BREAKPOINT_EXCLUSION` of a breakpoint are dropped.
pub fn finite_diff_check(
    spec: &LossSpec,
    ctx: &TransitionContext,
    grid_size: usize,
) -> Result<GradientCheckReport> {
    if grid_size < 3 {
        return Err(Error::Precondition(format!("grid_size must be >= 3, got {grid_size}")));
    }
    let breakpoints = spec.breakpoints();
    let lo = ANGLE_EPS;
    let hi = PI - ANGLE_EPS;
    let step = (hi - lo) / (grid_size - 1) as f64;

    let mut report = GradientCheckReport {
        grid: Vec::with_capacity(grid_size),
        analytic: Vec::with_capacity(grid_size),
        numeric: Vec::with_capacity(grid_size),
        max_rel_err: 0.0,
        max_abs_err: 0.0,
    };
    for i in 0..grid_size {
        let theta = if i + 1 == grid_size { hi } else { lo + step * i as f64 };
        if breakpoints
            .iter()
            .any(|b| (theta - b).abs() < CHECK_BREAKPOINT_EXCLUSION)
        {
            continue;
        }
        // keep both stencil points inside [0, pi]
        let h = SCALAR_FD_STEP.min(theta).min(PI - theta);
        let numeric = central_difference(|t| softplus(loss_exponent(spec, t, ctx)), theta, h);
        let angle = Angle::saturating(theta);
        let analytic = d_loss(spec, angle, ctx)?;
        report.max_abs_err = report.max_abs_err.max((analytic - numeric).abs());
        report.max_rel_err = report.max_rel_err.max(relative_error(analytic, numeric));
        report.grid.push(angle);
        report.analytic.push(analytic);
        report.numeric.push(numeric);
    }
    Ok(report)
}
